import logging
from pathlib import Path

from src.services.exceptions import InvalidSpec

logger = logging.getLogger(__name__)


class FileWriterBase:
    def __init__(self, output_dir: Path):
        self.output_dir = Path(output_dir)

    def _target(self, name: str) -> Path:
        """output_dir/name, creating the directory

        :raises InvalidSpec when the directory cannot be created
        """
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise InvalidSpec(detail=f'output_dir {self.output_dir} is not writable: {exc}') from exc
        return self.output_dir / name
