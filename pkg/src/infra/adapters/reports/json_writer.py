import json
import logging
from pathlib import Path
from typing import Any

from src.infra.adapters.reports.abstract_writer import AbstractReportWriter
from src.infra.adapters.reports.file_writer import FileWriterBase
from src.schemas.schema_base import to_builtin
from src.services.exceptions import InvalidSpec
from src.settings import get_settings

logger = logging.getLogger(__name__)


class JsonReportWriter(FileWriterBase, AbstractReportWriter):
    """UTF-8 JSON with sorted keys"""

    def dumps(self, payload: Any) -> str:
        return json.dumps(
            to_builtin(payload),
            sort_keys=True,
            ensure_ascii=False,
            indent=get_settings().output_settings.json_indent,
            allow_nan=True,
        )

    def write(self, name: str, payload: Any) -> Path:
        target = self._target(name)
        target.write_text(self.dumps(payload) + '\n', encoding='utf-8')
        logger.info('Wrote report %s', target)
        return target

    def read(self, path: Path) -> Any:
        try:
            return json.loads(Path(path).read_text(encoding='utf-8'))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidSpec(detail=f'cannot read report {path}: {exc}') from exc
