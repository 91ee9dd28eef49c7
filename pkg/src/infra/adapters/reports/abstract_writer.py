import abc
from pathlib import Path
from typing import Any, Dict, List, Sequence


class AbstractReportWriter(abc.ABC):
    @abc.abstractmethod
    def write(self, name: str, payload: Any) -> Path:
        raise NotImplementedError

    @abc.abstractmethod
    def read(self, path: Path) -> Any:
        raise NotImplementedError


class AbstractTableWriter(abc.ABC):
    @abc.abstractmethod
    def write_rows(self, name: str, header: Sequence[str], rows: List[Sequence[Any]]) -> Path:
        raise NotImplementedError

    @abc.abstractmethod
    def read_rows(self, path: Path) -> List[Dict[str, str]]:
        raise NotImplementedError
