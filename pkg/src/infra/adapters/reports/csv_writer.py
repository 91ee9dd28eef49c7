import csv
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence

from src.infra.adapters.reports.abstract_writer import AbstractTableWriter
from src.infra.adapters.reports.file_writer import FileWriterBase
from src.schemas.schema_base import to_builtin

logger = logging.getLogger(__name__)


class CsvReportWriter(FileWriterBase, AbstractTableWriter):
    """RFC 4180 tables: comma separated, minimal quoting, CRLF line ends"""

    def write_rows(self, name: str, header: Sequence[str], rows: List[Sequence[Any]]) -> Path:
        target = self._target(name)
        with open(target, 'w', newline='', encoding='utf-8') as handle:
            writer = csv.writer(handle, quoting=csv.QUOTE_MINIMAL, lineterminator='\r\n')
            writer.writerow(header)
            writer.writerows(to_builtin(list(row)) for row in rows)
        logger.info('Wrote %s rows to %s', len(rows), target)
        return target

    def read_rows(self, path: Path) -> List[Dict[str, str]]:
        with open(path, newline='', encoding='utf-8') as handle:
            return list(csv.DictReader(handle))
