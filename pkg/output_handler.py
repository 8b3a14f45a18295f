"""
Модул за обработка на изходни данни
Превръща резултатите от командите в детерминиран CSV документ
с коментарен хедър за произхода на данните.
"""

import logging
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from analysis import SweepTable
from config import OutputConfig, get_config

logger = logging.getLogger(__name__)

NA_LITERAL = "NA"
ERROR_LITERAL = "ERR"
AUTO_LITERAL = "auto"


def _normalize_output_file_path(path_value: str, default_filename: str) -> str:
    """Ако е подадена директория, добавя име на файл по подразбиране."""
    normalized = os.path.normpath(path_value)
    _, extension = os.path.splitext(normalized)
    if extension:
        return normalized
    return os.path.join(normalized, default_filename)


@dataclass
class CsvDocument:
    """
    Резултат от една команда.

    key_columns са първите колони (осите), които остават и в неуспешните редове;
    останалите клетки на ред с грешка се извеждат като ERR. point_failures брои
    точки от вътрешни сканирания, които не правят целия ред неуспешен.
    """
    command: str
    frame: pd.DataFrame
    key_columns: int = 1
    errors: List[Optional[str]] = field(default_factory=list)
    provenance: List[Tuple[str, Any]] = field(default_factory=list)
    trailer: List[str] = field(default_factory=list)
    point_failures: int = 0

    @property
    def failed(self) -> int:
        """Неуспешни редове плюс неуспешни точки от вътрешните сканирания на оцелелите редове."""
        return sum(1 for e in self.errors if e is not None) + self.point_failures

    def __len__(self) -> int:
        return len(self.frame)


def document_from_table(
    command: str,
    table: SweepTable,
    columns: Sequence[str],
    provenance: List[Tuple[str, Any]],
) -> CsvDocument:
    """Документ с колони (ос, *columns) от таблица на сканиране."""
    frame = pd.DataFrame({table.axis: table.values, **{name: table.columns[name] for name in columns}})
    trailer = [
        f"error {table.axis}={format(table.values[i], '.12g')}: {table.errors[i]}"
        for i in table.failed
    ]
    return CsvDocument(
        command=command,
        frame=frame,
        key_columns=1,
        errors=list(table.errors),
        provenance=provenance,
        trailer=trailer,
    )


class CsvExporter:
    """Експортър на CSV документи: числа с фиксиран брой значещи цифри, NA и ERR маркери."""

    def __init__(self, config: Optional[OutputConfig] = None):
        self.config = config or get_config().output

    def format_value(self, value: Any) -> str:
        if value is None:
            return AUTO_LITERAL
        if isinstance(value, (bool, np.bool_)):
            return "true" if value else "false"
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            if math.isnan(value):
                return NA_LITERAL
            return format(float(value), f".{self.config.precision}g")
        return str(value)

    def _formatted_frame(self, doc: CsvDocument) -> pd.DataFrame:
        formatted = doc.frame.astype(object).apply(lambda col: col.map(self.format_value))
        for i, error in enumerate(doc.errors):
            if error is not None:
                formatted.iloc[i, doc.key_columns:] = ERROR_LITERAL
        return formatted

    def render(self, doc: CsvDocument) -> str:
        """Хедър '# key = value', ред с имената на колоните, данни и коментари накрая."""
        lines = [f"# command = {doc.command}"]
        lines += [f"# {key} = {self.format_value(value)}" for key, value in doc.provenance]
        body = self._formatted_frame(doc).to_csv(index=False, lineterminator="\n")
        trailer = "".join(f"# {line}\n" for line in doc.trailer)
        return "\n".join(lines) + "\n" + body + trailer

    def write(self, doc: CsvDocument, path: Optional[str] = None) -> Optional[str]:
        """Записва в path (или config.out); без път пише на стандартния изход."""
        text = self.render(doc)
        path = path or self.config.out
        if not path:
            sys.stdout.write(text)
            sys.stdout.flush()
            return None

        file_path = _normalize_output_file_path(path, f"{doc.command}.csv")
        directory = os.path.dirname(file_path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(file_path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        logger.info(f"CSV ({len(doc)} реда) записан в {file_path}")
        return file_path
