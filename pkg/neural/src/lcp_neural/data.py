"""Reader for the tab-separated dataset format the pipeline exchanges.

Columns: id, corpus, sentence, token, optional complexity in [0, 1]. The
token column is kept verbatim (a two-word expression stays one string and
is fed whole as the hypothesis).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union


@dataclass(frozen=True)
class Row:
    id: str
    corpus: str
    sentence: str
    target: str
    complexity: Optional[float] = None


def load_rows(path: Union[str, Path]) -> list[Row]:
    path = Path(path)
    rows = []
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        n_cols = len(header)
        if n_cols not in (4, 5):
            raise ValueError(f"{path}: expected 4 or 5 columns, got {n_cols}")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != n_cols:
                raise ValueError(f"{path}:{lineno}: expected {n_cols} fields")
            complexity = None
            if n_cols == 5:
                complexity = float(fields[4])
                if not 0.0 <= complexity <= 1.0:
                    raise ValueError(f"{path}:{lineno}: label {complexity} outside [0, 1]")
            rows.append(Row(fields[0], fields[1], fields[2], fields[3], complexity))
    return rows
