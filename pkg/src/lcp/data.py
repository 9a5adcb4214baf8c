"""CompLex-format dataset handling: loading, class binning, reduced sets, folds."""

from __future__ import annotations

import logging
import random
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

logger = logging.getLogger(__name__)

CORPORA = ("bible", "biomed", "europarl")


class DatasetError(ValueError):
    """Raised for malformed or invalid dataset rows."""


@dataclass(frozen=True)
class Sample:
    """One target expression in context.

    ``target`` is a single token for the single-word subtask or a
    (head, tail) pair for the MWE subtask. ``complexity`` is the continuous
    label in [0, 1], absent for unlabeled test rows.
    """

    id: str
    corpus: str
    sentence: str
    target: Union[str, tuple[str, str]]
    complexity: Optional[float] = None

    @property
    def is_mwe(self) -> bool:
        return isinstance(self.target, tuple)

    @property
    def head(self) -> str:
        return self.target[0] if self.is_mwe else self.target

    @property
    def tail(self) -> str:
        return self.target[1] if self.is_mwe else self.target


def bin_complexity(label: float) -> int:
    """Map a continuous label in [0, 1] to its 5-way class.

    Bins are half-open ([0, 0.2) -> 1 ... [0.6, 0.8) -> 4) except the top
    bin, which is closed: [0.8, 1] -> 5.
    """
    if not 0.0 <= label <= 1.0:
        raise DatasetError(f"complexity label {label!r} outside [0, 1]")
    if label < 0.2:
        return 1
    if label < 0.4:
        return 2
    if label < 0.6:
        return 3
    if label < 0.8:
        return 4
    return 5


def load_complex_tsv(path: Union[str, Path], subtask: str = "single") -> list[Sample]:
    """Load a CompLex TSV file.

    Expects a header row and columns (id, corpus, sentence, token,
    complexity); the complexity column may be absent (test files). MWE
    targets are split on a single space into (head, tail).
    """
    if subtask not in ("single", "mwe"):
        raise ValueError(f"unknown subtask {subtask!r}")
    path = Path(path)
    samples = []
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header:
            raise DatasetError(f"{path}: empty file")
        n_cols = len(header.rstrip("\n").split("\t"))
        if n_cols not in (4, 5):
            raise DatasetError(f"{path}: expected 4 or 5 header columns, got {n_cols}")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != n_cols:
                raise DatasetError(
                    f"{path}:{lineno}: expected {n_cols} columns, got {len(fields)}"
                )
            sample_id, corpus, sentence, token = fields[:4]
            if corpus not in CORPORA:
                raise DatasetError(f"{path}:{lineno}: unknown corpus {corpus!r}")
            complexity = None
            if n_cols == 5:
                try:
                    complexity = float(fields[4])
                except ValueError as exc:
                    raise DatasetError(
                        f"{path}:{lineno}: bad complexity {fields[4]!r}"
                    ) from exc
                if not 0.0 <= complexity <= 1.0:
                    raise DatasetError(
                        f"{path}:{lineno}: complexity {complexity} outside [0, 1]"
                    )
            if subtask == "mwe":
                parts = token.split(" ")
                if len(parts) != 2 or not all(parts):
                    raise DatasetError(
                        f"{path}:{lineno}: MWE target must be exactly two "
                        f"space-separated tokens, got {token!r}"
                    )
                target: Union[str, tuple[str, str]] = (parts[0], parts[1])
            else:
                target = token
            samples.append(Sample(sample_id, corpus, sentence, target, complexity))
    return samples


def make_reduced(
    train: list[Sample],
    removal_fractions: dict[int, float],
    seed: int,
) -> list[Sample]:
    """Drop a seeded random fraction of class 1-3 samples.

    For each class c with fraction f, exactly round(f * n_c) samples are
    removed (round-half-to-even); classes 4 and 5 are untouched. Input
    order of the survivors is preserved.
    """
    for cls, frac in removal_fractions.items():
        if cls not in (1, 2, 3):
            raise DatasetError(f"removal fraction given for class {cls}; only 1-3 allowed")
        if not 0.0 <= frac <= 1.0:
            raise DatasetError(f"removal fraction {frac} for class {cls} outside [0, 1]")
    by_class = defaultdict(list)
    for i, s in enumerate(train):
        if s.complexity is None:
            raise DatasetError(f"sample {s.id} is unlabeled")
        by_class[bin_complexity(s.complexity)].append(i)
    rng = random.Random(seed)
    removed: set[int] = set()
    for cls in (1, 2, 3):
        frac = removal_fractions.get(cls, 0.0)
        indices = by_class.get(cls, [])
        n_remove = round(frac * len(indices))
        removed.update(rng.sample(indices, n_remove))
    return [s for i, s in enumerate(train) if i not in removed]


def stratified_folds(
    train: list[Sample],
    k: int,
    seed: int = 0,
) -> list[tuple[list[Sample], list[Sample]]]:
    """Split into k cross-validation folds stratified by (corpus, class).

    Strata smaller than k fall back to corpus-only strata (logged). Returns
    k (train_part, validation_part) pairs; validation parts are disjoint
    and cover the input.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    fine: dict[tuple[str, int], list[int]] = defaultdict(list)
    for i, s in enumerate(train):
        if s.complexity is None:
            raise DatasetError(f"sample {s.id} is unlabeled")
        fine[(s.corpus, bin_complexity(s.complexity))].append(i)

    strata: dict[object, list[int]] = {}
    fallback: dict[str, list[int]] = defaultdict(list)
    for (corpus, cls), idxs in sorted(fine.items()):
        if len(idxs) < k:
            logger.warning(
                "stratum (%s, class %d) has %d < %d samples; falling back to corpus stratum",
                corpus, cls, len(idxs), k,
            )
            fallback[corpus].extend(idxs)
        else:
            strata[(corpus, cls)] = idxs
    for corpus, idxs in sorted(fallback.items()):
        strata[(corpus, "fallback")] = sorted(idxs)

    rng = random.Random(seed)
    fold_of = [0] * len(train)
    cursor = 0  # global round-robin keeps overall fold sizes within 1 too
    for _, idxs in sorted(strata.items(), key=lambda kv: str(kv[0])):
        idxs = list(idxs)
        rng.shuffle(idxs)
        for idx in idxs:
            fold_of[idx] = cursor % k
            cursor += 1
    folds = []
    for f in range(k):
        val = [s for i, s in enumerate(train) if fold_of[i] == f]
        tr = [s for i, s in enumerate(train) if fold_of[i] != f]
        folds.append((tr, val))
    return folds
