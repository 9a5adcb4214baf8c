"""Prediction ensembling (threshold overwrite, weighted averages) and
correlation metrics with per-corpus / per-class report breakdowns."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .data import Sample, bin_complexity

DEFAULT_THRESHOLD = 0.59
DEFAULT_SINGLE_WEIGHTS = {"engineered": 0.5, "neural": 0.5}
DEFAULT_MWE_WEIGHTS = {"head": 0.28, "tail": 0.17, "neural": 0.55}


@dataclass
class PredictionSet:
    """Keyed predictions with a provenance label."""

    preds: dict[str, float]
    label: str = ""

    def ids(self) -> set[str]:
        return set(self.preds)

    def __len__(self) -> int:
        return len(self.preds)


@dataclass
class EnsembleSpec:
    threshold: float = DEFAULT_THRESHOLD
    weights: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_SINGLE_WEIGHTS))
    clip: bool = False

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold {self.threshold} outside [0, 1]")
        if any(w < 0 for w in self.weights.values()):
            raise ValueError("ensemble weights must be non-negative")
        total = sum(self.weights.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"ensemble weights sum to {total}, expected 1")


def threshold_combine(
    full: PredictionSet, reduced: PredictionSet, threshold: float = DEFAULT_THRESHOLD
) -> PredictionSet:
    """Replace full predictions strictly above the threshold with reduced ones."""
    if full.ids() != reduced.ids():
        raise ValueError("full and reduced prediction sets cover different ids")
    out = {
        i: (reduced.preds[i] if p > threshold else p) for i, p in full.preds.items()
    }
    return PredictionSet(out, label=f"{full.label}+{reduced.label}@{threshold}")


def weighted_average(
    sets: Sequence[PredictionSet], weights: Sequence[float], label: str = "ensemble"
) -> PredictionSet:
    """Per-id convex combination of several prediction sets."""
    if len(sets) != len(weights):
        raise ValueError(f"{len(sets)} prediction sets but {len(weights)} weights")
    if not sets:
        raise ValueError("no prediction sets given")
    ids = sets[0].ids()
    for ps in sets[1:]:
        if ps.ids() != ids:
            raise ValueError("prediction sets cover different ids")
    out = {
        i: sum(w * ps.preds[i] for ps, w in zip(sets, weights)) for i in sets[0].preds
    }
    return PredictionSet(out, label=label)


def mwe_pipeline(
    head: PredictionSet,
    tail: PredictionSet,
    neural: PredictionSet,
    spec: Optional[EnsembleSpec] = None,
) -> PredictionSet:
    """Weighted combination of head-word, tail-word, and neural predictions."""
    if spec is None:
        spec = EnsembleSpec(weights=dict(DEFAULT_MWE_WEIGHTS))
    weights = [spec.weights["head"], spec.weights["tail"], spec.weights["neural"]]
    out = weighted_average([head, tail, neural], weights, label="mwe_ensemble")
    if spec.clip:
        out = PredictionSet(
            {i: min(1.0, max(0.0, p)) for i, p in out.preds.items()}, out.label
        )
    return out


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def pearson(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    """Pearson correlation; None when either vector has zero variance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("need two equal-length vectors of size >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = math.sqrt(float(dx @ dx))
    sy = math.sqrt(float(dy @ dy))
    if sx == 0.0 or sy == 0.0:
        return None
    return float(dx @ dy) / (sx * sy)


def average_ranks(x: Sequence[float]) -> np.ndarray:
    """1-based ranks with ties assigned the average of their positions."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size, dtype=np.float64)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    """Spearman correlation: Pearson of average ranks."""
    return pearson(average_ranks(x), average_ranks(y))


def correlation_metrics(
    pred: PredictionSet, truth: dict[str, float]
) -> dict[str, Optional[float]]:
    """pearson/spearman/mae/mse over the id intersection."""
    ids = sorted(pred.ids() & set(truth))
    if len(ids) < 2:
        raise ValueError("need at least 2 overlapping ids")
    p = np.array([pred.preds[i] for i in ids])
    t = np.array([truth[i] for i in ids])
    return {
        "pearson": pearson(p, t),
        "spearman": spearman(p, t),
        "mae": float(np.abs(p - t).mean()),
        "mse": float(((p - t) ** 2).mean()),
        "n": len(ids),
    }


def evaluation_report(
    pred: PredictionSet,
    samples: list[Sample],
) -> dict:
    """Overall metrics plus per-corpus and per-complexity-class breakdowns."""
    truth = {s.id: s.complexity for s in samples if s.complexity is not None}
    common = pred.ids() & set(truth)
    if not common:
        raise ValueError("no overlap between predictions and labeled samples")
    report = {"label": pred.label, "overall": correlation_metrics(pred, truth)}

    by_corpus: dict[str, dict[str, float]] = {}
    by_class: dict[int, dict[str, float]] = {}
    for s in samples:
        if s.id not in common:
            continue
        by_corpus.setdefault(s.corpus, {})[s.id] = s.complexity
        by_class.setdefault(bin_complexity(s.complexity), {})[s.id] = s.complexity

    def subset_metrics(subset: dict[str, float]):
        if len(subset) < 2:
            return {"pearson": None, "spearman": None, "mae": None, "mse": None,
                    "n": len(subset)}
        return correlation_metrics(pred, subset)

    report["per_corpus"] = {c: subset_metrics(t) for c, t in sorted(by_corpus.items())}
    report["per_class"] = {str(c): subset_metrics(t) for c, t in sorted(by_class.items())}
    return report


def format_report(report: dict) -> str:
    """Plain-text table rendering of an evaluation report."""

    def fmt(v) -> str:
        if v is None:
            return "   n/a"
        return f"{v:6.4f}"

    lines = [f"evaluation: {report.get('label', '')}"]
    header = f"{'slice':<14}{'n':>6}  {'pearson':>8}  {'spearman':>8}  {'mae':>8}  {'mse':>8}"
    lines.append(header)
    lines.append("-" * len(header))

    def row(name: str, m: dict) -> str:
        return (
            f"{name:<14}{m['n']:>6}  {fmt(m['pearson']):>8}  {fmt(m['spearman']):>8}"
            f"  {fmt(m['mae']):>8}  {fmt(m['mse']):>8}"
        )

    lines.append(row("overall", report["overall"]))
    for corpus, m in report.get("per_corpus", {}).items():
        lines.append(row(f"corpus={corpus}", m))
    for cls, m in report.get("per_class", {}).items():
        lines.append(row(f"class={cls}", m))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Predictions TSV interchange
# ---------------------------------------------------------------------------


def write_predictions(
    pred: PredictionSet,
    path: Union[str, Path],
    header: bool = True,
    stamp: Optional[dict] = None,
) -> None:
    """Write "id<TAB>prediction" rows (header optional per the format)."""
    with Path(path).open("w", encoding="utf-8") as fh:
        if stamp:
            fh.write("#stamp " + json.dumps(stamp, sort_keys=True) + "\n")
        if header:
            fh.write("id\tprediction\n")
        for sample_id in pred.preds:
            fh.write(f"{sample_id}\t{pred.preds[sample_id]!r}\n")


def load_predictions(path: Union[str, Path], label: str = "") -> PredictionSet:
    preds: dict[str, float] = {}
    path = Path(path)
    first_data = True
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ValueError(f"{path}:{lineno}: expected id<TAB>prediction")
            if first_data:
                first_data = False
                if fields == ["id", "prediction"]:
                    continue
            preds[fields[0]] = float(fields[1])
    return PredictionSet(preds, label=label or path.stem)


def save_report(report: dict, path: Union[str, Path]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
