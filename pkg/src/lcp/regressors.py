"""Regression model zoo: gradient-boosted trees, linear/ridge, and k-NN,
plus the cross-validation driver and model persistence.

The boosted model fits squared error greedily: each round draws a row
subsample and column subset under the seed, grows a depth-limited tree
(split admitted only when both children have at least min_child_weight rows
and the SSE gain is strictly positive), and adds learning_rate times the
leaf means to the running prediction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .corpus import FormatError
from .features import FeatureMatrix

MODEL_FORMAT_VERSION = 1


@dataclass
class GbrtParams:
    n_estimators: int = 225
    learning_rate: float = 0.03
    max_depth: int = 5
    min_child_weight: int = 4
    subsample: float = 0.7
    colsample_bytree: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must be in (0, 1]")
        if not 0 < self.subsample <= 1 or not 0 < self.colsample_bytree <= 1:
            raise ValueError("subsample rates must be in (0, 1]")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.n_estimators < 0:
            raise ValueError("n_estimators must be >= 0")
        if self.min_child_weight < 1:
            raise ValueError("min_child_weight must be >= 1")


# A tree node is a plain dict: {"leaf": value} or
# {"feature": index, "threshold": t, "gain": g, "left": node, "right": node}.


@dataclass
class GbrtModel:
    feature_names: list[str]
    base_prediction: float
    trees: list[dict] = field(default_factory=list)
    params: Optional[GbrtParams] = None

    def predict(self, X: FeatureMatrix) -> np.ndarray:
        return predict_gbrt(self, X)


def _grow_tree(
    X: np.ndarray,
    residuals: np.ndarray,
    rows: np.ndarray,
    cols: np.ndarray,
    max_depth: int,
    min_child: int,
) -> dict:
    n = rows.size
    if n == 0:
        return {"leaf": 0.0}
    node_mean = float(residuals[rows].mean())
    if max_depth == 0 or n < 2 * min_child:
        return {"leaf": node_mean}

    Xn = X[np.ix_(rows, cols)]
    r = residuals[rows]
    order = np.argsort(Xn, axis=0, kind="stable")
    xs = np.take_along_axis(Xn, order, axis=0)
    rs = np.take_along_axis(np.broadcast_to(r[:, None], Xn.shape), order, axis=0)

    csum = np.cumsum(rs, axis=0)
    csq = np.cumsum(rs * rs, axis=0)
    total_sum = csum[-1, :]
    total_sq = csq[-1, :]
    sse_parent = total_sq - total_sum**2 / n

    # candidate split after position i (left gets i rows), i in [1, n-1]
    i = np.arange(1, n)[:, None].astype(np.float64)
    left_sum = csum[:-1, :]
    left_sq = csq[:-1, :]
    sse_left = left_sq - left_sum**2 / i
    sse_right = (total_sq - left_sq) - (total_sum - left_sum) ** 2 / (n - i)
    gains = sse_parent - sse_left - sse_right

    in_bounds = (i >= min_child) & (i <= n - min_child)
    distinct = xs[:-1, :] < xs[1:, :]  # split only between distinct values
    gains = np.where(in_bounds & distinct, gains, -np.inf)

    # tie-break: lowest feature index first, then lowest threshold
    flat = np.argmax(gains.T)
    best_gain = float(gains.T.flat[flat])
    if not (best_gain > 0.0) or not math.isfinite(best_gain):
        return {"leaf": node_mean}
    col_pos, split_pos = divmod(flat, n - 1)
    j = int(cols[col_pos])
    lo = float(xs[split_pos, col_pos])
    hi = float(xs[split_pos + 1, col_pos])
    threshold = (lo + hi) / 2.0

    go_left = X[rows, j] < threshold
    left_rows = rows[go_left]
    right_rows = rows[~go_left]
    return {
        "feature": j,
        "threshold": threshold,
        "gain": best_gain,
        "left": _grow_tree(X, residuals, left_rows, cols, max_depth - 1, min_child),
        "right": _grow_tree(X, residuals, right_rows, cols, max_depth - 1, min_child),
    }


def _tree_predict(node: dict, X: np.ndarray, out: np.ndarray, rows: np.ndarray) -> None:
    if "leaf" in node:
        out[rows] = node["leaf"]
        return
    go_left = X[rows, node["feature"]] < node["threshold"]
    _tree_predict(node["left"], X, out, rows[go_left])
    _tree_predict(node["right"], X, out, rows[~go_left])


def fit_gbrt(X: FeatureMatrix, y: Sequence[float], params: GbrtParams) -> GbrtModel:
    """Fit the boosted regression tree ensemble; deterministic under seed."""
    values = X.values
    y = np.asarray(y, dtype=np.float64)
    n, p = values.shape
    if n == 0:
        raise ValueError("empty training set")
    if y.shape[0] != n:
        raise ValueError(f"{y.shape[0]} labels for {n} rows")
    if np.isnan(values).any():
        raise ValueError("matrix has missing cells; impute before fitting")
    base = float(y.mean())
    model = GbrtModel(list(X.columns), base, [], params)
    if n == 1:
        return model

    rng = np.random.default_rng(params.seed)
    pred = np.full(n, base)
    n_rows = max(1, round(params.subsample * n))
    n_cols = max(1, round(params.colsample_bytree * p))
    for _ in range(params.n_estimators):
        rows = np.sort(rng.choice(n, size=n_rows, replace=False))
        cols = np.sort(rng.choice(p, size=n_cols, replace=False))
        residuals = y - pred
        tree = _grow_tree(values, residuals, rows, cols, params.max_depth, params.min_child_weight)
        contrib = np.zeros(n)
        _tree_predict(tree, values, contrib, np.arange(n))
        pred += params.learning_rate * contrib
        model.trees.append(tree)
    return model


def predict_gbrt(model: GbrtModel, X: FeatureMatrix) -> np.ndarray:
    """base + sum of learning_rate-scaled leaf values along each tree path."""
    values = X.project(model.feature_names).values
    n = values.shape[0]
    pred = np.full(n, model.base_prediction)
    lr = model.params.learning_rate if model.params else 1.0
    rows = np.arange(n)
    for tree in model.trees:
        contrib = np.zeros(n)
        _tree_predict(tree, values, contrib, rows)
        pred += lr * contrib
    return pred


def feature_importance(model: GbrtModel) -> dict[str, float]:
    """Share of total split gain per feature; empty for a split-free model."""
    gains: dict[str, float] = {}

    def walk(node: dict) -> None:
        if "leaf" in node:
            return
        name = model.feature_names[node["feature"]]
        gains[name] = gains.get(name, 0.0) + node["gain"]
        walk(node["left"])
        walk(node["right"])

    for tree in model.trees:
        walk(tree)
    total = sum(gains.values())
    if total <= 0:
        return {}
    return {name: g / total for name, g in sorted(gains.items(), key=lambda kv: (-kv[1], kv[0]))}


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------


@dataclass
class LinearModel:
    feature_names: list[str]
    intercept: float
    weights: np.ndarray
    ridge_lambda: float = 0.0

    def predict(self, X: FeatureMatrix) -> np.ndarray:
        values = X.project(self.feature_names).values
        return values @ self.weights + self.intercept


@dataclass
class KnnModel:
    feature_names: list[str]
    k: int
    train_values: np.ndarray = field(repr=False, default=None)
    train_labels: np.ndarray = field(repr=False, default=None)

    def predict(self, X: FeatureMatrix) -> np.ndarray:
        values = X.project(self.feature_names).values
        out = np.empty(values.shape[0])
        for i, row in enumerate(values):
            dists = np.sqrt(((self.train_values - row) ** 2).sum(axis=1))
            nearest = np.argsort(dists, kind="stable")[: self.k]
            out[i] = float(self.train_labels[nearest].mean())
        return out


def fit_baseline(
    kind: str,
    X: FeatureMatrix,
    y: Sequence[float],
    ridge_lambda: float = 0.0,
    k: int = 5,
):
    """Fit a linear, ridge, or k-NN baseline.

    linear/ridge solve the normal equations with the penalty applied to
    non-intercept weights only; a singular unpenalized system raises with
    advice to use ridge.
    """
    y = np.asarray(y, dtype=np.float64)
    values = X.values
    if np.isnan(values).any():
        raise ValueError("matrix has missing cells; impute before fitting")
    if kind == "knn":
        if not 1 <= k <= values.shape[0]:
            raise ValueError(f"k={k} outside [1, {values.shape[0]}]")
        return KnnModel(list(X.columns), k, values.copy(), y.copy())
    if kind not in ("linear", "ridge"):
        raise ValueError(f"unknown baseline kind {kind!r}")
    lam = ridge_lambda if kind == "ridge" else 0.0
    n, p = values.shape
    A = np.column_stack([np.ones(n), values])
    gram = A.T @ A
    penalty = np.eye(p + 1) * lam
    penalty[0, 0] = 0.0
    system = gram + penalty
    if lam == 0.0 and np.linalg.matrix_rank(system) < p + 1:
        raise np.linalg.LinAlgError(
            "singular normal equations; use kind='ridge' with a positive lambda"
        )
    coef = np.linalg.solve(system, A.T @ y)
    return LinearModel(list(X.columns), float(coef[0]), coef[1:], lam)


# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------


@dataclass
class CvReport:
    fold_pearson: list[Optional[float]]
    mean_pearson: Optional[float]
    std_pearson: Optional[float]

    def to_json(self) -> dict:
        return asdict(self)


def cross_validate(
    matrix: FeatureMatrix,
    labels_by_id: dict[str, float],
    folds: Sequence[tuple[list, list]],
    model_factory: Callable[[FeatureMatrix, np.ndarray], object],
    select_k: Optional[int] = 300,
    quasi_threshold: Optional[float] = 0.99,
) -> CvReport:
    """Per-fold Pearson with all pipeline states fitted on the train part.

    ``matrix`` holds raw (unstandardized) features for every sample in the
    folds; per fold the imputer/standardizer and selectors are re-fit on the
    train part only. Folds with constant predictions or labels report a
    missing correlation.
    """
    from .ensemble import pearson
    from .features import apply_selection, apply_standardizer, fit_standardizer
    from .features import mi_select, quasi_constant_filter

    scores: list[Optional[float]] = []
    for train_part, val_part in folds:
        train_ids = [s.id for s in train_part]
        val_ids = [s.id for s in val_part]
        m_train = matrix.rows(train_ids)
        m_val = matrix.rows(val_ids)
        std_state = fit_standardizer(m_train)
        z_train = apply_standardizer(std_state, m_train)
        z_val = apply_standardizer(std_state, m_val)
        keep = list(z_train.columns)
        if quasi_threshold is not None:
            dropped = set(quasi_constant_filter(z_train, quasi_threshold))
            keep = [c for c in keep if c not in dropped]
            z_train = z_train.project(keep)
            z_val = z_val.project(keep)
        y_train = np.array([labels_by_id[i] for i in train_ids])
        y_val = np.array([labels_by_id[i] for i in val_ids])
        if select_k is not None:
            sel = mi_select(z_train, y_train, k=select_k)
            z_train = apply_selection(sel, z_train)
            z_val = apply_selection(sel, z_val)
        model = model_factory(z_train, y_train)
        pred = model.predict(z_val)
        scores.append(pearson(pred, y_val))

    defined = [s for s in scores if s is not None]
    if defined:
        mean = sum(defined) / len(defined)
        std = math.sqrt(sum((s - mean) ** 2 for s in defined) / len(defined))
    else:
        mean = std = None
    return CvReport(scores, mean, std)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def persist_model(model, path: Union[str, Path], stamp: Optional[dict] = None) -> None:
    path = Path(path)
    if isinstance(model, GbrtModel):
        payload = {
            "format": "lcp-model",
            "version": MODEL_FORMAT_VERSION,
            "kind": "gbrt",
            "feature_names": model.feature_names,
            "base_prediction": model.base_prediction,
            "params": asdict(model.params) if model.params else None,
            "trees": model.trees,
        }
    elif isinstance(model, LinearModel):
        payload = {
            "format": "lcp-model",
            "version": MODEL_FORMAT_VERSION,
            "kind": "linear",
            "feature_names": model.feature_names,
            "intercept": model.intercept,
            "weights": [float(w) for w in model.weights],
            "ridge_lambda": model.ridge_lambda,
        }
    elif isinstance(model, KnnModel):
        payload = {
            "format": "lcp-model",
            "version": MODEL_FORMAT_VERSION,
            "kind": "knn",
            "feature_names": model.feature_names,
            "k": model.k,
            "train_values": [[float(v) for v in row] for row in model.train_values],
            "train_labels": [float(v) for v in model.train_labels],
        }
    else:
        raise TypeError(f"cannot persist model of type {type(model).__name__}")
    if stamp:
        payload["stamp"] = stamp
    with path.open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_model(path: Union[str, Path]):
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: unreadable model file: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != "lcp-model":
        raise FormatError(f"{path}: not a model file")
    if payload.get("version") != MODEL_FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported model version {payload.get('version')!r}")
    kind = payload.get("kind")
    if kind == "gbrt":
        params = GbrtParams(**payload["params"]) if payload.get("params") else None
        return GbrtModel(
            list(payload["feature_names"]),
            float(payload["base_prediction"]),
            payload["trees"],
            params,
        )
    if kind == "linear":
        return LinearModel(
            list(payload["feature_names"]),
            float(payload["intercept"]),
            np.array(payload["weights"], dtype=np.float64),
            float(payload.get("ridge_lambda", 0.0)),
        )
    if kind == "knn":
        return KnnModel(
            list(payload["feature_names"]),
            int(payload["k"]),
            np.array(payload["train_values"], dtype=np.float64),
            np.array(payload["train_labels"], dtype=np.float64),
        )
    raise FormatError(f"{path}: unknown model kind {kind!r}")
