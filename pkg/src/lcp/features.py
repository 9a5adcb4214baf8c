"""Feature matrix assembly, imputation + standardization, quasi-constant
filtering, mutual-information selection, and matrix persistence.

The interchange format is a TSV: a header row of column names (first cell
"id"), then one "id<TAB>value..." row per sample with empty cells for
missing values. External feature columns (e.g. perplexity exports) join
through the same format.
"""

from __future__ import annotations

import json
import math
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .corpus import FormatError
from .data import Sample, bin_complexity

logger = logging.getLogger(__name__)

MATRIX_FORMAT_VERSION = 1


@dataclass
class ColumnMeta:
    source: str = ""
    is_log_variant: bool = False


@dataclass
class FeatureMatrix:
    """Row ids, ordered column names, and a dense float matrix.

    Missing cells are NaN; the mask is derived from that.
    """

    ids: list[str]
    columns: list[str]
    values: np.ndarray
    col_meta: dict[str, ColumnMeta] = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.ids), len(self.columns)):
            raise ValueError(
                f"matrix shape {self.values.shape} != ({len(self.ids)}, {len(self.columns)})"
            )
        if len(set(self.columns)) != len(self.columns):
            dupes = sorted({c for c in self.columns if self.columns.count(c) > 1})
            raise ValueError(f"duplicate column names: {dupes}")

    @property
    def mask(self) -> np.ndarray:
        """True where the cell is missing."""
        return np.isnan(self.values)

    def column(self, name: str) -> np.ndarray:
        try:
            idx = self.columns.index(name)
        except ValueError as exc:
            raise KeyError(f"no column {name!r}") from exc
        return self.values[:, idx]

    def project(self, columns: Sequence[str]) -> "FeatureMatrix":
        """Reorder/subset columns; every requested column must exist."""
        index = {c: i for i, c in enumerate(self.columns)}
        missing = [c for c in columns if c not in index]
        if missing:
            raise KeyError(f"columns absent from matrix: {missing[:5]}")
        sel = [index[c] for c in columns]
        return FeatureMatrix(
            list(self.ids),
            list(columns),
            self.values[:, sel].copy(),
            {c: self.col_meta.get(c, ColumnMeta()) for c in columns},
        )

    def rows(self, ids: Sequence[str]) -> "FeatureMatrix":
        index = {i: r for r, i in enumerate(self.ids)}
        missing = [i for i in ids if i not in index]
        if missing:
            raise KeyError(f"ids absent from matrix: {missing[:5]}")
        sel = [index[i] for i in ids]
        return FeatureMatrix(
            list(ids), list(self.columns), self.values[sel, :].copy(), dict(self.col_meta)
        )


def _is_boolean(col: np.ndarray) -> bool:
    vals = col[~np.isnan(col)]
    return vals.size > 0 and bool(np.all((vals == 0.0) | (vals == 1.0)))


def _is_nonnegative(col: np.ndarray) -> bool:
    vals = col[~np.isnan(col)]
    return vals.size > 0 and bool(np.all(vals >= 0.0))


def assemble_matrix(
    samples: list[Sample],
    extractor_outputs: dict[str, dict[str, dict[str, float]]],
    external_columns: Optional[dict[str, dict[str, dict[str, float]]]] = None,
    add_log_variants: bool = True,
    add_corpus_flags: bool = True,
) -> FeatureMatrix:
    """Join per-extractor records by sample id into one matrix.

    ``extractor_outputs`` maps source name -> sample id -> feature record.
    For every non-negative, non-boolean column x a companion log1p_x
    column (ln(1+x)) is appended, then the three corpus one-hots. Samples
    missing from a source get missing cells.
    """
    sources = dict(extractor_outputs)
    if external_columns:
        sources.update(external_columns)

    columns: list[str] = []
    col_meta: dict[str, ColumnMeta] = {}
    for source, records in sources.items():
        source_cols: list[str] = []
        seen: set[str] = set()
        for record in records.values():
            for name in record:
                if name not in seen:
                    seen.add(name)
                    source_cols.append(name)
        for name in source_cols:
            if name in col_meta:
                raise ValueError(
                    f"column {name!r} from {source!r} already provided by "
                    f"{col_meta[name].source!r}"
                )
            columns.append(name)
            col_meta[name] = ColumnMeta(source=source)

    ids = [s.id for s in samples]
    values = np.full((len(ids), len(columns)), np.nan)
    col_idx = {c: i for i, c in enumerate(columns)}
    for records in sources.values():
        for row, sample in enumerate(samples):
            record = records.get(sample.id)
            if not record:
                continue
            for name, value in record.items():
                values[row, col_idx[name]] = value

    matrix = FeatureMatrix(ids, columns, values, col_meta)

    if add_log_variants:
        log_cols = []
        log_vals = []
        for i, name in enumerate(matrix.columns):
            col = matrix.values[:, i]
            if _is_nonnegative(col) and not _is_boolean(col):
                log_cols.append(f"log1p_{name}")
                log_vals.append(np.log1p(col))
        if log_cols:
            meta = dict(matrix.col_meta)
            for name in log_cols:
                base = name[len("log1p_"):]
                meta[name] = ColumnMeta(source=matrix.col_meta[base].source, is_log_variant=True)
            matrix = FeatureMatrix(
                matrix.ids,
                matrix.columns + log_cols,
                np.column_stack([matrix.values] + log_vals),
                meta,
            )

    if add_corpus_flags:
        flags = {f"corpus_{c}": np.array([float(s.corpus == c) for s in samples])
                 for c in ("bible", "biomed", "europarl")}
        meta = dict(matrix.col_meta)
        for name in flags:
            meta[name] = ColumnMeta(source="corpus_flags")
        matrix = FeatureMatrix(
            matrix.ids,
            matrix.columns + list(flags),
            np.column_stack([matrix.values] + list(flags.values())),
            meta,
        )
    return matrix


# ---------------------------------------------------------------------------
# Standardization
# ---------------------------------------------------------------------------


@dataclass
class StandardizerState:
    """Per-column train statistics; imputation uses the train mean."""

    columns: list[str]
    mean: np.ndarray
    std: np.ndarray

    def to_json(self) -> dict:
        return {
            "columns": self.columns,
            "mean": [float(m) for m in self.mean],
            "std": [float(s) for s in self.std],
        }

    @classmethod
    def from_json(cls, payload: dict) -> "StandardizerState":
        return cls(
            list(payload["columns"]),
            np.array(payload["mean"], dtype=np.float64),
            np.array(payload["std"], dtype=np.float64),
        )


def fit_standardizer(matrix: FeatureMatrix) -> StandardizerState:
    """Column means and population stds of the mean-imputed fitting matrix.

    An all-missing column standardizes to zeros.
    """
    n, p = matrix.values.shape
    mean = np.zeros(p)
    std = np.zeros(p)
    for j in range(p):
        col = matrix.values[:, j]
        present = col[~np.isnan(col)]
        if present.size == 0:
            continue
        m = float(present.mean())
        mean[j] = m
        # missing cells imputed with the mean contribute zero deviation
        std[j] = math.sqrt(float(np.sum((present - m) ** 2)) / n)
    return StandardizerState(list(matrix.columns), mean, std)


def ensure_log_variants(matrix: FeatureMatrix, needed: Sequence[str]) -> FeatureMatrix:
    """Append any needed log1p_<base> columns computable from their base.

    The log rule is value-dependent (non-negative, non-boolean on the
    assembling data), so a matrix assembled from different rows can lack a
    variant its training counterpart had; the variant is definitionally
    ln(1+base), so it is reconstructed here rather than erroring.
    """
    have = set(matrix.columns)
    add_names, add_vals = [], []
    for name in needed:
        if name in have or not name.startswith("log1p_"):
            continue
        base = name[len("log1p_"):]
        if base in have:
            with np.errstate(invalid="ignore"):
                add_vals.append(np.log1p(matrix.column(base)))
            add_names.append(name)
    if not add_names:
        return matrix
    meta = dict(matrix.col_meta)
    for name in add_names:
        base = name[len("log1p_"):]
        meta[name] = ColumnMeta(matrix.col_meta.get(base, ColumnMeta()).source, True)
    return FeatureMatrix(
        matrix.ids,
        matrix.columns + add_names,
        np.column_stack([matrix.values] + add_vals),
        meta,
    )


def apply_standardizer(state: StandardizerState, matrix: FeatureMatrix) -> FeatureMatrix:
    """Impute with train means and z-score with train statistics.

    Output has exactly the state's columns, in state order; zero-std
    columns map to 0. Log-variant columns the state knows but the matrix
    lacks are reconstructed from their base columns first.
    """
    matrix = ensure_log_variants(matrix, state.columns)
    projected = matrix.project(state.columns)
    values = projected.values
    out = np.zeros_like(values)
    for j in range(values.shape[1]):
        col = values[:, j].copy()
        col[np.isnan(col)] = state.mean[j]
        if state.std[j] > 0:
            out[:, j] = (col - state.mean[j]) / state.std[j]
        else:
            out[:, j] = 0.0
    return FeatureMatrix(projected.ids, projected.columns, out, projected.col_meta)


# ---------------------------------------------------------------------------
# Selection
# ---------------------------------------------------------------------------


@dataclass
class SelectionState:
    kept: list[str]
    mi_scores: dict[str, float] = field(default_factory=dict)
    quasi_constant_dropped: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "kept": self.kept,
            "mi_scores": self.mi_scores,
            "quasi_constant_dropped": self.quasi_constant_dropped,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "SelectionState":
        return cls(
            list(payload["kept"]),
            dict(payload.get("mi_scores", {})),
            list(payload.get("quasi_constant_dropped", [])),
        )


def quasi_constant_filter(matrix: FeatureMatrix, threshold: float = 0.99) -> list[str]:
    """Columns whose most frequent value covers >= threshold of rows.

    Missing counts as a value of its own. Returns the drop list.
    """
    if not 0.5 < threshold <= 1.0:
        raise ValueError(f"threshold {threshold} outside (0.5, 1]")
    n = len(matrix.ids)
    dropped = []
    for j, name in enumerate(matrix.columns):
        col = matrix.values[:, j]
        nan_count = int(np.isnan(col).sum())
        present = col[~np.isnan(col)]
        top = 0
        if present.size:
            _, counts = np.unique(present, return_counts=True)
            top = int(counts.max())
        if n > 0 and max(top, nan_count) / n >= threshold:
            dropped.append(name)
    return dropped


def _equal_frequency_bins(col: np.ndarray, n_bins: int = 10) -> np.ndarray:
    """Discretize into up to n_bins equal-frequency bins; NaN is its own bin."""
    codes = np.zeros(col.shape, dtype=np.int64)
    present = ~np.isnan(col)
    vals = col[present]
    if vals.size:
        qs = np.quantile(vals, [i / n_bins for i in range(1, n_bins)])
        edges = np.unique(qs)
        codes[present] = np.searchsorted(edges, vals, side="right")
    codes[~present] = n_bins  # distinct category for missing
    return codes


def _plugin_mi(x_codes: np.ndarray, y_codes: np.ndarray) -> float:
    """Plug-in mutual information (nats) over the joint histogram."""
    n = x_codes.size
    if n == 0:
        return 0.0
    joint: dict[tuple[int, int], int] = {}
    for xv, yv in zip(x_codes.tolist(), y_codes.tolist()):
        joint[(xv, yv)] = joint.get((xv, yv), 0) + 1
    px: dict[int, float] = {}
    py: dict[int, float] = {}
    for (xv, yv), c in joint.items():
        px[xv] = px.get(xv, 0.0) + c / n
        py[yv] = py.get(yv, 0.0) + c / n
    mi = 0.0
    for (xv, yv), c in joint.items():
        pxy = c / n
        mi += pxy * math.log(pxy / (px[xv] * py[yv]))
    return max(mi, 0.0)


def mi_select(
    matrix: FeatureMatrix,
    labels: Sequence[float],
    k: int = 300,
    n_bins: int = 10,
) -> SelectionState:
    """Top-k columns by mutual information with the 5-way complexity class.

    Features are discretized into equal-frequency bins; MI is the plug-in
    estimate over the joint histogram. Scores tie-break by column name so
    the outcome is invariant to input column order.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(labels) != len(matrix.ids):
        raise ValueError("labels length != row count")
    classes = np.array([bin_complexity(y) for y in labels], dtype=np.int64)
    scores: dict[str, float] = {}
    for j, name in enumerate(matrix.columns):
        col = matrix.values[:, j]
        if np.all(np.isnan(col)):
            scores[name] = 0.0
            continue
        codes = _equal_frequency_bins(col, n_bins)
        scores[name] = _plugin_mi(codes, classes)
    ranked = sorted(matrix.columns, key=lambda c: (-scores[c], c))
    return SelectionState(kept=ranked[: min(k, len(ranked))], mi_scores=scores)


def apply_selection(state: SelectionState, matrix: FeatureMatrix) -> FeatureMatrix:
    return matrix.project(state.kept)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def persist_matrix(
    matrix: FeatureMatrix, path: Union[str, Path], stamp: Optional[dict] = None
) -> None:
    """Write the interchange TSV with a version stamp and column metadata."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"#lcp-matrix v{MATRIX_FORMAT_VERSION}\n")
        if stamp:
            fh.write("#stamp " + json.dumps(stamp, sort_keys=True) + "\n")
        meta = {
            c: {"source": m.source, "is_log_variant": m.is_log_variant}
            for c, m in matrix.col_meta.items()
        }
        fh.write("#colmeta " + json.dumps(meta, sort_keys=True) + "\n")
        fh.write("id\t" + "\t".join(matrix.columns) + "\n")
        for i, sid in enumerate(matrix.ids):
            cells = [
                "" if np.isnan(v) else repr(float(v)) for v in matrix.values[i, :]
            ]
            fh.write(sid + "\t" + "\t".join(cells) + "\n")


def load_matrix(path: Union[str, Path]) -> FeatureMatrix:
    """Read the interchange TSV; the version/meta comment lines are optional
    so externally produced feature files also load."""
    path = Path(path)
    col_meta: dict[str, ColumnMeta] = {}
    with path.open("r", encoding="utf-8") as fh:
        line = fh.readline()
        while line.startswith("#"):
            stripped = line.rstrip("\n")
            if stripped.startswith("#lcp-matrix "):
                if stripped != f"#lcp-matrix v{MATRIX_FORMAT_VERSION}":
                    raise FormatError(f"{path}: unsupported matrix version {stripped!r}")
            elif stripped.startswith("#stamp "):
                pass
            elif stripped.startswith("#colmeta "):
                payload = json.loads(stripped[len("#colmeta "):])
                col_meta = {
                    c: ColumnMeta(m.get("source", ""), bool(m.get("is_log_variant")))
                    for c, m in payload.items()
                }
            line = fh.readline()
        if not line:
            raise FormatError(f"{path}: missing header row")
        header = line.rstrip("\n").split("\t")
        if header and header[0] == "id":
            columns = header[1:]
        else:
            columns = header
        ids = []
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != len(columns) + 1:
                raise FormatError(
                    f"{path}:{lineno}: expected {len(columns) + 1} fields, got {len(fields)}"
                )
            ids.append(fields[0])
            rows.append([float(c) if c != "" else np.nan for c in fields[1:]])
        values = np.array(rows, dtype=np.float64) if rows else np.empty((0, len(columns)))
    return FeatureMatrix(ids, columns, values, col_meta)


# ---------------------------------------------------------------------------
# Feature manifest
# ---------------------------------------------------------------------------

# The documented scalar feature set, by family. The total is 110 scalars:
# 3 lexical + 2 wordnet + 8 phonetic + 8 main-corpus frequency + 14
# secondary n-gram + 6 SUBTLEXus + 1 BNC + 4 syntactic + 36 POS one-hots
# + 22 readability + 1 OOV + 3 corpus flags + 2 ingested perplexity
# columns. Embedding dimensions, log variants, and missing-flag helper
# columns are counted separately.
REFERENCE_SCALAR_FEATURES: dict[str, tuple[str, ...]] = {
    "lexical": ("word_len", "num_syllables", "is_acronym"),
    "wordnet": ("num_hypernyms", "num_hyponyms"),
    "phonetic": tuple(
        f"{kind}_transition_{stat}"
        for kind in ("char", "phoneme")
        for stat in ("min", "max", "mean", "std")
    ),
    "frequency": (
        "tf", "tf_lemma", "tf_summed_bpe", "tf_ngram_2", "tf_ngram_3",
        "tfidf", "tfidf_ngram_2", "tfidf_ngram_3",
    ),
    "google_ngrams": (
        "google_ngram_1",
        "google_ngram_2_head", "google_ngram_2_tail", "google_ngram_2_min",
        "google_ngram_2_max", "google_ngram_2_mean", "google_ngram_2_std",
        "google_ngram_3_head", "google_ngram_3_mid", "google_ngram_3_tail",
        "google_ngram_3_min", "google_ngram_3_max", "google_ngram_3_mean",
        "google_ngram_3_std",
    ),
    "subtlexus": ("FREQcount", "CDcount", "FREQlow", "CDlow", "SUBTLWF", "SUBTLCD"),
    "bnc": ("bnc_frequency",),
    "syntactic": (
        "parse_tree_depth", "token_depth", "num_words_at_depth", "is_proper",
        "POS_CC", "POS_CD", "POS_DT", "POS_EX", "POS_FW", "POS_IN", "POS_JJ",
        "POS_JJR", "POS_JJS", "POS_LS", "POS_MD", "POS_NN", "POS_NNP",
        "POS_NNPS", "POS_NNS", "POS_PDT", "POS_POS", "POS_PRP", "POS_PRP_DLR",
        "POS_RB", "POS_RBR", "POS_RBS", "POS_RP", "POS_SYM", "POS_TO",
        "POS_UH", "POS_VB", "POS_VBD", "POS_VBG", "POS_VBN", "POS_VBP",
        "POS_VBZ", "POS_WDT", "POS_WP", "POS_WP_DLR", "POS_WRB",
    ),
    "readability": (
        "automated_readability_index", "avg_character_per_word",
        "avg_letter_per_word", "avg_syllables_per_word", "char_count",
        "coleman_liau_index", "crawford", "fernandez_huerta",
        "flesch_kincaid_grade", "flesch_reading_ease", "gutierrez_polini",
        "letter_count", "lexicon_count", "linsear_write_formula", "lix",
        "polysyllabcount", "reading_time", "rix", "syllable_count",
        "szigriszt_pazos", "SMOGIndex", "DaleChallIndex",
    ),
    "oov": ("num_OOV",),
    "corpus_flags": ("corpus_bible", "corpus_biomed", "corpus_europarl"),
    "perplexity": ("ppl", "ppl_aspect_only"),
}

EMBEDDING_SOURCES = ("embeddings", "elmo", "infersent")


def feature_manifest(matrix: FeatureMatrix, suffixes: tuple[str, ...] = ("",)) -> dict:
    """Account for the matrix's columns against the reference scalar set.

    ``suffixes`` supports MWE matrices where each scalar appears once per
    constituent ("__head", "__tail").
    """
    present = set(matrix.columns)
    scalar_present: dict[str, list[str]] = {}
    scalar_missing: dict[str, list[str]] = {}
    n_expected = 0
    for family, names in REFERENCE_SCALAR_FEATURES.items():
        got, absent = [], []
        for name in names:
            n_expected += 1
            hits = [f"{name}{suf}" for suf in suffixes if f"{name}{suf}" in present]
            (got if hits else absent).append(name)
        scalar_present[family] = got
        if absent:
            scalar_missing[family] = absent

    n_log = sum(1 for c in matrix.columns if matrix.col_meta.get(c, ColumnMeta()).is_log_variant)
    n_embedding = sum(
        1
        for c in matrix.columns
        if matrix.col_meta.get(c, ColumnMeta()).source in EMBEDDING_SOURCES
        and not c.endswith("_missing")
        and not matrix.col_meta.get(c, ColumnMeta()).is_log_variant
    )
    flag_suffixes = ("_missing", "_exact_case")
    n_flags = sum(1 for c in matrix.columns if c.endswith(flag_suffixes))
    return {
        "n_columns": len(matrix.columns),
        "n_reference_scalars_expected": n_expected,
        "n_reference_scalars_present": sum(len(v) for v in scalar_present.values()),
        "n_log_variants": n_log,
        "n_embedding_dims": n_embedding,
        "n_flag_columns": n_flags,
        "scalars_by_family": {k: len(v) for k, v in scalar_present.items()},
        "missing_by_family": scalar_missing,
    }


def labels_for(samples: Iterable[Sample]) -> np.ndarray:
    labels = []
    for s in samples:
        if s.complexity is None:
            raise ValueError(f"sample {s.id} is unlabeled")
        labels.append(s.complexity)
    return np.array(labels, dtype=np.float64)
