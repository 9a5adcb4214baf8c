"""Attention dump ingestion, BPE-to-word aggregation, and per-head
correlation between word frequency and received attention.

Dump JSON schema (one file per batch):
  {"model": {...}, "samples": [{"id": str, "bpe_tokens": [str],
   "word_alignment": [int], "attention": [[[[float]]]]}]}
where attention is [layers][heads][T][T] and word_alignment maps each BPE
position to a word index, -1 marking special/sentinel tokens.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .ensemble import pearson

ROW_SUM_TOLERANCE = 1e-4

SUBWORD_PREFIXES = ("##",)
SUBWORD_MARKERS = ("Ġ", "▁")  # GPT-2 / sentencepiece word-start markers


class DumpValidationError(ValueError):
    """Raised when an attention dump violates the schema."""


@dataclass
class AttentionDump:
    id: str
    bpe_tokens: list[str]
    word_alignment: list[int]
    attention: np.ndarray  # [layers][heads][T][T]

    @property
    def n_layers(self) -> int:
        return self.attention.shape[0]

    @property
    def n_heads(self) -> int:
        return self.attention.shape[1]

    @property
    def n_words(self) -> int:
        real = [w for w in self.word_alignment if w >= 0]
        return (max(real) + 1) if real else 0

    def word_strings(self) -> list[str]:
        """Reconstruct word surface forms from BPE pieces (lowercased)."""
        words = [""] * self.n_words
        for tok, w in zip(self.bpe_tokens, self.word_alignment):
            if w < 0:
                continue
            piece = tok
            for prefix in SUBWORD_PREFIXES:
                if piece.startswith(prefix):
                    piece = piece[len(prefix):]
            for marker in SUBWORD_MARKERS:
                piece = piece.replace(marker, "")
            words[w] += piece
        return [w.lower() for w in words]


def _validate_dump(dump: AttentionDump) -> None:
    t = len(dump.bpe_tokens)
    if len(dump.word_alignment) != t:
        raise DumpValidationError(
            f"sample {dump.id}: alignment length {len(dump.word_alignment)} != {t} tokens"
        )
    if dump.attention.ndim != 4 or dump.attention.shape[2:] != (t, t):
        raise DumpValidationError(
            f"sample {dump.id}: attention shape {dump.attention.shape} "
            f"inconsistent with {t} tokens"
        )
    real = [w for w in dump.word_alignment if w >= 0]
    if real:
        if sorted(set(real)) != list(range(max(real) + 1)):
            raise DumpValidationError(
                f"sample {dump.id}: word_alignment does not cover 0..{max(real)}"
            )
        if any(b < a for a, b in zip(real, real[1:])):
            raise DumpValidationError(f"sample {dump.id}: word_alignment not non-decreasing")
    sums = dump.attention.sum(axis=3)
    bad = np.argwhere(np.abs(sums - 1.0) > ROW_SUM_TOLERANCE)
    if bad.size:
        layer, head, row = bad[0]
        raise DumpValidationError(
            f"sample {dump.id}: attention row sums to {sums[layer, head, row]:.6f} "
            f"at layer {layer} head {head} position {row}"
        )


def load_dump(path: Union[str, Path]) -> list[AttentionDump]:
    """Load and validate a dump file; any violation raises with context."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if "samples" not in payload:
        raise DumpValidationError(f"{path}: missing 'samples'")
    dumps = []
    for entry in payload["samples"]:
        dump = AttentionDump(
            id=str(entry["id"]),
            bpe_tokens=list(entry["bpe_tokens"]),
            word_alignment=[int(w) for w in entry["word_alignment"]],
            attention=np.asarray(entry["attention"], dtype=np.float64),
        )
        _validate_dump(dump)
        dumps.append(dump)
    return dumps


def save_dump(
    dumps: Sequence[AttentionDump], path: Union[str, Path], model_info: Optional[dict] = None
) -> None:
    payload = {
        "model": model_info or {},
        "samples": [
            {
                "id": d.id,
                "bpe_tokens": d.bpe_tokens,
                "word_alignment": d.word_alignment,
                "attention": d.attention.tolist(),
            }
            for d in dumps
        ],
    }
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def word_received_attention(
    dump: AttentionDump, layer: int, head: int, mode: str = "mean"
) -> np.ndarray:
    """Attention received by each word at one head.

    A word receives, from each non-sentinel source position, the sum of
    attention on its constituent BPEs; the per-source values are then
    averaged (``mode="mean"``, comparable across sentence lengths) or summed
    (``mode="sum"``).
    """
    if mode not in ("mean", "sum"):
        raise ValueError(f"unknown aggregation mode {mode!r}")
    A = dump.attention[layer, head]
    align = np.array(dump.word_alignment)
    src = align >= 0
    n_words = dump.n_words
    received = np.zeros(n_words)
    rows = A[src, :]
    for w in range(n_words):
        cols = align == w
        per_source = rows[:, cols].sum(axis=1)
        received[w] = per_source.mean() if mode == "mean" else per_source.sum()
    return received


@dataclass
class HeadCorrelationGrid:
    """layers x heads Pearson values; NaN marks heads with no usable samples."""

    values: np.ndarray

    @property
    def n_layers(self) -> int:
        return self.values.shape[0]

    @property
    def n_heads(self) -> int:
        return self.values.shape[1]


def head_frequency_correlation(
    dumps: Sequence[AttentionDump],
    freq_lookup,
    n_samples: int = 100,
    seed: int = 0,
    mode: str = "mean",
    log_frequency: bool = True,
) -> HeadCorrelationGrid:
    """Mean per-sample Pearson between word frequency and received attention.

    ``freq_lookup`` is a callable word -> count. Frequencies go through
    ln(1+count) by default. For each head, samples with fewer than 3 words
    or zero variance in either vector are skipped; n_samples dumps are
    drawn without replacement under the seed (all of them if fewer).
    """
    if not dumps:
        raise ValueError("no dumps given")
    layers, heads = dumps[0].n_layers, dumps[0].n_heads
    for d in dumps:
        if (d.n_layers, d.n_heads) != (layers, heads):
            raise DumpValidationError("dumps disagree on layer/head counts")
    rng = random.Random(seed)
    if len(dumps) > n_samples:
        chosen = rng.sample(list(dumps), n_samples)
    else:
        chosen = list(dumps)

    freqs_per_dump = []
    for d in chosen:
        f = np.array([float(freq_lookup(w)) for w in d.word_strings()])
        freqs_per_dump.append(np.log1p(f) if log_frequency else f)

    grid = np.full((layers, heads), np.nan)
    for layer in range(layers):
        for head in range(heads):
            vals = []
            for d, f in zip(chosen, freqs_per_dump):
                if d.n_words < 3:
                    continue
                received = word_received_attention(d, layer, head, mode=mode)
                r = pearson(f, received)
                if r is not None:
                    vals.append(r)
            if vals:
                grid[layer, head] = sum(vals) / len(vals)
    return HeadCorrelationGrid(grid)


def export_figures(
    grid: HeadCorrelationGrid,
    dump: AttentionDump,
    layer: int,
    head: int,
    out_dir: Union[str, Path],
) -> dict[str, Path]:
    """Write the correlation grid and one head's attention map as CSV."""
    if not (0 <= layer < dump.n_layers and 0 <= head < dump.n_heads):
        raise ValueError(f"layer {layer} head {head} outside dump dimensions")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid_path = out_dir / "head_correlations.csv"
    with grid_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"head_{h}" for h in range(grid.n_heads)])
        for row in grid.values:
            writer.writerow(["" if np.isnan(v) else repr(float(v)) for v in row])
    map_path = out_dir / f"attention_map_L{layer}_H{head}_{dump.id}.csv"
    with map_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(dump.bpe_tokens)
        for row in dump.attention[layer, head]:
            writer.writerow([repr(float(v)) for v in row])
    return {"grid": grid_path, "attention_map": map_path}
