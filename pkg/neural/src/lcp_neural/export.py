"""Exports in the pipeline's exchange formats: predictions TSV and the
attention dump JSON (validated before anything is written)."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np
import torch

from .data import Row

ROW_SUM_TOLERANCE = 1e-4


class ExportValidationError(ValueError):
    """Raised when an export would violate the exchange schema."""


def predict(model, tokenizer, rows: list[Row], max_length: int = 128) -> dict[str, float]:
    """One scalar prediction per row, keyed by id (input order preserved)."""
    model.eval()
    preds: dict[str, float] = {}
    with torch.no_grad():
        for row in rows:
            enc = tokenizer(
                row.sentence, row.target, truncation=True,
                max_length=max_length, return_tensors="pt",
            )
            out = model(**enc)
            preds[row.id] = float(out.logits[0, 0])
    return preds


def write_predictions(preds: dict[str, float], path: Union[str, Path]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write("id\tprediction\n")
        for sample_id, value in preds.items():
            fh.write(f"{sample_id}\t{value!r}\n")


def _word_alignment(encoding) -> list[int]:
    """Global word index per BPE position; special tokens map to -1.

    The tokenizer numbers words per sequence, so hypothesis word indices
    are offset by the premise word count to keep the alignment
    non-decreasing over the whole input.
    """
    word_ids = encoding.word_ids()
    seq_ids = encoding.sequence_ids()
    premise_words = 1 + max(
        (w for w, s in zip(word_ids, seq_ids) if s == 0 and w is not None), default=-1
    )
    alignment = []
    for wid, sid in zip(word_ids, seq_ids):
        if wid is None or sid is None:
            alignment.append(-1)
        elif sid == 0:
            alignment.append(wid)
        else:
            alignment.append(wid + premise_words)
    return alignment


def _validate_entry(entry: dict) -> None:
    t = len(entry["bpe_tokens"])
    alignment = entry["word_alignment"]
    if len(alignment) != t:
        raise ExportValidationError(
            f"sample {entry['id']}: alignment length {len(alignment)} != {t}"
        )
    real = [w for w in alignment if w >= 0]
    if real:
        if sorted(set(real)) != list(range(max(real) + 1)):
            raise ExportValidationError(
                f"sample {entry['id']}: word_alignment does not cover 0..{max(real)}"
            )
        if any(b < a for a, b in zip(real, real[1:])):
            raise ExportValidationError(
                f"sample {entry['id']}: word_alignment not non-decreasing"
            )
    attention = np.asarray(entry["attention"], dtype=np.float64)
    if attention.ndim != 4 or attention.shape[2:] != (t, t):
        raise ExportValidationError(
            f"sample {entry['id']}: attention shape {attention.shape} inconsistent with {t}"
        )
    sums = attention.sum(axis=3)
    worst = float(np.abs(sums - 1.0).max())
    if worst > ROW_SUM_TOLERANCE:
        raise ExportValidationError(
            f"sample {entry['id']}: attention row sum off by {worst:.2e}"
        )


def attention_dump_entries(model, tokenizer, rows: list[Row], max_length: int = 128) -> list[dict]:
    """Per-sample attention tensors with BPE tokens and word alignment."""
    model.eval()
    entries = []
    with torch.no_grad():
        for row in rows:
            enc = tokenizer(
                row.sentence, row.target, truncation=True,
                max_length=max_length, return_tensors="pt",
            )
            out = model(**enc, output_attentions=True)
            # [layers][heads][T][T], float64 so row sums serialize cleanly
            attention = torch.stack(out.attentions, dim=0)[:, 0].double().numpy()
            plain = tokenizer(row.sentence, row.target, truncation=True, max_length=max_length)
            entry = {
                "id": row.id,
                "bpe_tokens": tokenizer.convert_ids_to_tokens(plain["input_ids"]),
                "word_alignment": _word_alignment(plain),
                "attention": attention,
            }
            _validate_entry(entry)
            entry["attention"] = attention.tolist()
            entries.append(entry)
    return entries


def write_attention_dump(
    entries: list[dict], path: Union[str, Path], model_info: dict
) -> None:
    """Validate every entry, then write the dump in one shot."""
    for entry in entries:
        _validate_entry(entry)
    payload = {"model": model_info, "samples": entries}
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def predict_and_export(
    model, tokenizer, rows: list[Row], out_dir: Union[str, Path], max_length: int = 128
) -> dict[str, Path]:
    """Predictions TSV plus a validated attention dump JSON."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    preds = predict(model, tokenizer, rows, max_length=max_length)
    entries = attention_dump_entries(model, tokenizer, rows, max_length=max_length)
    # nothing is written until every sample validated
    pred_path = out_dir / "predictions.tsv"
    dump_path = out_dir / "attention_dump.json"
    write_predictions(preds, pred_path)
    config = model.config
    write_attention_dump(
        entries,
        dump_path,
        {"layers": config.num_hidden_layers, "heads": config.num_attention_heads},
    )
    return {"predictions": pred_path, "attention_dump": dump_path}
