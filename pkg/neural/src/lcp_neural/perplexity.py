"""Causal-LM perplexity features in the pipeline's feature-column format.

ppl exponentiates the mean negative log-likelihood of the context tokens,
each conditioned on its preceding tokens (sliding window over long
contexts). ppl_aspect_only restricts the average to the tokens of the
target expression. The first token of a context has no predecessor and is
never scored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import torch

from .data import Row


@dataclass
class PerplexityScore:
    ppl: Optional[float]
    ppl_aspect_only: Optional[float]
    n_context_terms: int
    n_target_terms: int


def _token_nlls(model, input_ids: torch.Tensor, window: int, stride: int) -> list[Optional[float]]:
    """Per-token negative log-likelihood; index 0 is None (no predecessor).

    Long inputs are scored in overlapping windows; each token's NLL comes
    from the window giving it the most left context.
    """
    t = input_ids.shape[1]
    nlls: list[Optional[float]] = [None] * t
    model.eval()
    begin = 0
    with torch.no_grad():
        while True:
            end = min(begin + window, t)
            ids = input_ids[:, begin:end]
            logits = model(ids).logits
            log_probs = torch.log_softmax(logits.double(), dim=-1)
            # token at absolute position begin+i+1 is predicted from slot i
            for i in range(ids.shape[1] - 1):
                pos = begin + i + 1
                if nlls[pos] is None:
                    nlls[pos] = -float(log_probs[0, i, input_ids[0, pos]])
            if end == t:
                break
            begin += stride
    return nlls


def _target_span(sentence: str, target: str) -> Optional[tuple[int, int]]:
    lower = sentence.lower()
    start = lower.find(target.lower())
    if start < 0:
        return None
    return start, start + len(target)


def score_row(
    model,
    tokenizer,
    row: Row,
    window: int = 256,
    stride: Optional[int] = None,
) -> PerplexityScore:
    enc = tokenizer(row.sentence, return_offsets_mapping=True)
    input_ids = torch.tensor([enc["input_ids"]])
    offsets = enc["offset_mapping"]
    if input_ids.shape[1] < 2:
        return PerplexityScore(None, None, 0, 0)
    nlls = _token_nlls(model, input_ids, window, stride or max(1, window // 2))

    scored = [v for v in nlls if v is not None]
    ppl = math.exp(sum(scored) / len(scored)) if scored else None

    span = _target_span(row.sentence, row.target)
    target_nlls = []
    if span is not None:
        for pos, (a, b) in enumerate(offsets):
            if nlls[pos] is None or (a, b) == (0, 0):
                continue
            if a < span[1] and b > span[0]:  # character overlap with the target
                target_nlls.append(nlls[pos])
    aspect = math.exp(sum(target_nlls) / len(target_nlls)) if target_nlls else None
    return PerplexityScore(ppl, aspect, len(scored), len(target_nlls))


def export_perplexity(
    rows: list[Row],
    model,
    tokenizer,
    path: Union[str, Path],
    window: int = 256,
) -> Path:
    """Write ppl / ppl_aspect_only feature columns joined by sample id."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write("id\tppl\tppl_aspect_only\n")
        for row in rows:
            score = score_row(model, tokenizer, row, window=window)
            ppl = "" if score.ppl is None else repr(score.ppl)
            aspect = "" if score.ppl_aspect_only is None else repr(score.ppl_aspect_only)
            fh.write(f"{row.id}\t{ppl}\t{aspect}\n")
    return path
