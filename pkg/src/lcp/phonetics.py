"""Character and phoneme transition models and their feature aggregates.

A transition model holds P(u -> v) estimated from a weighted vocabulary:
each word contributes its unit bigrams, weighted either by its corpus count
(token_frequency) or by 1 (type). Features are min/max/mean/population-std
over a target word's bigram transition probabilities.
"""

from __future__ import annotations

import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .corpus import MISSING, FormatError

logger = logging.getLogger(__name__)

# CMU pronouncing dictionary phoneme inventory (stress digits stripped).
ARPABET = frozenset(
    "AA AE AH AO AW AY B CH D DH EH ER EY F G HH IH IY JH K L M N NG OW OY "
    "P R S T TH UH UW V W Y Z ZH".split()
)


class PronDict:
    """word -> pronunciation variants, each a list of ARPAbet symbols."""

    def __init__(self, entries: Optional[dict[str, list[list[str]]]] = None):
        self.entries = entries if entries is not None else {}

    def get(self, word: str) -> Optional[list[str]]:
        """First pronunciation variant, or None for out-of-dictionary words."""
        variants = self.entries.get(word.lower())
        return variants[0] if variants else None

    def variants(self, word: str) -> list[list[str]]:
        return self.entries.get(word.lower(), [])

    def __len__(self) -> int:
        return len(self.entries)


def load_pron_dict(path: Union[str, Path]) -> PronDict:
    """Parse cmudict plain text: "WORD  PH1 PH2 ...", "(n)" variant suffixes,
    ";;;" comment lines. Stress digits are stripped; lines with symbols
    outside the ARPAbet set are rejected with a warning.
    """
    entries: dict[str, list[list[str]]] = {}
    path = Path(path)
    with path.open("r", encoding="latin-1") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith(";;;"):
                continue
            parts = line.split()
            if len(parts) < 2:
                logger.warning("%s:%d: no pronunciation, skipped", path, lineno)
                continue
            word = parts[0]
            if word.endswith(")") and "(" in word:
                word = word[: word.rindex("(")]
            phones = []
            bad = None
            for raw in parts[1:]:
                symbol = raw.rstrip("0123456789")
                if symbol not in ARPABET:
                    bad = raw
                    break
                phones.append(symbol)
            if bad is not None:
                logger.warning("%s:%d: unknown phoneme %r, line rejected", path, lineno, bad)
                continue
            entries.setdefault(word.lower(), []).append(phones)
    return PronDict(entries)


@dataclass
class TransitionModel:
    """Row-stochastic unit-to-unit transition probabilities."""

    unit_kind: str  # "character" | "phoneme"
    weighting: str  # "token_frequency" | "type"
    probs: dict[str, dict[str, float]] = field(default_factory=dict)
    source_id: str = ""

    def prob(self, u: str, v: str) -> Optional[float]:
        """P(u -> v); 0.0 for unseen v after seen u, None for unseen u."""
        row = self.probs.get(u)
        if row is None:
            return None
        return row.get(v, 0.0)

    @property
    def alphabet(self) -> set[str]:
        units = set(self.probs)
        for row in self.probs.values():
            units.update(row)
        return units


def _word_units(
    word: str, unit_kind: str, pron: Optional[PronDict]
) -> Optional[list[str]]:
    if unit_kind == "character":
        return list(word)
    if unit_kind == "phoneme":
        if pron is None:
            raise ValueError("phoneme mode requires a pronouncing dictionary")
        return pron.get(word)
    raise ValueError(f"unknown unit kind {unit_kind!r}")


def fit_transition_model(
    vocab_with_counts: dict[str, int],
    unit_kind: str,
    weighting: str = "token_frequency",
    pron: Optional[PronDict] = None,
    source_id: str = "",
) -> TransitionModel:
    """Estimate P(u -> v) from a vocabulary.

    token_frequency weighting multiplies each word's bigram contributions by
    its corpus count; type weighting counts each vocabulary word once. Words
    without a pronunciation are skipped in phoneme mode.
    """
    if weighting not in ("token_frequency", "type"):
        raise ValueError(f"unknown weighting {weighting!r}")
    if not vocab_with_counts:
        raise ValueError("empty vocabulary")
    bigram_w: dict[str, dict[str, float]] = defaultdict(lambda: defaultdict(float))
    out_w: dict[str, float] = defaultdict(float)
    for word, count in vocab_with_counts.items():
        units = _word_units(word, unit_kind, pron)
        if units is None or len(units) < 2:
            continue
        w = float(count) if weighting == "token_frequency" else 1.0
        for u, v in zip(units, units[1:]):
            bigram_w[u][v] += w
            out_w[u] += w
    probs = {
        u: {v: w / out_w[u] for v, w in sorted(row.items())}
        for u, row in sorted(bigram_w.items())
    }
    return TransitionModel(unit_kind, weighting, probs, source_id)


def phonetic_features(
    model_char: TransitionModel,
    model_phon: TransitionModel,
    pron: PronDict,
    target: str,
) -> dict[str, float]:
    """min/max/mean/std of transition probabilities over the target's bigrams.

    Character and phoneme groups are independent: a one-character target has
    the character group missing; a target absent from the dictionary has the
    phoneme group missing. Bigrams whose first unit was seen but whose
    transition was not contribute probability 0; bigrams from a wholly
    unseen first unit also count as 0 (never observed at all).
    """
    feats: dict[str, float] = {}
    word = target.lower()
    feats.update(_transition_aggregates(model_char, list(word), "char_transition"))
    phones = pron.get(word)
    feats.update(
        _transition_aggregates(
            model_phon, phones if phones is not None else None, "phoneme_transition"
        )
    )
    return feats


def _transition_aggregates(
    model: TransitionModel, units: Optional[list[str]], prefix: str
) -> dict[str, float]:
    names = [f"{prefix}_{stat}" for stat in ("min", "max", "mean", "std")]
    if units is None or len(units) < 2:
        return {name: MISSING for name in names}
    values = []
    for u, v in zip(units, units[1:]):
        p = model.prob(u, v)
        values.append(0.0 if p is None else p)
    mean = sum(values) / len(values)
    std = math.sqrt(sum((x - mean) ** 2 for x in values) / len(values))
    return dict(zip(names, (min(values), max(values), mean, std)))


def persist_transition_model(
    model: TransitionModel, path: Union[str, Path], stamp: Optional[dict] = None
) -> None:
    """Write "u<TAB>v<TAB>p" rows under a metadata header."""
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write("#lcp-transitions v1\n")
        if stamp:
            fh.write("#stamp " + json.dumps(stamp, sort_keys=True) + "\n")
        fh.write(f"#unit_kind {model.unit_kind}\n")
        fh.write(f"#weighting {model.weighting}\n")
        fh.write(f"#source {model.source_id}\n")
        for u in sorted(model.probs):
            for v, p in sorted(model.probs[u].items()):
                fh.write(f"{u}\t{v}\t{p!r}\n")


def load_transition_model(path: Union[str, Path]) -> TransitionModel:
    path = Path(path)
    model = TransitionModel(unit_kind="", weighting="")
    with path.open("r", encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        if first != "#lcp-transitions v1":
            raise FormatError(f"{path}: not a v1 transition model file")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#unit_kind "):
                model.unit_kind = line.split(" ", 1)[1]
            elif line.startswith("#weighting "):
                model.weighting = line.split(" ", 1)[1]
            elif line.startswith("#source "):
                model.source_id = line.split(" ", 1)[1]
            elif line.startswith("#"):
                continue
            else:
                parts = line.split("\t")
                if len(parts) != 3:
                    raise FormatError(f"{path}:{lineno}: expected u<TAB>v<TAB>p")
                u, v, p = parts
                model.probs.setdefault(u, {})[v] = float(p)
    return model
