"""Embedding-table features, precomputed-embedding ingestion, and WordNet
hypernym/hyponym counts behind Lesk disambiguation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .corpus import MISSING, FormatError
from .text import tokenize

logger = logging.getLogger(__name__)


class EmbeddingTable:
    """word -> fixed-dimension vector, loaded from plain text."""

    def __init__(self, dim: int, vectors: dict[str, np.ndarray]):
        self.dim = dim
        self.vectors = vectors

    def get(self, word: str) -> Optional[np.ndarray]:
        return self.vectors.get(word)

    def __len__(self) -> int:
        return len(self.vectors)


def load_embedding_table(path: Union[str, Path]) -> EmbeddingTable:
    """Read "word v1 ... vd" lines; dimension is inferred from the first row.

    Rows with the wrong arity or non-numeric components are rejected with a
    warning; duplicate words keep the last occurrence.
    """
    path = Path(path)
    dim: Optional[int] = None
    vectors: dict[str, np.ndarray] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            word, comps = parts[0], parts[1:]
            if dim is None:
                if not comps:
                    raise FormatError(f"{path}:{lineno}: no vector components")
                dim = len(comps)
            if len(comps) != dim:
                logger.warning(
                    "%s:%d: expected %d components, got %d; line rejected",
                    path, lineno, dim, len(comps),
                )
                continue
            try:
                vec = np.array([float(c) for c in comps], dtype=np.float64)
            except ValueError:
                logger.warning("%s:%d: non-numeric component; line rejected", path, lineno)
                continue
            if word in vectors:
                logger.warning("%s:%d: duplicate word %r; last occurrence wins", path, lineno, word)
            vectors[word] = vec
    if dim is None or not vectors:
        raise FormatError(f"{path}: empty embedding table")
    return EmbeddingTable(dim, vectors)


def embedding_features(
    table: EmbeddingTable,
    sentence: str,
    target: str,
    word_prefix: str = "glove_word",
    context_prefix: str = "glove_context",
) -> dict[str, float]:
    """Target-word vector and the mean vector of in-vocabulary context tokens.

    Out-of-vocabulary targets (and all-OOV contexts) yield zero vectors with
    a companion missing flag, keeping dimensions standardization-safe.
    """
    feats: dict[str, float] = {}
    tvec = table.get(target.lower())
    missing_word = tvec is None
    if tvec is None:
        tvec = np.zeros(table.dim)
    for i, v in enumerate(tvec):
        feats[f"{word_prefix}_{i}"] = float(v)
    feats[f"{word_prefix}_missing"] = float(missing_word)

    context_vecs = [table.get(t) for t in tokenize(sentence)]
    context_vecs = [v for v in context_vecs if v is not None]
    missing_ctx = not context_vecs
    cvec = np.mean(context_vecs, axis=0) if context_vecs else np.zeros(table.dim)
    for i, v in enumerate(cvec):
        feats[f"{context_prefix}_{i}"] = float(v)
    feats[f"{context_prefix}_missing"] = float(missing_ctx)
    return feats


def load_precomputed_embeddings(path: Union[str, Path]) -> dict[str, np.ndarray]:
    """Read an "id<TAB>v1 v2 ... vd" file of per-sample vectors.

    Dimension drift within the file is a format error.
    """
    path = Path(path)
    out: dict[str, np.ndarray] = {}
    dim: Optional[int] = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            sample_id, _, rest = line.partition("\t")
            comps = rest.split()
            if not sample_id or not comps:
                raise FormatError(f"{path}:{lineno}: expected id<TAB>components")
            if dim is None:
                dim = len(comps)
            elif len(comps) != dim:
                raise FormatError(
                    f"{path}:{lineno}: dimension drift ({len(comps)} != {dim})"
                )
            try:
                out[sample_id] = np.array([float(c) for c in comps], dtype=np.float64)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: non-numeric component") from exc
    return out


def attach_precomputed(
    vectors: dict[str, np.ndarray],
    sample_ids: list[str],
    prefix: str,
) -> dict[str, dict[str, float]]:
    """Join per-sample vectors by id into per-dimension feature columns.

    Samples absent from the file get missing values in every column.
    """
    if vectors:
        dim = len(next(iter(vectors.values())))
    else:
        dim = 0
    out: dict[str, dict[str, float]] = {}
    for sid in sample_ids:
        vec = vectors.get(sid)
        if vec is None:
            out[sid] = {f"{prefix}_{i}": MISSING for i in range(dim)}
        else:
            out[sid] = {f"{prefix}_{i}": float(v) for i, v in enumerate(vec)}
    return out


# ---------------------------------------------------------------------------
# WordNet-format sense inventory
# ---------------------------------------------------------------------------


@dataclass
class Synset:
    id: str
    lemmas: list[str]
    gloss: str
    examples: list[str]
    hypernyms: list[str] = field(default_factory=list)
    hyponyms: list[str] = field(default_factory=list)


class SenseInventory:
    """Synsets plus lemma -> ordered synset ids (dictionary sense order)."""

    def __init__(self, synsets: dict[str, Synset], lemma_index: dict[str, list[str]]):
        self.synsets = synsets
        self.lemma_index = lemma_index
        for syn in synsets.values():
            for edge in syn.hypernyms + syn.hyponyms:
                if edge not in synsets:
                    raise FormatError(f"synset {syn.id} points to unknown synset {edge}")

    def synsets_for(self, lemma: str) -> list[Synset]:
        ids = self.lemma_index.get(lemma.lower(), [])
        return [self.synsets[i] for i in ids]


_POINTER_HYPERNYM = "@"
_POINTER_HYPONYM = "~"


def _parse_gloss(gloss: str) -> tuple[str, list[str]]:
    """Split a WordNet gloss into definition text and quoted examples."""
    parts = gloss.split('"')
    definition = " ".join(p.strip(" ;") for p in parts[0::2] if p.strip(" ;"))
    examples = [p.strip() for p in parts[1::2] if p.strip()]
    return definition, examples


def load_sense_inventory(
    data_paths: list[Union[str, Path]],
    index_paths: list[Union[str, Path]],
) -> SenseInventory:
    """Parse WordNet 3.0 database files (data.pos / index.pos)."""
    synsets: dict[str, Synset] = {}
    for data_path in data_paths:
        data_path = Path(data_path)
        with data_path.open("r", encoding="utf-8") as fh:
            for line in fh:
                if line.startswith("  ") or not line.strip():
                    continue  # license header
                head, _, gloss = line.rstrip("\n").partition("|")
                fields = head.split()
                try:
                    offset = int(fields[0])
                    pos = fields[2]
                    w_cnt = int(fields[3], 16)
                    words = [fields[4 + 2 * i] for i in range(w_cnt)]
                    p_idx = 4 + 2 * w_cnt
                    p_cnt = int(fields[p_idx])
                    hypernyms = []
                    hyponyms = []
                    for i in range(p_cnt):
                        sym, target_off, target_pos, _ = fields[
                            p_idx + 1 + 4 * i : p_idx + 5 + 4 * i
                        ]
                        target_id = f"{int(target_off):08d}-{target_pos}"
                        if sym == _POINTER_HYPERNYM:
                            hypernyms.append(target_id)
                        elif sym == _POINTER_HYPONYM:
                            hyponyms.append(target_id)
                except (IndexError, ValueError) as exc:
                    raise FormatError(f"{data_path}: malformed data line") from exc
                definition, examples = _parse_gloss(gloss)
                sid = f"{offset:08d}-{pos}"
                synsets[sid] = Synset(
                    sid,
                    [w.replace("_", " ").lower() for w in words],
                    definition,
                    examples,
                    hypernyms,
                    hyponyms,
                )
    lemma_index: dict[str, list[str]] = {}
    for index_path in index_paths:
        index_path = Path(index_path)
        with index_path.open("r", encoding="utf-8") as fh:
            for line in fh:
                if line.startswith("  ") or not line.strip():
                    continue
                fields = line.split()
                try:
                    lemma, pos = fields[0], fields[1]
                    synset_cnt = int(fields[2])
                    ptr_cnt = int(fields[3])
                    offsets = fields[6 + ptr_cnt : 6 + ptr_cnt + synset_cnt]
                    ids = [f"{int(off):08d}-{pos}" for off in offsets]
                except (IndexError, ValueError) as exc:
                    raise FormatError(f"{index_path}: malformed index line") from exc
                lemma_index.setdefault(lemma.replace("_", " ").lower(), []).extend(ids)
    return SenseInventory(synsets, lemma_index)


_STOPWORDS = frozenset(
    "a an the of in on at to for and or but is are was were be been being "
    "it its this that these those with as by from he she they we you i".split()
)


def lesk_disambiguate(
    inventory: SenseInventory,
    target: str,
    sentence: str,
    drop_stopwords: bool = False,
) -> Optional[str]:
    """Pick the target's synset by gloss+example token overlap with context.

    Overlap is measured on lowercased token sets; ties keep the earliest
    synset in dictionary order. Returns None for targets with no synsets.
    """
    candidates = inventory.synsets_for(target)
    if not candidates:
        return None
    context = set(tokenize(sentence))
    if drop_stopwords:
        context -= _STOPWORDS
    best_id = None
    best_overlap = -1
    for syn in candidates:
        signature = set(tokenize(syn.gloss))
        for ex in syn.examples:
            signature.update(tokenize(ex))
        if drop_stopwords:
            signature -= _STOPWORDS
        overlap = len(context & signature)
        if overlap > best_overlap:
            best_id, best_overlap = syn.id, overlap
    return best_id


def wordnet_counts(
    inventory: SenseInventory,
    synset_id: Optional[str],
    transitive: bool = False,
) -> tuple[float, float]:
    """(num_hypernyms, num_hyponyms) for a synset; missing for None.

    Counts direct one-edge neighbors by default; ``transitive`` switches to
    closure sizes.
    """
    if synset_id is None:
        return MISSING, MISSING
    syn = inventory.synsets[synset_id]
    if not transitive:
        return float(len(syn.hypernyms)), float(len(syn.hyponyms))

    def closure(start: str, attr: str) -> int:
        seen: set[str] = set()
        frontier = list(getattr(inventory.synsets[start], attr))
        while frontier:
            nxt = frontier.pop()
            if nxt in seen:
                continue
            seen.add(nxt)
            frontier.extend(getattr(inventory.synsets[nxt], attr))
        return len(seen)

    return float(closure(synset_id, "hypernyms")), float(closure(synset_id, "hyponyms"))


def wordnet_features(
    inventory: Optional[SenseInventory],
    sentence: str,
    target: str,
) -> dict[str, float]:
    """num_hypernyms/num_hyponyms of the Lesk-disambiguated target sense."""
    if inventory is None:
        return {"num_hypernyms": MISSING, "num_hyponyms": MISSING}
    sid = lesk_disambiguate(inventory, target, sentence)
    hyper, hypo = wordnet_counts(inventory, sid)
    return {"num_hypernyms": hyper, "num_hyponyms": hypo}
