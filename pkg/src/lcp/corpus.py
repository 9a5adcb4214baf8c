"""N-gram frequency indexing over raw corpora and the word-frequency features.

The index counts unigrams/bigrams/trigrams and document frequencies under
the pipeline tokenizer. It is mergeable (build shards, then merge) and
persists to a sorted tab-separated text format, optionally gzipped.
"""

from __future__ import annotations

import gzip
import io
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

from .text import TOKENIZER_ID, lemmatize, tokenize

logger = logging.getLogger(__name__)

INDEX_FORMAT_VERSION = 1

MISSING = float("nan")


class FormatError(ValueError):
    """Raised when a persisted artifact has the wrong format or version."""


@dataclass
class FrequencyIndex:
    """Unigram/bigram/trigram counts plus document frequencies.

    Absent keys mean count 0. N-grams are stored space-joined.
    """

    tokenizer_id: str = TOKENIZER_ID
    n_docs: int = 0
    n_tokens: int = 0
    unigrams: Counter = field(default_factory=Counter)
    bigrams: Counter = field(default_factory=Counter)
    trigrams: Counter = field(default_factory=Counter)
    doc_freq: Counter = field(default_factory=Counter)
    skipped_docs: int = 0

    def tf(self, token: str) -> int:
        return self.unigrams.get(token, 0)

    def idf(self, token: str) -> float:
        """Smoothed IDF: ln((1 + n_docs) / (1 + doc_freq)) + 1."""
        return math.log((1 + self.n_docs) / (1 + self.doc_freq.get(token, 0))) + 1.0

    def tfidf(self, token: str) -> float:
        return self.tf(token) * self.idf(token)

    def ngram_count(self, tokens: tuple[str, ...]) -> int:
        key = " ".join(tokens)
        if len(tokens) == 1:
            return self.unigrams.get(key, 0)
        if len(tokens) == 2:
            return self.bigrams.get(key, 0)
        if len(tokens) == 3:
            return self.trigrams.get(key, 0)
        raise ValueError(f"unsupported n-gram order {len(tokens)}")

    def add_document(self, doc: str) -> None:
        toks = tokenize(doc)
        self.n_docs += 1
        self.n_tokens += len(toks)
        self.unigrams.update(toks)
        self.bigrams.update(" ".join(toks[i : i + 2]) for i in range(len(toks) - 1))
        self.trigrams.update(" ".join(toks[i : i + 3]) for i in range(len(toks) - 2))
        self.doc_freq.update(set(toks))

    def merge(self, other: "FrequencyIndex") -> "FrequencyIndex":
        """Combine two shard indexes; equivalent to indexing the concatenation."""
        if other.tokenizer_id != self.tokenizer_id:
            raise ValueError("cannot merge indexes built with different tokenizers")
        out = FrequencyIndex(tokenizer_id=self.tokenizer_id)
        out.n_docs = self.n_docs + other.n_docs
        out.n_tokens = self.n_tokens + other.n_tokens
        out.skipped_docs = self.skipped_docs + other.skipped_docs
        for name in ("unigrams", "bigrams", "trigrams", "doc_freq"):
            merged = Counter(getattr(self, name))
            merged.update(getattr(other, name))
            setattr(out, name, merged)
        return out


def build_index(
    docs: Iterable[Union[str, bytes]],
    doc_unit: str = "line",
) -> FrequencyIndex:
    """Index a stream of documents.

    ``doc_unit`` is recorded only for provenance here; callers that read
    files choose how to cut documents (see :func:`iter_documents`). Byte
    documents that fail UTF-8 decoding are skipped and counted.
    """
    index = FrequencyIndex()
    for doc in docs:
        if isinstance(doc, bytes):
            try:
                doc = doc.decode("utf-8")
            except UnicodeDecodeError:
                index.skipped_docs += 1
                continue
        index.add_document(doc)
    return index


def iter_documents(paths: Iterable[Union[str, Path]], doc_unit: str = "line") -> Iterable[bytes]:
    """Yield raw documents from files: one per line, or one per file."""
    if doc_unit not in ("line", "document"):
        raise ValueError(f"unknown doc_unit {doc_unit!r}")
    for path in paths:
        path = Path(path)
        opener = gzip.open if path.suffix == ".gz" else open
        with opener(path, "rb") as fh:
            if doc_unit == "line":
                for line in fh:
                    yield line
            else:
                yield fh.read()


_SECTIONS = ("unigram", "bigram", "trigram", "docfreq")


def _open_deterministic(path: Path):
    """Text writer; gzip output carries no mtime so re-runs are byte-equal."""
    if path.suffix == ".gz":
        raw = gzip.GzipFile(filename="", mode="wb", fileobj=path.open("wb"), mtime=0)
        return io.TextIOWrapper(raw, encoding="utf-8")
    return path.open("w", encoding="utf-8")


def persist_index(
    index: FrequencyIndex, path: Union[str, Path], stamp: Optional[dict] = None
) -> None:
    """Write the index as sorted "ngram<TAB>count" text (gzipped if *.gz)."""
    path = Path(path)
    with _open_deterministic(path) as fh:
        fh.write(f"#lcp-index v{INDEX_FORMAT_VERSION}\n")
        if stamp:
            fh.write("#stamp " + json.dumps(stamp, sort_keys=True) + "\n")
        fh.write(f"#tokenizer {index.tokenizer_id}\n")
        fh.write(f"#n_docs {index.n_docs}\n")
        fh.write(f"#n_tokens {index.n_tokens}\n")
        fh.write(f"#skipped_docs {index.skipped_docs}\n")
        for section, counter in zip(
            _SECTIONS, (index.unigrams, index.bigrams, index.trigrams, index.doc_freq)
        ):
            fh.write(f"#section {section}\n")
            for key in sorted(counter):
                fh.write(f"{key}\t{counter[key]}\n")


def load_index(path: Union[str, Path]) -> FrequencyIndex:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    index = FrequencyIndex()
    section: Optional[Counter] = None
    by_name = {
        "unigram": index.unigrams,
        "bigram": index.bigrams,
        "trigram": index.trigrams,
        "docfreq": index.doc_freq,
    }
    try:
        with opener(path, "rt", encoding="utf-8") as fh:
            first = fh.readline().rstrip("\n")
            if first != f"#lcp-index v{INDEX_FORMAT_VERSION}":
                raise FormatError(f"{path}: not a v{INDEX_FORMAT_VERSION} index file")
            seen_sections = 0
            for line in fh:
                line = line.rstrip("\n")
                if line.startswith("#section "):
                    name = line.split(" ", 1)[1]
                    if name not in by_name:
                        raise FormatError(f"{path}: unknown section {name!r}")
                    section = by_name[name]
                    seen_sections += 1
                elif line.startswith("#tokenizer "):
                    index.tokenizer_id = line.split(" ", 1)[1]
                elif line.startswith("#n_docs "):
                    index.n_docs = int(line.split(" ", 1)[1])
                elif line.startswith("#n_tokens "):
                    index.n_tokens = int(line.split(" ", 1)[1])
                elif line.startswith("#skipped_docs "):
                    index.skipped_docs = int(line.split(" ", 1)[1])
                elif line.startswith("#"):
                    continue
                elif line:
                    if section is None:
                        raise FormatError(f"{path}: data before any #section header")
                    key, _, count = line.rpartition("\t")
                    if not key:
                        raise FormatError(f"{path}: malformed line {line!r}")
                    section[key] = int(count)
            if seen_sections != len(_SECTIONS):
                raise FormatError(
                    f"{path}: truncated index ({seen_sections}/{len(_SECTIONS)} sections)"
                )
    except (OSError, UnicodeDecodeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{path}: unreadable index file: {exc}") from exc
    return index


# ---------------------------------------------------------------------------
# Byte pair encoding vocabulary
# ---------------------------------------------------------------------------


class BpeVocabulary:
    """Ordered merge rules over a base alphabet.

    Encoding starts from single characters and applies the earliest-learned
    applicable merge until none applies, the standard greedy BPE encoder.
    """

    def __init__(self, merges: list[tuple[str, str]], alphabet: Optional[set[str]] = None):
        self.merges = list(merges)
        self.ranks = {pair: i for i, pair in enumerate(self.merges)}
        self.alphabet = set(alphabet) if alphabet is not None else {
            c for pair in merges for c in (pair[0] + pair[1])
        }

    def encode(self, word: str) -> list[str]:
        pieces = list(word)
        if not pieces:
            return []
        while len(pieces) > 1:
            best = None
            best_rank = None
            for i in range(len(pieces) - 1):
                rank = self.ranks.get((pieces[i], pieces[i + 1]))
                if rank is not None and (best_rank is None or rank < best_rank):
                    best, best_rank = i, rank
            if best is None:
                break
            pieces[best : best + 2] = [pieces[best] + pieces[best + 1]]
        return pieces

    @classmethod
    def learn(cls, word_counts: dict[str, int], n_merges: int) -> "BpeVocabulary":
        """Learn merges from a weighted vocabulary (for fixtures and tests)."""
        words = {w: list(w) for w in word_counts}
        merges: list[tuple[str, str]] = []
        alphabet = {c for w in word_counts for c in w}
        for _ in range(n_merges):
            pair_counts: Counter = Counter()
            for w, pieces in words.items():
                c = word_counts[w]
                for i in range(len(pieces) - 1):
                    pair_counts[(pieces[i], pieces[i + 1])] += c
            if not pair_counts:
                break
            # deterministic: highest count, then lexicographic
            pair = min(pair_counts, key=lambda p: (-pair_counts[p], p))
            merges.append(pair)
            merged = pair[0] + pair[1]
            for w, pieces in words.items():
                i = 0
                while i < len(pieces) - 1:
                    if (pieces[i], pieces[i + 1]) == pair:
                        pieces[i : i + 2] = [merged]
                    else:
                        i += 1
        return cls(merges, alphabet)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "BpeVocabulary":
        """Read a merges file: one "left right" pair per line, # comments."""
        merges = []
        with Path(path).open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                parts = line.split(" ")
                if len(parts) != 2:
                    raise FormatError(f"{path}: bad merge rule {line!r}")
                merges.append((parts[0], parts[1]))
        return cls(merges)

    def save(self, path: Union[str, Path]) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            fh.write("#lcp-bpe v1\n")
            for a, b in self.merges:
                fh.write(f"{a} {b}\n")


def bpe_piece_counts(index: FrequencyIndex, bpe: BpeVocabulary) -> Counter:
    """Corpus frequency of every BPE piece.

    Each vocabulary word contributes its corpus count to every piece of its
    BPE split, so a piece's count is its term frequency under BPE-token
    counting of the corpus.
    """
    counts: Counter = Counter()
    for word, c in index.unigrams.items():
        for piece in bpe.encode(word):
            counts[piece] += c
    return counts


# ---------------------------------------------------------------------------
# Feature extraction
# ---------------------------------------------------------------------------


def _population_std(values: list[float]) -> float:
    mean = sum(values) / len(values)
    return math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))


def _aggregate(values: list[float], prefix: str) -> dict[str, float]:
    if not values:
        return {
            f"{prefix}_min": MISSING,
            f"{prefix}_max": MISSING,
            f"{prefix}_mean": MISSING,
            f"{prefix}_std": MISSING,
        }
    return {
        f"{prefix}_min": min(values),
        f"{prefix}_max": max(values),
        f"{prefix}_mean": sum(values) / len(values),
        f"{prefix}_std": _population_std(values),
    }


def frequency_features(
    index: FrequencyIndex,
    bpe: Optional[BpeVocabulary],
    sentence: str,
    target: str,
    piece_counts: Optional[Counter] = None,
) -> dict[str, float]:
    """The main-corpus frequency features for one target in its context.

    Returns tf, tf_lemma, tf_summed_bpe, the summed context bigram/trigram
    frequencies around the target, their IDF analogues, and num_OOV. If the
    target does not occur in the sentence under the pipeline tokenizer the
    n-gram features are missing and ``target_missing`` is flagged.
    """
    toks = tokenize(sentence)
    target_toks = tokenize(target)
    tgt = target_toks[0] if target_toks else ""
    feats: dict[str, float] = {}
    feats["tf"] = float(index.tf(tgt))
    feats["tf_lemma"] = float(index.tf(lemmatize(tgt)))
    if bpe is not None:
        pieces = bpe.encode(tgt)
        if piece_counts is None:
            piece_counts = bpe_piece_counts(index, bpe)
        feats["tf_summed_bpe"] = float(sum(piece_counts.get(p, 0) for p in pieces))
    else:
        feats["tf_summed_bpe"] = MISSING
    feats["tfidf"] = index.tfidf(tgt)
    feats["num_OOV"] = float(sum(1 for t in toks if index.tf(t) == 0))

    try:
        pos = toks.index(tgt)
        found = True
    except ValueError:
        found = False
    feats["target_missing"] = 0.0 if found else 1.0
    if not found:
        for name in ("tf_ngram_2", "tf_ngram_3", "tfidf_ngram_2", "tfidf_ngram_3"):
            feats[name] = MISSING
        return feats

    bigrams = _context_ngrams(toks, pos, 2)
    trigrams = _context_ngrams(toks, pos, 3)
    feats["tf_ngram_2"] = float(sum(index.ngram_count(g) for g in bigrams))
    feats["tf_ngram_3"] = float(sum(index.ngram_count(g) for g in trigrams))
    # IDF analogue of an n-gram: mean of the member tokens' IDFs (document
    # frequencies are kept per token only, so this is the derived form)
    feats["tfidf_ngram_2"] = sum(
        index.ngram_count(g) * sum(index.idf(t) for t in g) / len(g) for g in bigrams
    )
    feats["tfidf_ngram_3"] = sum(
        index.ngram_count(g) * sum(index.idf(t) for t in g) / len(g) for g in trigrams
    )
    return feats


def _context_ngrams(toks: list[str], pos: int, n: int) -> list[tuple[str, ...]]:
    """All n-grams of the sentence that contain the token at ``pos``."""
    grams = []
    for start in range(pos - n + 1, pos + 1):
        if start < 0 or start + n > len(toks):
            continue
        grams.append(tuple(toks[start : start + n]))
    return grams


def google_ngram_features(
    counts_source,
    sentence: str,
    target: str,
) -> dict[str, float]:
    """Secondary-corpus n-gram features around the target.

    ``counts_source`` is anything with a ``lookup(phrase) -> Optional[int]``
    method (a local table or remote client). Edge positions and failed
    lookups yield missing values; aggregates run over the available counts.
    """
    toks = tokenize(sentence)
    target_toks = tokenize(target)
    tgt = target_toks[0] if target_toks else ""
    feats: dict[str, float] = {}

    def look(tokens: tuple[str, ...]) -> float:
        count = counts_source.lookup(" ".join(tokens))
        return MISSING if count is None else float(count)

    feats["google_ngram_1"] = look((tgt,)) if tgt else MISSING
    try:
        pos = toks.index(tgt)
    except ValueError:
        pos = -1
    for n, slots in ((2, ("head", "tail")), (3, ("head", "mid", "tail"))):
        values = []
        for offset, slot in enumerate(slots):
            start = pos - (n - 1) + offset
            if pos < 0 or start < 0 or start + n > len(toks):
                feats[f"google_ngram_{n}_{slot}"] = MISSING
                continue
            v = look(tuple(toks[start : start + n]))
            feats[f"google_ngram_{n}_{slot}"] = v
            if not math.isnan(v):
                values.append(v)
        feats.update(_aggregate(values, f"google_ngram_{n}"))
    return feats


# ---------------------------------------------------------------------------
# External frequency tables
# ---------------------------------------------------------------------------

SUBTLEXUS_FIELDS = ("FREQcount", "CDcount", "FREQlow", "CDlow", "SUBTLWF", "SUBTLCD")


@dataclass
class ExternalFreqTable:
    """Per-word numeric records from a published frequency list."""

    source: str
    records: dict[str, dict[str, float]]

    def get(self, word: str) -> tuple[Optional[dict[str, float]], bool]:
        """Exact-case lookup first, then lowercase; returns (record, exact)."""
        if word in self.records:
            return self.records[word], True
        lowered = word.lower()
        if lowered in self.records:
            return self.records[lowered], False
        return None, False


def load_subtlexus(path: Union[str, Path]) -> ExternalFreqTable:
    """Read the published SUBTLEXus tab-separated table (header row)."""
    records = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        try:
            word_col = header.index("Word")
        except ValueError:
            word_col = 0
        col_idx = {}
        for name in SUBTLEXUS_FIELDS:
            if name not in header:
                raise FormatError(f"{path}: missing SUBTLEXus column {name}")
            col_idx[name] = header.index(name)
        for lineno, line in enumerate(fh, start=2):
            fields = line.rstrip("\n").split("\t")
            if len(fields) != len(header):
                raise FormatError(f"{path}:{lineno}: wrong column count")
            rec = {}
            for name, idx in col_idx.items():
                value = float(fields[idx])
                if value < 0:
                    raise FormatError(f"{path}:{lineno}: negative {name}")
                rec[name] = value
            records[fields[word_col]] = rec
    return ExternalFreqTable("subtlexus", records)


def load_bnc(path: Union[str, Path]) -> ExternalFreqTable:
    """Read a "word<TAB>count" frequency list."""
    records = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError(f"{path}:{lineno}: expected word<TAB>count")
            count = float(parts[1])
            if count < 0:
                raise FormatError(f"{path}:{lineno}: negative count")
            records[parts[0]] = {"bnc_frequency": count}
    return ExternalFreqTable("bnc", records)


def external_frequency_features(
    tables: list[ExternalFreqTable],
    target: str,
) -> dict[str, float]:
    """SUBTLEXus and BNC lookups with absence flags.

    Absent words get zeros (frequency semantics) plus a per-source missing
    flag; a lowercase-only match clears the exact-case flag.
    """
    feats: dict[str, float] = {}
    for table in tables:
        rec, exact = table.get(target)
        if table.source == "subtlexus":
            for name in SUBTLEXUS_FIELDS:
                feats[name] = rec[name] if rec else 0.0
            feats["subtlexus_missing"] = 0.0 if rec else 1.0
            feats["subtlexus_exact_case"] = 1.0 if (rec and exact) else 0.0
        elif table.source == "bnc":
            feats["bnc_frequency"] = rec["bnc_frequency"] if rec else 0.0
            feats["bnc_missing"] = 0.0 if rec else 1.0
        else:
            raise ValueError(f"unknown external table source {table.source!r}")
    return feats


class LocalNgramTable:
    """Phrase -> count table usable wherever a remote n-gram client is."""

    def __init__(self, counts: dict[str, int]):
        self.counts = dict(counts)

    def lookup(self, phrase: str) -> Optional[int]:
        return self.counts.get(phrase, 0)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "LocalNgramTable":
        counts = {}
        with Path(path).open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                phrase, _, count = line.rpartition("\t")
                if not phrase:
                    raise FormatError(f"{path}:{lineno}: expected phrase<TAB>count")
                counts[phrase] = int(count)
        return cls(counts)
