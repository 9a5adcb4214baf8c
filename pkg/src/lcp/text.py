"""Shared text primitives: the pipeline tokenizer and a rule-based lemmatizer.

Every module that counts, looks up, or aggregates over words goes through
:func:`tokenize` so that corpus statistics and per-sample features agree on
what a token is.
"""

from __future__ import annotations

import re

TOKENIZER_ID = "lower-alnum-v1"

# Runs of alphanumerics, allowing apostrophes/hyphens only word-internally
# ("don't", "state-of-the-art"). Underscore is excluded on purpose.
_TOKEN_RE = re.compile(r"[^\W_]+(?:['\-][^\W_]+)*", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumerics, keeping internal ' and -."""
    return _TOKEN_RE.findall(text.lower())


# Ordered longest-first; applied once. Each rule: (suffix, replacement,
# minimum stem length after stripping).
_SUFFIX_RULES = [
    ("sses", "ss", 3),
    ("ies", "y", 2),
    ("ied", "y", 2),
    ("ing", "", 3),
    ("edly", "", 3),
    ("ed", "", 3),
    ("es", "e", 3),
    ("s", "", 3),
]

# Words the suffix rules would mangle; checked before any stripping.
_EXCEPTIONS = {
    "is": "is",
    "was": "was",
    "has": "has",
    "his": "his",
    "this": "this",
    "its": "its",
    "as": "as",
    "us": "us",
    "men": "man",
    "women": "woman",
    "children": "child",
    "feet": "foot",
    "teeth": "tooth",
    "geese": "goose",
    "mice": "mouse",
    "people": "person",
    "ran": "run",
    "went": "go",
    "said": "say",
    "does": "do",
    "goes": "go",
    "being": "be",
    "been": "be",
    "series": "series",
    "species": "species",
    "news": "news",
    "yes": "yes",
    "thus": "thus",
    "less": "less",
    "unless": "unless",
    "during": "during",
    "nothing": "nothing",
    "something": "something",
    "anything": "anything",
    "everything": "everything",
    "king": "king",
    "thing": "thing",
    "ring": "ring",
    "spring": "spring",
    "string": "string",
    "morning": "morning",
    "evening": "evening",
}


def lemmatize(word: str) -> str:
    """Suffix-stripping morphological normalizer.

    Deterministic and dictionary-free apart from a small exception list;
    meant to collapse plain inflection (plurals, -ed, -ing), not to be a
    full lemmatizer.
    """
    w = word.lower()
    if w in _EXCEPTIONS:
        return _EXCEPTIONS[w]
    if "'" in w:
        # possessives and contractions: keep the part before the apostrophe
        w = w.split("'", 1)[0]
        if w in _EXCEPTIONS:
            return _EXCEPTIONS[w]
    for suffix, repl, min_stem in _SUFFIX_RULES:
        if w.endswith(suffix):
            stem = w[: len(w) - len(suffix)]
            if len(stem) >= min_stem:
                candidate = stem + repl
                # doubled final consonant from -ing/-ed ("sitting" -> "sit")
                if (
                    repl == ""
                    and len(candidate) >= 3
                    and candidate[-1] == candidate[-2]
                    and candidate[-1] not in "aeiouls"
                ):
                    candidate = candidate[:-1]
                return candidate
            break
    return w
