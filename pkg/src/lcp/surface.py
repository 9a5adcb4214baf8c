"""Lexical features of the target word and sentence-level readability metrics.

All metrics are computed from the pipeline tokenizer and the syllable
heuristic below, with the sentence count pinned to 1 (single-sentence
contexts). Formula constants are the published ones and are authoritative
as written here.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Optional, Union

from .corpus import MISSING
from .text import tokenize

VOWELS = set("aeiouy")

READABILITY_METRICS = (
    "automated_readability_index",
    "avg_character_per_word",
    "avg_letter_per_word",
    "avg_syllables_per_word",
    "char_count",
    "coleman_liau_index",
    "crawford",
    "fernandez_huerta",
    "flesch_kincaid_grade",
    "flesch_reading_ease",
    "gutierrez_polini",
    "letter_count",
    "lexicon_count",
    "linsear_write_formula",
    "lix",
    "polysyllabcount",
    "reading_time",
    "rix",
    "syllable_count",
    "szigriszt_pazos",
    "SMOGIndex",
    "DaleChallIndex",
)


def count_syllables(word: str) -> int:
    """Vowel-group heuristic syllable count.

    Counts maximal runs of a/e/i/o/u/y, subtracts a silent trailing 'e'
    (kept when the word ends in consonant + "le"), and clamps at 1.
    """
    w = word.lower()
    runs = 0
    prev_vowel = False
    for ch in w:
        is_vowel = ch in VOWELS
        if is_vowel and not prev_vowel:
            runs += 1
        prev_vowel = is_vowel
    if (
        w.endswith("e")
        and not (len(w) >= 3 and w.endswith("le") and w[-3] not in VOWELS)
        and runs > 0
    ):
        runs -= 1
    return max(runs, 1)


def lexical_features(target: str) -> dict[str, float]:
    """word_len, num_syllables, is_acronym for the target word."""
    return {
        "word_len": float(len(target)),
        "num_syllables": float(count_syllables(target)),
        "is_acronym": float(len(target) >= 2 and target.isalpha() and target.isupper()),
    }


def load_familiar_words(path: Union[str, Path]) -> frozenset[str]:
    """Familiar-word list: UTF-8, one lowercase word per line."""
    words = set()
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if word and not word.startswith("#"):
                words.add(word.lower())
    return frozenset(words)


def default_familiar_words() -> frozenset[str]:
    """The familiar-word list bundled with the package."""
    return load_familiar_words(Path(__file__).parent / "data" / "familiar_words.txt")


def readability_features(
    sentence: str,
    familiar_words: Optional[frozenset[str]] = None,
) -> dict[str, float]:
    """The 22 sentence-level readability metrics.

    With W = words, S = sentences (pinned to 1), Y = syllables, L = letters,
    P = polysyllabic (>= 3 syllable) words and D = words absent from the
    familiar list:

      flesch_reading_ease       = 206.835 - 1.015*(W/S) - 84.6*(Y/W)
      flesch_kincaid_grade      = 0.39*(W/S) + 11.8*(Y/W) - 15.59
      SMOGIndex                 = 1.0430*sqrt(P*30/S) + 3.1291
      coleman_liau_index        = 0.0588*(100L/W) - 0.296*(100S/W) - 15.8
      automated_readability_ix  = 4.71*(L/W) + 0.5*(W/S) - 21.43
      DaleChallIndex            = 0.1579*(100D/W) + 0.0496*(W/S)
                                  + 3.6365 iff 100D/W > 5
      linsear_write_formula     = r/2 if r > 20 else (r-2)/2,
                                  r = (1*easy + 3*hard)/S, hard: >= 3 syllables
      lix                       = W/S + 100*(words > 6 chars)/W
      rix                       = (words > 6 chars)/S
      reading_time              = char_count * 14.69  (milliseconds)
      crawford                  = -0.205*(100S/W) + 0.049*(100Y/W) - 3.407
      fernandez_huerta          = 206.84 - 0.60*(100Y/W) - 1.02*(W/S)
      gutierrez_polini          = 95.2 - 9.7*(L/W) - 0.35*(W/S)
      szigriszt_pazos           = 206.835 - 62.3*(Y/W) - (W/S)

    char_count counts non-whitespace characters of the raw sentence and
    letter_count its alphabetic characters. An empty token list yields a
    record of missing values.
    """
    if familiar_words is None:
        familiar_words = default_familiar_words()
    words = tokenize(sentence)
    if not words:
        return {name: MISSING for name in READABILITY_METRICS}
    w = float(len(words))
    s = 1.0
    syllables = [count_syllables(t) for t in words]
    y = float(sum(syllables))
    char_count = float(sum(1 for ch in sentence if not ch.isspace()))
    letter_count = float(sum(1 for ch in sentence if ch.isalpha()))
    poly = float(sum(1 for c in syllables if c >= 3))
    long_words = float(sum(1 for t in words if len(t) > 6))
    difficult = float(sum(1 for t in words if t not in familiar_words))

    dale_chall = 0.1579 * (100.0 * difficult / w) + 0.0496 * (w / s)
    if 100.0 * difficult / w > 5.0:
        dale_chall += 3.6365

    easy = w - poly
    linsear_raw = (easy + 3.0 * poly) / s
    linsear = linsear_raw / 2.0 if linsear_raw > 20.0 else (linsear_raw - 2.0) / 2.0

    return {
        "automated_readability_index": 4.71 * (letter_count / w) + 0.5 * (w / s) - 21.43,
        "avg_character_per_word": char_count / w,
        "avg_letter_per_word": letter_count / w,
        "avg_syllables_per_word": y / w,
        "char_count": char_count,
        "coleman_liau_index": 0.0588 * (100.0 * letter_count / w)
        - 0.296 * (100.0 * s / w)
        - 15.8,
        "crawford": -0.205 * (100.0 * s / w) + 0.049 * (100.0 * y / w) - 3.407,
        "fernandez_huerta": 206.84 - 0.60 * (100.0 * y / w) - 1.02 * (w / s),
        "flesch_kincaid_grade": 0.39 * (w / s) + 11.8 * (y / w) - 15.59,
        "flesch_reading_ease": 206.835 - 1.015 * (w / s) - 84.6 * (y / w),
        "gutierrez_polini": 95.2 - 9.7 * (letter_count / w) - 0.35 * (w / s),
        "letter_count": letter_count,
        "lexicon_count": w,
        "linsear_write_formula": linsear,
        "lix": w / s + 100.0 * long_words / w,
        "polysyllabcount": poly,
        "reading_time": char_count * 14.69,
        "rix": long_words / s,
        "syllable_count": y,
        "szigriszt_pazos": 206.835 - 62.3 * (y / w) - (w / s),
        "SMOGIndex": 1.0430 * math.sqrt(poly * 30.0 / s) + 3.1291,
        "DaleChallIndex": dale_chall,
    }
