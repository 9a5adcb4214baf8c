"""Regenerate the committed test fixtures.

Run from the repository root:  python tests/data/make_fixtures.py
Everything is seeded; outputs are deterministic and committed so the tests
never depend on this script at runtime.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from pathlib import Path

from lcp.corpus import BpeVocabulary
from lcp.syntax import sentence_key
from lcp.text import tokenize

HERE = Path(__file__).parent

COMMON = """the of and a to in is you that it he was for on are as with his
they i at be this have from or one had by word but not what all were we when
your can said there use an each which she do how their if will up other about
out many then them these so some her would make like him into time has look
two more write go see number no way could people my than first water been
call who its now find long down day did get come made may part over new sound
take only little work know place year live me back give most very after thing
our just name good sentence man think say great where help through much
before line right too mean old any same tell boy follow came want show also
around form three small set put end does another well large must big even
such because turn here why ask went men read need land different home us move
try kind hand picture again change off play spell air away animal house point
page letter mother answer found study still learn should world high every
near add food between own below country plant last school father keep tree
never start city earth eye light thought head under story saw left dont few
while along might close something seem next hard open example begin life
always those both paper together got group often run""".split()

BIBLE = """covenant righteousness abomination tribulation exhortation
consolation proclamation commandment inheritance testimony sanctuary
tabernacle iniquity transgression supplication lamentation deliverance
redemption atonement firmament moses paul jerusalem israel pharaoh prophet
disciple apostle psalm gospel""".split()

BIOMED = """metabolism photosynthesis chromosome epidemiology cardiovascular
respiratory diagnosis syndrome protein enzyme molecule bacteria vaccine
therapy clinical receptor membrane neuron pathogenesis cytoplasm mitochondria
antibody antigen genome phenotype lesion biopsy carcinoma dna rna""".split()

EUROPARL = """parliament jurisdiction bureaucracy constitutional emancipation
directive regulation amendment committee delegation negotiation ratification
referendum legislation presidency commissioner rapporteur enlargement
subsidiarity brussels strasbourg luxembourg treaty quorum plenary motion
debate session eu mep""".split()

PROPER = {"moses", "paul", "jerusalem", "israel", "pharaoh", "brussels",
          "strasbourg", "luxembourg"}
ACRONYMS = {"dna", "rna", "eu", "mep"}


def surface_form(word: str, position: int) -> str:
    if word in ACRONYMS:
        return word.upper()
    if word in PROPER:
        return word.capitalize()
    if position == 0:
        return word.capitalize()
    return word


def zipf_weights(words: list[str], offset: int = 0) -> list[float]:
    return [1.0 / (rank + 1 + offset) for rank in range(len(words))]


def make_sentence(rng: random.Random, flavor: list[str]) -> list[str]:
    n = rng.randint(6, 12)
    vocab = COMMON + flavor
    weights = zipf_weights(COMMON) + [0.02] * len(flavor)
    toks = rng.choices(vocab, weights=weights, k=n)
    return [surface_form(t, i) for i, t in enumerate(toks)]


def heuristic_phones(word: str) -> list[str]:
    """Letter-to-phoneme mapping good enough for fixture pronunciations."""
    table = {
        "a": "AE", "b": "B", "c": "K", "d": "D", "e": "EH", "f": "F",
        "g": "G", "h": "HH", "i": "IH", "j": "JH", "k": "K", "l": "L",
        "m": "M", "n": "N", "o": "AA", "p": "P", "q": "K", "r": "R",
        "s": "S", "t": "T", "u": "AH", "v": "V", "w": "W", "x": "K",
        "y": "IY", "z": "Z",
    }
    vowels = {"AE", "EH", "IH", "AA", "AH", "IY"}
    phones = [table[ch] for ch in word if ch in table]
    out = []
    for p in phones:
        if out and p == out[-1]:
            continue
        out.append(p)
    return out or ["AH"]


# Penn tag assignment for fixture parse trees.
DETS = {"the", "a", "an", "this", "that", "these", "those"}
PREPS = {"of", "in", "on", "at", "by", "with", "from", "to", "for", "under",
         "between", "through", "over", "below", "near", "around", "about"}
PRONOUNS = {"i", "you", "he", "she", "it", "we", "they", "me", "him", "her",
            "us", "them"}
CONJ = {"and", "or", "but", "because", "while", "if", "so"}


def tag_of(word: str, rng: random.Random) -> str:
    w = word.lower()
    if w in DETS:
        return "DT"
    if w in PREPS:
        return "IN"
    if w in PRONOUNS:
        return "PRP"
    if w in CONJ:
        return "CC"
    if word.isupper() and len(word) >= 2:
        return "NNP"
    if word[0].isupper():
        return "NNP"
    if w.endswith("ing"):
        return "VBG"
    if w.endswith("ed"):
        return "VBD"
    if w.endswith("ly"):
        return "RB"
    if w.endswith("s") and len(w) > 3:
        return "NNS"
    return rng.choice(["NN", "NN", "NN", "JJ", "VB", "VBD", "RB"])


def build_tree(tokens: list[str], rng: random.Random) -> str:
    def span(toks: list[str], depth: int) -> str:
        if len(toks) == 1:
            return f"({tag_of(toks[0], rng)} {toks[0]})"
        if len(toks) <= 3 or depth >= 4:
            inner = " ".join(f"({tag_of(t, rng)} {t})" for t in toks)
            label = rng.choice(["NP", "VP", "PP"])
            return f"({label} {inner})"
        cut = rng.randint(1, len(toks) - 1)
        left = span(toks[:cut], depth + 1)
        right = span(toks[cut:], depth + 1)
        label = rng.choice(["NP", "VP", "PP", "S"])
        return f"({label} {left} {right})"

    return f"(S {span(tokens, 1)})" if len(tokens) > 1 else f"(S {span(tokens, 1)})"


def main() -> None:
    rng = random.Random(2021)
    HERE.mkdir(parents=True, exist_ok=True)

    flavors = {"bible": BIBLE, "biomed": BIOMED, "europarl": EUROPARL}
    corpus_lines: list[list[str]] = []
    line_flavor: list[str] = []
    for i in range(1000):
        flavor = ("bible", "biomed", "europarl")[i % 3]
        corpus_lines.append(make_sentence(rng, flavors[flavor]))
        line_flavor.append(flavor)
    with (HERE / "corpus_1k.txt").open("w", encoding="utf-8") as fh:
        for toks in corpus_lines:
            fh.write(" ".join(toks) + ".\n")

    tf = Counter()
    for toks in corpus_lines:
        tf.update(tokenize(" ".join(toks)))
    max_tf = max(tf.values())

    def label_of(word: str) -> float:
        w = word.lower()
        rarity = 1.0 - math.log1p(tf.get(w, 0)) / math.log1p(max_tf)
        value = 0.04 + 0.45 * min(len(w), 14) / 14 + 0.42 * rarity
        value += rng.uniform(-0.05, 0.05)
        return round(min(1.0, max(0.0, value)), 6)

    def pick_target(toks: list[str]) -> int:
        # bias toward content words away from sentence start
        candidates = [i for i in range(1, len(toks)) if len(toks[i]) > 2]
        if not candidates:
            candidates = list(range(len(toks)))
        weights = [len(toks[i]) for i in candidates]
        return rng.choices(candidates, weights=weights, k=1)[0]

    # single-word train/test rows reuse corpus sentences
    def make_rows(n: int, start: int, prefix: str, labeled: bool) -> list[str]:
        rows = []
        used = rng.sample(range(len(corpus_lines)), n)
        for j, line_idx in enumerate(used):
            toks = corpus_lines[line_idx]
            sentence = " ".join(toks) + "."
            t_idx = pick_target(toks)
            target = toks[t_idx]
            row = [f"{prefix}{start + j:04d}", line_flavor[line_idx], sentence, target]
            if labeled:
                row.append(str(label_of(target)))
            rows.append("\t".join(row))
        return rows

    header5 = "id\tcorpus\tsentence\ttoken\tcomplexity"
    header4 = "id\tcorpus\tsentence\ttoken"
    train_rows = make_rows(200, 0, "tr", labeled=True)
    with (HERE / "complex_train_200.tsv").open("w", encoding="utf-8") as fh:
        fh.write(header5 + "\n" + "\n".join(train_rows) + "\n")

    test_rows = make_rows(35, 0, "te", labeled=True)
    # a few rows with out-of-corpus words exercise OOV/missing paths
    novel = [
        ("te9000", "biomed", "The zymurgy of quixotic lymphocytes perplexed everyone.", "zymurgy"),
        ("te9001", "bible", "A seraphim descended upon the ziggurat quietly.", "seraphim"),
        ("te9002", "europarl", "The ombudsman vetoed the quango unanimously.", "ombudsman"),
        ("te9003", "biomed", "Histopathology confirmed the neoplasm swiftly.", "neoplasm"),
        ("te9004", "bible", "They sang a doxology before the offertory.", "doxology"),
    ]
    for sid, corpus, sentence, target in novel:
        test_rows.append("\t".join([sid, corpus, sentence, target, str(label_of(target))]))
    with (HERE / "complex_test_40.tsv").open("w", encoding="utf-8") as fh:
        fh.write(header5 + "\n" + "\n".join(test_rows) + "\n")
    with (HERE / "complex_test_40_unlabeled.tsv").open("w", encoding="utf-8") as fh:
        fh.write(header4 + "\n")
        for row in test_rows:
            fh.write("\t".join(row.split("\t")[:4]) + "\n")

    def make_mwe_rows(n: int, prefix: str) -> list[str]:
        rows = []
        used = rng.sample(range(len(corpus_lines)), n)
        for j, line_idx in enumerate(used):
            toks = corpus_lines[line_idx]
            sentence = " ".join(toks) + "."
            i = rng.randint(0, len(toks) - 2)
            head, tail = toks[i], toks[i + 1]
            label = round(min(1.0, max(0.0, (label_of(head) + label_of(tail)) / 2)), 6)
            rows.append("\t".join(
                [f"{prefix}{j:04d}", line_flavor[line_idx], sentence,
                 f"{head} {tail}", str(label)]
            ))
        return rows

    with (HERE / "complex_mwe_train_60.tsv").open("w", encoding="utf-8") as fh:
        fh.write(header5 + "\n" + "\n".join(make_mwe_rows(60, "mtr")) + "\n")
    with (HERE / "complex_mwe_test_20.tsv").open("w", encoding="utf-8") as fh:
        fh.write(header5 + "\n" + "\n".join(make_mwe_rows(20, "mte")) + "\n")

    # pronouncing dictionary over the whole vocabulary
    vocab = sorted(tf)
    with (HERE / "cmudict_fixture.txt").open("w", encoding="utf-8") as fh:
        fh.write(";;; fixture pronouncing dictionary (heuristic phones)\n")
        for word in vocab:
            if word in ("zymurgy",):  # leave one word out-of-dictionary
                continue
            phones = " ".join(heuristic_phones(word))
            fh.write(f"{word.upper()}  {phones}\n")
        fh.write("READ(1)  R EH1 D\n")

    # embedding table, dim 10; a handful of words left out for OOV flags
    emb_rng = random.Random(7)
    skipped = set(rng.sample(vocab, 6))
    with (HERE / "glove_fixture.txt").open("w", encoding="utf-8") as fh:
        for word in vocab:
            if word in skipped:
                continue
            vec = [round(emb_rng.gauss(0.0, 0.5), 4) for _ in range(10)]
            fh.write(word + " " + " ".join(str(v) for v in vec) + "\n")

    # external frequency tables
    with (HERE / "subtlexus_fixture.tsv").open("w", encoding="utf-8") as fh:
        fh.write("Word\tFREQcount\tCDcount\tFREQlow\tCDlow\tSUBTLWF\tSUBTLCD\n")
        for word in vocab:
            if rng.random() < 0.12:
                continue
            base = tf[word] * 17
            surface = word.capitalize() if word in PROPER else word
            fh.write(
                f"{surface}\t{base}\t{max(1, base // 5)}\t{base}\t{max(1, base // 5)}"
                f"\t{round(base / 51.0, 2)}\t{round(min(100.0, base / 7.0), 2)}\n"
            )

    with (HERE / "bnc_fixture.tsv").open("w", encoding="utf-8") as fh:
        for word in vocab:
            if rng.random() < 0.15:
                continue
            fh.write(f"{word}\t{tf[word] * 29}\n")

    # phrase-count table from the sample sentences (some rows dropped)
    phrase_counts = Counter()
    sentences = set()
    for path in ("complex_train_200.tsv", "complex_test_40.tsv",
                 "complex_mwe_train_60.tsv", "complex_mwe_test_20.tsv"):
        with (HERE / path).open("r", encoding="utf-8") as fh:
            next(fh)
            for line in fh:
                sentences.add(line.rstrip("\n").split("\t")[2])
    for sentence in sorted(sentences):
        toks = tokenize(sentence)
        for n in (1, 2, 3):
            for i in range(len(toks) - n + 1):
                phrase_counts[" ".join(toks[i : i + n])] += 1
    with (HERE / "google_ngrams_local.tsv").open("w", encoding="utf-8") as fh:
        for phrase in sorted(phrase_counts):
            if rng.random() < 0.1:
                continue
            fh.write(f"{phrase}\t{phrase_counts[phrase] * 1000}\n")

    # precomputed parse trees for the sample sentences (novel rows excluded)
    tree_rng = random.Random(99)
    with (HERE / "parses.tsv").open("w", encoding="utf-8") as fh:
        for sentence in sorted(sentences):
            if "zymurgy" in sentence or "seraphim" in sentence:
                continue  # degradation path: parse unavailable
            raw_tokens = sentence.rstrip(".").split(" ")
            fh.write(f"{sentence_key(sentence)}\t{build_tree(raw_tokens, tree_rng)}\n")

    # BPE merges learned from the corpus vocabulary
    bpe = BpeVocabulary.learn(dict(tf), n_merges=200)
    bpe.save(HERE / "bpe_merges.txt")

    # precomputed per-sample embeddings and perplexity columns
    ids = [r.split("\t")[0] for r in train_rows + test_rows]
    vec_rng = random.Random(31)
    with (HERE / "elmo_fixture.tsv").open("w", encoding="utf-8") as fh:
        for sid in ids:
            vec = [round(vec_rng.gauss(0, 1), 4) for _ in range(8)]
            fh.write(sid + "\t" + " ".join(str(v) for v in vec) + "\n")
    with (HERE / "infersent_fixture.tsv").open("w", encoding="utf-8") as fh:
        for sid in ids:
            vec = [round(vec_rng.gauss(0, 1), 4) for _ in range(12)]
            fh.write(sid + "\t" + " ".join(str(v) for v in vec) + "\n")

    rows_by_id = {}
    for row in train_rows + test_rows:
        fields = row.split("\t")
        rows_by_id[fields[0]] = fields
    with (HERE / "ppl_fixture.tsv").open("w", encoding="utf-8") as fh:
        fh.write("id\tppl\tppl_aspect_only\n")
        for sid, fields in rows_by_id.items():
            toks = tokenize(fields[2])
            mean_nll = sum(math.log1p(max_tf / max(tf.get(t, 0), 1)) for t in toks) / len(toks)
            ppl = round(math.exp(mean_nll / 3), 4)
            target_nll = math.log1p(max_tf / max(tf.get(fields[3].lower(), 0), 1))
            fh.write(f"{sid}\t{ppl}\t{round(math.exp(target_nll / 3), 4)}\n")

    # neural predictions: gold + seeded noise, for ensemble/evaluate tests
    noise_rng = random.Random(17)
    for src, dst in (
        ("complex_test_40.tsv", "neural_predictions_test.tsv"),
        ("complex_mwe_test_20.tsv", "neural_predictions_mwe.tsv"),
    ):
        with (HERE / src).open("r", encoding="utf-8") as fh:
            next(fh)
            rows = [line.rstrip("\n").split("\t") for line in fh if line.strip()]
        with (HERE / dst).open("w", encoding="utf-8") as fh:
            fh.write("id\tprediction\n")
            for fields in rows:
                p = min(1.0, max(0.0, float(fields[4]) + noise_rng.gauss(0, 0.08)))
                fh.write(f"{fields[0]}\t{round(p, 6)}\n")

    write_wordnet_fixture()
    print("fixtures written to", HERE)


WORDNET_DATA = """\
  1 This fixture mimics the WordNet 3.0 data.noun layout.
00001740 03 n 01 entity 0 004 ~ 00015388 n 0000 ~ 01000000 n 0000 ~ 00600000 n 0000 ~ 00700000 n 0000 | that which is perceived or known to have its own distinct existence
00015388 05 n 01 animal 0 002 @ 00001740 n 0000 ~ 00028270 n 0000 | a living organism that feeds and moves; "the animal ran across the field"
00028270 05 n 01 mammal 0 004 @ 00015388 n 0000 ~ 00102840 n 0000 ~ 00107440 n 0000 ~ 00115000 n 0000 | an animal that feeds its young with milk
00102840 05 n 02 dog 0 domestic_dog 0 001 @ 00028270 n 0000 | a domesticated animal that barks; "the dog followed the boy home"
00107440 05 n 01 cat 0 001 @ 00028270 n 0000 | a small furry animal that purrs; "the cat sat on the mat"
00115000 05 n 01 horse 0 001 @ 00028270 n 0000 | a large animal that people ride
01000000 27 n 01 water 0 001 @ 00001740 n 0000 | a clear liquid that people drink; "she poured water from the well"
00600000 06 n 01 house 0 002 @ 00001740 n 0000 ~ 00800000 n 0000 | a building where people live; "the house stood on a hill"
00700000 18 n 01 king 0 001 @ 00001740 n 0000 | a man who rules a country; "the king wore a crown"
00800000 06 n 01 bank 0 001 @ 00600000 n 0000 | an institution where people keep money; "he took the money to the bank"
00900000 17 n 01 bank 1 001 @ 01000000 n 0000 | sloping land beside a body of flowing water; "people fished from the grassy bank of the river"
"""

WORDNET_INDEX = """\
  1 This fixture mimics the WordNet 3.0 index.noun layout.
animal n 1 2 @ ~ 1 0 00015388
bank n 2 1 @ 2 1 00800000 00900000
cat n 1 1 @ 1 0 00107440
dog n 1 1 @ 1 1 00102840
entity n 1 1 ~ 1 0 00001740
horse n 1 1 @ 1 0 00115000
house n 1 2 @ ~ 1 0 00600000
king n 1 1 @ 1 0 00700000
mammal n 1 2 @ ~ 1 0 00028270
water n 1 1 @ 1 0 01000000
"""


def write_wordnet_fixture() -> None:
    (HERE / "wordnet_data.noun").write_text(WORDNET_DATA, encoding="utf-8")
    (HERE / "wordnet_index.noun").write_text(WORDNET_INDEX, encoding="utf-8")


if __name__ == "__main__":
    main()
