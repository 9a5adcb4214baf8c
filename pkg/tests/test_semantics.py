import math
import re

import numpy as np
import pytest

from lcp.corpus import FormatError
from lcp.semantics import (
    EmbeddingTable,
    attach_precomputed,
    embedding_features,
    lesk_disambiguate,
    load_embedding_table,
    load_precomputed_embeddings,
    load_sense_inventory,
    wordnet_counts,
    wordnet_features,
)


class TestLoadEmbeddingTable:
    def test_two_line_fixture(self, tmp_path):
        path = tmp_path / "vecs.txt"
        path.write_text("cat 1.0 0.0 0.5\ndog 0.0 1.0 0.5\n", encoding="utf-8")
        table = load_embedding_table(path)
        assert table.dim == 3
        assert len(table) == 2
        assert list(table.get("cat")) == [1.0, 0.0, 0.5]

    def test_dim_mismatch_rejected(self, tmp_path, caplog):
        path = tmp_path / "vecs.txt"
        path.write_text("cat 1.0 0.0 0.5\nshort 1.0 0.0\n", encoding="utf-8")
        table = load_embedding_table(path)
        assert len(table) == 1
        assert table.get("short") is None

    def test_non_numeric_rejected(self, tmp_path):
        path = tmp_path / "vecs.txt"
        path.write_text("cat 1.0 zz 0.5\ndog 0.0 1.0 0.5\n", encoding="utf-8")
        table = load_embedding_table(path)
        assert table.get("cat") is None
        assert table.get("dog") is not None

    def test_duplicate_last_wins(self, tmp_path):
        path = tmp_path / "vecs.txt"
        path.write_text("cat 1.0\ncat 2.0\n", encoding="utf-8")
        table = load_embedding_table(path)
        assert table.get("cat")[0] == 2.0

    def test_empty_file_error(self, tmp_path):
        path = tmp_path / "vecs.txt"
        path.write_text("", encoding="utf-8")
        with pytest.raises(FormatError):
            load_embedding_table(path)


class TestEmbeddingFeatures:
    @pytest.fixture()
    def table(self):
        return EmbeddingTable(
            2, {"cat": np.array([1.0, 0.0]), "dog": np.array([0.0, 1.0])}
        )

    def test_singleton_context_mean(self, table):
        feats = embedding_features(table, "cat!", "zzz")
        assert feats["glove_context_0"] == 1.0
        assert feats["glove_context_1"] == 0.0
        assert feats["glove_context_missing"] == 0.0
        assert feats["glove_word_missing"] == 1.0
        assert feats["glove_word_0"] == 0.0

    def test_two_word_mean(self, table):
        feats = embedding_features(table, "cat dog", "cat")
        assert feats["glove_context_0"] == 0.5
        assert feats["glove_context_1"] == 0.5

    def test_all_oov_zero_with_flag(self, table):
        feats = embedding_features(table, "xxx yyy", "xxx")
        assert feats["glove_context_0"] == 0.0
        assert feats["glove_context_missing"] == 1.0

    def test_target_lowercased(self, table):
        feats = embedding_features(table, "The Cat", "Cat")
        assert feats["glove_word_0"] == 1.0
        assert feats["glove_word_missing"] == 0.0

    def test_permutation_invariant(self, table):
        a = embedding_features(table, "cat dog cat", "cat")
        b = embedding_features(table, "dog cat cat", "cat")
        assert a == b

    def test_column_count_independent_of_oov(self, table):
        a = embedding_features(table, "cat dog", "cat")
        b = embedding_features(table, "qqq", "zzz")
        assert set(a) == set(b)
        assert len([k for k in a if k.startswith("glove_word_") and not k.endswith("missing")]) == 2


class TestAttachPrecomputed:
    def test_full_join(self, tmp_path):
        path = tmp_path / "pre.tsv"
        path.write_text("s1\t1.0 2.0\ns2\t3.0 4.0\n", encoding="utf-8")
        vectors = load_precomputed_embeddings(path)
        cols = attach_precomputed(vectors, ["s1", "s2"], "elmo")
        assert cols["s1"]["elmo_0"] == 1.0
        assert cols["s2"]["elmo_1"] == 4.0

    def test_partial_join_missing_row(self, tmp_path):
        path = tmp_path / "pre.tsv"
        path.write_text("s1\t1.0 2.0\n", encoding="utf-8")
        cols = attach_precomputed(load_precomputed_embeddings(path), ["s1", "s2"], "x")
        assert math.isnan(cols["s2"]["x_0"])

    def test_dim_drift_is_format_error(self, tmp_path):
        path = tmp_path / "pre.tsv"
        path.write_text("s1\t1.0 2.0\ns2\t3.0\n", encoding="utf-8")
        with pytest.raises(FormatError, match="drift"):
            load_precomputed_embeddings(path)

    def test_row_order_irrelevant(self, tmp_path):
        a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
        a.write_text("s1\t1.0\ns2\t2.0\n", encoding="utf-8")
        b.write_text("s2\t2.0\ns1\t1.0\n", encoding="utf-8")
        ids = ["s1", "s2"]
        assert attach_precomputed(load_precomputed_embeddings(a), ids, "v") == \
            attach_precomputed(load_precomputed_embeddings(b), ids, "v")


def independent_edge_counts(data_path, offset):
    """Oracle: regex-scan the raw data file for one synset's pointers."""
    pattern = re.compile(r"^(\d{8}) ")
    for line in data_path.read_text(encoding="utf-8").splitlines():
        m = pattern.match(line)
        if not m or int(m.group(1)) != offset:
            continue
        head = line.split("|")[0].split()
        w_cnt = int(head[3], 16)
        p_start = 4 + 2 * w_cnt
        p_cnt = int(head[p_start])
        symbols = [head[p_start + 1 + 4 * i] for i in range(p_cnt)]
        return symbols.count("@"), symbols.count("~")
    raise AssertionError(f"offset {offset} not found")


class TestSenseInventory:
    def test_counts_match_independent_traversal(self, sense_inventory, data_dir):
        for offset in (102840, 28270, 1740, 800000):
            sid = f"{offset:08d}-n"
            hyper, hypo = wordnet_counts(sense_inventory, sid)
            expected = independent_edge_counts(data_dir / "wordnet_data.noun", offset)
            assert (hyper, hypo) == expected

    def test_leaf_has_no_hyponyms(self, sense_inventory):
        hyper, hypo = wordnet_counts(sense_inventory, "00102840-n")  # dog
        assert hypo == 0.0
        assert hyper == 1.0

    def test_root_has_no_hypernyms(self, sense_inventory):
        hyper, hypo = wordnet_counts(sense_inventory, "00001740-n")  # entity
        assert hyper == 0.0
        assert hypo == 4.0

    def test_none_synset_missing(self, sense_inventory):
        hyper, hypo = wordnet_counts(sense_inventory, None)
        assert math.isnan(hyper) and math.isnan(hypo)

    def test_transitive_closure_option(self, sense_inventory):
        hyper, _ = wordnet_counts(sense_inventory, "00102840-n", transitive=True)
        # dog -> mammal -> animal -> entity
        assert hyper == 3.0

    def test_dangling_edge_rejected(self, tmp_path):
        data = tmp_path / "data.noun"
        data.write_text(
            "00000001 03 n 01 thing 0 001 @ 09999999 n 0000 | a thing\n",
            encoding="utf-8",
        )
        index = tmp_path / "index.noun"
        index.write_text("thing n 1 1 @ 1 0 00000001\n", encoding="utf-8")
        with pytest.raises(FormatError, match="unknown synset"):
            load_sense_inventory([data], [index])


class TestLesk:
    def test_single_synset_always_wins(self, sense_inventory):
        sid = lesk_disambiguate(sense_inventory, "dog", "completely unrelated words")
        assert sid == "00102840-n"

    def test_overlap_decides(self, sense_inventory):
        money = lesk_disambiguate(sense_inventory, "bank", "They kept money at the bank")
        river = lesk_disambiguate(sense_inventory, "bank", "She sat on the bank of the river")
        assert money == "00800000-n"
        assert river == "00900000-n"

    def test_zero_overlap_first_in_order(self, sense_inventory):
        sid = lesk_disambiguate(sense_inventory, "bank", "zzz qqq")
        assert sid == "00800000-n"  # dictionary order tie-break

    def test_no_synsets_none(self, sense_inventory):
        assert lesk_disambiguate(sense_inventory, "xylophone", "anything") is None

    def test_context_multiplicity_irrelevant(self, sense_inventory):
        a = lesk_disambiguate(sense_inventory, "bank", "money money money bank")
        b = lesk_disambiguate(sense_inventory, "bank", "money bank")
        assert a == b

    def test_wordnet_features_wrapper(self, sense_inventory):
        feats = wordnet_features(sense_inventory, "the dog barked", "dog")
        assert feats["num_hypernyms"] == 1.0
        assert feats["num_hyponyms"] == 0.0
        missing = wordnet_features(sense_inventory, "context", "xylophone")
        assert math.isnan(missing["num_hypernyms"])
