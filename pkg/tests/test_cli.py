import json
import math
from pathlib import Path

import numpy as np
import pytest
import yaml

from lcp.cli import main

DATA = Path(__file__).parent / "data"


def write_config(path: Path, **overrides) -> Path:
    config = {
        "seed": 7,
        "paths": {
            "train_tsv": str(DATA / "complex_train_200.tsv"),
            "test_tsv": str(DATA / "complex_test_40.tsv"),
            "corpus": [str(DATA / "corpus_1k.txt")],
            "bpe_merges": str(DATA / "bpe_merges.txt"),
            "cmudict": str(DATA / "cmudict_fixture.txt"),
            "embeddings": str(DATA / "glove_fixture.txt"),
            "elmo": str(DATA / "elmo_fixture.tsv"),
            "infersent": str(DATA / "infersent_fixture.tsv"),
            "subtlexus": str(DATA / "subtlexus_fixture.tsv"),
            "bnc": str(DATA / "bnc_fixture.tsv"),
            "google_ngrams_local": str(DATA / "google_ngrams_local.tsv"),
            "parses": str(DATA / "parses.tsv"),
            "wordnet_data": [str(DATA / "wordnet_data.noun")],
            "wordnet_index": [str(DATA / "wordnet_index.noun")],
            "external_features": [str(DATA / "ppl_fixture.tsv")],
            "neural_predictions": str(DATA / "neural_predictions_test.tsv"),
        },
        "pipeline": {"mi_top_k": 120, "cv_folds": 3},
        "model": {"n_estimators": 40},
        "reduced": {"removal_fractions": {1: 0.3, 2: 0.15, 3: 0.05}},
    }
    for key, value in overrides.items():
        if isinstance(value, dict) and key in config:
            config[key].update(value)
        else:
            config[key] = value
    path.write_text(yaml.safe_dump(config), encoding="utf-8")
    return path


def run(*argv) -> int:
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def pipeline_out(tmp_path_factory):
    """One full pipeline run shared by the inspection tests."""
    root = tmp_path_factory.mktemp("pipeline")
    config = write_config(root / "config.yaml")
    out = root / "out"
    for stage in ("build-index", "fit-phonetics", "extract", "train", "predict", "ensemble"):
        assert run(stage, "--config", config, "--out", out) == 0
    return out, config


class TestStages:
    def test_init_config(self, tmp_path):
        assert run("init-config", "--out", tmp_path) == 0
        payload = yaml.safe_load((tmp_path / "config.yaml").read_text())
        assert payload["ensemble"]["threshold"] == 0.59
        assert payload["ensemble"]["mwe_weights"] == {"head": 0.28, "tail": 0.17, "neural": 0.55}
        assert payload["model"]["n_estimators"] == 225

    def test_artifacts_exist(self, pipeline_out):
        out, _ = pipeline_out
        for name in (
            "index.txt.gz", "char_transitions.txt", "phoneme_transitions.txt",
            "features_train.tsv", "features_test.tsv", "manifest.json",
            "model_full.json", "model_reduced.json", "cv_report.json",
            "feature_importances.tsv", "feature_importances.png", "cv_report.png",
            "predictions_full.tsv", "predictions_reduced.tsv",
            "predictions_combined.tsv", "predictions_ensemble.tsv",
        ):
            assert (out / name).exists(), name

    def test_manifest_accounting(self, pipeline_out):
        out, _ = pipeline_out
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["n_reference_scalars_expected"] == 110
        assert manifest["n_reference_scalars_present"] == 110
        assert manifest["n_embedding_dims"] == 10 + 10 + 8 + 12
        assert manifest["n_log_variants"] > 30

    def test_predictions_cover_test_ids(self, pipeline_out):
        out, _ = pipeline_out
        from lcp.data import load_complex_tsv
        from lcp.ensemble import load_predictions

        test = load_complex_tsv(DATA / "complex_test_40.tsv", "single")
        preds = load_predictions(out / "predictions_ensemble.tsv")
        assert set(preds.preds) == {s.id for s in test}

    def test_stamps_carry_config_hash(self, pipeline_out):
        out, config = pipeline_out
        from lcp.config import PipelineConfig

        expected = PipelineConfig.from_file(config).config_hash()
        first = (out / "features_train.tsv").read_text().splitlines()[1]
        assert first.startswith("#stamp ")
        assert json.loads(first[len("#stamp "):])["config"] == expected
        model = json.loads((out / "model_full.json").read_text())
        assert model["stamp"]["config"] == expected

    def test_cv_report_sane(self, pipeline_out):
        out, _ = pipeline_out
        report = json.loads((out / "cv_report.json").read_text())
        assert len(report["fold_pearson"]) == 3
        assert report["mean_pearson"] is not None
        assert report["mean_pearson"] > 0.2  # synthetic signal is learnable

    def test_evaluate_stage(self, pipeline_out, capsys):
        out, config = pipeline_out
        assert run("evaluate", "--config", config, "--out", out) == 0
        report = json.loads((out / "report.json").read_text())
        assert -1.0 <= report["overall"]["pearson"] <= 1.0
        assert (out / "report.txt").exists()
        assert (out / "predictions_scatter.png").exists()
        assert "overall" in capsys.readouterr().out

    def test_evaluate_oracle_predictions(self, pipeline_out, tmp_path):
        out, config = pipeline_out
        from lcp.data import load_complex_tsv

        test = load_complex_tsv(DATA / "complex_test_40.tsv", "single")
        oracle = tmp_path / "oracle.tsv"
        with oracle.open("w") as fh:
            for s in test:
                fh.write(f"{s.id}\t{s.complexity!r}\n")
        eval_out = tmp_path / "eval"
        assert run(
            "evaluate", "--config", config, "--out", eval_out, "--pred", oracle
        ) == 0
        report = json.loads((eval_out / "report.json").read_text())
        assert report["overall"]["pearson"] == pytest.approx(1.0, abs=1e-9)
        assert report["overall"]["spearman"] == pytest.approx(1.0, abs=1e-9)

    def test_ensemble_degrades_without_neural(self, pipeline_out, tmp_path):
        out, _ = pipeline_out
        config = write_config(
            tmp_path / "config.yaml", paths={"neural_predictions": None}
        )
        # reuse the trained artifacts; only the ensemble stage is re-run
        assert run("ensemble", "--config", config, "--out", out) == 0
        from lcp.ensemble import load_predictions

        engineered = load_predictions(out / "predictions_combined.tsv")
        final = load_predictions(out / "predictions_ensemble.tsv")
        assert final.preds == engineered.preds
        # restore the ensembled file for other tests
        original = write_config(tmp_path / "config2.yaml")
        assert run("ensemble", "--config", original, "--out", out) == 0

    def test_threshold_overwrite_visible(self, pipeline_out):
        out, config = pipeline_out
        from lcp.ensemble import load_predictions

        full = load_predictions(out / "predictions_full.tsv")
        reduced = load_predictions(out / "predictions_reduced.tsv")
        combined = load_predictions(out / "predictions_combined.tsv")
        for i, p in full.preds.items():
            expected = reduced.preds[i] if p > 0.59 else p
            assert combined.preds[i] == expected


class TestAttentionReport:
    def _write_dump(self, path, n_layers=2, n_heads=2):
        rng = np.random.default_rng(0)
        samples = []
        words = ["the", "covenant", "water", "parliament"]
        for i in range(6):
            t = len(words)
            raw = rng.uniform(0.2, 1.0, size=(n_layers, n_heads, t, t))
            att = raw / raw.sum(axis=3, keepdims=True)
            samples.append(
                {
                    "id": f"a{i}",
                    "bpe_tokens": words,
                    "word_alignment": list(range(t)),
                    "attention": att.tolist(),
                }
            )
        path.write_text(json.dumps({"model": {}, "samples": samples}))
        return path

    def test_attention_report(self, pipeline_out, tmp_path):
        out, _ = pipeline_out
        dump_path = self._write_dump(tmp_path / "dump.json")
        config = write_config(
            tmp_path / "config.yaml",
            paths={"attention_dump": str(dump_path)},
            attention={"n_samples": 6, "layer": 1, "head": 0},
        )
        assert run("attention-report", "--config", config, "--out", out) == 0
        grid_lines = (out / "head_correlations.csv").read_text().strip().splitlines()
        assert len(grid_lines) == 1 + 2
        assert (out / "head_correlations.png").exists()
        assert (out / "attention_map.png").exists()
        maps = list(out.glob("attention_map_L1_H0_*.csv"))
        assert maps and len(maps[0].read_text().strip().splitlines()) == 1 + 4


class TestMweFlow:
    def test_mwe_pipeline_end_to_end(self, pipeline_out, tmp_path):
        single_out, _ = pipeline_out
        config = write_config(
            tmp_path / "config.yaml",
            subtask="mwe",
            paths={
                "train_tsv": str(DATA / "complex_mwe_train_60.tsv"),
                "test_tsv": str(DATA / "complex_mwe_test_20.tsv"),
                "neural_predictions": str(DATA / "neural_predictions_mwe.tsv"),
            },
        )
        out = tmp_path / "out"
        out.mkdir()
        # reuse the single-word index/transitions/models: the MWE path
        # applies single-word models to head and tail words
        for name in (
            "index.txt.gz", "char_transitions.txt", "phoneme_transitions.txt",
            "model_full.json", "model_reduced.json",
            "pipeline_full.json", "pipeline_reduced.json",
        ):
            (out / name).write_bytes((single_out / name).read_bytes())
        assert run("extract", "--config", config, "--out", out) == 0
        assert (out / "features_test_head.tsv").exists()
        assert (out / "features_test_tail.tsv").exists()
        from lcp.features import load_matrix

        train_matrix = load_matrix(out / "features_train.tsv")
        assert any(c.endswith("__head") for c in train_matrix.columns)
        assert any(c.endswith("__tail") for c in train_matrix.columns)

        assert run("predict", "--config", config, "--out", out) == 0
        assert run("ensemble", "--config", config, "--out", out) == 0
        from lcp.ensemble import load_predictions

        head = load_predictions(out / "predictions_head.tsv")
        tail = load_predictions(out / "predictions_tail.tsv")
        neural = load_predictions(DATA / "neural_predictions_mwe.tsv")
        final = load_predictions(out / "predictions_ensemble.tsv")
        for i in final.preds:
            expected = 0.28 * head.preds[i] + 0.17 * tail.preds[i] + 0.55 * neural.preds[i]
            assert final.preds[i] == pytest.approx(expected, abs=1e-12)
        assert run("evaluate", "--config", config, "--out", out, "--gold",
                   DATA / "complex_mwe_test_20.tsv") == 0


class TestConfigErrors:
    def test_unknown_field_rejected(self, tmp_path):
        config = tmp_path / "config.yaml"
        config.write_text("mystery_field: 1\n", encoding="utf-8")
        assert run("build-index", "--config", config, "--out", tmp_path) == 2

    def test_bad_weights_diagnostic(self, tmp_path):
        config = write_config(
            tmp_path / "config.yaml",
            ensemble={"single_weights": {"engineered": 0.9, "neural": 0.5}},
        )
        assert run("extract", "--config", config, "--out", tmp_path) == 2

    def test_missing_required_path(self, tmp_path):
        config = write_config(tmp_path / "config.yaml", paths={"corpus": []})
        assert run("build-index", "--config", config, "--out", tmp_path) == 2

    def test_nonexistent_path_reported(self, tmp_path):
        config = write_config(
            tmp_path / "config.yaml", paths={"corpus": ["/nope/missing.txt"]}
        )
        assert run("build-index", "--config", config, "--out", tmp_path) == 2
