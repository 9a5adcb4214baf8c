import pytest

from lcp.config import ConfigError, PipelineConfig, reference_config_yaml


class TestConfigHash:
    def test_non_semantic_fields_do_not_change_hash(self):
        base = PipelineConfig({"seed": 7})
        reworked = PipelineConfig({"seed": 7, "workers": 16})
        assert base.config_hash() == reworked.config_hash()

    @pytest.mark.parametrize(
        "override",
        [
            {"seed": 8},
            {"ensemble": {"threshold": 0.6}},
            {"model": {"n_estimators": 100}},
            {"pipeline": {"mi_top_k": 50}},
            {"subtask": "mwe"},
            {"reduced": {"removal_fractions": {1: 0.9}}},
        ],
    )
    def test_semantic_fields_change_hash(self, override):
        base = PipelineConfig({})
        assert PipelineConfig(override).config_hash() != base.config_hash()

    def test_hash_stable_across_instances(self):
        a = PipelineConfig({"seed": 3})
        b = PipelineConfig({"seed": 3})
        assert a.config_hash() == b.config_hash()


class TestValidation:
    def test_unknown_field(self):
        with pytest.raises(ConfigError, match="unknown config field"):
            PipelineConfig({"nonsense": True})

    def test_bad_threshold(self):
        with pytest.raises(ConfigError, match="threshold"):
            PipelineConfig({"ensemble": {"threshold": 1.5}})

    def test_bad_removal_class(self):
        with pytest.raises(ConfigError, match="removal_fractions"):
            PipelineConfig({"reduced": {"removal_fractions": {4: 0.1}}})

    def test_weights_must_sum(self):
        with pytest.raises(ConfigError, match="sum"):
            PipelineConfig({"ensemble": {"single_weights": {"engineered": 0.7, "neural": 0.7}}})

    def test_require_paths_reports_field_names(self, tmp_path):
        config = PipelineConfig({})
        with pytest.raises(ConfigError, match="paths.train_tsv"):
            config.require_paths("train_tsv")

    def test_reference_config_shows_tuned_constants(self):
        text = reference_config_yaml()
        assert "0.59" in text
        assert "n_estimators: 225" in text
        assert "0.28" in text and "0.17" in text and "0.55" in text
