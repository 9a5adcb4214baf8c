"""Pipeline configuration: a single YAML file with defaults, validation,
and a content hash used to stamp artifacts."""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path
from typing import Any, Optional, Union

import yaml

# Tuned constants surface here so a generated reference config shows them.
DEFAULTS: dict[str, Any] = {
    "seed": 7,
    "workers": 1,
    "subtask": "single",
    "paths": {
        "train_tsv": None,
        "test_tsv": None,
        "corpus": [],
        "index": None,
        "bpe_merges": None,
        "cmudict": None,
        "char_transitions": None,
        "phoneme_transitions": None,
        "embeddings": None,
        "elmo": None,
        "infersent": None,
        "subtlexus": None,
        "bnc": None,
        "google_ngrams_local": None,
        "parses": None,
        "familiar_words": None,
        "wordnet_data": [],
        "wordnet_index": [],
        "external_features": [],
        "neural_predictions": None,
        "attention_dump": None,
    },
    "tokenizer": {"doc_unit": "line"},
    "features": {
        "lexical": True,
        "readability": True,
        "frequency": True,
        "google_ngrams": True,
        "external_frequency": True,
        "phonetic": True,
        "embeddings": True,
        "wordnet": True,
        "syntactic": True,
    },
    "pipeline": {
        "quasi_constant_threshold": 0.99,
        "mi_top_k": 300,
        "cv_folds": 5,
    },
    "reduced": {
        # fractions removed from classes 1-3; tune per dataset
        "removal_fractions": {1: 0.3, 2: 0.15, 3: 0.05},
    },
    "model": {
        "n_estimators": 225,
        "learning_rate": 0.03,
        "max_depth": 5,
        "min_child_weight": 4,
        "subsample": 0.7,
        "colsample_bytree": 0.7,
    },
    "phonetics": {"weighting": "token_frequency"},
    "ensemble": {
        "threshold": 0.59,
        "single_weights": {"engineered": 0.5, "neural": 0.5},
        "mwe_weights": {"head": 0.28, "tail": 0.17, "neural": 0.55},
        "clip": False,
    },
    "attention": {
        "n_samples": 100,
        "layer": 0,
        "head": 0,
        "mode": "mean",
        "log_frequency": True,
        "frequency_source": "index",  # index | google_local
    },
    "remote_ngrams": {
        "endpoint": "",
        "query_param": "query",
        "count_field": "count",
        "cache": None,
        "offline": True,
    },
    "parser_service": {
        "endpoint": "",
        "parse_field": "parse",
        "cache": None,
        "offline": True,
    },
}

# Fields with no bearing on artifact content; excluded from the hash.
_NON_SEMANTIC = {"workers"}


class ConfigError(ValueError):
    """Raised with field-level diagnostics for an invalid config."""


def _deep_merge(base: dict, override: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(f"unknown config field: {where}")
        if isinstance(base[key], dict) and key not in (
            "removal_fractions", "single_weights", "mwe_weights",
        ):
            if not isinstance(value, dict):
                raise ConfigError(f"{where}: expected a mapping")
            out[key] = _deep_merge(base[key], value, prefix=f"{where}.")
        else:
            out[key] = copy.deepcopy(value)
    return out


class PipelineConfig:
    def __init__(self, raw: dict, base_dir: Optional[Path] = None):
        self.raw = _deep_merge(DEFAULTS, raw or {})
        self.base_dir = base_dir or Path.cwd()
        self._check_values()

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "PipelineConfig":
        path = Path(path)
        with path.open("r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config root must be a mapping")
        return cls(raw, base_dir=path.parent)

    def __getitem__(self, key: str):
        return self.raw[key]

    def path(self, name: str) -> Optional[Path]:
        """A configured path, resolved relative to the config file."""
        value = self.raw["paths"].get(name)
        if value is None:
            return None
        return self._resolve(value)

    def path_list(self, name: str) -> list[Path]:
        return [self._resolve(v) for v in self.raw["paths"].get(name) or []]

    def _resolve(self, value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else (self.base_dir / p)

    def _check_values(self) -> None:
        errors = []
        raw = self.raw
        if raw["subtask"] not in ("single", "mwe"):
            errors.append(f"subtask: must be 'single' or 'mwe', got {raw['subtask']!r}")
        if raw["tokenizer"]["doc_unit"] not in ("line", "document"):
            errors.append("tokenizer.doc_unit: must be 'line' or 'document'")
        t = raw["ensemble"]["threshold"]
        if not 0.0 <= t <= 1.0:
            errors.append(f"ensemble.threshold: {t} outside [0, 1]")
        for name in ("single_weights", "mwe_weights"):
            weights = raw["ensemble"][name]
            total = sum(weights.values())
            if abs(total - 1.0) > 1e-9:
                errors.append(f"ensemble.{name}: weights sum to {total}, expected 1")
            if any(w < 0 for w in weights.values()):
                errors.append(f"ensemble.{name}: negative weight")
        fractions = raw["reduced"]["removal_fractions"]
        for cls_key, frac in fractions.items():
            if int(cls_key) not in (1, 2, 3):
                errors.append(f"reduced.removal_fractions: class {cls_key} not in 1-3")
            elif not 0.0 <= frac <= 1.0:
                errors.append(f"reduced.removal_fractions[{cls_key}]: {frac} outside [0, 1]")
        if raw["pipeline"]["cv_folds"] < 2:
            errors.append("pipeline.cv_folds: must be >= 2")
        if raw["pipeline"]["mi_top_k"] < 1:
            errors.append("pipeline.mi_top_k: must be >= 1")
        if raw["phonetics"]["weighting"] not in ("token_frequency", "type"):
            errors.append("phonetics.weighting: must be 'token_frequency' or 'type'")
        if raw["attention"]["mode"] not in ("mean", "sum"):
            errors.append("attention.mode: must be 'mean' or 'sum'")
        if errors:
            raise ConfigError("invalid config:\n  " + "\n  ".join(errors))

    def require_paths(self, *names: str) -> None:
        """Validate that the named path fields are set and exist."""
        errors = []
        for name in names:
            value = self.raw["paths"].get(name)
            if value is None or value == []:
                errors.append(f"paths.{name}: required for this command but not set")
                continue
            values = value if isinstance(value, list) else [value]
            for v in values:
                if not self._resolve(v).exists():
                    errors.append(f"paths.{name}: {v} does not exist")
        if errors:
            raise ConfigError("invalid config:\n  " + "\n  ".join(errors))

    def removal_fractions(self) -> dict[int, float]:
        return {int(k): float(v) for k, v in self.raw["reduced"]["removal_fractions"].items()}

    def config_hash(self) -> str:
        """Hash of the semantically relevant config fields."""
        semantic = {k: v for k, v in self.raw.items() if k not in _NON_SEMANTIC}
        blob = json.dumps(semantic, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def reference_config_yaml() -> str:
    """A fully commented reference config with every default visible."""
    body = yaml.safe_dump(DEFAULTS, sort_keys=False, default_flow_style=False)
    header = (
        "# Reference pipeline configuration.\n"
        "# Tuned constants: ensemble threshold 0.59, single-word weights\n"
        "# 0.5/0.5, MWE weights 0.28/0.17/0.55, boosted-tree settings under\n"
        "# 'model'. Paths are resolved relative to this file.\n"
    )
    return header + body


def write_reference_config(path: Union[str, Path]) -> None:
    Path(path).write_text(reference_config_yaml(), encoding="utf-8")
