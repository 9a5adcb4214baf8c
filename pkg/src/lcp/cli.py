"""Batch command-line workflow.

    lcp <subcommand> --config <path> [--seed N] [--workers N] [--out DIR]

Subcommands: init-config, build-index, fit-phonetics, extract, train,
predict, ensemble, evaluate, attention-report. Artifacts land in --out and
are stamped with the config hash and seed; re-running a stage with
identical inputs reproduces identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import attention as att_mod
from . import corpus as corpus_mod
from . import figures
from . import phonetics as phon_mod
from . import semantics as sem_mod
from .config import ConfigError, PipelineConfig, write_reference_config
from .data import load_complex_tsv, make_reduced, stratified_folds
from .ensemble import (
    EnsembleSpec,
    PredictionSet,
    evaluation_report,
    format_report,
    load_predictions,
    mwe_pipeline,
    save_report,
    threshold_combine,
    weighted_average,
    write_predictions,
)
from .extract import extract_matrix, extract_mwe_matrix, load_resources
from .features import (
    SelectionState,
    StandardizerState,
    apply_selection,
    apply_standardizer,
    feature_manifest,
    fit_standardizer,
    labels_for,
    load_matrix,
    mi_select,
    persist_matrix,
    quasi_constant_filter,
)
from .regressors import (
    GbrtParams,
    cross_validate,
    feature_importance,
    fit_gbrt,
    load_model,
    persist_model,
    predict_gbrt,
)

logger = logging.getLogger("lcp")


def _artifact(out: Path, config: PipelineConfig, name: str, override=None) -> Path:
    """Stage artifacts default to conventional names inside --out."""
    if override is not None:
        return Path(override)
    configured = config.path(name) if name in config["paths"] else None
    if configured is not None:
        return configured
    conventional = {
        "index": "index.txt.gz",
        "char_transitions": "char_transitions.txt",
        "phoneme_transitions": "phoneme_transitions.txt",
    }
    return out / conventional.get(name, name)


def _stamp(config: PipelineConfig, seed: int) -> dict:
    return {"config": config.config_hash(), "seed": seed}


def cmd_init_config(args) -> int:
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    path = out / "config.yaml"
    write_reference_config(path)
    print(f"wrote reference config to {path}")
    return 0


def cmd_build_index(config: PipelineConfig, out: Path, seed: int, workers: int) -> int:
    config.require_paths("corpus")
    doc_unit = config["tokenizer"]["doc_unit"]
    docs = corpus_mod.iter_documents(config.path_list("corpus"), doc_unit=doc_unit)
    index = corpus_mod.build_index(docs, doc_unit=doc_unit)
    path = _artifact(out, config, "index")
    corpus_mod.persist_index(index, path, stamp=_stamp(config, seed))
    logger.info(
        "indexed %d docs, %d tokens, %d unigram types -> %s",
        index.n_docs, index.n_tokens, len(index.unigrams), path,
    )
    return 0


def cmd_fit_phonetics(config: PipelineConfig, out: Path, seed: int, workers: int) -> int:
    config.require_paths("cmudict")
    index = corpus_mod.load_index(_artifact(out, config, "index"))
    pron = phon_mod.load_pron_dict(config.path("cmudict"))
    weighting = config["phonetics"]["weighting"]
    vocab = dict(index.unigrams)
    model_char = phon_mod.fit_transition_model(vocab, "character", weighting)
    model_phon = phon_mod.fit_transition_model(vocab, "phoneme", weighting, pron=pron)
    stamp = _stamp(config, seed)
    char_path = _artifact(out, config, "char_transitions")
    phon_path = _artifact(out, config, "phoneme_transitions")
    phon_mod.persist_transition_model(model_char, char_path, stamp=stamp)
    phon_mod.persist_transition_model(model_phon, phon_path, stamp=stamp)
    logger.info("fitted %s transitions -> %s, %s", weighting, char_path, phon_path)
    return 0


def _external_columns(config: PipelineConfig, sample_ids: list[str]) -> dict:
    external: dict[str, dict[str, dict[str, float]]] = {}
    elmo = config.path("elmo")
    if elmo is not None:
        vectors = sem_mod.load_precomputed_embeddings(elmo)
        external["elmo"] = sem_mod.attach_precomputed(vectors, sample_ids, "elmo_word")
    infersent = config.path("infersent")
    if infersent is not None:
        vectors = sem_mod.load_precomputed_embeddings(infersent)
        external["infersent"] = sem_mod.attach_precomputed(vectors, sample_ids, "infersent")
    for path in config.path_list("external_features"):
        matrix = load_matrix(path)
        rows = {
            sid: dict(zip(matrix.columns, matrix.values[i, :]))
            for i, sid in enumerate(matrix.ids)
        }
        absent = {c: float("nan") for c in matrix.columns}
        external[f"external:{Path(path).stem}"] = {
            sid: rows.get(sid, dict(absent)) for sid in sample_ids
        }
    return external


def cmd_extract(config: PipelineConfig, out: Path, seed: int, workers: int) -> int:
    config.require_paths("train_tsv")
    subtask = config["subtask"]
    transitions = (
        _artifact(out, config, "char_transitions"),
        _artifact(out, config, "phoneme_transitions"),
    )
    transitions = tuple(p if p.exists() else None for p in transitions)
    res = load_resources(config, index_path=_artifact(out, config, "index"),
                         transitionsfx=transitions)
    stamp = _stamp(config, seed)

    train = load_complex_tsv(config.path("train_tsv"), subtask)
    if subtask == "single":
        m_train = extract_matrix(
            res, train, workers=workers,
            external_columns=_external_columns(config, [s.id for s in train]),
        )
    else:
        m_train = extract_mwe_matrix(
            res, train, workers=workers,
            external_columns=_external_columns(config, [s.id for s in train]),
        )
    persist_matrix(m_train, out / "features_train.tsv", stamp=stamp)
    suffixes = ("",) if subtask == "single" else ("__head", "__tail")
    manifest = feature_manifest(m_train, suffixes=suffixes)
    manifest["stamp"] = stamp
    with (out / "manifest.json").open("w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    logger.info(
        "train matrix: %d rows x %d columns (%d/%d reference scalars)",
        len(m_train.ids), len(m_train.columns),
        manifest["n_reference_scalars_present"],
        manifest["n_reference_scalars_expected"],
    )

    test_path = config.path("test_tsv")
    if test_path is not None:
        test = load_complex_tsv(test_path, subtask)
        ext = _external_columns(config, [s.id for s in test])
        if subtask == "single":
            m_test = extract_matrix(res, test, workers=workers, external_columns=ext)
            persist_matrix(m_test, out / "features_test.tsv", stamp=stamp)
        else:
            m_head = extract_matrix(
                res, test, target_of=lambda s: s.head, workers=workers, external_columns=ext
            )
            m_tail = extract_matrix(
                res, test, target_of=lambda s: s.tail, workers=workers, external_columns=ext
            )
            persist_matrix(m_head, out / "features_test_head.tsv", stamp=stamp)
            persist_matrix(m_tail, out / "features_test_tail.tsv", stamp=stamp)
    return 0


def _fit_pipeline(matrix, labels, config: PipelineConfig, params: GbrtParams):
    """Standardize -> drop quasi-constants -> MI top-k -> boosted trees."""
    std_state = fit_standardizer(matrix)
    z = apply_standardizer(std_state, matrix)
    dropped = quasi_constant_filter(z, config["pipeline"]["quasi_constant_threshold"])
    keep = [c for c in z.columns if c not in set(dropped)]
    z = z.project(keep)
    selection = mi_select(z, labels, k=config["pipeline"]["mi_top_k"])
    selection.quasi_constant_dropped = dropped
    z = apply_selection(selection, z)
    model = fit_gbrt(z, labels, params)
    return std_state, selection, model


def _save_pipeline_states(path: Path, std_state, selection, stamp: dict) -> None:
    payload = {
        "standardizer": std_state.to_json(),
        "selection": selection.to_json(),
        "stamp": stamp,
    }
    with path.open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def _load_pipeline_states(path: Path):
    with path.open("r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return (
        StandardizerState.from_json(payload["standardizer"]),
        SelectionState.from_json(payload["selection"]),
    )


def cmd_train(config: PipelineConfig, out: Path, seed: int, workers: int) -> int:
    config.require_paths("train_tsv")
    subtask = config["subtask"]
    train = load_complex_tsv(config.path("train_tsv"), subtask)
    matrix = load_matrix(out / "features_train.tsv")
    matrix = matrix.rows([s.id for s in train])
    labels = labels_for(train)
    params = GbrtParams(seed=seed, **config["model"])
    stamp = _stamp(config, seed)

    std_full, sel_full, model_full = _fit_pipeline(matrix, labels, config, params)
    persist_model(model_full, out / "model_full.json", stamp=stamp)
    _save_pipeline_states(out / "pipeline_full.json", std_full, sel_full, stamp)

    reduced = make_reduced(train, config.removal_fractions(), seed)
    m_reduced = matrix.rows([s.id for s in reduced])
    std_red, sel_red, model_red = _fit_pipeline(
        m_reduced, labels_for(reduced), config, params
    )
    persist_model(model_red, out / "model_reduced.json", stamp=stamp)
    _save_pipeline_states(out / "pipeline_reduced.json", std_red, sel_red, stamp)
    logger.info("trained full on %d and reduced on %d samples", len(train), len(reduced))

    folds = stratified_folds(train, config["pipeline"]["cv_folds"], seed)
    labels_by_id = {s.id: s.complexity for s in train}
    report = cross_validate(
        matrix,
        labels_by_id,
        folds,
        model_factory=lambda X, y: fit_gbrt(X, y, params),
        select_k=config["pipeline"]["mi_top_k"],
        quasi_threshold=config["pipeline"]["quasi_constant_threshold"],
    )
    payload = report.to_json()
    payload["stamp"] = stamp
    with (out / "cv_report.json").open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    mean = f"{report.mean_pearson:.4f}" if report.mean_pearson is not None else "n/a"
    std = f"{report.std_pearson:.4f}" if report.std_pearson is not None else "n/a"
    logger.info("cross-validation pearson %s +/- %s", mean, std)
    figures.plot_cv_scores(report.fold_pearson, out / "cv_report.png")

    importances = feature_importance(model_full)
    with (out / "feature_importances.tsv").open("w", encoding="utf-8") as fh:
        fh.write("feature\tgain_share\n")
        for name, share in importances.items():
            fh.write(f"{name}\t{share!r}\n")
    figures.plot_feature_importances(importances, out / "feature_importances.png")
    return 0


def _predict_combined(matrix, out: Path, config: PipelineConfig, label: str, stamp: dict):
    std_full, sel_full = _load_pipeline_states(out / "pipeline_full.json")
    std_red, sel_red = _load_pipeline_states(out / "pipeline_reduced.json")
    model_full = load_model(out / "model_full.json")
    model_red = load_model(out / "model_reduced.json")
    z_full = apply_selection(sel_full, apply_standardizer(std_full, matrix))
    z_red = apply_selection(sel_red, apply_standardizer(std_red, matrix))
    pred_full = PredictionSet(
        dict(zip(matrix.ids, map(float, predict_gbrt(model_full, z_full)))), f"full_{label}"
    )
    pred_red = PredictionSet(
        dict(zip(matrix.ids, map(float, predict_gbrt(model_red, z_red)))), f"reduced_{label}"
    )
    combined = threshold_combine(pred_full, pred_red, config["ensemble"]["threshold"])
    combined.label = f"combined_{label}"
    return pred_full, pred_red, combined


def cmd_predict(config: PipelineConfig, out: Path, seed: int, workers: int) -> int:
    subtask = config["subtask"]
    stamp = _stamp(config, seed)
    if subtask == "single":
        matrix = load_matrix(out / "features_test.tsv")
        pred_full, pred_red, combined = _predict_combined(matrix, out, config, "test", stamp)
        write_predictions(pred_full, out / "predictions_full.tsv", stamp=stamp)
        write_predictions(pred_red, out / "predictions_reduced.tsv", stamp=stamp)
        write_predictions(combined, out / "predictions_combined.tsv", stamp=stamp)
    else:
        for part in ("head", "tail"):
            matrix = load_matrix(out / f"features_test_{part}.tsv")
            _, _, combined = _predict_combined(matrix, out, config, part, stamp)
            write_predictions(combined, out / f"predictions_{part}.tsv", stamp=stamp)
    return 0


def cmd_ensemble(config: PipelineConfig, out: Path, seed: int, workers: int) -> int:
    subtask = config["subtask"]
    stamp = _stamp(config, seed)
    neural_path = config.path("neural_predictions")
    neural = None
    if neural_path is not None and neural_path.exists():
        neural = load_predictions(neural_path, label="neural")
    if subtask == "single":
        engineered = load_predictions(out / "predictions_combined.tsv", "engineered")
        if neural is None:
            logger.warning("neural predictions unavailable; ensemble = engineered only")
            final = PredictionSet(dict(engineered.preds), "ensemble_engineered_only")
        else:
            w = config["ensemble"]["single_weights"]
            final = weighted_average(
                [engineered, neural], [w["engineered"], w["neural"]], "ensemble"
            )
    else:
        head = load_predictions(out / "predictions_head.tsv", "head")
        tail = load_predictions(out / "predictions_tail.tsv", "tail")
        w = dict(config["ensemble"]["mwe_weights"])
        if neural is None:
            logger.warning(
                "neural predictions unavailable; renormalizing head/tail weights"
            )
            total = w["head"] + w["tail"]
            final = weighted_average(
                [head, tail], [w["head"] / total, w["tail"] / total],
                "mwe_ensemble_engineered_only",
            )
        else:
            spec = EnsembleSpec(
                threshold=config["ensemble"]["threshold"],
                weights=w,
                clip=bool(config["ensemble"]["clip"]),
            )
            final = mwe_pipeline(head, tail, neural, spec)
    if config["ensemble"]["clip"]:
        final = PredictionSet(
            {i: min(1.0, max(0.0, p)) for i, p in final.preds.items()}, final.label
        )
    write_predictions(final, out / "predictions_ensemble.tsv", stamp=stamp)
    logger.info("wrote %d ensemble predictions", len(final))
    return 0


def cmd_evaluate(config: PipelineConfig, out: Path, seed: int, workers: int,
                 pred_path: Optional[str] = None, gold_path: Optional[str] = None) -> int:
    pred_file = Path(pred_path) if pred_path else out / "predictions_ensemble.tsv"
    gold_file = Path(gold_path) if gold_path else config.path("test_tsv")
    if gold_file is None:
        raise ConfigError("evaluate needs labeled data: --gold or paths.test_tsv")
    samples = load_complex_tsv(gold_file, config["subtask"])
    pred = load_predictions(pred_file)
    report = evaluation_report(pred, samples)
    report["stamp"] = _stamp(config, seed)
    save_report(report, out / "report.json")
    text = format_report(report)
    (out / "report.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    truth = {s.id: s.complexity for s in samples if s.complexity is not None}
    ids = sorted(pred.ids() & set(truth))
    figures.plot_predictions_scatter(
        [pred.preds[i] for i in ids],
        [truth[i] for i in ids],
        out / "predictions_scatter.png",
        label=pred.label,
        pearson_r=report["overall"]["pearson"],
    )
    return 0


def cmd_attention_report(config: PipelineConfig, out: Path, seed: int, workers: int) -> int:
    config.require_paths("attention_dump")
    dumps = att_mod.load_dump(config.path("attention_dump"))
    att_cfg = config["attention"]
    if att_cfg["frequency_source"] == "google_local":
        config.require_paths("google_ngrams_local")
        table = corpus_mod.LocalNgramTable.load(config.path("google_ngrams_local"))
        freq_lookup = lambda w: table.lookup(w) or 0
    else:
        index = corpus_mod.load_index(_artifact(out, config, "index"))
        freq_lookup = index.tf
    grid = att_mod.head_frequency_correlation(
        dumps,
        freq_lookup,
        n_samples=att_cfg["n_samples"],
        seed=seed,
        mode=att_cfg["mode"],
        log_frequency=bool(att_cfg["log_frequency"]),
    )
    layer, head = int(att_cfg["layer"]), int(att_cfg["head"])
    paths = att_mod.export_figures(grid, dumps[0], layer, head, out)
    figures.plot_head_correlation_grid(grid, out / "head_correlations.png")
    figures.plot_attention_map(dumps[0], layer, head, out / "attention_map.png")
    logger.info("attention grid %dx%d -> %s", grid.n_layers, grid.n_heads, paths["grid"])
    return 0


COMMANDS = {
    "build-index": cmd_build_index,
    "fit-phonetics": cmd_fit_phonetics,
    "extract": cmd_extract,
    "train": cmd_train,
    "predict": cmd_predict,
    "ensemble": cmd_ensemble,
    "evaluate": cmd_evaluate,
    "attention-report": cmd_attention_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lcp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    init = sub.add_parser("init-config", help="write a reference config with all defaults")
    init.add_argument("--out", default=".", help="directory for config.yaml")
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="pipeline config YAML")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--workers", type=int, default=None, help="extraction worker count")
        p.add_argument("--out", default="out", help="artifact directory")
        if name == "evaluate":
            p.add_argument("--pred", default=None, help="predictions TSV to score")
            p.add_argument("--gold", default=None, help="labeled CompLex TSV")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    args = build_parser().parse_args(argv)
    if args.command == "init-config":
        return cmd_init_config(args)
    try:
        config = PipelineConfig.from_file(args.config)
    except ConfigError as exc:
        logger.error("%s", exc)
        return 2
    seed = args.seed if args.seed is not None else int(config["seed"])
    workers = args.workers if args.workers is not None else int(config["workers"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.command == "evaluate":
            return cmd_evaluate(config, out, seed, workers, args.pred, args.gold)
        return COMMANDS[args.command](config, out, seed, workers)
    except ConfigError as exc:
        logger.error("%s", exc)
        return 2
    except (FileNotFoundError, ValueError) as exc:
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
