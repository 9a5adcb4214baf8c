"""Feature extraction orchestration: load resources once, extract per-sample
records from every enabled feature family, and assemble matrices."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from . import corpus as corpus_mod
from . import phonetics as phon_mod
from . import semantics as sem_mod
from . import surface as surf_mod
from . import syntax as syn_mod
from .config import PipelineConfig
from .data import Sample
from .features import FeatureMatrix, assemble_matrix
from .ngram_client import NgramClientConfig, RemoteNgramClient

logger = logging.getLogger(__name__)


@dataclass
class ExtractorResources:
    index: Optional[corpus_mod.FrequencyIndex] = None
    bpe: Optional[corpus_mod.BpeVocabulary] = None
    piece_counts: Optional[dict] = None
    google_source: Optional[object] = None
    external_tables: list = field(default_factory=list)
    model_char: Optional[phon_mod.TransitionModel] = None
    model_phon: Optional[phon_mod.TransitionModel] = None
    pron: Optional[phon_mod.PronDict] = None
    embeddings: Optional[sem_mod.EmbeddingTable] = None
    inventory: Optional[sem_mod.SenseInventory] = None
    parses: Optional[syn_mod.ParserClient] = None
    familiar_words: Optional[frozenset] = None
    toggles: dict = field(default_factory=dict)


def load_resources(config: PipelineConfig, index_path=None, transitionsfx=None) -> ExtractorResources:
    """Materialize every resource the enabled feature families need.

    ``index_path`` / ``transitionsfx`` override the config (CLI stages pass
    artifact locations from the output directory); ``transitionsfx`` is a
    (char_path, phoneme_path) pair.
    """
    toggles = dict(config["features"])
    res = ExtractorResources(toggles=toggles)

    needs_index = toggles.get("frequency") or toggles.get("phonetic")
    if needs_index:
        path = index_path or config.path("index")
        if path is None:
            raise ValueError("frequency/phonetic features need paths.index")
        res.index = corpus_mod.load_index(path)

    if toggles.get("frequency"):
        merges = config.path("bpe_merges")
        if merges is not None:
            res.bpe = corpus_mod.BpeVocabulary.load(merges)
            res.piece_counts = corpus_mod.bpe_piece_counts(res.index, res.bpe)

    if toggles.get("google_ngrams"):
        local = config.path("google_ngrams_local")
        if local is not None:
            res.google_source = corpus_mod.LocalNgramTable.load(local)
        elif config["remote_ngrams"]["endpoint"] or config["remote_ngrams"]["cache"]:
            rc = config["remote_ngrams"]
            res.google_source = RemoteNgramClient(
                NgramClientConfig(
                    endpoint=rc["endpoint"],
                    query_param=rc["query_param"],
                    count_field=rc["count_field"],
                    cache_path=str(config._resolve(rc["cache"])) if rc["cache"] else None,
                    offline=bool(rc["offline"]),
                )
            )
        else:
            logger.warning("google_ngrams enabled but no source configured; skipping family")
            res.toggles["google_ngrams"] = False

    if toggles.get("external_frequency"):
        if config.path("subtlexus") is not None:
            res.external_tables.append(corpus_mod.load_subtlexus(config.path("subtlexus")))
        if config.path("bnc") is not None:
            res.external_tables.append(corpus_mod.load_bnc(config.path("bnc")))
        if not res.external_tables:
            logger.warning("external_frequency enabled but no tables configured; skipping")
            res.toggles["external_frequency"] = False

    if toggles.get("phonetic"):
        cmudict = config.path("cmudict")
        if cmudict is None:
            raise ValueError("phonetic features need paths.cmudict")
        res.pron = phon_mod.load_pron_dict(cmudict)
        char_path = (transitionsfx or (None, None))[0] or config.path("char_transitions")
        phon_path = (transitionsfx or (None, None))[1] or config.path("phoneme_transitions")
        if char_path and phon_path:
            res.model_char = phon_mod.load_transition_model(char_path)
            res.model_phon = phon_mod.load_transition_model(phon_path)
        else:
            weighting = config["phonetics"]["weighting"]
            res.model_char = phon_mod.fit_transition_model(
                dict(res.index.unigrams), "character", weighting
            )
            res.model_phon = phon_mod.fit_transition_model(
                dict(res.index.unigrams), "phoneme", weighting, pron=res.pron
            )

    if toggles.get("embeddings"):
        table = config.path("embeddings")
        if table is None:
            logger.warning("embeddings enabled but paths.embeddings not set; skipping")
            res.toggles["embeddings"] = False
        else:
            res.embeddings = sem_mod.load_embedding_table(table)

    if toggles.get("wordnet"):
        data_paths = config.path_list("wordnet_data")
        index_paths = config.path_list("wordnet_index")
        if data_paths and index_paths:
            res.inventory = sem_mod.load_sense_inventory(data_paths, index_paths)
        else:
            logger.warning("wordnet enabled but database paths not set; skipping")
            res.toggles["wordnet"] = False

    if toggles.get("syntactic"):
        ps = config["parser_service"]
        cache = config.path("parses")
        res.parses = syn_mod.ParserClient(
            syn_mod.ParserClientConfig(
                endpoint=ps["endpoint"],
                parse_field=ps["parse_field"],
                cache_path=str(cache) if cache else (
                    str(config._resolve(ps["cache"])) if ps["cache"] else None
                ),
                offline=bool(ps["offline"]),
            )
        )

    if toggles.get("readability"):
        fam = config.path("familiar_words")
        res.familiar_words = (
            surf_mod.load_familiar_words(fam) if fam else surf_mod.default_familiar_words()
        )
    return res


def extract_record(
    res: ExtractorResources, sample: Sample, target: str
) -> dict[str, dict[str, float]]:
    """All feature-family records for one (sample, target word) pair."""
    toggles = res.toggles
    out: dict[str, dict[str, float]] = {}
    if toggles.get("lexical"):
        out["lexical"] = surf_mod.lexical_features(target)
    if toggles.get("readability"):
        out["readability"] = surf_mod.readability_features(
            sample.sentence, res.familiar_words
        )
    if toggles.get("frequency"):
        out["frequency"] = corpus_mod.frequency_features(
            res.index, res.bpe, sample.sentence, target, piece_counts=res.piece_counts
        )
    if toggles.get("google_ngrams"):
        out["google_ngrams"] = corpus_mod.google_ngram_features(
            res.google_source, sample.sentence, target
        )
    if toggles.get("external_frequency"):
        out["external_frequency"] = corpus_mod.external_frequency_features(
            res.external_tables, target
        )
    if toggles.get("phonetic"):
        out["phonetic"] = phon_mod.phonetic_features(
            res.model_char, res.model_phon, res.pron, target
        )
    if toggles.get("embeddings"):
        out["embeddings"] = sem_mod.embedding_features(
            res.embeddings, sample.sentence, target
        )
    if toggles.get("wordnet"):
        out["wordnet"] = sem_mod.wordnet_features(res.inventory, sample.sentence, target)
    if toggles.get("syntactic"):
        tree = res.parses.fetch_parse(sample.sentence) if res.parses else None
        out["syntactic"] = syn_mod.syntactic_features(tree, target)
    return out


def extract_matrix(
    res: ExtractorResources,
    samples: list[Sample],
    target_of=None,
    suffix: str = "",
    workers: int = 1,
    external_columns: Optional[dict] = None,
    add_corpus_flags: bool = True,
) -> FeatureMatrix:
    """Extract records for every sample and assemble the matrix.

    ``target_of`` picks the word to featurize (defaults to the single-word
    target); ``suffix`` renames every column (head/tail variants for MWE
    matrices). Extraction is parallel over samples; assembly order follows
    the input order, so results are deterministic.
    """
    if target_of is None:
        target_of = lambda s: s.target if not s.is_mwe else s.head

    def run(sample: Sample) -> dict[str, dict[str, float]]:
        return extract_record(res, sample, target_of(sample))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run, samples))
    else:
        records = [run(s) for s in samples]

    by_source: dict[str, dict[str, dict[str, float]]] = {}
    for sample, record in zip(samples, records):
        for source, feats in record.items():
            if suffix:
                feats = {f"{name}{suffix}": v for name, v in feats.items()}
            by_source.setdefault(source, {})[sample.id] = feats
    return assemble_matrix(
        samples, by_source, external_columns, add_corpus_flags=add_corpus_flags
    )


def extract_mwe_matrix(
    res: ExtractorResources,
    samples: list[Sample],
    workers: int = 1,
    external_columns: Optional[dict] = None,
) -> FeatureMatrix:
    """Suffixed head/tail matrix for MWE samples (every feature twice)."""
    head = extract_matrix(
        res, samples, target_of=lambda s: s.head, suffix="__head",
        workers=workers, add_corpus_flags=False,
    )
    tail = extract_matrix(
        res, samples, target_of=lambda s: s.tail, suffix="__tail",
        workers=workers, add_corpus_flags=False,
    )
    head_records = {
        "head": {
            sid: {c: head.values[i, j] for j, c in enumerate(head.columns)}
            for i, sid in enumerate(head.ids)
        }
    }
    tail_records = {
        "tail": {
            sid: {c: tail.values[i, j] for j, c in enumerate(tail.columns)}
            for i, sid in enumerate(tail.ids)
        }
    }
    return assemble_matrix(
        samples,
        {**head_records, **tail_records},
        external_columns,
        add_log_variants=False,  # head/tail matrices already carry log variants
        add_corpus_flags=True,
    )
