"""
Desk-scale retrieval experiment on a synthetic corpus.

Each document holds two concepts of its own, written with one synonym each,
plus a named entity shared with a few other documents and random filler
words. Synonyms of a concept get near-identical embeddings. Each query names
its document's two concepts and entity; the reformulated scenario swaps
every concept word for another synonym, which defeats purely lexical
matching.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .data.collections import (
    Document,
    Qrels,
    Query,
    SynonymLexicon,
    write_corpus,
    write_lexicon,
    write_qrels,
    write_queries,
    write_synonym_pairs,
)
from .data.embeddings import EmbeddingTable, write_embeddings
from .evaluation import (
    MetricsReport,
    TTestResult,
    align_series,
    evaluate_run,
    paired_t_test,
    reformulate_queries,
    topk_curves,
)
from .indexer import IndexConfig, build_index
from .search import SYSTEMS, QueryConfig, Searcher
from .text import TextPipeline

logger = logging.getLogger(__name__)

VERBATIM = "verbatim"
REFORMULATED = "reformulated"
SCENARIOS = (VERBATIM, REFORMULATED)


@dataclass
class ExperimentConfig:
    """Shape of the synthetic collection and the retrieval parameters."""

    n_documents: int = 50
    n_entities: int = 10
    synonyms_per_concept: int = 3
    filler_pool: int = 200
    min_fillers: int = 3
    max_fillers: int = 8
    max_repeats: int = 3
    dim: int = 50
    # Norm of the perturbation separating synonyms of one concept
    noise: float = 0.1
    epsilon: float = 0.2
    k: int = 50
    fusion_n: int = 100
    # Deepest k of the precision/recall curves, 0 to skip them
    curve_depth: int = 10
    seed: int = 13

    def validate(self) -> list[str]:
        errors = []
        if self.n_documents < 2:
            errors.append(f"Invalid n_documents {self.n_documents}: must be >= 2")
        if not 1 <= self.n_entities <= self.n_documents:
            errors.append(f"Invalid n_entities {self.n_entities}")
        if self.synonyms_per_concept < 2:
            errors.append("synonyms_per_concept must be >= 2")
        if not 1 <= self.min_fillers <= self.max_fillers <= self.filler_pool:
            errors.append("filler counts must satisfy 1 <= min <= max <= pool")
        if self.max_repeats < 1 or self.dim < 2 or self.noise < 0:
            errors.append("max_repeats, dim and noise must be positive")
        if self.curve_depth < 0:
            errors.append(f"Invalid curve_depth {self.curve_depth}: must be >= 0")
        return errors


@dataclass
class ExperimentData:
    corpus: list[Document]
    queries: list[Query]
    qrels: Qrels
    lexicon: SynonymLexicon
    synonym_pairs: list[tuple[str, str]]
    embeddings: EmbeddingTable


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


def generate(config: Optional[ExperimentConfig] = None) -> ExperimentData:
    """Build the synthetic corpus, verbatim queries, qrels, lexicon and embeddings."""
    config = config or ExperimentConfig()
    errors = config.validate()
    if errors:
        raise ValueError("Invalid experiment config:\n  " + "\n  ".join(errors))
    rng = np.random.default_rng(config.seed)

    vectors: dict[str, np.ndarray] = {}
    concepts: list[list[str]] = []
    for c in range(2 * config.n_documents):
        base = _unit(rng, config.dim)
        words = [f"concept{c:03d}{chr(ord('a') + s)}" for s in range(config.synonyms_per_concept)]
        for word in words:
            vectors[word] = base + config.noise * _unit(rng, config.dim)
        concepts.append(words)
    fillers = [f"filler{i:03d}" for i in range(config.filler_pool)]
    for word in fillers:
        vectors[word] = _unit(rng, config.dim)

    corpus, queries, judgments = [], [], {}
    for i in range(config.n_documents):
        entity = f"Entity{i % config.n_entities}"
        chosen = [
            concepts[2 * i + j][int(rng.integers(config.synonyms_per_concept))] for j in (0, 1)
        ]
        n_fillers = int(rng.integers(config.min_fillers, config.max_fillers + 1))
        picked = [fillers[int(x)] for x in rng.choice(config.filler_pool, n_fillers, replace=False)]
        middle = [entity] + picked[1:]
        for word in chosen:
            middle += [word] * int(rng.integers(1, config.max_repeats + 1))
        rng.shuffle(middle)
        # A lowercase opener keeps the entity away from the sentence start
        doc_id = f"d{i:03d}"
        corpus.append(Document(doc_id, " ".join([picked[0]] + middle) + "."))
        queries.append(Query(f"q{i:03d}", f"{chosen[0]} {chosen[1]} {entity}"))
        judgments[(f"q{i:03d}", doc_id)] = 1

    lexicon = SynonymLexicon(
        {w: [s for s in group if s != w] for group in concepts for w in group}
    )
    pairs = [(group[0], group[1]) for group in concepts]
    return ExperimentData(
        corpus, queries, Qrels(judgments), lexicon, pairs, EmbeddingTable(config.dim, vectors)
    )


def save_experiment(data: ExperimentData, directory: Union[str, Path]) -> Path:
    """Write the generated inputs in the formats the command line reads."""
    directory = Path(directory)
    write_corpus(data.corpus, directory / "corpus.jsonl")
    write_queries(data.queries, directory / "queries.tsv")
    write_qrels(data.qrels, directory / "qrels.txt")
    write_lexicon(data.lexicon, directory / "lexicon.json")
    write_synonym_pairs(data.synonym_pairs, directory / "synonym_pairs.tsv")
    write_embeddings(data.embeddings, directory / "embeddings.vec")
    return directory


@dataclass
class ExperimentResult:
    # scenario -> system -> report
    reports: dict[str, dict[str, MetricsReport]] = field(default_factory=dict)
    # scenario -> combined vs bm25 on per-query AP
    t_tests: dict[str, TTestResult] = field(default_factory=dict)
    # scenario -> system -> [(k, mean P@k, mean R@k)]
    curves: dict[str, dict[str, list[tuple[int, float, float]]]] = field(default_factory=dict)

    def format_table(self) -> str:
        header = f"{'scenario':<13} {'system':<13} {'MAP':>7} {'R-Prec':>7} {'MRR':>7} {'P@5':>7}"
        lines = [header, "-" * len(header)]
        for scenario, by_system in self.reports.items():
            for system, report in by_system.items():
                agg = report.aggregate()
                lines.append(
                    f"{scenario:<13} {system:<13} {agg['map']:>7.4f} {agg['r_prec']:>7.4f} "
                    f"{agg['mrr']:>7.4f} {agg.get('p@5', 0.0):>7.4f}"
                )
        for scenario, result in self.t_tests.items():
            lines.append(f"{scenario}: combined vs bm25 (AP) {result.describe()}")
        return "\n".join(lines)

    def format_curves(self) -> str:
        """Mean precision and recall at k = 1..curve_depth, one block per scenario."""
        lines = []
        for scenario, by_system in self.curves.items():
            systems = list(by_system)
            if not systems:
                continue
            lines.append(f"{scenario}: precision / recall at k")
            lines.append(f"{'k':>4} " + " ".join(f"{s:>17}" for s in systems))
            for i, (k, _, _) in enumerate(by_system[systems[0]]):
                cells = (f"{by_system[s][i][1]:>8.4f} {by_system[s][i][2]:>8.4f}" for s in systems)
                lines.append(f"{k:>4} " + " ".join(cells))
        return "\n".join(lines)


def run_experiment(
    config: Optional[ExperimentConfig] = None, data: Optional[ExperimentData] = None
) -> ExperimentResult:
    """Index the synthetic corpus and evaluate every system on both query scenarios."""
    config = config or ExperimentConfig()
    data = data or generate(config)

    pipeline = TextPipeline.create(rw_threshold=0)
    index = build_index(
        data.corpus,
        data.embeddings,
        IndexConfig(epsilon=config.epsilon, epsilon_source="override"),
        pipeline,
    )
    query_config = QueryConfig.from_manifest(index.manifest, k=config.k, fusion_n=config.fusion_n)
    searcher = Searcher(index, query_config, data.embeddings)

    scenarios = {
        VERBATIM: data.queries,
        REFORMULATED: reformulate_queries(data.queries, data.lexicon, p=1.0, seed=config.seed),
    }
    result = ExperimentResult()
    for scenario, queries in scenarios.items():
        result.reports[scenario] = {}
        result.curves[scenario] = {}
        for system in SYSTEMS:
            runs = {r.query_id: r.doc_ids() for r in searcher.search_all(queries, system)}
            result.reports[scenario][system] = evaluate_run(runs, data.qrels, k_values=(5, 10))
            if config.curve_depth:
                result.curves[scenario][system] = topk_curves(runs, data.qrels, config.curve_depth)
        combined, bm25 = align_series(
            result.reports[scenario]["combined"].series("ap"),
            result.reports[scenario]["bm25"].series("ap"),
        )
        result.t_tests[scenario] = paired_t_test(combined, bm25)
        logger.info(
            f"{scenario}: "
            + ", ".join(f"{s} MRR {r.mrr:.4f}" for s, r in result.reports[scenario].items())
        )
    return result
