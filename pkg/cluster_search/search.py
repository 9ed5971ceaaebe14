"""Query vectors, cosine RSV, BM25, rank fusion and the average-embedding baseline."""

import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Optional, Sequence

import numpy as np

from .clustering import DEFAULT_EPSILON, Cluster, cosine_distance
from .data.collections import Query
from .data.embeddings import EmbeddingTable
from .data.runs import RunEntry
from .errors import ConfigurationError, DomainError
from .indexer import CorpusStats, DocVector, Index, IndexManifest, bm25_term_score
from .text import Label, Token

logger = logging.getLogger(__name__)

SEMANTIC = "semantic"
BM25 = "bm25"
COMBINED = "combined"
AVG_BASELINE = "avg-baseline"
SYSTEMS = (SEMANTIC, BM25, COMBINED, AVG_BASELINE)

# Slack on the vectorized prefilter; every candidate is rechecked exactly
_PREFILTER_SLACK = 1e-9
_PARAMETER_TOLERANCE = 1e-12


@dataclass
class QueryConfig:
    """Search-time parameters. epsilon and gamma must match the index build."""

    gamma: float = 1.0
    epsilon: float = DEFAULT_EPSILON
    k: int = 50
    fusion_n: int = 100

    def validate(self) -> list[str]:
        errors = []
        if self.gamma <= 0:
            errors.append(f"Invalid gamma {self.gamma}: must be > 0")
        if not 0.0 < self.epsilon < 1.0:
            errors.append(f"Invalid epsilon {self.epsilon}: must be in (0, 1)")
        if self.k < 1:
            errors.append(f"Invalid k {self.k}: must be >= 1")
        if self.fusion_n < 1:
            errors.append(f"Invalid fusion_n {self.fusion_n}: must be >= 1")
        return errors

    @classmethod
    def from_manifest(
        cls,
        manifest: IndexManifest,
        k: int = 50,
        fusion_n: int = 100,
        gamma: Optional[float] = None,
        epsilon: Optional[float] = None,
        k1: Optional[float] = None,
        b: Optional[float] = None,
        rw_threshold: Optional[int] = None,
    ) -> "QueryConfig":
        """
        Take build-time parameters from the index, refusing overrides that differ.

        k1, b and rw_threshold are only checked; the index applies its own values.

        Raises:
            ConfigurationError: An override disagrees with the manifest, or a
                parameter is out of range.
        """
        for name, override, stored in (
            ("epsilon", epsilon, manifest.epsilon),
            ("gamma", gamma, manifest.gamma),
            ("k1", k1, manifest.k1),
            ("b", b, manifest.b),
            ("rw_threshold", rw_threshold, manifest.rw_threshold),
        ):
            if override is not None and abs(override - stored) > _PARAMETER_TOLERANCE:
                raise ConfigurationError(
                    f"{name} {override} does not match the index ({stored}); rebuild the index"
                )
        config = cls(gamma=manifest.gamma, epsilon=manifest.epsilon, k=k, fusion_n=fusion_n)
        errors = config.validate()
        if errors:
            raise ConfigurationError("; ".join(errors))
        return config


@dataclass
class QueryVector:
    query_id: str
    weights: dict[int, float] = field(default_factory=dict)

    @property
    def norm(self) -> float:
        return math.sqrt(sum(w * w for w in self.weights.values()))


@dataclass(frozen=True)
class ScoredDoc:
    doc_id: str
    score: float
    rank: int


@dataclass
class ScoredList:
    """Ranked results for one query. Ties are broken by ascending doc id."""

    query_id: str
    system: str
    entries: list[ScoredDoc] = field(default_factory=list)

    @classmethod
    def from_scores(
        cls,
        query_id: str,
        system: str,
        scores: Mapping[str, float],
        depth: Optional[int] = None,
    ) -> "ScoredList":
        ordered = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
        if depth is not None:
            ordered = ordered[:depth]
        return cls(
            query_id,
            system,
            [ScoredDoc(doc_id, score, rank) for rank, (doc_id, score) in enumerate(ordered, 1)],
        )

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[ScoredDoc]:
        return iter(self.entries)

    def doc_ids(self) -> list[str]:
        return [e.doc_id for e in self.entries]

    def scores(self) -> dict[str, float]:
        return {e.doc_id: e.score for e in self.entries}

    def truncate(self, depth: int) -> "ScoredList":
        return ScoredList(self.query_id, self.system, self.entries[:depth])

    def to_run_entries(self) -> list[RunEntry]:
        return [
            RunEntry(self.query_id, e.doc_id, e.rank, e.score, self.system)
            for e in self.entries
        ]


def g(centroid: np.ndarray, wvec: np.ndarray, epsilon: float) -> Optional[float]:
    """Cosine distance from word to centroid, or None when it exceeds epsilon."""
    d = cosine_distance(centroid, wvec)
    return d if d <= epsilon else None


def f(d: float, gamma: float, epsilon: float) -> float:
    """Linear weight gamma * (epsilon - d) / epsilon: gamma at d=0, zero at d=epsilon."""
    if not 0.0 <= d <= epsilon:
        raise DomainError(f"distance {d} outside [0, {epsilon}]")
    return gamma * (epsilon - d) / epsilon


def query_cluster_weight(
    token: Token, vector: Optional[np.ndarray], cluster: Cluster, config: QueryConfig
) -> float:
    """q_i^w for one query word against one cluster."""
    if token.surface in cluster.words:
        return config.gamma
    if cluster.singleton or token.label == Label.NE or vector is None:
        return 0.0
    assert cluster.centroid is not None
    d = g(cluster.centroid, vector, config.epsilon)
    return 0.0 if d is None else f(d, config.gamma, config.epsilon)


def _vector_lookup(
    index: Index, embeddings: Optional[Mapping[str, np.ndarray]]
) -> Callable[[str], Optional[np.ndarray]]:
    def lookup(surface: str) -> Optional[np.ndarray]:
        vector = index.word_vectors.get(surface)
        if vector is None and embeddings is not None:
            vector = embeddings.get(surface)
        return vector

    return lookup


def build_query_vector(
    query: Query,
    index: Index,
    config: QueryConfig,
    embeddings: Optional[Mapping[str, np.ndarray]] = None,
) -> QueryVector:
    """
    Sum q_i^w over every query word occurrence.

    Exact membership contributes gamma; non-NE words with a vector also
    soft-match every other non-singleton cluster within epsilon. embeddings
    supplies vectors for query words the corpus never saw.
    """
    lookup = _vector_lookup(index, embeddings)
    tokens = index.pipeline.query_tokens(query.text, index.vocabulary)
    weights: dict[int, float] = {}
    for token in tokens:
        own = index.clusters.cluster_of(token.surface)
        if own is not None:
            weights[own] = weights.get(own, 0.0) + config.gamma

        vector = lookup(token.surface)
        if token.label == Label.NE or vector is None:
            continue
        ids, distances = index.clusters.candidate_distances(vector)
        for position in np.flatnonzero(distances <= config.epsilon + _PREFILTER_SLACK):
            cluster_id = ids[position]
            if cluster_id == own:
                continue
            cluster = index.clusters[cluster_id]
            assert cluster.centroid is not None
            d = g(cluster.centroid, vector, config.epsilon)
            if d is not None:
                weights[cluster_id] = weights.get(cluster_id, 0.0) + f(
                    d, config.gamma, config.epsilon
                )

    return QueryVector(query.id, {cid: w for cid, w in sorted(weights.items()) if w > 0.0})


def rsv_cosine(dvec: DocVector, qvec: QueryVector) -> float:
    """Cosine between a document and a query in cluster space; 0 if either is empty."""
    if not dvec.weights or not qvec.weights:
        return 0.0
    dot = sum(w * dvec.weights.get(cid, 0.0) for cid, w in qvec.weights.items())
    return dot / (dvec.norm * qvec.norm)


def search_semantic(
    query: Query,
    index: Index,
    config: QueryConfig,
    embeddings: Optional[Mapping[str, np.ndarray]] = None,
    depth: Optional[int] = None,
) -> ScoredList:
    """Rank documents by cosine RSV, accumulated over cluster postings."""
    qvec = build_query_vector(query, index, config, embeddings)
    dots: dict[str, float] = {}
    for cluster_id, q in qvec.weights.items():
        for doc_id, alpha in index.cluster_postings.get(cluster_id, ()):
            dots[doc_id] = dots.get(doc_id, 0.0) + alpha * q
    qnorm = qvec.norm
    scores = {
        doc_id: dot / (index.doc_vectors[doc_id].norm * qnorm)
        for doc_id, dot in dots.items()
        if dot > 0.0
    }
    return ScoredList.from_scores(query.id, SEMANTIC, scores, depth or config.k)


def search_bm25(
    query: Query,
    index: Index,
    config: QueryConfig,
    depth: Optional[int] = None,
) -> ScoredList:
    """Rank documents by Okapi BM25 over term postings, summed per query occurrence."""
    tokens = index.pipeline.query_tokens(query.text, index.vocabulary)
    stats = index.stats
    scores: dict[str, float] = {}
    for token in tokens:
        postings = index.term_postings.get(token.surface)
        if not postings:
            continue
        df = stats.term_df[token.surface]
        for doc_id, tf in postings:
            scores[doc_id] = scores.get(doc_id, 0.0) + bm25_term_score(
                tf, df, stats.doc_len[doc_id], stats, index.config.k1, index.config.b
            )
    scores = {doc_id: s for doc_id, s in scores.items() if s > 0.0}
    return ScoredList.from_scores(query.id, BM25, scores, depth or config.k)


def normalize_bm25(
    bm25_scores: Sequence[float], sem_min: float, sem_max: float
) -> list[float]:
    """
    Min-max map scores onto [sem_min, sem_max]; constant input maps to the midpoint.

    Raises:
        DomainError: Empty score list or sem_min > sem_max.
    """
    if not bm25_scores:
        raise DomainError("cannot normalize an empty score list")
    if sem_min > sem_max:
        raise DomainError(f"invalid interval [{sem_min}, {sem_max}]")
    low, high = min(bm25_scores), max(bm25_scores)
    if high == low:
        return [(sem_min + sem_max) / 2.0] * len(bm25_scores)
    scale = (sem_max - sem_min) / (high - low)
    return [sem_min + (s - low) * scale for s in bm25_scores]


def fuse(semantic: ScoredList, lexical: ScoredList, n: int) -> ScoredList:
    """
    Borda-style combination (N-n)*s_sem + (N-m)*ln(1+s_lex) over both lists' documents.

    A document missing from a list takes rank N+1 and score 0 there, and
    negative rank factors count as 0.

    Raises:
        DomainError: n < 1.
    """
    if n < 1:
        raise DomainError(f"fusion depth must be >= 1, got {n}")
    sem_ranks = {e.doc_id: e for e in semantic}
    lex_ranks = {e.doc_id: e for e in lexical}
    absent = ScoredDoc("", 0.0, n + 1)
    combined = {}
    for doc_id in sem_ranks.keys() | lex_ranks.keys():
        s = sem_ranks.get(doc_id, absent)
        m = lex_ranks.get(doc_id, absent)
        combined[doc_id] = max(0, n - s.rank) * s.score + max(0, n - m.rank) * math.log1p(
            m.score
        )
    return ScoredList.from_scores(semantic.query_id, COMBINED, combined)


def _normalized(lexical: ScoredList, sem_min: float, sem_max: float) -> ScoredList:
    scores = normalize_bm25([e.score for e in lexical], sem_min, sem_max)
    return ScoredList(
        lexical.query_id,
        lexical.system,
        [ScoredDoc(e.doc_id, s, e.rank) for e, s in zip(lexical, scores)],
    )


def search_combined(
    query: Query,
    index: Index,
    config: QueryConfig,
    embeddings: Optional[Mapping[str, np.ndarray]] = None,
) -> ScoredList:
    """Semantic and BM25 lists of depth fusion_n, normalized, fused, cut to k."""
    semantic = search_semantic(query, index, config, embeddings, depth=config.fusion_n)
    lexical = search_bm25(query, index, config, depth=config.fusion_n)
    if lexical.entries:
        if semantic.entries:
            sem_scores = [e.score for e in semantic]
            lexical = _normalized(lexical, min(sem_scores), max(sem_scores))
        else:
            logger.warning(
                f"Query {query.id}: empty semantic list, BM25 normalized onto [0, 1]"
            )
            lexical = _normalized(lexical, 0.0, 1.0)
    return fuse(semantic, lexical, config.fusion_n).truncate(config.k)


def avg_weights(
    term_counts: Mapping[str, int], stats: CorpusStats
) -> dict[str, float]:
    """tf * max(0, ln(N / (1 + df))) per surface."""
    weights = {}
    for surface, tf in term_counts.items():
        if stats.n_documents == 0:
            continue
        idf = math.log(stats.n_documents / (1 + stats.term_df.get(surface, 0)))
        weights[surface] = tf * max(0.0, idf)
    return weights


def avg_vector(
    tokens: Iterable[str],
    table: Callable[[str], Optional[np.ndarray]],
    stats: CorpusStats,
    dim: int,
) -> np.ndarray:
    """
    TF-IDF weighted mean of the tokens' embeddings.

    Returns the zero vector when no token has both an embedding and a
    positive weight.
    """
    total = 0.0
    acc = np.zeros(dim, dtype=np.float64)
    for surface, weight in sorted(avg_weights(Counter(tokens), stats).items()):
        vector = table(surface)
        if vector is None or weight == 0.0:
            continue
        acc += weight * vector
        total += weight
    return acc / total if total > 0.0 else acc


class AverageVectorBaseline:
    """Unit-normalized average vectors of every document, stacked for one product per query."""

    def __init__(self, index: Index, embeddings: Optional[Mapping[str, np.ndarray]] = None):
        self.index = index
        self.lookup = _vector_lookup(index, embeddings)
        self.dim = index.word_vectors.dim
        rows, doc_ids = [], []
        for doc_id in index.doc_ids:
            vector = avg_vector(
                index.doc_terms[doc_id].elements(), self.lookup, index.stats, self.dim
            )
            norm = np.linalg.norm(vector)
            if norm > 0.0:
                rows.append(vector / norm)
                doc_ids.append(doc_id)
        self.doc_ids = doc_ids
        self.matrix = np.vstack(rows) if rows else np.empty((0, self.dim))
        logger.debug(f"Average-vector baseline over {len(doc_ids)} documents")

    def search(self, query: Query, depth: int) -> ScoredList:
        tokens = self.index.pipeline.query_tokens(query.text, self.index.vocabulary)
        qvec = avg_vector((t.surface for t in tokens), self.lookup, self.index.stats, self.dim)
        qnorm = np.linalg.norm(qvec)
        if qnorm == 0.0 or not self.doc_ids:
            return ScoredList(query.id, AVG_BASELINE)
        sims = self.matrix @ (qvec / qnorm)
        scores = {doc_id: float(s) for doc_id, s in zip(self.doc_ids, sims)}
        return ScoredList.from_scores(query.id, AVG_BASELINE, scores, depth)


def search_avg_baseline(
    query: Query,
    index: Index,
    config: QueryConfig,
    embeddings: Optional[Mapping[str, np.ndarray]] = None,
    baseline: Optional[AverageVectorBaseline] = None,
) -> ScoredList:
    """Rank documents by cosine between query and document average embeddings."""
    baseline = baseline or AverageVectorBaseline(index, embeddings)
    return baseline.search(query, config.k)


class Searcher:
    """Runs one system over many queries against a shared, read-only index."""

    def __init__(
        self,
        index: Index,
        config: QueryConfig,
        embeddings: Optional[EmbeddingTable] = None,
        workers: int = 4,
    ):
        if embeddings is not None and embeddings.dim != index.word_vectors.dim:
            raise ConfigurationError(
                f"query embeddings have dimension {embeddings.dim}, "
                f"index has {index.word_vectors.dim}"
            )
        self.index = index
        self.config = config
        self.embeddings = embeddings
        self.workers = workers
        self._baseline: Optional[AverageVectorBaseline] = None

    def search(self, query: Query, system: str) -> ScoredList:
        if system == SEMANTIC:
            return search_semantic(query, self.index, self.config, self.embeddings)
        if system == BM25:
            return search_bm25(query, self.index, self.config)
        if system == COMBINED:
            return search_combined(query, self.index, self.config, self.embeddings)
        if system == AVG_BASELINE:
            if self._baseline is None:
                self._baseline = AverageVectorBaseline(self.index, self.embeddings)
            return self._baseline.search(query, self.config.k)
        raise ConfigurationError(f"Unknown system '{system}', expected one of {SYSTEMS}")

    def search_all(self, queries: Sequence[Query], system: str) -> list[ScoredList]:
        """Search every query concurrently; results are ordered by query id."""
        if system not in SYSTEMS:
            raise ConfigurationError(f"Unknown system '{system}', expected one of {SYSTEMS}")
        if system == AVG_BASELINE and self._baseline is None:
            self._baseline = AverageVectorBaseline(self.index, self.embeddings)
        ordered = sorted(queries, key=lambda q: q.id)
        with ThreadPoolExecutor(max_workers=self.workers) as executor:
            futures = [executor.submit(self.search, q, system) for q in ordered]
            results = [future.result() for future in futures]
        logger.info(f"Searched {len(results)} queries with system '{system}'")
        return results
