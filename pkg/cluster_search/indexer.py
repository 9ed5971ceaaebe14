"""Cluster-space document vectors, corpus statistics, and lexical BM25 postings."""

import logging
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .clustering import DEFAULT_EPSILON, Cluster, ClusterConfig, ClusterSet, build_clusters
from .data.collections import Document
from .data.embeddings import EmbeddingTable
from .errors import ConfigurationError, DimensionError, UniquenessError, UnknownDocumentError
from .text import (
    TextPipeline,
    Token,
    VocabEntry,
    Vocabulary,
    count_corpus,
    document_tokens,
    vocabulary_from_counts,
    vocabulary_label,
)

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
LOG_BASE = "e"
DEFAULT_K1 = 1.2
DEFAULT_B = 0.75


@dataclass
class IndexConfig:
    """Parameters fixed at build time and recorded in the manifest."""

    epsilon: float = DEFAULT_EPSILON
    # "estimated", "override" or "default"
    epsilon_source: str = "default"
    gamma: float = 1.0
    k1: float = DEFAULT_K1
    b: float = DEFAULT_B

    def validate(self) -> list[str]:
        errors = ClusterConfig(self.epsilon).validate()
        if self.epsilon_source not in ("estimated", "override", "default"):
            errors.append(f"Invalid epsilon_source '{self.epsilon_source}'")
        if self.gamma <= 0:
            errors.append(f"Invalid gamma {self.gamma}: must be > 0")
        if self.k1 < 0:
            errors.append(f"Invalid k1 {self.k1}: must be >= 0")
        if not 0.0 <= self.b <= 1.0:
            errors.append(f"Invalid b {self.b}: must be in [0, 1]")
        return errors


@dataclass
class IndexManifest:
    """Every parameter that affects scores, plus the on-disk format version."""

    format_version: int
    epsilon: float
    epsilon_source: str
    gamma: float
    k1: float
    b: float
    rw_threshold: int
    log_base: str
    embedding_dim: int
    document_count: int
    cluster_count: int
    vocabulary_size: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class CorpusStats:
    """N, per-cluster document frequency N_i, document lengths, term document frequency."""

    n_documents: int = 0
    cluster_df: dict[int, int] = field(default_factory=dict)
    doc_len: dict[str, int] = field(default_factory=dict)
    avg_doc_len: float = 0.0
    term_df: dict[str, int] = field(default_factory=dict)


@dataclass
class DocVector:
    """Sparse cluster id -> alpha weights of one document."""

    doc_id: str
    weights: dict[int, float] = field(default_factory=dict)
    norm: float = 0.0

    @classmethod
    def from_weights(cls, doc_id: str, weights: Mapping[int, float]) -> "DocVector":
        kept = {cid: w for cid, w in weights.items() if w > 0.0}
        return cls(doc_id, kept, math.sqrt(sum(w * w for w in kept.values())))


class Index:
    """
    Cluster set, document vectors, postings and statistics over one corpus.

    Treat a built index as read-only; add_documents() is the only mutator and
    needs exclusive access.
    """

    def __init__(
        self,
        pipeline: TextPipeline,
        config: IndexConfig,
        vocabulary: Vocabulary,
        clusters: ClusterSet,
        word_vectors: EmbeddingTable,
        doc_terms: Mapping[str, Counter],
    ):
        self.pipeline = pipeline
        self.config = config
        self.vocabulary = vocabulary
        self.clusters = clusters
        self.word_vectors = word_vectors
        self.doc_ids: list[str] = list(doc_terms)
        self.doc_terms: dict[str, Counter] = dict(doc_terms)
        self.stats = CorpusStats()
        self.doc_vectors: dict[str, DocVector] = {}
        self.cluster_postings: dict[int, list[tuple[str, float]]] = {}
        self.term_postings: dict[str, list[tuple[str, int]]] = {}

    @property
    def manifest(self) -> IndexManifest:
        return IndexManifest(
            format_version=FORMAT_VERSION,
            epsilon=self.config.epsilon,
            epsilon_source=self.config.epsilon_source,
            gamma=self.config.gamma,
            k1=self.config.k1,
            b=self.config.b,
            rw_threshold=self.pipeline.rw_threshold,
            log_base=LOG_BASE,
            embedding_dim=self.word_vectors.dim,
            document_count=len(self.doc_ids),
            cluster_count=len(self.clusters),
            vocabulary_size=len(self.vocabulary),
        )

    def __contains__(self, doc_id: object) -> bool:
        return doc_id in self.doc_terms

    def __len__(self) -> int:
        return len(self.doc_ids)

    def word_vector(self, surface: str) -> Optional[np.ndarray]:
        return self.word_vectors.get(surface)

    def reweight(self) -> None:
        """Recompute statistics, document vectors and both posting lists."""
        self.stats = compute_stats(self.doc_terms, self.clusters)
        self.doc_vectors = {
            doc_id: build_doc_vector(doc_id, self.doc_terms[doc_id], self.clusters, self.stats)
            for doc_id in self.doc_ids
        }
        self.rebuild_postings()

    def rebuild_postings(self) -> None:
        """Derive cluster and term postings from document vectors and term counts."""
        self.cluster_postings = {}
        self.term_postings = {}
        for doc_id in self.doc_ids:
            for cluster_id, alpha in sorted(self.doc_vectors[doc_id].weights.items()):
                self.cluster_postings.setdefault(cluster_id, []).append((doc_id, alpha))
            for surface, tf in sorted(self.doc_terms[doc_id].items()):
                self.term_postings.setdefault(surface, []).append((doc_id, tf))


def cluster_frequency(doc_terms: Mapping[str, int], cluster: Cluster) -> int:
    """F_i^j: summed term frequency in the document of the cluster's words."""
    return sum(doc_terms.get(word, 0) for word in cluster.words)


def beta_factor(doc_terms: Mapping[str, int], cluster: Cluster) -> float:
    """Fraction of the cluster's words that occur in the document."""
    present = sum(1 for word in cluster.words if doc_terms.get(word, 0) >= 1)
    return present / len(cluster.words)


def cluster_idf(n_documents: int, cluster_df: int) -> float:
    """ln(N / (N_i + 1)), clamped at 0."""
    if n_documents == 0:
        return 0.0
    return max(0.0, math.log(n_documents / (cluster_df + 1)))


def cluster_weight(doc_terms: Mapping[str, int], cluster: Cluster, stats: CorpusStats) -> float:
    """alpha = beta * ln(1 + F) * max(0, ln(N / (N_i + 1)))."""
    frequency = cluster_frequency(doc_terms, cluster)
    if frequency == 0:
        return 0.0
    idf = cluster_idf(stats.n_documents, stats.cluster_df.get(cluster.id, 0))
    return beta_factor(doc_terms, cluster) * math.log1p(frequency) * idf


def build_doc_vector(
    doc_id: str, doc_terms: Mapping[str, int], clusters: ClusterSet, stats: CorpusStats
) -> DocVector:
    """Sparse vector over the clusters the document touches, zero weights dropped."""
    touched = {clusters.word_to_cluster[w] for w in doc_terms if w in clusters}
    weights = {cid: cluster_weight(doc_terms, clusters[cid], stats) for cid in sorted(touched)}
    return DocVector.from_weights(doc_id, weights)


def compute_stats(doc_terms: Mapping[str, Counter], clusters: ClusterSet) -> CorpusStats:
    stats = CorpusStats(n_documents=len(doc_terms))
    cluster_df: Counter = Counter()
    term_df: Counter = Counter()
    for doc_id, terms in doc_terms.items():
        stats.doc_len[doc_id] = sum(terms.values())
        term_df.update(terms.keys())
        cluster_df.update({clusters.word_to_cluster[w] for w in terms if w in clusters})
    stats.cluster_df = dict(sorted(cluster_df.items()))
    stats.term_df = dict(sorted(term_df.items()))
    if stats.n_documents:
        stats.avg_doc_len = sum(stats.doc_len.values()) / stats.n_documents
    return stats


def _tokenize_corpus(
    documents: Iterable[Document], pipeline: TextPipeline, existing: Iterable[str] = ()
) -> dict[str, list[Token]]:
    tokenized: dict[str, list[Token]] = {}
    seen = set(existing)
    for document in documents:
        if document.id in seen:
            raise UniquenessError(f"duplicate document id '{document.id}'")
        seen.add(document.id)
        tokenized[document.id] = document_tokens(document, pipeline.stopwords)
    return tokenized


def build_index(
    corpus: Sequence[Document],
    embeddings: EmbeddingTable,
    config: IndexConfig,
    pipeline: Optional[TextPipeline] = None,
) -> Index:
    """
    Preprocess, build the vocabulary, cluster it, and weight every document.

    An empty corpus yields a valid empty index.

    Raises:
        ConfigurationError: Invalid build parameters.
        UniquenessError: Two documents share an id.
    """
    errors = config.validate()
    if errors:
        raise ConfigurationError("; ".join(errors))
    pipeline = pipeline or TextPipeline()

    tokenized = _tokenize_corpus(corpus, pipeline)
    counts = count_corpus(tokenized.values())
    vocabulary = vocabulary_from_counts(
        counts, len(tokenized), pipeline.gazetteer, pipeline.rw_threshold
    )
    logger.info(f"Vocabulary: {len(vocabulary)} surfaces over {len(tokenized)} documents")

    word_vectors = embeddings.subset(vocabulary.entries)
    clusters = build_clusters(vocabulary, word_vectors, ClusterConfig(config.epsilon))

    doc_terms = {doc_id: Counter(t.surface for t in tokens) for doc_id, tokens in tokenized.items()}
    index = Index(pipeline, config, vocabulary, clusters, word_vectors, doc_terms)
    index.reweight()
    logger.info(
        f"Indexed {len(index)} documents into {len(clusters)} clusters "
        f"({sum(len(v.weights) for v in index.doc_vectors.values())} weights)"
    )
    return index


def add_documents(
    index: Index,
    documents: Sequence[Document],
    embeddings: Optional[EmbeddingTable] = None,
) -> Index:
    """
    Add documents to a built index.

    Unseen words are labelled from the new documents and inserted through the
    same single-pass procedure; existing clusters and labels stay as they are.
    All weights are recomputed since N, N_i and cluster sizes may change.
    """
    tokenized = _tokenize_corpus(documents, index.pipeline, existing=index.doc_ids)
    counts = count_corpus(tokenized.values())

    entries = dict(index.vocabulary.entries)
    new_words = []
    for surface, c in sorted(counts.items()):
        if surface in entries:
            old = entries[surface]
            entries[surface] = VocabEntry(tf=old.tf + c.tf, df=old.df + c.df, label=old.label)
        else:
            label = vocabulary_label(
                surface, c, index.pipeline.gazetteer, index.pipeline.rw_threshold
            )
            entries[surface] = VocabEntry(tf=c.tf, df=c.df, label=label)
            new_words.append(surface)

    word_vectors = index.word_vectors
    if embeddings is not None and new_words:
        if embeddings.dim != word_vectors.dim:
            raise DimensionError(
                f"embedding dimension {embeddings.dim} does not match the index ({word_vectors.dim})"
            )
        merged = dict(word_vectors)
        merged.update({w: embeddings[w] for w in new_words if w in embeddings})
        word_vectors = EmbeddingTable(word_vectors.dim, merged)

    index.vocabulary = Vocabulary(
        entries=dict(sorted(entries.items())),
        n_documents=index.vocabulary.n_documents + len(tokenized),
    )
    index.word_vectors = word_vectors
    build_clusters(
        index.vocabulary,
        index.word_vectors,
        ClusterConfig(index.config.epsilon),
        clusters=index.clusters,
    )

    for doc_id, tokens in tokenized.items():
        index.doc_ids.append(doc_id)
        index.doc_terms[doc_id] = Counter(t.surface for t in tokens)
    index.reweight()
    logger.info(f"Added {len(tokenized)} documents ({len(new_words)} new words)")
    return index


def bm25_idf(n_documents: int, df: int) -> float:
    """ln(1 + (N - df + 0.5) / (df + 0.5))."""
    return math.log(1.0 + (n_documents - df + 0.5) / (df + 0.5))


def bm25_term_score(tf: int, df: int, doc_len: int, stats: CorpusStats, k1: float, b: float) -> float:
    """Okapi BM25 contribution of one query term occurrence."""
    avg = stats.avg_doc_len or 1.0
    norm = tf + k1 * (1.0 - b + b * doc_len / avg)
    return bm25_idf(stats.n_documents, df) * tf * (k1 + 1.0) / norm


def bm25_score(query_tokens: Sequence[Token], doc_id: str, index: Index) -> float:
    """
    BM25 score of one document, computed directly from its term counts.

    Raises:
        UnknownDocumentError: doc_id is not indexed.
    """
    if doc_id not in index.doc_terms:
        raise UnknownDocumentError(doc_id)
    terms = index.doc_terms[doc_id]
    doc_len = index.stats.doc_len[doc_id]
    score = 0.0
    for token in query_tokens:
        tf = terms.get(token.surface, 0)
        if tf == 0:
            continue
        score += bm25_term_score(
            tf, index.stats.term_df[token.surface], doc_len, index.stats,
            index.config.k1, index.config.b,
        )
    return score
