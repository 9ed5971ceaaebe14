"""Single-pass, fixed-centroid grouping of vocabulary words into semantic clusters."""

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Sequence

import numpy as np

from .data.embeddings import EmbeddingTable
from .errors import DomainError, PreconditionError
from .text import Label, Vocabulary

logger = logging.getLogger(__name__)

# Used when no synonym-pair file is supplied
DEFAULT_EPSILON = 0.35


def _norm(v: np.ndarray) -> float:
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise DomainError("cosine is undefined for a zero vector")
    return n


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of the angle between two non-zero vectors of equal dimension."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DomainError(f"dimension mismatch: {u.shape} vs {v.shape}")
    value = float(np.dot(u, v)) / (_norm(u) * _norm(v))
    return min(1.0, max(-1.0, value))


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cosine(u, v), in [0, 2]."""
    return 1.0 - cosine(u, v)


def estimate_epsilon(pairs: Sequence[tuple[str, str]], table: EmbeddingTable) -> float:
    """
    Mean cosine distance over known synonym pairs.

    Raises:
        DomainError: No pairs given.
        MissingWordError: A pair word has no embedding.
    """
    if not pairs:
        raise DomainError("epsilon estimation needs at least one synonym pair")
    distances = [cosine_distance(table.vector(a), table.vector(b)) for a, b in pairs]
    epsilon = float(np.mean(distances))
    logger.info(f"Estimated epsilon {epsilon:.6f} from {len(pairs)} synonym pairs")
    return epsilon


@dataclass
class ClusterConfig:
    """Clustering threshold (cosine distance)."""

    epsilon: float = DEFAULT_EPSILON

    def validate(self) -> list[str]:
        errors = []
        if not 0.0 < self.epsilon < 1.0:
            errors.append(f"Invalid epsilon {self.epsilon}: must be in (0, 1)")
        return errors


@dataclass
class Cluster:
    """
    A group of words anchored on the vector of its first word.

    centroid is None only for singleton clusters of words without embeddings.
    """

    id: int
    centroid: Optional[np.ndarray]
    words: list[str] = field(default_factory=list)
    singleton: bool = False


class ClusterSet:
    """
    Ordered clusters plus the word -> cluster id map.

    Non-singleton centroids are kept in a growing matrix so the closest
    cluster search is one matrix-vector product per word.
    """

    def __init__(self) -> None:
        self.clusters: list[Cluster] = []
        self.word_to_cluster: dict[str, int] = {}
        self.distance_evaluations = 0
        self._matrix: Optional[np.ndarray] = None
        self._norms: Optional[np.ndarray] = None
        self._candidate_ids: list[int] = []

    def __len__(self) -> int:
        return len(self.clusters)

    def __iter__(self) -> Iterator[Cluster]:
        return iter(self.clusters)

    def __getitem__(self, cluster_id: int) -> Cluster:
        return self.clusters[cluster_id]

    def __contains__(self, word: object) -> bool:
        return word in self.word_to_cluster

    def cluster_of(self, word: str) -> Optional[int]:
        return self.word_to_cluster.get(word)

    @property
    def candidate_ids(self) -> list[int]:
        """Ids of non-singleton clusters, in creation order."""
        return list(self._candidate_ids)

    def add_cluster(
        self, words: Sequence[str], centroid: Optional[np.ndarray], singleton: bool
    ) -> int:
        """Append a cluster holding words. The first word's vector is the centroid."""
        if not words:
            raise PreconditionError("a cluster needs at least one word")
        if singleton and len(words) != 1:
            raise PreconditionError("singleton clusters hold exactly one word")
        if not singleton and centroid is None:
            raise PreconditionError("non-singleton clusters need a centroid")
        for word in words:
            if word in self.word_to_cluster:
                raise PreconditionError(f"word '{word}' is already clustered")

        if centroid is not None:
            centroid = np.array(centroid, dtype=np.float64)
            centroid.setflags(write=False)
        cluster_id = len(self.clusters)
        self.clusters.append(
            Cluster(id=cluster_id, centroid=centroid, words=list(words), singleton=singleton)
        )
        for word in words:
            self.word_to_cluster[word] = cluster_id
        if not singleton:
            self._append_candidate(cluster_id, centroid)
        return cluster_id

    def add_word(self, cluster_id: int, word: str) -> None:
        """Append word to an existing non-singleton cluster. The centroid is unchanged."""
        cluster = self.clusters[cluster_id]
        if cluster.singleton:
            raise PreconditionError(f"cluster {cluster_id} is a singleton")
        if word in self.word_to_cluster:
            raise PreconditionError(f"word '{word}' is already clustered")
        cluster.words.append(word)
        self.word_to_cluster[word] = cluster_id

    def _append_candidate(self, cluster_id: int, centroid: np.ndarray) -> None:
        n = len(self._candidate_ids)
        if self._matrix is None:
            self._matrix = np.empty((16, centroid.size), dtype=np.float64)
            self._norms = np.empty(16, dtype=np.float64)
        elif n == self._matrix.shape[0]:
            self._matrix = np.vstack([self._matrix, np.empty_like(self._matrix)])
            self._norms = np.concatenate([self._norms, np.empty_like(self._norms)])
        assert self._norms is not None
        self._matrix[n] = centroid
        self._norms[n] = _norm(centroid)
        self._candidate_ids.append(cluster_id)

    def candidate_distances(self, vector: np.ndarray) -> tuple[list[int], np.ndarray]:
        """
        Cosine distance from vector to every non-singleton centroid. Read-only.

        Returns:
            (cluster ids, distances) aligned, in creation order
        """
        n = len(self._candidate_ids)
        if n == 0:
            return [], np.empty(0)
        assert self._matrix is not None and self._norms is not None
        vector = np.asarray(vector, dtype=np.float64)
        sims = (self._matrix[:n] @ vector) / (self._norms[:n] * _norm(vector))
        return self.candidate_ids, 1.0 - np.clip(sims, -1.0, 1.0)


def find_closest_cluster(
    clusters: ClusterSet, vector: np.ndarray, epsilon: float
) -> Optional[int]:
    """
    Id of the non-singleton cluster whose centroid is nearest to vector, if within epsilon.

    Ties go to the lowest cluster id. Singleton clusters are never candidates.
    """
    ids, distances = clusters.candidate_distances(vector)
    clusters.distance_evaluations += len(ids)
    if not ids:
        return None
    best = int(np.argmin(distances))
    cluster_id = ids[best]
    centroid = clusters[cluster_id].centroid
    assert centroid is not None
    if cosine_distance(centroid, vector) <= epsilon:
        return cluster_id
    return None


def insert_word(
    clusters: ClusterSet,
    surface: str,
    label: Label,
    vector: Optional[np.ndarray],
    epsilon: float,
) -> ClusterSet:
    """
    Place one word into the cluster set.

    NE/RW words and words without a vector open a singleton cluster. Other
    words join the closest cluster within epsilon or open a new cluster
    seeded with their own vector.

    Raises:
        PreconditionError: surface is already clustered.
    """
    if surface in clusters:
        raise PreconditionError(f"word '{surface}' is already clustered")

    if label in (Label.NE, Label.RW) or vector is None:
        clusters.add_cluster([surface], vector, singleton=True)
        return clusters

    cluster_id = find_closest_cluster(clusters, vector, epsilon)
    if cluster_id is None:
        clusters.add_cluster([surface], vector, singleton=False)
    else:
        clusters.add_word(cluster_id, surface)
    return clusters


def build_clusters(
    vocabulary: Vocabulary,
    table: Mapping[str, np.ndarray],
    config: ClusterConfig,
    clusters: Optional[ClusterSet] = None,
) -> ClusterSet:
    """
    Insert every vocabulary surface not yet clustered, most frequent first.

    Passing an existing ClusterSet extends it in place; existing centroids
    never move.
    """
    errors = config.validate()
    if errors:
        raise DomainError("; ".join(errors))

    clusters = clusters if clusters is not None else ClusterSet()
    before = len(clusters)
    for surface in vocabulary.insertion_order():
        if surface in clusters:
            continue
        entry = vocabulary.entries[surface]
        insert_word(clusters, surface, entry.label, table.get(surface), config.epsilon)

    logger.info(
        f"Clustering: {len(clusters) - before} new clusters, {len(clusters)} total, "
        f"epsilon {config.epsilon:.6f}"
    )
    return clusters


@dataclass
class ClusterSummary:
    """Shape of a cluster set, as reported by the cluster-stats command."""

    cluster_count: int
    word_count: int
    size_histogram: dict[int, int]
    singleton_fraction: float
    mean_centroid_distance: float

    def to_dict(self) -> dict:
        return {
            "cluster_count": self.cluster_count,
            "word_count": self.word_count,
            "size_histogram": {str(k): v for k, v in sorted(self.size_histogram.items())},
            "singleton_fraction": self.singleton_fraction,
            "mean_centroid_distance": self.mean_centroid_distance,
        }


def cluster_summary(
    clusters: Iterable[Cluster], word_vectors: Mapping[str, np.ndarray]
) -> ClusterSummary:
    """
    Count, size histogram, singleton fraction, and mean member-to-centroid
    distance over non-singleton clusters.
    """
    sizes: Counter = Counter()
    singletons = 0
    total = 0
    words = 0
    distances = []
    for cluster in clusters:
        total += 1
        words += len(cluster.words)
        sizes[len(cluster.words)] += 1
        if cluster.singleton:
            singletons += 1
            continue
        for word in cluster.words:
            vector = word_vectors.get(word)
            if vector is not None and cluster.centroid is not None:
                distances.append(cosine_distance(cluster.centroid, vector))

    return ClusterSummary(
        cluster_count=total,
        word_count=words,
        size_histogram=dict(sizes),
        singleton_fraction=singletons / total if total else 0.0,
        mean_centroid_distance=float(np.mean(distances)) if distances else 0.0,
    )
