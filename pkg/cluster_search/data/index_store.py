"""
On-disk index directory.

    manifest.json       format version and every score-affecting parameter
    pipeline.json       stopwords, gazetteer, rare-word threshold
    vocabulary.json     surface, tf, df, label per vocabulary entry
    clusters.json       cluster words and flags, in id order
    centroids.npy       centroid rows for clusters that have one
    word_vectors.json   word order of word_vectors.npy
    word_vectors.npy    embeddings of the vocabulary words
    documents.json      per-document term counts, in index order
    doc_vectors.json    sparse alpha weights per document
    stats.json          N, N_i, document lengths, term document frequency

JSON floats are written with repr precision and numpy arrays in .npy, so a
save/load roundtrip reproduces every score bit for bit.
"""

import json
import logging
from collections import Counter
from pathlib import Path
from typing import Any, Union

import numpy as np

from ..clustering import ClusterSet
from ..errors import CorruptIndexError, IncompatibleIndexError, PreconditionError
from ..indexer import FORMAT_VERSION, CorpusStats, DocVector, Index, IndexConfig, IndexManifest
from ..text import Label, TextPipeline, VocabEntry, Vocabulary
from .embeddings import EmbeddingTable
from .files import atomic_write

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
PIPELINE = "pipeline.json"
VOCABULARY = "vocabulary.json"
CLUSTERS = "clusters.json"
CENTROIDS = "centroids.npy"
WORD_VECTOR_WORDS = "word_vectors.json"
WORD_VECTORS = "word_vectors.npy"
DOCUMENTS = "documents.json"
DOC_VECTORS = "doc_vectors.json"
STATS = "stats.json"


def _write_json(path: Path, data: Any) -> None:
    with atomic_write(path) as f:
        json.dump(data, f, sort_keys=True, ensure_ascii=False)
        f.write("\n")


def _write_array(path: Path, array: np.ndarray) -> None:
    with atomic_write(path, "wb") as f:
        np.save(f, array, allow_pickle=False)


def save_index(index: Index, directory: Union[str, Path]) -> Path:
    """
    Write the index into directory, each file atomically.

    Returns:
        The index directory
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    dim = index.word_vectors.dim

    _write_json(
        directory / PIPELINE,
        {
            "stopwords": sorted(index.pipeline.stopwords),
            "gazetteer": sorted(index.pipeline.gazetteer),
            "rw_threshold": index.pipeline.rw_threshold,
        },
    )
    _write_json(
        directory / VOCABULARY,
        {
            "n_documents": index.vocabulary.n_documents,
            "entries": [
                [surface, e.tf, e.df, e.label.value]
                for surface, e in sorted(index.vocabulary.entries.items())
            ],
        },
    )

    centroids = [c.centroid for c in index.clusters if c.centroid is not None]
    _write_json(
        directory / CLUSTERS,
        [
            {
                "id": c.id,
                "words": c.words,
                "singleton": c.singleton,
                "has_centroid": c.centroid is not None,
            }
            for c in index.clusters
        ],
    )
    _write_array(
        directory / CENTROIDS,
        np.vstack(centroids) if centroids else np.empty((0, dim), dtype=np.float64),
    )

    words = sorted(index.word_vectors)
    _write_json(directory / WORD_VECTOR_WORDS, {"dim": dim, "words": words})
    _write_array(
        directory / WORD_VECTORS,
        np.vstack([index.word_vectors[w] for w in words])
        if words
        else np.empty((0, dim), dtype=np.float64),
    )

    _write_json(
        directory / DOCUMENTS,
        [[doc_id, sorted(index.doc_terms[doc_id].items())] for doc_id in index.doc_ids],
    )
    _write_json(
        directory / DOC_VECTORS,
        [
            [doc_id, sorted(index.doc_vectors[doc_id].weights.items())]
            for doc_id in index.doc_ids
        ],
    )
    stats = index.stats
    _write_json(
        directory / STATS,
        {
            "n_documents": stats.n_documents,
            "cluster_df": sorted(stats.cluster_df.items()),
            "doc_len": stats.doc_len,
            "avg_doc_len": stats.avg_doc_len,
            "term_df": stats.term_df,
        },
    )

    # Manifest last: a directory without one is never mistaken for a full index
    _write_json(directory / MANIFEST, index.manifest.to_dict())
    logger.info(f"Saved index ({len(index)} documents, {len(index.clusters)} clusters) to {directory}")
    return directory


def _read_json(path: Path) -> Any:
    if not path.exists():
        raise CorruptIndexError(f"{path.name} missing from index directory {path.parent}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise CorruptIndexError(f"{path}: invalid JSON ({e})") from e


def _read_array(path: Path) -> np.ndarray:
    if not path.exists():
        raise CorruptIndexError(f"{path.name} missing from index directory {path.parent}")
    try:
        return np.load(path, allow_pickle=False)
    except ValueError as e:
        raise CorruptIndexError(f"{path}: unreadable array ({e})") from e


def read_manifest(directory: Union[str, Path]) -> IndexManifest:
    """
    Read and version-check the manifest.

    Raises:
        FileNotFoundError: directory does not exist.
        CorruptIndexError: Manifest missing or malformed.
        IncompatibleIndexError: Manifest written by another format version.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"Index directory not found: {directory}")
    data = _read_json(directory / MANIFEST)
    version = data.get("format_version") if isinstance(data, dict) else None
    if version != FORMAT_VERSION:
        raise IncompatibleIndexError(
            f"index format version {version} is not supported (expected {FORMAT_VERSION})"
        )
    try:
        return IndexManifest(**data)
    except TypeError as e:
        raise CorruptIndexError(f"malformed manifest: {e}") from e


def _load_clusters(directory: Path) -> ClusterSet:
    records = _read_json(directory / CLUSTERS)
    centroids = _read_array(directory / CENTROIDS)
    clusters = ClusterSet()
    row = 0
    try:
        for record in records:
            centroid = None
            if record["has_centroid"]:
                centroid = centroids[row]
                row += 1
            cluster_id = clusters.add_cluster(record["words"], centroid, record["singleton"])
            if cluster_id != record["id"]:
                raise CorruptIndexError(f"cluster ids out of order at {record['id']}")
    except (KeyError, IndexError, PreconditionError) as e:
        raise CorruptIndexError(f"inconsistent cluster files: {e}") from e
    if row != len(centroids):
        raise CorruptIndexError(f"{len(centroids)} centroid rows for {row} clusters")
    return clusters


def load_index(directory: Union[str, Path]) -> Index:
    """
    Load an index directory written by save_index.

    Raises:
        FileNotFoundError: directory does not exist.
        IncompatibleIndexError: Format version mismatch.
        CorruptIndexError: Missing file or inconsistent contents.
    """
    directory = Path(directory)
    manifest = read_manifest(directory)

    try:
        pipeline_data = _read_json(directory / PIPELINE)
        pipeline = TextPipeline.create(
            pipeline_data["stopwords"], pipeline_data["gazetteer"], pipeline_data["rw_threshold"]
        )

        vocab_data = _read_json(directory / VOCABULARY)
        vocabulary = Vocabulary(
            entries={
                surface: VocabEntry(tf=tf, df=df, label=Label(label))
                for surface, tf, df, label in vocab_data["entries"]
            },
            n_documents=vocab_data["n_documents"],
        )

        vector_meta = _read_json(directory / WORD_VECTOR_WORDS)
        matrix = _read_array(directory / WORD_VECTORS)
        if len(matrix) != len(vector_meta["words"]):
            raise CorruptIndexError("word vector rows do not match the word list")
        word_vectors = EmbeddingTable(
            vector_meta["dim"], dict(zip(vector_meta["words"], matrix))
        )

        documents = _read_json(directory / DOCUMENTS)
        doc_terms = {doc_id: Counter(dict(terms)) for doc_id, terms in documents}
        clusters = _load_clusters(directory)

        config = IndexConfig(
            epsilon=manifest.epsilon,
            epsilon_source=manifest.epsilon_source,
            gamma=manifest.gamma,
            k1=manifest.k1,
            b=manifest.b,
        )
        index = Index(pipeline, config, vocabulary, clusters, word_vectors, doc_terms)

        stats_data = _read_json(directory / STATS)
        index.stats = CorpusStats(
            n_documents=stats_data["n_documents"],
            cluster_df={int(cid): n for cid, n in stats_data["cluster_df"]},
            doc_len=stats_data["doc_len"],
            avg_doc_len=stats_data["avg_doc_len"],
            term_df=stats_data["term_df"],
        )
        for doc_id, weights in _read_json(directory / DOC_VECTORS):
            index.doc_vectors[doc_id] = DocVector.from_weights(
                doc_id, {int(cid): w for cid, w in weights}
            )
    except (KeyError, TypeError, ValueError) as e:
        raise CorruptIndexError(f"malformed index directory {directory}: {e}") from e

    if index.doc_vectors.keys() != index.doc_terms.keys():
        raise CorruptIndexError("document vectors and term counts cover different documents")
    if (len(index), len(clusters), len(vocabulary)) != (
        manifest.document_count,
        manifest.cluster_count,
        manifest.vocabulary_size,
    ):
        raise CorruptIndexError("index contents do not match the manifest counts")

    index.rebuild_postings()
    logger.info(f"Loaded index ({len(index)} documents, {len(clusters)} clusters) from {directory}")
    return index
