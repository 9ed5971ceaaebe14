"""Pytest fixtures for cluster-search tests."""

import json
import sys
from pathlib import Path

import numpy as np
import pytest

# Add parent to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from cluster_search.data.collections import Document, Query  # noqa: E402
from cluster_search.data.embeddings import EmbeddingTable  # noqa: E402
from cluster_search.indexer import IndexConfig, build_index  # noqa: E402
from cluster_search.text import TextPipeline  # noqa: E402


@pytest.fixture
def plane_table():
    """Three 2-d words: a and b nearly colinear, c orthogonal."""
    return EmbeddingTable(
        2,
        {
            "a": np.array([1.0, 0.0]),
            "b": np.array([1.0, 0.1]),
            "c": np.array([0.0, 1.0]),
        },
    )


@pytest.fixture
def toy_corpus():
    """Three short documents about cats, dogs and a city."""
    return [
        Document("d1", "the cat sat with a kitten. cat naps"),
        Document("d2", "a dog chased the puppy near Paris"),
        Document("d3", "kitten and puppy play in Paris today"),
    ]


@pytest.fixture
def toy_table():
    """Embeddings for toy_corpus (32-d): cat/kitten and dog/puppy are near-synonyms."""
    rng = np.random.default_rng(7)
    words = ["cat", "sat", "kitten", "naps", "dog", "chased", "puppy", "near", "play", "today",
             "paris", "feline", "hound"]
    vectors = {w: rng.normal(size=32) for w in words}
    vectors["kitten"] = vectors["cat"] + 0.01 * rng.normal(size=32)
    vectors["feline"] = vectors["cat"] + 0.01 * rng.normal(size=32)
    vectors["puppy"] = vectors["dog"] + 0.01 * rng.normal(size=32)
    vectors["hound"] = vectors["dog"] + 0.01 * rng.normal(size=32)
    return EmbeddingTable(32, vectors)


@pytest.fixture
def toy_pipeline():
    return TextPipeline.create(stopwords=["the", "a", "with", "and", "in"], rw_threshold=0)


@pytest.fixture
def toy_index(toy_corpus, toy_table, toy_pipeline):
    return build_index(toy_corpus, toy_table, IndexConfig(epsilon=0.2), toy_pipeline)


def make_collection(seed: int, n_docs: int = 100, n_groups: int = 30, dim: int = 16):
    """
    Random corpus over synonym groups of near-identical vectors.

    Returns:
        (documents, queries, table) where the table also covers a few words
        that never occur in the documents.
    """
    rng = np.random.default_rng(seed)
    vectors = {}
    groups = []
    for g in range(n_groups):
        base = rng.normal(size=dim)
        words = [f"g{g}w{i}" for i in range(3)]
        for w in words:
            vectors[w] = base + 0.02 * np.linalg.norm(base) * rng.normal(size=dim) / np.sqrt(dim)
        groups.append(words)
    # Third synonym of every group stays out of the corpus
    in_corpus = [w for words in groups for w in words[:2]]
    documents = []
    for i in range(n_docs):
        length = int(rng.integers(3, 12))
        words = [in_corpus[int(j)] for j in rng.integers(len(in_corpus), size=length)]
        if i % 7 == 0:
            words.insert(1, f"Name{i % 5}")
        documents.append(Document(f"doc{i:03d}", " ".join(words)))
    all_words = [w for words in groups for w in words]
    queries = [
        Query(f"q{i:02d}", " ".join(all_words[int(j)] for j in rng.integers(len(all_words), size=3)))
        for i in range(50)
    ]
    return documents, queries, EmbeddingTable(dim, vectors)


@pytest.fixture
def random_collection():
    return make_collection(seed=11)


@pytest.fixture
def random_index(random_collection):
    documents, _, table = random_collection
    return build_index(documents, table, IndexConfig(epsilon=0.1), TextPipeline.create(rw_threshold=0))


@pytest.fixture
def write_lines(tmp_path):
    """Write lines to a file under tmp_path and return its path."""

    def _write(name: str, lines) -> Path:
        path = tmp_path / name
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        return path

    return _write


@pytest.fixture
def cli_inputs(tmp_path, toy_corpus, toy_table):
    """Corpus, embeddings, queries, qrels and pairs files for command-line tests."""
    corpus = tmp_path / "corpus.jsonl"
    corpus.write_text(
        "".join(json.dumps({"id": d.id, "text": d.text}) + "\n" for d in toy_corpus),
        encoding="utf-8",
    )
    embeddings = tmp_path / "embeddings.vec"
    rows = [f"{len(toy_table)} {toy_table.dim}"]
    rows += [w + " " + " ".join(repr(float(v)) for v in toy_table[w]) for w in sorted(toy_table)]
    embeddings.write_text("\n".join(rows) + "\n", encoding="utf-8")
    queries = tmp_path / "queries.tsv"
    queries.write_text("q1\tkitten naps\nq2\tfeline\nq3\tdog Paris\n", encoding="utf-8")
    qrels = tmp_path / "qrels.txt"
    qrels.write_text("q1 0 d1 1\nq2 0 d1 1\nq3 0 d2 1\nq3 0 d3 1\n", encoding="utf-8")
    pairs = tmp_path / "pairs.tsv"
    pairs.write_text("cat\tkitten\ndog\tpuppy\n", encoding="utf-8")
    stopwords = tmp_path / "stopwords.txt"
    stopwords.write_text("the\na\nwith\nand\nin\n", encoding="utf-8")
    return {
        "corpus": corpus,
        "embeddings": embeddings,
        "queries": queries,
        "qrels": qrels,
        "synonym_pairs": pairs,
        "stopwords": stopwords,
        "index_dir": tmp_path / "index",
        "run": tmp_path / "run.txt",
    }


@pytest.fixture
def temp_config_file(tmp_path):
    """Config file with a few paths and parameters set."""
    config_data = {
        "paths": {"corpus": "data/corpus.jsonl", "index_dir": "data/index"},
        "parameters": {"epsilon": 0.25, "k": 20, "system": "bm25", "k_values": [5, 10]},
    }
    config_path = tmp_path / "config.json"
    with open(config_path, "w") as f:
        json.dump(config_data, f)
    return config_path
