"""Tests for saving and loading index directories."""

import json

import numpy as np
import pytest

from cluster_search.data.index_store import load_index, read_manifest, save_index
from cluster_search.errors import CorruptIndexError, IncompatibleIndexError
from cluster_search.indexer import IndexConfig, build_index
from cluster_search.search import SYSTEMS, QueryConfig, Searcher
from cluster_search.text import TextPipeline


class TestIndexStore:
    """Tests for index persistence."""

    def test_roundtrip_contents(self, tmp_path, toy_index):
        """Test every index component survives save and load."""
        loaded = load_index(save_index(toy_index, tmp_path / "index"))
        assert loaded.manifest == toy_index.manifest
        assert loaded.pipeline == toy_index.pipeline
        assert loaded.vocabulary == toy_index.vocabulary
        assert loaded.doc_ids == toy_index.doc_ids
        assert loaded.doc_terms == toy_index.doc_terms
        assert loaded.doc_vectors == toy_index.doc_vectors
        assert loaded.stats == toy_index.stats
        assert loaded.cluster_postings == toy_index.cluster_postings
        assert loaded.term_postings == toy_index.term_postings
        for ours, theirs in zip(loaded.clusters, toy_index.clusters):
            assert (ours.id, ours.words, ours.singleton) == (theirs.id, theirs.words, theirs.singleton)
            np.testing.assert_array_equal(ours.centroid, theirs.centroid)

    def test_identical_search_results(self, tmp_path, random_index, random_collection):
        """Test every system gives bit-identical results before and after a roundtrip."""
        _, queries, table = random_collection
        loaded = load_index(save_index(random_index, tmp_path / "index"))
        config = QueryConfig(epsilon=0.1)
        before = Searcher(random_index, config, table, workers=1)
        after = Searcher(loaded, config, table, workers=1)
        for system in SYSTEMS:
            assert before.search_all(queries, system) == after.search_all(queries, system)

    def test_deterministic_files(self, tmp_path, random_collection):
        """Test two builds over the same inputs write byte-identical directories."""
        documents, _, table = random_collection
        dirs = []
        for name in ("one", "two"):
            index = build_index(
                documents, table, IndexConfig(epsilon=0.1), TextPipeline.create(rw_threshold=0)
            )
            dirs.append(save_index(index, tmp_path / name))
        names = sorted(p.name for p in dirs[0].iterdir())
        assert names == sorted(p.name for p in dirs[1].iterdir())
        for name in names:
            assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()

    def test_empty_index(self, tmp_path, plane_table):
        """Test an empty index roundtrips."""
        index = build_index([], plane_table, IndexConfig(epsilon=0.3))
        loaded = load_index(save_index(index, tmp_path / "index"))
        assert len(loaded) == 0
        assert loaded.manifest.embedding_dim == 2

    def test_missing_directory(self, tmp_path):
        """Test a missing directory raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            load_index(tmp_path / "none")

    def test_empty_directory(self, tmp_path):
        """Test a directory without a manifest is corrupt."""
        (tmp_path / "index").mkdir()
        with pytest.raises(CorruptIndexError):
            load_index(tmp_path / "index")

    def test_version_mismatch(self, tmp_path, toy_index):
        """Test another format version is refused."""
        directory = save_index(toy_index, tmp_path / "index")
        manifest = json.loads((directory / "manifest.json").read_text())
        manifest["format_version"] = 99
        (directory / "manifest.json").write_text(json.dumps(manifest))
        with pytest.raises(IncompatibleIndexError):
            read_manifest(directory)

    @pytest.mark.parametrize("name", ["centroids.npy", "stats.json", "clusters.json"])
    def test_missing_component(self, tmp_path, toy_index, name):
        """Test a missing component file is reported as corruption."""
        directory = save_index(toy_index, tmp_path / "index")
        (directory / name).unlink()
        with pytest.raises(CorruptIndexError, match=name):
            load_index(directory)

    def test_count_mismatch(self, tmp_path, toy_index):
        """Test contents that disagree with the manifest are corrupt."""
        directory = save_index(toy_index, tmp_path / "index")
        manifest = json.loads((directory / "manifest.json").read_text())
        manifest["document_count"] += 1
        (directory / "manifest.json").write_text(json.dumps(manifest))
        with pytest.raises(CorruptIndexError, match="manifest counts"):
            load_index(directory)
