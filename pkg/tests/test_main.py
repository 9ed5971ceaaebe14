"""Tests for the command-line entry point."""

import json
import logging
from pathlib import Path

import pytest

from cluster_search import main as cli
from cluster_search.config import CONFIG_ENV
from cluster_search.data.collections import read_queries
from cluster_search.data.index_store import read_manifest
from cluster_search.data.runs import read_run


@pytest.fixture(autouse=True)
def no_config_file(mocker, monkeypatch):
    """Keep user and working-directory config files out of the tests."""
    mocker.patch("cluster_search.config.CONFIG_PATHS", [Path("/nonexistent/config.json")])
    monkeypatch.delenv(CONFIG_ENV, raising=False)


def _index_args(inputs, *extra):
    return [
        "index",
        "--corpus", str(inputs["corpus"]),
        "--embeddings", str(inputs["embeddings"]),
        "--stopwords", str(inputs["stopwords"]),
        "--index-dir", str(inputs["index_dir"]),
        "--rw-threshold", "0",
        *extra,
    ]


def _search_args(inputs, system="combined", *extra):
    return [
        "search",
        "--index-dir", str(inputs["index_dir"]),
        "--queries", str(inputs["queries"]),
        "--embeddings", str(inputs["embeddings"]),
        "--run", str(inputs["run"]),
        "--system", system,
        *extra,
    ]


@pytest.fixture
def built_index(cli_inputs):
    assert cli.main(_index_args(cli_inputs, "--epsilon", "0.2")) == cli.EXIT_OK
    return cli_inputs


class TestIndexCommand:
    """Tests for the index subcommand."""

    def test_estimated_epsilon(self, cli_inputs, capsys):
        """Test epsilon is estimated from synonym pairs and recorded."""
        args = _index_args(cli_inputs, "--synonym-pairs", str(cli_inputs["synonym_pairs"]))
        assert cli.main(args) == cli.EXIT_OK
        out = capsys.readouterr().out
        assert "(estimated)" in out
        assert read_manifest(cli_inputs["index_dir"]).epsilon_source == "estimated"

    def test_override_epsilon(self, built_index, capsys):
        """Test an explicit epsilon wins."""
        manifest = read_manifest(built_index["index_dir"])
        assert manifest.epsilon == 0.2
        assert manifest.epsilon_source == "override"
        assert manifest.document_count == 3

    def test_default_epsilon(self, cli_inputs, caplog):
        """Test the documented default is used without pairs, with a warning."""
        assert cli.main(_index_args(cli_inputs)) == cli.EXIT_OK
        assert read_manifest(cli_inputs["index_dir"]).epsilon_source == "default"
        assert "default epsilon" in caplog.text

    def test_missing_corpus_file(self, cli_inputs, tmp_path, caplog):
        """Test a missing input file exits with the I/O code and names the module."""
        args = _index_args(cli_inputs)
        args[args.index("--corpus") + 1] = str(tmp_path / "none.jsonl")
        assert cli.main(args) == cli.EXIT_IO
        assert "files: File not found" in caplog.text

    def test_malformed_corpus(self, cli_inputs, caplog):
        """Test a malformed corpus exits with the parse code."""
        cli_inputs["corpus"].write_text("{broken\n", encoding="utf-8")
        assert cli.main(_index_args(cli_inputs)) == cli.EXIT_PARSE
        assert "corpus.jsonl:1" in caplog.text

    def test_missing_required_path(self, cli_inputs, caplog):
        """Test an unset required path exits with the validation code."""
        assert cli.main(["index", "--corpus", str(cli_inputs["corpus"])]) == cli.EXIT_INVALID
        assert "--embeddings" in caplog.text

    def test_write_failure(self, cli_inputs, mocker):
        """Test an error while saving exits with the I/O code."""
        mocker.patch("cluster_search.main.save_index", side_effect=PermissionError("read-only"))
        assert cli.main(_index_args(cli_inputs)) == cli.EXIT_IO


class TestSearchCommand:
    """Tests for the search subcommand."""

    @pytest.mark.parametrize("system", ["semantic", "bm25", "combined", "avg-baseline"])
    def test_writes_valid_run(self, built_index, system):
        """Test every system writes a run the reader accepts."""
        assert cli.main(_search_args(built_index, system)) == cli.EXIT_OK
        entries = read_run(built_index["run"])
        assert {e.tag for e in entries} <= {system}
        assert {e.query_id for e in entries} <= {"q1", "q2", "q3"}

    def test_bm25_results(self, built_index):
        """Test lexical matches for a query sharing words with two documents."""
        assert cli.main(_search_args(built_index, "bm25")) == cli.EXIT_OK
        entries = [e for e in read_run(built_index["run"]) if e.query_id == "q3"]
        assert {e.doc_id for e in entries} == {"d2", "d3"}
        assert entries[0].doc_id == "d2"

    def test_unknown_system_is_usage_error(self, built_index):
        """Test argparse rejects an unknown system."""
        with pytest.raises(SystemExit) as exc_info:
            cli.main(_search_args(built_index, "tfidf"))
        assert exc_info.value.code == cli.EXIT_USAGE

    def test_gamma_mismatch(self, built_index, caplog):
        """Test a gamma that contradicts the index is refused."""
        assert cli.main(_search_args(built_index, "semantic", "--gamma", "2.0")) == cli.EXIT_INVALID
        assert "rebuild the index" in caplog.text

    @pytest.mark.parametrize(
        "override", [["--k1", "5.0"], ["--b", "0.0"], ["--rw-threshold", "3"]]
    )
    def test_bm25_parameter_mismatch(self, built_index, override, caplog):
        """Test BM25 and rare-word overrides that differ from the index are refused."""
        assert cli.main(_search_args(built_index, "bm25", *override)) == cli.EXIT_INVALID
        assert "rebuild the index" in caplog.text
        assert not built_index["run"].exists()

    def test_matching_bm25_parameters(self, built_index):
        """Test overrides equal to the build values are accepted."""
        args = _search_args(built_index, "bm25", "--k1", "1.2", "--b", "0.75", "--rw-threshold", "0")
        assert cli.main(args) == cli.EXIT_OK

    def test_missing_index(self, cli_inputs):
        """Test searching without an index directory exits with the I/O code."""
        assert cli.main(_search_args(cli_inputs, "bm25")) == cli.EXIT_IO


class TestEvaluationCommands:
    """Tests for evaluate, compare and reformulate."""

    @pytest.fixture
    def run_file(self, built_index):
        assert cli.main(_search_args(built_index, "bm25")) == cli.EXIT_OK
        return built_index

    def test_evaluate(self, run_file, tmp_path, capsys):
        """Test the table is printed and the JSON report written."""
        output = tmp_path / "report.json"
        args = [
            "evaluate",
            "--run", str(run_file["run"]),
            "--qrels", str(run_file["qrels"]),
            "--output", str(output),
            "--k-values", "1", "2",
            "--curve-depth", "3",
        ]
        assert cli.main(args) == cli.EXIT_OK
        assert "map" in capsys.readouterr().out
        report = json.loads(output.read_text())
        assert report["query_count"] == 3
        assert set(report["aggregate"]) >= {"map", "r_prec", "mrr", "p@1", "r@2"}
        assert [row["k"] for row in report["topk_curves"]] == [1, 2, 3]

    def test_compare_run_with_itself(self, run_file, tmp_path):
        """Test comparing a run with itself reports no difference."""
        output = tmp_path / "ttest.json"
        args = [
            "compare",
            "--run", str(run_file["run"]),
            "--run-b", str(run_file["run"]),
            "--qrels", str(run_file["qrels"]),
            "--metric", "p@5",
            "--output", str(output),
        ]
        assert cli.main(args) == cli.EXIT_OK
        result = json.loads(output.read_text())
        assert result["no_difference"] is True
        assert result["metric"] == "p@5"
        assert result["df"] == 2

    def test_reformulate(self, cli_inputs, tmp_path):
        """Test p = 1 replaces every lexicon word."""
        lexicon = tmp_path / "lexicon.json"
        lexicon.write_text(json.dumps({"kitten": ["cat"], "dog": ["hound"]}))
        output = tmp_path / "reformulated.tsv"
        args = [
            "reformulate",
            "--queries", str(cli_inputs["queries"]),
            "--lexicon", str(lexicon),
            "--p", "1",
            "--output", str(output),
        ]
        assert cli.main(args) == cli.EXIT_OK
        texts = {q.id: q.text for q in read_queries(output)}
        assert texts == {"q1": "cat naps", "q2": "feline", "q3": "hound Paris"}


class TestInspectionCommands:
    """Tests for cluster-stats and estimate-epsilon."""

    def test_cluster_stats(self, built_index, tmp_path):
        """Test the cluster summary is written as JSON."""
        output = tmp_path / "stats.json"
        args = ["cluster-stats", "--index-dir", str(built_index["index_dir"]), "--output", str(output)]
        assert cli.main(args) == cli.EXIT_OK
        summary = json.loads(output.read_text())
        assert summary["cluster_count"] == read_manifest(built_index["index_dir"]).cluster_count
        assert 0.0 <= summary["singleton_fraction"] <= 1.0

    def test_estimate_epsilon(self, cli_inputs, capsys):
        """Test the estimate is printed."""
        args = [
            "estimate-epsilon",
            "--embeddings", str(cli_inputs["embeddings"]),
            "--synonym-pairs", str(cli_inputs["synonym_pairs"]),
        ]
        assert cli.main(args) == cli.EXIT_OK
        value = float(capsys.readouterr().out.strip().splitlines()[-1])
        assert 0.0 < value < 0.2

    def test_config_file(self, built_index, tmp_path):
        """Test paths can come from a config file."""
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"paths": {"index_dir": str(built_index["index_dir"])}}))
        output = tmp_path / "stats.json"
        assert cli.main(["cluster-stats", "-c", str(config), "--output", str(output)]) == cli.EXIT_OK
        assert output.exists()

    def test_verbose(self, built_index, tmp_path):
        """Test -v enables debug logging."""
        output = tmp_path / "stats.json"
        args = ["cluster-stats", "-v", "--index-dir", str(built_index["index_dir"]), "--output", str(output)]
        assert cli.main(args) == cli.EXIT_OK
        assert logging.getLogger().level == logging.DEBUG
        logging.getLogger().setLevel(logging.INFO)

    def test_no_command(self):
        """Test a missing subcommand is a usage error."""
        with pytest.raises(SystemExit) as exc_info:
            cli.main([])
        assert exc_info.value.code == cli.EXIT_USAGE
