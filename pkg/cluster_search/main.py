"""Command-line entry point for cluster-search."""

import argparse
import dataclasses
import json
import logging
import sys
import traceback
from pathlib import Path
from typing import Callable, Optional

from .clustering import DEFAULT_EPSILON, cluster_summary, estimate_epsilon
from .config import PathsConfig, ParametersConfig, RunConfig, apply_overrides, load_config
from .data.collections import (
    read_corpus,
    read_lexicon,
    read_qrels,
    read_queries,
    read_synonym_pairs,
    write_queries,
)
from .data.embeddings import load_embeddings
from .data.files import atomic_write, read_word_list
from .data.index_store import load_index, save_index
from .data.runs import read_run, write_run
from .errors import ClusterSearchError, ParseError
from .evaluation import align_series, evaluate_run, paired_t_test, reformulate_queries, topk_curves
from .indexer import DEFAULT_B, DEFAULT_K1, IndexConfig, build_index
from .search import SYSTEMS, QueryConfig, Searcher
from .text import DEFAULT_RW_THRESHOLD, TextPipeline, document_tokens, preprocess, tokenize

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    handlers=[
        logging.StreamHandler(sys.stdout),
    ],
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_PARSE = 4
EXIT_INVALID = 5


def _emit(data: dict, output: Optional[str]) -> None:
    text = json.dumps(data, indent=2, sort_keys=True)
    if output:
        with atomic_write(output) as f:
            f.write(text + "\n")
        logger.info(f"Wrote {output}")
    else:
        print(text)


def _pipeline(config: RunConfig) -> TextPipeline:
    paths = config.paths
    return TextPipeline.create(
        stopwords=read_word_list(paths.stopwords) if paths.stopwords else (),
        gazetteer=read_word_list(paths.gazetteer) if paths.gazetteer else (),
        rw_threshold=(
            config.parameters.rw_threshold
            if config.parameters.rw_threshold is not None
            else DEFAULT_RW_THRESHOLD
        ),
    )


def cmd_index(config: RunConfig) -> int:
    """Build the index from corpus and embeddings and save it."""
    paths, params = config.paths, config.parameters
    paths.require("embeddings", "corpus", "index_dir")
    pipeline = _pipeline(config)
    corpus = read_corpus(paths.corpus)

    pairs = read_synonym_pairs(paths.synonym_pairs) if paths.synonym_pairs else []
    words = {t.surface for doc in corpus for t in document_tokens(doc, pipeline.stopwords)}
    words.update(w for pair in pairs for w in pair)
    embeddings = load_embeddings(paths.embeddings, vocab_filter=words)

    if params.epsilon is not None:
        epsilon, source = params.epsilon, "override"
    elif pairs:
        epsilon, source = estimate_epsilon(pairs, embeddings), "estimated"
    else:
        logger.warning(f"No synonym pairs given, using default epsilon {DEFAULT_EPSILON}")
        epsilon, source = DEFAULT_EPSILON, "default"

    index_config = IndexConfig(
        epsilon=epsilon,
        epsilon_source=source,
        gamma=params.gamma if params.gamma is not None else 1.0,
        k1=params.k1 if params.k1 is not None else DEFAULT_K1,
        b=params.b if params.b is not None else DEFAULT_B,
    )
    index = build_index(corpus, embeddings, index_config, pipeline)
    save_index(index, paths.index_dir)

    print(f"clusters:   {len(index.clusters)}")
    print(f"vocabulary: {len(index.vocabulary)}")
    print(f"epsilon:    {epsilon:.6f} ({source})")
    return EXIT_OK


def cmd_search(config: RunConfig) -> int:
    """Run every query through the selected system and write a TREC run."""
    paths, params = config.paths, config.parameters
    paths.require("index_dir", "queries", "run")
    index = load_index(paths.index_dir)
    query_config = QueryConfig.from_manifest(
        index.manifest,
        k=params.k,
        fusion_n=params.fusion_n,
        gamma=params.gamma,
        epsilon=params.epsilon,
        k1=params.k1,
        b=params.b,
        rw_threshold=params.rw_threshold,
    )
    queries = read_queries(paths.queries)

    embeddings = None
    if paths.embeddings:
        words = {t.surface for q in queries for t in tokenize(preprocess(q.text))}
        embeddings = load_embeddings(paths.embeddings, vocab_filter=words)

    searcher = Searcher(index, query_config, embeddings, workers=params.workers)
    results = searcher.search_all(queries, params.system)
    entries = [entry for result in results for entry in result.to_run_entries()]
    write_run(entries, paths.run)
    print(f"{len(entries)} results for {len(results)} queries written to {paths.run}")
    return EXIT_OK


def cmd_evaluate(config: RunConfig) -> int:
    """Print the metrics table and the JSON report for one run."""
    paths, params = config.paths, config.parameters
    paths.require("run", "qrels")
    run = read_run(paths.run)
    qrels = read_qrels(paths.qrels)
    report = evaluate_run(run, qrels, params.k_values)

    data = report.to_dict()
    if params.curve_depth:
        data["topk_curves"] = [
            {"k": k, "precision": p, "recall": r}
            for k, p, r in topk_curves(run, qrels, params.curve_depth)
        ]
    print(report.format_table())
    _emit(data, paths.output)
    return EXIT_OK


def cmd_compare(config: RunConfig) -> int:
    """Paired t-test between two runs on one per-query metric."""
    paths, params = config.paths, config.parameters
    paths.require("run", "run_b", "qrels")
    qrels = read_qrels(paths.qrels)
    cutoff = params.metric_cutoff()
    k_values = sorted(set(params.k_values) | ({cutoff} if cutoff else set()))
    series = [
        evaluate_run(read_run(path), qrels, k_values).series(params.metric)
        for path in (paths.run, paths.run_b)
    ]
    result = paired_t_test(*align_series(*series))

    print(f"{params.metric}: {result.describe()}")
    _emit({"metric": params.metric, **result.to_dict()}, paths.output)
    return EXIT_OK


def cmd_reformulate(config: RunConfig) -> int:
    """Write a query file with words replaced by lexicon synonyms."""
    paths, params = config.paths, config.parameters
    paths.require("queries", "lexicon", "output")
    queries = reformulate_queries(
        read_queries(paths.queries), read_lexicon(paths.lexicon), params.p, params.seed
    )
    write_queries(queries, paths.output)
    print(f"{len(queries)} queries written to {paths.output}")
    return EXIT_OK


def cmd_cluster_stats(config: RunConfig) -> int:
    """Print cluster count, size histogram, singleton fraction and centroid spread."""
    config.paths.require("index_dir")
    index = load_index(config.paths.index_dir)
    summary = cluster_summary(index.clusters, index.word_vectors)
    _emit(summary.to_dict(), config.paths.output)
    return EXIT_OK


def cmd_estimate_epsilon(config: RunConfig) -> int:
    """Print the mean cosine distance over the synonym pairs."""
    paths = config.paths
    paths.require("embeddings", "synonym_pairs")
    pairs = read_synonym_pairs(paths.synonym_pairs)
    embeddings = load_embeddings(paths.embeddings, vocab_filter={w for p in pairs for w in p})
    print(f"{estimate_epsilon(pairs, embeddings):.6f}")
    return EXIT_OK


COMMANDS: dict[str, tuple[Callable[[RunConfig], int], str]] = {
    "index": (cmd_index, "Build an index from a corpus and word embeddings"),
    "search": (cmd_search, "Search queries against an index and write a TREC run"),
    "evaluate": (cmd_evaluate, "Evaluate a run against qrels"),
    "compare": (cmd_compare, "Paired t-test between two runs on one metric"),
    "reformulate": (cmd_reformulate, "Replace query words with lexicon synonyms"),
    "cluster-stats": (cmd_cluster_stats, "Summarize the clusters of an index"),
    "estimate-epsilon": (cmd_estimate_epsilon, "Estimate epsilon from synonym pairs"),
}

_FLAG_TYPES = {
    "epsilon": float,
    "gamma": float,
    "k1": float,
    "b": float,
    "k": int,
    "fusion_n": int,
    "rw_threshold": int,
    "p": float,
    "seed": int,
    "curve_depth": int,
    "workers": int,
}


def _option_parser() -> argparse.ArgumentParser:
    """Options shared by every subcommand, one flag per config field."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("-c", "--config", type=Path, help="Path to a JSON config file")
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable debug logging")
    paths = parser.add_argument_group("paths")
    for f in dataclasses.fields(PathsConfig):
        paths.add_argument("--" + f.name.replace("_", "-"), dest=f.name, default=None)
    params = parser.add_argument_group("parameters")
    for f in dataclasses.fields(ParametersConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.name == "system":
            params.add_argument(flag, dest=f.name, choices=SYSTEMS, default=None)
        elif f.name == "k_values":
            params.add_argument(flag, dest=f.name, type=int, nargs="+", default=None)
        else:
            params.add_argument(flag, dest=f.name, type=_FLAG_TYPES.get(f.name, str), default=None)
    return parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cluster-search",
        description="cluster-search - semantic cluster retrieval fused with BM25",
    )
    options = _option_parser()
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        subparsers.add_parser(name, parents=[options], help=help_text, description=help_text)
    return parser


def _raising_module(error: BaseException) -> str:
    frames = traceback.extract_tb(error.__traceback__)
    return Path(frames[-1].filename).stem if frames else "main"


def _exit_code(error: BaseException) -> int:
    if isinstance(error, (ParseError, json.JSONDecodeError)):
        return EXIT_PARSE
    if isinstance(error, OSError):
        return EXIT_IO
    return EXIT_INVALID


def main(argv: Optional[list[str]] = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)

    # Set logging level
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    command, _ = COMMANDS[args.command]
    overrides = {
        k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")
    }
    try:
        config = apply_overrides(load_config(args.config), overrides)
        return command(config)
    except (OSError, ClusterSearchError, ValueError) as e:
        logger.error(f"{_raising_module(e)}: {e}")
        return _exit_code(e)


if __name__ == "__main__":
    sys.exit(main())
