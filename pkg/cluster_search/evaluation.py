"""Retrieval metrics, paired t-test and synonym-based query reformulation."""

import logging
import math
import re
from dataclasses import dataclass, field
from typing import AbstractSet, Iterable, Mapping, Optional, Sequence, Union

import numpy as np
from scipy import stats

from .data.collections import Qrels, Query, SynonymLexicon
from .data.runs import RunEntry, group_run
from .errors import AlignmentError, DomainError

logger = logging.getLogger(__name__)

DEFAULT_K_VALUES = (5, 10, 20, 50)
_WORD = re.compile(r"[^\W_]+")
_METRIC = re.compile(r"^(p|r)@(\d+)$")

Runs = Mapping[str, Sequence[str]]


def _check(relevant: AbstractSet[str]) -> None:
    if not relevant:
        raise DomainError("metric needs at least one relevant document")


def _relevant_ranks(ranking: Sequence[str], relevant: AbstractSet[str]) -> list[int]:
    """1-based ranks of relevant documents, counting each document at its first rank only."""
    seen: set[str] = set()
    ranks = []
    for rank, doc_id in enumerate(ranking, 1):
        if doc_id in relevant and doc_id not in seen:
            seen.add(doc_id)
            ranks.append(rank)
    return ranks


def precision_recall_at_k(
    ranking: Sequence[str], relevant: AbstractSet[str], k: int
) -> tuple[float, float]:
    """
    P@k and R@k. Missing ranks count as non-relevant; P@k always divides by k.

    Raises:
        DomainError: k < 1 or no relevant documents.
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    _check(relevant)
    hits = len(_relevant_ranks(ranking[:k], relevant))
    return hits / k, hits / len(relevant)


def average_precision(ranking: Sequence[str], relevant: AbstractSet[str]) -> float:
    _check(relevant)
    ranks = _relevant_ranks(ranking, relevant)
    return sum(hits / rank for hits, rank in enumerate(ranks, 1)) / len(relevant)


def r_precision(ranking: Sequence[str], relevant: AbstractSet[str]) -> float:
    """Precision at cutoff R = number of relevant documents."""
    return precision_recall_at_k(ranking, relevant, len(relevant))[0]


def reciprocal_rank(ranking: Sequence[str], relevant: AbstractSet[str]) -> float:
    _check(relevant)
    for rank, doc_id in enumerate(ranking, 1):
        if doc_id in relevant:
            return 1.0 / rank
    return 0.0


def evaluated_queries(runs: Runs, qrels: Qrels) -> tuple[list[str], list[str]]:
    """
    Split query ids into evaluated and skipped.

    Evaluated: judged queries with at least one relevant document, whether or
    not the run answered them. Skipped: run queries without judgments and
    judged queries without relevant documents.
    """
    evaluated = [qid for qid in qrels.query_ids() if qrels.num_relevant(qid) > 0]
    judged = set(evaluated)
    skipped = sorted((set(runs) | set(qrels.query_ids())) - judged)
    return evaluated, skipped


def _mean_over(runs: Runs, qrels: Qrels, metric) -> float:
    evaluated, _ = evaluated_queries(runs, qrels)
    if not evaluated:
        return 0.0
    return float(np.mean([metric(runs.get(qid, ()), qrels.relevant(qid)) for qid in evaluated]))


def map_over(runs: Runs, qrels: Qrels) -> float:
    """Mean average precision over evaluated queries."""
    return _mean_over(runs, qrels, average_precision)


def mrr(runs: Runs, qrels: Qrels) -> float:
    """Mean reciprocal rank of the first relevant document."""
    return _mean_over(runs, qrels, reciprocal_rank)


@dataclass
class QueryMetrics:
    ap: float
    r_prec: float
    rr: float
    precision: dict[int, float] = field(default_factory=dict)
    recall: dict[int, float] = field(default_factory=dict)

    def get(self, metric: str) -> float:
        """Value of a metric column: ap, r_prec, rr, p@k or r@k."""
        if metric in ("ap", "r_prec", "rr"):
            return getattr(self, metric)
        match = _METRIC.match(metric)
        if match:
            values = self.precision if match.group(1) == "p" else self.recall
            k = int(match.group(2))
            if k in values:
                return values[k]
        raise KeyError(f"metric '{metric}' not in report")

    def to_dict(self) -> dict:
        result = {"ap": self.ap, "r_prec": self.r_prec, "rr": self.rr}
        for k in sorted(self.precision):
            result[f"p@{k}"] = self.precision[k]
            result[f"r@{k}"] = self.recall[k]
        return result


@dataclass
class MetricsReport:
    """Per-query metrics plus arithmetic means over the evaluated queries."""

    per_query: dict[str, QueryMetrics]
    k_values: tuple[int, ...]
    skipped: list[str] = field(default_factory=list)

    @property
    def query_count(self) -> int:
        return len(self.per_query)

    def _mean(self, metric: str) -> float:
        if not self.per_query:
            return 0.0
        return float(np.mean([m.get(metric) for m in self.per_query.values()]))

    @property
    def map(self) -> float:
        return self._mean("ap")

    @property
    def mean_r_prec(self) -> float:
        return self._mean("r_prec")

    @property
    def mrr(self) -> float:
        return self._mean("rr")

    def aggregate(self) -> dict[str, float]:
        result = {"map": self.map, "r_prec": self.mean_r_prec, "mrr": self.mrr}
        for k in self.k_values:
            result[f"p@{k}"] = self._mean(f"p@{k}")
            result[f"r@{k}"] = self._mean(f"r@{k}")
        return result

    def series(self, metric: str) -> dict[str, float]:
        """One metric column keyed by query id."""
        return {qid: m.get(metric) for qid, m in sorted(self.per_query.items())}

    def to_dict(self) -> dict:
        return {
            "aggregate": self.aggregate(),
            "query_count": self.query_count,
            "skipped_queries": len(self.skipped),
            "per_query": {qid: m.to_dict() for qid, m in sorted(self.per_query.items())},
        }

    def format_table(self) -> str:
        rows = [("queries", str(self.query_count)), ("skipped", str(len(self.skipped)))]
        rows += [(name, f"{value:.4f}") for name, value in self.aggregate().items()]
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


def _as_runs(run: Union[Iterable[RunEntry], Runs]) -> dict[str, list[str]]:
    if isinstance(run, Mapping):
        return {qid: list(docs) for qid, docs in run.items()}
    return group_run(run)


def evaluate_run(
    run: Union[Iterable[RunEntry], Runs],
    qrels: Qrels,
    k_values: Sequence[int] = DEFAULT_K_VALUES,
) -> MetricsReport:
    """
    Full per-query and aggregate report for one run.

    Judged queries the run did not answer score 0; see evaluated_queries()
    for which queries are skipped.
    """
    runs = _as_runs(run)
    k_values = tuple(sorted(set(k_values)))
    if any(k < 1 for k in k_values):
        raise DomainError(f"k values must be >= 1, got {k_values}")
    evaluated, skipped = evaluated_queries(runs, qrels)
    if skipped:
        logger.warning(f"Skipped {len(skipped)} queries without relevant judgments")

    per_query = {}
    for qid in evaluated:
        ranking = runs.get(qid, [])
        relevant = qrels.relevant(qid)
        at_k = {k: precision_recall_at_k(ranking, relevant, k) for k in k_values}
        per_query[qid] = QueryMetrics(
            ap=average_precision(ranking, relevant),
            r_prec=r_precision(ranking, relevant),
            rr=reciprocal_rank(ranking, relevant),
            precision={k: p for k, (p, _) in at_k.items()},
            recall={k: r for k, (_, r) in at_k.items()},
        )
    return MetricsReport(per_query, k_values, skipped)


def topk_curves(
    run: Union[Iterable[RunEntry], Runs], qrels: Qrels, max_k: int
) -> list[tuple[int, float, float]]:
    """Mean P@k and R@k for k = 1..max_k over the evaluated queries."""
    runs = _as_runs(run)
    evaluated, _ = evaluated_queries(runs, qrels)
    curve = []
    for k in range(1, max_k + 1):
        if not evaluated:
            curve.append((k, 0.0, 0.0))
            continue
        pairs = [precision_recall_at_k(runs.get(q, []), qrels.relevant(q), k) for q in evaluated]
        curve.append(
            (k, float(np.mean([p for p, _ in pairs])), float(np.mean([r for _, r in pairs])))
        )
    return curve


@dataclass
class TTestResult:
    """Paired t-test outcome. t and p_value are None when every difference is zero."""

    t: Optional[float]
    df: int
    p_value: Optional[float]
    mean_difference: float
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "df": self.df,
            "p_value": self.p_value,
            "mean_difference": self.mean_difference,
            "no_difference": self.degenerate,
        }

    def describe(self) -> str:
        if self.degenerate:
            return f"no difference (df={self.df})"
        return (
            f"t={self.t:.4f} df={self.df} p={self.p_value:.4f} "
            f"mean difference={self.mean_difference:.4f}"
        )


def paired_t_test(series_a: Sequence[float], series_b: Sequence[float]) -> TTestResult:
    """
    Two-sided paired Student t-test on aligned per-query values.

    Raises:
        AlignmentError: Series differ in length or hold fewer than two values.
    """
    if len(series_a) != len(series_b):
        raise AlignmentError(f"series lengths differ: {len(series_a)} vs {len(series_b)}")
    if len(series_a) < 2:
        raise AlignmentError("paired t-test needs at least two aligned values")

    a = np.asarray(series_a, dtype=np.float64)
    b = np.asarray(series_b, dtype=np.float64)
    diffs = a - b
    df = len(diffs) - 1
    mean_difference = float(np.mean(diffs))
    if not np.any(diffs):
        return TTestResult(None, df, None, 0.0, degenerate=True)
    if np.all(diffs == diffs[0]):
        # Constant non-zero difference: zero variance, infinitely significant
        return TTestResult(math.copysign(math.inf, mean_difference), df, 0.0, mean_difference)

    result = stats.ttest_rel(a, b)
    return TTestResult(float(result.statistic), df, float(result.pvalue), mean_difference)


def align_series(
    series_a: Mapping[str, float], series_b: Mapping[str, float]
) -> tuple[list[float], list[float]]:
    """
    Pair two per-query series by query id.

    Raises:
        AlignmentError: The query id sets differ.
    """
    if series_a.keys() != series_b.keys():
        only_a = sorted(series_a.keys() - series_b.keys())
        only_b = sorted(series_b.keys() - series_a.keys())
        raise AlignmentError(f"query ids differ: only in first {only_a}, only in second {only_b}")
    qids = sorted(series_a)
    return [series_a[q] for q in qids], [series_b[q] for q in qids]


def reformulate_queries(
    queries: Sequence[Query], lexicon: SynonymLexicon, p: float, seed: int
) -> list[Query]:
    """
    Replace each word that has synonyms, with probability p, by one of them.

    Words are visited in query order and the generator is drawn only for
    mapped words, so a seed fixes the output. Everything else in the text is
    kept verbatim.

    Raises:
        DomainError: p outside [0, 1].
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"replacement probability must be in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    replaced = 0

    def substitute(match: re.Match) -> str:
        nonlocal replaced
        synonyms = lexicon.synonyms(match.group())
        if not synonyms or rng.random() >= p:
            return match.group()
        replaced += 1
        return synonyms[int(rng.integers(len(synonyms)))]

    result = [Query(q.id, _WORD.sub(substitute, q.text)) for q in queries]
    logger.info(f"Reformulated {len(result)} queries, {replaced} words replaced (p={p})")
    return result
