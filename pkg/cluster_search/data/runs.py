"""TREC run files: "qid Q0 docid rank score tag"."""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

from ..errors import ParseError, ValidationError
from .files import atomic_write, iter_lines

logger = logging.getLogger(__name__)

SCORE_DECIMALS = 6


@dataclass(frozen=True)
class RunEntry:
    """One ranked result line."""

    query_id: str
    doc_id: str
    rank: int
    score: float
    tag: str

    def to_line(self) -> str:
        return (
            f"{self.query_id} Q0 {self.doc_id} {self.rank} "
            f"{self.score:.{SCORE_DECIMALS}f} {self.tag}"
        )


def validate_run(entries: Iterable[RunEntry]) -> None:
    """
    Check per-query rank and score invariants.

    Raises:
        ValidationError: Rank gap or duplicate, a document listed twice for one
            query, non-finite score, or a score that increases with rank.
    """
    by_query: dict[str, list[RunEntry]] = defaultdict(list)
    seen: set[tuple[str, str]] = set()
    for entry in entries:
        if not math.isfinite(entry.score):
            raise ValidationError(
                f"query {entry.query_id}: non-finite score for {entry.doc_id}"
            )
        key = (entry.query_id, entry.doc_id)
        if key in seen:
            raise ValidationError(
                f"query {entry.query_id}: document {entry.doc_id} listed more than once"
            )
        seen.add(key)
        by_query[entry.query_id].append(entry)

    for qid, rows in by_query.items():
        rows = sorted(rows, key=lambda e: e.rank)
        ranks = [e.rank for e in rows]
        if ranks != list(range(1, len(rows) + 1)):
            raise ValidationError(
                f"query {qid}: ranks must be 1..{len(rows)} without gaps, got {ranks}"
            )
        for prev, cur in zip(rows, rows[1:]):
            if cur.score > prev.score:
                raise ValidationError(
                    f"query {qid}: score increases from rank {prev.rank} "
                    f"({prev.score}) to rank {cur.rank} ({cur.score})"
                )


def write_run(entries: Sequence[RunEntry], path: Union[str, Path]) -> None:
    """Validate and atomically write entries in TREC 6-column format."""
    validate_run(entries)
    with atomic_write(path) as f:
        for entry in entries:
            f.write(entry.to_line() + "\n")
    logger.info(f"Wrote {len(entries)} run lines to {path}")


def read_run(path: Union[str, Path]) -> list[RunEntry]:
    """
    Read a TREC run file.

    Raises:
        ParseError: Wrong column count or non-numeric rank/score.
        ValidationError: Rank or score invariants violated.
    """
    entries = []
    for line_number, line in iter_lines(path):
        parts = line.split()
        if len(parts) != 6:
            raise ParseError(
                f"expected 6 columns 'qid Q0 docid rank score tag', got {len(parts)}",
                path,
                line_number,
            )
        qid, _, doc_id, rank_str, score_str, tag = parts
        try:
            rank = int(rank_str)
            score = float(score_str)
        except ValueError:
            raise ParseError("rank must be an integer and score a real", path, line_number) from None
        entries.append(RunEntry(qid, doc_id, rank, score, tag))
    validate_run(entries)
    return entries


def group_run(entries: Iterable[RunEntry]) -> dict[str, list[str]]:
    """Map query id -> doc ids ordered by rank."""
    by_query: dict[str, list[RunEntry]] = defaultdict(list)
    for entry in entries:
        by_query[entry.query_id].append(entry)
    return {
        qid: [e.doc_id for e in sorted(rows, key=lambda e: e.rank)]
        for qid, rows in by_query.items()
    }
