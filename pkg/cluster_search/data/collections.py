"""Readers and writers for corpora, queries, qrels, lexicons and synonym pairs."""

import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from ..errors import ParseError, UniquenessError, ValidationError
from .files import atomic_write, iter_lines

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# Labels accepted in pre-annotated corpus records
ANNOTATION_LABELS = ("PLAIN", "NE")


@dataclass(frozen=True)
class Document:
    """A corpus document. annotations, when present, replace heuristic NE tagging."""

    id: str
    text: str
    annotations: Optional[tuple[tuple[str, str], ...]] = None


@dataclass(frozen=True)
class Query:
    """A query to run against the index."""

    id: str
    text: str


@dataclass
class Qrels:
    """Relevance judgments: (query id, doc id) -> grade, grade >= 1 is relevant."""

    judgments: dict[tuple[str, str], int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._relevant: dict[str, set[str]] = defaultdict(set)
        self._queries: set[str] = set()
        for (qid, doc_id), grade in self.judgments.items():
            if grade < 0:
                raise ValidationError(f"negative grade {grade} for ({qid}, {doc_id})")
            self._queries.add(qid)
            if grade >= 1:
                self._relevant[qid].add(doc_id)

    def query_ids(self) -> list[str]:
        """All judged query ids, sorted."""
        return sorted(self._queries)

    def relevant(self, qid: str) -> set[str]:
        """Doc ids judged relevant for qid (empty set if none)."""
        return set(self._relevant.get(qid, ()))

    def num_relevant(self, qid: str) -> int:
        return len(self._relevant.get(qid, ()))

    def __contains__(self, qid: object) -> bool:
        return qid in self._queries

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Qrels) and self.judgments == other.judgments


@dataclass
class SynonymLexicon:
    """Word -> non-empty list of synonyms. Keys are lowercased."""

    pairs: dict[str, list[str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for word, synonyms in self.pairs.items():
            if not synonyms:
                raise ValidationError(f"lexicon entry '{word}' has no synonyms")
            if word in (s.lower() for s in synonyms):
                raise ValidationError(f"lexicon entry '{word}' maps to itself")

    def synonyms(self, word: str) -> list[str]:
        return self.pairs.get(word.lower(), [])


def _check_unique(seen: set[str], record_id: str, path: PathLike, line: int) -> None:
    if record_id in seen:
        raise UniquenessError(f"{path}:{line}: duplicate id '{record_id}'")
    seen.add(record_id)


def read_corpus(path: PathLike) -> list[Document]:
    """
    Read a JSON Lines corpus of {"id": str, "text": str} records.

    A record may also carry "tokens": [{"text": str, "label": "NE"|"PLAIN"}],
    the pre-annotated variant, which replaces heuristic tagging for that document.

    Raises:
        ParseError: Malformed JSON or missing/invalid fields.
        UniquenessError: Two records share an id.
    """
    documents: list[Document] = []
    seen: set[str] = set()
    for line_number, line in iter_lines(path):
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e.msg}", path, line_number) from None
        if not isinstance(record, dict):
            raise ParseError("record must be a JSON object", path, line_number)

        doc_id, text = record.get("id"), record.get("text", "")
        if not isinstance(doc_id, str) or not doc_id:
            raise ParseError("'id' must be a non-empty string", path, line_number)
        if not isinstance(text, str):
            raise ParseError("'text' must be a string", path, line_number)
        _check_unique(seen, doc_id, path, line_number)

        annotations = None
        if "tokens" in record:
            annotations = _parse_annotations(record["tokens"], path, line_number)
        documents.append(Document(id=doc_id, text=text, annotations=annotations))

    logger.info(f"Read {len(documents)} documents from {path}")
    return documents


def _parse_annotations(tokens, path: PathLike, line_number: int):
    if not isinstance(tokens, list):
        raise ParseError("'tokens' must be an array", path, line_number)
    parsed = []
    for token in tokens:
        if not isinstance(token, dict) or not isinstance(token.get("text"), str):
            raise ParseError("each token needs a string 'text'", path, line_number)
        label = token.get("label", "PLAIN")
        if label not in ANNOTATION_LABELS:
            raise ParseError(f"unknown token label {label!r}", path, line_number)
        parsed.append((token["text"], label))
    return tuple(parsed)


def read_queries(path: PathLike) -> list[Query]:
    """
    Read a TSV query file, one "id<TAB>text" per line.

    Raises:
        ParseError: Line without a TAB or with an empty id.
        UniquenessError: Duplicate query id.
    """
    queries: list[Query] = []
    seen: set[str] = set()
    for line_number, line in iter_lines(path):
        if "\t" not in line:
            raise ParseError("expected 'id<TAB>text'", path, line_number)
        qid, text = line.split("\t", 1)
        qid = qid.strip()
        if not qid:
            raise ParseError("empty query id", path, line_number)
        _check_unique(seen, qid, path, line_number)
        queries.append(Query(id=qid, text=text.strip()))
    return queries


def read_qrels(path: PathLike) -> Qrels:
    """
    Read TREC qrels ("qid 0 docid grade"). Duplicate pairs keep the maximum grade.

    Raises:
        ParseError: Wrong column count or non-integer/negative grade.
    """
    judgments: dict[tuple[str, str], int] = {}
    for line_number, line in iter_lines(path):
        parts = line.split()
        if len(parts) != 4:
            raise ParseError(
                f"expected 4 columns 'qid 0 docid grade', got {len(parts)}",
                path,
                line_number,
            )
        qid, _, doc_id, grade_str = parts
        try:
            grade = int(grade_str)
        except ValueError:
            raise ParseError(f"invalid grade {grade_str!r}", path, line_number) from None
        if grade < 0:
            raise ParseError(f"negative grade {grade}", path, line_number)
        key = (qid, doc_id)
        judgments[key] = max(grade, judgments.get(key, grade))
    return Qrels(judgments)


def read_lexicon(path: PathLike) -> SynonymLexicon:
    """
    Read a JSON synonym lexicon {word: [synonym, ...]}.

    Raises:
        ParseError: Not a JSON object of string arrays.
        ValidationError: Empty synonym list or a word mapping to itself.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Lexicon not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", path, e.lineno) from None
    if not isinstance(data, dict):
        raise ParseError("lexicon must be a JSON object", path)

    pairs: dict[str, list[str]] = {}
    for word, synonyms in data.items():
        if not isinstance(synonyms, list) or not all(
            isinstance(s, str) for s in synonyms
        ):
            raise ParseError(f"entry '{word}' must be an array of strings", path)
        key = word.lower()
        merged = pairs.setdefault(key, [])
        merged.extend(s for s in synonyms if s not in merged)
    return SynonymLexicon(pairs)


def read_synonym_pairs(path: PathLike) -> list[tuple[str, str]]:
    """Read "word1<TAB>word2" synonym pairs used to estimate epsilon."""
    pairs = []
    for line_number, line in iter_lines(path):
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise ParseError("expected 'word1<TAB>word2'", path, line_number)
        pairs.append((parts[0].strip(), parts[1].strip()))
    return pairs


def write_corpus(documents: Iterable[Document], path: PathLike) -> None:
    with atomic_write(path) as f:
        for doc in documents:
            record: dict = {"id": doc.id, "text": doc.text}
            if doc.annotations is not None:
                record["tokens"] = [
                    {"text": text, "label": label} for text, label in doc.annotations
                ]
            f.write(json.dumps(record, ensure_ascii=False) + "\n")


def write_queries(queries: Sequence[Query], path: PathLike) -> None:
    with atomic_write(path) as f:
        for query in queries:
            f.write(f"{query.id}\t{query.text}\n")


def write_qrels(qrels: Qrels, path: PathLike) -> None:
    with atomic_write(path) as f:
        for (qid, doc_id), grade in sorted(qrels.judgments.items()):
            f.write(f"{qid} 0 {doc_id} {grade}\n")


def write_lexicon(lexicon: SynonymLexicon, path: PathLike) -> None:
    with atomic_write(path) as f:
        json.dump(lexicon.pairs, f, ensure_ascii=False, indent=2, sort_keys=True)


def write_synonym_pairs(pairs: Iterable[tuple[str, str]], path: PathLike) -> None:
    with atomic_write(path) as f:
        for a, b in pairs:
            f.write(f"{a}\t{b}\n")
