"""Text cleaning, tokenization, NE/RW annotation and corpus vocabulary."""

import enum
import html
import logging
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import AbstractSet, Iterable, Mapping, Optional, Sequence

from .data.collections import Document

logger = logging.getLogger(__name__)

_TAG = re.compile(r"<[^<>]+>")
_URL = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_HASHTAG = re.compile(r"#+(?=\w)")
_SPACES = re.compile(r"\s+")
_WORD = re.compile(r"[^\W_]+")
_SENTENCE_END = re.compile(r"[.!?]")

# Documented default for the rare-word document-frequency threshold
DEFAULT_RW_THRESHOLD = 1


class Label(str, enum.Enum):
    """Token label driving cluster construction."""

    PLAIN = "PLAIN"
    NE = "NE"
    RW = "RW"


@dataclass(frozen=True)
class Token:
    """A word occurrence. surface is lowercased, original keeps its casing."""

    surface: str
    original: str
    position: int
    label: Label = Label.PLAIN
    sentence_start: bool = False
    # Label came from a pre-annotated corpus record
    annotated: bool = False


@dataclass
class VocabEntry:
    tf: int
    df: int
    label: Label


@dataclass
class Vocabulary:
    """Distinct surfaces of a corpus with term/document frequencies and labels."""

    entries: dict[str, VocabEntry] = field(default_factory=dict)
    n_documents: int = 0

    def __contains__(self, surface: object) -> bool:
        return surface in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, surface: str) -> Optional[VocabEntry]:
        return self.entries.get(surface)

    def df(self, surface: str) -> int:
        entry = self.entries.get(surface)
        return entry.df if entry else 0

    def insertion_order(self) -> list[str]:
        """Surfaces by descending corpus frequency, ties broken lexicographically."""
        return sorted(self.entries, key=lambda s: (-self.entries[s].tf, s))


def preprocess(raw: str) -> str:
    """
    Remove HTML tags, URLs and hashtag markers, and collapse whitespace.

    Cleaning is repeated until nothing changes, so the function is idempotent
    even when removing one tag exposes another.
    """
    text = raw
    while True:
        cleaned = html.unescape(text)
        cleaned = _TAG.sub(" ", cleaned)
        cleaned = _URL.sub(" ", cleaned)
        cleaned = _HASHTAG.sub("", cleaned)
        cleaned = _SPACES.sub(" ", cleaned).strip()
        if cleaned == text:
            return cleaned
        text = cleaned


def tokenize(text: str, stopwords: AbstractSet[str] = frozenset()) -> list[Token]:
    """
    Split on non-alphanumeric boundaries and drop stopwords.

    Positions are consecutive from 0 after filtering. sentence_start marks the
    first word of the text and words following '.', '!' or '?', computed
    before stopwords are removed.
    """
    tokens: list[Token] = []
    previous_end = 0
    for index, match in enumerate(_WORD.finditer(text)):
        original = match.group()
        sentence_start = index == 0 or bool(
            _SENTENCE_END.search(text, previous_end, match.start())
        )
        previous_end = match.end()
        surface = original.lower()
        if surface in stopwords:
            continue
        tokens.append(
            Token(
                surface=surface,
                original=original,
                position=len(tokens),
                sentence_start=sentence_start,
            )
        )
    return tokens


def _is_capitalized(token: Token) -> bool:
    return token.original[:1].isupper()


def annotate(
    tokens: Sequence[Token],
    gazetteer: Optional[AbstractSet[str]],
    vocabulary: Vocabulary,
    rw_threshold: int = DEFAULT_RW_THRESHOLD,
) -> list[Token]:
    """
    Label each token NE, RW or PLAIN.

    NE: surface in the gazetteer, or original capitalized at a non-sentence-
    initial position. RW: document frequency <= rw_threshold and not NE.
    Tokens from pre-annotated records keep their NE/PLAIN decision.
    """
    gazetteer = gazetteer or frozenset()
    labelled = []
    for token in tokens:
        if token.annotated:
            is_ne = token.label == Label.NE
        else:
            is_ne = token.surface in gazetteer or (
                _is_capitalized(token) and not token.sentence_start
            )
        if is_ne:
            label = Label.NE
        elif vocabulary.df(token.surface) <= rw_threshold:
            label = Label.RW
        else:
            label = Label.PLAIN
        labelled.append(replace(token, label=label))
    return labelled


def document_tokens(document: Document, stopwords: AbstractSet[str]) -> list[Token]:
    """
    Tokenize a document, honouring pre-annotated token arrays when present.

    Labels are not final; pass the result through annotate().
    """
    if document.annotations is None:
        return tokenize(preprocess(document.text), stopwords)

    tokens: list[Token] = []
    for text, label in document.annotations:
        for token in tokenize(preprocess(text), stopwords):
            tokens.append(
                replace(
                    token,
                    position=len(tokens),
                    label=Label.NE if label == Label.NE.value else Label.PLAIN,
                    annotated=True,
                )
            )
    return tokens


@dataclass
class _SurfaceCounts:
    """Per-surface partial counts. Merging is associative and commutative."""

    tf: int = 0
    df: int = 0
    noninitial: int = 0
    capitalized_noninitial: int = 0
    annotated_ne: int = 0
    annotated: int = 0

    def merge(self, other: "_SurfaceCounts") -> "_SurfaceCounts":
        return _SurfaceCounts(
            self.tf + other.tf,
            self.df + other.df,
            self.noninitial + other.noninitial,
            self.capitalized_noninitial + other.capitalized_noninitial,
            self.annotated_ne + other.annotated_ne,
            self.annotated + other.annotated,
        )


def count_document(tokens: Iterable[Token]) -> dict[str, _SurfaceCounts]:
    """Partial vocabulary counts for one tokenized document."""
    counts: dict[str, _SurfaceCounts] = {}
    for token in tokens:
        c = counts.setdefault(token.surface, _SurfaceCounts(df=1))
        c.tf += 1
        if token.annotated:
            c.annotated += 1
            c.annotated_ne += token.label == Label.NE
        elif not token.sentence_start:
            c.noninitial += 1
            c.capitalized_noninitial += _is_capitalized(token)
    return counts


def merge_counts(
    left: Mapping[str, _SurfaceCounts], right: Mapping[str, _SurfaceCounts]
) -> dict[str, _SurfaceCounts]:
    merged = dict(left)
    _merge_into(merged, right)
    return merged


def _merge_into(
    target: dict[str, _SurfaceCounts], source: Mapping[str, _SurfaceCounts]
) -> None:
    for surface, c in source.items():
        target[surface] = target[surface].merge(c) if surface in target else c


def count_corpus(token_lists: Iterable[Sequence[Token]]) -> dict[str, _SurfaceCounts]:
    """Merged partial counts over many tokenized documents."""
    counts: dict[str, _SurfaceCounts] = {}
    for tokens in token_lists:
        _merge_into(counts, count_document(tokens))
    return counts


def vocabulary_label(
    surface: str,
    counts: _SurfaceCounts,
    gazetteer: AbstractSet[str],
    rw_threshold: int,
) -> Label:
    """
    Corpus-level label of a surface.

    NE when it is in the gazetteer, was annotated NE, or every one of its
    non-sentence-initial occurrences is capitalized (there must be at least
    one). Otherwise RW when df <= rw_threshold, else PLAIN.
    """
    if surface in gazetteer or counts.annotated_ne:
        return Label.NE
    if counts.noninitial and counts.capitalized_noninitial == counts.noninitial:
        return Label.NE
    if counts.df <= rw_threshold:
        return Label.RW
    return Label.PLAIN


def vocabulary_from_counts(
    counts: Mapping[str, _SurfaceCounts],
    n_documents: int,
    gazetteer: AbstractSet[str],
    rw_threshold: int,
) -> Vocabulary:
    entries = {
        surface: VocabEntry(
            tf=c.tf,
            df=c.df,
            label=vocabulary_label(surface, c, gazetteer, rw_threshold),
        )
        for surface, c in sorted(counts.items())
    }
    return Vocabulary(entries=entries, n_documents=n_documents)


def build_vocabulary(
    corpus: Iterable[Document],
    stopwords: AbstractSet[str] = frozenset(),
    gazetteer: Optional[AbstractSet[str]] = None,
    rw_threshold: int = DEFAULT_RW_THRESHOLD,
) -> Vocabulary:
    """Count every distinct surface of the corpus and assign its label."""
    counts: dict[str, _SurfaceCounts] = {}
    n_documents = 0
    for document in corpus:
        n_documents += 1
        _merge_into(counts, count_document(document_tokens(document, stopwords)))
    vocabulary = vocabulary_from_counts(
        counts, n_documents, gazetteer or frozenset(), rw_threshold
    )
    logger.info(
        f"Vocabulary: {len(vocabulary)} surfaces over {n_documents} documents"
    )
    return vocabulary


@dataclass(frozen=True)
class TextPipeline:
    """Preprocessing settings shared by indexing and querying."""

    stopwords: frozenset[str] = frozenset()
    gazetteer: frozenset[str] = frozenset()
    rw_threshold: int = DEFAULT_RW_THRESHOLD

    @classmethod
    def create(
        cls,
        stopwords: Iterable[str] = (),
        gazetteer: Iterable[str] = (),
        rw_threshold: int = DEFAULT_RW_THRESHOLD,
    ) -> "TextPipeline":
        if rw_threshold < 0:
            raise ValueError(f"rw_threshold must be >= 0, got {rw_threshold}")
        return cls(
            stopwords=frozenset(w.lower() for w in stopwords),
            gazetteer=frozenset(w.lower() for w in gazetteer),
            rw_threshold=rw_threshold,
        )

    def query_tokens(self, text: str, vocabulary: Vocabulary) -> list[Token]:
        """Preprocess, tokenize and annotate query text exactly like a document."""
        tokens = annotate(
            tokenize(preprocess(text), self.stopwords),
            self.gazetteer,
            vocabulary,
            self.rw_threshold,
        )
        # Surfaces the corpus established as entities stay entities in queries
        return [
            replace(t, label=Label.NE)
            if (entry := vocabulary.get(t.surface)) and entry.label == Label.NE
            else t
            for t in tokens
        ]
