"""Pretrained word-embedding table loaded from the text word-vector format."""

import logging
from pathlib import Path
from typing import AbstractSet, Iterable, Iterator, Mapping, Optional, Union

import numpy as np

from ..errors import DimensionError, MissingWordError, ParseError, RejectedRowError
from .files import atomic_write, iter_lines

logger = logging.getLogger(__name__)


class EmbeddingTable(Mapping[str, np.ndarray]):
    """
    Immutable word -> vector map with a fixed dimension.

    Vectors are stored as read-only float64 arrays, so a table can be shared
    between threads without copying.
    """

    def __init__(self, dim: int, entries: Mapping[str, np.ndarray]):
        if dim <= 0:
            raise ValueError(f"Embedding dimension must be positive, got {dim}")
        self.dim = dim
        self._entries: dict[str, np.ndarray] = {}
        for word, vector in entries.items():
            array = np.array(vector, dtype=np.float64)
            if array.shape != (dim,):
                raise DimensionError(
                    f"vector for '{word}' has {array.size} components, expected {dim}"
                )
            if not np.all(np.isfinite(array)):
                raise RejectedRowError(word, "non-finite component")
            if not np.any(array):
                raise RejectedRowError(word, "zero vector")
            array.setflags(write=False)
            self._entries[word] = array

    def __getitem__(self, word: str) -> np.ndarray:
        return self._entries[word]

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def vector(self, word: str) -> np.ndarray:
        """Return the vector for word or raise MissingWordError."""
        try:
            return self._entries[word]
        except KeyError:
            raise MissingWordError(word) from None

    def subset(self, words: Iterable[str]) -> "EmbeddingTable":
        """Return a new table restricted to the given words that are present."""
        return EmbeddingTable(
            self.dim, {w: self._entries[w] for w in words if w in self._entries}
        )

    def __repr__(self) -> str:
        return f"EmbeddingTable(dim={self.dim}, words={len(self)})"


def load_embeddings(
    path: Union[str, Path], vocab_filter: Optional[AbstractSet[str]] = None
) -> EmbeddingTable:
    """
    Load a text word-vector file ("count dim" header, then "word v1 ... v_dim").

    Every row is checked for structure. Zero and non-finite vectors are
    rejected for the rows that are kept.

    Args:
        path: Embedding file
        vocab_filter: If given, only these words are kept

    Returns:
        EmbeddingTable with the header's dimension

    Raises:
        FileNotFoundError: If the file does not exist.
        ParseError: Malformed header or row, or row count differs from header.
        DimensionError: Row with the wrong number of values.
        RejectedRowError: Zero or non-finite vector in a kept row.
    """
    lines = iter_lines(path)
    try:
        header_line, header = next(lines)
    except StopIteration:
        raise ParseError("empty embedding file, expected 'count dim' header", path, 1)

    parts = header.split()
    try:
        if len(parts) != 2:
            raise ValueError
        count, dim = int(parts[0]), int(parts[1])
        if count < 0 or dim <= 0:
            raise ValueError
    except ValueError:
        raise ParseError(
            f"malformed header {header!r}, expected 'count dim'", path, header_line
        ) from None

    entries: dict[str, np.ndarray] = {}
    rows = 0
    for line_number, line in lines:
        rows += 1
        fields = line.split()
        word, values = fields[0], fields[1:]
        if len(values) != dim:
            raise DimensionError(
                f"row for '{word}' has {len(values)} values, expected {dim}",
                path,
                line_number,
            )
        try:
            vector = np.array([float(v) for v in values], dtype=np.float64)
        except ValueError:
            raise ParseError(
                f"non-numeric value in row for '{word}'", path, line_number
            ) from None

        if vocab_filter is not None and word not in vocab_filter:
            continue
        if not np.all(np.isfinite(vector)):
            raise RejectedRowError(word, "non-finite component", path, line_number)
        if not np.any(vector):
            raise RejectedRowError(word, "zero vector", path, line_number)
        if word in entries:
            logger.warning(f"{path}:{line_number}: duplicate word '{word}' ignored")
            continue
        entries[word] = vector

    if rows != count:
        raise ParseError(f"header declares {count} rows but file has {rows}", path)

    logger.info(f"Loaded {len(entries)} embeddings (dim {dim}) from {path}")
    return EmbeddingTable(dim, entries)


def write_embeddings(table: EmbeddingTable, path: Union[str, Path]) -> None:
    """Write table in the text word-vector format, words sorted, repr precision."""
    with atomic_write(path) as f:
        f.write(f"{len(table)} {table.dim}\n")
        for word in sorted(table):
            f.write(word + " " + " ".join(repr(float(v)) for v in table[word]) + "\n")
    logger.info(f"Wrote {len(table)} embeddings to {path}")
