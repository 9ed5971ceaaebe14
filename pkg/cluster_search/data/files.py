"""Small file helpers shared by the readers and writers."""

import contextlib
import logging
import os
import tempfile
from pathlib import Path
from typing import IO, Iterator, Union

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def iter_lines(path: PathLike, skip_blank: bool = True) -> Iterator[tuple[int, str]]:
    """
    Yield (line_number, line) pairs with trailing newlines removed.

    Args:
        path: UTF-8 text file
        skip_blank: Skip lines that are empty after stripping whitespace

    Raises:
        FileNotFoundError: If path does not exist.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"File not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        for line_number, raw in enumerate(f, start=1):
            line = raw.rstrip("\r\n")
            if skip_blank and not line.strip():
                continue
            yield line_number, line


@contextlib.contextmanager
def atomic_write(path: PathLike, mode: str = "w") -> Iterator[IO]:
    """
    Open a temporary sibling of path for writing and rename it into place on success.

    Readers never observe a partially written file. On error the temporary
    file is removed and the target is left untouched.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    encoding = None if "b" in mode else "utf-8"
    try:
        with os.fdopen(fd, mode, encoding=encoding) as f:
            yield f
        os.replace(tmp_name, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp_name)
        raise
    logger.debug(f"Wrote {path}")


def read_word_list(path: PathLike) -> frozenset[str]:
    """Read a one-entry-per-line word file (stopwords, gazetteer)."""
    words = set()
    for _, line in iter_lines(path):
        words.add(line.strip())
    return frozenset(words)
