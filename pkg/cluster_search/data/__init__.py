"""File-format providers for cluster-search."""

from .collections import Document, Qrels, Query, SynonymLexicon
from .embeddings import EmbeddingTable, load_embeddings
from .runs import RunEntry, read_run, write_run

__all__ = [
    "Document",
    "Qrels",
    "Query",
    "SynonymLexicon",
    "EmbeddingTable",
    "load_embeddings",
    "RunEntry",
    "read_run",
    "write_run",
]
