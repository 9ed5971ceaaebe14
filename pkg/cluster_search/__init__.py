"""cluster-search - semantic cluster retrieval fused with BM25."""

__version__ = "1.0.0"
