"""Retrieval-augmented field extraction from web pages."""

from ._ragscrape import (
    RagscrapeError,
    VectorStore,
    embed_text,
    evaluate,
    extract,
    extract_text,
    fnv1a64,
    index,
    normalize_value,
    query,
    split_recursive,
    tally,
)

__all__ = [
    "RagscrapeError",
    "VectorStore",
    "embed_text",
    "evaluate",
    "extract",
    "extract_text",
    "fnv1a64",
    "index",
    "normalize_value",
    "query",
    "split_recursive",
    "tally",
]
