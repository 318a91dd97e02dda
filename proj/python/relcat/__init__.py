"""Python bindings for the relcat pipeline: cleaning, parsing, alignment and runs."""

from ._relcat import (
    DEFAULT_THRESHOLD,
    Error,
    category_agreement,
    clean_document,
    normalize_label,
    parse_response,
    run_all,
    similarity,
    similarity_key,
    taxonomy,
)

__all__ = [
    "DEFAULT_THRESHOLD",
    "Error",
    "category_agreement",
    "clean_document",
    "normalize_label",
    "parse_response",
    "run_all",
    "similarity",
    "similarity_key",
    "taxonomy",
]
