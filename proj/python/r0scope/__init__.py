"""Structured R0 estimates from PubMed abstracts: parsing, storage, analytics."""

from importlib import resources as _resources

from ._core import (
    Error,
    Gazetteer,
    Store,
    build_prompt,
    build_search_query,
    canonical_disease,
    format_r0,
    parse_ci,
    parse_pubmed_csv,
    parse_r0,
    parse_response,
    pubmed_url,
    run_pipeline_once,
)

__all__ = [
    "Error",
    "Gazetteer",
    "Store",
    "build_prompt",
    "build_search_query",
    "bundled_gazetteer",
    "canonical_disease",
    "format_r0",
    "parse_ci",
    "parse_pubmed_csv",
    "parse_r0",
    "parse_response",
    "pubmed_url",
    "run_pipeline_once",
]


def bundled_gazetteer() -> Gazetteer:
    """The country-level gazetteer shipped with the package."""
    return Gazetteer.load(str(_resources.files(__name__) / "gazetteer.tsv"))
