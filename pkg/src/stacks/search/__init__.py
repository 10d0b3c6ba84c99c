"""Search and discovery: harvest-fed fielded index, three-part query
parsing, BM25 ranking, and the stateless search wire surface."""

from .engine import IndexStats, SearchConfig, SearchService, fetch_content
from .index import IndexDoc
from .queryparse import Query, parse_query, print_query

__all__ = [
    "IndexDoc",
    "IndexStats",
    "Query",
    "SearchConfig",
    "SearchService",
    "fetch_content",
    "parse_query",
    "print_query",
]
