"""Boolean semantic search over the article store."""

from .ast import (
    And,
    EntityConstraint,
    Not,
    Or,
    PhraseConstraint,
    QueryAst,
    QueryError,
    TopicConstraint,
    parse_query,
    query_to_dict,
)
from .engine import ArticleHit, ExportCapExceeded, Newsline, QueryEngine

__all__ = [
    "And",
    "Or",
    "Not",
    "EntityConstraint",
    "PhraseConstraint",
    "TopicConstraint",
    "QueryAst",
    "QueryError",
    "parse_query",
    "query_to_dict",
    "QueryEngine",
    "Newsline",
    "ArticleHit",
    "ExportCapExceeded",
]
