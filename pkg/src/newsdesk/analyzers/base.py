"""The analyzer contract the pipeline runs against."""

from __future__ import annotations

from typing import Any, Protocol, runtime_checkable


class DependencyError(Exception):
    """An upstream feature record or model artifact the analyzer needs is missing."""


@runtime_checkable
class Analyzer(Protocol):
    """One pipeline module's processing logic.

    `analyze` receives the article (title/body/url attributes) and the data
    payloads of its upstream modules, keyed by module name, and returns a
    JSON-serializable payload.
    """

    name: str

    def analyze(self, article: Any, upstream: dict[str, Any]) -> Any: ...


def require_upstream(upstream: dict[str, Any], module: str, wanted: str) -> Any:
    try:
        return upstream[wanted]
    except KeyError:
        raise DependencyError(f"{module} requires features from {wanted!r}") from None


def composite_text(article: Any) -> str:
    """Title and body as one string; all analyzer offsets index into this."""
    return f"{article.title}\n{article.body}"
