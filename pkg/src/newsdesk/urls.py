"""URL normalization: one canonical absolute form per page.

Fragments and tracking query parameters are what make the same article look
like many URLs, so both are stripped before anything else sees the URL.
"""

from __future__ import annotations

from urllib.parse import parse_qsl, urlencode, urljoin, urlsplit, urlunsplit

# Query parameters that never identify an article.
DEFAULT_TRACKING_PARAMS = frozenset({"fbclid", "gclid", "msclkid"})
DEFAULT_TRACKING_PREFIXES = ("utm_",)

_DEFAULT_PORTS = {"http": "80", "https": "443"}


class UrlError(ValueError):
    """Raised for URLs that cannot be normalized."""


def normalize_url(
    raw: str,
    base: str | None = None,
    *,
    tracking_params: frozenset[str] = DEFAULT_TRACKING_PARAMS,
    tracking_prefixes: tuple[str, ...] = DEFAULT_TRACKING_PREFIXES,
) -> str:
    """Resolve `raw` against `base` and return the canonical absolute URL.

    Canonical form: http(s) scheme and host lowercased, default port dropped,
    fragment dropped, tracking parameters removed, remaining query order kept.
    The path is preserved as-is, trailing slash included.
    """
    if not raw or not raw.strip():
        raise UrlError("empty URL")
    candidate = raw.strip()
    if any(ch.isspace() for ch in candidate):
        raise UrlError(f"whitespace inside URL: {raw!r}")
    if base:
        candidate = urljoin(base, candidate)
    try:
        parts = urlsplit(candidate)
    except ValueError as exc:
        raise UrlError(f"unparsable URL: {raw!r}") from exc

    scheme = parts.scheme.lower()
    if scheme not in ("http", "https"):
        raise UrlError(f"unsupported scheme in {raw!r}")
    if not parts.hostname:
        raise UrlError(f"no host in {raw!r}")

    host = parts.hostname.lower()
    port = parts.port
    netloc = host
    if port is not None and str(port) != _DEFAULT_PORTS[scheme]:
        netloc = f"{host}:{port}"

    kept = [
        (k, v)
        for k, v in parse_qsl(parts.query, keep_blank_values=True)
        if k not in tracking_params and not k.startswith(tracking_prefixes)
    ]
    query = urlencode(kept)

    return urlunsplit((scheme, netloc, parts.path, query, ""))


def url_host(url: str) -> str:
    return urlsplit(url).hostname or ""
