"""HTML to clean article content: title, body, publish date, outgoing links.

Body selection is precision-biased: candidate containers are ranked by the
ratio of paragraph text to contained markup, and known boilerplate subtrees
(comments, navigation, ads, ...) are discarded outright. Under-extraction is
preferred to pulling surrounding page furniture into the body.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from html.parser import HTMLParser

from .rules import CrawlRuleSet
from .text import normalize_text
from .urls import UrlError, normalize_url, url_host


class ExtractError(Exception):
    """HTML that cannot be processed at all."""


class EmptyExtraction(ExtractError):
    """Parsed fine but produced neither title nor body."""


@dataclass
class ExtractedPage:
    title: str
    body: str
    published_at: datetime | None
    links: list[str] = field(default_factory=list)


_VOID_TAGS = {
    "area", "base", "br", "col", "embed", "hr", "img", "input",
    "link", "meta", "param", "source", "track", "wbr",
}

_SKIP_TEXT_TAGS = {"script", "style", "noscript", "template", "svg"}

# Subtrees whose class/id marks them as page furniture, never article body.
_NOISE_MARKERS = (
    "comment", "sidebar", "footer", "advert", "-ad-", "ad-slot", "promo",
    "related", "share", "social", "cookie", "subscribe", "newsletter", "menu",
    "breadcrumb", "widget",
)
_NOISE_TAGS = {"nav", "aside", "footer", "form", "header"}

_CANDIDATE_TAGS = {"article", "main", "section", "div", "body", "td"}

_TITLE_META_KEYS = (
    ("property", "og:title"),
    ("name", "twitter:title"),
    ("name", "title"),
    ("itemprop", "headline"),
)

_DATE_META_KEYS = (
    ("property", "article:published_time"),
    ("name", "article:published_time"),
    ("itemprop", "datePublished"),
    ("name", "date"),
    ("name", "pubdate"),
)


class _Node:
    __slots__ = ("tag", "attrs", "children", "parent")

    def __init__(self, tag: str, attrs: dict[str, str], parent: "_Node | None"):
        self.tag = tag
        self.attrs = attrs
        self.children: list[object] = []  # _Node or str
        self.parent = parent

    def attr(self, name: str) -> str:
        return self.attrs.get(name, "")

    def iter_nodes(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(c for c in reversed(node.children) if isinstance(c, _Node))

    def text(self) -> str:
        parts: list[str] = []
        self._collect_text(parts)
        return " ".join(parts)

    def _collect_text(self, parts: list[str]) -> None:
        if self.tag in _SKIP_TEXT_TAGS:
            return
        for child in self.children:
            if isinstance(child, str):
                parts.append(child)
            else:
                child._collect_text(parts)


class _TreeBuilder(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.root = _Node("document", {}, None)
        self._cursor = self.root

    def handle_starttag(self, tag, attrs):
        node = _Node(tag, dict(attrs), self._cursor)
        self._cursor.children.append(node)
        if tag not in _VOID_TAGS:
            self._cursor = node

    def handle_startendtag(self, tag, attrs):
        self._cursor.children.append(_Node(tag, dict(attrs), self._cursor))

    def handle_endtag(self, tag):
        # close the nearest matching open element; tolerate stray end tags
        node = self._cursor
        while node is not None and node.tag != tag:
            node = node.parent
        if node is not None and node.parent is not None:
            self._cursor = node.parent

    def handle_data(self, data):
        if data:
            self._cursor.children.append(data)


def _parse(html: str) -> _Node:
    builder = _TreeBuilder()
    try:
        builder.feed(html)
        builder.close()
    except Exception as exc:  # html.parser is lenient; anything raised is fatal
        raise ExtractError(f"unparsable HTML: {exc}") from exc
    return builder.root


def _is_noise(node: _Node) -> bool:
    if node.tag in _NOISE_TAGS:
        return True
    marker = f"{node.attr('class')} {node.attr('id')}".lower()
    return any(m in marker for m in _NOISE_MARKERS)


def _in_noise(node: _Node) -> bool:
    while node is not None:
        if _is_noise(node):
            return True
        node = node.parent
    return False


def _paragraph_text(container: _Node) -> list[str]:
    out = []
    for node in container.iter_nodes():
        if node.tag == "p" and not _in_noise(node):
            text = normalize_text(node.text())
            if text:
                out.append(text)
    return out


def _candidate_score(container: _Node) -> float:
    ptext = sum(len(t) for t in _paragraph_text(container))
    if ptext == 0:
        return 0.0
    markup = sum(1 for _ in container.iter_nodes())
    return ptext / markup


def _select_body(root: _Node) -> str:
    best: _Node | None = None
    best_score = 0.0
    for node in root.iter_nodes():
        if node.tag not in _CANDIDATE_TAGS or _in_noise(node):
            continue
        score = _candidate_score(node)
        if score > best_score:
            best, best_score = node, score
    if best is None:
        return ""
    return normalize_text(" ".join(_paragraph_text(best)))


def _meta_lookup(root: _Node, keys) -> str | None:
    metas = [n for n in root.iter_nodes() if n.tag == "meta"]
    for attr_name, attr_value in keys:
        for node in metas:
            if node.attr(attr_name).lower() == attr_value and node.attr("content").strip():
                return node.attr("content").strip()
    return None


def _select_title(root: _Node) -> str:
    meta = _meta_lookup(root, _TITLE_META_KEYS)
    if meta:
        return normalize_text(meta)
    for node in root.iter_nodes():
        if node.tag == "h1" and not _in_noise(node):
            text = normalize_text(node.text())
            if text:
                return text
    for node in root.iter_nodes():
        if node.tag == "title":
            return normalize_text(node.text())
    return ""


def parse_datestamp(value: str) -> datetime | None:
    """Parse an ISO-ish date string to an aware UTC datetime."""
    value = value.strip()
    if not value:
        return None
    candidate = value.replace("Z", "+00:00")
    parsed = None
    try:
        parsed = datetime.fromisoformat(candidate)
    except ValueError:
        for fmt in ("%Y-%m-%d %H:%M:%S", "%Y/%m/%d", "%d.%m.%Y"):
            try:
                parsed = datetime.strptime(value, fmt)
                break
            except ValueError:
                continue
    if parsed is None:
        return None
    if parsed.tzinfo is None:
        return parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc)


def _select_date(root: _Node, url: str, rules: CrawlRuleSet | None) -> datetime | None:
    meta = _meta_lookup(root, _DATE_META_KEYS)
    if meta:
        parsed = parse_datestamp(meta)
        if parsed:
            return parsed
    for node in root.iter_nodes():
        if node.tag == "time" and node.attr("datetime"):
            parsed = parse_datestamp(node.attr("datetime"))
            if parsed:
                return parsed
    if rules is not None and rules.date_url_pattern is not None:
        match = rules.date_url_pattern.search(url)
        if match:
            try:
                groups = match.groupdict()
                return datetime(
                    int(groups["year"]), int(groups["month"]), int(groups["day"]),
                    tzinfo=timezone.utc,
                )
            except (KeyError, ValueError):
                return None
    return None


def _harvest_links(root: _Node, page_url: str) -> list[str]:
    host = url_host(page_url)
    seen: set[str] = set()
    links: list[str] = []
    for node in root.iter_nodes():
        if node.tag != "a":
            continue
        href = node.attr("href").strip()
        if not href:
            continue
        try:
            url = normalize_url(href, base=page_url)
        except UrlError:
            continue
        if url_host(url) != host or url in seen:
            continue
        seen.add(url)
        links.append(url)
    return links


def extract(html: str, url: str, rules: CrawlRuleSet | None = None) -> ExtractedPage:
    """Turn raw HTML into a clean, normalized page.

    Raises EmptyExtraction when neither a title nor a body can be found;
    callers route that to the error queue.
    """
    root = _parse(html)
    title = _select_title(root)
    body = _select_body(root)
    if not title and not body:
        raise EmptyExtraction("empty_extraction")
    return ExtractedPage(
        title=title,
        body=body,
        published_at=_select_date(root, url, rules),
        links=_harvest_links(root, url),
    )


def harvest_links(html: str, url: str) -> list[str]:
    """Link harvesting alone, for listing pages."""
    return _harvest_links(_parse(html), url)
