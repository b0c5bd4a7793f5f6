"""Query evaluation: Boolean constraint trees to Newslines, hit pages, exports.

Entity, topic, and lemma constraints resolve through the dedicated index
tables; phrase constraints then verify lemma contiguity against the stored
lemma sequences. NOT complements within the evaluation frame (outlet filter,
low-quality filter, date window), so Boolean laws hold exactly.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from typing import Callable, Iterator

from ..kb import KnowledgeBase
from ..store import ArticleStore
from .ast import (
    And,
    EntityConstraint,
    Not,
    Or,
    PhraseConstraint,
    QueryAst,
    QueryError,
    TopicConstraint,
    canonical_key,
    query_to_dict,
)

EXPORT_CAP = 100_000
CACHE_TTL = 300.0

PHRASE_MODE_CONTIGUOUS = "phrase"
PHRASE_MODE_ALL_WORDS = "all_words"


class ExportCapExceeded(Exception):
    def __init__(self, total: int, cap: int):
        super().__init__(f"export of {total} rows exceeds the cap of {cap}; narrow the query")
        self.total = total
        self.cap = cap


@dataclass
class ArticleHit:
    article_id: int
    url: str
    outlet_id: str
    title: str
    published_at: datetime | None
    topics: list[str]
    hidden: bool

    def to_dict(self) -> dict:
        return {
            "article_id": self.article_id,
            "url": self.url,
            "outlet_id": self.outlet_id,
            "title": self.title,
            "published_at": self.published_at.isoformat() if self.published_at else None,
            "topics": self.topics,
            "hidden": self.hidden,
        }


@dataclass
class Newsline:
    name: str | None
    query: dict
    series: list[tuple[str, int]]
    total: int
    undated: int


def bucket_start(day: date, bucket: str) -> date:
    if bucket == "day":
        return day
    if bucket == "week":
        return day - timedelta(days=day.weekday())
    if bucket == "month":
        return day.replace(day=1)
    raise QueryError(f"unknown bucket {bucket!r}")


def _next_bucket(start: date, bucket: str) -> date:
    if bucket == "day":
        return start + timedelta(days=1)
    if bucket == "week":
        return start + timedelta(days=7)
    return (start.replace(day=28) + timedelta(days=4)).replace(day=1)


def bucket_sequence(date_from: date, date_to: date, bucket: str) -> list[date]:
    """Contiguous bucket starts covering the requested range."""
    out = []
    cursor = bucket_start(date_from, bucket)
    while cursor <= date_to:
        out.append(cursor)
        cursor = _next_bucket(cursor, bucket)
    return out


@dataclass
class _Frame:
    """The universe a query evaluates inside."""

    ids: set[int]
    dates: dict[int, date | None] = field(default_factory=dict)


class QueryEngine:
    def __init__(
        self,
        store: ArticleStore,
        phrase_lemmatizer: Callable[[str], list[str]],
        kb: KnowledgeBase | None = None,
        *,
        phrase_fields: tuple[str, ...] = ("title", "body"),
        phrase_mode: str = PHRASE_MODE_CONTIGUOUS,
        cache_ttl: float = CACHE_TTL,
        export_cap: int = EXPORT_CAP,
        clock: Callable[[], float] = time.time,
    ):
        self.store = store
        self.lemmatize = phrase_lemmatizer
        self.kb = kb
        self.phrase_fields = phrase_fields
        self.phrase_mode = phrase_mode
        self.cache_ttl = cache_ttl
        self.export_cap = export_cap
        self._clock = clock
        self._cache: dict[tuple, tuple[float, Newsline]] = {}

    # -- frame and leaf resolution -------------------------------------------------

    def _frame(self, query: QueryAst, date_from: date, date_to: date) -> _Frame:
        conn = self.store.db.conn
        rows = conn.execute("SELECT id, outlet_id, published_at, hidden FROM articles").fetchall()
        ids: set[int] = set()
        dates: dict[int, date | None] = {}
        for row in rows:
            if query.outlets and row["outlet_id"] not in query.outlets:
                continue
            if row["hidden"] and not query.include_low_quality:
                continue
            published = (
                datetime.fromisoformat(row["published_at"]).date() if row["published_at"] else None
            )
            if published is not None and not (date_from <= published <= date_to):
                continue
            ids.add(row["id"])
            dates[row["id"]] = published
        return _Frame(ids=ids, dates=dates)

    def _entity_ids(self, kb_id: str) -> set[int]:
        rows = self.store.db.conn.execute(
            "SELECT article_id FROM article_entities WHERE kb_id = ?", (kb_id,)
        ).fetchall()
        return {r["article_id"] for r in rows}

    def _topic_ids(self, label: str) -> set[int]:
        rows = self.store.db.conn.execute(
            "SELECT article_id FROM article_topics WHERE topic = ?", (label,)
        ).fetchall()
        return {r["article_id"] for r in rows}

    def _lemma_ids(self, lemma: str) -> set[int]:
        rows = self.store.db.conn.execute(
            "SELECT article_id FROM article_lemmas WHERE lemma = ?", (lemma,)
        ).fetchall()
        return {r["article_id"] for r in rows}

    def _phrase_ids(self, text: str, frame: _Frame) -> set[int]:
        lemmas = self.lemmatize(text)
        if not lemmas:
            return set()
        candidates: set[int] | None = None
        for lemma in set(lemmas):
            ids = self._lemma_ids(lemma)
            candidates = ids if candidates is None else candidates & ids
            if not candidates:
                return set()
        candidates &= frame.ids
        if self.phrase_mode == PHRASE_MODE_ALL_WORDS or len(lemmas) == 1:
            return candidates
        return {aid for aid in candidates if self._contains_sequence(aid, lemmas)}

    def _contains_sequence(self, article_id: int, lemmas: list[str]) -> bool:
        row = self.store.db.conn.execute(
            "SELECT features FROM articles WHERE id = ?", (article_id,)
        ).fetchone()
        core = json.loads(row["features"]).get("core", {}).get("data", {})
        for fld in self.phrase_fields:
            sequence = core.get(f"{fld}_lemmas", [])
            if _sublist(lemmas, sequence):
                return True
        return False

    def _eval(self, node, frame: _Frame) -> set[int]:
        if isinstance(node, EntityConstraint):
            return self._entity_ids(node.kb_id) & frame.ids
        if isinstance(node, TopicConstraint):
            return self._topic_ids(node.label) & frame.ids
        if isinstance(node, PhraseConstraint):
            return self._phrase_ids(node.text, frame)
        if isinstance(node, Not):
            return frame.ids - self._eval(node.child, frame)
        if isinstance(node, And):
            result = frame.ids
            for child in node.children:
                result = result & self._eval(child, frame)
                if not result:
                    break
            return result
        if isinstance(node, Or):
            result: set[int] = set()
            for child in node.children:
                result = result | self._eval(child, frame)
            return result
        raise QueryError(f"cannot evaluate node {node!r}")

    def matching_ids(self, query: QueryAst, date_from: date, date_to: date) -> _Frame:
        _check_range(date_from, date_to)
        frame = self._frame(query, date_from, date_to)
        matched = self._eval(query.node, frame)
        return _Frame(ids=matched, dates={i: frame.dates[i] for i in matched})

    # -- public operations ------------------------------------------------------------

    def evaluate(
        self,
        query: QueryAst,
        date_from: date,
        date_to: date,
        bucket: str = "day",
        name: str | None = None,
    ) -> Newsline:
        _check_range(date_from, date_to)
        key = (canonical_key(query), date_from, date_to, bucket)
        now = self._clock()
        if self.cache_ttl > 0:
            cached = self._cache.get(key)
            if cached and cached[0] > now:
                hit = cached[1]
                return Newsline(name, hit.query, list(hit.series), hit.total, hit.undated)
        match = self.matching_ids(query, date_from, date_to)
        starts = bucket_sequence(date_from, date_to, bucket)
        counts = {s: 0 for s in starts}
        undated = 0
        for aid in match.ids:
            published = match.dates[aid]
            if published is None:
                undated += 1
            else:
                counts[bucket_start(published, bucket)] += 1
        line = Newsline(
            name=name,
            query=query_to_dict(query),
            series=[(s.isoformat(), counts[s]) for s in starts],
            total=len(match.ids),
            undated=undated,
        )
        if self.cache_ttl > 0:
            self._cache[key] = (now + self.cache_ttl, line)
        return line

    def _ordered_hits(self, query: QueryAst, date_from: date, date_to: date) -> list[ArticleHit]:
        match = self.matching_ids(query, date_from, date_to)
        if not match.ids:
            return []
        conn = self.store.db.conn
        placeholders = ",".join("?" * len(match.ids))
        rows = conn.execute(
            f"SELECT id, url, outlet_id, title, published_at, hidden FROM articles "
            f"WHERE id IN ({placeholders})",
            tuple(match.ids),
        ).fetchall()
        topics: dict[int, list[str]] = {aid: [] for aid in match.ids}
        for row in conn.execute(
            f"SELECT article_id, topic FROM article_topics WHERE article_id IN ({placeholders}) "
            "ORDER BY topic",
            tuple(match.ids),
        ):
            topics[row["article_id"]].append(row["topic"])
        hits = [
            ArticleHit(
                article_id=row["id"],
                url=row["url"],
                outlet_id=row["outlet_id"],
                title=row["title"],
                published_at=datetime.fromisoformat(row["published_at"])
                if row["published_at"]
                else None,
                topics=topics[row["id"]],
                hidden=bool(row["hidden"]),
            )
            for row in rows
        ]
        sentinel = datetime.min.replace(tzinfo=timezone.utc)
        hits.sort(
            key=lambda h: (h.published_at or sentinel, h.article_id),
            reverse=True,
        )
        return hits

    def page_hits(
        self,
        query: QueryAst,
        date_from: date,
        date_to: date,
        page: int = 1,
        page_size: int = 50,
    ) -> tuple[list[ArticleHit], int]:
        """Deterministic pages: published_at desc, article id desc, undated last."""
        if page < 1:
            raise QueryError("page starts at 1")
        if not 1 <= page_size <= 500:
            raise QueryError("page_size must be between 1 and 500")
        hits = self._ordered_hits(query, date_from, date_to)
        start = (page - 1) * page_size
        return hits[start : start + page_size], len(hits)

    def export(
        self, query: QueryAst, date_from: date, date_to: date, format: str
    ) -> Iterator[bytes]:
        """Stream the full hit set as CSV (RFC 4180) or a JSON array."""
        if format not in ("csv", "json"):
            raise QueryError(f"unknown export format {format!r}")
        hits = self._ordered_hits(query, date_from, date_to)
        if len(hits) > self.export_cap:
            raise ExportCapExceeded(len(hits), self.export_cap)
        if format == "csv":
            return self._export_csv(hits)
        return self._export_json(hits)

    @staticmethod
    def _export_csv(hits: list[ArticleHit]) -> Iterator[bytes]:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\r\n")
        writer.writerow(["url", "outlet", "title", "published_at", "topics", "hidden"])
        for hit in hits:
            writer.writerow(
                [
                    hit.url,
                    hit.outlet_id,
                    hit.title,
                    hit.published_at.isoformat() if hit.published_at else "",
                    ";".join(hit.topics),
                    "true" if hit.hidden else "false",
                ]
            )
            yield buffer.getvalue().encode("utf-8")
            buffer.seek(0)
            buffer.truncate()
        remainder = buffer.getvalue()
        if remainder:
            yield remainder.encode("utf-8")

    @staticmethod
    def _export_json(hits: list[ArticleHit]) -> Iterator[bytes]:
        yield b"["
        for i, hit in enumerate(hits):
            prefix = b"" if i == 0 else b","
            yield prefix + json.dumps(hit.to_dict()).encode("utf-8")
        yield b"]"

    def entity_lookup(self, prefix: str) -> list[tuple[str, str, int]]:
        """(kb_id, canonical label, article count) for label prefix matches.

        Counts come from the precomputed aggregate; call
        store.refresh_entity_counts() to bring them up to date.
        """
        if self.kb is None:
            return []
        if len(prefix) < 2:
            raise QueryError("prefix must be at least 2 characters")
        needle = prefix.lower().strip()
        out = []
        for entity in self.kb:
            if any(alias.startswith(needle) for alias in entity.labels_and_aliases):
                out.append((entity.kb_id, entity.label, self.store.entity_count(entity.kb_id)))
        out.sort(key=lambda item: (-item[2], item[0]))
        return out


def _check_range(date_from: date, date_to: date) -> None:
    if date_from > date_to:
        raise QueryError(f"inverted date range: {date_from} > {date_to}")


def _sublist(needle: list[str], haystack: list[str]) -> bool:
    n = len(needle)
    if n == 0 or n > len(haystack):
        return False
    first = needle[0]
    for i in range(len(haystack) - n + 1):
        if haystack[i] == first and haystack[i : i + n] == needle:
            return True
    return False
