"""Crawl scheduler: the entry point of the crawl loop.

Classifies discovered URLs against per-outlet rules, keeps the visited-URL
set so every URL is fetched at most once, assigns depth-based priorities, and
defers homepage recrawls. Fresh URLs are handed to the per-outlet downloader
queues on the broker.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .broker import Broker
from .db import Database
from .rules import ARTICLE, IGNORE, LISTING, CrawlRuleSet, classify_url, rules_from_dict, rules_to_dict
from .urls import UrlError, normalize_url

logger = logging.getLogger(__name__)

# Depth-based priority table; homepages (depth 0) outrank everything.
PRIORITY_BY_DEPTH = (100, 90, 60, 40, 20)
PRIORITY_FLOOR = 10

ENQUEUED = "enqueued"
ALREADY_VISITED = "already_visited"
IGNORED = "ignored"


def downloader_queue(outlet_id: str) -> str:
    return f"downloader.{outlet_id}"


def assign_priority(kind: str, depth_from_seed: int) -> int:
    """Priority for a URL found `depth_from_seed` hops from the homepage."""
    if depth_from_seed < 0:
        raise ValueError("depth must be >= 0")
    if depth_from_seed < len(PRIORITY_BY_DEPTH):
        return PRIORITY_BY_DEPTH[depth_from_seed]
    return PRIORITY_FLOOR


@dataclass
class UrlTask:
    url: str
    outlet_id: str
    kind: str  # article | listing
    priority: int
    depth: int = 0
    discovered_from: str | None = None

    def payload(self) -> dict:
        return {
            "url": self.url,
            "outlet_id": self.outlet_id,
            "kind": self.kind,
            "priority": self.priority,
            "depth": self.depth,
            "discovered_from": self.discovered_from,
        }

    @classmethod
    def from_payload(cls, doc: dict) -> "UrlTask":
        return cls(
            url=doc["url"],
            outlet_id=doc["outlet_id"],
            kind=doc["kind"],
            priority=doc["priority"],
            depth=doc.get("depth", 0),
            discovered_from=doc.get("discovered_from"),
        )


@dataclass
class DeferredEntry:
    url: str
    outlet_id: str
    release_at: float
    priority: int
    kind: str = LISTING
    recurring_interval: float | None = None


_SCHEMA = """
CREATE TABLE IF NOT EXISTS visited_urls (url TEXT PRIMARY KEY) WITHOUT ROWID;
CREATE TABLE IF NOT EXISTS deferred_urls (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    url TEXT NOT NULL,
    outlet_id TEXT NOT NULL,
    release_at REAL NOT NULL,
    priority INTEGER NOT NULL,
    kind TEXT NOT NULL,
    recurring_interval REAL
);
CREATE INDEX IF NOT EXISTS idx_deferred_release ON deferred_urls (release_at);
CREATE TABLE IF NOT EXISTS outlets (
    outlet_id TEXT PRIMARY KEY,
    rules TEXT NOT NULL
);
"""


class UnknownOutletError(KeyError):
    pass


class Scheduler:
    """Shared-state crawl scheduler; safe for concurrent workers.

    The visited set and deferred entries live in the database; the only
    correctness-critical step, visited-set check-and-insert, is a single
    INSERT OR IGNORE so concurrent submits of one URL enqueue it exactly once.
    """

    def __init__(self, path: str | Path, broker: Broker, *, clock: Callable[[], float] = time.time):
        self._db = Database(path)
        self._broker = broker
        self._clock = clock
        self._rules: dict[str, CrawlRuleSet] = {}
        self._db.conn.executescript(_SCHEMA)
        self._load_outlets()

    # -- outlet registry ----------------------------------------------------

    def _load_outlets(self) -> None:
        for row in self._db.conn.execute("SELECT outlet_id, rules FROM outlets"):
            self._rules[row["outlet_id"]] = rules_from_dict(json.loads(row["rules"]))

    def add_outlet(self, rules: CrawlRuleSet) -> None:
        with self._db.write() as conn:
            conn.execute(
                "INSERT INTO outlets (outlet_id, rules) VALUES (?, ?) "
                "ON CONFLICT(outlet_id) DO UPDATE SET rules=excluded.rules",
                (rules.outlet_id, json.dumps(rules_to_dict(rules))),
            )
        self._rules[rules.outlet_id] = rules
        self._broker.register_queue(downloader_queue(rules.outlet_id))

    def outlets(self) -> list[str]:
        return sorted(self._rules)

    def rules_for(self, outlet_id: str) -> CrawlRuleSet:
        try:
            return self._rules[outlet_id]
        except KeyError:
            raise UnknownOutletError(outlet_id) from None

    # -- the crawl-loop surface ----------------------------------------------

    def submit(self, task: UrlTask) -> str:
        """Enqueue a fresh URL for download; deduplicate against the visited set."""
        rules = self.rules_for(task.outlet_id)
        if classify_url(task.url, rules) == IGNORE:
            return IGNORED
        with self._db.write() as conn:
            cur = conn.execute("INSERT OR IGNORE INTO visited_urls (url) VALUES (?)", (task.url,))
            fresh = cur.rowcount == 1
        if not fresh:
            return ALREADY_VISITED
        self._broker.enqueue(downloader_queue(task.outlet_id), task.payload(), task.priority)
        return ENQUEUED

    def submit_links(self, outlet_id: str, links: list[str], depth: int, discovered_from: str | None = None) -> int:
        """Classify and submit harvested links; returns how many were enqueued."""
        rules = self.rules_for(outlet_id)
        enqueued = 0
        for raw in links:
            try:
                url = normalize_url(raw, base=discovered_from)
            except UrlError:
                logger.debug("dropping unparsable URL %r from %s", raw, discovered_from)
                continue
            kind = classify_url(url, rules)
            if kind == IGNORE:
                continue
            task = UrlTask(
                url=url,
                outlet_id=outlet_id,
                kind=kind,
                priority=assign_priority(kind, depth),
                depth=depth,
                discovered_from=discovered_from,
            )
            if self.submit(task) == ENQUEUED:
                enqueued += 1
        return enqueued

    def schedule_recrawl(
        self,
        url: str,
        outlet_id: str,
        release_at: float,
        priority: int,
        *,
        kind: str = LISTING,
        recurring_interval: float | None = None,
    ) -> None:
        """Defer a URL until `release_at`; recrawls bypass the visited set."""
        with self._db.write() as conn:
            conn.execute(
                "INSERT INTO deferred_urls (url, outlet_id, release_at, priority, kind, recurring_interval) "
                "VALUES (?, ?, ?, ?, ?, ?)",
                (url, outlet_id, release_at, priority, kind, recurring_interval),
            )

    def drain_deferred(self, now: float | None = None) -> list[DeferredEntry]:
        """Release every deferred entry due by `now` into its downloader queue.

        Recurring entries (homepage recrawls) are rescheduled one interval out.
        """
        now = self._clock() if now is None else now
        with self._db.write() as conn:
            rows = conn.execute(
                "SELECT * FROM deferred_urls WHERE release_at <= ? ORDER BY release_at, id", (now,)
            ).fetchall()
            conn.execute("DELETE FROM deferred_urls WHERE release_at <= ?", (now,))
        released = []
        for row in rows:
            entry = DeferredEntry(
                url=row["url"],
                outlet_id=row["outlet_id"],
                release_at=row["release_at"],
                priority=row["priority"],
                kind=row["kind"],
                recurring_interval=row["recurring_interval"],
            )
            task = UrlTask(entry.url, entry.outlet_id, entry.kind, entry.priority, depth=0)
            self._broker.enqueue(downloader_queue(entry.outlet_id), task.payload(), entry.priority)
            if entry.recurring_interval:
                self.schedule_recrawl(
                    entry.url,
                    entry.outlet_id,
                    now + entry.recurring_interval,
                    entry.priority,
                    kind=entry.kind,
                    recurring_interval=entry.recurring_interval,
                )
            released.append(entry)
        return released

    def seed(self, outlet_id: str, *, recrawl: bool = True) -> int:
        """Kick off an outlet: enqueue its homepages and schedule their recrawl."""
        rules = self.rules_for(outlet_id)
        now = self._clock()
        for seed_url in rules.seeds:
            pri = assign_priority(LISTING, 0)
            with self._db.write() as conn:
                conn.execute("INSERT OR IGNORE INTO visited_urls (url) VALUES (?)", (seed_url,))
            task = UrlTask(seed_url, outlet_id, LISTING, pri, depth=0)
            self._broker.enqueue(downloader_queue(outlet_id), task.payload(), pri)
            if recrawl:
                self.schedule_recrawl(
                    seed_url,
                    outlet_id,
                    now + rules.recrawl_interval,
                    pri,
                    recurring_interval=rules.recrawl_interval,
                )
        return len(rules.seeds)

    def visited_count(self) -> int:
        return self._db.conn.execute("SELECT COUNT(*) FROM visited_urls").fetchone()[0]

    def is_visited(self, url: str) -> bool:
        row = self._db.conn.execute("SELECT 1 FROM visited_urls WHERE url = ?", (url,)).fetchone()
        return row is not None

    def deferred_count(self) -> int:
        return self._db.conn.execute("SELECT COUNT(*) FROM deferred_urls").fetchone()[0]
