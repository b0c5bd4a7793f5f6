"""Article persistence plus the per-constraint search index tables.

One row per article; the analyzer outputs live in the `features` JSON column
keyed by module name, each record carrying the producing module's version.
Entities, topics, and lemmas are mirrored into dedicated index tables so the
query engine can resolve constraints without scanning feature documents.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterator

from .db import Database


def _to_signed(u64: int) -> int:
    return u64 - (1 << 64) if u64 >= (1 << 63) else u64


def _to_unsigned(i64: int) -> int:
    return i64 + (1 << 64) if i64 < 0 else i64


def _dt_to_text(dt: datetime | None) -> str | None:
    if dt is None:
        return None
    return dt.astimezone(timezone.utc).isoformat()


def _text_to_dt(text: str | None) -> datetime | None:
    return datetime.fromisoformat(text) if text else None


@dataclass
class Article:
    id: int
    outlet_id: str
    url: str
    title: str
    body: str
    published_at: datetime | None
    simhash: int
    features: dict
    hidden: bool
    first_seen_at: datetime
    updated_at: datetime


_SCHEMA = """
CREATE TABLE IF NOT EXISTS articles (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    outlet_id TEXT NOT NULL,
    url TEXT NOT NULL,
    title TEXT NOT NULL,
    body TEXT NOT NULL,
    published_at TEXT,
    simhash INTEGER NOT NULL,
    features TEXT NOT NULL DEFAULT '{}',
    hidden INTEGER NOT NULL DEFAULT 0,
    first_seen_at TEXT NOT NULL,
    updated_at TEXT NOT NULL,
    UNIQUE (outlet_id, url)
);
CREATE INDEX IF NOT EXISTS idx_articles_simhash ON articles (outlet_id, simhash);
CREATE INDEX IF NOT EXISTS idx_articles_published ON articles (published_at);
CREATE TABLE IF NOT EXISTS article_entities (
    article_id INTEGER NOT NULL,
    kb_id TEXT NOT NULL,
    PRIMARY KEY (article_id, kb_id)
) WITHOUT ROWID;
CREATE INDEX IF NOT EXISTS idx_entities_kb ON article_entities (kb_id);
CREATE TABLE IF NOT EXISTS article_topics (
    article_id INTEGER NOT NULL,
    topic TEXT NOT NULL,
    PRIMARY KEY (article_id, topic)
) WITHOUT ROWID;
CREATE INDEX IF NOT EXISTS idx_topics_topic ON article_topics (topic);
CREATE TABLE IF NOT EXISTS article_lemmas (
    article_id INTEGER NOT NULL,
    lemma TEXT NOT NULL,
    PRIMARY KEY (article_id, lemma)
) WITHOUT ROWID;
CREATE INDEX IF NOT EXISTS idx_lemmas_lemma ON article_lemmas (lemma);
CREATE TABLE IF NOT EXISTS entity_counts (
    kb_id TEXT PRIMARY KEY,
    article_count INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS module_versions (
    module TEXT PRIMARY KEY,
    version INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS article_claims (article_id INTEGER PRIMARY KEY) WITHOUT ROWID;
"""


class ArticleStore:
    def __init__(self, path: str | Path, *, clock: Callable[[], float] = time.time):
        self._db = Database(path)
        self._clock = clock
        self._db.conn.executescript(_SCHEMA)

    @property
    def db(self) -> Database:
        return self._db

    def _now(self) -> datetime:
        return datetime.fromtimestamp(self._clock(), tz=timezone.utc)

    # -- rows ----------------------------------------------------------------

    def _row_to_article(self, row) -> Article:
        return Article(
            id=row["id"],
            outlet_id=row["outlet_id"],
            url=row["url"],
            title=row["title"],
            body=row["body"],
            published_at=_text_to_dt(row["published_at"]),
            simhash=_to_unsigned(row["simhash"]),
            features=json.loads(row["features"]),
            hidden=bool(row["hidden"]),
            first_seen_at=_text_to_dt(row["first_seen_at"]),
            updated_at=_text_to_dt(row["updated_at"]),
        )

    def get(self, article_id: int) -> Article | None:
        row = self._db.conn.execute("SELECT * FROM articles WHERE id = ?", (article_id,)).fetchone()
        return self._row_to_article(row) if row else None

    def get_by_url(self, outlet_id: str, url: str) -> Article | None:
        row = self._db.conn.execute(
            "SELECT * FROM articles WHERE outlet_id = ? AND url = ?", (outlet_id, url)
        ).fetchone()
        return self._row_to_article(row) if row else None

    def find_by_simhash(self, outlet_id: str, simhash: int) -> Article | None:
        """Exact fingerprint match within one outlet; never across outlets."""
        row = self._db.conn.execute(
            "SELECT * FROM articles WHERE outlet_id = ? AND simhash = ? ORDER BY id LIMIT 1",
            (outlet_id, _to_signed(simhash)),
        ).fetchone()
        return self._row_to_article(row) if row else None

    def insert(
        self,
        outlet_id: str,
        url: str,
        title: str,
        body: str,
        published_at: datetime | None,
        simhash: int,
    ) -> int:
        now = self._now().isoformat()
        with self._db.write() as conn:
            cur = conn.execute(
                "INSERT INTO articles (outlet_id, url, title, body, published_at, simhash, "
                "first_seen_at, updated_at) VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
                (outlet_id, url, title, body, _dt_to_text(published_at), _to_signed(simhash), now, now),
            )
            return cur.lastrowid

    def update_content(
        self,
        article_id: int,
        *,
        title: str,
        body: str,
        published_at: datetime | None,
        simhash: int,
        url: str | None = None,
    ) -> None:
        now = self._now().isoformat()
        with self._db.write() as conn:
            if url is None:
                conn.execute(
                    "UPDATE articles SET title=?, body=?, published_at=?, simhash=?, updated_at=? "
                    "WHERE id=?",
                    (title, body, _dt_to_text(published_at), _to_signed(simhash), now, article_id),
                )
            else:
                conn.execute(
                    "UPDATE articles SET url=?, title=?, body=?, published_at=?, simhash=?, "
                    "updated_at=? WHERE id=?",
                    (url, title, body, _dt_to_text(published_at), _to_signed(simhash), now, article_id),
                )

    def count(self) -> int:
        return self._db.conn.execute("SELECT COUNT(*) FROM articles").fetchone()[0]

    def hidden_count(self) -> int:
        return self._db.conn.execute("SELECT COUNT(*) FROM articles WHERE hidden = 1").fetchone()[0]

    def articles_since(self, cutoff: datetime) -> int:
        return self._db.conn.execute(
            "SELECT COUNT(*) FROM articles WHERE first_seen_at >= ?",
            (_dt_to_text(cutoff),),
        ).fetchone()[0]

    def outlets(self) -> list[str]:
        rows = self._db.conn.execute(
            "SELECT DISTINCT outlet_id FROM articles ORDER BY outlet_id"
        ).fetchall()
        return [r["outlet_id"] for r in rows]

    def iter_articles(self) -> Iterator[Article]:
        for row in self._db.conn.execute("SELECT * FROM articles ORDER BY id"):
            yield self._row_to_article(row)

    def article_ids(self) -> list[int]:
        return [r["id"] for r in self._db.conn.execute("SELECT id FROM articles ORDER BY id")]

    # -- features + search index ----------------------------------------------

    def set_features(self, article_id: int, features: dict, hidden: bool) -> None:
        """Commit a whole features document atomically, syncing index tables."""
        entities = sorted(
            {e for e in (features.get("nel", {}).get("data", {}).get("entities") or [])}
        )
        topics = sorted({t for t in (features.get("topics", {}).get("data", {}).get("labels") or [])})
        core = features.get("core", {}).get("data", {})
        lemmas = sorted(set(core.get("title_lemmas", [])) | set(core.get("body_lemmas", [])))
        with self._db.write() as conn:
            conn.execute(
                "UPDATE articles SET features = ?, hidden = ?, updated_at = ? WHERE id = ?",
                (json.dumps(features), int(hidden), self._now().isoformat(), article_id),
            )
            conn.execute("DELETE FROM article_entities WHERE article_id = ?", (article_id,))
            conn.executemany(
                "INSERT INTO article_entities (article_id, kb_id) VALUES (?, ?)",
                [(article_id, e) for e in entities],
            )
            conn.execute("DELETE FROM article_topics WHERE article_id = ?", (article_id,))
            conn.executemany(
                "INSERT INTO article_topics (article_id, topic) VALUES (?, ?)",
                [(article_id, t) for t in topics],
            )
            conn.execute("DELETE FROM article_lemmas WHERE article_id = ?", (article_id,))
            conn.executemany(
                "INSERT INTO article_lemmas (article_id, lemma) VALUES (?, ?)",
                [(article_id, l) for l in lemmas],
            )

    def refresh_entity_counts(self) -> None:
        """Rebuild the precomputed per-entity article counts (materialized-view analogue)."""
        with self._db.write() as conn:
            conn.execute("DELETE FROM entity_counts")
            conn.execute(
                "INSERT INTO entity_counts (kb_id, article_count) "
                "SELECT kb_id, COUNT(*) FROM article_entities GROUP BY kb_id"
            )

    def entity_count(self, kb_id: str) -> int:
        row = self._db.conn.execute(
            "SELECT article_count FROM entity_counts WHERE kb_id = ?", (kb_id,)
        ).fetchone()
        return row["article_count"] if row else 0

    # -- module versions (pipectl bump persistence) ---------------------------

    def module_version(self, module: str) -> int | None:
        row = self._db.conn.execute(
            "SELECT version FROM module_versions WHERE module = ?", (module,)
        ).fetchone()
        return row["version"] if row else None

    def set_module_version(self, module: str, version: int) -> None:
        with self._db.write() as conn:
            conn.execute(
                "INSERT INTO module_versions (module, version) VALUES (?, ?) "
                "ON CONFLICT(module) DO UPDATE SET version=excluded.version",
                (module, version),
            )

    # -- per-article processing claims ----------------------------------------

    def claim_article(self, article_id: int) -> bool:
        with self._db.write() as conn:
            cur = conn.execute(
                "INSERT OR IGNORE INTO article_claims (article_id) VALUES (?)", (article_id,)
            )
            return cur.rowcount == 1

    def release_article(self, article_id: int) -> None:
        with self._db.write() as conn:
            conn.execute("DELETE FROM article_claims WHERE article_id = ?", (article_id,))

    def close(self) -> None:
        self._db.close()
