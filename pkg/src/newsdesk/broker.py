"""Persistent priority queues over SQLite.

Every component of the engine talks to every other component through these
queues: arbitrary JSON payloads, priority ordering (larger first, FIFO within
a priority), deferred delivery, claim leases with redelivery after a crash,
and a per-queue error queue for failed tasks.

Dequeue is non-blocking: an empty queue returns ``None`` immediately and the
caller decides how to poll (see :data:`POLL_INTERVAL`).
"""

from __future__ import annotations

import json
import random
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .db import Database

# Suggested sleep between polls of an empty queue, with jitter applied.
POLL_INTERVAL = 0.25

DEFAULT_LEASE_SECONDS = 300.0
DEFAULT_MAX_ATTEMPTS = 5

# Automatic retry schedule: 60s doubling per attempt, capped at one hour.
RETRY_BASE_SECONDS = 60.0
RETRY_CAP_SECONDS = 3600.0


def retry_delay(attempts: int) -> float:
    """Backoff before redelivering a task that failed `attempts` times."""
    return min(RETRY_BASE_SECONDS * 2 ** max(attempts - 1, 0), RETRY_CAP_SECONDS)


def poll_sleep() -> None:
    """Sleep one poll interval with jitter; used by consumer loops."""
    time.sleep(POLL_INTERVAL * random.uniform(0.5, 1.5))


class BrokerError(Exception):
    """Base class for broker failures."""


class UnknownQueueError(BrokerError):
    """Operation on a queue that was never registered."""


class PayloadError(BrokerError):
    """Payload is not a JSON document."""


class ClaimError(BrokerError):
    """Ack or fail without a live claim on the message."""


@dataclass
class QueueMessage:
    id: int
    queue: str
    payload: Any
    priority: int
    available_at: float
    enqueued_at: float
    attempts: int
    state: str
    # Delivery bookkeeping, set on dequeued messages only.
    receipt: str | None = None
    claim_seq: int | None = None


@dataclass
class ErrorRecord:
    id: int
    queue: str
    message_id: int
    original: QueueMessage
    error: str
    failed_at: float
    retry_after: float | None


@dataclass
class QueueDepth:
    ready: int
    claimed: int
    errored: int


_SCHEMA = """
CREATE TABLE IF NOT EXISTS queues (
    name TEXT PRIMARY KEY,
    lease_seconds REAL NOT NULL,
    max_attempts INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS messages (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    queue TEXT NOT NULL,
    payload TEXT NOT NULL,
    priority INTEGER NOT NULL,
    available_at REAL NOT NULL,
    enqueued_at REAL NOT NULL,
    attempts INTEGER NOT NULL DEFAULT 0,
    state TEXT NOT NULL DEFAULT 'ready',
    receipt TEXT,
    lease_expires_at REAL,
    claim_seq INTEGER
);
CREATE INDEX IF NOT EXISTS idx_messages_ready
    ON messages (queue, state, available_at, priority DESC, id ASC);
CREATE TABLE IF NOT EXISTS error_records (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    queue TEXT NOT NULL,
    message_id INTEGER NOT NULL,
    original TEXT NOT NULL,
    error TEXT NOT NULL,
    failed_at REAL NOT NULL,
    retry_after REAL
);
CREATE INDEX IF NOT EXISTS idx_error_records_queue ON error_records (queue);
CREATE TABLE IF NOT EXISTS broker_counters (
    name TEXT PRIMARY KEY,
    value INTEGER NOT NULL
);
INSERT OR IGNORE INTO broker_counters (name, value) VALUES ('claim_seq', 0);
"""


def _valid_queue_name(name: str) -> bool:
    if not name or not name.isascii():
        return False
    return all(part and part.replace("-", "").replace("_", "").isalnum() for part in name.split("."))


class Broker:
    """Message fabric shared by producers and consumers across threads and processes.

    Claims are atomic: the SELECT of the best ready message and its transition
    to `claimed` happen inside one immediate transaction, so two consumers can
    never receive the same delivery.
    """

    def __init__(
        self,
        path: str | Path,
        *,
        lease_seconds: float = DEFAULT_LEASE_SECONDS,
        max_attempts: int = DEFAULT_MAX_ATTEMPTS,
        clock: Callable[[], float] = time.time,
    ):
        self._db = Database(path)
        self._lease = lease_seconds
        self._max_attempts = max_attempts
        self._clock = clock
        # executescript manages its own transaction
        self._db.conn.executescript(_SCHEMA)

    # -- queue registry -----------------------------------------------------

    def register_queue(
        self,
        name: str,
        *,
        lease_seconds: float | None = None,
        max_attempts: int | None = None,
    ) -> None:
        if not _valid_queue_name(name):
            raise UnknownQueueError(f"invalid queue name: {name!r}")
        with self._db.write() as conn:
            conn.execute(
                "INSERT INTO queues (name, lease_seconds, max_attempts) VALUES (?, ?, ?) "
                "ON CONFLICT(name) DO UPDATE SET lease_seconds=excluded.lease_seconds, "
                "max_attempts=excluded.max_attempts",
                (name, lease_seconds or self._lease, max_attempts or self._max_attempts),
            )

    def queues(self) -> list[str]:
        rows = self._db.conn.execute("SELECT name FROM queues ORDER BY name").fetchall()
        return [r["name"] for r in rows]

    def _queue_config(self, conn, name: str) -> tuple[float, int]:
        row = conn.execute(
            "SELECT lease_seconds, max_attempts FROM queues WHERE name = ?", (name,)
        ).fetchone()
        if row is None:
            raise UnknownQueueError(name)
        return row["lease_seconds"], row["max_attempts"]

    # -- producer side ------------------------------------------------------

    def enqueue(
        self,
        queue: str,
        payload: Any,
        priority: int = 0,
        available_at: float | None = None,
    ) -> int:
        try:
            encoded = json.dumps(payload)
        except (TypeError, ValueError) as exc:
            raise PayloadError(f"payload is not JSON-serializable: {exc}") from exc
        now = self._clock()
        with self._db.write() as conn:
            self._queue_config(conn, queue)
            cur = conn.execute(
                "INSERT INTO messages (queue, payload, priority, available_at, enqueued_at) "
                "VALUES (?, ?, ?, ?, ?)",
                (queue, encoded, priority, available_at if available_at is not None else now, now),
            )
            return cur.lastrowid

    # -- consumer side ------------------------------------------------------

    def dequeue(self, queue: str) -> QueueMessage | None:
        """Claim the highest-priority ready message, or return None immediately."""
        now = self._clock()
        with self._db.write() as conn:
            lease, max_attempts = self._queue_config(conn, queue)
            self._requeue_expired(conn, queue, max_attempts, now)
            row = conn.execute(
                "SELECT * FROM messages WHERE queue = ? AND state = 'ready' AND available_at <= ? "
                "ORDER BY priority DESC, id ASC LIMIT 1",
                (queue, now),
            ).fetchone()
            if row is None:
                return None
            receipt = uuid.uuid4().hex
            conn.execute("UPDATE broker_counters SET value = value + 1 WHERE name = 'claim_seq'")
            seq = conn.execute(
                "SELECT value FROM broker_counters WHERE name = 'claim_seq'"
            ).fetchone()["value"]
            conn.execute(
                "UPDATE messages SET state = 'claimed', receipt = ?, lease_expires_at = ?, "
                "attempts = attempts + 1, claim_seq = ? WHERE id = ?",
                (receipt, now + lease, seq, row["id"]),
            )
            msg = _message_from_row(row)
            msg.state = "claimed"
            msg.attempts += 1
            msg.receipt = receipt
            msg.claim_seq = seq
            return msg

    def ack(self, message_id: int, receipt: str) -> None:
        now = self._clock()
        with self._db.write() as conn:
            cur = conn.execute(
                "UPDATE messages SET state = 'acked', receipt = NULL, lease_expires_at = NULL "
                "WHERE id = ? AND state = 'claimed' AND receipt = ? AND lease_expires_at > ?",
                (message_id, receipt, now),
            )
            if cur.rowcount != 1:
                raise ClaimError(f"message {message_id} is not claimed by this consumer")

    def fail(
        self,
        message_id: int,
        receipt: str,
        error: str,
        retry_after: float | None = None,
    ) -> None:
        """Record the failure; redeliver after `retry_after` seconds if given.

        Without `retry_after`, or once delivery attempts are exhausted, the
        message moves permanently to the queue's error queue.
        """
        now = self._clock()
        with self._db.write() as conn:
            row = conn.execute(
                "SELECT * FROM messages WHERE id = ? AND state = 'claimed' AND receipt = ? "
                "AND lease_expires_at > ?",
                (message_id, receipt, now),
            ).fetchone()
            if row is None:
                raise ClaimError(f"message {message_id} is not claimed by this consumer")
            _, max_attempts = self._queue_config(conn, row["queue"])
            retrying = retry_after is not None and row["attempts"] < max_attempts
            conn.execute(
                "INSERT INTO error_records (queue, message_id, original, error, failed_at, retry_after) "
                "VALUES (?, ?, ?, ?, ?, ?)",
                (
                    row["queue"],
                    row["id"],
                    _row_snapshot(row),
                    error,
                    now,
                    now + retry_after if retrying else None,
                ),
            )
            if retrying:
                conn.execute(
                    "UPDATE messages SET state = 'ready', receipt = NULL, lease_expires_at = NULL, "
                    "available_at = ? WHERE id = ?",
                    (now + retry_after, row["id"]),
                )
            else:
                conn.execute(
                    "UPDATE messages SET state = 'failed', receipt = NULL, lease_expires_at = NULL "
                    "WHERE id = ?",
                    (row["id"],),
                )

    def _requeue_expired(self, conn, queue: str, max_attempts: int, now: float) -> None:
        """Return expired claims to ready, or error them out after max attempts."""
        expired = conn.execute(
            "SELECT * FROM messages WHERE queue = ? AND state = 'claimed' AND lease_expires_at <= ?",
            (queue, now),
        ).fetchall()
        for row in expired:
            if row["attempts"] >= max_attempts:
                conn.execute(
                    "INSERT INTO error_records (queue, message_id, original, error, failed_at, retry_after) "
                    "VALUES (?, ?, ?, ?, ?, NULL)",
                    (queue, row["id"], _row_snapshot(row), "claim lease expired; delivery attempts exhausted", now),
                )
                conn.execute(
                    "UPDATE messages SET state = 'failed', receipt = NULL, lease_expires_at = NULL "
                    "WHERE id = ?",
                    (row["id"],),
                )
            else:
                conn.execute(
                    "UPDATE messages SET state = 'ready', receipt = NULL, lease_expires_at = NULL "
                    "WHERE id = ?",
                    (row["id"],),
                )

    # -- introspection ------------------------------------------------------

    def queue_depth(self, queue: str) -> QueueDepth:
        conn = self._db.conn
        self._queue_config(conn, queue)
        counts = dict(
            conn.execute(
                "SELECT state, COUNT(*) FROM messages WHERE queue = ? GROUP BY state", (queue,)
            ).fetchall()
        )
        errored = conn.execute(
            "SELECT COUNT(*) FROM error_records WHERE queue = ?", (queue,)
        ).fetchone()[0]
        return QueueDepth(
            ready=counts.get("ready", 0), claimed=counts.get("claimed", 0), errored=errored
        )

    def error_records(self, queue: str) -> list[ErrorRecord]:
        rows = self._db.conn.execute(
            "SELECT * FROM error_records WHERE queue = ? ORDER BY id", (queue,)
        ).fetchall()
        return [
            ErrorRecord(
                id=r["id"],
                queue=r["queue"],
                message_id=r["message_id"],
                original=_message_from_row(json.loads(r["original"]), decoded=True),
                error=r["error"],
                failed_at=r["failed_at"],
                retry_after=r["retry_after"],
            )
            for r in rows
        ]

    def message_state(self, message_id: int) -> str | None:
        row = self._db.conn.execute(
            "SELECT state FROM messages WHERE id = ?", (message_id,)
        ).fetchone()
        return row["state"] if row else None

    def close(self) -> None:
        self._db.close()


def _row_snapshot(row) -> str:
    return json.dumps(
        {
            "id": row["id"],
            "queue": row["queue"],
            "payload": json.loads(row["payload"]),
            "priority": row["priority"],
            "available_at": row["available_at"],
            "enqueued_at": row["enqueued_at"],
            "attempts": row["attempts"],
            "state": row["state"],
        }
    )


def _message_from_row(row, decoded: bool = False) -> QueueMessage:
    get = row.get if decoded else row.__getitem__
    return QueueMessage(
        id=get("id"),
        queue=get("queue"),
        payload=get("payload") if decoded else json.loads(row["payload"]),
        priority=get("priority"),
        available_at=get("available_at"),
        enqueued_at=get("enqueued_at"),
        attempts=get("attempts"),
        state=get("state"),
    )
