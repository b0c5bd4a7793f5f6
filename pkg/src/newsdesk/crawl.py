"""The closed crawl loop, assembled from workers over broker queues.

    scheduler.in -> downloader.<outlet> -> extractor.in -> scheduler.in
                                                   \\-> pipeline.in

The scheduler worker classifies harvested links and feeds downloader queues;
one downloader worker per outlet fetches politely; extractor workers turn
article pages into stored, deduplicated articles and feed every page's links
back to the scheduler. Pipeline workers (optional) run the analyzer DAG.
Failures land in each queue's error queue, transient ones with a retry delay.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, field

from . import dedup
from .analyzers.base import DependencyError
from .broker import Broker, QueueMessage, retry_delay
from .downloader import Downloader, DroppedFetch, PermanentFetchError, TransientFetchError
from .extract import ExtractError, extract, harvest_links
from .pipeline import ArticleBusy, PipelineRunner, PipelineTask
from .rules import ARTICLE
from .scheduler import Scheduler, UrlTask, downloader_queue
from .store import ArticleStore
from .urls import UrlError, normalize_url

logger = logging.getLogger(__name__)

SCHEDULER_QUEUE = "scheduler.in"
EXTRACTOR_QUEUE = "extractor.in"
PIPELINE_QUEUE = "pipeline.in"


@dataclass
class CrawlStats:
    fetched: int = 0
    stored: int = 0
    merged: int = 0
    dropped: int = 0
    failed: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def bump(self, name: str) -> None:
        with self.lock:
            setattr(self, name, getattr(self, name) + 1)


class CrawlService:
    def __init__(
        self,
        broker: Broker,
        scheduler: Scheduler,
        downloader: Downloader,
        store: ArticleStore,
        *,
        runner: PipelineRunner | None = None,
        extractor_workers: int = 2,
        pipeline_workers: int = 1,
        poll_interval: float = 0.05,
    ):
        self.broker = broker
        self.scheduler = scheduler
        self.downloader = downloader
        self.store = store
        self.runner = runner
        self.extractor_workers = extractor_workers
        self.pipeline_workers = pipeline_workers if runner else 0
        self.poll = poll_interval
        self.stats = CrawlStats()
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._outlet_locks: dict[str, threading.Lock] = {}
        for queue in (SCHEDULER_QUEUE, EXTRACTOR_QUEUE, PIPELINE_QUEUE):
            broker.register_queue(queue)

    # -- lifecycle ---------------------------------------------------------------

    def start(self) -> None:
        self._stop.clear()
        self._threads = [threading.Thread(target=self._scheduler_loop, daemon=True, name="sched")]
        for outlet in self.scheduler.outlets():
            self._outlet_locks[outlet] = threading.Lock()
            self._threads.append(
                threading.Thread(
                    target=self._downloader_loop, args=(outlet,), daemon=True, name=f"dl-{outlet}"
                )
            )
        for i in range(self.extractor_workers):
            self._threads.append(
                threading.Thread(target=self._extractor_loop, daemon=True, name=f"ex-{i}")
            )
        for i in range(self.pipeline_workers):
            self._threads.append(
                threading.Thread(target=self._pipeline_loop, daemon=True, name=f"pipe-{i}")
            )
        for thread in self._threads:
            thread.start()

    def stop(self) -> None:
        self._stop.set()
        for thread in self._threads:
            thread.join(timeout=10)
        self._threads = []

    def _queues(self) -> list[str]:
        names = [SCHEDULER_QUEUE, EXTRACTOR_QUEUE]
        names += [downloader_queue(o) for o in self.scheduler.outlets()]
        if self.pipeline_workers:
            names.append(PIPELINE_QUEUE)
        return names

    def idle(self) -> bool:
        for name in self._queues():
            depth = self.broker.queue_depth(name)
            if depth.ready or depth.claimed:
                return False
        return True

    def run_until_idle(self, timeout: float = 300.0) -> bool:
        """Block until every queue is drained (a few consecutive observations)."""
        deadline = time.monotonic() + timeout
        consecutive = 0
        while time.monotonic() < deadline:
            if self.idle():
                consecutive += 1
                if consecutive >= 3:
                    return True
            else:
                consecutive = 0
            time.sleep(0.1)
        return False

    # -- workers ------------------------------------------------------------------

    def _sleep(self) -> None:
        self._stop.wait(self.poll)

    def _scheduler_loop(self) -> None:
        while not self._stop.is_set():
            self.scheduler.drain_deferred()
            msg = self.broker.dequeue(SCHEDULER_QUEUE)
            if msg is None:
                self._sleep()
                continue
            try:
                doc = msg.payload
                self.scheduler.submit_links(
                    doc["outlet_id"],
                    doc.get("links", []),
                    depth=doc.get("depth", 1),
                    discovered_from=doc.get("discovered_from"),
                )
                self.broker.ack(msg.id, msg.receipt)
            except Exception as exc:
                logger.exception("scheduler task failed")
                self._fail(msg, f"scheduler error: {exc}")

    def _downloader_loop(self, outlet: str) -> None:
        state = self.downloader.new_politeness_state(outlet)
        queue = downloader_queue(outlet)
        while not self._stop.is_set():
            msg = self.broker.dequeue(queue)
            if msg is None:
                self._sleep()
                continue
            task = UrlTask.from_payload(msg.payload)
            try:
                result = self.downloader.fetch(task, state)
            except DroppedFetch as exc:
                logger.info("dropped %s: %s", task.url, exc)
                self.stats.bump("dropped")
                self.broker.ack(msg.id, msg.receipt)
                continue
            except PermanentFetchError as exc:
                self.stats.bump("failed")
                self._fail(msg, str(exc))
                continue
            except TransientFetchError as exc:
                self.stats.bump("failed")
                self._fail(msg, str(exc), retry_after=retry_delay(msg.attempts))
                continue
            self.stats.bump("fetched")
            self.broker.enqueue(
                EXTRACTOR_QUEUE,
                {
                    "url": result.url,
                    "requested_url": result.requested_url,
                    "body": result.body,
                    "content_type": result.content_type,
                    "fetched_at": result.fetched_at.isoformat(),
                    "redirect_chain": result.redirect_chain,
                    "outlet_id": task.outlet_id,
                    "kind": task.kind,
                    "priority": task.priority,
                    "depth": task.depth,
                },
                task.priority,
            )
            self.broker.ack(msg.id, msg.receipt)

    def _extractor_loop(self) -> None:
        while not self._stop.is_set():
            msg = self.broker.dequeue(EXTRACTOR_QUEUE)
            if msg is None:
                self._sleep()
                continue
            try:
                self._extract_one(msg)
            except ExtractError as exc:
                self._fail(msg, str(exc))
            except Exception as exc:
                logger.exception("extractor task failed")
                self._fail(msg, f"extractor error: {exc}")

    def _extract_one(self, msg: QueueMessage) -> None:
        doc = msg.payload
        outlet = doc["outlet_id"]
        rules = self.scheduler.rules_for(outlet)
        try:
            url = normalize_url(doc["url"])
        except UrlError as exc:
            self._fail(msg, f"bad final URL: {exc}")
            return
        if doc["kind"] == ARTICLE:
            page = extract(doc["body"], url, rules)
            lock = self._outlet_locks.setdefault(outlet, threading.Lock())
            with lock:  # dedup decide+persist must not interleave per outlet
                decision, article_id, changed = dedup.apply(page, url, outlet, self.store)
            if changed:
                self.stats.bump("merged" if decision.kind == dedup.MERGE_BY_SIMHASH else "stored")
                if self.pipeline_workers or self.runner:
                    task = PipelineTask(article_id=article_id, priority=doc["priority"])
                    self.broker.enqueue(PIPELINE_QUEUE, task.payload(), doc["priority"])
            links = page.links
        else:
            links = harvest_links(doc["body"], url)
        if links:
            self.broker.enqueue(
                SCHEDULER_QUEUE,
                {
                    "outlet_id": outlet,
                    "links": links,
                    "depth": doc.get("depth", 0) + 1,
                    "discovered_from": url,
                },
                doc["priority"],
            )
        self.broker.ack(msg.id, msg.receipt)

    def _pipeline_loop(self) -> None:
        while not self._stop.is_set():
            msg = self.broker.dequeue(PIPELINE_QUEUE)
            if msg is None:
                self._sleep()
                continue
            task = PipelineTask.from_payload(msg.payload)
            try:
                self.runner.process(task)
                self.broker.ack(msg.id, msg.receipt)
            except ArticleBusy:
                self._fail(msg, "article claimed elsewhere", retry_after=0.5)
            except DependencyError as exc:
                self._fail(msg, f"dependency error: {exc}")
            except Exception as exc:
                logger.exception("pipeline task failed")
                self._fail(msg, f"pipeline error: {exc}")

    def _fail(self, msg: QueueMessage, error: str, retry_after: float | None = None) -> None:
        try:
            self.broker.fail(msg.id, msg.receipt, error, retry_after=retry_after)
        except Exception:
            logger.exception("could not fail message %s", msg.id)
