"""Per-outlet page fetching with robots.txt, pacing, and retries.

One fetch loop per outlet is the concurrency contract: the loop owns its
outlet's politeness state, so pacing needs no locking. Transient failures
(429, 5xx, timeouts) are retried in-process on a short backoff before the
task is failed back to the broker for a longer-delay retry.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone

import httpx

from .robots import DEFAULT_DELAY, PolitenessState, RobotsCache
from .scheduler import UrlTask
from .urls import url_host

logger = logging.getLogger(__name__)

DEFAULT_USER_AGENT = "newsdesk-crawler/0.1 (+https://example.invalid/crawler)"
MAX_REDIRECTS = 10
SIZE_CAP = 10 * 1024 * 1024
DEFAULT_BACKOFF = (1.0, 5.0, 25.0)


class FetchError(Exception):
    pass


class PermanentFetchError(FetchError):
    """4xx (other than 429): retrying will not help."""


class TransientFetchError(FetchError):
    """Network trouble or server-side errors; retry later."""


class DroppedFetch(FetchError):
    """Not an error: robots-disallowed, non-HTML, oversize, cross-host redirect."""


@dataclass
class FetchResult:
    url: str
    requested_url: str
    status: int
    body: str
    content_type: str
    fetched_at: datetime
    redirect_chain: list[str] = field(default_factory=list)


class Downloader:
    def __init__(
        self,
        *,
        user_agent: str = DEFAULT_USER_AGENT,
        default_delay: float = DEFAULT_DELAY,
        max_retries: int = 3,
        backoff: tuple[float, ...] = DEFAULT_BACKOFF,
        size_cap: int = SIZE_CAP,
        timeout: float = 20.0,
        robots_ttl: float = 3600.0,
        client: httpx.Client | None = None,
    ):
        self.user_agent = user_agent
        self.default_delay = default_delay
        self.max_retries = max_retries
        self.backoff = backoff
        self.size_cap = size_cap
        self._client = client or httpx.Client(
            timeout=timeout, headers={"User-Agent": user_agent}, follow_redirects=False
        )
        self._robots_state: PolitenessState | None = None  # set during robots fetch
        self.robots = RobotsCache(
            self._fetch_robots_text,
            agent=user_agent,
            default_delay=default_delay,
            ttl=robots_ttl,
        )

    def close(self) -> None:
        self._client.close()

    def new_politeness_state(self, outlet_id: str) -> PolitenessState:
        return PolitenessState(outlet_id=outlet_id, crawl_delay=self.default_delay)

    # -- politeness-gated raw request -----------------------------------------

    def _paced_get(self, url: str, state: PolitenessState) -> httpx.Response:
        wait = state.seconds_until_allowed(time.monotonic())
        if wait > 0:
            time.sleep(wait)
        state.mark_request(time.monotonic())
        return self._client.get(url)

    def _fetch_robots_text(self, url: str) -> tuple[int, str]:
        state = self._robots_state
        response = self._paced_get(url, state) if state else self._client.get(url)
        return response.status_code, response.text

    def ensure_robots(self, task_url: str, state: PolitenessState) -> None:
        """Load (or refresh) robots rules for the outlet, updating its delay."""
        self._robots_state = state
        try:
            state.robots = self.robots.rules_for(task_url)
        finally:
            self._robots_state = None
        state.crawl_delay = max(state.robots.crawl_delay, 0.0)

    # -- the fetch operation ---------------------------------------------------

    def fetch(self, task: UrlTask, state: PolitenessState) -> FetchResult:
        """Download one URL, following same-host redirects, honoring robots.

        Raises DroppedFetch for pages the crawl should silently skip,
        PermanentFetchError for hopeless responses, and TransientFetchError
        once in-process retries are exhausted.
        """
        if state.robots is None:
            self.ensure_robots(task.url, state)
        if not state.robots.allows(self.user_agent, task.url):
            raise DroppedFetch(f"robots-disallowed: {task.url}")

        transient: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt > 0:
                time.sleep(self.backoff[min(attempt - 1, len(self.backoff) - 1)])
            try:
                return self._fetch_once(task.url, state)
            except TransientFetchError as exc:
                transient = exc
                logger.info("transient failure for %s (attempt %d): %s", task.url, attempt + 1, exc)
        raise TransientFetchError(f"retries exhausted for {task.url}: {transient}")

    def _fetch_once(self, url: str, state: PolitenessState) -> FetchResult:
        chain = [url]
        current = url
        host = url_host(url)
        for _ in range(MAX_REDIRECTS):
            try:
                response = self._paced_get(current, state)
            except httpx.HTTPError as exc:
                raise TransientFetchError(f"network error: {exc}") from exc

            if response.is_redirect:
                location = response.headers.get("location", "")
                target = str(httpx.URL(current).join(location))
                if url_host(target) != host:
                    raise DroppedFetch(f"cross-host redirect {current} -> {target}")
                current = target
                chain.append(target)
                continue

            status = response.status_code
            if status == 429 or 500 <= status < 600:
                raise TransientFetchError(f"HTTP {status} for {current}")
            if 400 <= status < 500:
                raise PermanentFetchError(f"HTTP {status} for {current}")
            if not (200 <= status < 300):
                raise PermanentFetchError(f"unexpected HTTP {status} for {current}")

            content_type = response.headers.get("content-type", "").split(";")[0].strip().lower()
            if content_type and content_type not in ("text/html", "application/xhtml+xml"):
                raise DroppedFetch(f"non-HTML content type {content_type!r} for {current}")
            if len(response.content) > self.size_cap:
                raise DroppedFetch(f"response over size cap for {current}")
            body = response.text
            if not body.strip():
                raise PermanentFetchError(f"empty body for {current}")
            return FetchResult(
                url=current,
                requested_url=url,
                status=status,
                body=body,
                content_type=content_type or "text/html",
                fetched_at=datetime.now(timezone.utc),
                redirect_chain=chain,
            )
        raise PermanentFetchError(f"redirect chain exceeded {MAX_REDIRECTS} hops from {url}")
