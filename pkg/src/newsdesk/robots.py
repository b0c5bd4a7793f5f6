"""robots.txt handling and per-outlet politeness state.

Rules are fetched once per host and cached with a TTL; an absent or broken
robots.txt degrades to allow-all with the configured default delay.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable
from urllib.parse import urlsplit
from urllib.robotparser import RobotFileParser

logger = logging.getLogger(__name__)

DEFAULT_DELAY = 2.0
DEFAULT_TTL = 3600.0


@dataclass
class RobotsRules:
    parser: RobotFileParser | None  # None means allow-all
    crawl_delay: float
    fetched_at: float

    def allows(self, agent: str, url: str) -> bool:
        if self.parser is None:
            return True
        return self.parser.can_fetch(agent, url)


@dataclass
class PolitenessState:
    """Per-outlet pacing: consecutive requests are >= crawl_delay apart."""

    outlet_id: str
    crawl_delay: float = DEFAULT_DELAY
    last_request_at: float | None = None  # monotonic clock
    robots: RobotsRules | None = None

    def seconds_until_allowed(self, now: float) -> float:
        if self.last_request_at is None:
            return 0.0
        return max(0.0, self.last_request_at + self.crawl_delay - now)

    def mark_request(self, now: float) -> None:
        self.last_request_at = now


def parse_robots(text: str, agent: str, default_delay: float, now: float) -> RobotsRules:
    parser = RobotFileParser()
    parser.parse(text.splitlines())
    delay = parser.crawl_delay(agent)
    return RobotsRules(
        parser=parser,
        crawl_delay=float(delay) if delay is not None else default_delay,
        fetched_at=now,
    )


class RobotsCache:
    """Host-keyed robots.txt cache.

    `fetch_text` performs the actual HTTP GET and returns (status, text); the
    downloader injects a politeness-gated fetcher so robots requests also
    respect the outlet's pacing.
    """

    def __init__(
        self,
        fetch_text: Callable[[str], tuple[int, str]],
        *,
        agent: str,
        default_delay: float = DEFAULT_DELAY,
        ttl: float = DEFAULT_TTL,
        clock: Callable[[], float] = time.monotonic,
    ):
        self._fetch_text = fetch_text
        self._agent = agent
        self._default_delay = default_delay
        self._ttl = ttl
        self._clock = clock
        self._cache: dict[str, RobotsRules] = {}

    def rules_for(self, url: str) -> RobotsRules:
        parts = urlsplit(url)
        origin = f"{parts.scheme}://{parts.netloc}"
        now = self._clock()
        cached = self._cache.get(origin)
        if cached is not None and now - cached.fetched_at < self._ttl:
            return cached
        rules = self._load(origin, now)
        self._cache[origin] = rules
        return rules

    def _load(self, origin: str, now: float) -> RobotsRules:
        try:
            status, text = self._fetch_text(f"{origin}/robots.txt")
        except Exception as exc:
            logger.info("robots.txt fetch failed for %s (%s); allowing all", origin, exc)
            return RobotsRules(None, self._default_delay, now)
        if status != 200:
            return RobotsRules(None, self._default_delay, now)
        return parse_robots(text, self._agent, self._default_delay, now)
