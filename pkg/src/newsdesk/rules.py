"""Per-outlet crawl rule sets: seeds plus regex URL classification.

Each outlet ships one config document: its homepage seed URLs and three regex
lists deciding which URLs are articles, which are excluded from being treated
as articles, and which are ignored outright.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .urls import normalize_url

DEFAULT_RECRAWL_INTERVAL = 15 * 60.0  # homepage recrawl, seconds

ARTICLE = "article"
LISTING = "listing"
IGNORE = "ignore"


class RuleConfigError(ValueError):
    """Bad outlet configuration (invalid regex, missing fields, ...)."""


@dataclass
class CrawlRuleSet:
    outlet_id: str
    seeds: list[str]
    article_patterns: list[re.Pattern] = field(default_factory=list)
    exclude_patterns: list[re.Pattern] = field(default_factory=list)
    ignore_patterns: list[re.Pattern] = field(default_factory=list)
    recrawl_interval: float = DEFAULT_RECRAWL_INTERVAL
    # When set, URLs matching an exclude pattern are dropped instead of
    # traversed as listings.
    exclude_means_drop: bool = False
    # Fallback publish-date source: regex over the URL path with named
    # groups year/month/day.
    date_url_pattern: re.Pattern | None = None

    def __post_init__(self):
        for seed in self.seeds:
            if any(p.search(seed) for p in self.ignore_patterns):
                raise RuleConfigError(f"seed {seed} matches an ignore pattern")


def classify_url(url: str, rules: CrawlRuleSet) -> str:
    """Classify a normalized URL as article, listing, or ignore.

    Ignore patterns win outright; exclude patterns veto article status;
    everything that is not an article is traversed as a listing.
    """
    if any(p.search(url) for p in rules.ignore_patterns):
        return IGNORE
    excluded = any(p.search(url) for p in rules.exclude_patterns)
    if excluded:
        return IGNORE if rules.exclude_means_drop else LISTING
    if any(p.search(url) for p in rules.article_patterns):
        return ARTICLE
    return LISTING


def _compile(patterns: list[str], outlet_id: str, kind: str) -> list[re.Pattern]:
    compiled = []
    for pat in patterns or []:
        try:
            compiled.append(re.compile(pat))
        except re.error as exc:
            raise RuleConfigError(f"outlet {outlet_id}: bad {kind} regex {pat!r}: {exc}") from exc
    return compiled


def rules_from_dict(doc: dict) -> CrawlRuleSet:
    outlet_id = doc.get("outlet_id")
    if not outlet_id:
        raise RuleConfigError("outlet_id is required")
    seeds = doc.get("seeds") or []
    if not seeds:
        raise RuleConfigError(f"outlet {outlet_id}: at least one seed URL is required")
    date_pattern = doc.get("date_url_pattern")
    return CrawlRuleSet(
        outlet_id=outlet_id,
        seeds=[normalize_url(s) for s in seeds],
        article_patterns=_compile(doc.get("article_patterns"), outlet_id, "article"),
        exclude_patterns=_compile(doc.get("exclude_patterns"), outlet_id, "exclude"),
        ignore_patterns=_compile(doc.get("ignore_patterns"), outlet_id, "ignore"),
        recrawl_interval=float(doc.get("recrawl_interval", DEFAULT_RECRAWL_INTERVAL)),
        exclude_means_drop=bool(doc.get("exclude_means_drop", False)),
        date_url_pattern=_compile([date_pattern], outlet_id, "date")[0] if date_pattern else None,
    )


def rules_to_dict(rules: CrawlRuleSet) -> dict:
    return {
        "outlet_id": rules.outlet_id,
        "seeds": rules.seeds,
        "article_patterns": [p.pattern for p in rules.article_patterns],
        "exclude_patterns": [p.pattern for p in rules.exclude_patterns],
        "ignore_patterns": [p.pattern for p in rules.ignore_patterns],
        "recrawl_interval": rules.recrawl_interval,
        "exclude_means_drop": rules.exclude_means_drop,
        "date_url_pattern": rules.date_url_pattern.pattern if rules.date_url_pattern else None,
    }


def load_rules(path: str | Path) -> CrawlRuleSet:
    """Load one outlet's rule set from a YAML document."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise RuleConfigError(f"{path}: expected a mapping")
    return rules_from_dict(doc)
