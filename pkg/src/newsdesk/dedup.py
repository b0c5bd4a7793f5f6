"""The deduplication decision procedure for freshly extracted pages.

Order of checks:
  1. URL match within the outlet: update the stored row, unless the new body
     is suspiciously short (not bigger than half the old body), which guards
     against data loss from a bad re-download or re-extraction.
  2. Exact SimHash match (Hamming distance 0) within the same outlet: merge,
     keeping the shorter URL. Fingerprints are never compared across outlets.
  3. Otherwise insert as a new article.
"""

from __future__ import annotations

from dataclasses import dataclass

from .extract import ExtractedPage
from .simhash import compute_simhash
from .store import ArticleStore

INSERT_NEW = "insert_new"
UPDATE_BY_URL = "update_by_url"
MERGE_BY_SIMHASH = "merge_by_simhash"
KEEP_EXISTING = "keep_existing"

SHORT_BODY_GUARD = "short_body_guard"


@dataclass
class DedupDecision:
    kind: str
    existing_id: int | None = None
    reason: str | None = None


def dedup_decide(page: ExtractedPage, url: str, outlet_id: str, store: ArticleStore) -> DedupDecision:
    """Decide how `page`, fetched from `url`, relates to stored articles."""
    by_url = store.get_by_url(outlet_id, url)
    if by_url is not None:
        if len(page.body) > 0.5 * len(by_url.body):
            return DedupDecision(UPDATE_BY_URL, existing_id=by_url.id)
        return DedupDecision(KEEP_EXISTING, existing_id=by_url.id, reason=SHORT_BODY_GUARD)
    fingerprint = compute_simhash(page.title, page.body)
    by_hash = store.find_by_simhash(outlet_id, fingerprint)
    if by_hash is not None:
        return DedupDecision(MERGE_BY_SIMHASH, existing_id=by_hash.id)
    return DedupDecision(INSERT_NEW)


def apply(page: ExtractedPage, url: str, outlet_id: str, store: ArticleStore) -> tuple[DedupDecision, int, bool]:
    """Decide and persist in one step.

    Returns (decision, article_id, changed); `changed` tells the caller
    whether the article needs (re)analysis by the pipeline.

    Decide+persist must not interleave with another worker inserting the same
    content, so callers serialize per outlet (see CrawlWorkers); the store's
    write transactions make each individual step atomic.
    """
    decision = dedup_decide(page, url, outlet_id, store)
    fingerprint = compute_simhash(page.title, page.body)
    if decision.kind == INSERT_NEW:
        article_id = store.insert(outlet_id, url, page.title, page.body, page.published_at, fingerprint)
        return decision, article_id, True
    if decision.kind == UPDATE_BY_URL:
        store.update_content(
            decision.existing_id,
            title=page.title,
            body=page.body,
            published_at=page.published_at,
            simhash=fingerprint,
        )
        return decision, decision.existing_id, True
    if decision.kind == MERGE_BY_SIMHASH:
        existing = store.get(decision.existing_id)
        shorter = url if len(url) < len(existing.url) else existing.url
        store.update_content(
            decision.existing_id,
            url=shorter,
            title=page.title,
            body=page.body,
            published_at=page.published_at or existing.published_at,
            simhash=fingerprint,
        )
        return decision, decision.existing_id, True
    return decision, decision.existing_id, False
