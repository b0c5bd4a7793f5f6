"""64-bit SimHash fingerprints for article deduplication.

The fingerprint is built from character trigrams of the concatenated
alphanumeric characters of title and body, lowercased, so punctuation,
whitespace, and markup noise cannot change it. Small edits flip few
trigrams and therefore few bits; dedup uses exact (Hamming distance 0)
matching only, so near-identical articles must hash identically, which the
alphanumeric filtering guarantees for formatting-only changes.
"""

from __future__ import annotations

import hashlib

import numpy as np

# Key for the per-trigram hash; fixed so fingerprints are stable across runs,
# machines, and Python processes (never hash()-based).
_TRIGRAM_HASH_KEY = b"newsdesk.simhash.v1"

_BIT_COLUMNS = np.arange(64, dtype=np.uint64)

# Trigram-hash memo; the alphanumeric trigram space in a corpus is small
# compared to the number of trigram occurrences.
_memo: dict[str, int] = {}


def _trigram_hash(trigram: str) -> int:
    h = _memo.get(trigram)
    if h is None:
        digest = hashlib.blake2b(trigram.encode("utf-8"), digest_size=8, key=_TRIGRAM_HASH_KEY).digest()
        h = int.from_bytes(digest, "little")
        if len(_memo) < 1_000_000:
            _memo[trigram] = h
    return h


def alphanumeric_stream(title: str, body: str) -> str:
    """Concatenated title+body reduced to lowercased letters and digits."""
    return "".join(ch for ch in (title + body) if ch.isalnum()).lower()


def compute_simhash(title: str, body: str) -> int:
    """Deterministic 64-bit SimHash of an article's textual content.

    Fewer than three alphanumeric characters cannot form a trigram; such
    degenerate inputs hash to 0.
    """
    stream = alphanumeric_stream(title, body)
    n = len(stream) - 2
    if n <= 0:
        return 0
    hashes = np.fromiter(
        (_trigram_hash(stream[i : i + 3]) for i in range(n)), dtype=np.uint64, count=n
    )
    bits = (hashes[:, None] >> _BIT_COLUMNS) & np.uint64(1)
    set_counts = bits.sum(axis=0, dtype=np.int64)
    # Per-bit vote: +1 when set, -1 when clear; bit is 1 when the vote is >= 0.
    votes = 2 * set_counts - n
    fingerprint = np.uint64(0)
    for i in range(64):
        if votes[i] >= 0:
            fingerprint |= np.uint64(1) << _BIT_COLUMNS[i]
    return int(fingerprint)


def hamming_distance(a: int, b: int) -> int:
    return bin(a ^ b).count("1")
