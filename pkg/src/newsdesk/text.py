"""Text canonicalization applied to every extracted title and body."""

from __future__ import annotations

import re
import unicodedata

_WS_RUN = re.compile(r"\s+")


def normalize_text(s: str) -> str:
    """NFKC-normalize, collapse whitespace runs to single spaces, and trim."""
    return _WS_RUN.sub(" ", unicodedata.normalize("NFKC", s)).strip()
