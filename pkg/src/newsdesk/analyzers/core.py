"""Core linguistic processing: sentences, tokens, lemmas.

Everything downstream depends on this module. Sentence splitting is
rule-based (terminal punctuation plus an abbreviation list) and tokenization
follows Unicode word boundaries; lemmas come from a pluggable lookup table
with lowercased-surface fallback, so identical input always produces
identical lemmas.
"""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass
from pathlib import Path

from .base import composite_text

DEFAULT_ABBREVIATIONS = frozenset(
    {
        "dr", "mr", "mrs", "ms", "prof", "ing", "sv", "br", "npr", "itd",
        "tzv", "tj", "g", "st", "sc", "cca", "e.g", "i.e", "cf", "etc",
    }
)

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)
_TERMINAL = ".!?"
_CLOSERS = "\"'”’)]"


@dataclass
class Token:
    text: str
    lemma: str
    start: int
    end: int
    sentence_index: int
    is_alpha: bool


def load_lemma_table(path: str | Path) -> dict[str, str]:
    """Lemma table as UTF-8 TSV: surface<TAB>lemma, one pair per line."""
    table: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            surface, _, lemma = line.partition("\t")
            if surface and lemma:
                table[surface.lower()] = lemma
    return table


def split_sentences(text: str, abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS) -> list[tuple[int, int]]:
    """Character spans of sentences, whitespace-trimmed, in document order."""
    ends: list[int] = []
    n = len(text)
    i = 0
    while i < n:
        ch = text[i]
        if ch == "\n":
            ends.append(i)
        elif ch in _TERMINAL:
            j = i
            while j + 1 < n and text[j + 1] in _TERMINAL + _CLOSERS:
                j += 1
            k = i - 1
            while k >= 0 and (text[k].isalnum() or text[k] == "."):
                k -= 1
            word = text[k + 1 : i].lower()
            is_abbrev = ch == "." and word in abbreviations
            m = j + 1
            while m < n and text[m] in " \t":
                m += 1
            starts_new = m >= n or text[m] == "\n" or text[m].isupper() or text[m].isdigit()
            if not is_abbrev and starts_new:
                ends.append(j + 1)
            i = j
        i += 1
    if not ends or ends[-1] < n:
        ends.append(n)

    spans: list[tuple[int, int]] = []
    start = 0
    for end in ends:
        segment = text[start:end]
        lead = len(segment) - len(segment.lstrip())
        trail = len(segment) - len(segment.rstrip())
        if segment.strip():
            spans.append((start + lead, end - trail))
        start = end + 1 if end < n and text[end] == "\n" else end
    return spans


def tokenize(text: str, spans: list[tuple[int, int]], lemma_table: dict[str, str]) -> list[Token]:
    tokens: list[Token] = []
    span_idx = 0
    for match in _TOKEN_RE.finditer(text):
        start, end = match.span()
        while span_idx + 1 < len(spans) and start >= spans[span_idx][1]:
            span_idx += 1
        surface = match.group()
        lowered = surface.lower()
        tokens.append(
            Token(
                text=surface,
                lemma=lemma_table.get(lowered, lowered),
                start=start,
                end=end,
                sentence_index=span_idx if spans else 0,
                is_alpha=surface.isalpha(),
            )
        )
    return tokens


def is_word(token_text: str) -> bool:
    return bool(token_text) and (token_text[0].isalnum() or token_text[0] == "_")


class CoreAnalyzer:
    name = "core"

    def __init__(
        self,
        lemma_table: dict[str, str] | str | Path | None = None,
        abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS,
    ):
        if lemma_table is None:
            self.lemma_table = {}
        elif isinstance(lemma_table, (str, Path)):
            self.lemma_table = load_lemma_table(lemma_table)
        else:
            self.lemma_table = dict(lemma_table)
        self.abbreviations = abbreviations

    def lemmatize_phrase(self, phrase: str) -> list[str]:
        """Lemma sequence of a free-text phrase; used by the query engine."""
        return [
            self.lemma_table.get(m.group().lower(), m.group().lower())
            for m in _TOKEN_RE.finditer(phrase)
            if is_word(m.group())
        ]

    def analyze(self, article, upstream) -> dict:
        text = composite_text(article)
        spans = split_sentences(text, self.abbreviations)
        tokens = tokenize(text, spans, self.lemma_table)
        title_len = len(article.title)
        return {
            "sentences": [list(span) for span in spans],
            "tokens": [asdict(t) for t in tokens],
            "token_count": len(tokens),
            "title_lemmas": [t.lemma for t in tokens if t.start < title_len and is_word(t.text)],
            "body_lemmas": [t.lemma for t in tokens if t.start > title_len and is_word(t.text)],
        }
