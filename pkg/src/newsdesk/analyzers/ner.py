"""Gazetteer-based named entity recognition.

Longest-match over a name dictionary, non-overlapping, left to right. Output
offsets always align to core token boundaries, which is the contract any
replacement model must also satisfy.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path

from .base import composite_text, require_upstream
from .core import _TOKEN_RE, is_word

NER_TYPES = ("person", "location", "organization", "misc")


@dataclass
class EntityMention:
    start: int
    end: int
    surface: str
    ner_type: str
    lemma_key: str


def load_gazetteer(path: str | Path) -> dict[tuple[str, ...], str]:
    """Gazetteer TSV: surface<TAB>type[<TAB>kb_id]; kb_id is tooling metadata."""
    table: dict[tuple[str, ...], str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) < 2:
                continue
            surface, ner_type = fields[0], fields[1]
            if ner_type not in NER_TYPES:
                continue
            key = _surface_key(surface)
            if key:
                table[key] = ner_type
    return table


def _surface_key(surface: str) -> tuple[str, ...]:
    return tuple(m.group().lower() for m in _TOKEN_RE.finditer(surface))


class GazetteerNer:
    name = "ner"
    depends_on = ("core",)

    def __init__(self, gazetteer: dict | str | Path | None = None):
        if gazetteer is None:
            entries = {}
        elif isinstance(gazetteer, (str, Path)):
            entries = load_gazetteer(gazetteer)
        else:
            entries = {
                (k if isinstance(k, tuple) else _surface_key(k)): v for k, v in gazetteer.items()
            }
        self.entries = entries
        self.max_len = max((len(k) for k in entries), default=0)

    def analyze(self, article, upstream) -> dict:
        core = require_upstream(upstream, self.name, "core")
        text = composite_text(article)
        tokens = core["tokens"]
        mentions = []
        i = 0
        while i < len(tokens):
            match_len = 0
            match_type = None
            upper = min(self.max_len, len(tokens) - i)
            for width in range(upper, 0, -1):
                key = tuple(t["text"].lower() for t in tokens[i : i + width])
                ner_type = self.entries.get(key)
                if ner_type is not None:
                    match_len, match_type = width, ner_type
                    break
            if match_len == 0:
                i += 1
                continue
            span = tokens[i : i + match_len]
            lemma_key = " ".join(t["lemma"] for t in span if is_word(t["text"]))
            start, end = span[0]["start"], span[-1]["end"]
            mentions.append(
                EntityMention(
                    start=start,
                    end=end,
                    surface=text[start:end],
                    ner_type=match_type,
                    lemma_key=lemma_key,
                )
            )
            i += match_len
        return {"mentions": [asdict(m) for m in mentions]}
