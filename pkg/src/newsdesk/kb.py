"""Knowledge base of linkable entities.

Entities carry their aliases (normalized), a PageRank prominence score, and a
fixed-dimension embedding. The KB is immutable after load and shared across
workers. A builder computes PageRank over user-supplied edge lists so small
fixture KBs can be produced without any external graph data.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CATEGORIES = ("person", "location", "organization")

WIKIDATA_URL_TEMPLATE = "https://www.wikidata.org/wiki/{kb_id}"


class KbError(ValueError):
    pass


def normalize_alias(s: str) -> str:
    """Alias/lookup-key normal form: NFKC, lowercased, single-spaced."""
    return " ".join(unicodedata.normalize("NFKC", s).lower().split())


@dataclass
class KbEntity:
    kb_id: str
    category: str
    labels_and_aliases: list[str]
    pagerank: float
    embedding: np.ndarray = field(repr=False)

    @property
    def label(self) -> str:
        """Canonical label: the first alias."""
        return self.labels_and_aliases[0]


def entity_url(kb_id: str) -> str:
    return WIKIDATA_URL_TEMPLATE.format(kb_id=kb_id)


class KnowledgeBase:
    def __init__(self, entities: list[KbEntity]):
        if not entities:
            self._dim = 0
        else:
            dims = {e.embedding.shape for e in entities}
            if len(dims) != 1 or len(next(iter(dims))) != 1:
                raise KbError(f"embeddings must share one fixed dimension, got {dims}")
            self._dim = entities[0].embedding.shape[0]
        self._by_id: dict[str, KbEntity] = {}
        self._by_alias: dict[str, list[KbEntity]] = {}
        for entity in entities:
            if not entity.labels_and_aliases:
                raise KbError(f"{entity.kb_id} has no labels or aliases")
            if entity.kb_id in self._by_id:
                raise KbError(f"duplicate kb_id {entity.kb_id}")
            if entity.pagerank < 0:
                raise KbError(f"{entity.kb_id} has negative pagerank")
            self._by_id[entity.kb_id] = entity
            for alias in entity.labels_and_aliases:
                self._by_alias.setdefault(normalize_alias(alias), []).append(entity)

    def __len__(self) -> int:
        return len(self._by_id)

    def __iter__(self):
        return iter(self._by_id.values())

    @property
    def dim(self) -> int:
        return self._dim

    def get(self, kb_id: str) -> KbEntity | None:
        return self._by_id.get(kb_id)

    def label(self, kb_id: str) -> str | None:
        entity = self._by_id.get(kb_id)
        return entity.label if entity else None

    def lookup(self, key: str) -> list[KbEntity]:
        """Entities with an alias equal to the normalized key.

        Ordered by pagerank descending, kb_id ascending on ties.
        """
        matches = self._by_alias.get(normalize_alias(key), [])
        return sorted(matches, key=lambda e: (-e.pagerank, e.kb_id))

    # -- persistence -----------------------------------------------------------

    @classmethod
    def load_jsonl(cls, path: str | Path) -> "KnowledgeBase":
        entities = []
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    doc = json.loads(line)
                    entities.append(
                        KbEntity(
                            kb_id=doc["kb_id"],
                            category=doc["category"],
                            labels_and_aliases=[normalize_alias(a) for a in doc["aliases"]],
                            pagerank=float(doc["pagerank"]),
                            embedding=np.asarray(doc["embedding"], dtype=np.float64),
                        )
                    )
                except (KeyError, TypeError, json.JSONDecodeError) as exc:
                    raise KbError(f"{path}:{line_no}: bad entity record: {exc}") from exc
        return cls(entities)

    def save_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for entity in sorted(self._by_id.values(), key=lambda e: e.kb_id):
                fh.write(
                    json.dumps(
                        {
                            "kb_id": entity.kb_id,
                            "category": entity.category,
                            "aliases": entity.labels_and_aliases,
                            "pagerank": entity.pagerank,
                            "embedding": entity.embedding.tolist(),
                        }
                    )
                    + "\n"
                )


def pagerank(
    nodes: list[str],
    edges: list[tuple[str, str]],
    *,
    damping: float = 0.85,
    iterations: int = 100,
    tolerance: float = 1e-9,
) -> dict[str, float]:
    """Standard power-iteration PageRank with uniform dangling redistribution."""
    index = {node: i for i, node in enumerate(nodes)}
    n = len(nodes)
    if n == 0:
        return {}
    out_links: list[list[int]] = [[] for _ in range(n)]
    for src, dst in sorted(set(edges)):
        if src in index and dst in index:
            out_links[index[src]].append(index[dst])
    rank = np.full(n, 1.0 / n)
    for _ in range(iterations):
        nxt = np.full(n, (1.0 - damping) / n)
        dangling = 0.0
        for i, targets in enumerate(out_links):
            if not targets:
                dangling += rank[i]
                continue
            share = damping * rank[i] / len(targets)
            for t in targets:
                nxt[t] += share
        nxt += damping * dangling / n
        if np.abs(nxt - rank).sum() < tolerance:
            rank = nxt
            break
        rank = nxt
    return {node: float(rank[index[node]]) for node in nodes}


def deterministic_embedding(kb_id: str, dim: int = 32) -> np.ndarray:
    """Unit-norm pseudo-random embedding derived from the entity id alone."""
    seed = int.from_bytes(kb_id.encode("utf-8")[:8].ljust(8, b"\0"), "little") % (2**32)
    rng = np.random.default_rng(seed)
    vec = rng.normal(size=dim)
    return vec / np.linalg.norm(vec)
