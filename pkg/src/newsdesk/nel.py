"""Entity linking: mentions to knowledge-base IDs.

Candidate retrieval matches the mention's lemma key against KB aliases. The
initial solution takes each mention's highest-PageRank candidate; refinement
then walks mentions in document order, reassigning each to the candidate
whose embedding agrees most (summed dot product) with the current choices
for all other mentions. Updates within a pass are sequential, which makes
the global agreement objective non-decreasing, so the loop either reaches a
fixed point or stops at the hard five-pass cap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .analyzers.base import DependencyError, require_upstream
from .kb import CATEGORIES, KbEntity, KnowledgeBase

MAX_PASSES = 5


@dataclass
class LinkAssignment:
    mention_index: int
    kb_id: str | None
    score_trace: list[float] = field(default_factory=list)


def _lemma_key(mention: Any) -> str:
    if isinstance(mention, dict):
        return mention["lemma_key"]
    return mention.lemma_key


def _ner_type(mention: Any) -> str | None:
    if isinstance(mention, dict):
        return mention.get("ner_type")
    return getattr(mention, "ner_type", None)


def candidates(
    mention: Any, kb: KnowledgeBase, *, strict_category: bool = False
) -> list[KbEntity]:
    """KB entities whose aliases match the mention's lemma key.

    Ordered by pagerank descending, ties by kb_id ascending. With
    `strict_category`, person/location/organization mentions only match
    entities of the same category; `misc` mentions match anything.
    """
    matches = kb.lookup(_lemma_key(mention))
    if strict_category:
        ner_type = _ner_type(mention)
        if ner_type in CATEGORIES:
            matches = [e for e in matches if e.category == ner_type]
    return matches


def initial_solution(
    mentions: Sequence[Any], candidate_lists: Sequence[list[KbEntity]]
) -> list[int | None]:
    """Pick each mention's highest-PageRank candidate; None when unlinkable.

    Candidate lists arrive pagerank-sorted, so this is index 0.
    """
    return [0 if cands else None for cands in candidate_lists]


def _objective(solution: Sequence[int | None], candidate_lists: Sequence[list[KbEntity]]) -> float:
    """Global agreement: sum of pairwise embedding dot products of linked mentions."""
    vectors = [
        candidate_lists[i][choice].embedding
        for i, choice in enumerate(solution)
        if choice is not None
    ]
    if len(vectors) < 2:
        return 0.0
    total = np.sum(vectors, axis=0)
    return float((total @ total - sum(v @ v for v in vectors)) / 2.0)


def refine(
    solution: Sequence[int | None], candidate_lists: Sequence[list[KbEntity]]
) -> tuple[list[int | None], bool]:
    """One sequential pass over mentions in document order.

    For each linkable mention, rescore every candidate against the current
    assignments of the other mentions and keep the argmax (ties: higher
    pagerank, then smaller kb_id). Later mentions see earlier updates.
    """
    updated = list(solution)
    linkable = [i for i, cands in enumerate(candidate_lists) if cands]
    if len(linkable) < 2:
        return updated, False
    dim = candidate_lists[linkable[0]][0].embedding.shape[0]
    for cands in candidate_lists:
        for cand in cands:
            if cand.embedding.shape[0] != dim:
                raise ValueError(
                    f"embedding dimension mismatch: {cand.kb_id} has "
                    f"{cand.embedding.shape[0]}, expected {dim}"
                )
    changed = False
    for i in linkable:
        context = np.zeros(dim)
        for j in linkable:
            if j != i:
                context += candidate_lists[j][updated[j]].embedding
        best_idx = None
        best_key: tuple[float, float] | None = None
        for idx, cand in enumerate(candidate_lists[i]):
            key = (float(cand.embedding @ context), cand.pagerank)
            if (
                best_idx is None
                or key > best_key
                or (key == best_key and cand.kb_id < candidate_lists[i][best_idx].kb_id)
            ):
                best_idx, best_key = idx, key
        if best_idx != updated[i]:
            updated[i] = best_idx
            changed = True
    return updated, changed


def link(
    mentions: Sequence[Any],
    kb: KnowledgeBase,
    *,
    max_passes: int = MAX_PASSES,
    strict_category: bool = False,
) -> list[LinkAssignment]:
    """Full linking: candidates, PageRank initialization, capped refinement.

    Every returned assignment carries the shared trace of the global
    agreement score: one entry after initialization and one after each
    executed refine pass.
    """
    candidate_lists = [candidates(m, kb, strict_category=strict_category) for m in mentions]
    solution = initial_solution(mentions, candidate_lists)
    trace = [_objective(solution, candidate_lists)]
    for _ in range(max_passes):
        solution, changed = refine(solution, candidate_lists)
        trace.append(_objective(solution, candidate_lists))
        if not changed:
            break
    return [
        LinkAssignment(
            mention_index=i,
            kb_id=candidate_lists[i][choice].kb_id if choice is not None else None,
            score_trace=list(trace),
        )
        for i, choice in enumerate(solution)
    ]


class NelAnalyzer:
    """Pipeline module wrapping the solver; depends on core and ner."""

    name = "nel"
    depends_on = ("core", "ner")

    def __init__(self, kb: KnowledgeBase | None = None, *, strict_category: bool = False):
        self.kb = kb
        self.strict_category = strict_category

    def analyze(self, article, upstream) -> dict:
        ner_data = require_upstream(upstream, self.name, "ner")
        require_upstream(upstream, self.name, "core")
        if self.kb is None:
            raise DependencyError("nel requires a knowledge base artifact")
        mentions = ner_data["mentions"]
        assignments = link(mentions, self.kb, strict_category=self.strict_category)
        linked = []
        for mention, assignment in zip(mentions, assignments):
            linked.append({**mention, "kb_id": assignment.kb_id})
        return {
            "mentions": linked,
            "entities": sorted({a.kb_id for a in assignments if a.kb_id}),
        }
