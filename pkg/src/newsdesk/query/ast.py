"""Boolean query trees and their JSON wire format.

A query combines an outlet filter, a low-quality toggle, and one Boolean
expression over entity / phrase / topic constraints:

    {"outlets": ["outletA"],            # empty or absent means all outlets
     "include_low_quality": false,
     "node": {"op": "and", "children": [
         {"entity": "Q9036"},
         {"phrase": "magnet"},
         {"op": "not", "child": {"topic": "SPORT"}}]}}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

MAX_DEPTH = 32


class QueryError(ValueError):
    """Malformed query document; surfaces as a 400 at the API."""


@dataclass(frozen=True)
class EntityConstraint:
    kb_id: str


@dataclass(frozen=True)
class PhraseConstraint:
    text: str


@dataclass(frozen=True)
class TopicConstraint:
    label: str


@dataclass(frozen=True)
class And:
    children: tuple


@dataclass(frozen=True)
class Or:
    children: tuple


@dataclass(frozen=True)
class Not:
    child: object


Leaf = (EntityConstraint, PhraseConstraint, TopicConstraint)


@dataclass
class QueryAst:
    node: object
    outlets: frozenset[str] = field(default_factory=frozenset)
    include_low_quality: bool = False


def _parse_node(doc, depth: int):
    if depth > MAX_DEPTH:
        raise QueryError(f"query deeper than {MAX_DEPTH} levels")
    if not isinstance(doc, dict):
        raise QueryError(f"expected a node object, got {type(doc).__name__}")
    if "op" in doc:
        op = doc["op"]
        if op in ("and", "or"):
            children = doc.get("children")
            if not isinstance(children, list) or not children:
                raise QueryError(f"{op!r} needs a non-empty children list")
            parsed = tuple(_parse_node(c, depth + 1) for c in children)
            return And(parsed) if op == "and" else Or(parsed)
        if op == "not":
            if "children" in doc:
                raise QueryError("'not' is unary; use the 'child' key")
            if "child" not in doc:
                raise QueryError("'not' needs a child")
            return Not(_parse_node(doc["child"], depth + 1))
        raise QueryError(f"unknown operator {op!r}")
    if "entity" in doc:
        if not isinstance(doc["entity"], str) or not doc["entity"]:
            raise QueryError("entity constraint needs a kb_id string")
        return EntityConstraint(doc["entity"])
    if "phrase" in doc:
        if not isinstance(doc["phrase"], str) or not doc["phrase"].strip():
            raise QueryError("phrase constraint needs non-empty text")
        return PhraseConstraint(doc["phrase"])
    if "topic" in doc:
        if not isinstance(doc["topic"], str) or not doc["topic"]:
            raise QueryError("topic constraint needs a label")
        return TopicConstraint(doc["topic"])
    raise QueryError(f"unrecognized node: {sorted(doc)}")


def _count_leaves(node) -> int:
    if isinstance(node, Leaf):
        return 1
    if isinstance(node, Not):
        return _count_leaves(node.child)
    return sum(_count_leaves(c) for c in node.children)


def parse_query(doc: dict) -> QueryAst:
    if not isinstance(doc, dict):
        raise QueryError("query must be an object")
    if "node" not in doc:
        raise QueryError("query needs a 'node'")
    node = _parse_node(doc["node"], 1)
    if _count_leaves(node) < 1:
        raise QueryError("query needs at least one constraint")
    outlets = doc.get("outlets") or []
    if not isinstance(outlets, list) or not all(isinstance(o, str) for o in outlets):
        raise QueryError("'outlets' must be a list of outlet ids")
    return QueryAst(
        node=node,
        outlets=frozenset(outlets),
        include_low_quality=bool(doc.get("include_low_quality", False)),
    )


def _node_to_dict(node) -> dict:
    if isinstance(node, EntityConstraint):
        return {"entity": node.kb_id}
    if isinstance(node, PhraseConstraint):
        return {"phrase": node.text}
    if isinstance(node, TopicConstraint):
        return {"topic": node.label}
    if isinstance(node, Not):
        return {"op": "not", "child": _node_to_dict(node.child)}
    op = "and" if isinstance(node, And) else "or"
    return {"op": op, "children": [_node_to_dict(c) for c in node.children]}


def query_to_dict(query: QueryAst) -> dict:
    return {
        "outlets": sorted(query.outlets),
        "include_low_quality": query.include_low_quality,
        "node": _node_to_dict(query.node),
    }


def canonical_key(query: QueryAst) -> str:
    """Stable cache key for a parsed query."""
    return json.dumps(query_to_dict(query), sort_keys=True, separators=(",", ":"))
