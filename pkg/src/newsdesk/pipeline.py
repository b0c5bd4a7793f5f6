"""Analyzer DAG execution with versioned features and partial reindexing.

Each article's features document maps module name to {data, version}. A task
reruns exactly the modules that need it: everything on a fresh article, the
named module and its transitive dependents when reprocessing from a specific
point, and any module whose stored version no longer matches the registry
(plus dependents). Modules outside that run set are never invoked.

The whole features document commits atomically per task; a failing analyzer
leaves the article exactly as it was.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Iterator

from .analyzers.base import DependencyError
from .broker import Broker
from .store import Article, ArticleStore

logger = logging.getLogger(__name__)

PIPELINE_QUEUE = "pipeline.in"


class PipelineError(Exception):
    pass


class CycleError(PipelineError):
    pass


class UnknownModuleError(PipelineError):
    pass


class ArticleBusy(PipelineError):
    """Another worker holds this article's processing claim."""


@dataclass
class ModuleSpec:
    name: str
    depends_on: tuple[str, ...]
    version: int
    analyzer: Any

    def __post_init__(self):
        if self.version < 1:
            raise PipelineError(f"{self.name}: version must be positive")


@dataclass
class PipelineTask:
    article_id: int
    from_module: str | None = None
    priority: int = 0

    def payload(self) -> dict:
        return {"article_id": self.article_id, "from_module": self.from_module, "priority": self.priority}

    @classmethod
    def from_payload(cls, doc: dict) -> "PipelineTask":
        return cls(
            article_id=doc["article_id"],
            from_module=doc.get("from_module"),
            priority=doc.get("priority", 0),
        )


class PipelineRegistry:
    """Module specs plus the DAG structure derived from them.

    Modules register after their dependencies, so registration order is a
    valid topological order and doubles as the deterministic tie-break.
    """

    def __init__(self, version_store: ArticleStore | None = None):
        self._specs: dict[str, ModuleSpec] = {}
        self._versions: dict[str, int] = {}
        self._order: list[str] = []
        self._store = version_store

    def register(self, spec: ModuleSpec) -> None:
        if spec.name in self._specs:
            raise PipelineError(f"duplicate module {spec.name!r}")
        if spec.name in spec.depends_on:
            raise CycleError(f"{spec.name} cannot depend on itself")
        for dep in spec.depends_on:
            if dep not in self._specs:
                raise PipelineError(f"{spec.name}: unknown dependency {dep!r}")
        self._specs[spec.name] = spec
        self._order.append(spec.name)
        persisted = self._store.module_version(spec.name) if self._store else None
        self._versions[spec.name] = persisted if persisted is not None else spec.version

    def modules(self) -> list[str]:
        return list(self._order)

    def topo_order(self) -> list[str]:
        return list(self._order)

    def spec(self, name: str) -> ModuleSpec:
        try:
            return self._specs[name]
        except KeyError:
            raise UnknownModuleError(name) from None

    def current_version(self, name: str) -> int:
        self.spec(name)
        return self._versions[name]

    def bump(self, name: str) -> int:
        self.spec(name)
        self._versions[name] += 1
        if self._store:
            self._store.set_module_version(name, self._versions[name])
        return self._versions[name]

    def dependents(self, name: str) -> set[str]:
        self.spec(name)
        out: set[str] = set()
        frontier = {name}
        while frontier:
            nxt = {
                s.name
                for s in self._specs.values()
                if s.name not in out and frontier & set(s.depends_on)
            }
            out |= nxt
            frontier = nxt
        return out

    def affected_set(self, changed: str) -> list[str]:
        """`changed` plus all transitive dependents, topologically ordered."""
        members = {changed} | self.dependents(changed)
        return [m for m in self._order if m in members]


class PipelineRunner:
    def __init__(
        self,
        store: ArticleStore,
        registry: PipelineRegistry,
        broker: Broker | None = None,
        queue: str = PIPELINE_QUEUE,
    ):
        self.store = store
        self.registry = registry
        self.broker = broker
        self.queue = queue
        if broker is not None:
            broker.register_queue(queue)

    # -- run-set computation ----------------------------------------------------

    def _stale_modules(self, features: dict) -> set[str]:
        stale = set()
        for name in self.registry.modules():
            record = features.get(name)
            if not isinstance(record, dict) or record.get("version") != self.registry.current_version(name):
                stale.add(name)
        return stale

    def run_set(self, features: dict, from_module: str | None) -> list[str]:
        """Modules to execute for an article with `features` stored."""
        modules = self.registry.modules()
        stale = self._stale_modules(features)
        if from_module is None and len(stale) == len(modules):
            return list(modules)
        seeds = set(stale)
        if from_module is not None:
            self.registry.spec(from_module)
            seeds.add(from_module)
        members: set[str] = set()
        for seed in seeds:
            members.update(self.registry.affected_set(seed))
        return [m for m in modules if m in members]

    # -- execution ---------------------------------------------------------------

    def process(self, task: PipelineTask) -> dict:
        """Run the task's module set over one article; returns the features doc."""
        article = self.store.get(task.article_id)
        if article is None:
            raise PipelineError(f"article {task.article_id} does not exist")
        if not self.store.claim_article(task.article_id):
            raise ArticleBusy(f"article {task.article_id} is being processed elsewhere")
        try:
            features = dict(article.features)
            to_run = self.run_set(features, task.from_module)
            for name in to_run:
                spec = self.registry.spec(name)
                upstream = {}
                for dep in spec.depends_on:
                    record = features.get(dep)
                    if not isinstance(record, dict) or "data" not in record:
                        raise DependencyError(f"{name}: upstream {dep!r} has no feature record")
                    upstream[dep] = record["data"]
                data = spec.analyzer.analyze(article, upstream)
                features[name] = {"data": data, "version": self.registry.current_version(name)}
            if to_run:
                self._commit(article, features)
            return features
        finally:
            self.store.release_article(task.article_id)

    def _commit(self, article: Article, features: dict) -> None:
        record = features.get("low_quality")
        if isinstance(record, dict):
            hidden = bool(record.get("data", {}).get("hidden", False))
        else:
            hidden = article.hidden
        self.store.set_features(article.id, features, hidden)

    # -- staleness and reindexing ---------------------------------------------------

    def stale_articles(self, module: str) -> Iterator[int]:
        """Ids of articles whose stored record for `module` is missing or outdated."""
        current = self.registry.current_version(module)
        for article in self.store.iter_articles():
            record = article.features.get(module)
            if not isinstance(record, dict) or record.get("version") != current:
                yield article.id

    def reindex(self, module: str, priority: int = 1) -> int:
        """Queue one task per stale article; low priority keeps fresh crawls first."""
        if self.broker is None:
            raise PipelineError("reindex requires a broker")
        count = 0
        for article_id in self.stale_articles(module):
            task = PipelineTask(article_id=article_id, from_module=module, priority=priority)
            self.broker.enqueue(self.queue, task.payload(), priority)
            count += 1
        return count

    def stale_counts(self) -> dict[str, int]:
        return {m: sum(1 for _ in self.stale_articles(m)) for m in self.registry.modules()}


def default_registry(
    core,
    ner,
    nel,
    low_quality,
    topics,
    *,
    versions: dict[str, int] | None = None,
    version_store: ArticleStore | None = None,
) -> PipelineRegistry:
    """The standard five-module DAG: core feeds everything, ner feeds nel."""
    versions = versions or {}
    registry = PipelineRegistry(version_store=version_store)
    registry.register(ModuleSpec("core", (), versions.get("core", 1), core))
    registry.register(ModuleSpec("ner", ("core",), versions.get("ner", 1), ner))
    registry.register(ModuleSpec("nel", ("core", "ner"), versions.get("nel", 1), nel))
    registry.register(ModuleSpec("low_quality", ("core",), versions.get("low_quality", 1), low_quality))
    registry.register(ModuleSpec("topics", ("core",), versions.get("topics", 1), topics))
    return registry
