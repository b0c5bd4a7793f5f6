"""Command-line entry points.

schedctl   outlet registration and seeding
pipectl    pipeline status, version bumps, reindexing
kbctl      knowledge-base builder (PageRank over an edge list)
modelctl   training for the low-quality and topic classifiers
newsdeskd  the crawl loop and the HTTP API server
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from .analyzers import CoreAnalyzer, GazetteerNer, LowQualityAnalyzer, TopicsAnalyzer
from .analyzers.linear import train_binary, train_multilabel
from .analyzers.topics import TOPIC_LABELS
from .broker import Broker
from .crawl import CrawlService
from .downloader import DEFAULT_USER_AGENT, Downloader
from .kb import KbEntity, KnowledgeBase, deterministic_embedding, pagerank
from .nel import NelAnalyzer
from .pipeline import PipelineRunner, default_registry
from .query import QueryEngine
from .query.api import create_app
from .rules import load_rules
from .scheduler import Scheduler, downloader_queue
from .store import ArticleStore

logger = logging.getLogger(__name__)


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh) or {}
    if not isinstance(doc, dict):
        raise SystemExit(f"{path}: config must be a mapping")
    return doc


def _db_path(args, config: dict) -> str:
    return getattr(args, "db", None) or config.get("db") or "newsdesk.db"


class Stack:
    """Everything a command may need, built lazily from one config."""

    def __init__(self, config: dict, db: str):
        self.config = config
        self.db = db
        artifacts = config.get("artifacts", {})
        self.broker = Broker(db)
        self.store = ArticleStore(db)
        self.scheduler = Scheduler(db, self.broker)
        lemma_table = artifacts.get("lemma_table")
        self.core = CoreAnalyzer(lemma_table=lemma_table)
        self.kb = (
            KnowledgeBase.load_jsonl(artifacts["kb"]) if artifacts.get("kb") else KnowledgeBase([])
        )
        ner = GazetteerNer(artifacts.get("gazetteer"))
        nel = NelAnalyzer(self.kb if len(self.kb) else None)
        lowq = LowQualityAnalyzer(artifacts.get("low_quality_model"))
        topics = TopicsAnalyzer(artifacts.get("topics_model"))
        self.registry = default_registry(
            self.core, ner, nel, lowq, topics, version_store=self.store
        )
        self.runner = PipelineRunner(self.store, self.registry, self.broker)
        self.engine = QueryEngine(
            self.store,
            self.core.lemmatize_phrase,
            kb=self.kb,
            phrase_mode=config.get("phrase_mode", "phrase"),
        )

    def downloader(self) -> Downloader:
        crawl = self.config.get("crawl", {})
        return Downloader(
            user_agent=crawl.get("user_agent", DEFAULT_USER_AGENT),
            default_delay=float(crawl.get("default_delay", 2.0)),
            max_retries=int(crawl.get("max_retries", 3)),
            size_cap=int(crawl.get("size_cap", 10 * 1024 * 1024)),
        )

    def service(self) -> CrawlService:
        crawl = self.config.get("crawl", {})
        return CrawlService(
            self.broker,
            self.scheduler,
            self.downloader(),
            self.store,
            runner=self.runner,
            extractor_workers=int(crawl.get("extractor_workers", 2)),
            pipeline_workers=int(crawl.get("pipeline_workers", 1)),
        )


# -- schedctl ---------------------------------------------------------------------


def schedctl_main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="schedctl", description="crawl scheduler control")
    parser.add_argument("--db", help="database path")
    parser.add_argument("--config", help="config file")
    sub = parser.add_subparsers(dest="command", required=True)
    add = sub.add_parser("add-outlet", help="register an outlet from a rules file")
    add.add_argument("file", help="YAML rules document")
    seed = sub.add_parser("seed", help="enqueue an outlet's homepages")
    seed.add_argument("outlet_id")
    seed.add_argument("--no-recrawl", action="store_true", help="do not schedule homepage recrawls")
    args = parser.parse_args(argv)

    config = load_config(args.config)
    db = _db_path(args, config)
    broker = Broker(db)
    scheduler = Scheduler(db, broker)
    if args.command == "add-outlet":
        rules = load_rules(args.file)
        scheduler.add_outlet(rules)
        print(f"outlet {rules.outlet_id} registered ({len(rules.seeds)} seeds)")
    elif args.command == "seed":
        count = scheduler.seed(args.outlet_id, recrawl=not args.no_recrawl)
        depth = broker.queue_depth(downloader_queue(args.outlet_id))
        print(f"seeded {count} URLs; downloader queue ready={depth.ready}")
    return 0


# -- pipectl ----------------------------------------------------------------------


def pipectl_main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="pipectl", description="pipeline control")
    parser.add_argument("--db", help="database path")
    parser.add_argument("--config", help="config file")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("status", help="stale counts per module")
    bump = sub.add_parser("bump", help="increment a module's version")
    bump.add_argument("--module", required=True)
    reindex = sub.add_parser("reindex", help="queue reprocessing for stale articles")
    reindex.add_argument("--module", required=True)
    reindex.add_argument("--priority", type=int, default=1)
    args = parser.parse_args(argv)

    config = load_config(args.config)
    stack = Stack(config, _db_path(args, config))
    if args.command == "status":
        for module, stale in stack.runner.stale_counts().items():
            version = stack.registry.current_version(module)
            print(f"{module:<12} v{version:<3} stale={stale}")
        depth = stack.broker.queue_depth("pipeline.in")
        print(f"pipeline.in ready={depth.ready} claimed={depth.claimed} errored={depth.errored}")
    elif args.command == "bump":
        version = stack.registry.bump(args.module)
        print(f"{args.module} -> v{version}")
    elif args.command == "reindex":
        count = stack.runner.reindex(args.module, args.priority)
        print(f"queued {count} tasks for {args.module} at priority {args.priority}")
    return 0


# -- kbctl ------------------------------------------------------------------------


def kbctl_main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="kbctl", description="knowledge-base builder")
    sub = parser.add_subparsers(dest="command", required=True)
    build = sub.add_parser("build", help="compute PageRank and write a KB file")
    build.add_argument("--entities", required=True, help="JSONL: kb_id, category, aliases[, embedding]")
    build.add_argument("--edges", required=True, help="TSV edge list: src<TAB>dst")
    build.add_argument("--out", required=True)
    build.add_argument("--damping", type=float, default=0.85)
    build.add_argument("--iterations", type=int, default=100)
    build.add_argument("--tolerance", type=float, default=1e-9)
    build.add_argument("--embedding-dim", type=int, default=32)
    args = parser.parse_args(argv)

    records = []
    with open(args.entities, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    edges = []
    with open(args.edges, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            src, _, dst = line.partition("\t")
            if src and dst:
                edges.append((src, dst))

    nodes = [r["kb_id"] for r in records]
    scores = pagerank(
        nodes, edges, damping=args.damping, iterations=args.iterations, tolerance=args.tolerance
    )
    entities = []
    for record in records:
        embedding = record.get("embedding")
        vector = (
            np.asarray(embedding, dtype=np.float64)
            if embedding is not None
            else deterministic_embedding(record["kb_id"], args.embedding_dim)
        )
        entities.append(
            KbEntity(
                kb_id=record["kb_id"],
                category=record["category"],
                labels_and_aliases=record["aliases"],
                pagerank=scores[record["kb_id"]],
                embedding=vector,
            )
        )
    KnowledgeBase(entities).save_jsonl(args.out)
    print(f"wrote {len(entities)} entities to {args.out}")
    return 0


# -- modelctl ---------------------------------------------------------------------


def _read_jsonl(path):
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def modelctl_main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="modelctl", description="train analyzer models")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("train-lowquality", "train-topics"):
        cmd = sub.add_parser(name)
        cmd.add_argument("--train", required=True, help="labeled JSONL file")
        cmd.add_argument("--out", required=True)
        cmd.add_argument("--dim", type=int, default=16384)
        cmd.add_argument("--epochs", type=int, default=300)
    args = parser.parse_args(argv)

    rows = list(_read_jsonl(args.train))
    texts = [f"{r.get('title', '')}\n{r.get('body', '')}" for r in rows]
    if args.command == "train-lowquality":
        flags = [bool(r["low_quality"]) for r in rows]
        model = train_binary(texts, flags, dim=args.dim, epochs=args.epochs)
        model.save(args.out)
        print(f"trained on {len(rows)} examples ({sum(flags)} low-quality) -> {args.out}")
    else:
        label_sets = [r["topics"] for r in rows]
        for labels in label_sets:
            unknown = set(labels) - set(TOPIC_LABELS)
            if unknown:
                raise SystemExit(f"unknown topics in training data: {sorted(unknown)}")
        model = train_multilabel(texts, label_sets, list(TOPIC_LABELS), dim=args.dim, epochs=args.epochs)
        model.save(args.out)
        print(f"trained {len(TOPIC_LABELS)} topic heads on {len(rows)} examples -> {args.out}")
    return 0


# -- newsdeskd ---------------------------------------------------------------------


def build_app_from_config(config: dict, db: str):
    stack = Stack(config, db)
    serve = config.get("serve", {})
    frontend = serve.get("frontend")
    if frontend and not Path(frontend).is_dir():
        logger.warning("frontend dir %s missing; serving API only", frontend)
        frontend = None
    return create_app(stack.engine, broker=stack.broker, runner=stack.runner, frontend_dir=frontend)


def newsdeskd_main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="newsdeskd", description="crawl and serve")
    parser.add_argument("--db", help="database path")
    parser.add_argument("--config", help="config file")
    sub = parser.add_subparsers(dest="command", required=True)
    serve = sub.add_parser("serve", help="run the HTTP API")
    serve.add_argument("--host", default=None)
    serve.add_argument("--port", type=int, default=None)
    crawl = sub.add_parser("crawl", help="run the crawl loop")
    crawl.add_argument("--until-idle", action="store_true", help="exit once all queues drain")
    crawl.add_argument("--duration", type=float, default=None, help="run for N seconds")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(levelname)s %(message)s")
    config = load_config(args.config)
    db = _db_path(args, config)

    if args.command == "serve":
        import uvicorn

        serve_cfg = config.get("serve", {})
        app = build_app_from_config(config, db)
        uvicorn.run(
            app,
            host=args.host or serve_cfg.get("host", "127.0.0.1"),
            port=args.port or int(serve_cfg.get("port", 8080)),
            log_level="info",
        )
        return 0

    stack = Stack(config, db)
    service = stack.service()
    service.start()
    try:
        if args.until_idle:
            service.run_until_idle(timeout=args.duration or 3600)
        elif args.duration:
            time.sleep(args.duration)
        else:
            while True:
                time.sleep(60)
                logger.info("crawl stats: %s", service.stats)
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()
    print(
        f"fetched={service.stats.fetched} stored={service.stats.stored} "
        f"merged={service.stats.merged} dropped={service.stats.dropped} failed={service.stats.failed}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(newsdeskd_main())
