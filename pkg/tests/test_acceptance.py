"""Acceptance criteria, one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -s` to watch the lines appear;
production-scale figures are exercised as desk-scale analogues with the
tolerances pinned below.
"""

import itertools
import random
import threading
import time
from collections import Counter
from datetime import date

import numpy as np
import pytest

from newsdesk.broker import Broker, ClaimError
from newsdesk.crawl import CrawlService
from newsdesk.dedup import INSERT_NEW, KEEP_EXISTING, MERGE_BY_SIMHASH, apply, dedup_decide
from newsdesk.downloader import Downloader
from newsdesk.extract import ExtractedPage
from newsdesk.kb import KbEntity, KnowledgeBase
from newsdesk.nel import candidates, initial_solution, link, refine
from newsdesk.pipeline import ModuleSpec, PipelineRegistry, PipelineRunner, PipelineTask
from newsdesk.query import QueryEngine, parse_query
from newsdesk.rules import rules_from_dict
from newsdesk.scheduler import Scheduler
from newsdesk.simhash import compute_simhash
from newsdesk.store import ArticleStore

from fixture_corpus import SCI_TECH, TESLA, build_corpus, oracle_ids, random_query_doc


def report(name: str, detail: str = "") -> None:
    print(f"ACCEPTANCE {name}: PASS {detail}".rstrip())


# ---------------------------------------------------------------------------
# 1. Dedup false-positive analogue
# ---------------------------------------------------------------------------


def test_dedup_false_positive_analogue():
    rng = random.Random(1234)

    def synth_article(i):
        words = [
            "".join(rng.choice("abcdefghijklmnopqrstuvwxyz0123456789") for _ in range(rng.randint(4, 9)))
            for _ in range(70)
        ]
        return f"Synthetic headline {i}", " ".join(words)

    articles = [synth_article(i) for i in range(10_000)]
    for title, body in articles[:100]:
        alnum = sum(ch.isalnum() for ch in title + body)
        assert alnum >= 300, "articles must carry at least 300 alphanumeric characters"

    started = time.monotonic()
    fingerprints = Counter(compute_simhash(t, b) for t, b in articles)
    elapsed = time.monotonic() - started

    colliding_pairs = sum(v * (v - 1) // 2 for v in fingerprints.values())
    assert colliding_pairs <= 2, f"{colliding_pairs} distinct-content collisions"
    assert elapsed <= 60.0, f"hashing took {elapsed:.1f}s"
    report("dedup-false-positives", f"(collisions={colliding_pairs}, {elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# 2. Dedup decision table
# ---------------------------------------------------------------------------


def test_dedup_decision_table(tmp_path):
    store = ArticleStore(tmp_path / "dedup.db")

    # 50% body guard: shorter re-extraction never clobbers the stored body
    aid = store.insert("outletA", "https://a.example/a1", "T", "x" * 100, None,
                       compute_simhash("T", "x" * 100))
    short = ExtractedPage("T", "y" * 40, None, [])
    decision = dedup_decide(short, "https://a.example/a1", "outletA", store)
    assert decision.kind == KEEP_EXISTING and decision.reason == "short_body_guard"
    boundary = ExtractedPage("T", "y" * 50, None, [])
    assert dedup_decide(boundary, "https://a.example/a1", "outletA", store).kind == KEEP_EXISTING
    bigger = ExtractedPage("T", "y" * 51, None, [])
    assert dedup_decide(bigger, "https://a.example/a1", "outletA", store).kind == "update_by_url"

    # identical content behind a new URL merges, keeping the shorter URL
    body = "The very same article body appears twice under different URLs."
    store.insert("outletA", "https://a.example/article-long-slug-variant", "Same", body, None,
                 compute_simhash("Same", body))
    decision, merged_id, _ = apply(
        ExtractedPage("Same", body, None, []), "https://a.example/a2", "outletA", store
    )
    assert decision.kind == MERGE_BY_SIMHASH
    assert store.get(merged_id).url == "https://a.example/a2"

    # fingerprints are never compared across outlets
    cross = dedup_decide(ExtractedPage("Same", body, None, []), "https://b.example/b1", "outletB", store)
    assert cross.kind == INSERT_NEW

    # whitespace/punctuation-only variants always merge (alphanumeric filtering)
    rng = random.Random(9)
    merged = 0
    for i in range(30):
        words = [
            "".join(rng.choice("abcdefghijklmnopqrstuvwxyz") for _ in range(rng.randint(4, 8)))
            for _ in range(60)
        ]
        title, text = f"Variant check {i}", " ".join(words)
        apply(ExtractedPage(title, text, None, []), f"https://c.example/v{i}", "outletC", store)
        mangled_title = title.replace(" ", "  ").upper() + "!!!"
        mangled = text.replace(" ", " , ", 7).replace(" ", "  ", 3) + "..."
        decision = dedup_decide(
            ExtractedPage(mangled_title, mangled, None, []), f"https://c.example/w{i}", "outletC", store
        )
        merged += decision.kind == MERGE_BY_SIMHASH
    assert merged == 30
    report("dedup-decision-table")


# ---------------------------------------------------------------------------
# 3. Crawl loop end to end (mock site: 1 homepage, 49 listings, 450 articles,
#    20 near-duplicate aliases)
# ---------------------------------------------------------------------------

N_ARTICLES = 450
N_LISTINGS = 49
N_ALIASES = 20
CRAWL_DELAY = 0.08


def _article_words(j):
    rng = random.Random(100_000 + j)
    return " ".join(
        "".join(rng.choice("abcdefghijklmnopqrstuvwxyz") for _ in range(rng.randint(4, 9)))
        for _ in range(70)
    )


def _page(title, body_text, links):
    anchors = "".join(f'<a href="{href}">{href}</a>' for href in links)
    paragraphs = "".join(f"<p>{chunk}</p>" for chunk in body_text)
    return (
        f"<html><head><title>{title}</title></head><body><h1>{title}</h1>"
        f"<article>{paragraphs}</article><nav>{anchors}</nav></body></html>"
    )


def build_mock_news_site(site):
    homepage_links = [f"/list/{k}" for k in range(1, N_LISTINGS + 1)]
    homepage_links += [f"/article/{j}-story" for j in range(1, 6)]
    homepage_links += [f"/article/{j}-updated" for j in range(16, 21)]
    site.add_page("/", _page("Mock News Daily", ["Naslovnica portala."], homepage_links))

    for k in range(1, N_LISTINGS + 1):
        if k <= 45:
            links = [f"/article/{j}-story" for j in range((k - 1) * 10 + 1, k * 10 + 1)]
        else:
            rng = random.Random(k)
            links = [f"/article/{rng.randint(1, N_ARTICLES)}-story" for _ in range(8)]
            lo = (k - 46) * 4 + 1
            links += [f"/article/{j}-updated" for j in range(lo, min(lo + 4, 16))]
        site.add_page(f"/list/{k}", _page(f"Rubrika {k}", ["Pregled rubrike."], links))

    for j in range(1, N_ARTICLES + 1):
        words = _article_words(j)
        chunks = [words[: len(words) // 2], words[len(words) // 2 :]]
        links = [f"/article/{j % N_ARTICLES + 1}-story", f"/article/{(j * 7) % N_ARTICLES + 1}-story"]
        site.add_page(f"/article/{j}-story", _page(f"Story {j} headline", chunks, links))

    for j in range(1, N_ALIASES + 1):
        words = _article_words(j)
        mangled = words.replace(" ", " ,  ", 9) + " !!!"
        chunks = [mangled[: len(mangled) // 2], mangled[len(mangled) // 2 :]]
        site.add_page(
            f"/article/{j}-updated",
            _page(f"Story {j} :: headline!", chunks, [f"/article/{j}-story", "/"]),
        )
    return 1 + N_LISTINGS + N_ARTICLES + N_ALIASES


@pytest.mark.timeout(300)
def test_crawl_loop_end_to_end(tmp_path, mock_site):
    total_urls = build_mock_news_site(mock_site)
    assert total_urls == 520

    db = tmp_path / "crawl.db"
    broker = Broker(db, lease_seconds=120)
    store = ArticleStore(db)
    scheduler = Scheduler(db, broker)
    scheduler.add_outlet(
        rules_from_dict(
            {
                "outlet_id": "mocknews",
                "seeds": [mock_site.url("/")],
                "article_patterns": [r"/article/\d+"],
                "ignore_patterns": [r"/tag/"],
            }
        )
    )
    downloader = Downloader(default_delay=CRAWL_DELAY, backoff=(0.1, 0.2, 0.4))
    service = CrawlService(broker, scheduler, downloader, store, runner=None, extractor_workers=3)

    started = time.monotonic()
    scheduler.seed("mocknews", recrawl=False)
    service.start()
    try:
        drained = service.run_until_idle(timeout=280)
    finally:
        service.stop()
        downloader.close()
    elapsed = time.monotonic() - started
    assert drained, "crawl did not finish inside the time budget"
    assert elapsed <= 300, f"crawl took {elapsed:.0f}s"

    # full discovery, each unique URL fetched exactly once
    paths = mock_site.page_paths_hit()
    fetch_counts = Counter(paths)
    assert len(fetch_counts) == total_urls, f"discovered {len(fetch_counts)} of {total_urls} URLs"
    refetched = {p: c for p, c in fetch_counts.items() if c != 1}
    assert not refetched, f"refetched: {refetched}"

    # politeness: consecutive request starts >= the configured delay apart
    times = sorted(t for _, t in mock_site.request_log)
    gaps = [b - a for a, b in zip(times, times[1:])]
    assert min(gaps) >= CRAWL_DELAY * 0.95, f"min gap {min(gaps) * 1000:.0f}ms"

    # aliases merged away: exactly the 450 unique articles remain
    assert store.count() == N_ARTICLES
    assert service.stats.merged == N_ALIASES
    for queue in ("downloader.mocknews", "extractor.in", "scheduler.in"):
        assert broker.queue_depth(queue).errored == 0
    report(
        "crawl-loop",
        f"(520 URLs once each, {N_ARTICLES} stored, min gap {min(gaps) * 1000:.0f}ms, {elapsed:.0f}s)",
    )


# ---------------------------------------------------------------------------
# 4. Queue broker under concurrency with kill-and-restart injection
# ---------------------------------------------------------------------------

BROKER_MESSAGES = 10_000


@pytest.mark.timeout(300)
def test_broker_concurrent_workload(tmp_path):
    broker = Broker(tmp_path / "broker.db", lease_seconds=0.4, max_attempts=60)
    broker.register_queue("work")
    rng = random.Random(77)

    per_producer = BROKER_MESSAGES // 4
    ack_log: list[int] = []
    error_ids: set[int] = set()
    log_lock = threading.Lock()
    producers_done = threading.Event()

    def producer(p):
        prng = random.Random(1000 + p)
        for i in range(per_producer):
            broker.enqueue("work", {"p": p, "i": i}, priority=prng.randint(0, 9))

    def consumer(c):
        crng = random.Random(2000 + c)
        idle_streak = 0
        while True:
            msg = broker.dequeue("work")
            if msg is None:
                idle_streak += 1
                if producers_done.is_set() and idle_streak > 30:
                    depth = broker.queue_depth("work")
                    if depth.ready == 0 and depth.claimed == 0:
                        return
                time.sleep(0.02)
                continue
            idle_streak = 0
            roll = crng.random()
            try:
                if roll < 0.05:
                    continue  # kill: claim dropped, lease expiry redelivers
                if roll < 0.07:
                    broker.fail(msg.id, msg.receipt, "injected failure", retry_after=0.05)
                    continue
                broker.ack(msg.id, msg.receipt)
            except ClaimError:
                continue  # our lease expired mid-flight; someone else owns it now
            with log_lock:
                ack_log.append(msg.id)

    producer_threads = [threading.Thread(target=producer, args=(p,)) for p in range(4)]
    consumer_threads = [threading.Thread(target=consumer, args=(c,)) for c in range(4)]
    for t in producer_threads + consumer_threads:
        t.start()
    for t in producer_threads:
        t.join()
    producers_done.set()
    for t in consumer_threads:
        t.join(timeout=240)
        assert not t.is_alive(), "consumer stuck"

    states = dict(
        broker._db.conn.execute("SELECT state, COUNT(*) FROM messages GROUP BY state").fetchall()
    )
    acked = states.get("acked", 0)
    failed = states.get("failed", 0)
    assert acked + failed == BROKER_MESSAGES, states
    counts = Counter(ack_log)
    assert all(v == 1 for v in counts.values()), "a message was acked twice"
    assert len(counts) == acked

    # ordering oracle: a fresh pre-enqueued workload drains in (priority desc, id asc)
    broker2 = Broker(tmp_path / "order.db")
    broker2.register_queue("work")
    for i in range(2000):
        broker2.enqueue("work", {"i": i}, priority=rng.randint(0, 9))
    expected = [
        r["id"]
        for r in broker2._db.conn.execute("SELECT id FROM messages ORDER BY priority DESC, id ASC")
    ]

    claims: list[tuple[int, int]] = []
    claims_lock = threading.Lock()

    def drainer():
        while True:
            msg = broker2.dequeue("work")
            if msg is None:
                return
            broker2.ack(msg.id, msg.receipt)
            with claims_lock:
                claims.append((msg.claim_seq, msg.id))

    drainers = [threading.Thread(target=drainer) for _ in range(4)]
    for t in drainers:
        t.start()
    for t in drainers:
        t.join()
    observed = [mid for _, mid in sorted(claims)]
    assert observed == expected, "claim order deviates from the (priority desc, id asc) oracle"
    report(
        "queue-broker",
        f"(acked={acked}, errored={failed}, redeliveries covered, order oracle over 2000 msgs)",
    )


# ---------------------------------------------------------------------------
# 5. Pipeline minimal recompute across all five modules
# ---------------------------------------------------------------------------


class CountingAnalyzer:
    def __init__(self, name):
        self.name = name
        self.calls_by_article = Counter()

    def analyze(self, article, upstream):
        self.calls_by_article[article.id] += 1
        return {"value": f"{self.name}:{article.title}"}


def test_pipeline_minimal_recompute(tmp_path):
    expected_sets = {
        "core": ["core", "ner", "nel", "low_quality", "topics"],
        "ner": ["ner", "nel"],
        "nel": ["nel"],
        "low_quality": ["low_quality"],
        "topics": ["topics"],
    }
    for module, expected in expected_sets.items():
        store = ArticleStore(tmp_path / f"pipe-{module}.db")
        broker = Broker(tmp_path / f"pipe-{module}.db")
        analyzers = {n: CountingAnalyzer(n) for n in expected_sets}
        registry = PipelineRegistry()
        registry.register(ModuleSpec("core", (), 1, analyzers["core"]))
        registry.register(ModuleSpec("ner", ("core",), 1, analyzers["ner"]))
        registry.register(ModuleSpec("nel", ("core", "ner"), 1, analyzers["nel"]))
        registry.register(ModuleSpec("low_quality", ("core",), 1, analyzers["low_quality"]))
        registry.register(ModuleSpec("topics", ("core",), 1, analyzers["topics"]))
        runner = PipelineRunner(store, registry, broker)

        ids = [
            store.insert("o", f"https://o.example/a{i}", f"T{i}", f"B{i}", None,
                         compute_simhash(f"T{i}", f"B{i}"))
            for i in range(3)
        ]
        for aid in ids:
            runner.process(PipelineTask(article_id=aid))
        for analyzer in analyzers.values():
            analyzer.calls_by_article.clear()

        assert registry.affected_set(module) == expected
        registry.bump(module)
        queued = runner.reindex(module, priority=1)
        assert queued == len(ids)
        while True:
            msg = broker.dequeue("pipeline.in")
            if msg is None:
                break
            runner.process(PipelineTask.from_payload(msg.payload))
            broker.ack(msg.id, msg.receipt)

        for name, analyzer in analyzers.items():
            for aid in ids:
                expected_calls = 1 if name in expected else 0
                assert analyzer.calls_by_article[aid] == expected_calls, (
                    f"bump({module}): {name} ran {analyzer.calls_by_article[aid]}x on {aid}"
                )
    report("pipeline-minimal-recompute", "(all 5 bump cases exact)")


# ---------------------------------------------------------------------------
# 6. NEL solver: cap, monotonicity, small-instance optimality
# ---------------------------------------------------------------------------


def _random_instance(rng, max_mentions=6, max_cands=3, dim=4):
    n = rng.randint(2, max_mentions)
    names = [f"m{i}" for i in range(n)]
    entities = []
    for i, name in enumerate(names):
        for c in range(rng.randint(0, max_cands)):
            entities.append(
                KbEntity(
                    f"Q{i}_{c}", "person", [name], rng.random(),
                    np.array([rng.gauss(0, 1) for _ in range(dim)]),
                )
            )
    if not entities:
        entities.append(KbEntity("Q0_0", "person", [names[0]], 0.5, np.zeros(dim)))
    return names, KnowledgeBase(entities)


def _crafted_instance(rng):
    """<=3 mentions x <=3 candidates with a coherent-cluster structure."""
    n = rng.randint(2, 3)
    names = [f"m{i}" for i in range(n)]
    cluster = np.array([1.0, 1.0, 0.0]) + rng.gauss(0, 0.05)
    entities = []
    for i, name in enumerate(names):
        k = rng.randint(1, 3)
        cluster_slot = rng.randrange(k)
        for c in range(k):
            if c == cluster_slot:
                vec = cluster + np.array([rng.gauss(0, 0.1) for _ in range(3)])
            else:
                vec = np.array([rng.gauss(0, 0.8) for _ in range(3)])
            entities.append(KbEntity(f"Q{i}_{c}", "person", [name], rng.random(), vec))
    return names, KnowledgeBase(entities)


def _brute_force(candidate_lists):
    linkable = [i for i, c in enumerate(candidate_lists) if c]
    best_val = None
    best = None
    for combo in itertools.product(*(range(len(candidate_lists[i])) for i in linkable)):
        vectors = [candidate_lists[i][idx].embedding for i, idx in zip(linkable, combo)]
        val = sum(float(a @ b) for a, b in itertools.combinations(vectors, 2))
        if best_val is None or val > best_val:
            best_val, best = val, combo
    return best_val, dict(zip(linkable, best or ()))


def _is_local_optimum(solution, candidate_lists):
    linkable = [i for i, c in enumerate(candidate_lists) if c]
    for i in linkable:
        context = sum(
            (candidate_lists[j][solution[j]].embedding for j in linkable if j != i),
            start=np.zeros_like(candidate_lists[i][0].embedding),
        )
        current = float(candidate_lists[i][solution[i]].embedding @ context)
        for idx, cand in enumerate(candidate_lists[i]):
            if float(cand.embedding @ context) > current + 1e-12:
                return False
    return True


def test_nel_solver_acceptance():
    rng = random.Random(4242)

    # (a) + (b): cap and monotone trace over 1,000 random instances
    for _ in range(1000):
        names, kb = _random_instance(rng)
        result = link([{"lemma_key": n} for n in names], kb)
        if not result:
            continue
        trace = result[0].score_trace
        assert len(trace) - 1 <= 5, "pass count exceeded the cap"
        assert all(b >= a - 1e-9 for a, b in zip(trace, trace[1:])), "trace decreased"

    # (c): crafted small instances vs exhaustive search
    crng = random.Random(90210)
    reached = 0
    stuck = 0
    for _ in range(100):
        names, kb = _crafted_instance(crng)
        mentions = [{"lemma_key": n} for n in names]
        candidate_lists = [candidates(m, kb) for m in mentions]
        best_val, _ = _brute_force(candidate_lists)
        result = link(mentions, kb)
        final_val = result[0].score_trace[-1]
        if abs(final_val - best_val) < 1e-9:
            reached += 1
        else:
            # must be a ascent-unreachable local optimum, not an implementation bug
            final_idx = []
            for i, assignment in enumerate(result):
                matching = [
                    idx for idx, c in enumerate(candidate_lists[i]) if c.kb_id == assignment.kb_id
                ]
                final_idx.append(matching[0] if matching else None)
            assert _is_local_optimum(final_idx, candidate_lists), (
                "solver stopped at a non-optimal, non-stationary point"
            )
            assert len(result[0].score_trace) - 1 < 5, "capped before convergence"
            stuck += 1
    assert reached >= 90, f"only {reached}/100 crafted instances reached the optimum"
    report("nel-solver", f"(cap+monotone on 1000, optimum {reached}/100, {stuck} provably stuck)")


# ---------------------------------------------------------------------------
# 7. Low-quality gate
# ---------------------------------------------------------------------------


def test_low_quality_gate():
    from newsdesk.analyzers import CoreAnalyzer, LowQualityAnalyzer
    from newsdesk.analyzers.lowquality import TOO_SHORT
    from types import SimpleNamespace

    class CountingModel:
        dim = 64

        def __init__(self):
            self.calls = 0

        def predict(self, vector):
            self.calls += 1
            return False

    core = CoreAnalyzer()

    def run(n_tokens, model):
        title_words = min(3, n_tokens - 1)
        art = SimpleNamespace(
            title=" ".join(f"tok{i}" for i in range(title_words)),
            body=" ".join(f"tok{i}" for i in range(n_tokens - title_words)),
        )
        core_data = core.analyze(art, {})
        assert core_data["token_count"] == n_tokens
        return LowQualityAnalyzer(model).analyze(art, {"core": core_data})

    model = CountingModel()
    data = run(49, model)
    assert data == {"hidden": True, "reason": TOO_SHORT}
    assert model.calls == 0, "classifier consulted under the gate"

    model = CountingModel()
    data = run(51, model)
    assert model.calls == 1, "classifier skipped above the gate"
    assert data["hidden"] is False

    rng = random.Random(55)
    for _ in range(100):
        n = rng.randint(2, 200)
        model = CountingModel()
        data = run(n, model)
        assert (data["reason"] == TOO_SHORT) == (n < 50)
        assert model.calls == (0 if n < 50 else 1)
    report("low-quality-gate", "(49/51 boundary + randomized 2..200)")


# ---------------------------------------------------------------------------
# 8. Query oracle equivalence over a 1,000-article corpus
# ---------------------------------------------------------------------------

FROM, TO = date(2020, 1, 1), date(2021, 12, 31)


@pytest.fixture(scope="module")
def acceptance_corpus(tmp_path_factory):
    store = ArticleStore(tmp_path_factory.mktemp("acc") / "corpus.db")
    docs, seeded = build_corpus(store, n=1000, seed=29)
    kb = KnowledgeBase(
        [
            KbEntity(TESLA, "person", ["nikola tesla"], 0.9, np.array([1.0, 0.0])),
            KbEntity("Q937", "person", ["albert einstein"], 0.8, np.array([0.0, 1.0])),
        ]
    )
    engine = QueryEngine(store, lambda p: p.lower().split(), kb=kb, cache_ttl=0)
    return store, docs, seeded, engine


@pytest.mark.timeout(240)
def test_query_oracle_equivalence(acceptance_corpus):
    store, docs, _, engine = acceptance_corpus
    rng = random.Random(616)
    for i in range(500):
        doc = random_query_doc(rng, max_depth=4)
        query = parse_query(doc)
        expected = oracle_ids(docs, doc, FROM, TO)
        line = engine.evaluate(query, FROM, TO)
        assert line.total == len(expected), f"query {i}: total mismatch"

        hits, total = engine.page_hits(query, FROM, TO, 1, 500)
        collected = {h.article_id for h in hits}
        page = 2
        while len(collected) < total:
            more, _ = engine.page_hits(query, FROM, TO, page, 500)
            collected.update(h.article_id for h in more)
            page += 1
        assert total == len(expected) and collected == expected, f"query {i}: hits mismatch"

    # Boolean laws on random pairs within a shared frame
    for _ in range(100):
        a_doc = random_query_doc(rng, max_depth=2)
        b_doc = random_query_doc(rng, max_depth=2)
        b_doc["outlets"] = a_doc["outlets"]
        b_doc["include_low_quality"] = a_doc["include_low_quality"]
        set_a = engine.matching_ids(parse_query(a_doc), FROM, TO).ids
        set_b = engine.matching_ids(parse_query(b_doc), FROM, TO).ids
        and_ids = engine.matching_ids(
            parse_query(dict(a_doc, node={"op": "and", "children": [a_doc["node"], b_doc["node"]]})),
            FROM, TO,
        ).ids
        or_ids = engine.matching_ids(
            parse_query(dict(a_doc, node={"op": "or", "children": [a_doc["node"], b_doc["node"]]})),
            FROM, TO,
        ).ids
        not_ids = engine.matching_ids(
            parse_query(dict(a_doc, node={"op": "not", "child": a_doc["node"]})), FROM, TO
        ).ids
        frame = engine._frame(parse_query(a_doc), FROM, TO).ids
        assert and_ids == set_a & set_b <= set_a
        assert or_ids == set_a | set_b >= set_a
        assert not_ids == frame - set_a
    report("query-oracle-equivalence", "(500 random ASTs + Boolean laws)")


# ---------------------------------------------------------------------------
# 9. Fig. 2 scenario: entity + phrase + topic, two overlaid newslines
# ---------------------------------------------------------------------------


def test_showcase_scenario(acceptance_corpus):
    store, docs, seeded, engine = acceptance_corpus

    showcase = parse_query(
        {
            "include_low_quality": True,
            "node": {
                "op": "and",
                "children": [{"entity": TESLA}, {"phrase": "magnet"}, {"topic": SCI_TECH}],
            },
        }
    )
    match = engine.matching_ids(showcase, FROM, TO)
    assert match.ids == set(seeded["fig2"]), "showcase query must return exactly the seeded set"

    tesla_line = engine.evaluate(
        parse_query(
            {
                "include_low_quality": True,
                "node": {"op": "and", "children": [{"entity": TESLA}, {"topic": SCI_TECH}]},
            }
        ),
        date(2021, 1, 1), date(2021, 1, 31), "week", name="Tesla",
    )
    einstein_line = engine.evaluate(
        parse_query(
            {
                "include_low_quality": True,
                "node": {"op": "and", "children": [{"entity": "Q937"}, {"topic": SCI_TECH}]},
            }
        ),
        date(2021, 1, 1), date(2021, 1, 31), "week", name="Einstein",
    )
    tesla_counts = {b: c for b, c in tesla_line.series if c}
    einstein_counts = {b: c for b, c in einstein_line.series if c}
    assert tesla_counts == {"2021-01-04": 3, "2021-01-11": 2, "2021-01-18": 1}
    assert einstein_counts == {"2021-01-04": 1, "2021-01-11": 1, "2021-01-18": 1}
    assert tesla_line.total == 6 and einstein_line.total == 3
    assert [b for b, _ in tesla_line.series] == [b for b, _ in einstein_line.series]
    report("showcase-scenario", "(exact seeded set; overlaid weekly newslines)")
