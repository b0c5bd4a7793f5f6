import json
import random
from types import SimpleNamespace

import pytest
from hypothesis import given, settings, strategies as st

from newsdesk.analyzers import (
    CoreAnalyzer,
    DependencyError,
    GazetteerNer,
    LowQualityAnalyzer,
    TOPIC_LABELS,
    TopicsAnalyzer,
)
from newsdesk.analyzers.base import composite_text
from newsdesk.analyzers.core import load_lemma_table, split_sentences
from newsdesk.analyzers.linear import (
    BinaryModel,
    MultiLabelModel,
    char_trigram_vector,
    train_binary,
    train_multilabel,
)
from newsdesk.analyzers.lowquality import CLASSIFIER, NONE, TOO_SHORT
from newsdesk.analyzers.ner import load_gazetteer


def article(title="", body=""):
    return SimpleNamespace(title=title, body=body)


def run_core(title="", body="", lemma_table=None):
    core = CoreAnalyzer(lemma_table=lemma_table)
    art = article(title, body)
    return art, core.analyze(art, {})


class CountingBinaryModel:
    """Stands in for the trained low-quality classifier; counts consultations."""

    def __init__(self, verdict=False, dim=64):
        self.verdict = verdict
        self.dim = dim
        self.calls = 0

    def predict(self, vector):
        self.calls += 1
        return self.verdict


# -- core ---------------------------------------------------------------------


def test_core_sentences_and_word_tokens():
    _, data = run_core(body="Ana vidi psa. Pas laje.")
    assert len(data["sentences"]) == 2
    words = [t["text"] for t in data["tokens"] if t["is_alpha"]]
    assert words == ["Ana", "vidi", "psa", "Pas", "laje"]
    assert data["token_count"] == 7  # five words plus two periods


def test_core_lemma_table_lookup():
    _, data = run_core(body="Ana vidi psa.", lemma_table={"psa": "pas"})
    lemmas = {t["text"]: t["lemma"] for t in data["tokens"]}
    assert lemmas["psa"] == "pas"
    assert lemmas["Ana"] == "ana"  # fallback: lowercased surface


def test_core_deterministic_byte_identical():
    _, first = run_core(title="Isti naslov", body="Isti tekst. Uvijek isti.")
    _, second = run_core(title="Isti naslov", body="Isti tekst. Uvijek isti.")
    assert json.dumps(first, sort_keys=True) == json.dumps(second, sort_keys=True)


def test_core_abbreviations_do_not_split():
    spans = split_sentences("Dr. Novak je stigao. Svi su ustali.")
    assert len(spans) == 2


def test_core_offsets_index_composite():
    art, data = run_core(title="Naslov teksta", body="Prva recenica. Druga, duza recenica!")
    text = composite_text(art)
    for tok in data["tokens"]:
        assert text[tok["start"] : tok["end"]] == tok["text"]
    starts = [t["start"] for t in data["tokens"]]
    assert starts == sorted(starts)
    for a, b in zip(data["tokens"], data["tokens"][1:]):
        assert a["end"] <= b["start"]


def test_core_title_body_lemma_split():
    _, data = run_core(title="Veliki naslov", body="Tijelo teksta ovdje.")
    assert data["title_lemmas"] == ["veliki", "naslov"]
    assert data["body_lemmas"] == ["tijelo", "teksta", "ovdje"]


def test_core_sentence_indices_monotone():
    _, data = run_core(title="Naslov", body="Jedan. Dva. Tri.")
    indices = [t["sentence_index"] for t in data["tokens"]]
    assert indices == sorted(indices)
    assert len(set(indices)) == len(data["sentences"])


def test_load_lemma_table(tmp_path):
    table_file = tmp_path / "lemmas.tsv"
    table_file.write_text("psa\tpas\npsu\tpas\n# comment\n", encoding="utf-8")
    table = load_lemma_table(table_file)
    assert table == {"psa": "pas", "psu": "pas"}


# -- ner ------------------------------------------------------------------------


def test_ner_gazetteer_match_spans_tokens():
    art, core_data = run_core(body="Izumitelj Nikola Tesla je rodjen u Smiljanu.")
    ner = GazetteerNer({"Nikola Tesla": "person"})
    data = ner.analyze(art, {"core": core_data})
    assert len(data["mentions"]) == 1
    mention = data["mentions"][0]
    assert mention["ner_type"] == "person"
    assert mention["surface"] == "Nikola Tesla"
    assert mention["lemma_key"] == "nikola tesla"
    text = composite_text(art)
    assert text[mention["start"] : mention["end"]] == mention["surface"]


def test_ner_longest_match_wins():
    art, core_data = run_core(body="They flew to New York City yesterday.")
    ner = GazetteerNer({"New York": "location", "New York City": "location"})
    data = ner.analyze(art, {"core": core_data})
    assert [m["surface"] for m in data["mentions"]] == ["New York City"]


def test_ner_empty_gazetteer():
    art, core_data = run_core(body="Nobody here.")
    assert GazetteerNer({}).analyze(art, {"core": core_data}) == {"mentions": []}


def test_ner_missing_core_features():
    with pytest.raises(DependencyError):
        GazetteerNer({}).analyze(article(body="x"), {})


def test_ner_offsets_align_to_token_boundaries():
    art, core_data = run_core(body="Sastali su se Ivan Horvat i Ana Anic u Zagrebu.")
    ner = GazetteerNer({"Ivan Horvat": "person", "Ana Anic": "person", "Zagrebu": "location"})
    data = ner.analyze(art, {"core": core_data})
    token_starts = {t["start"] for t in core_data["tokens"]}
    token_ends = {t["end"] for t in core_data["tokens"]}
    assert len(data["mentions"]) == 3
    for m in data["mentions"]:
        assert m["start"] in token_starts
        assert m["end"] in token_ends


def test_load_gazetteer(tmp_path):
    gaz = tmp_path / "gazetteer.tsv"
    gaz.write_text(
        "Nikola Tesla\tperson\tQ9036\nZagreb\tlocation\nBad Line\nX\tnottype\n", encoding="utf-8"
    )
    entries = load_gazetteer(gaz)
    assert entries[("nikola", "tesla")] == "person"
    assert entries[("zagreb",)] == "location"
    assert len(entries) == 2


@settings(max_examples=30)
@given(
    st.lists(st.from_regex(r"[a-z]{2,8}", fullmatch=True), min_size=3, max_size=30),
    st.integers(0, 2),
)
def test_ner_offset_integrity_property(words, insertions):
    name = "Nikola Tesla"
    rng = random.Random(insertions)
    for _ in range(insertions):
        words.insert(rng.randrange(len(words) + 1), name)
    art, core_data = run_core(body=" ".join(words))
    data = GazetteerNer({name: "person"}).analyze(art, {"core": core_data})
    text = composite_text(art)
    for m in data["mentions"]:
        assert text[m["start"] : m["end"]] == m["surface"]


# -- low quality ------------------------------------------------------------------


def words_article(n):
    """An article whose composite tokenizes to exactly n tokens."""
    assert n >= 2
    title_words = min(3, n - 1)
    return article(
        title=" ".join(f"tok{i}" for i in range(title_words)),
        body=" ".join(f"tok{i}" for i in range(n - title_words)),
    )


def run_lowq(n_tokens, model):
    art = words_article(n_tokens)
    core_data = CoreAnalyzer().analyze(art, {})
    assert core_data["token_count"] == n_tokens
    return LowQualityAnalyzer(model).analyze(art, {"core": core_data})


def test_49_tokens_hidden_without_classifier_call():
    model = CountingBinaryModel(verdict=False)
    data = run_lowq(49, model)
    assert data == {"hidden": True, "reason": TOO_SHORT}
    assert model.calls == 0


def test_51_tokens_routed_to_classifier():
    model = CountingBinaryModel(verdict=False)
    data = run_lowq(51, model)
    assert data == {"hidden": False, "reason": NONE}
    assert model.calls == 1


def test_exactly_50_tokens_goes_to_classifier():
    model = CountingBinaryModel(verdict=True)
    data = run_lowq(50, model)
    assert data == {"hidden": True, "reason": CLASSIFIER}
    assert model.calls == 1


def test_missing_model_is_dependency_error():
    with pytest.raises(DependencyError):
        run_lowq(60, None)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 200))
def test_token_gate_property(n):
    model = CountingBinaryModel(verdict=False)
    data = run_lowq(n, model)
    assert (data["reason"] == TOO_SHORT) == (n < 50)
    assert model.calls == (0 if n < 50 else 1)


def test_hidden_rate_report_on_constructed_corpus():
    """118 of 1000 articles under the token gate -> 11.8% hidden by default."""
    core = CoreAnalyzer()
    detector = LowQualityAnalyzer(CountingBinaryModel(verdict=False))
    hidden = 0
    for i in range(1000):
        art = words_article(20 if i < 118 else 80)
        data = detector.analyze(art, {"core": core.analyze(art, {})})
        hidden += data["hidden"]
    assert hidden / 1000 == pytest.approx(0.118)


def test_trained_lowquality_model_separates(tmp_path):
    rng = random.Random(3)
    junk = ["horoscope stars luck zodiac sign " * 12 for _ in range(30)]
    good = [
        " ".join(rng.choice(["parliament", "economy", "report", "minister", "law"]) for _ in range(60))
        for _ in range(30)
    ]
    model = train_binary(junk + good, [True] * 30 + [False] * 30)
    path = tmp_path / "lowq.json"
    model.save(path)
    loaded = BinaryModel.load(path)
    assert loaded.predict(char_trigram_vector("zodiac luck stars horoscope " * 10, loaded.dim))
    assert not loaded.predict(char_trigram_vector("minister presented the economy report law", loaded.dim))


# -- topics -----------------------------------------------------------------------

TOPIC_VOCAB = {
    "SPORT": ["utakmica", "gol", "liga", "trener", "igrac", "stadion", "football", "match"],
    "POLITICS": ["vlada", "sabor", "ministar", "izbori", "premijer", "stranka"],
    "SCIENCE AND TECHNOLOGY": ["znanost", "tehnologija", "istrazivanje", "laboratorij", "inovacija"],
    "HEALTH": ["bolnica", "lijecnik", "pacijent", "zdravlje", "terapija"],
}


def topic_corpus(n=120, seed=11):
    rng = random.Random(seed)
    texts, label_sets = [], []
    topics = list(TOPIC_VOCAB)
    for _ in range(n):
        assigned = rng.sample(topics, rng.randint(1, 2))
        words = []
        for topic in assigned:
            words += rng.choices(TOPIC_VOCAB[topic], k=25)
        rng.shuffle(words)
        texts.append(" ".join(words))
        label_sets.append(assigned)
    return texts, label_sets


def test_topics_trained_on_fixture_corpus_labels_football():
    texts, label_sets = topic_corpus()
    model = train_multilabel(texts, label_sets, list(TOPIC_VOCAB))
    analyzer = TopicsAnalyzer(model)
    art = article(title="Velika utakmica", body="Trener slavi gol, liga i stadion pun, football match.")
    core_data = CoreAnalyzer().analyze(art, {})
    data = analyzer.analyze(art, {"core": core_data})
    assert "SPORT" in data["labels"]
    assert set(data["labels"]) <= set(TOPIC_LABELS)


def test_topics_all_below_threshold_empty():
    model = MultiLabelModel(
        dim=64,
        labels=["SPORT", "HEALTH"],
        weights=__import__("numpy").zeros((2, 64)),
        bias=__import__("numpy").array([-5.0, -5.0]),
    )
    art = article(body="nothing relevant at all")
    core_data = CoreAnalyzer().analyze(art, {})
    assert TopicsAnalyzer(model).analyze(art, {"core": core_data}) == {"labels": []}


def test_topics_model_with_unknown_label_rejected():
    import numpy as np

    bad = MultiLabelModel(dim=8, labels=["NOT A TOPIC"], weights=np.zeros((1, 8)), bias=np.zeros(1))
    with pytest.raises(ValueError):
        TopicsAnalyzer(bad)


def test_topics_missing_model_dependency_error():
    art = article(body="text")
    core_data = CoreAnalyzer().analyze(art, {})
    with pytest.raises(DependencyError):
        TopicsAnalyzer(None).analyze(art, {"core": core_data})


def test_taxonomy_is_17_labels():
    assert len(TOPIC_LABELS) == 17
    assert TOPIC_LABELS[0] == "SPORT" and TOPIC_LABELS[-1] == "SOCIETY"


def test_multilabel_round_trip(tmp_path):
    texts, label_sets = topic_corpus(n=40)
    model = train_multilabel(texts, label_sets, list(TOPIC_VOCAB), dim=2048)
    path = tmp_path / "topics.json"
    model.save(path)
    loaded = MultiLabelModel.load(path)
    from newsdesk.analyzers.linear import word_vector

    probe = word_vector("utakmica gol liga", 2048)
    assert loaded.predict(probe) == model.predict(probe)
