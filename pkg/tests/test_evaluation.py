from pathlib import Path

import pytest

from relinduce.config import RunConfig
from relinduce.errors import DataError, LeakageError
from relinduce.evaluation import (
    RelationDataset,
    RelationResult,
    aggregate_results,
    carve_tuning,
    check_leakage,
    compute_metrics,
    evaluate_relation,
    load_dataset,
    split_relation,
    tuning_examples,
)
from relinduce.mining import WordPair, sentence_to_template
from relinduce.oracle.fixture import FixtureOracle, FixtureWorld
from relinduce.text import tokenize


def pairs(*hts):
    return tuple(WordPair(h, t) for h, t in hts)


def run_config(**overrides):
    base = dict(
        corpus=Path("unused"),
        dataset=Path("unused"),
        out=Path("unused"),
        fixture=Path("unused"),
        k=3,
        final_k=2,
        learning_rate=0.1,
        epochs=20,
        batch_size=16,
        seed=0,
    )
    base.update(overrides)
    return RunConfig(**base)


# -- splitting ---------------------------------------------------------------


@pytest.mark.parametrize(
    "n,n_test",
    [(1, 1), (2, 1), (4, 1), (5, 1), (10, 1), (14, 1), (15, 2), (25, 3), (30, 3)],
)
def test_split_sizes_round_half_up_with_floor_one(n, n_test):
    relation = pairs(*((f"h{i}", f"t{i}") for i in range(n)))
    train, test = split_relation(relation, rng_seed=0)
    assert len(test) == n_test
    assert len(train) == n - n_test


def test_split_partitions_without_overlap():
    relation = pairs(*((f"h{i}", f"t{i}") for i in range(20)))
    train, test = split_relation(relation, rng_seed=5)
    assert set(train) | set(test) == set(relation)
    assert not set(train) & set(test)
    assert split_relation(relation, rng_seed=5) == (train, test)


def test_split_depends_on_the_seed():
    relation = pairs(*((f"h{i}", f"t{i}") for i in range(30)))
    splits = {tuple(split_relation(relation, rng_seed=s)[1]) for s in range(8)}
    assert len(splits) > 1


def test_carve_tuning_takes_the_leading_tenth():
    train = list(pairs(*((f"h{i}", f"t{i}") for i in range(27))))
    rest, tune = carve_tuning(train)
    assert tune == train[:3]
    assert rest == train[3:]
    rest1, tune1 = carve_tuning(train[:1])
    assert (rest1, tune1) == ([], train[:1])


# -- metrics --------------------------------------------------------------------


def test_metrics_hand_case():
    m = compute_metrics(tp=3, fp=2, fn=1)
    assert m.precision == 0.6
    assert m.recall == 0.75
    assert m.f1 == 2 * 0.6 * 0.75 / (0.6 + 0.75)


def test_metrics_zero_conventions():
    assert compute_metrics(0, 0, 0) == compute_metrics(0, 0, 0)
    m = compute_metrics(0, 5, 0)
    assert (m.precision, m.recall, m.f1) == (0.0, 0.0, 0.0)
    assert compute_metrics(0, 0, 5).f1 == 0.0


def test_micro_average_sums_counts_before_dividing():
    a = RelationResult("a", "x", "ok", tp=1, fp=1, fn=0, tn=3)
    b = RelationResult("b", "x", "ok", tp=2, fp=0, fn=1, tn=4)
    skipped = RelationResult("c", "x", "unevaluable", notice="why", tp=99, fp=99)
    got = aggregate_results([a, b, skipped])
    assert (got["tp"], got["fp"], got["fn"], got["tn"]) == (3, 1, 1, 7)
    assert got["precision"] == 0.75
    assert got["recall"] == 0.75
    assert got["f1"] == 0.75
    assert got["relations_evaluated"] == 2
    assert got["relations_skipped"] == 1


def test_relation_result_json_shape():
    obj = RelationResult("cap", "semantic", "ok", lambda_threshold=1.5).to_json()
    assert obj["relation"] == "cap"
    assert obj["lambda"] == 1.5
    assert set(obj) == {
        "relation", "category", "status", "notice", "tp", "fp", "fn", "tn",
        "precision", "recall", "f1", "n_train", "n_test", "n_templates", "lambda",
    }


# -- leakage guard ------------------------------------------------------------------


def template_for(head, tail, text=None):
    text = text or f"{head} is linked to {tail} ."
    return sentence_to_template(tokenize(text), WordPair(head, tail))


def test_leakage_guard_accepts_training_provenance():
    t = template_for("paris", "france")
    check_leakage([t], [WordPair("paris", "france")], [WordPair("rome", "italy")])


def test_leakage_guard_rejects_test_provenance():
    t = template_for("rome", "italy")
    with pytest.raises(LeakageError):
        check_leakage([t], [WordPair("paris", "france")], [WordPair("rome", "italy")])


def test_leakage_guard_rejects_unknown_provenance():
    t = template_for("madrid", "spain")
    with pytest.raises(LeakageError):
        check_leakage([t], [WordPair("paris", "france")], [WordPair("rome", "italy")])


# -- tuning examples -------------------------------------------------------------------


def test_tuning_examples_from_one_pair_uses_the_swap():
    got = tuning_examples([WordPair("a", "b")], set(), rng_seed=0, cross_ratio=1.0)
    assert [(e.pair, e.label) for e in got] == [
        (WordPair("a", "b"), 1),
        (WordPair("b", "a"), 0),
    ]


def test_tuning_examples_refuse_degenerate_sets():
    assert tuning_examples([], set(), rng_seed=0, cross_ratio=1.0) is None
    # the swap is itself a positive of the relation, so nothing negative remains
    got = tuning_examples(
        [WordPair("a", "b")], {WordPair("b", "a")}, rng_seed=0, cross_ratio=1.0
    )
    assert got is None


def test_tuning_examples_filter_relation_positives():
    tune = [WordPair("h1", "t1"), WordPair("h2", "t2")]
    relation_positives = {WordPair("h1", "t2")}  # a cross candidate that must vanish
    got = tuning_examples(tune, relation_positives, rng_seed=0, cross_ratio=1.0)
    assert got is not None
    assert all(e.pair not in relation_positives for e in got)


# -- full protocol on a closed world ------------------------------------------------------


def synthetic_world(n=25):
    heads = tuple(f"h{i}" for i in range(n))
    tails = tuple(f"t{i}" for i in range(n))
    return FixtureWorld(
        facts=tuple(("m", h, t) for h, t in zip(heads, tails)),
        type_vocab={"m": (tuple(sorted(heads)), tuple(sorted(tails)))},
        patterns={"m": (("[HEAD]", "maps", "to", "[TAIL]", "."),)},
        noise_rate=0.0,
        seed=11,
    )


def synthetic_dataset(n=25):
    m = pairs(*((f"h{i}", f"t{i}") for i in range(n)))
    other = pairs(*((f"a{i}", f"b{i}") for i in range(5)))
    return RelationDataset({"m": m, "other": other}, {"m": "semantic"})


def synthetic_corpus(n=25):
    text = " ".join(f"h{i} maps to t{i}." for i in range(n))
    return [("facts.txt", text)]


def test_protocol_with_max_aggregation():
    oracle = FixtureOracle(synthetic_world())
    result = evaluate_relation(
        synthetic_dataset(), "m", synthetic_corpus(), oracle, run_config()
    )
    assert result.status == "ok"
    assert result.lambda_threshold is None
    assert result.tp + result.fn == result.n_test == 3
    assert result.fp + result.tn == 5 * result.n_test  # full five-to-one recipe
    assert result.n_train == 22
    assert result.n_templates == 1  # every sentence dedups to one surface
    assert result.f1 == 1.0  # support feature makes the world separable


def test_protocol_with_sum_aggregation_tunes_lambda():
    oracle = FixtureOracle(synthetic_world())
    result = evaluate_relation(
        synthetic_dataset(), "m", synthetic_corpus(), oracle,
        run_config(aggregation="sum"),
    )
    assert result.status == "ok"
    assert result.lambda_threshold is not None
    assert result.n_train == 20  # two pairs went to the tuning carve
    assert result.f1 == 1.0


def test_protocol_downgrades_when_training_half_vanishes():
    # 3 pairs: split leaves 2, the tuning carve leaves 1, corruption needs 2
    world = synthetic_world(3)
    oracle = FixtureOracle(world)
    result = evaluate_relation(
        synthetic_dataset(3), "m", synthetic_corpus(3), oracle,
        run_config(aggregation="sum"),
    )
    assert result.status == "unevaluable"
    assert "at least 2" in result.notice


def test_protocol_downgrades_without_cooccurrences():
    oracle = FixtureOracle(synthetic_world())
    result = evaluate_relation(
        synthetic_dataset(), "m", [("empty.txt", "nothing relevant here.")],
        oracle, run_config(),
    )
    assert result.status == "unevaluable"
    assert "no templates" in result.notice


def test_protocol_rejects_unknown_or_tiny_relations():
    oracle = FixtureOracle(synthetic_world())
    with pytest.raises(DataError):
        evaluate_relation(synthetic_dataset(), "nope", synthetic_corpus(), oracle, run_config())
    tiny = RelationDataset({"m": pairs(("h0", "t0"))}, {})
    with pytest.raises(DataError):
        evaluate_relation(tiny, "m", synthetic_corpus(), oracle, run_config())


# -- dataset loading -------------------------------------------------------------------------


def test_google_format(tmp_path):
    path = tmp_path / "analogies.txt"
    path.write_text(
        ": capital-common\n"
        "Athens Greece Baghdad Iraq\n"
        "Paris France\n"
        ": currency\n"
        "japan yen peru sol\n",
        encoding="utf-8",
    )
    ds = load_dataset(path, "google")
    assert ds.relations["capital-common"] == pairs(
        ("athens", "greece"), ("baghdad", "iraq"), ("paris", "france")
    )
    assert ds.relations["currency"] == pairs(("japan", "yen"), ("peru", "sol"))


def test_google_format_rejects_header_errors(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("athens greece baghdad iraq\n", encoding="utf-8")
    with pytest.raises(DataError):
        load_dataset(path, "google")
    path.write_text(": rel\none two three\n", encoding="utf-8")
    with pytest.raises(DataError):
        load_dataset(path, "google")


def test_bats_format_expands_answer_alternatives(tmp_path):
    d = tmp_path / "bats"
    d.mkdir()
    (d / "E01-thing.txt").write_text(
        "harm\tharmful/harmless\nhope\thopeful\n", encoding="utf-8"
    )
    (d / "E02-other.txt").write_text("cat\tcats\ndog\tdogs\n", encoding="utf-8")
    ds = load_dataset(d, "bats")
    assert ds.relations["E01-thing"] == pairs(
        ("harm", "harmful"), ("harm", "harmless"), ("hope", "hopeful")
    )
    assert set(ds.relations) == {"E01-thing", "E02-other"}


def test_tsv_format_and_field_count(tmp_path):
    path = tmp_path / "rel.tsv"
    path.write_text("cap\tParis\tFrance\ncap\trome\titaly\n", encoding="utf-8")
    ds = load_dataset(path, "tsv")
    assert ds.relations["cap"] == pairs(("paris", "france"), ("rome", "italy"))
    path.write_text("cap\tparis\n", encoding="utf-8")
    with pytest.raises(DataError):
        load_dataset(path, "tsv")


def test_delimited_format_sniffs_commas_and_skips_header(tmp_path):
    path = tmp_path / "rel.csv"
    path.write_text(
        "relation,head,tail\nhyper,animal,dog\nhyper,animal,cat\n", encoding="utf-8"
    )
    ds = load_dataset(path, "diffvec")
    assert ds.relations["hyper"] == pairs(("animal", "dog"), ("animal", "cat"))


def test_loader_normalizes_and_drops_degenerates(tmp_path):
    path = tmp_path / "rel.tsv"
    path.write_text(
        "cap\tParis\tFrance\n"
        "cap\tparis\tfrance\n"  # duplicate after lowering
        "cap\tNew York\tUSA\n"  # multi-token head
        "cap\tsame\tsame\n",  # reflexive
        encoding="utf-8",
    )
    ds = load_dataset(path, "tsv")
    assert ds.relations["cap"] == pairs(("paris", "france"))


def test_loader_rejects_unusable_relations(tmp_path):
    path = tmp_path / "rel.tsv"
    path.write_text("cap\tNew York\tUSA\n", encoding="utf-8")
    with pytest.raises(DataError):
        load_dataset(path, "tsv")
    empty = tmp_path / "empty.tsv"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(DataError):
        load_dataset(empty, "tsv")
    with pytest.raises(DataError):
        load_dataset(path, "mystery")


def test_categories_side_file(tmp_path):
    data = tmp_path / "rel.tsv"
    data.write_text("cap\tparis\tfrance\ncur\tjapan\tyen\n", encoding="utf-8")
    cats = tmp_path / "cats.tsv"
    cats.write_text(
        "# relation categories\ncap\tencyclopedic\ncur\tweird-but-kept\n",
        encoding="utf-8",
    )
    ds = load_dataset(data, "tsv", categories_path=cats)
    assert ds.category("cap") == "encyclopedic"
    assert ds.category("cur") == "weird-but-kept"
    assert ds.category("unknown") == "uncategorized"


def test_categories_file_must_be_two_columns(tmp_path):
    data = tmp_path / "rel.tsv"
    data.write_text("cap\tparis\tfrance\n", encoding="utf-8")
    cats = tmp_path / "cats.tsv"
    cats.write_text("cap encyclopedic\n", encoding="utf-8")  # space, not tab
    with pytest.raises(DataError):
        load_dataset(data, "tsv", categories_path=cats)
