"""Synthetic benchmark generator: world/corpus/dataset consistency and stability."""
import hashlib
from pathlib import Path

import pytest

from relinduce.config import RunConfig, parse_config_file
from relinduce.evaluation import load_dataset
from relinduce.oracle.fixture import FixtureWorld
from relinduce.text import HEAD_MARKER, TAIL_MARKER, tokenize
from relinduce.worldgen import (
    DEMO,
    HARD,
    PATTERN_TEXT,
    RELATION_PAIRS,
    SCENARIOS,
    TRAP_RELATION,
    build,
    main,
    write_bundle,
)


def test_scenario_registry():
    assert set(SCENARIOS) == {"demo", "hard"}
    assert SCENARIOS["demo"] is DEMO
    assert DEMO.noise_rate == 0.0
    assert DEMO.trap_shapes == 0
    assert HARD.noise_rate == 0.3
    assert HARD.trap_shapes == 200
    # same seed on purpose: hard is demo plus traps and noise, not a reshuffle
    assert DEMO.seed == HARD.seed == 7


def test_demo_world_facts_match_pair_tables():
    bundle = build(DEMO)
    expected = {
        (rel, h, t) for rel, pairs in RELATION_PAIRS.items() for h, t in pairs
    }
    assert set(bundle.world.facts) == expected
    assert len(bundle.world.facts) == 90


def test_demo_type_vocab_is_sorted_unique_sides():
    bundle = build(DEMO)
    for rel, pairs in RELATION_PAIRS.items():
        heads, tails = bundle.world.type_vocab[rel]
        assert heads == tuple(sorted({h for h, _ in pairs}))
        assert tails == tuple(sorted({t for _, t in pairs}))


def test_demo_doc_shapes():
    bundle = build(DEMO)
    counts = {name: text.count("\n") for name, text in bundle.docs.items()}
    # 30 pairs x 4 patterns per relation; misc = 3 junk shapes x 3 relations x 2
    # fills + 20 noise sentences
    assert counts == {
        "capital_of.txt": 120,
        "currency_of.txt": 120,
        "language_of.txt": 120,
        "misc.txt": 38,
    }
    first = bundle.docs["capital_of.txt"].splitlines()[0]
    assert first == "paris is the capital city of france ."


def test_relation_docs_are_pattern_fills():
    bundle = build(DEMO)
    for rel, pairs in RELATION_PAIRS.items():
        shapes = {tuple(text.split()) for text in PATTERN_TEXT[rel]}
        lines = bundle.docs[f"{rel}.txt"].splitlines()
        assert len(lines) == len(pairs) * DEMO.patterns_per_fact
        for i, line in enumerate(lines):
            head, tail = pairs[i // DEMO.patterns_per_fact]
            tokens = tuple(
                HEAD_MARKER if t == head else TAIL_MARKER if t == tail else t
                for t in line.split()
            )
            assert tokens in shapes, line
    # consecutive pattern offsets per fact, so the four fills are all distinct
    cap = bundle.docs["capital_of.txt"].splitlines()
    for start in range(0, len(cap), DEMO.patterns_per_fact):
        group = cap[start : start + DEMO.patterns_per_fact]
        assert len(set(group)) == DEMO.patterns_per_fact


def test_hard_trap_relation_covers_all_ordered_pairs():
    bundle = build(HARD)
    real_words = {
        w
        for pairs in RELATION_PAIRS.values()
        for pair in pairs
        for w in pair
    }
    trap_facts = {(h, t) for rel, h, t in bundle.world.facts if rel == TRAP_RELATION}
    n = len(real_words)
    assert n == 113
    assert len(trap_facts) == n * (n - 1)
    assert trap_facts == {(a, b) for a in real_words for b in real_words if a != b}
    heads, tails = bundle.world.type_vocab[TRAP_RELATION]
    assert heads == tails == tuple(sorted(real_words))
    assert len(bundle.world.patterns[TRAP_RELATION]) == HARD.trap_shapes
    assert len(bundle.world.facts) == 90 + n * (n - 1)


def test_trap_shapes_are_wellformed_and_distinct():
    bundle = build(HARD)
    shapes = bundle.world.patterns[TRAP_RELATION]
    assert len(set(shapes)) == len(shapes)
    real_words = {
        w for pairs in RELATION_PAIRS.values() for pair in pairs for w in pair
    }
    for shape in shapes:
        assert shape.count(HEAD_MARKER) == 1
        assert shape.count(TAIL_MARKER) == 1
        assert shape[-1] == "."
        fillers = [t for t in shape[:-1] if t not in (HEAD_MARKER, TAIL_MARKER)]
        assert fillers, shape  # at least one word between the slots
        assert not set(fillers) & real_words


def test_hard_misc_doc_exercises_every_trap_shape():
    bundle = build(HARD)
    lines = bundle.docs["misc.txt"].splitlines()
    # 200 trap shapes x 3 relations x 2 fills + 40 pure-noise sentences
    assert len(lines) == 1240
    assert lines[0] == "rene london tibu dizu england nozeve dunate ."


def test_noise_sentences_use_nonce_vocabulary_only():
    bundle = build(DEMO)
    real_words = {
        w for pairs in RELATION_PAIRS.values() for pair in pairs for w in pair
    }
    noise = bundle.docs["misc.txt"].splitlines()[-DEMO.noise_sentences :]
    for line in noise:
        tokens = tokenize(line)
        assert tokens[-1] == "."
        assert not set(tokens[:-1]) & real_words


def test_dataset_mirrors_pair_tables():
    bundle = build(DEMO)
    assert set(bundle.dataset.relations) == set(RELATION_PAIRS)
    for rel, pairs in RELATION_PAIRS.items():
        got = [(p.head, p.tail) for p in bundle.dataset.relations[rel]]
        assert got == list(dict.fromkeys(pairs))
    assert bundle.dataset.categories == {
        "capital_of": "encyclopedic",
        "currency_of": "attribute",
        "language_of": "attribute",
    }


def test_build_is_deterministic():
    assert build(DEMO) == build(DEMO)
    assert build(HARD) == build(HARD)
    assert build(DEMO) != build(HARD)


def _digest_tree(root: Path) -> dict[str, str]:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_write_bundle_is_byte_stable(tmp_path):
    first = write_bundle(build(DEMO), tmp_path / "a")
    second = write_bundle(build(DEMO), tmp_path / "b")
    da, db = _digest_tree(first), _digest_tree(second)
    assert set(da) == {
        "categories.tsv",
        "corpus/capital_of.txt",
        "corpus/currency_of.txt",
        "corpus/language_of.txt",
        "corpus/misc.txt",
        "dataset.tsv",
        "run.conf",
        "world.json",
    }
    assert da == db


def test_bundle_config_parses_and_validates(tmp_path):
    root = write_bundle(build(DEMO), tmp_path)
    config = RunConfig(**parse_config_file(root / "run.conf"))
    config.validate()
    assert config.learning_rate == 0.1
    assert config.epochs == 8
    assert config.k == 10
    assert config.final_k == 10
    assert config.aggregation == "max"
    assert config.seed == 7
    # relative paths resolve against the bundle, wherever it lives
    assert config.corpus == root / "corpus"
    assert config.fixture == root / "world.json"
    assert config.out == root / "out"


def test_bundle_dataset_loads(tmp_path):
    root = write_bundle(build(DEMO), tmp_path)
    dataset = load_dataset(
        root / "dataset.tsv", "tsv", categories_path=root / "categories.tsv"
    )
    bundle = build(DEMO)
    assert dataset.relations == bundle.dataset.relations
    assert dataset.categories == bundle.dataset.categories


def test_bundle_world_loads(tmp_path):
    root = write_bundle(build(DEMO), tmp_path)
    assert FixtureWorld.load(root / "world.json") == build(DEMO).world


def test_main_writes_bundle(tmp_path, capsys):
    out = tmp_path / "bundle"
    assert main([str(out), "--scenario", "demo"]) == 0
    assert (out / "run.conf").is_file()
    assert "demo" in capsys.readouterr().out
    with pytest.raises(SystemExit):
        main([str(tmp_path / "x"), "--scenario", "nope"])
