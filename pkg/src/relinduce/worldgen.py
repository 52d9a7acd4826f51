"""Synthetic benchmark generator: a closed fact world plus a matching corpus.

Builds a small geography world (capitals, currencies, languages), writes a
corpus that expresses its facts through fixed sentence patterns, and emits
the pair dataset with a category sidecar. The hard scenario additionally
registers trap patterns under a broad co-occurrence relation whose facts
cover every word pair, so templates mined from them look plausible for any
input; an unfiltered model inherits them, a filtered one does not. Noise
sentences and nonce vocabulary exercise the miner's skip paths.

Everything is a pure function of the scenario, so generated bundles are
byte-stable across runs.
"""
from __future__ import annotations

import argparse
import random
from dataclasses import dataclass
from pathlib import Path

from .evaluation import RelationDataset
from .mining import WordPair
from .oracle.fixture import FixtureWorld
from .text import HEAD_MARKER, TAIL_MARKER

CAPITALS = [
    ("paris", "france"), ("rome", "italy"), ("berlin", "germany"),
    ("madrid", "spain"), ("lisbon", "portugal"), ("london", "england"),
    ("dublin", "ireland"), ("vienna", "austria"), ("athens", "greece"),
    ("oslo", "norway"), ("stockholm", "sweden"), ("helsinki", "finland"),
    ("copenhagen", "denmark"), ("warsaw", "poland"), ("prague", "czechia"),
    ("budapest", "hungary"), ("bucharest", "romania"), ("sofia", "bulgaria"),
    ("moscow", "russia"), ("kyiv", "ukraine"), ("ankara", "turkey"),
    ("cairo", "egypt"), ("tokyo", "japan"), ("beijing", "china"),
    ("seoul", "korea"), ("delhi", "india"), ("ottawa", "canada"),
    ("canberra", "australia"), ("brasilia", "brazil"), ("nairobi", "kenya"),
]

CURRENCIES = [
    ("france", "franc"), ("italy", "lira"), ("germany", "mark"),
    ("spain", "peseta"), ("portugal", "escudo"), ("england", "sterling"),
    ("ireland", "punt"), ("austria", "schilling"), ("greece", "drachma"),
    ("norway", "krone"), ("sweden", "krona"), ("finland", "markka"),
    ("denmark", "krone"), ("poland", "zloty"), ("czechia", "koruna"),
    ("hungary", "forint"), ("romania", "leu"), ("bulgaria", "lev"),
    ("russia", "ruble"), ("ukraine", "hryvnia"), ("turkey", "lira"),
    ("egypt", "pound"), ("japan", "yen"), ("china", "yuan"),
    ("korea", "won"), ("india", "rupee"), ("canada", "dollar"),
    ("australia", "dollar"), ("brazil", "real"), ("kenya", "shilling"),
]

LANGUAGES = [
    ("france", "french"), ("italy", "italian"), ("germany", "german"),
    ("spain", "spanish"), ("portugal", "portuguese"), ("england", "english"),
    ("ireland", "irish"), ("austria", "german"), ("greece", "greek"),
    ("norway", "norwegian"), ("sweden", "swedish"), ("finland", "finnish"),
    ("denmark", "danish"), ("poland", "polish"), ("czechia", "czech"),
    ("hungary", "hungarian"), ("romania", "romanian"), ("bulgaria", "bulgarian"),
    ("russia", "russian"), ("ukraine", "ukrainian"), ("turkey", "turkish"),
    ("egypt", "arabic"), ("japan", "japanese"), ("china", "mandarin"),
    ("korea", "korean"), ("india", "hindi"), ("canada", "english"),
    ("australia", "english"), ("brazil", "portuguese"), ("kenya", "swahili"),
]

RELATION_PAIRS = {
    "capital_of": CAPITALS,
    "currency_of": CURRENCIES,
    "language_of": LANGUAGES,
}

RELATION_CATEGORIES = {
    "capital_of": "encyclopedic",
    "currency_of": "attribute",
    "language_of": "attribute",
}

TRAP_RELATION = "near"

PATTERN_TEXT = {
    "capital_of": [
        "[HEAD] is the capital of [TAIL] .",
        "the capital of [TAIL] is [HEAD] .",
        "[HEAD] is the capital city of [TAIL] .",
        "[HEAD] serves as the capital of [TAIL] .",
        "[TAIL] moved its capital to [HEAD] .",
        "the government of [TAIL] sits in [HEAD] .",
        "[HEAD] remains the seat of government of [TAIL] .",
        "[HEAD] has been the capital of [TAIL] for centuries .",
        "the parliament of [TAIL] meets in [HEAD] .",
        "[TAIL] declared [HEAD] its capital .",
        "[HEAD] , the capital of [TAIL] , draws many visitors .",
        "travelers entering [TAIL] usually land in [HEAD] .",
    ],
    "currency_of": [
        "the currency of [HEAD] is the [TAIL] .",
        "the [TAIL] is the currency of [HEAD] .",
        "[HEAD] uses the [TAIL] as its currency .",
        "prices in [HEAD] are quoted in [TAIL] .",
        "the official currency of [HEAD] is the [TAIL] .",
        "[HEAD] adopted the [TAIL] as legal tender .",
        "shops in [HEAD] accept only the [TAIL] .",
        "the central bank of [HEAD] issues the [TAIL] .",
        "[HEAD] pegged the [TAIL] to gold .",
        "salaries in [HEAD] are paid in [TAIL] .",
        "the [TAIL] circulates throughout [HEAD] .",
        "[HEAD] prints the [TAIL] at its mint .",
    ],
    "language_of": [
        "the official language of [HEAD] is [TAIL] .",
        "[TAIL] is spoken in [HEAD] .",
        "people in [HEAD] speak [TAIL] .",
        "[HEAD] lists [TAIL] as its official language .",
        "most residents of [HEAD] speak [TAIL] at home .",
        "schools in [HEAD] teach in [TAIL] .",
        "[TAIL] is the national language of [HEAD] .",
        "newspapers in [HEAD] are printed in [TAIL] .",
        "the constitution of [HEAD] is written in [TAIL] .",
        "[HEAD] conducts its courts in [TAIL] .",
        "broadcasts in [HEAD] are mostly in [TAIL] .",
        "children in [HEAD] grow up speaking [TAIL] .",
    ],
}

_SYLLABLES = [
    "ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du",
    "ka", "ke", "ki", "ko", "ku", "la", "le", "li", "lo", "lu",
    "ma", "me", "mi", "mo", "mu", "na", "ne", "ni", "no", "nu",
    "ra", "re", "ri", "ro", "ru", "sa", "se", "si", "so", "su",
    "ta", "te", "ti", "to", "tu", "va", "ve", "vi", "vo", "vu",
    "za", "ze", "zi", "zo", "zu",
]


@dataclass(frozen=True)
class Scenario:
    name: str
    noise_rate: float
    trap_shapes: int  # registered under the trap relation; fire for any pair
    junk_shapes: int  # unregistered filler shapes; never fire
    noise_sentences: int
    patterns_per_fact: int
    seed: int


DEMO = Scenario(
    name="demo", noise_rate=0.0, trap_shapes=0, junk_shapes=3,
    noise_sentences=20, patterns_per_fact=4, seed=7,
)
HARD = Scenario(
    name="hard", noise_rate=0.3, trap_shapes=200, junk_shapes=0,
    noise_sentences=40, patterns_per_fact=4, seed=7,
)
SCENARIOS = {s.name: s for s in (DEMO, HARD)}


@dataclass(frozen=True)
class Bundle:
    scenario: Scenario
    world: FixtureWorld
    docs: dict[str, str]  # doc name -> text, one sentence per line
    dataset: RelationDataset


def _nonce_vocab(count: int, rng: random.Random, taken: set[str]) -> list[str]:
    words: list[str] = []
    seen = set(taken)
    while len(words) < count:
        word = "".join(rng.choice(_SYLLABLES) for _ in range(rng.randint(2, 3)))
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


def _shapes(count: int, junk: list[str], rng: random.Random) -> list[tuple[str, ...]]:
    """Distinct two-slot token shapes padded with nonce words."""
    shapes: list[tuple[str, ...]] = []
    seen: set[tuple[str, ...]] = set()
    while len(shapes) < count:
        first, second = (
            (HEAD_MARKER, TAIL_MARKER) if rng.random() < 0.5
            else (TAIL_MARKER, HEAD_MARKER)
        )
        tokens = [rng.choice(junk) for _ in range(rng.randint(0, 2))]
        tokens.append(first)
        tokens.extend(rng.choice(junk) for _ in range(rng.randint(1, 3)))
        tokens.append(second)
        tokens.extend(rng.choice(junk) for _ in range(rng.randint(0, 2)))
        tokens.append(".")
        shape = tuple(tokens)
        if shape not in seen:
            seen.add(shape)
            shapes.append(shape)
    return shapes


def _fill(shape: tuple[str, ...], head: str, tail: str) -> str:
    return " ".join(
        head if t == HEAD_MARKER else tail if t == TAIL_MARKER else t for t in shape
    )


def build(scenario: Scenario) -> Bundle:
    rng = random.Random(scenario.seed)
    patterns: dict[str, tuple[tuple[str, ...], ...]] = {
        rel: tuple(tuple(text.split()) for text in texts)
        for rel, texts in PATTERN_TEXT.items()
    }

    facts = [
        (rel, head, tail)
        for rel, pairs in RELATION_PAIRS.items()
        for head, tail in pairs
    ]
    type_vocab = {
        rel: (
            tuple(sorted({h for h, _ in pairs})),
            tuple(sorted({t for _, t in pairs})),
        )
        for rel, pairs in RELATION_PAIRS.items()
    }

    real_words = {w for vocabs in type_vocab.values() for side in vocabs for w in side}
    junk = _nonce_vocab(80, rng, real_words)

    if scenario.trap_shapes:
        # The trap relation holds every ordered word pair, so a trap pattern
        # instantiated with anything at all reads as a known fact.
        all_words = sorted(real_words)
        facts.extend(
            (TRAP_RELATION, a, b) for a in all_words for b in all_words if a != b
        )
        type_vocab[TRAP_RELATION] = (tuple(all_words), tuple(all_words))
        trap_shapes = _shapes(scenario.trap_shapes, junk, rng)
        patterns[TRAP_RELATION] = tuple(trap_shapes)
    else:
        trap_shapes = []
    junk_shapes = _shapes(scenario.junk_shapes, junk, rng)

    world = FixtureWorld(
        facts=tuple(facts),
        type_vocab=type_vocab,
        patterns=patterns,
        noise_rate=scenario.noise_rate,
        seed=scenario.seed,
    )

    docs: dict[str, str] = {}
    for rel, pairs in RELATION_PAIRS.items():
        lines = []
        rel_patterns = patterns[rel]
        for head, tail in pairs:
            start = rng.randrange(len(rel_patterns))
            for offset in range(scenario.patterns_per_fact):
                pattern = rel_patterns[(start + offset) % len(rel_patterns)]
                lines.append(_fill(pattern, head, tail))
        docs[f"{rel}.txt"] = "\n".join(lines) + "\n"

    misc: list[str] = []
    for shape in trap_shapes + junk_shapes:
        for pairs in RELATION_PAIRS.values():
            for _ in range(2):
                head, tail = pairs[rng.randrange(len(pairs))]
                misc.append(_fill(shape, head, tail))
    for _ in range(scenario.noise_sentences):
        length = rng.randint(3, 8)
        misc.append(" ".join(rng.choice(junk) for _ in range(length)) + " .")
    if misc:
        docs["misc.txt"] = "\n".join(misc) + "\n"

    dataset = RelationDataset(
        relations={
            rel: tuple(dict.fromkeys(WordPair(h, t) for h, t in pairs))
            for rel, pairs in RELATION_PAIRS.items()
        },
        categories=dict(RELATION_CATEGORIES),
    )
    return Bundle(scenario=scenario, world=world, docs=docs, dataset=dataset)


def write_bundle(bundle: Bundle, out_dir: str | Path) -> Path:
    """Write world.json, corpus/, dataset.tsv, categories.tsv, run.conf."""
    out_dir = Path(out_dir)
    corpus_dir = out_dir / "corpus"
    corpus_dir.mkdir(parents=True, exist_ok=True)
    bundle.world.save(out_dir / "world.json")
    for name, text in bundle.docs.items():
        (corpus_dir / name).write_text(text, encoding="utf-8")

    rows = [
        f"{rel}\t{p.head}\t{p.tail}"
        for rel, pairs in bundle.dataset.relations.items()
        for p in pairs
    ]
    (out_dir / "dataset.tsv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    cat_rows = [f"{rel}\t{cat}" for rel, cat in bundle.dataset.categories.items()]
    (out_dir / "categories.tsv").write_text("\n".join(cat_rows) + "\n", encoding="utf-8")

    conf = "\n".join(
        [
            "# generated benchmark configuration",
            "corpus = corpus",
            "dataset = dataset.tsv",
            "dataset_format = tsv",
            "categories = categories.tsv",
            "fixture = world.json",
            "out = out",
            "k = 10",
            "final_k = 10",
            "aggregation = max",
            f"seed = {bundle.scenario.seed}",
            "# a 33-parameter linear head wants a far larger step than the",
            "# cautious library default",
            "learning_rate = 0.1",
            "epochs = 8",
        ]
    )
    (out_dir / "run.conf").write_text(conf + "\n", encoding="utf-8")
    return out_dir


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="python -m relinduce.worldgen",
        description="generate a synthetic benchmark bundle",
    )
    parser.add_argument("out_dir")
    parser.add_argument("--scenario", choices=sorted(SCENARIOS), default="demo")
    args = parser.parse_args(argv)
    bundle = build(SCENARIOS[args.scenario])
    write_bundle(bundle, args.out_dir)
    n_sentences = sum(text.count("\n") for text in bundle.docs.values())
    print(f"wrote {args.scenario} bundle to {args.out_dir} ({n_sentences} sentences)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
