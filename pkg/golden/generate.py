#!/usr/bin/env python3
"""Regenerate the golden oracle fixtures.

Writes two fixture worlds and a list of request/response cases in the wire
protocol's JSON shapes. Any server that claims to speak the protocol over
these worlds must reproduce every response byte for byte once parsed as
JSON (IEEE doubles compare exactly; both sides print shortest round-trip
decimals).

    python3 golden/generate.py [--out DIR]

The files are checked in; the test suite regenerates them into a scratch
directory and fails on any drift.
"""
from __future__ import annotations

import argparse
import json
from pathlib import Path

from relinduce.oracle.base import MaskedQuery
from relinduce.oracle.fixture import FixtureOracle, FixtureWorld
from relinduce.text import HEAD_MARKER, MASK_MARKER, TAIL_MARKER

FACTS = (
    ("cap", "paris", "france"),
    ("cap", "rome", "italy"),
    ("cap", "berlin", "germany"),
)
TYPE_VOCAB = {"cap": (("berlin", "paris", "rome"), ("france", "germany", "italy"))}
PATTERNS = {
    "cap": (
        ("[HEAD]", "is", "the", "capital", "of", "[TAIL]", "."),
        ("the", "capital", "of", "[TAIL]", "is", "[HEAD]", "."),
    )
}

WORLDS = {
    "world.json": FixtureWorld(FACTS, TYPE_VOCAB, PATTERNS, noise_rate=0.0, seed=42),
    "world_noisy.json": FixtureWorld(FACTS, TYPE_VOCAB, PATTERNS, noise_rate=0.3, seed=42),
}

# queries that match no registered pattern, plus shape edge cases
EXTRA_TOPK = [
    ("unmatched-tail", ("paris", "loves", MASK_MARKER, "."), 4),
    ("unmatched-head", (MASK_MARKER, "loves", "france", "."), 2),
    ("unmatched-punct", ("paris", "is", "the", "capital", "of", MASK_MARKER, "!"), 3),
    ("k-exceeds-pool", ("paris", "is", "the", "capital", "of", MASK_MARKER, "."), 10),
    ("two-tokens", (MASK_MARKER, "paris"), 3),
]

EXTRA_EMBED = [
    ("probe", ("the", ".")),
    ("single", ("paris",)),
    ("repeats", ("paris", "paris", "paris")),
    ("unknown-words", ("zzz", "qqq", ".")),
]


def _fill(pattern, head, tail, masked):
    out = []
    for token in pattern:
        if token == HEAD_MARKER:
            out.append(MASK_MARKER if masked == "head" else head)
        elif token == TAIL_MARKER:
            out.append(MASK_MARKER if masked == "tail" else tail)
        else:
            out.append(token)
    return tuple(out)


def _topk_case(name, world_file, oracle, tokens, k):
    query = MaskedQuery(tokens)
    prediction = oracle.topk(query, k)
    return {
        "name": name,
        "world": world_file,
        "request": {
            "op": "topk",
            "tokens": list(tokens),
            "mask_index": query.mask_index,
            "k": k,
        },
        "response": {
            "entries": [{"token": t, "score": s} for t, s in prediction.entries]
        },
    }


def _embed_case(name, world_file, oracle, tokens):
    vector = oracle.embed(list(tokens))
    return {
        "name": name,
        "world": world_file,
        "request": {"op": "embed", "tokens": list(tokens)},
        "response": {"vector": list(vector.values), "dim": oracle.dim},
    }


def build_cases() -> list[dict]:
    cases: list[dict] = []
    for world_file, world in WORLDS.items():
        oracle = FixtureOracle(world)
        tag = "clean" if world.noise_rate == 0.0 else "noisy"
        for rel, head, tail in world.facts:
            for p_idx, pattern in enumerate(world.patterns[rel]):
                for masked in ("head", "tail"):
                    for k in (1, 3):
                        cases.append(
                            _topk_case(
                                f"{tag}-{rel}-{head}-p{p_idx}-{masked}-k{k}",
                                world_file,
                                oracle,
                                _fill(pattern, head, tail, masked),
                                k,
                            )
                        )
    clean_oracle = FixtureOracle(WORLDS["world.json"])
    for name, tokens, k in EXTRA_TOPK:
        cases.append(_topk_case(f"clean-{name}", "world.json", clean_oracle, tokens, k))
    noisy_oracle = FixtureOracle(WORLDS["world_noisy.json"])
    for name, tokens, k in EXTRA_TOPK:
        cases.append(_topk_case(f"noisy-{name}", "world_noisy.json", noisy_oracle, tokens, k))
    for name, tokens in EXTRA_EMBED:
        cases.append(_embed_case(f"clean-{name}", "world.json", clean_oracle, tokens))
    for rel, head, tail in WORLDS["world.json"].facts:
        for p_idx, pattern in enumerate(WORLDS["world.json"].patterns[rel]):
            tokens = _fill(pattern, head, tail, masked=None)
            cases.append(
                _embed_case(
                    f"clean-{rel}-{head}-p{p_idx}-filled", "world.json",
                    clean_oracle, tokens,
                )
            )
    return cases


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--out", default=str(Path(__file__).resolve().parent), metavar="DIR"
    )
    args = parser.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    for world_file, world in WORLDS.items():
        world.save(out / world_file)
    payload = {"format": "relinduce-wire-v1", "cases": build_cases()}
    (out / "cases.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(payload['cases'])} cases to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
