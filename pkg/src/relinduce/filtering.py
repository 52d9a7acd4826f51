"""Rank mined templates by how well the oracle predicts seed pairs through them.

Two scores, one selection pipeline:

* fast score — instantiate the template with its own provenance pair, mask
  each slot in turn, and count how many of the seed heads/tails show up in
  the two top-k lists. Exactly two oracle calls per template.
* slow score — for every seed pair, mask each slot and check whether the
  held-out word itself is recovered. Exactly 2n calls for n seed pairs.

Selection keeps the top prefilter_size templates by fast score, scores the
survivors with the slow score, and returns the top final_k ordered by
(slow desc, fast desc, token sequence asc).
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .errors import ConfigError, DataError, OracleError
from .mining import Template, RelationSeed, WordPair
from .oracle.base import LmOracle, MaskedQuery
from .text import MASK_MARKER

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScoredTemplate:
    template: Template
    fast_score: int
    slow_score: int | None = None

    def to_json(self) -> dict:
        obj = self.template.to_json()
        obj["fast_score"] = self.fast_score
        obj["slow_score"] = self.slow_score
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "ScoredTemplate":
        template = Template.from_json(obj)
        slow = obj.get("slow_score")
        return cls(template, int(obj["fast_score"]), None if slow is None else int(slow))


def query_tail_masked(template: Template, head_word: str) -> MaskedQuery:
    """Template with [HEAD] filled and [TAIL] masked."""
    tokens = list(template.tokens)
    tokens[template.head_slot] = head_word
    tokens[template.tail_slot] = MASK_MARKER
    return MaskedQuery(tuple(tokens))


def query_head_masked(template: Template, tail_word: str) -> MaskedQuery:
    """Template with [TAIL] filled and [HEAD] masked."""
    tokens = list(template.tokens)
    tokens[template.tail_slot] = tail_word
    tokens[template.head_slot] = MASK_MARKER
    return MaskedQuery(tuple(tokens))


def score_fast(template: Template, seeds: RelationSeed, oracle: LmOracle, k: int) -> int:
    """Seed-vocabulary overlap of the two masked variants of the provenance pair."""
    pair = template.source_pair
    if pair not in seeds.pairs:
        raise DataError(
            f"template provenance ({pair.head}, {pair.tail}) is not a seed of "
            f"{seeds.relation_name!r}"
        )
    head_candidates = set(oracle.topk(query_head_masked(template, pair.tail), k).tokens)
    tail_candidates = set(oracle.topk(query_tail_masked(template, pair.head), k).tokens)
    return len(head_candidates & seeds.heads()) + len(tail_candidates & seeds.tails())


def score_slow(template: Template, seeds: RelationSeed, oracle: LmOracle, k: int) -> int:
    """How many held-out seed words the oracle recovers through this template."""
    total = 0
    for pair in seeds.pairs:
        if pair.head in oracle.topk(query_head_masked(template, pair.tail), k).tokens:
            total += 1
        if pair.tail in oracle.topk(query_tail_masked(template, pair.head), k).tokens:
            total += 1
    return total


def _score_many(
    templates: Sequence[Template],
    scorer: Callable[[Template], int],
    workers: int,
    stage: str,
    dropped: list[Template],
) -> list[tuple[Template, int]]:
    def attempt(t: Template) -> int | None:
        try:
            return scorer(t)
        except OracleError as exc:
            logger.warning("dropping template during %s scoring: %s", stage, exc)
            return None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(attempt, templates))
    else:
        results = [attempt(t) for t in templates]
    out = []
    for template, score in zip(templates, results):
        if score is None:
            dropped.append(template)
        else:
            out.append((template, score))
    return out


def select_templates(
    templates: Sequence[Template],
    seeds: RelationSeed,
    oracle: LmOracle,
    k: int,
    *,
    prefilter_size: int = 1000,
    final_k: int = 100,
    workers: int = 1,
) -> list[ScoredTemplate]:
    """Two-stage selection: fast-score prefilter, then slow-score ranking."""
    if final_k < 1:
        raise ConfigError(f"final_k must be >= 1, got {final_k}")
    if final_k > prefilter_size:
        raise ConfigError(f"final_k {final_k} exceeds prefilter_size {prefilter_size}")
    dropped: list[Template] = []
    fast_scored = _score_many(
        templates, lambda t: score_fast(t, seeds, oracle, k), workers, "fast", dropped
    )
    fast_scored.sort(key=lambda ts: (-ts[1], ts[0].tokens))
    survivors = fast_scored[:prefilter_size]

    slow_scored = _score_many(
        [t for t, _ in survivors],
        lambda t: score_slow(t, seeds, oracle, k),
        workers,
        "slow",
        dropped,
    )
    fast_by_tokens = {t.tokens: f for t, f in survivors}
    ranked = [
        ScoredTemplate(t, fast_by_tokens[t.tokens], slow) for t, slow in slow_scored
    ]
    ranked.sort(key=lambda s: (-s.slow_score, -s.fast_score, s.template.tokens))
    if len(ranked) < final_k:
        logger.warning(
            "only %d template(s) survived for %s (requested %d)",
            len(ranked),
            seeds.relation_name,
            final_k,
        )
    if dropped:
        logger.warning(
            "%d template(s) dropped after oracle failures for %s",
            len(dropped),
            seeds.relation_name,
        )
    return ranked[:final_k]


def write_scored(path: str | Path, scored: Iterable[ScoredTemplate]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in scored:
            fh.write(json.dumps(s.to_json(), sort_keys=True) + "\n")


def read_scored(path: str | Path) -> list[ScoredTemplate]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            out.append(ScoredTemplate.from_json(obj))
    return out
