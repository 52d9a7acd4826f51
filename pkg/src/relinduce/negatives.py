"""Corrupted word pairs serving as negative training and test examples.

Training negatives: the swap (t, s) of every positive (s, t), plus cross
pairs combining the head of one positive with the tail of another, sampled
without replacement at a configurable ratio. Test negatives follow a fixed
per-positive recipe: the swap, two pairs built from the test split's target
words, one instance borrowed from a different relation, and one random pair
from the dataset-wide pools; five per positive when nothing is skipped.

Every candidate is checked against the relation's positive set; collisions
resample up to 100 times and then skip with a warning.
"""
from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DataError
from .mining import WordPair

logger = logging.getLogger(__name__)

ORIGIN_SEED = "seed"
ORIGIN_SWAP = "swap"
ORIGIN_CROSS = "cross"
ORIGIN_OTHER_RELATION = "other_relation"
ORIGIN_RANDOM = "random"
ORIGINS = (ORIGIN_SEED, ORIGIN_SWAP, ORIGIN_CROSS, ORIGIN_OTHER_RELATION, ORIGIN_RANDOM)

_MAX_RESAMPLES = 100


@dataclass(frozen=True)
class LabeledPair:
    pair: WordPair
    label: int  # 1 positive, 0 negative
    origin: str

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise DataError(f"label must be 0 or 1, got {self.label}")
        if self.origin not in ORIGINS:
            raise DataError(f"unknown origin {self.origin!r}")
        if self.label == 1 and self.origin != ORIGIN_SEED:
            raise DataError("positive examples must have origin 'seed'")

    def to_json(self) -> dict:
        return {
            "head": self.pair.head,
            "tail": self.pair.tail,
            "label": self.label,
            "origin": self.origin,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LabeledPair":
        try:
            return cls(
                WordPair(str(obj["head"]), str(obj["tail"])),
                int(obj["label"]),
                str(obj["origin"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed labeled pair: {exc}") from exc


def as_positives(pairs: Iterable[WordPair]) -> list[LabeledPair]:
    return [LabeledPair(p, 1, ORIGIN_SEED) for p in pairs]


def _try_pair(head: str, tail: str) -> WordPair | None:
    if head == tail:
        return None
    return WordPair(head, tail)


def gen_train_negatives(
    positives: Sequence[WordPair],
    rng_seed: int,
    *,
    cross_ratio: float = 1.0,
) -> list[LabeledPair]:
    """Swaps plus sampled cross pairs; deterministic under rng_seed."""
    pos = sorted(set(positives))
    if len(pos) < 2:
        raise DataError(f"need at least 2 positives to corrupt, got {len(pos)}")
    pos_set = set(pos)
    out: list[LabeledPair] = []
    emitted: set[WordPair] = set()
    for p in pos:
        swap = p.swapped()
        if swap not in pos_set and swap not in emitted:
            out.append(LabeledPair(swap, 0, ORIGIN_SWAP))
            emitted.add(swap)

    rng = random.Random(rng_seed)
    heads = [p.head for p in pos]
    tails = [p.tail for p in pos]
    n = len(pos)
    target = round(cross_ratio * n)
    skipped = 0
    for _ in range(target):
        for _ in range(_MAX_RESAMPLES):
            i = rng.randrange(n)
            j = rng.randrange(n)
            if i == j:
                continue
            cand = _try_pair(heads[i], tails[j])
            if cand is None or cand in pos_set or cand in emitted:
                continue
            out.append(LabeledPair(cand, 0, ORIGIN_CROSS))
            emitted.add(cand)
            break
        else:
            skipped += 1
    if skipped:
        logger.warning("cross sampling skipped %d draw(s) after resample budget", skipped)
    return out


def gen_test_negatives(
    test_pos: Sequence[WordPair],
    all_relations: Mapping[str, Sequence[WordPair]],
    full_vocab: tuple[Sequence[str], Sequence[str]],
    rng_seed: int,
    *,
    relation_name: str,
) -> list[LabeledPair]:
    """Per positive: swap, two target-word substitutions, one foreign
    instance, one random pair. Exactly 5x positives when nothing is skipped."""
    if relation_name not in all_relations:
        raise DataError(f"relation {relation_name!r} missing from all_relations")
    positives_filter = set(all_relations[relation_name]) | set(test_pos)
    other_rels = sorted(
        r for r, pairs in all_relations.items() if r != relation_name and len(pairs) > 0
    )
    if not other_rels:
        raise DataError(
            "test negative protocol needs at least one other relation to sample from"
        )
    other_pairs = {r: sorted(set(all_relations[r])) for r in other_rels}
    head_pool = sorted(set(full_vocab[0]))
    tail_pool = sorted(set(full_vocab[1]))
    if not head_pool or not tail_pool:
        raise DataError("test negative protocol needs non-empty dataset word pools")
    test_targets = sorted({p.tail for p in test_pos})

    rng = random.Random(rng_seed)
    out: list[LabeledPair] = []
    warned_targets = False
    for p in sorted(set(test_pos)):
        # (a) swap — never sampled, identical across seeds
        swap = p.swapped()
        if swap not in positives_filter:
            out.append(LabeledPair(swap, 0, ORIGIN_SWAP))
        else:
            logger.warning("swap of (%s, %s) is itself positive; skipped", p.head, p.tail)

        # (b) two replacement targets drawn from the test split's tail words
        chosen: set[str] = set()
        for _ in range(2):
            found = False
            for _ in range(_MAX_RESAMPLES):
                t2 = rng.choice(test_targets)
                if t2 in chosen:
                    continue
                cand = _try_pair(p.head, t2)
                if cand is None or cand in positives_filter:
                    continue
                out.append(LabeledPair(cand, 0, ORIGIN_CROSS))
                chosen.add(t2)
                found = True
                break
            if not found and not warned_targets:
                warned_targets = True
                logger.warning(
                    "test split too small to draw replacement targets for %s; "
                    "category skipped where exhausted",
                    relation_name,
                )

        # (c) one instance of a different relation
        for _ in range(_MAX_RESAMPLES):
            rel = other_rels[rng.randrange(len(other_rels))]
            cand = other_pairs[rel][rng.randrange(len(other_pairs[rel]))]
            if cand in positives_filter:
                continue
            out.append(LabeledPair(cand, 0, ORIGIN_OTHER_RELATION))
            break
        else:
            logger.warning("could not sample a foreign instance for %s", relation_name)

        # (d) one random pair from the dataset-wide pools
        for _ in range(_MAX_RESAMPLES):
            cand = _try_pair(rng.choice(head_pool), rng.choice(tail_pool))
            if cand is None or cand in positives_filter:
                continue
            out.append(LabeledPair(cand, 0, ORIGIN_RANDOM))
            break
        else:
            logger.warning("could not sample a random pair for %s", relation_name)
    return out


def write_labeled(path: str | Path, examples: Iterable[LabeledPair]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(ex.to_json(), sort_keys=True) + "\n")


def read_labeled(path: str | Path) -> list[LabeledPair]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            out.append(LabeledPair.from_json(obj))
    return out
