"""Deterministic in-process oracle backed by a closed world of facts.

The world declares facts per relation, per-relation head/tail vocabularies,
and template patterns. A masked query that matches a pattern instantiated
with a known fact gets the correct filler(s) first; the rest of the list is
drawn from the matching type vocabulary. Anything else draws from the
global vocabulary. Scores are 1/(1+rank).

All pseudo-randomness is integer hashing (FNV-1a 64 with a splitmix64
finalizer) plus stride walks over power-of-two cycles, so replies are
bit-reproducible across processes and across language runtimes; floats are
exact IEEE doubles derived from 53-bit integers. That is what lets recorded
request/response files double as a conformance suite for wire-protocol
servers.

Embeddings are 32-wide: 31 seeded hash features of the token multiset and
one support feature that is +1 iff the sequence instantiates a known
(pattern, fact) combination, -1 otherwise.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import DataError, InvalidQueryError
from ..text import HEAD_MARKER, MASK_MARKER, TAIL_MARKER
from .base import LmOracle, MaskedQuery, SentenceVector, TopKPrediction, check_k

EMBED_DIM = 32
_HASH_DIMS = EMBED_DIM - 1  # last dimension is the support feature

_MASK64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_SEP = "\x1f"
_SLOT = "\x00"

_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))
_TWO53 = float(1 << 53)


def mix64(x: int) -> int:
    """splitmix64 finalizer on a 64-bit integer."""
    x &= _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def hash_parts(*parts: int | str) -> int:
    """Hash a sequence of parts joined with a unit separator."""
    joined = _SEP.join(str(p) for p in parts)
    return mix64(fnv1a64(joined.encode("utf-8")))


def unit_float(x: int) -> float:
    """Top 53 bits of a 64-bit hash mapped to [0, 1); exact in any IEEE double."""
    return (x >> 11) / _TWO53


def _mix64_array(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        x = x.copy()
        x ^= x >> _S30
        x *= _MIX1
        x ^= x >> _S27
        x *= _MIX2
        x ^= x >> _S31
    return x


def _next_pow2(n: int) -> int:
    return 1 << max(1, (n - 1).bit_length())


@dataclass(frozen=True)
class FixtureWorld:
    """Closed world: facts, per-relation vocabularies, patterns, noise, seed."""

    facts: tuple[tuple[str, str, str], ...]  # (relation, head, tail)
    type_vocab: dict[str, tuple[tuple[str, ...], tuple[str, ...]]]  # rel -> (heads, tails)
    patterns: dict[str, tuple[tuple[str, ...], ...]]  # rel -> pattern token tuples
    noise_rate: float
    seed: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.noise_rate <= 1.0:
            raise DataError(f"noise_rate {self.noise_rate} outside [0, 1]")
        for rel, head, tail in self.facts:
            if rel not in self.type_vocab:
                raise DataError(f"fact relation {rel!r} missing from type_vocab")
            heads, tails = self.type_vocab[rel]
            if head not in heads or tail not in tails:
                raise DataError(f"fact ({rel}, {head}, {tail}) outside its type vocabulary")
        for rel, pats in self.patterns.items():
            if rel not in self.type_vocab:
                raise DataError(f"pattern relation {rel!r} missing from type_vocab")
            for pat in pats:
                if pat.count(HEAD_MARKER) != 1 or pat.count(TAIL_MARKER) != 1:
                    raise DataError(f"pattern for {rel!r} needs exactly one slot of each kind")

    def global_vocab(self) -> tuple[str, ...]:
        words: set[str] = set()
        for heads, tails in self.type_vocab.values():
            words.update(heads)
            words.update(tails)
        return tuple(sorted(words))

    def to_json(self) -> dict:
        return {
            "facts": [list(f) for f in self.facts],
            "type_vocab": {
                rel: {"head_vocab": list(h), "tail_vocab": list(t)}
                for rel, (h, t) in self.type_vocab.items()
            },
            "patterns": {rel: [list(p) for p in pats] for rel, pats in self.patterns.items()},
            "noise_rate": self.noise_rate,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FixtureWorld":
        try:
            facts = tuple((str(r), str(h), str(t)) for r, h, t in obj["facts"])
            type_vocab = {
                str(rel): (
                    tuple(str(w) for w in v["head_vocab"]),
                    tuple(str(w) for w in v["tail_vocab"]),
                )
                for rel, v in obj["type_vocab"].items()
            }
            patterns = {
                str(rel): tuple(tuple(str(t) for t in p) for p in pats)
                for rel, pats in obj["patterns"].items()
            }
            return cls(facts, type_vocab, patterns, float(obj["noise_rate"]), int(obj["seed"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed fixture world: {exc}") from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "FixtureWorld":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read fixture world {path}: {exc}") from exc
        return cls.from_json(obj)


class FixtureOracle(LmOracle):
    """Oracle over a FixtureWorld. Pure function of (world, query)."""

    def __init__(self, world: FixtureWorld):
        self.world = world
        self._seed = world.seed
        self._global = world.global_vocab()
        digest = hashlib.sha256(
            json.dumps(world.to_json(), sort_keys=True).encode("utf-8")
        ).hexdigest()
        self._backend_id = f"fixture:{digest[:16]}"

        # (rel, head) -> sorted tails, (rel, tail) -> sorted heads
        by_head: dict[tuple[str, str], set[str]] = {}
        by_tail: dict[tuple[str, str], set[str]] = {}
        self._fact_set = set(world.facts)
        for rel, head, tail in world.facts:
            by_head.setdefault((rel, head), set()).add(tail)
            by_tail.setdefault((rel, tail), set()).add(head)
        self._tails_of = {k: tuple(sorted(v)) for k, v in by_head.items()}
        self._heads_of = {k: tuple(sorted(v)) for k, v in by_tail.items()}

        # Masked-pattern skeletons: replace the open slot with a sentinel and
        # the masked slot with the literal mask marker; then a query matches
        # iff masking its own open position reproduces the skeleton.
        self._masked_index: dict[tuple[str, ...], list[tuple[str, str, int]]] = {}
        self._masked_probes: list[tuple[int, int]] = []  # (length, open_pos)
        # Full-instantiation skeletons for the support feature.
        self._support_index: dict[tuple[str, ...], list[tuple[str, int, int]]] = {}
        self._support_probes: list[tuple[int, int, int]] = []  # (length, head_pos, tail_pos)
        probe_seen: set[tuple[int, int]] = set()
        support_seen: set[tuple[int, int, int]] = set()
        for rel in sorted(world.patterns):
            for pat in world.patterns[rel]:
                hs = pat.index(HEAD_MARKER)
                ts = pat.index(TAIL_MARKER)
                for side, masked_pos, open_pos in (("tail", ts, hs), ("head", hs, ts)):
                    skel = list(pat)
                    skel[masked_pos] = MASK_MARKER
                    skel[open_pos] = _SLOT
                    self._masked_index.setdefault(tuple(skel), []).append((rel, side, open_pos))
                    pk = (len(pat), open_pos)
                    if pk not in probe_seen:
                        probe_seen.add(pk)
                        self._masked_probes.append(pk)
                skel = list(pat)
                skel[hs] = _SLOT
                skel[ts] = _SLOT
                self._support_index.setdefault(tuple(skel), []).append((rel, hs, ts))
                sk = (len(pat), hs, ts)
                if sk not in support_seen:
                    support_seen.add(sk)
                    self._support_probes.append(sk)

        self._token_hashes: dict[str, np.ndarray] = {}
        self._embed_memo: dict[tuple[str, ...], SentenceVector] = {}

    @property
    def dim(self) -> int:
        return EMBED_DIM

    @property
    def backend_id(self) -> str:
        return self._backend_id

    # -- top-k ----------------------------------------------------------

    def topk(self, query: MaskedQuery, k: int) -> TopKPrediction:
        check_k(k)
        qtokens = query.tokens
        qstr = _SEP.join(qtokens)
        match = self._match_masked(qtokens)
        chosen: list[str] = []
        if match is not None:
            fillers, vocab = match
            displaced = unit_float(hash_parts(self._seed, "disp", qstr)) < self.world.noise_rate
            if not displaced:
                chosen.extend(fillers[:k])
            excluded = set(fillers)
            pool = vocab
        else:
            excluded = set()
            pool = self._global
        if len(chosen) < k:
            chosen.extend(self._walk(pool, qstr, k - len(chosen), excluded))
        return TopKPrediction(
            tuple((tok, 1.0 / (1 + rank)) for rank, tok in enumerate(chosen))
        )

    def _match_masked(
        self, qtokens: tuple[str, ...]
    ) -> tuple[tuple[str, ...], tuple[str, ...]] | None:
        n = len(qtokens)
        for length, open_pos in self._masked_probes:
            if length != n or qtokens[open_pos] == MASK_MARKER:
                continue
            probe = list(qtokens)
            probe[open_pos] = _SLOT
            candidates = self._masked_index.get(tuple(probe))
            if not candidates:
                continue
            word = qtokens[open_pos]
            for rel, side, pos in candidates:
                if pos != open_pos:
                    continue
                if side == "tail":
                    fillers = self._tails_of.get((rel, word))
                    if fillers:
                        return fillers, self.world.type_vocab[rel][1]
                else:
                    fillers = self._heads_of.get((rel, word))
                    if fillers:
                        return fillers, self.world.type_vocab[rel][0]
        return None

    def _walk(
        self,
        pool: tuple[str, ...],
        qstr: str,
        need: int,
        excluded: set[str],
    ) -> list[str]:
        """Seeded-pseudorandom draw without replacement from a sorted pool.

        Walks a full cycle over the next power of two with an odd stride, so
        every pool index is visited exactly once in a query-dependent order.
        """
        size = len(pool)
        if size == 0 or need <= 0:
            return []
        cap = _next_pow2(size)
        h = hash_parts(self._seed, "order", qstr)
        idx = h & (cap - 1)
        step = (mix64(h ^ 0x9E3779B97F4A7C15) & (cap - 1)) | 1
        out: list[str] = []
        for _ in range(cap):
            if idx < size:
                tok = pool[idx]
                if tok not in excluded:
                    out.append(tok)
                    if len(out) == need:
                        break
            idx = (idx + step) & (cap - 1)
        return out

    # -- embeddings ------------------------------------------------------

    def embed(self, tokens: Sequence[str]) -> SentenceVector:
        if not tokens:
            raise InvalidQueryError("cannot embed an empty token sequence")
        key = tuple(tokens)
        memo = self._embed_memo.get(key)
        if memo is not None:
            return memo
        acc = np.zeros(_HASH_DIMS, dtype=np.uint64)
        with np.errstate(over="ignore"):
            for tok in key:
                acc += self._token_hash(tok)
        mixed = _mix64_array(acc) >> _S11
        values = mixed.astype(np.float64) / _TWO53 * 2.0 - 1.0
        support = 1.0 if self._is_instantiation(key) else -1.0
        vector = SentenceVector(tuple(values.tolist()) + (support,))
        self._embed_memo[key] = vector
        return vector

    def _token_hash(self, token: str) -> np.ndarray:
        cached = self._token_hashes.get(token)
        if cached is None:
            cached = np.array(
                [hash_parts(self._seed, "emb", d, token) for d in range(_HASH_DIMS)],
                dtype=np.uint64,
            )
            self._token_hashes[token] = cached
        return cached

    def _is_instantiation(self, tokens: tuple[str, ...]) -> bool:
        n = len(tokens)
        for length, hs, ts in self._support_probes:
            if length != n:
                continue
            head, tail = tokens[hs], tokens[ts]
            probe = list(tokens)
            probe[hs] = _SLOT
            probe[ts] = _SLOT
            for rel, phs, pts in self._support_index.get(tuple(probe), ()):
                if phs == hs and pts == ts and (rel, head, tail) in self._fact_set:
                    return True
        return False
