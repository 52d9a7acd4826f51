"""Oracle abstraction: masked top-k prediction and sentence embedding."""
from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from typing import Sequence

from ..errors import InvalidQueryError, OracleProtocolError
from ..text import MASK_MARKER, tokenize


@dataclass(frozen=True)
class MaskedQuery:
    """A token sequence with exactly one [MASK] and at least two tokens."""

    tokens: tuple[str, ...]

    def __post_init__(self) -> None:
        n_masks = sum(1 for t in self.tokens if t == MASK_MARKER)
        if n_masks != 1:
            raise InvalidQueryError(f"query needs exactly one {MASK_MARKER}, got {n_masks}")
        if len(self.tokens) < 2:
            raise InvalidQueryError("query needs at least two tokens")

    @property
    def mask_index(self) -> int:
        return self.tokens.index(MASK_MARKER)

    @classmethod
    def from_text(cls, text: str) -> "MaskedQuery":
        return cls(tuple(tokenize(text)))


@dataclass(frozen=True)
class TopKPrediction:
    """Candidate fillers with non-increasing scores and distinct tokens."""

    entries: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        tokens = [t for t, _ in self.entries]
        if len(set(tokens)) != len(tokens):
            raise ValueError("top-k candidate tokens must be distinct")
        scores = [s for _, s in self.entries]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise ValueError("top-k scores must be non-increasing")

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(t for t, _ in self.entries)


@dataclass(frozen=True)
class SentenceVector:
    """Fixed-width embedding of a token sequence."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("empty sentence vector")
        if any(not math.isfinite(v) for v in self.values):
            raise ValueError("sentence vector has non-finite entries")

    @property
    def dim(self) -> int:
        return len(self.values)


class LmOracle(abc.ABC):
    """Masked-language-model oracle contract used by every downstream module."""

    @property
    @abc.abstractmethod
    def dim(self) -> int:
        """Embedding width; constant per backend instance."""

    @property
    @abc.abstractmethod
    def backend_id(self) -> str:
        """Stable identifier used as a cache key component."""

    @abc.abstractmethod
    def topk(self, query: MaskedQuery, k: int) -> TopKPrediction:
        """At most k candidate fillers for the masked position."""

    @abc.abstractmethod
    def embed(self, tokens: Sequence[str]) -> SentenceVector:
        """Deterministic sentence vector for a non-empty token sequence."""

    def probe(self, query: MaskedQuery) -> str:
        """Single most likely filler."""
        prediction = self.topk(query, 1)
        if not prediction.entries:
            raise OracleProtocolError("oracle returned no candidates for probe")
        return prediction.entries[0][0]

    def close(self) -> None:
        """Release any held resources; default backends hold none."""


def check_k(k: int) -> None:
    if k < 1:
        raise InvalidQueryError(f"k must be >= 1, got {k}")
