"""Record and replay oracle traffic.

A recorded log makes downstream behavior auditable: any module that is a
pure function of oracle responses must behave identically when the live
backend is swapped for the log replayer.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from ..errors import OracleProtocolError
from .base import LmOracle, MaskedQuery, SentenceVector, TopKPrediction


class RecordingOracle(LmOracle):
    """Pass-through wrapper that appends every call to a log list."""

    def __init__(self, inner: LmOracle):
        self.inner = inner
        self.log: list[dict] = []

    @property
    def dim(self) -> int:
        return self.inner.dim

    @property
    def backend_id(self) -> str:
        return self.inner.backend_id

    def topk(self, query: MaskedQuery, k: int) -> TopKPrediction:
        result = self.inner.topk(query, k)
        self.log.append(
            {
                "op": "topk",
                "tokens": list(query.tokens),
                "k": k,
                "response": {"entries": [[t, s] for t, s in result.entries]},
            }
        )
        return result

    def embed(self, tokens: Sequence[str]) -> SentenceVector:
        result = self.inner.embed(tokens)
        self.log.append(
            {
                "op": "embed",
                "tokens": list(tokens),
                "response": {"vector": list(result.values), "dim": result.dim},
            }
        )
        return result

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.log, indent=1) + "\n")


class ReplayOracle(LmOracle):
    """Serves only what the log recorded; unseen queries are protocol errors."""

    def __init__(self, log: list[dict], backend_id: str = "replay"):
        self._backend_id = backend_id
        self._topk: dict[tuple[tuple[str, ...], int], TopKPrediction] = {}
        self._embed: dict[tuple[str, ...], SentenceVector] = {}
        for entry in log:
            tokens = tuple(str(t) for t in entry["tokens"])
            if entry["op"] == "topk":
                pred = TopKPrediction(
                    tuple((str(t), float(s)) for t, s in entry["response"]["entries"])
                )
                self._topk[(tokens, int(entry["k"]))] = pred
            elif entry["op"] == "embed":
                self._embed[tokens] = SentenceVector(
                    tuple(float(v) for v in entry["response"]["vector"])
                )

    @classmethod
    def from_file(cls, path: str | Path, backend_id: str = "replay") -> "ReplayOracle":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")), backend_id)

    @property
    def dim(self) -> int:
        if not self._embed:
            raise OracleProtocolError("replay log holds no embed calls; dim unknown")
        return next(iter(self._embed.values())).dim

    @property
    def backend_id(self) -> str:
        return self._backend_id

    def topk(self, query: MaskedQuery, k: int) -> TopKPrediction:
        try:
            return self._topk[(query.tokens, k)]
        except KeyError:
            raise OracleProtocolError(
                f"no recorded topk response for k={k}, tokens={list(query.tokens)}"
            ) from None

    def embed(self, tokens: Sequence[str]) -> SentenceVector:
        try:
            return self._embed[tuple(tokens)]
        except KeyError:
            raise OracleProtocolError(
                f"no recorded embed response for tokens={list(tokens)}"
            ) from None
