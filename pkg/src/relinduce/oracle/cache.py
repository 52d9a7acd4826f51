"""On-disk memoization of oracle calls, keyed on (backend id, query, k)."""
from __future__ import annotations

import hashlib
import json
import sqlite3
import threading
from pathlib import Path
from typing import Sequence

from .base import LmOracle, MaskedQuery, SentenceVector, TopKPrediction


class CachedOracle(LmOracle):
    """Wraps any oracle with a sqlite-backed response cache.

    Safe for multi-threaded use: a single connection guarded by a lock
    serializes writes (and reads, which are cheap at this scale).
    """

    # Commit every N writes rather than per call; a cache can afford to
    # lose its tail on a crash but not an fsync per oracle query.
    _COMMIT_EVERY = 256

    def __init__(self, inner: LmOracle, path: str | Path):
        self.inner = inner
        self._conn = sqlite3.connect(str(path), check_same_thread=False)
        self._conn.execute("PRAGMA journal_mode=WAL")
        self._conn.execute("PRAGMA synchronous=NORMAL")
        self._conn.execute(
            "CREATE TABLE IF NOT EXISTS oracle_cache (key TEXT PRIMARY KEY, value TEXT NOT NULL)"
        )
        self._conn.commit()
        self._lock = threading.RLock()
        self._pending = 0
        self.hits = 0
        self.misses = 0

    @property
    def dim(self) -> int:
        return self.inner.dim

    @property
    def backend_id(self) -> str:
        return self.inner.backend_id

    def _key(self, op: str, tokens: Sequence[str], k: int | None) -> str:
        payload = json.dumps(
            {"backend": self.inner.backend_id, "op": op, "tokens": list(tokens), "k": k},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def _get(self, key: str) -> dict | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT value FROM oracle_cache WHERE key = ?", (key,)
            ).fetchone()
        return json.loads(row[0]) if row else None

    def _put(self, key: str, value: dict) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT OR REPLACE INTO oracle_cache (key, value) VALUES (?, ?)",
                (key, json.dumps(value, sort_keys=True)),
            )
            self._pending += 1
            if self._pending >= self._COMMIT_EVERY:
                self._conn.commit()
                self._pending = 0

    def topk(self, query: MaskedQuery, k: int) -> TopKPrediction:
        key = self._key("topk", query.tokens, k)
        hit = self._get(key)
        if hit is not None:
            self.hits += 1
            return TopKPrediction(tuple((str(t), float(s)) for t, s in hit["entries"]))
        self.misses += 1
        result = self.inner.topk(query, k)
        self._put(key, {"entries": [[t, s] for t, s in result.entries]})
        return result

    def embed(self, tokens: Sequence[str]) -> SentenceVector:
        key = self._key("embed", tokens, None)
        hit = self._get(key)
        if hit is not None:
            self.hits += 1
            return SentenceVector(tuple(float(v) for v in hit["vector"]))
        self.misses += 1
        result = self.inner.embed(tokens)
        self._put(key, {"vector": list(result.values)})
        return result

    def flush(self) -> None:
        with self._lock:
            if self._pending:
                self._conn.commit()
                self._pending = 0

    def close(self) -> None:
        with self._lock:
            self.flush()
            self._conn.close()
