"""HTTP client for the oracle wire protocol.

POST {base}/v1/topk   {"tokens": [...], "mask_index": i, "k": n}
                      -> {"entries": [{"token": ..., "score": ...}, ...]}
POST {base}/v1/embed  {"tokens": [...]}
                      -> {"vector": [...], "dim": d}

400 responses are protocol errors and never retried; 503, other 5xx and
transport failures retry with exponential backoff. The bearer token, when
present, comes from the RELINDUCE_ORACLE_TOKEN environment variable.
"""
from __future__ import annotations

import os
import threading
import time
from typing import Sequence

import requests

from ..errors import OracleProtocolError, OracleTransportError
from .base import LmOracle, MaskedQuery, SentenceVector, TopKPrediction, check_k

AUTH_TOKEN_ENV = "RELINDUCE_ORACLE_TOKEN"


class RemoteOracle(LmOracle):
    def __init__(
        self,
        base_url: str,
        *,
        timeout: float = 30.0,
        max_retries: int = 3,
        backoff: float = 0.5,
        max_inflight: int = 4,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff
        self._session = session or requests.Session()
        self._semaphore = threading.Semaphore(max_inflight)
        self._dim: int | None = None
        token = os.environ.get(AUTH_TOKEN_ENV)
        if token:
            self._session.headers["Authorization"] = f"Bearer {token}"

    @property
    def backend_id(self) -> str:
        return f"remote:{self.base_url}"

    @property
    def dim(self) -> int:
        if self._dim is None:
            # Cheapest way to learn the width without a side channel.
            self.embed(("the", "."))
        assert self._dim is not None
        return self._dim

    def topk(self, query: MaskedQuery, k: int) -> TopKPrediction:
        check_k(k)
        body = {"tokens": list(query.tokens), "mask_index": query.mask_index, "k": k}
        obj = self._post("/v1/topk", body)
        try:
            entries = tuple((str(e["token"]), float(e["score"])) for e in obj["entries"])
            return TopKPrediction(entries)
        except (KeyError, TypeError, ValueError) as exc:
            raise OracleProtocolError(f"malformed topk response: {exc}") from exc

    def embed(self, tokens: Sequence[str]) -> SentenceVector:
        obj = self._post("/v1/embed", {"tokens": list(tokens)})
        try:
            vector = SentenceVector(tuple(float(v) for v in obj["vector"]))
            declared = int(obj["dim"])
        except (KeyError, TypeError, ValueError) as exc:
            raise OracleProtocolError(f"malformed embed response: {exc}") from exc
        if vector.dim != declared:
            raise OracleProtocolError(
                f"embed dim mismatch: vector has {vector.dim}, server declared {declared}"
            )
        if self._dim is None:
            self._dim = vector.dim
        elif vector.dim != self._dim:
            raise OracleProtocolError(
                f"embed dim changed from {self._dim} to {vector.dim} on one backend"
            )
        return vector

    def _post(self, path: str, body: dict) -> dict:
        url = self.base_url + path
        last: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                with self._semaphore:
                    resp = self._session.post(url, json=body, timeout=self.timeout)
            except requests.RequestException as exc:
                last = OracleTransportError(f"transport failure for {url}: {exc}")
                continue
            if resp.status_code == 200:
                try:
                    obj = resp.json()
                except ValueError as exc:
                    raise OracleProtocolError(f"non-JSON response from {url}") from exc
                if not isinstance(obj, dict):
                    raise OracleProtocolError(f"unexpected response shape from {url}")
                return obj
            if resp.status_code == 400:
                raise OracleProtocolError(f"server rejected request to {url}: {resp.text[:200]}")
            if resp.status_code >= 500:
                last = OracleTransportError(f"{url} returned {resp.status_code}")
                continue
            raise OracleProtocolError(f"{url} returned unexpected status {resp.status_code}")
        assert last is not None
        raise last
