"""Shared test doubles: counting/stub oracles and a wire-protocol server."""
from __future__ import annotations

import json
import math
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Sequence

from relinduce.oracle.base import (
    LmOracle,
    MaskedQuery,
    SentenceVector,
    TopKPrediction,
)
from relinduce.oracle.fixture import FixtureOracle, FixtureWorld
from relinduce.text import MASK_MARKER


class CountingOracle(LmOracle):
    """Pass-through wrapper that counts topk and embed calls."""

    def __init__(self, inner: LmOracle):
        self.inner = inner
        self.topk_calls = 0
        self.embed_calls = 0

    @property
    def dim(self) -> int:
        return self.inner.dim

    @property
    def backend_id(self) -> str:
        return self.inner.backend_id

    def topk(self, query: MaskedQuery, k: int) -> TopKPrediction:
        self.topk_calls += 1
        return self.inner.topk(query, k)

    def embed(self, tokens: Sequence[str]) -> SentenceVector:
        self.embed_calls += 1
        return self.inner.embed(tokens)


class PlantedEmbedOracle(LmOracle):
    """Embeds to a planted logit: dim 2, first entry raised to a configured
    value per head word, second always zero. With head weights (1, 0) and
    bias 0 the per-template probability is exactly sigma(planted)."""

    def __init__(self, logits_by_head: dict[str, float], default: float = 0.0):
        self.logits_by_head = logits_by_head
        self.default = default

    @property
    def dim(self) -> int:
        return 2

    @property
    def backend_id(self) -> str:
        return "planted"

    def topk(self, query: MaskedQuery, k: int) -> TopKPrediction:
        raise NotImplementedError("embedding-only stub")

    def embed(self, tokens: Sequence[str]) -> SentenceVector:
        z = self.default
        for tok in tokens:
            if tok in self.logits_by_head:
                z = self.logits_by_head[tok]
                break
        return SentenceVector((z, 0.0))


def capitals_world(noise_rate: float = 0.0, seed: int = 42) -> FixtureWorld:
    """Three-fact world used across the oracle and filtering tests."""
    return FixtureWorld(
        facts=(
            ("cap", "paris", "france"),
            ("cap", "rome", "italy"),
            ("cap", "berlin", "germany"),
        ),
        type_vocab={
            "cap": (("berlin", "paris", "rome"), ("france", "germany", "italy"))
        },
        patterns={
            "cap": (
                ("[HEAD]", "is", "the", "capital", "of", "[TAIL]", "."),
                ("the", "capital", "of", "[TAIL]", "is", "[HEAD]", "."),
            )
        },
        noise_rate=noise_rate,
        seed=seed,
    )


def two_relation_bundle(root, n: int = 25) -> None:
    """On-disk world/corpus/dataset with two cleanly separable relations."""
    m_heads = tuple(f"h{i}" for i in range(n))
    m_tails = tuple(f"t{i}" for i in range(n))
    r_heads = tuple(f"x{i}" for i in range(n))
    r_tails = tuple(f"y{i}" for i in range(n))
    world = FixtureWorld(
        facts=tuple(("m", h, t) for h, t in zip(m_heads, m_tails))
        + tuple(("r", h, t) for h, t in zip(r_heads, r_tails)),
        type_vocab={
            "m": (tuple(sorted(m_heads)), tuple(sorted(m_tails))),
            "r": (tuple(sorted(r_heads)), tuple(sorted(r_tails))),
        },
        patterns={
            "m": (("[HEAD]", "maps", "to", "[TAIL]", "."),),
            "r": (("[HEAD]", "links", "to", "[TAIL]", "."),),
        },
        noise_rate=0.0,
        seed=11,
    )
    corpus = root / "corpus"
    corpus.mkdir(parents=True)
    (corpus / "maps.txt").write_text(
        "\n".join(f"h{i} maps to t{i}." for i in range(n)) + "\n", encoding="utf-8"
    )
    (corpus / "links.txt").write_text(
        "\n".join(f"x{i} links to y{i}." for i in range(n)) + "\n", encoding="utf-8"
    )
    rows = [f"m\th{i}\tt{i}" for i in range(n)]
    rows += [f"r\tx{i}\ty{i}" for i in range(n)]
    (root / "dataset.tsv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    (root / "categories.tsv").write_text("m\tsemantic\nr\tlexical\n", encoding="utf-8")
    world.save(root / "world.json")
    conf = "\n".join(
        [
            "corpus = corpus",
            "dataset = dataset.tsv",
            "categories = categories.tsv",
            "fixture = world.json",
            "out = out",
            "k = 3",
            "final_k = 2",
            "seed = 0",
            "figures = false",
            "# small heads train best with a large step and extra passes",
            "learning_rate = 0.1",
            "epochs = 20",
            "batch_size = 16",
        ]
    )
    (root / "run.conf").write_text(conf + "\n", encoding="utf-8")


class _WireHandler(BaseHTTPRequestHandler):
    """Speaks the oracle wire protocol over a FixtureOracle.

    The owning server may inject failures: a countdown of 503 responses,
    one-shot malformed JSON, or a wrong status code.
    """

    def log_message(self, *args):
        pass

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length", 0))
        return json.loads(self.rfile.read(length))

    def _send(self, status: int, payload) -> None:
        body = json.dumps(payload).encode("utf-8") if payload is not None else b""
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        server: WireServer = self.server  # type: ignore[assignment]
        server.requests.append(
            {"path": self.path, "auth": self.headers.get("Authorization")}
        )
        if server.fail_503 > 0:
            server.fail_503 -= 1
            self._send(503, {"error": "busy"})
            return
        if server.send_garbage:
            server.send_garbage = False
            body = b"this is not json"
            self.send_response(200)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
            return
        try:
            body = self._read_body()
        except (ValueError, KeyError):
            self._send(400, {"error": "malformed body"})
            return
        try:
            if self.path == "/v1/topk":
                tokens = [str(t) for t in body["tokens"]]
                mask_index = int(body["mask_index"])
                k = int(body["k"])
                if not (0 <= mask_index < len(tokens)) or tokens[mask_index] != MASK_MARKER:
                    self._send(400, {"error": "mask_index does not point at the mask"})
                    return
                pred = server.oracle.topk(MaskedQuery(tuple(tokens)), k)
                self._send(
                    200,
                    {"entries": [{"token": t, "score": s} for t, s in pred.entries]},
                )
            elif self.path == "/v1/embed":
                tokens = [str(t) for t in body["tokens"]]
                if not tokens:
                    self._send(400, {"error": "empty token sequence"})
                    return
                vec = server.oracle.embed(tokens)
                self._send(200, {"vector": list(vec.values), "dim": vec.dim})
            else:
                self._send(404, {"error": "unknown path"})
        except Exception as exc:
            self._send(400, {"error": str(exc)})


class WireServer(ThreadingHTTPServer):
    """In-process HTTP server for remote-client tests. Use as context manager."""

    def __init__(self, world: FixtureWorld):
        super().__init__(("127.0.0.1", 0), _WireHandler)
        self.oracle = FixtureOracle(world)
        self.requests: list[dict] = []
        self.fail_503 = 0
        self.send_garbage = False
        # tight poll so shutdown() does not stall each test by half a second
        self._thread = threading.Thread(
            target=lambda: self.serve_forever(poll_interval=0.02), daemon=True
        )

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.server_address[1]}"

    def __enter__(self) -> "WireServer":
        self._thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()
        self.server_close()
