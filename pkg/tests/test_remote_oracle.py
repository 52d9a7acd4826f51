import pytest

from relinduce.errors import OracleProtocolError, OracleTransportError
from relinduce.oracle.base import MaskedQuery
from relinduce.oracle.remote import RemoteOracle

from helpers import WireServer, capitals_world


def q(text):
    return MaskedQuery.from_text(text)


QUERIES = (
    "paris is the capital of [MASK] .",
    "the capital of italy is [MASK] .",
    "rome loves [MASK] .",
)


def test_remote_replies_match_the_backing_oracle(world, oracle):
    with WireServer(world) as server:
        remote = RemoteOracle(server.url)
        for text in QUERIES:
            assert remote.topk(q(text), 4) == oracle.topk(q(text), 4)
        tokens = ["paris", "is", "the", "capital", "of", "france", "."]
        assert remote.embed(tokens) == oracle.embed(tokens)
        assert remote.dim == oracle.dim == 32


def test_dim_is_learned_with_a_single_probe(world):
    with WireServer(world) as server:
        remote = RemoteOracle(server.url)
        assert remote.dim == 32
        assert [r["path"] for r in server.requests] == ["/v1/embed"]
        # second access reuses the cached width
        assert remote.dim == 32
        assert len(server.requests) == 1


def test_transient_503s_are_retried(world):
    with WireServer(world) as server:
        server.fail_503 = 2
        remote = RemoteOracle(server.url, max_retries=3, backoff=0.01)
        got = remote.topk(q(QUERIES[0]), 2)
        assert got.tokens == ("france", "germany")
        assert len(server.requests) == 3  # two 503s, then success


def test_retries_exhaust_into_transport_error(world):
    with WireServer(world) as server:
        server.fail_503 = 10
        remote = RemoteOracle(server.url, max_retries=2, backoff=0.01)
        with pytest.raises(OracleTransportError):
            remote.topk(q(QUERIES[0]), 2)
        assert len(server.requests) == 3  # initial attempt + two retries


def test_rejected_request_is_never_retried(world):
    with WireServer(world) as server:
        remote = RemoteOracle(server.url, max_retries=5, backoff=0.01)
        with pytest.raises(OracleProtocolError):
            remote.embed([])
        assert len(server.requests) == 1


def test_non_json_success_body_is_a_protocol_error(world):
    with WireServer(world) as server:
        server.send_garbage = True
        remote = RemoteOracle(server.url, max_retries=3, backoff=0.01)
        with pytest.raises(OracleProtocolError):
            remote.topk(q(QUERIES[0]), 2)
        assert len(server.requests) == 1


def test_connection_refused_is_a_transport_error(world):
    with WireServer(world) as server:
        url = server.url
    # server is closed now; the port refuses connections
    remote = RemoteOracle(url, max_retries=0, timeout=2.0)
    with pytest.raises(OracleTransportError):
        remote.topk(q(QUERIES[0]), 1)


def test_bearer_token_comes_from_the_environment(world, monkeypatch):
    monkeypatch.setenv("RELINDUCE_ORACLE_TOKEN", "sekrit")
    with WireServer(world) as server:
        RemoteOracle(server.url).topk(q(QUERIES[0]), 1)
        assert server.requests[0]["auth"] == "Bearer sekrit"


def test_no_token_sends_no_auth_header(world, monkeypatch):
    monkeypatch.delenv("RELINDUCE_ORACLE_TOKEN", raising=False)
    with WireServer(world) as server:
        RemoteOracle(server.url).topk(q(QUERIES[0]), 1)
        assert server.requests[0]["auth"] is None


def test_backend_id_normalizes_trailing_slash(world):
    remote = RemoteOracle("http://example.invalid:9/")
    assert remote.backend_id == "remote:http://example.invalid:9"
