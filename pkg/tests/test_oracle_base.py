import pytest

from relinduce.errors import InvalidQueryError, OracleProtocolError
from relinduce.oracle.base import (
    LmOracle,
    MaskedQuery,
    SentenceVector,
    TopKPrediction,
    check_k,
)


def test_masked_query_requires_exactly_one_mask():
    with pytest.raises(InvalidQueryError):
        MaskedQuery(("no", "mask", "here"))
    with pytest.raises(InvalidQueryError):
        MaskedQuery(("[MASK]", "and", "[MASK]"))


def test_masked_query_requires_two_tokens():
    with pytest.raises(InvalidQueryError):
        MaskedQuery(("[MASK]",))


def test_masked_query_mask_index_and_from_text():
    q = MaskedQuery.from_text("Paris is the capital of [MASK].")
    assert q.tokens == ("paris", "is", "the", "capital", "of", "[MASK]", ".")
    assert q.mask_index == 5


def test_topk_rejects_duplicate_tokens():
    with pytest.raises(ValueError):
        TopKPrediction((("a", 1.0), ("a", 0.5)))


def test_topk_rejects_increasing_scores():
    with pytest.raises(ValueError):
        TopKPrediction((("a", 0.5), ("b", 1.0)))


def test_topk_tokens_property_and_empty_ok():
    assert TopKPrediction((("a", 1.0), ("b", 1.0))).tokens == ("a", "b")
    assert TopKPrediction(()).entries == ()


def test_sentence_vector_validation():
    with pytest.raises(ValueError):
        SentenceVector(())
    with pytest.raises(ValueError):
        SentenceVector((0.0, float("nan")))
    assert SentenceVector((0.5, -0.5)).dim == 2


def test_check_k():
    with pytest.raises(InvalidQueryError):
        check_k(0)
    check_k(1)


class _OneShot(LmOracle):
    def __init__(self, entries):
        self._entries = entries

    @property
    def dim(self):
        return 1

    @property
    def backend_id(self):
        return "oneshot"

    def topk(self, query, k):
        return TopKPrediction(self._entries[:k])

    def embed(self, tokens):
        return SentenceVector((0.0,))


def test_probe_returns_single_best_filler():
    oracle = _OneShot((("x", 1.0), ("y", 0.5)))
    assert oracle.probe(MaskedQuery(("a", "[MASK]"))) == "x"


def test_probe_with_no_candidates_is_a_protocol_error():
    oracle = _OneShot(())
    with pytest.raises(OracleProtocolError):
        oracle.probe(MaskedQuery(("a", "[MASK]")))


def test_close_is_a_safe_default():
    _OneShot(()).close()
