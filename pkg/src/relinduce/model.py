"""Per-relation binary classifier over oracle sentence embeddings.

Each (example pair, template) combination is embedded by instantiating the
template with the pair; a single logistic unit sigma(w.v + b) scores it.
Training minimizes binary cross-entropy with an adaptive-moment optimizer
using decoupled weight decay and a linear warmup-then-decay schedule.
Parameters start at zero, so epochs=0 is exactly the identity head.

A pair's per-template probabilities aggregate two ways:

* max rule: positive iff max(p) > 1 - min(p)        (strict)
* sum rule: positive iff sum(p) >= lambda            (non-strict)

lambda is tuned by exhaustive search over achievable cut points on held-out
examples, ties resolved toward the smallest lambda.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, OracleError, TrainingDivergedError
from .mining import Template, WordPair, instantiate_tokens
from .negatives import LabeledPair
from .oracle.base import LmOracle, MaskedQuery
from .text import MASK_MARKER

logger = logging.getLogger(__name__)

_BETA1, _BETA2, _EPS = 0.9, 0.999, 1e-8
_PROB_CLIP = 1e-12  # keeps per-template probabilities inside the open interval


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    weight_decay: float = 0.01
    warmup_fraction: float = 0.1
    epochs: int = 5
    batch_size: int = 32
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise DataError("learning_rate must be positive")
        if self.weight_decay < 0:
            raise DataError("weight_decay must be non-negative")
        if not 0.0 <= self.warmup_fraction <= 1.0:
            raise DataError("warmup_fraction must lie in [0, 1]")
        if self.epochs < 0 or self.batch_size < 1:
            raise DataError("epochs must be >= 0 and batch_size >= 1")

    def to_json(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "weight_decay": self.weight_decay,
            "warmup_fraction": self.warmup_fraction,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TrainConfig":
        return cls(
            learning_rate=float(obj["learning_rate"]),
            weight_decay=float(obj["weight_decay"]),
            warmup_fraction=float(obj["warmup_fraction"]),
            epochs=int(obj["epochs"]),
            batch_size=int(obj["batch_size"]),
            rng_seed=int(obj["rng_seed"]),
        )


@dataclass(frozen=True)
class ClassifierHead:
    weights: tuple[float, ...]
    bias: float

    @property
    def dim(self) -> int:
        return len(self.weights)

    def probability(self, vector: Sequence[float]) -> float:
        z = float(np.dot(np.asarray(self.weights), np.asarray(vector)) + self.bias)
        p = _sigmoid(z)
        return float(min(max(p, _PROB_CLIP), 1.0 - _PROB_CLIP))


@dataclass(frozen=True)
class RelationModel:
    relation_name: str
    templates: tuple[Template, ...]
    head: ClassifierHead
    train_config: TrainConfig
    oracle_dim: int
    lambda_threshold: float | None = None


@dataclass(frozen=True)
class PairScore:
    pair: WordPair
    per_template: tuple[float, ...]
    decision_max: bool
    decision_sum: bool | None


def _sigmoid(z: float | np.ndarray) -> float | np.ndarray:
    return np.where(
        np.asarray(z) >= 0,
        1.0 / (1.0 + np.exp(-np.clip(z, 0, None))),
        np.exp(np.clip(z, None, 0)) / (1.0 + np.exp(np.clip(z, None, 0))),
    )


def bce_loss(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray) -> float:
    """Mean binary cross-entropy of sigma(Xw + b) against y."""
    z = X @ w + b
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def bce_gradient(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, float]:
    """Analytic gradient of bce_loss with respect to (w, b)."""
    residual = (np.asarray(_sigmoid(X @ w + b)) - y) / len(y)
    return X.T @ residual, float(residual.sum())


def schedule_multiplier(step: int, total_steps: int, warmup_fraction: float) -> float:
    """Linear warmup to 1 over the warmup span, then linear decay to 0.

    `step` is 0-based and indexes the update about to be applied.
    """
    warmup = int(total_steps * warmup_fraction)
    if step < warmup:
        return (step + 1) / warmup
    if total_steps == warmup:
        return 1.0
    return max(0.0, (total_steps - step) / (total_steps - warmup))


def build_design_matrix(
    templates: Sequence[Template],
    examples: Sequence[LabeledPair],
    oracle: LmOracle,
) -> tuple[np.ndarray, np.ndarray]:
    """One row per (example, template) combination, example-major order."""
    rows = []
    labels = []
    for ex in examples:
        for t in templates:
            rows.append(oracle.embed(instantiate_tokens(t, ex.pair)).values)
            labels.append(float(ex.label))
    return np.asarray(rows, dtype=np.float64), np.asarray(labels, dtype=np.float64)


def train(
    templates: Sequence[Template],
    examples: Sequence[LabeledPair],
    oracle: LmOracle,
    config: TrainConfig,
) -> ClassifierHead:
    if not templates:
        raise DataError("cannot train on zero templates")
    labels = {ex.label for ex in examples}
    if labels != {0, 1}:
        raise DataError(f"training set needs both labels, got {sorted(labels)}")

    X, y = build_design_matrix(templates, examples, oracle)
    n, dim = X.shape
    w = np.zeros(dim)
    b = 0.0
    m_w = np.zeros(dim)
    v_w = np.zeros(dim)
    m_b = v_b = 0.0
    batches_per_epoch = math.ceil(n / config.batch_size)
    total_steps = config.epochs * batches_per_epoch
    rng = np.random.default_rng(config.rng_seed)

    step = 0
    for _ in range(config.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            g_w, g_b = bce_gradient(w, b, X[idx], y[idx])
            if not (np.all(np.isfinite(g_w)) and math.isfinite(g_b)):
                raise TrainingDivergedError(
                    "non-finite gradient",
                    step=step,
                    learning_rate=config.learning_rate,
                )
            lr = config.learning_rate * schedule_multiplier(
                step, total_steps, config.warmup_fraction
            )
            step += 1
            m_w = _BETA1 * m_w + (1 - _BETA1) * g_w
            v_w = _BETA2 * v_w + (1 - _BETA2) * g_w**2
            m_b = _BETA1 * m_b + (1 - _BETA1) * g_b
            v_b = _BETA2 * v_b + (1 - _BETA2) * g_b**2
            bc1 = 1 - _BETA1**step
            bc2 = 1 - _BETA2**step
            # decoupled weight decay: applied to weights directly, not via the loss.
            # overflow to inf is fine here; the finiteness guard below turns it
            # into a diagnosable divergence error instead of a warning
            with np.errstate(over="ignore"):
                w = w - lr * (
                    (m_w / bc1) / (np.sqrt(v_w / bc2) + _EPS) + config.weight_decay * w
                )
            b = b - lr * ((m_b / bc1) / (math.sqrt(v_b / bc2) + _EPS))
            if not (np.all(np.isfinite(w)) and math.isfinite(b)):
                raise TrainingDivergedError(
                    "non-finite parameters after update",
                    step=step,
                    learning_rate=lr,
                )
    return ClassifierHead(tuple(w.tolist()), float(b))


def aggregate_max(scores: Sequence[float]) -> bool:
    """Positive iff the strongest template vote beats the complement of the weakest."""
    if not scores:
        raise DataError("aggregate_max needs at least one score")
    return max(scores) > 1.0 - min(scores)


def aggregate_sum(scores: Sequence[float], lambda_threshold: float) -> bool:
    """Positive iff the summed votes reach the tuned threshold."""
    if not scores:
        raise DataError("aggregate_sum needs at least one score")
    return sum(scores) >= lambda_threshold


def predict_pair(model: RelationModel, pair: WordPair, oracle: LmOracle) -> PairScore:
    scores: list[float] = []
    failures = 0
    for t in model.templates:
        try:
            vector = oracle.embed(instantiate_tokens(t, pair))
        except OracleError as exc:
            failures += 1
            logger.warning("skipping template after oracle failure: %s", exc)
            continue
        scores.append(model.head.probability(vector.values))
    if not scores:
        raise OracleError(
            f"all {failures} template(s) failed the oracle; no prediction possible"
        )
    decision_sum = (
        aggregate_sum(scores, model.lambda_threshold)
        if model.lambda_threshold is not None
        else None
    )
    return PairScore(pair, tuple(scores), aggregate_max(scores), decision_sum)


def _f1_from_decisions(labels: Sequence[int], decisions: Sequence[bool]) -> float:
    tp = sum(1 for l, d in zip(labels, decisions) if l == 1 and d)
    fp = sum(1 for l, d in zip(labels, decisions) if l == 0 and d)
    fn = sum(1 for l, d in zip(labels, decisions) if l == 1 and not d)
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def tune_lambda(
    model: RelationModel,
    tuning_examples: Sequence[LabeledPair],
    oracle: LmOracle,
) -> float:
    """Best-F1 threshold over every achievable cut point of the summed votes."""
    labels = {ex.label for ex in tuning_examples}
    if labels != {0, 1}:
        raise DataError("lambda tuning needs both labels in the tuning set")
    sums = []
    for ex in tuning_examples:
        score = predict_pair(model, ex.pair, oracle)
        sums.append(sum(score.per_template))
    unique = sorted(set(sums))
    grid: list[float] = []
    for i, v in enumerate(unique):
        grid.append(v)
        if i + 1 < len(unique):
            grid.append((v + unique[i + 1]) / 2.0)
    y = [ex.label for ex in tuning_examples]
    best_lambda = grid[0]
    best_f1 = -1.0
    for lam in grid:  # ascending, so ties keep the smallest lambda
        f1 = _f1_from_decisions(y, [s >= lam for s in sums])
        if f1 > best_f1:
            best_f1 = f1
            best_lambda = lam
    return best_lambda


def predict_links(
    model: RelationModel, head_word: str, oracle: LmOracle, k: int
) -> list[tuple[str, float]]:
    """Tail candidates for a head word, ranked by summed reciprocal rank."""
    from .filtering import query_tail_masked

    votes: dict[str, float] = {}
    failures = 0
    for t in model.templates:
        try:
            prediction = oracle.topk(query_tail_masked(t, head_word), k)
        except OracleError as exc:
            failures += 1
            logger.warning("skipping template during link prediction: %s", exc)
            continue
        for rank, token in enumerate(prediction.tokens):
            votes[token] = votes.get(token, 0.0) + 1.0 / (1 + rank)
    if failures and not votes:
        logger.warning("link prediction got no oracle responses at all")
    return sorted(votes.items(), key=lambda kv: (-kv[1], kv[0]))


def save_model(model: RelationModel, path: str | Path) -> None:
    obj = {
        "relation": model.relation_name,
        "templates": [t.to_json() for t in model.templates],
        "weights": list(model.head.weights),
        "bias": model.head.bias,
        "lambda": model.lambda_threshold,
        "train_config": model.train_config.to_json(),
        "oracle_dim": model.oracle_dim,
    }
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def load_model(path: str | Path) -> RelationModel:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        lam = obj["lambda"]
        return RelationModel(
            relation_name=str(obj["relation"]),
            templates=tuple(Template.from_json(t) for t in obj["templates"]),
            head=ClassifierHead(
                tuple(float(v) for v in obj["weights"]), float(obj["bias"])
            ),
            train_config=TrainConfig.from_json(obj["train_config"]),
            oracle_dim=int(obj["oracle_dim"]),
            lambda_threshold=None if lam is None else float(lam),
        )
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DataError(f"cannot load model from {path}: {exc}") from exc
