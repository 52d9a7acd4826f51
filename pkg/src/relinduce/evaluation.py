"""Per-relation evaluation protocol and dataset loading.

Pairs split 90/10 (the test share is at least one pair), templates are
mined and filtered using the training pairs only, a classifier is trained
on corrupted training pairs, and the held-out pairs plus five-to-one test
negatives are scored. A guard asserts that no selected template's
provenance pair leaks out of the training split.
"""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from .config import RunConfig, derive_seed
from .errors import DataError, LeakageError
from .filtering import select_templates
from .mining import RelationSeed, Template, WordPair, mine_sentences
from .model import RelationModel, predict_pair, train, tune_lambda
from .negatives import (
    LabeledPair,
    as_positives,
    gen_test_negatives,
    gen_train_negatives,
)
from .oracle.base import LmOracle

logger = logging.getLogger(__name__)

CANON_CATEGORIES = (
    "morphological",
    "semantic",
    "lexical",
    "commonsense",
    "encyclopedic",
    "causality",
    "attribute",
)
UNCATEGORIZED = "uncategorized"


@dataclass(frozen=True)
class RelationDataset:
    relations: dict[str, tuple[WordPair, ...]]
    categories: dict[str, str]

    def category(self, relation: str) -> str:
        return self.categories.get(relation, UNCATEGORIZED)

    def word_pools(self) -> tuple[tuple[str, ...], tuple[str, ...]]:
        heads = sorted({p.head for pairs in self.relations.values() for p in pairs})
        tails = sorted({p.tail for pairs in self.relations.values() for p in pairs})
        return tuple(heads), tuple(tails)


def _round_half_up(x: float) -> int:
    return int(x + 0.5)


def split_relation(
    pairs: Sequence[WordPair], rng_seed: int
) -> tuple[list[WordPair], list[WordPair]]:
    """Deterministic shuffle, then 90/10 split; test gets at least one pair."""
    shuffled = list(pairs)
    random.Random(rng_seed).shuffle(shuffled)
    n_test = max(1, _round_half_up(0.1 * len(shuffled)))
    return shuffled[n_test:], shuffled[:n_test]


def carve_tuning(train_pairs: Sequence[WordPair]) -> tuple[list[WordPair], list[WordPair]]:
    """First tenth of the (already shuffled) training pairs, at least one."""
    n_tune = max(1, _round_half_up(0.1 * len(train_pairs)))
    return list(train_pairs[n_tune:]), list(train_pairs[:n_tune])


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float


def compute_metrics(tp: int, fp: int, fn: int) -> Metrics:
    """Precision/recall/F1 with the zero convention on empty denominators."""
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall
        else 0.0
    )
    return Metrics(precision, recall, f1)


@dataclass
class RelationResult:
    relation: str
    category: str
    status: str  # "ok" or "unevaluable"
    notice: str | None = None
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0
    n_train: int = 0
    n_test: int = 0
    n_templates: int = 0
    lambda_threshold: float | None = None

    def to_json(self) -> dict:
        return {
            "relation": self.relation,
            "category": self.category,
            "status": self.status,
            "notice": self.notice,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "n_templates": self.n_templates,
            "lambda": self.lambda_threshold,
        }


def check_leakage(
    templates: Iterable[Template],
    train_pairs: Iterable[WordPair],
    test_pairs: Iterable[WordPair],
) -> None:
    """Every template must come from a training pair and never a test pair."""
    train_set = set(train_pairs)
    test_set = set(test_pairs)
    for t in templates:
        if t.source_pair in test_set:
            raise LeakageError(
                f"template provenance ({t.source_pair.head}, {t.source_pair.tail}) "
                f"lies in the test split"
            )
        if t.source_pair not in train_set:
            raise LeakageError(
                f"template provenance ({t.source_pair.head}, {t.source_pair.tail}) "
                f"is not a training pair"
            )


def _unevaluable(dataset: RelationDataset, relation: str, notice: str) -> RelationResult:
    logger.warning("relation %s not evaluable: %s", relation, notice)
    return RelationResult(
        relation=relation,
        category=dataset.category(relation),
        status="unevaluable",
        notice=notice,
    )


def evaluate_relation(
    dataset: RelationDataset,
    relation_name: str,
    corpus: Iterable[tuple[str, str]],
    oracle: LmOracle,
    config: RunConfig,
) -> RelationResult:
    """Run the full protocol for one relation and return its confusion counts."""
    if relation_name not in dataset.relations:
        raise DataError(f"unknown relation {relation_name!r}")
    pairs = dataset.relations[relation_name]
    if len(pairs) < 2:
        raise DataError(f"relation {relation_name!r} needs at least 2 pairs to evaluate")

    train_pairs, test_pairs = split_relation(
        pairs, derive_seed(config.seed, relation_name, "split")
    )
    tune_pairs: list[WordPair] = []
    if config.aggregation == "sum":
        train_pairs, tune_pairs = carve_tuning(train_pairs)
    if not train_pairs:
        return _unevaluable(dataset, relation_name, "no training pairs after splitting")

    seeds = RelationSeed(relation_name, tuple(train_pairs))
    templates = mine_sentences(
        corpus,
        seeds,
        max_len=config.max_len,
        max_window=config.max_window,
        presplit=config.presplit,
    )
    if not templates:
        return _unevaluable(dataset, relation_name, "no templates mined from the corpus")
    check_leakage(templates, train_pairs, test_pairs)

    if config.final_k is not None:
        scored = select_templates(
            templates,
            seeds,
            oracle,
            config.k,
            prefilter_size=config.prefilter_size,
            final_k=config.final_k,
            workers=config.workers,
        )
        selected = tuple(s.template for s in scored)
        if not selected:
            return _unevaluable(dataset, relation_name, "no templates survived filtering")
    else:
        selected = tuple(templates)
    check_leakage(selected, train_pairs, test_pairs)

    try:
        train_negatives = gen_train_negatives(
            train_pairs,
            derive_seed(config.seed, relation_name, "train_negatives"),
            cross_ratio=config.cross_ratio,
        )
    except DataError as exc:
        return _unevaluable(dataset, relation_name, str(exc))
    if not train_negatives:
        return _unevaluable(
            dataset, relation_name, "no training negatives could be generated"
        )
    train_config = config.train_config(derive_seed(config.seed, relation_name, "train"))
    head = train(
        selected, as_positives(train_pairs) + train_negatives, oracle, train_config
    )
    model = RelationModel(
        relation_name=relation_name,
        templates=selected,
        head=head,
        train_config=train_config,
        oracle_dim=oracle.dim,
    )

    if config.aggregation == "sum":
        tuning = tuning_examples(
            tune_pairs,
            set(pairs),
            derive_seed(config.seed, relation_name, "tune_negatives"),
            config.cross_ratio,
        )
        if tuning is None:
            return _unevaluable(
                dataset, relation_name,
                "sum aggregation requested but no tuning negatives possible",
            )
        model = replace(model, lambda_threshold=tune_lambda(model, tuning, oracle))

    return score_test_split(
        dataset, relation_name, model, test_pairs, oracle, config,
        n_train=len(train_pairs),
    )


def tuning_examples(
    tune_pairs: Sequence[WordPair],
    relation_positives: set[WordPair],
    rng_seed: int,
    cross_ratio: float,
) -> list[LabeledPair] | None:
    if not tune_pairs:
        return None
    if len(tune_pairs) >= 2:
        negatives = gen_train_negatives(tune_pairs, rng_seed, cross_ratio=cross_ratio)
        negatives = [n for n in negatives if n.pair not in relation_positives]
    else:
        swap = tune_pairs[0].swapped()
        negatives = (
            [LabeledPair(swap, 0, "swap")] if swap not in relation_positives else []
        )
    if not negatives:
        return None
    return as_positives(tune_pairs) + negatives


def score_test_split(
    dataset: RelationDataset,
    relation_name: str,
    model: RelationModel,
    test_pairs: Sequence[WordPair],
    oracle: LmOracle,
    config: RunConfig,
    *,
    n_train: int,
    notice: str | None = None,
) -> RelationResult:
    """Score held-out positives plus protocol negatives with the trained model."""
    test_negatives = gen_test_negatives(
        test_pairs,
        dataset.relations,
        dataset.word_pools(),
        derive_seed(config.seed, relation_name, "test_negatives"),
        relation_name=relation_name,
    )
    test_examples = as_positives(test_pairs) + test_negatives
    if config.aggregation == "sum" and model.lambda_threshold is None:
        raise DataError("sum aggregation requires a tuned lambda")
    tp = fp = fn = tn = 0
    for ex in test_examples:
        score = predict_pair(model, ex.pair, oracle)
        decision = (
            score.decision_sum if config.aggregation == "sum" else score.decision_max
        )
        if ex.label == 1:
            tp += decision
            fn += not decision
        else:
            fp += decision
            tn += not decision
    metrics = compute_metrics(tp, fp, fn)
    return RelationResult(
        relation=relation_name,
        category=dataset.category(relation_name),
        status="ok",
        notice=notice,
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
        precision=metrics.precision,
        recall=metrics.recall,
        f1=metrics.f1,
        n_train=n_train,
        n_test=len(test_pairs),
        n_templates=len(model.templates),
        lambda_threshold=model.lambda_threshold,
    )


def aggregate_results(results: Sequence[RelationResult]) -> dict:
    """Micro-average over evaluable relations: sum counts, then metrics."""
    ok = [r for r in results if r.status == "ok"]
    tp = sum(r.tp for r in ok)
    fp = sum(r.fp for r in ok)
    fn = sum(r.fn for r in ok)
    tn = sum(r.tn for r in ok)
    metrics = compute_metrics(tp, fp, fn)
    return {
        "tp": tp,
        "fp": fp,
        "fn": fn,
        "tn": tn,
        "precision": metrics.precision,
        "recall": metrics.recall,
        "f1": metrics.f1,
        "relations_evaluated": len(ok),
        "relations_skipped": len(results) - len(ok),
    }


# -- dataset loading ------------------------------------------------------


def load_dataset(
    path: str | Path,
    fmt: str,
    categories_path: str | Path | None = None,
) -> RelationDataset:
    path = Path(path)
    if fmt == "google":
        raw = _load_google(path)
    elif fmt == "bats":
        raw = _load_bats(path)
    elif fmt == "diffvec":
        raw = _load_delimited(path, sniff=True)
    elif fmt == "tsv":
        raw = _load_delimited(path, sniff=False)
    else:
        raise DataError(f"unknown dataset format {fmt!r}")

    relations: dict[str, tuple[WordPair, ...]] = {}
    dropped = 0
    for rel, entries in raw.items():
        pairs: list[WordPair] = []
        seen: set[WordPair] = set()
        for head, tail in entries:
            head, tail = head.strip().lower(), tail.strip().lower()
            if len(head.split()) != 1 or len(tail.split()) != 1 or not head or not tail:
                dropped += 1
                continue
            if head == tail:
                dropped += 1
                continue
            pair = WordPair(head, tail)
            if pair not in seen:
                seen.add(pair)
                pairs.append(pair)
        if not pairs:
            raise DataError(f"relation {rel!r} has no usable pairs after normalization")
        relations[rel] = tuple(pairs)
    if not relations:
        raise DataError(f"no relations found in {path}")
    if dropped:
        logger.warning("dropped %d multi-token or degenerate entries", dropped)

    categories: dict[str, str] = {}
    if categories_path is not None:
        categories = _load_categories(categories_path, set(relations))
    return RelationDataset(relations, categories)


def _load_google(path: Path) -> dict[str, list[tuple[str, str]]]:
    """Sections ': name' followed by 4-word analogy lines (two pairs each)."""
    out: dict[str, list[tuple[str, str]]] = {}
    current: str | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith(":"):
                current = line[1:].strip()
                out.setdefault(current, [])
                continue
            if current is None:
                raise DataError(f"{path}:{lineno}: pair line before any ': section' header")
            words = line.split()
            if len(words) == 4:
                out[current].append((words[0], words[1]))
                out[current].append((words[2], words[3]))
            elif len(words) == 2:
                out[current].append((words[0], words[1]))
            else:
                raise DataError(f"{path}:{lineno}: expected 2 or 4 words, got {len(words)}")
    return out


def _load_bats(path: Path) -> dict[str, list[tuple[str, str]]]:
    """One file per relation; 'head  answer1/answer2' expands per answer."""
    files = sorted(path.rglob("*.txt")) if path.is_dir() else [path]
    if not files:
        raise DataError(f"no .txt relation files under {path}")
    out: dict[str, list[tuple[str, str]]] = {}
    for f in files:
        entries: list[tuple[str, str]] = []
        with open(f, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise DataError(f"{f}:{lineno}: expected 'head answers', got {line!r}")
                for answer in parts[1].split("/"):
                    if answer:
                        entries.append((parts[0], answer))
        out[f.stem] = entries
    return out


def _load_delimited(path: Path, *, sniff: bool) -> dict[str, list[tuple[str, str]]]:
    """relation<sep>head<sep>tail rows; comma or tab when sniffing, else tab."""
    out: dict[str, list[tuple[str, str]]] = {}
    with open(path, encoding="utf-8") as fh:
        lines = fh.readlines()
    sep = "\t"
    if sniff and lines:
        first_data = next((l for l in lines if l.strip()), "")
        if "\t" not in first_data and "," in first_data:
            sep = ","
    for lineno, line in enumerate(lines, 1):
        line = line.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(sep)]
        if len(parts) != 3:
            raise DataError(f"{path}:{lineno}: expected 3 {sep!r}-separated fields")
        if lineno == 1 and sniff and parts[0].lower() in ("relation", "rel", "category"):
            continue
        rel, head, tail = parts
        out.setdefault(rel.lower(), []).append((head, tail))
    return out


def _load_categories(path: str | Path, known_relations: set[str]) -> dict[str, str]:
    categories: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected relation<TAB>category")
            rel, category = parts[0].strip().lower(), parts[1].strip().lower()
            if category not in CANON_CATEGORIES:
                logger.warning("%s:%d: unknown category %r kept as-is", path, lineno, category)
            if rel not in known_relations:
                logger.warning("%s:%d: category for unknown relation %r", path, lineno, rel)
            categories[rel] = category
    return categories
