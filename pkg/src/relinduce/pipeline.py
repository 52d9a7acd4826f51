"""File-artifact pipeline behind the command-line interface.

Each stage writes its output under the run directory and reads only its
predecessor's files, so any stage can be re-run or inspected on its own
and `run` is exactly the stages chained in order. A stage failure
surfaces as StageError naming the stage; everything already written is
left on disk.

Run directory layout:

    manifest.json            config, input hashes, library versions
    splits.json              per-relation train/tune/test pairs
    templates/<rel>.jsonl    mined templates (training pairs only)
    scored/<rel>.jsonl       filtered templates with both scores
    examples/<rel>.train.jsonl, <rel>.test.jsonl
    models/<rel>.json
    report.json, report.txt, report.csv, *.png
"""
from __future__ import annotations

import json
import logging
import re
from dataclasses import replace
from pathlib import Path
from typing import Callable, Sequence, TypeVar

from .config import RunConfig, build_manifest, derive_seed, make_oracle
from .errors import DataError, RelinduceError, StageError
from .evaluation import (
    RelationDataset,
    RelationResult,
    carve_tuning,
    check_leakage,
    load_dataset,
    score_test_split,
    split_relation,
    tuning_examples,
)
from .filtering import read_scored, select_templates, write_scored
from .mining import (
    CorpusReader,
    RelationSeed,
    Template,
    WordPair,
    mine_sentences,
    read_templates,
    write_templates,
)
from .model import RelationModel, load_model, save_model, train, tune_lambda
from .negatives import as_positives, gen_test_negatives, gen_train_negatives, write_labeled
from .oracle.base import LmOracle
from .report import write_report

logger = logging.getLogger(__name__)

T = TypeVar("T")

Splits = dict[str, dict[str, list[WordPair]]]


def _slug(relation: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", relation) or "_"


def relation_path(directory: Path, relation: str, suffix: str) -> Path:
    return directory / f"{_slug(relation)}{suffix}"


def _run_stage(name: str, fn: Callable[..., T], *args, **kwargs) -> T:
    try:
        return fn(*args, **kwargs)
    except RelinduceError as exc:
        raise StageError(name, exc) from exc


# -- split ----------------------------------------------------------------


def stage_split(config: RunConfig, dataset: RelationDataset) -> Splits:
    slugs = {_slug(rel) for rel in dataset.relations}
    if len(slugs) != len(dataset.relations):
        raise DataError("relation names collide once sanitized for filenames")
    splits: Splits = {}
    for rel, pairs in dataset.relations.items():
        train_pairs, test_pairs = split_relation(
            pairs, derive_seed(config.seed, rel, "split")
        )
        tune_pairs: list[WordPair] = []
        if config.aggregation == "sum":
            train_pairs, tune_pairs = carve_tuning(train_pairs)
        splits[rel] = {"train": train_pairs, "tune": tune_pairs, "test": test_pairs}
    payload = {
        rel: {part: [[p.head, p.tail] for p in ps] for part, ps in parts.items()}
        for rel, parts in splits.items()
    }
    (config.out / "splits.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return splits


def load_splits(out: Path) -> Splits:
    path = out / "splits.json"
    if not path.exists():
        raise DataError(f"{path} not found; run the 'mine' stage (or 'run') first")
    obj = json.loads(path.read_text(encoding="utf-8"))
    return {
        rel: {part: [WordPair(h, t) for h, t in ps] for part, ps in parts.items()}
        for rel, parts in obj.items()
    }


# -- mine -----------------------------------------------------------------


def stage_mine(
    config: RunConfig, splits: Splits, notices: dict[str, str]
) -> dict[str, list[Template]]:
    templates_dir = config.out / "templates"
    templates_dir.mkdir(parents=True, exist_ok=True)
    corpus = CorpusReader(config.corpus)
    mined: dict[str, list[Template]] = {}
    for rel, parts in splits.items():
        if not parts["train"]:
            notices[rel] = "no training pairs after splitting"
            continue
        seeds = RelationSeed(rel, tuple(parts["train"]))
        templates = mine_sentences(
            corpus,
            seeds,
            max_len=config.max_len,
            max_window=config.max_window,
            presplit=config.presplit,
        )
        check_leakage(templates, parts["train"], parts["test"])
        write_templates(relation_path(templates_dir, rel, ".jsonl"), templates)
        if not templates:
            notices[rel] = "no templates mined from the corpus"
            continue
        mined[rel] = templates
    return mined


def load_stage_templates(out: Path, relations: Sequence[str]) -> dict[str, list[Template]]:
    templates_dir = out / "templates"
    if not templates_dir.is_dir():
        raise DataError(f"{templates_dir} not found; run 'mine' first")
    loaded: dict[str, list[Template]] = {}
    for rel in relations:
        path = relation_path(templates_dir, rel, ".jsonl")
        if path.exists():
            templates = read_templates(path)
            if templates:
                loaded[rel] = templates
    if not loaded:
        raise DataError(f"no mined templates under {templates_dir}; run 'mine' first")
    return loaded


# -- filter ---------------------------------------------------------------


def stage_filter(
    config: RunConfig,
    splits: Splits,
    mined: dict[str, list[Template]],
    oracle: LmOracle,
    notices: dict[str, str],
) -> dict[str, tuple[Template, ...]]:
    selected: dict[str, tuple[Template, ...]] = {}
    if config.final_k is None:
        # No filtering requested: every mined template goes to training.
        for rel, templates in mined.items():
            selected[rel] = tuple(templates)
        return selected
    scored_dir = config.out / "scored"
    scored_dir.mkdir(parents=True, exist_ok=True)
    for rel, templates in mined.items():
        seeds = RelationSeed(rel, tuple(splits[rel]["train"]))
        scored = select_templates(
            templates,
            seeds,
            oracle,
            config.k,
            prefilter_size=config.prefilter_size,
            final_k=config.final_k,
            workers=config.workers,
        )
        write_scored(relation_path(scored_dir, rel, ".jsonl"), scored)
        if not scored:
            notices[rel] = "no templates survived filtering"
            continue
        kept = tuple(s.template for s in scored)
        check_leakage(kept, splits[rel]["train"], splits[rel]["test"])
        selected[rel] = kept
    return selected


def load_selected(
    config: RunConfig, relations: Sequence[str]
) -> dict[str, tuple[Template, ...]]:
    """Templates the train stage should use: scored picks, or all mined ones."""
    if config.final_k is None:
        mined = load_stage_templates(config.out, relations)
        return {rel: tuple(ts) for rel, ts in mined.items()}
    scored_dir = config.out / "scored"
    if not scored_dir.is_dir():
        raise DataError(f"{scored_dir} not found; run 'filter' first")
    selected: dict[str, tuple[Template, ...]] = {}
    for rel in relations:
        path = relation_path(scored_dir, rel, ".jsonl")
        if path.exists():
            scored = read_scored(path)
            if scored:
                selected[rel] = tuple(s.template for s in scored)
    if not selected:
        raise DataError(f"no scored templates under {scored_dir}; run 'filter' first")
    return selected


# -- train ----------------------------------------------------------------


def stage_train(
    config: RunConfig,
    dataset: RelationDataset,
    splits: Splits,
    selected: dict[str, tuple[Template, ...]],
    oracle: LmOracle,
    notices: dict[str, str],
) -> dict[str, RelationModel]:
    models_dir = config.out / "models"
    examples_dir = config.out / "examples"
    models_dir.mkdir(parents=True, exist_ok=True)
    examples_dir.mkdir(parents=True, exist_ok=True)
    models: dict[str, RelationModel] = {}
    for rel, templates in selected.items():
        train_pairs = splits[rel]["train"]
        try:
            negatives = gen_train_negatives(
                train_pairs,
                derive_seed(config.seed, rel, "train_negatives"),
                cross_ratio=config.cross_ratio,
            )
        except DataError as exc:
            notices[rel] = str(exc)
            continue
        if not negatives:
            notices[rel] = "no training negatives could be generated"
            continue
        examples = as_positives(train_pairs) + negatives
        write_labeled(relation_path(examples_dir, rel, ".train.jsonl"), examples)
        train_config = config.train_config(derive_seed(config.seed, rel, "train"))
        head = train(templates, examples, oracle, train_config)
        model = RelationModel(
            relation_name=rel,
            templates=templates,
            head=head,
            train_config=train_config,
            oracle_dim=oracle.dim,
        )
        if config.aggregation == "sum":
            tuning = tuning_examples(
                splits[rel]["tune"],
                set(dataset.relations[rel]),
                derive_seed(config.seed, rel, "tune_negatives"),
                config.cross_ratio,
            )
            if tuning is None:
                notices[rel] = "sum aggregation requested but no tuning negatives possible"
                continue
            model = replace(model, lambda_threshold=tune_lambda(model, tuning, oracle))
        save_model(model, relation_path(models_dir, rel, ".json"))
        models[rel] = model
    return models


def load_models(out: Path, relations: Sequence[str]) -> dict[str, RelationModel]:
    models_dir = out / "models"
    if not models_dir.is_dir():
        raise DataError(f"{models_dir} not found; run 'train' first")
    models: dict[str, RelationModel] = {}
    for rel in relations:
        path = relation_path(models_dir, rel, ".json")
        if path.exists():
            models[rel] = load_model(path)
    if not models:
        raise DataError(f"no trained models under {models_dir}; run 'train' first")
    return models


# -- evaluate and report ----------------------------------------------------


def stage_evaluate(
    config: RunConfig,
    dataset: RelationDataset,
    splits: Splits,
    models: dict[str, RelationModel],
    oracle: LmOracle,
    notices: dict[str, str],
) -> list[RelationResult]:
    examples_dir = config.out / "examples"
    examples_dir.mkdir(parents=True, exist_ok=True)
    results: list[RelationResult] = []
    for rel in dataset.relations:
        if rel in models:
            parts = splits[rel]
            check_leakage(models[rel].templates, parts["train"], parts["test"])
            test_negatives = gen_test_negatives(
                parts["test"],
                dataset.relations,
                dataset.word_pools(),
                derive_seed(config.seed, rel, "test_negatives"),
                relation_name=rel,
            )
            write_labeled(
                relation_path(examples_dir, rel, ".test.jsonl"),
                as_positives(parts["test"]) + test_negatives,
            )
            results.append(
                score_test_split(
                    dataset, rel, models[rel], parts["test"], oracle, config,
                    n_train=len(parts["train"]),
                )
            )
        else:
            notice = notices.get(rel, "no trained model for this relation")
            results.append(
                RelationResult(
                    relation=rel,
                    category=dataset.category(rel),
                    status="unevaluable",
                    notice=notice,
                )
            )
    return results


def stage_report(config: RunConfig, results: list[RelationResult]) -> dict:
    written = write_report(results, config.out)
    if not config.figures:
        for name in written["figures"]:
            (config.out / name).unlink(missing_ok=True)
        written["figures"] = []
    return written


# -- orchestration ----------------------------------------------------------


def run_pipeline(config: RunConfig) -> list[RelationResult]:
    """Split, mine, filter, train, evaluate, report; returns the results."""
    config.validate()
    config.out.mkdir(parents=True, exist_ok=True)
    manifest = build_manifest(config)
    (config.out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    dataset = load_dataset(config.dataset, config.dataset_format, config.categories)
    oracle = make_oracle(config)
    notices: dict[str, str] = {}

    try:
        splits = _run_stage("split", stage_split, config, dataset)
        mined = _run_stage("mine", stage_mine, config, splits, notices)
        selected = _run_stage(
            "filter", stage_filter, config, splits, mined, oracle, notices
        )
        models = _run_stage(
            "train", stage_train, config, dataset, splits, selected, oracle, notices
        )
        results = _run_stage(
            "evaluate", stage_evaluate, config, dataset, splits, models, oracle, notices
        )
        _run_stage("report", stage_report, config, results)
    finally:
        oracle.close()
    return results
