"""Command-line interface.

One subcommand per pipeline stage plus interactive helpers:

    mine      split the dataset, scan the corpus, write templates
    filter    score mined templates and keep the best K
    train     build per-relation classifiers from filtered templates
    eval      score held-out pairs with trained models, write the report
    run       all of the above in one go
    classify  score a single (head, tail) pair with a trained model
    links     rank tail candidates for a head word
    probe     ask the oracle to fill one masked blank

Settings come from an optional config file (`--config`), overridden by
flags. Exit codes: 0 success, 1 configuration error, 2 data error,
3 oracle error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable

from . import __version__
from .config import RunConfig, parse_config_file
from .errors import (
    ConfigError,
    DataError,
    OracleError,
    RelinduceError,
    StageError,
    TrainingDivergedError,
)
from .evaluation import load_dataset
from .mining import WordPair
from .model import RelationModel, load_model, predict_links, predict_pair
from .oracle.base import MaskedQuery
from .pipeline import (
    load_selected,
    load_splits,
    load_stage_templates,
    run_pipeline,
    stage_evaluate,
    stage_filter,
    stage_mine,
    stage_report,
    stage_split,
    stage_train,
)
from .report import render_json, render_table
from .text import join_tokens, tokenize

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; that slot belongs to data
    # errors here, so usage problems are rethrown as configuration errors.
    def error(self, message: str):
        raise ConfigError(message)


def _parse_top(value: str) -> int | None:
    if value.lower() in ("all", "none"):
        return None
    try:
        return int(value)
    except ValueError as exc:
        raise ConfigError(f"--top expects an integer or 'all', got {value!r}") from exc


_ABSENT = object()  # --top None means "all", so absence needs its own marker

_FLAG_FIELDS = (
    "corpus", "dataset", "dataset_format", "categories", "out", "fixture",
    "remote", "k", "prefilter_size", "aggregation", "seed",
    "workers", "max_len", "max_window", "cross_ratio",
)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="key = value settings file")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--corpus", metavar="PATH")
    parser.add_argument("--dataset", metavar="PATH")
    parser.add_argument(
        "--dataset-format", dest="dataset_format",
        choices=("google", "bats", "diffvec", "tsv"),
    )
    parser.add_argument("--categories", metavar="PATH")
    parser.add_argument("--out", metavar="DIR")
    parser.add_argument("--fixture", metavar="WORLD_JSON")
    parser.add_argument("--remote", metavar="URL")
    parser.add_argument("--k", type=int)
    parser.add_argument("--prefilter", dest="prefilter_size", type=int)
    parser.add_argument(
        "--top", dest="final_k", type=_parse_top, default=_ABSENT, metavar="K|all"
    )
    parser.add_argument("--aggregation", choices=("max", "sum"))
    parser.add_argument("--seed", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--max-len", dest="max_len", type=int)
    parser.add_argument("--max-window", dest="max_window", type=int)
    parser.add_argument("--cross-ratio", dest="cross_ratio", type=float)
    parser.add_argument("--presplit", action="store_const", const=True, default=None)
    parser.add_argument("--no-cache", action="store_true")
    parser.add_argument("--no-figures", action="store_true")


def assemble_config(args: argparse.Namespace, need: frozenset[str]) -> RunConfig:
    values = parse_config_file(args.config) if args.config else {}
    for field_name in _FLAG_FIELDS:
        flag_value = getattr(args, field_name, None)
        if flag_value is not None:
            if field_name in ("corpus", "dataset", "categories", "out", "fixture"):
                flag_value = Path(flag_value)
            values[field_name] = flag_value
    if args.presplit is not None:
        values["presplit"] = args.presplit
    if args.no_cache:
        values["cache"] = False
    if args.no_figures:
        values["figures"] = False
    if args.final_k is not _ABSENT:
        values["final_k"] = args.final_k

    for required in sorted(need):
        if values.get(required) is None:
            raise ConfigError(
                f"missing {required!r}: pass --{required.replace('_', '-')} "
                f"or set it in a --config file"
            )
    for optional in ("corpus", "dataset"):
        values.setdefault(optional, Path("."))
    if values.get("out") is None:
        values["out"] = Path(".")
        values.setdefault("cache", False)  # no run directory, so no cache file
    config = RunConfig(**values)
    config.validate()
    return config


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _emit(args: argparse.Namespace, payload: dict, human: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(human)


def _write_manifest(config: RunConfig) -> None:
    from .config import build_manifest

    config.out.mkdir(parents=True, exist_ok=True)
    (config.out / "manifest.json").write_text(
        json.dumps(build_manifest(config), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


# -- stage subcommands -------------------------------------------------------


def cmd_mine(args: argparse.Namespace) -> int:
    config = assemble_config(args, need=frozenset({"corpus", "dataset", "out"}))
    _write_manifest(config)
    dataset = load_dataset(config.dataset, config.dataset_format, config.categories)
    notices: dict[str, str] = {}
    splits = stage_split(config, dataset)
    mined = stage_mine(config, splits, notices)
    counts = {rel: len(ts) for rel, ts in mined.items()}
    human = "\n".join(
        [f"{rel}: {n} templates" for rel, n in counts.items()]
        + [f"{rel}: skipped ({note})" for rel, note in notices.items()]
    )
    _emit(args, {"templates": counts, "notices": notices}, human or "nothing mined")
    return 0


def cmd_filter(args: argparse.Namespace) -> int:
    config = assemble_config(args, need=frozenset({"out"}))
    if config.final_k is None:
        raise ConfigError("filter needs --top K; use --top all only on train/run")
    splits = load_splits(config.out)
    mined = load_stage_templates(config.out, list(splits))
    oracle = _make_oracle(config)
    notices: dict[str, str] = {}
    try:
        selected = stage_filter(config, splits, mined, oracle, notices)
    finally:
        oracle.close()
    counts = {rel: len(ts) for rel, ts in selected.items()}
    human = "\n".join(
        [f"{rel}: kept {n} of {len(mined[rel])}" for rel, n in counts.items()]
        + [f"{rel}: skipped ({note})" for rel, note in notices.items()]
    )
    _emit(args, {"selected": counts, "notices": notices}, human or "nothing to filter")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = assemble_config(args, need=frozenset({"dataset", "out"}))
    dataset = load_dataset(config.dataset, config.dataset_format, config.categories)
    splits = load_splits(config.out)
    selected = load_selected(config, list(splits))
    oracle = _make_oracle(config)
    notices: dict[str, str] = {}
    try:
        models = stage_train(config, dataset, splits, selected, oracle, notices)
    finally:
        oracle.close()
    summary = {
        rel: {"templates": len(m.templates), "lambda": m.lambda_threshold}
        for rel, m in models.items()
    }
    human = "\n".join(
        [
            f"{rel}: trained on {len(m.templates)} templates"
            + (f", lambda={m.lambda_threshold:.4f}" if m.lambda_threshold is not None else "")
            for rel, m in models.items()
        ]
        + [f"{rel}: skipped ({note})" for rel, note in notices.items()]
    )
    _emit(args, {"models": summary, "notices": notices}, human or "nothing trained")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    config = assemble_config(args, need=frozenset({"dataset", "out"}))
    dataset = load_dataset(config.dataset, config.dataset_format, config.categories)
    splits = load_splits(config.out)
    from .pipeline import load_models

    models = load_models(config.out, list(dataset.relations))
    oracle = _make_oracle(config)
    try:
        results = stage_evaluate(config, dataset, splits, models, oracle, {})
    finally:
        oracle.close()
    stage_report(config, results)
    _emit(args, json.loads(render_json(results)), render_table(results))
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = assemble_config(
        args, need=frozenset({"corpus", "dataset", "out"})
    )
    results = run_pipeline(config)
    _emit(args, json.loads(render_json(results)), render_table(results))
    if not args.json:
        print(f"artifacts written to {config.out}")
    return 0


# -- interactive subcommands -------------------------------------------------


def _make_oracle(config: RunConfig):
    from .config import make_oracle

    return make_oracle(config)


def _load_cli_models(out: Path) -> dict[str, RelationModel]:
    models_dir = out / "models"
    if not models_dir.is_dir():
        raise DataError(f"{models_dir} not found; run 'relinduce train' or 'run' first")
    models: dict[str, RelationModel] = {}
    for path in sorted(models_dir.glob("*.json")):
        model = load_model(path)
        models[model.relation_name] = model
    if not models:
        raise DataError(f"no models under {models_dir}; run 'relinduce train' first")
    return models


def _pick_model(models: dict[str, RelationModel], relation: str | None) -> RelationModel:
    if relation is not None:
        if relation not in models:
            raise DataError(
                f"no model for relation {relation!r}; have: {', '.join(sorted(models))}"
            )
        return models[relation]
    if len(models) == 1:
        return next(iter(models.values()))
    raise ConfigError(
        f"several models available ({', '.join(sorted(models))}); pick one with --relation"
    )


def cmd_classify(args: argparse.Namespace) -> int:
    config = assemble_config(args, need=frozenset({"out"}))
    model = _pick_model(_load_cli_models(config.out), args.relation)
    oracle = _make_oracle(config)
    try:
        score = predict_pair(model, WordPair(args.head.lower(), args.tail.lower()), oracle)
    finally:
        oracle.close()
    payload = {
        "relation": model.relation_name,
        "head": score.pair.head,
        "tail": score.pair.tail,
        "per_template": [
            {"template": join_tokens(t.tokens), "probability": p}
            for t, p in zip(model.templates, score.per_template)
        ],
        "max_rule": score.decision_max,
        "sum_rule": score.decision_sum,
        "lambda": model.lambda_threshold,
    }
    lines = [f"relation: {model.relation_name}", f"pair: ({score.pair.head}, {score.pair.tail})"]
    for t, p in zip(model.templates, score.per_template):
        lines.append(f"  {p:8.4f}  {join_tokens(t.tokens)}")
    lines.append(f"max rule: {'positive' if score.decision_max else 'negative'}")
    if score.decision_sum is None:
        lines.append("sum rule: not calibrated (train with aggregation = sum)")
    else:
        lines.append(
            f"sum rule: {'positive' if score.decision_sum else 'negative'}"
            f" (lambda={model.lambda_threshold:.4f})"
        )
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_links(args: argparse.Namespace) -> int:
    config = assemble_config(args, need=frozenset({"out"}))
    model = _pick_model(_load_cli_models(config.out), args.relation)
    oracle = _make_oracle(config)
    try:
        ranked = predict_links(model, args.head.lower(), oracle, config.k)
    finally:
        oracle.close()
    limited = ranked[: args.limit]
    payload = {
        "relation": model.relation_name,
        "head": args.head.lower(),
        "candidates": [{"token": tok, "votes": v} for tok, v in limited],
    }
    human = "\n".join(f"{tok}\t{v:.4f}" for tok, v in limited) or "no candidates"
    _emit(args, payload, human)
    return 0


def cmd_probe(args: argparse.Namespace) -> int:
    config = assemble_config(args, need=frozenset())
    oracle = _make_oracle(config)
    query = MaskedQuery(tuple(tokenize(args.text)))
    try:
        prediction = oracle.topk(query, config.k)
    finally:
        oracle.close()
    payload = {
        "query": list(query.tokens),
        "entries": [{"token": t, "score": s} for t, s in prediction.entries],
    }
    human = "\n".join(f"{t}\t{s:.4f}" for t, s in prediction.entries) or "no predictions"
    _emit(args, payload, human)
    return 0


# -- entry point --------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="relinduce", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"relinduce {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add(name: str, fn: Callable[[argparse.Namespace], int], help_text: str):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        p.set_defaults(fn=fn)
        return p

    add("mine", cmd_mine, "split the dataset and mine templates from the corpus")
    add("filter", cmd_filter, "score templates and keep the best K per relation")
    add("train", cmd_train, "train per-relation classifiers")
    add("eval", cmd_eval, "evaluate trained models and write the report")
    add("run", cmd_run, "full pipeline: mine, filter, train, eval, report")

    p = add("classify", cmd_classify, "score one (head, tail) pair")
    p.add_argument("head")
    p.add_argument("tail")
    p.add_argument("--relation")

    p = add("links", cmd_links, "rank tail candidates for a head word")
    p.add_argument("head")
    p.add_argument("--relation")
    p.add_argument("--limit", type=int, default=10)

    p = add("probe", cmd_probe, "fill one [MASK] blank with the oracle")
    p.add_argument("text", metavar="MASKED_SENTENCE")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "fn", None) is None:
            parser.print_help()
            return 1
        _configure_logging(args.verbose)
        return args.fn(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc.cause)
    except RelinduceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, (ConfigError, TrainingDivergedError)):
        return 1
    if isinstance(exc, OracleError):
        return 3
    if isinstance(exc, DataError):
        return 2
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
