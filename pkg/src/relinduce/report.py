"""Rendering of evaluation results: text table, JSON, CSV, and figures."""
from __future__ import annotations

import csv
import json
from collections import defaultdict
from pathlib import Path
from typing import Sequence

from .evaluation import RelationResult, aggregate_results, compute_metrics


def _pct(x: float) -> str:
    return f"{100.0 * x:.1f}"


def category_breakdown(results: Sequence[RelationResult]) -> dict[str, dict]:
    """Micro-averaged counts and metrics per category, evaluable relations only."""
    buckets: dict[str, list[RelationResult]] = defaultdict(list)
    for r in results:
        if r.status == "ok":
            buckets[r.category].append(r)
    out: dict[str, dict] = {}
    for category in sorted(buckets):
        rows = buckets[category]
        tp = sum(r.tp for r in rows)
        fp = sum(r.fp for r in rows)
        fn = sum(r.fn for r in rows)
        m = compute_metrics(tp, fp, fn)
        out[category] = {
            "relations": len(rows),
            "tp": tp,
            "fp": fp,
            "fn": fn,
            "precision": m.precision,
            "recall": m.recall,
            "f1": m.f1,
        }
    return out


def render_json(results: Sequence[RelationResult]) -> str:
    payload = {
        "relations": [r.to_json() for r in results],
        "categories": category_breakdown(results),
        "aggregate": aggregate_results(results),
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def render_table(results: Sequence[RelationResult]) -> str:
    """Plain-text table grouped by category, percentages to one decimal."""
    lines: list[str] = []
    header = f"{'relation':<28} {'P%':>6} {'R%':>6} {'F1%':>6} {'tmpl':>5} {'test':>5}"
    by_category: dict[str, list[RelationResult]] = defaultdict(list)
    for r in results:
        by_category[r.category].append(r)
    for category in sorted(by_category):
        lines.append(f"[{category}]")
        lines.append(header)
        for r in sorted(by_category[category], key=lambda r: r.relation):
            if r.status != "ok":
                lines.append(f"{r.relation:<28} skipped: {r.notice}")
                continue
            lines.append(
                f"{r.relation:<28} {_pct(r.precision):>6} {_pct(r.recall):>6} "
                f"{_pct(r.f1):>6} {r.n_templates:>5} {r.n_test:>5}"
            )
        lines.append("")
    agg = aggregate_results(results)
    lines.append(
        f"{'micro average':<28} {_pct(agg['precision']):>6} {_pct(agg['recall']):>6} "
        f"{_pct(agg['f1']):>6}"
    )
    lines.append(
        f"relations evaluated: {agg['relations_evaluated']}"
        f", skipped: {agg['relations_skipped']}"
    )
    return "\n".join(lines) + "\n"


def write_csv(results: Sequence[RelationResult], path: str | Path) -> None:
    fields = [
        "relation", "category", "status", "tp", "fp", "fn", "tn",
        "precision", "recall", "f1", "n_train", "n_test", "n_templates",
        "lambda", "notice",
    ]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for r in results:
            row = r.to_json()
            writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in fields})


def render_figures(results: Sequence[RelationResult], out_dir: str | Path) -> list[Path]:
    """Save summary charts next to the delimited output; returns written paths."""
    # Figure objects are driven directly so no interactive backend is touched.
    from matplotlib.figure import Figure

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    ok = sorted(
        (r for r in results if r.status == "ok"),
        key=lambda r: (-r.f1, r.relation),
    )
    if ok:
        height = max(2.5, 0.35 * len(ok) + 1.2)
        fig = Figure(figsize=(8, height))
        ax = fig.subplots()
        names = [r.relation for r in ok][::-1]
        scores = [100.0 * r.f1 for r in ok][::-1]
        ax.barh(names, scores, color="#4878a8")
        ax.set_xlabel("F1 (%)")
        ax.set_xlim(0, 100)
        ax.set_title("F1 by relation")
        fig.tight_layout()
        path = out_dir / "f1_by_relation.png"
        fig.savefig(path, dpi=120)
        written.append(path)

    breakdown = category_breakdown(results)
    if breakdown:
        fig = Figure(figsize=(max(4.0, 1.6 * len(breakdown) + 1.5), 4))
        ax = fig.subplots()
        categories = list(breakdown)
        width = 0.27
        xs = range(len(categories))
        for offset, (label, key) in enumerate(
            [("precision", "precision"), ("recall", "recall"), ("F1", "f1")]
        ):
            ax.bar(
                [x + (offset - 1) * width for x in xs],
                [100.0 * breakdown[c][key] for c in categories],
                width,
                label=label,
            )
        ax.set_xticks(list(xs))
        ax.set_xticklabels(categories, rotation=20, ha="right")
        ax.set_ylabel("%")
        ax.set_ylim(0, 100)
        ax.set_title("Micro-averaged metrics by category")
        ax.legend()
        fig.tight_layout()
        path = out_dir / "metrics_by_category.png"
        fig.savefig(path, dpi=120)
        written.append(path)

    return written


def write_report(results: Sequence[RelationResult], out_dir: str | Path) -> dict[str, list[str]]:
    """Write report.json, report.txt, report.csv, and figures under out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(render_json(results), encoding="utf-8")
    (out_dir / "report.txt").write_text(render_table(results), encoding="utf-8")
    write_csv(results, out_dir / "report.csv")
    figures = render_figures(results, out_dir)
    return {
        "files": ["report.json", "report.txt", "report.csv"],
        "figures": [f.name for f in figures],
    }
