import csv
import json

from relinduce.evaluation import RelationResult
from relinduce.report import (
    category_breakdown,
    render_figures,
    render_json,
    render_table,
    write_csv,
    write_report,
)


def ok(relation, category, tp, fp, fn, tn, **extra):
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return RelationResult(
        relation, category, "ok",
        tp=tp, fp=fp, fn=fn, tn=tn,
        precision=precision, recall=recall, f1=f1,
        n_train=20, n_test=tp + fn, n_templates=2, **extra,
    )


RESULTS = [
    ok("cap", "semantic", tp=3, fp=1, fn=0, tn=14),
    ok("cur", "encyclopedic", tp=2, fp=0, fn=1, tn=15, lambda_threshold=1.25),
    ok("lang", "semantic", tp=1, fp=0, fn=2, tn=15),
    RelationResult("dead", "semantic", "unevaluable", notice="no templates mined"),
]


def test_category_breakdown_micro_averages_within_category():
    got = category_breakdown(RESULTS)
    assert list(got) == ["encyclopedic", "semantic"]  # sorted, skipped excluded
    semantic = got["semantic"]
    assert (semantic["tp"], semantic["fp"], semantic["fn"]) == (4, 1, 2)
    assert semantic["relations"] == 2
    assert semantic["precision"] == 4 / 5
    assert semantic["recall"] == 4 / 6


def test_json_report_shape_and_stability():
    text = render_json(RESULTS)
    assert render_json(RESULTS) == text
    payload = json.loads(text)
    assert set(payload) == {"relations", "categories", "aggregate"}
    assert [r["relation"] for r in payload["relations"]] == ["cap", "cur", "lang", "dead"]
    assert payload["relations"][1]["lambda"] == 1.25
    assert payload["aggregate"]["relations_skipped"] == 1


def test_text_table_lists_relations_under_categories():
    table = render_table(RESULTS)
    assert table.endswith("\n")
    lines = table.splitlines()
    assert lines[0] == "[encyclopedic]"
    assert any(line.startswith("cap") and "100.0" in line for line in lines)
    assert any("skipped: no templates mined" in line for line in lines)
    assert any(line.startswith("micro average") for line in lines)
    assert "relations evaluated: 3, skipped: 1" in table


def test_percentages_are_rendered_to_one_decimal():
    table = render_table([ok("lone", "semantic", tp=2, fp=1, fn=0, tn=5)])
    # precision 2/3 prints as 66.7
    assert "66.7" in table


def test_csv_fields_and_none_handling(tmp_path):
    path = tmp_path / "report.csv"
    write_csv(RESULTS, path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    assert rows[0]["relation"] == "cap"
    assert rows[0]["lambda"] == ""  # None renders as empty, not "None"
    assert rows[1]["lambda"] == "1.25"
    assert rows[3]["status"] == "unevaluable"
    assert rows[3]["notice"] == "no templates mined"


def test_figures_are_written_and_reproducible(tmp_path):
    a = render_figures(RESULTS, tmp_path / "a")
    b = render_figures(RESULTS, tmp_path / "b")
    assert [p.name for p in a] == ["f1_by_relation.png", "metrics_by_category.png"]
    for pa, pb in zip(a, b):
        assert pa.stat().st_size > 1000
        assert pa.read_bytes() == pb.read_bytes()  # same pixels, same bytes


def test_no_figures_without_evaluable_results(tmp_path):
    skipped = [RelationResult("dead", "semantic", "unevaluable", notice="x")]
    assert render_figures(skipped, tmp_path) == []


def test_write_report_bundle(tmp_path):
    manifest = write_report(RESULTS, tmp_path)
    assert manifest["files"] == ["report.json", "report.txt", "report.csv"]
    assert manifest["figures"] == ["f1_by_relation.png", "metrics_by_category.png"]
    for name in manifest["files"] + manifest["figures"]:
        assert (tmp_path / name).exists()
