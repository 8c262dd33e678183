"""Report tables, charts and the headline summary."""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

from finmcp import jsonio
from finmcp.dataset import DEFAULT_BINS, NUMERICAL_REASONING, CorpusStats, QARecord
from finmcp.errors import UnwritableOutput
from finmcp.report.aggregate import (
    FINANCIALS,
    HIGH,
    LOW,
    AggregateRow,
    Joined,
    aggregate,
    category_bucket,
    fine_type,
    quality_tier,
    reasoning_group,
    summarize,
    value_counts,
)
from finmcp.report.svg import grouped_bars

DEFAULT_SMALL_N = 30
SUMMARY_FILE = "summary.json"

METRIC_COLUMNS = ("accuracy_pct", "context_relevance_pct", "groundedness_pct")
_METRIC_FIELDS = ("mean_accuracy", "mean_context_relevance", "mean_groundedness")


@dataclass
class Table:
    name: str
    title: str
    columns: list[str]
    rows: list[list[str]]
    # chart: x-axis group labels and one value list per series
    chart_groups: list[str] = field(default_factory=list)
    chart_series: list[tuple[str, list[float | None]]] = field(default_factory=list)
    y_label: str = ""


def _pct(v: Fraction | None) -> float | None:
    return None if v is None else float(v * 100)


def _metric_table(name: str, title: str, dims: Sequence[str], rows: list[AggregateRow], floor: int) -> Table:
    cols = [*dims, "n", "n_accuracy", "n_context_relevance", "n_groundedness", *METRIC_COLUMNS, "small_n"]
    body = []
    for r in rows:
        body.append([
            *r.grouping, str(r.n), str(r.n_accuracy), str(r.n_context_relevance), str(r.n_groundedness),
            *(r.as_percent(f) for f in _METRIC_FIELDS), "yes" if r.n < floor else "",
        ])
    groups = [" / ".join(r.grouping) for r in rows]
    series = [
        ("Answer Accuracy", [_pct(r.mean_accuracy) for r in rows]),
        ("Context Relevance", [_pct(r.mean_context_relevance) for r in rows]),
        ("Response Groundedness", [_pct(r.mean_groundedness) for r in rows]),
    ]
    return Table(name, title, cols, body, groups, series, "%")


def _corpus_table(name: str, title: str, stats: CorpusStats, metric: str, label: str) -> Table:
    cols = ["category", "field", "n", label]
    body, groups = [], []
    series: dict[str, list[float | None]] = {"answer": [], "references": []}
    for cat in stats.categories():
        groups.append(cat)
        for fld in ("answer", "references"):
            st = stats.by_key.get((cat, fld))
            value = getattr(st, metric) if st else None
            body.append([cat, fld, str(st.record_count if st else 0), "" if value is None else f"{value:.6f}"])
            series[fld].append(value)
    return Table(name, title, cols, body, groups, [("Answer", series["answer"]), ("References", series["references"])], label)


def _is_fin(j: Joined) -> bool:
    return category_bucket(j) == FINANCIALS


def build_tables(joined: Sequence[Joined], stats: CorpusStats, floor: int = DEFAULT_SMALL_N) -> list[Table]:
    tables = [
        _corpus_table("density_by_category", "Average numeric density by category", stats,
                      "avg_numeric_density", "avg_numeric_density"),
        _corpus_table("forward_words_by_category", "Average forward-looking word count by category", stats,
                      "avg_forward_word_count", "avg_forward_word_count"),
        _metric_table("by_category", "Performance by question category", ["category_bucket"],
                      aggregate(joined, ["category_bucket"]), floor),
        _metric_table("by_quality_and_category", "Performance by context quality and question category",
                      ["quality_tier", "category_bucket"],
                      aggregate(joined, ["quality_tier", "category_bucket"]), floor),
        _metric_table("financials_by_quality_and_type", "Financials performance by context quality and task type",
                      ["quality_tier", "fine_type"],
                      aggregate(joined, ["quality_tier", "fine_type"], where=_is_fin), floor),
        _metric_table("financials_by_numbers_and_reasoning", "Financials performance by number occurrences and question type",
                      ["number_bin", "reasoning_group"],
                      aggregate(joined, ["number_bin", "reasoning_group"], where=_is_fin), floor),
    ]

    # high-quality count against mean accuracy, per category
    hq_rows, hq_groups, hq_counts = [], [], []
    for r in aggregate(joined, ["category"]):
        cat = r.grouping[0]
        members = [j for j in joined if j.record.category == cat]
        high = sum(1 for j in members if quality_tier(j) == HIGH)
        hq_rows.append([cat, str(r.n), str(high), r.as_percent("mean_accuracy"), "yes" if r.n < floor else ""])
        hq_groups.append(cat)
        hq_counts.append(float(high))
    tables.append(Table("high_quality_by_category", "High-quality answer count and average accuracy by category",
                        ["category", "n", "high_quality_count", "accuracy_pct", "small_n"], hq_rows,
                        hq_groups, [("High-quality count", hq_counts)], "count"))

    # answer counts per lattice value
    cats = sorted({j.record.category for j in joined})
    levels = ["0.00", "0.25", "0.50", "0.75", "1.00", "Unscored"]
    cr = value_counts(joined, "category", "context_relevance")
    rg = value_counts(joined, "category", "response_groundedness")
    count_rows = []
    for cat in cats:
        count_rows.append([cat, "context_relevance", *(str(cr.get((cat, lv), 0)) for lv in levels)])
        count_rows.append([cat, "response_groundedness", *(str(rg.get((cat, lv), 0)) for lv in levels)])
    tables.append(Table("score_counts_by_category", "Context relevance and groundedness answer counts by category",
                        ["category", "metric", *levels], count_rows, cats,
                        [(f"CR {lv}", [float(cr.get((c, lv), 0)) for c in cats]) for lv in levels[:5]],
                        "count"))

    by_numbers = _metric_table("by_category_and_numbers",
                               "Context relevance and groundedness by number occurrences and category",
                               ["category", "number_bin"], aggregate(joined, ["category", "number_bin"]), floor)
    by_numbers.chart_series = [s for s in by_numbers.chart_series if s[0] != "Answer Accuracy"]
    tables.append(by_numbers)
    return tables


# headline statistics


def _mean_entry(rows: Sequence[Joined], metric: str) -> tuple[Fraction | None, int]:
    s = summarize(rows)
    field_name = {"accuracy": "mean_accuracy", "context_relevance": "mean_context_relevance",
                  "groundedness": "mean_groundedness"}[metric]
    n_field = {"accuracy": "n_accuracy", "context_relevance": "n_context_relevance",
               "groundedness": "n_groundedness"}[metric]
    return getattr(s, field_name), getattr(s, n_field)


PUBLISHED_HEADLINES: tuple[tuple[str, str, str, float, int | None], ...] = (
    # name, subset, metric, published percent, published n
    ("accuracy_financials", "financials", "accuracy", 69.7, 990),
    ("accuracy_other", "other", "accuracy", 50.0, 4713),
    ("accuracy_financials_high_quality", "financials_high_quality", "accuracy", 73.8, 668),
    ("accuracy_other_high_quality", "other_high_quality", "accuracy", 47.6, 636),
    ("context_relevance_financials", "financials", "context_relevance", 72.5, 990),
    ("context_relevance_other", "other", "context_relevance", 20.5, 4713),
    ("groundedness_financials", "financials", "groundedness", 90.4, 990),
    ("groundedness_other", "other", "groundedness", 69.7, 4713),
    ("accuracy_numerical_reasoning_high_quality", "financials_numerical_reasoning_high_quality",
     "accuracy", 75.3, 433),
    ("accuracy_compositional_high_quality", "financials_compositional_high_quality", "accuracy", 80.4, 204),
)

PUBLISHED_COUNTS: tuple[tuple[str, int], ...] = (
    ("financials_total", 990),
    ("other_total", 4713),
    ("total", 5703),
    ("financials_high_quality", 668),
    ("other_high_quality", 636),
    ("financials_low_quality", 322),
    ("other_low_quality", 4077),
    ("financials_numerical_reasoning", 577),
    ("financials_compositional", 277),
    ("subtraction_type", 119),
    ("reasoning_flag_true", 883),
)


def _subsets(joined: Sequence[Joined]) -> dict[str, list[Joined]]:
    fin = [j for j in joined if _is_fin(j)]
    oth = [j for j in joined if not _is_fin(j)]
    return {
        "financials": fin,
        "other": oth,
        "financials_high_quality": [j for j in fin if quality_tier(j) == HIGH],
        "other_high_quality": [j for j in oth if quality_tier(j) == HIGH],
        "financials_low_quality": [j for j in fin if quality_tier(j) == LOW],
        "other_low_quality": [j for j in oth if quality_tier(j) == LOW],
        "financials_numerical_reasoning": [j for j in fin if reasoning_group(j) == NUMERICAL_REASONING],
        "financials_numerical_reasoning_high_quality": [
            j for j in fin if reasoning_group(j) == NUMERICAL_REASONING and quality_tier(j) == HIGH],
        "financials_compositional": [j for j in fin if fine_type(j) == "Compositional"],
        "financials_compositional_high_quality": [
            j for j in fin if fine_type(j) == "Compositional" and quality_tier(j) == HIGH],
    }


def build_summary(joined: Sequence[Joined], records: Sequence[QARecord], stats: CorpusStats) -> dict[str, Any]:
    subsets = _subsets(joined)
    headlines = []
    for name, subset, metric, published, published_n in PUBLISHED_HEADLINES:
        mean, n = _mean_entry(subsets[subset], metric)
        headlines.append({
            "name": name,
            "metric": metric,
            "published_percent": published,
            "published_n": published_n,
            "run_percent": None if mean is None else round(float(mean * 100), 1),
            "run_exact": None if mean is None else str(mean),
            "run_n": n,
        })
    run_counts = {
        "financials_total": len(subsets["financials"]),
        "other_total": len(subsets["other"]),
        "total": len(joined),
        "financials_high_quality": len(subsets["financials_high_quality"]),
        "other_high_quality": len(subsets["other_high_quality"]),
        "financials_low_quality": len(subsets["financials_low_quality"]),
        "other_low_quality": len(subsets["other_low_quality"]),
        "financials_numerical_reasoning": len(subsets["financials_numerical_reasoning"]),
        "financials_compositional": len(subsets["financials_compositional"]),
        "subtraction_type": sum(1 for r in records if r.question_reasoning == "Subtraction"),
        "reasoning_flag_true": sum(1 for r in records if r.reasoning),
    }
    return {
        "headlines": headlines,
        "counts": [{"name": n, "published": p, "run": run_counts[n]} for n, p in PUBLISHED_COUNTS],
        "corpus": {
            "density_rank_references": stats.ranking("references", "avg_numeric_density"),
            "forward_rank_references": stats.ranking("references", "avg_forward_word_count"),
        },
        "number_bins": list(DEFAULT_BINS.labels),
    }


# writers


def _csv(table: Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    w.writerows(table.rows)
    return buf.getvalue()


def _md(table: Table) -> str:
    lines = [f"### {table.name}: {table.title}", "",
             "| " + " | ".join(table.columns) + " |",
             "|" + "|".join("---" for _ in table.columns) + "|"]
    lines += ["| " + " | ".join(row) + " |" for row in table.rows]
    return "\n".join(lines) + "\n"


def _write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def emit_report(tables: Sequence[Table], summary: dict[str, Any], out_dir: Path | str, fmt: str = "csv") -> list[Path]:
    if fmt not in ("csv", "md"):
        raise ValueError(f"unknown format {fmt!r}")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for t in tables:
            p = out / f"{t.name}.{fmt}"
            _write(p, _csv(t) if fmt == "csv" else _md(t))
            written.append(p)
            if t.chart_groups:
                svg = out / f"{t.name}.svg"
                _write(svg, grouped_bars(f"{t.name}: {t.title}", t.chart_groups, t.chart_series, t.y_label))
                written.append(svg)
        p = out / SUMMARY_FILE
        _write(p, jsonio.dumps(summary) + "\n")
        written.append(p)
    except OSError as exc:
        raise UnwritableOutput(f"cannot write report to {out}: {exc}") from exc
    return written
