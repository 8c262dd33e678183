"""Grouped means of evaluation scores over dataset labels.

Means are exact ``Fraction`` values over the non-null scores of a group, so
two aggregations of the same inputs compare equal without tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from finmcp.dataset import DEFAULT_BINS, REASONING_GROUPS, REASONING_TYPES, NumberBins, QARecord, number_occurrence_bin
from finmcp.errors import JoinMismatch
from finmcp.evaluator import EvalResult

FINANCIALS = "Financials"
OTHER = "Other"
HIGH = "High"
LOW = "Low"
UNSCORED = "Unscored"


@dataclass(frozen=True)
class Joined:
    record: QARecord
    result: EvalResult


def join(results: Sequence[EvalResult], records: Sequence[QARecord]) -> list[Joined]:
    """Pair results with records by question id, in dataset order."""
    by_id = {r.question_id: r for r in results}
    if len(by_id) != len(results):
        raise JoinMismatch("duplicate question ids among eval results")
    rec_ids = {r.id for r in records}
    only_evals = sorted(set(by_id) - rec_ids)
    only_records = sorted(rec_ids - set(by_id))
    if only_evals or only_records:
        raise JoinMismatch(
            f"ids only in evals: {only_evals[:5]}{'...' if len(only_evals) > 5 else ''}; "
            f"ids only in dataset: {only_records[:5]}{'...' if len(only_records) > 5 else ''}"
        )
    return [Joined(r, by_id[r.id]) for r in records]


# grouping dimensions


def category_bucket(j: Joined) -> str:
    return FINANCIALS if j.record.category == FINANCIALS else OTHER


def category(j: Joined) -> str:
    return j.record.category


def quality_tier(j: Joined) -> str:
    hq = j.result.high_quality
    return UNSCORED if hq is None else (HIGH if hq else LOW)


def reasoning_group(j: Joined) -> str:
    return j.record.reasoning_group


def fine_type(j: Joined) -> str:
    return j.record.question_reasoning


def number_bin(j: Joined, bins: NumberBins = DEFAULT_BINS) -> str:
    return number_occurrence_bin(j.record.answer, bins)


DIMENSIONS: dict[str, Callable[[Joined], str]] = {
    "category_bucket": category_bucket,
    "category": category,
    "quality_tier": quality_tier,
    "reasoning_group": reasoning_group,
    "fine_type": fine_type,
    "number_bin": number_bin,
}

_ORDER: dict[str, tuple[str, ...]] = {
    "category_bucket": (FINANCIALS, OTHER),
    "quality_tier": (HIGH, LOW, UNSCORED),
    "reasoning_group": REASONING_GROUPS,
    "fine_type": REASONING_TYPES,
    "number_bin": DEFAULT_BINS.labels,
}


def _sort_key(dims: Sequence[str], key: tuple[str, ...]) -> tuple:
    out = []
    for dim, value in zip(dims, key):
        order = _ORDER.get(dim, ())
        out.append((order.index(value) if value in order else len(order), value))
    return tuple(out)


@dataclass(frozen=True)
class AggregateRow:
    grouping: tuple[str, ...]
    n: int
    n_accuracy: int
    n_context_relevance: int
    n_groundedness: int
    mean_accuracy: Fraction | None
    mean_context_relevance: Fraction | None
    mean_groundedness: Fraction | None

    def as_percent(self, field_name: str) -> str:
        v = getattr(self, field_name)
        return "" if v is None else f"{float(v) * 100:.1f}"


def _mean(values: list[Fraction]) -> Fraction | None:
    return sum(values, Fraction(0)) / len(values) if values else None


def _frac(v: float | int) -> Fraction:
    return Fraction(v)


def summarize(members: Sequence[Joined], grouping: tuple[str, ...] = ()) -> AggregateRow:
    # placeholder ground truths keep their relevance/groundedness but not accuracy
    acc = [_frac(j.result.answer_accuracy) for j in members
           if j.result.answer_accuracy is not None and not j.result.excluded]
    cr = [_frac(j.result.context_relevance) for j in members if j.result.context_relevance is not None]
    rg = [_frac(j.result.response_groundedness) for j in members if j.result.response_groundedness is not None]
    return AggregateRow(grouping, len(members), len(acc), len(cr), len(rg), _mean(acc), _mean(cr), _mean(rg))


def aggregate(
    joined: Sequence[Joined],
    dims: Sequence[str],
    where: Callable[[Joined], bool] | None = None,
) -> list[AggregateRow]:
    """One row per observed combination of ``dims``, in a stable display order."""
    fns = [DIMENSIONS[d] for d in dims]
    groups: dict[tuple[str, ...], list[Joined]] = {}
    for j in joined:
        if where is not None and not where(j):
            continue
        groups.setdefault(tuple(f(j) for f in fns), []).append(j)
    return [summarize(groups[k], k) for k in sorted(groups, key=lambda k: _sort_key(dims, k))]


def value_counts(joined: Sequence[Joined], dim: str, metric: str) -> dict[tuple[str, str], int]:
    """Count records per (group, metric value); unscored values count under ``Unscored``."""
    fn = DIMENSIONS[dim]
    out: dict[tuple[str, str], int] = {}
    for j in joined:
        v = getattr(j.result, metric)
        label = UNSCORED if v is None else f"{float(v):.2f}"
        key = (fn(j), label)
        out[key] = out.get(key, 0) + 1
    return out
