"""FinDER-style dataset preprocessing and corpus statistics.

``preprocess`` applies, in order:

1. relabel ``Subtract`` as ``Subtraction`` in the reasoning-type column;
2. fill empty answers with a fixed placeholder;
3. flag rows 8dc5ccdd and 2dba4bde as reasoning questions;
4. derive the coarse reasoning group from the fine type;
5. rename ``type``/``text`` to ``question_reasoning``/``question``.

No row is ever dropped, and running it on its own output changes nothing.
"""

from __future__ import annotations

import csv
import functools
import importlib.resources
import json
import math
import re
import statistics
import unicodedata
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from finmcp import jsonio
from finmcp.errors import DatasetError, DuplicateId, EmptyLexicon, MissingColumn

PLACEHOLDER_ANSWER = "No ground truth provided by the authors."
REASONING_FLIP_IDS = ("8dc5ccdd", "2dba4bde")
CARRIAGE_MARKER = "_X000D_"

INFORMATION_EXTRACTION = "Information extraction"
LOGICAL_REASONING = "Logical reasoning"
NUMERICAL_REASONING = "Numerical reasoning"
NUMERICAL_TYPES = ("Addition", "Compositional", "Division", "Multiplication", "Subtraction")
REASONING_TYPES = (INFORMATION_EXTRACTION, LOGICAL_REASONING, *NUMERICAL_TYPES)
REASONING_GROUPS = (INFORMATION_EXTRACTION, LOGICAL_REASONING, NUMERICAL_REASONING)

# canonical field -> accepted source columns, raw FinDER names first
DEFAULT_COLUMNS: dict[str, tuple[str, ...]] = {
    "id": ("_id", "id"),
    "question": ("text", "question"),
    "answer": ("answer",),
    "references": ("references",),
    "category": ("category",),
    "question_reasoning": ("type", "question_reasoning"),
    "reasoning": ("reasoning",),
}


@dataclass(frozen=True)
class QARecord:
    id: str
    question: str
    answer: str
    references: tuple[str, ...]
    category: str
    question_reasoning: str
    reasoning: bool
    reasoning_group: str

    @property
    def placeholder_answer(self) -> bool:
        return self.answer == PLACEHOLDER_ANSWER

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["references"] = list(self.references)
        return d

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "QARecord":
        return cls(
            id=str(data["id"]),
            question=str(data["question"]),
            answer=str(data["answer"]),
            references=tuple(data.get("references") or ()),
            category=str(data["category"]),
            question_reasoning=str(data["question_reasoning"]),
            reasoning=bool(data["reasoning"]),
            reasoning_group=str(data["reasoning_group"]),
        )


def reasoning_group(question_reasoning: str) -> str:
    if question_reasoning in NUMERICAL_TYPES:
        return NUMERICAL_REASONING
    if question_reasoning in (INFORMATION_EXTRACTION, LOGICAL_REASONING):
        return question_reasoning
    raise DatasetError(f"unknown reasoning type {question_reasoning!r}")


@dataclass
class Reconciliation:
    total: int = 0
    step_changes: dict[str, int] = field(default_factory=dict)
    type_counts: dict[str, int] = field(default_factory=dict)
    group_counts: dict[str, int] = field(default_factory=dict)
    category_counts: dict[str, int] = field(default_factory=dict)
    reasoning_true: int = 0
    placeholder_answers: int = 0

    def to_text(self) -> str:
        lines = [f"records: {self.total} (no rows dropped)", "", "changes per step:"]
        for step, n in self.step_changes.items():
            lines.append(f"  {step}: {n}")
        lines += ["", f"reasoning=True: {self.reasoning_true}",
                  f"placeholder answers: {self.placeholder_answers}", "", "question_reasoning:"]
        lines += [f"  {k}: {v}" for k, v in sorted(self.type_counts.items())]
        lines += ["", "reasoning_group:"]
        lines += [f"  {k}: {v}" for k, v in sorted(self.group_counts.items())]
        lines += ["", "category:"]
        lines += [f"  {k}: {v}" for k, v in sorted(self.category_counts.items())]
        financials = self.category_counts.get("Financials", 0)
        lines += ["", f"Financials: {financials}", f"non-Financials: {self.total - financials}"]
        return "\n".join(lines) + "\n"


def _is_missing(value: Any) -> bool:
    if value is None:
        return True
    if isinstance(value, float) and math.isnan(value):
        return True
    return isinstance(value, str) and not value.strip()


def _as_bool(value: Any, row_id: str) -> bool:
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        value = value.item()  # numpy scalar from parquet
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)) and value in (0, 1):
        return bool(value)
    if isinstance(value, str) and value.strip().lower() in ("true", "false", "1", "0"):
        return value.strip().lower() in ("true", "1")
    raise DatasetError(f"row {row_id}: reasoning value {value!r} is not boolean")


def _as_references(value: Any) -> tuple[str, ...]:
    if _is_missing(value):
        return ()
    if isinstance(value, str):
        text = value.strip()
        if text.startswith("["):
            try:
                parsed = json.loads(text)
            except ValueError:
                return (value,)
            return tuple(str(v) for v in parsed)
        return (value,)
    return tuple(str(v) for v in value)


def _resolve_columns(row: Mapping[str, Any], columns: Mapping[str, Sequence[str]]) -> dict[str, str]:
    out = {}
    for canon, candidates in columns.items():
        for c in candidates:
            if c in row:
                out[canon] = c
                break
        else:
            if canon != "answer":  # answers may be absent altogether; step 2 fills them
                raise MissingColumn(f"no column for {canon!r} (tried {', '.join(candidates)})")
    return out


def preprocess_with_report(
    rows: Iterable[Mapping[str, Any]],
    columns: Mapping[str, Sequence[str]] = DEFAULT_COLUMNS,
) -> tuple[list[QARecord], Reconciliation]:
    rows = list(rows)
    report = Reconciliation(total=len(rows))
    changes = Counter({"step 1 Subtract->Subtraction": 0, "step 2 filled answers": 0,
                       "step 3 reasoning flipped": 0})
    seen: set[str] = set()
    records = []
    for row in rows:
        cols = _resolve_columns(row, columns)
        rid = str(row[cols["id"]])
        if rid in seen:
            raise DuplicateId(f"duplicate id {rid!r}")
        seen.add(rid)
        qtype = str(row[cols["question_reasoning"]]).strip()
        if qtype == "Subtract":
            qtype = "Subtraction"
            changes["step 1 Subtract->Subtraction"] += 1
        answer = row.get(cols.get("answer", ""), None)
        if _is_missing(answer):
            answer = PLACEHOLDER_ANSWER
            changes["step 2 filled answers"] += 1
        reasoning = _as_bool(row[cols["reasoning"]], rid)
        if rid in REASONING_FLIP_IDS and not reasoning:
            reasoning = True
            changes["step 3 reasoning flipped"] += 1
        records.append(QARecord(
            id=rid,
            question=str(row[cols["question"]]),
            answer=str(answer),
            references=_as_references(row[cols["references"]]),
            category=str(row[cols["category"]]),
            question_reasoning=qtype,
            reasoning=reasoning,
            reasoning_group=reasoning_group(qtype),
        ))
    report.step_changes = dict(changes)
    report.type_counts = dict(Counter(r.question_reasoning for r in records))
    report.group_counts = dict(Counter(r.reasoning_group for r in records))
    report.category_counts = dict(Counter(r.category for r in records))
    report.reasoning_true = sum(r.reasoning for r in records)
    report.placeholder_answers = sum(r.placeholder_answer for r in records)
    return records, report


def preprocess(rows: Iterable[Mapping[str, Any]], columns: Mapping[str, Sequence[str]] = DEFAULT_COLUMNS) -> list[QARecord]:
    return preprocess_with_report(rows, columns)[0]


# io


def load_rows(path: Path | str) -> list[dict[str, Any]]:
    """Read a dataset file; format is picked by suffix."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".jsonl":
        with path.open(encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]
    if suffix == ".json":
        data = json.loads(path.read_text(encoding="utf-8"))
        return list(data["records"] if isinstance(data, dict) else data)
    if suffix == ".csv":
        with path.open(encoding="utf-8", newline="") as fh:
            return list(csv.DictReader(fh))
    if suffix == ".parquet":
        import pandas as pd  # optional: only the full FinDER release ships as parquet

        frame = pd.read_parquet(path)
        rows = frame.to_dict(orient="records")
        for row in rows:
            refs = row.get("references")
            if refs is not None and not isinstance(refs, (str, list)):
                row["references"] = list(refs)
        return rows
    raise DatasetError(f"unsupported dataset format {suffix!r}")


def load_records(path: Path | str) -> list[QARecord]:
    """Load raw or already-preprocessed data; preprocessing is idempotent."""
    return preprocess(load_rows(path))


def write_records(path: Path | str, records: Iterable[QARecord]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for r in records:
            fh.write(jsonio.dumps(r.to_dict()) + "\n")


# text statistics


def strip_carriage_markers(text: str) -> str:
    # repeat: removing one marker can splice a new one together ("_X000_X000D_D_")
    while CARRIAGE_MARKER in text:
        text = text.replace(CARRIAGE_MARKER, "")
    return text


def _edge_char(ch: str) -> bool:
    return unicodedata.category(ch)[0] in "PS"


def strip_edges(token: str) -> str:
    """Drop leading/trailing punctuation and symbols, currency signs included."""
    start, end = 0, len(token)
    while start < end and _edge_char(token[start]):
        start += 1
    while end > start and _edge_char(token[end - 1]):
        end -= 1
    return token[start:end]


def is_number_token(token: str) -> bool:
    return any(ch.isdecimal() for ch in strip_edges(token))


def numeric_counts(text: str) -> tuple[int, int]:
    """(number tokens, all whitespace-delimited tokens)."""
    tokens = text.split()
    return sum(is_number_token(t) for t in tokens), len(tokens)


def numeric_density(text: str) -> float:
    numbers, total = numeric_counts(text)
    return numbers / total if total else 0.0


def default_lexicon_path() -> Path:
    return Path(str(importlib.resources.files("finmcp") / "data" / "forward_lexicon.txt"))


def load_lexicon(path: Path | str | None = None) -> tuple[str, ...]:
    path = Path(path) if path is not None else default_lexicon_path()
    words = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            words.append(line)
    if not words:
        raise EmptyLexicon(f"lexicon {path} has no entries")
    return tuple(dict.fromkeys(words))


@functools.lru_cache(maxsize=32)
def _lexicon_regex(lexicon: tuple[str, ...]) -> re.Pattern[str]:
    alternatives = sorted(lexicon, key=len, reverse=True)
    words = "|".join(re.escape(w).replace(r"\ ", r"\s+") for w in alternatives)
    return re.compile(rf"(?<!\w)(?:{words})(?!\w)", re.IGNORECASE)


def forward_word_count(text: str, lexicon: Sequence[str] | None = None) -> int:
    lex = tuple(lexicon) if lexicon is not None else load_lexicon()
    if not lex:
        raise EmptyLexicon("lexicon has no entries")
    return len(_lexicon_regex(tuple(w.lower() for w in lex)).findall(text))


@dataclass(frozen=True)
class NumberBins:
    """Inclusive count ranges; ``None`` as an upper edge means open-ended."""

    edges: tuple[tuple[int, int | None], ...] = ((0, 0), (1, 10), (11, 50), (51, 100), (101, None))

    @property
    def labels(self) -> tuple[str, ...]:
        out = []
        for lo, hi in self.edges:
            if hi is None:
                out.append(f"{lo}+")
            elif lo == hi:
                out.append(str(lo))
            else:
                out.append(f"{lo}–{hi}")
        return tuple(out)

    def label_for(self, count: int) -> str:
        for (lo, hi), label in zip(self.edges, self.labels):
            if count >= lo and (hi is None or count <= hi):
                return label
        raise ValueError(f"count {count} falls outside every bin")


DEFAULT_BINS = NumberBins()


def number_occurrence_bin(answer_text: str, bins: NumberBins = DEFAULT_BINS) -> str:
    return bins.label_for(numeric_counts(answer_text)[0])


# corpus statistics

STAT_FIELDS = ("question", "answer", "references")


def field_text(record: QARecord, name: str) -> str:
    if name == "question":
        return record.question
    if name == "answer":
        # markers carry digits and would inflate answer counts
        return strip_carriage_markers(record.answer)
    if name == "references":
        return "\n".join(record.references)
    raise KeyError(name)


@dataclass(frozen=True)
class FieldStats:
    avg_numeric_density: float
    avg_forward_word_count: float
    record_count: int


@dataclass
class CorpusStats:
    by_key: dict[tuple[str, str], FieldStats]

    def categories(self) -> list[str]:
        return sorted({c for c, _ in self.by_key})

    def ranking(self, field_name: str, metric: str) -> list[str]:
        """Categories sorted by ``metric`` on ``field_name``, highest first."""
        cats = [c for c in self.categories() if (c, field_name) in self.by_key]
        return sorted(cats, key=lambda c: (-getattr(self.by_key[(c, field_name)], metric), c))

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for (cat, fld), st in sorted(self.by_key.items()):
            out.setdefault(cat, {})[fld] = asdict(st)
        return out


def compute_corpus_stats(records: Sequence[QARecord], lexicon: Sequence[str] | None = None) -> CorpusStats:
    lex = tuple(lexicon) if lexicon is not None else load_lexicon()
    groups: dict[str, list[QARecord]] = {}
    for r in records:
        groups.setdefault(r.category, []).append(r)
    stats = {}
    for cat, members in groups.items():
        for fld in STAT_FIELDS:
            texts = [field_text(r, fld) for r in members]
            stats[(cat, fld)] = FieldStats(
                avg_numeric_density=statistics.fmean(numeric_density(t) for t in texts),
                avg_forward_word_count=statistics.fmean(forward_word_count(t, lex) for t in texts),
                record_count=len(members),
            )
    return CorpusStats(stats)
