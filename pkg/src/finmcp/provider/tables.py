"""Period-indexed data tables returned by provider backends."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from datetime import date
from decimal import Decimal, localcontext
from typing import Any, Iterable, Union

from finmcp import jsonio
from finmcp.errors import ArgumentValidation, DecodeError

FIXTURE_SCHEMA = "finmcp-fixture/1"

Cell = Union[Decimal, str, None]


class StatementKind(str, enum.Enum):
    BALANCE_SHEET = "BalanceSheet"
    INCOME = "Income"
    CASH_FLOW = "CashFlow"
    BUSINESS_SEGMENTS = "BusinessSegments"
    GEOGRAPHIC_SEGMENTS = "GeographicSegments"
    PRODUCT_SEGMENTS = "ProductSegments"
    CAPITAL_STRUCTURE = "CapitalStructure"
    OPERATING_METRICS = "OperatingMetrics"
    PENSION_PLAN = "PensionPlan"
    ACQUISITIONS = "Acquisitions"
    TRANSCRIPT = "Transcript"

    @property
    def dirname(self) -> str:
        return _DIRNAMES[self]

    @property
    def periodic(self) -> bool:
        return self not in (StatementKind.ACQUISITIONS, StatementKind.TRANSCRIPT)


_DIRNAMES = {
    StatementKind.BALANCE_SHEET: "balance_sheet",
    StatementKind.INCOME: "income",
    StatementKind.CASH_FLOW: "cash_flow",
    StatementKind.BUSINESS_SEGMENTS: "business_segments",
    StatementKind.GEOGRAPHIC_SEGMENTS: "geographic_segments",
    StatementKind.PRODUCT_SEGMENTS: "product_segments",
    StatementKind.CAPITAL_STRUCTURE: "capital_structure",
    StatementKind.OPERATING_METRICS: "operating_metrics",
    StatementKind.PENSION_PLAN: "pension_plan",
    StatementKind.ACQUISITIONS: "acquisitions",
    StatementKind.TRANSCRIPT: "transcript",
}


class Scale(str, enum.Enum):
    UNITS = "units"
    THOUSANDS = "thousands"
    MILLIONS = "millions"
    BILLIONS = "billions"

    @property
    def exponent(self) -> int:
        return {"units": 0, "thousands": 3, "millions": 6, "billions": 9}[self.value]


def rescale_value(value: Decimal, src: Scale, dst: Scale) -> Decimal:
    """Move ``value`` from ``src`` to ``dst`` units by shifting the exponent."""
    with localcontext() as ctx:
        ctx.prec = 200
        return value.scaleb(src.exponent - dst.exponent)


_PERIOD_RE = re.compile(r"^FY(\d{4})(?:Q([1-4]))?$")


@dataclass(frozen=True)
class FiscalPeriod:
    year: int
    quarter: int | None = None

    @classmethod
    def parse(cls, text: str) -> "FiscalPeriod":
        m = _PERIOD_RE.match(text.strip()) if isinstance(text, str) else None
        if not m:
            raise ArgumentValidation(
                f"period {text!r} must look like FY2023 or FY2023Q2"
            )
        return cls(int(m.group(1)), int(m.group(2)) if m.group(2) else None)

    def sort_key(self) -> tuple[int, int]:
        # annual periods sort after the quarters of the same year
        return (self.year, self.quarter or 5)

    @property
    def label(self) -> str:
        return f"FY{self.year}" + (f"Q{self.quarter}" if self.quarter else "")

    def previous(self) -> "FiscalPeriod":
        if self.quarter is None:
            return FiscalPeriod(self.year - 1)
        if self.quarter == 1:
            return FiscalPeriod(self.year - 1, 4)
        return FiscalPeriod(self.year, self.quarter - 1)

    def trailing(self, n: int) -> list["FiscalPeriod"]:
        """This period followed by the ``n - 1`` periods before it."""
        out = [self]
        while len(out) < n:
            out.append(out[-1].previous())
        return out

    def __str__(self) -> str:
        return self.label


@dataclass(frozen=True)
class DateRange:
    start: date
    end: date


@dataclass(frozen=True)
class Row:
    label: str
    values: tuple[Cell, ...]
    unit: str = "currency"

    @property
    def monetary(self) -> bool:
        return self.unit == "currency"


@dataclass(frozen=True)
class StatementTable:
    """Line items by columns.

    For periodic statements the columns are fiscal-period labels, most recent
    first. Acquisitions and transcripts use named columns instead, with one
    row per deal or per speaker turn.
    """

    subject: str
    kind: StatementKind
    columns: tuple[str, ...]
    rows: tuple[Row, ...]
    scale: Scale | None
    currency: str = "n/a"
    # acquisitions: which named column carries money
    money_columns: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        for row in self.rows:
            if len(row.values) != len(self.columns):
                raise ValueError(
                    f"row {row.label!r} has {len(row.values)} values "
                    f"for {len(self.columns)} columns"
                )

    def _is_money(self, row: Row, col: int) -> bool:
        if self.money_columns:
            return self.columns[col] in self.money_columns
        return row.monetary

    def rescale(self, target: Scale) -> "StatementTable":
        if self.scale is None or target == self.scale:
            return self
        rows = []
        for row in self.rows:
            values = tuple(
                rescale_value(v, self.scale, target)
                if isinstance(v, Decimal) and self._is_money(row, i)
                else v
                for i, v in enumerate(row.values)
            )
            rows.append(Row(row.label, values, row.unit))
        return StatementTable(
            self.subject, self.kind, self.columns, tuple(rows), target,
            self.currency, self.money_columns,
        )

    def monetary_cells(self) -> Iterable[tuple[str, str, Decimal]]:
        for row in self.rows:
            for i, v in enumerate(row.values):
                if isinstance(v, Decimal) and self._is_money(row, i):
                    yield row.label, self.columns[i], v

    def row(self, label: str) -> Row:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "subject": self.subject,
            "kind": self.kind.value,
            "columns": list(self.columns),
            "rows": [
                {"label": r.label, "unit": r.unit, "values": list(r.values)}
                for r in self.rows
            ],
            "scale": self.scale.value if self.scale else None,
            "currency": self.currency,
        }
        if self.money_columns:
            out["money_columns"] = list(self.money_columns)
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "StatementTable":
        rows = tuple(
            Row(r["label"], tuple(_cell(v) for v in r["values"]), r.get("unit", "currency"))
            for r in data["rows"]
        )
        return cls(
            subject=data["subject"],
            kind=StatementKind(data["kind"]),
            columns=tuple(data["columns"]),
            rows=rows,
            scale=Scale(data["scale"]) if data.get("scale") else None,
            currency=data.get("currency", "n/a"),
            money_columns=tuple(data.get("money_columns", ())),
        )

    def canonical(self) -> str:
        return jsonio.dumps(self.to_dict())

    def digest(self) -> str:
        return jsonio.digest(self.to_dict())


def _cell(v: Any) -> Cell:
    if v is None or isinstance(v, (str, Decimal)):
        return v
    if isinstance(v, bool):
        raise DecodeError(f"boolean cell {v!r}")
    if isinstance(v, (int, float)):
        return Decimal(str(v))
    raise DecodeError(f"unsupported cell {v!r}")


def merge_periods(subject: str, kind: StatementKind, parts: list[StatementTable]) -> StatementTable:
    """Join single-period tables side by side, keeping first-seen row order."""
    if not parts:
        return StatementTable(subject, kind, (), (), None)
    scale = parts[0].scale
    currency = parts[0].currency
    columns: list[str] = []
    order: list[tuple[str, str]] = []
    cells: dict[tuple[str, str], dict[str, Cell]] = {}
    for part in parts:
        if part.scale != scale:
            part = part.rescale(scale) if scale else part
        for col_i, col in enumerate(part.columns):
            columns.append(col)
            for row in part.rows:
                key = (row.label, row.unit)
                if key not in cells:
                    cells[key] = {}
                    order.append(key)
                cells[key][col] = row.values[col_i]
    rows = tuple(
        Row(label, tuple(cells[(label, unit)].get(c) for c in columns), unit)
        for label, unit in order
    )
    return StatementTable(subject, kind, tuple(columns), rows, scale, currency)


# fixture / wire documents


def _require(doc: dict[str, Any], key: str) -> Any:
    try:
        return doc[key]
    except (KeyError, TypeError):
        raise DecodeError(f"document is missing {key!r}") from None


def check_header(doc: Any) -> None:
    if not isinstance(doc, dict) or doc.get("schema") != FIXTURE_SCHEMA:
        got = doc.get("schema") if isinstance(doc, dict) else type(doc).__name__
        raise DecodeError(f"expected schema {FIXTURE_SCHEMA!r}, got {got!r}")


def table_from_document(doc: Any, subject: str) -> StatementTable:
    """Decode one period/deal/transcript document into a table.

    Shared by the fixture and http providers so identical content yields
    identical tables.
    """
    check_header(doc)
    try:
        kind = StatementKind(_require(doc, "kind"))
    except ValueError as exc:
        raise DecodeError(str(exc)) from None
    currency = doc.get("currency", "n/a")
    try:
        if kind == StatementKind.ACQUISITIONS:
            scale = Scale(_require(doc, "scale"))
            columns = ("target", "announce_date", "value", "status")
            rows = tuple(
                Row(
                    str(_require(d, "id")),
                    (
                        str(_require(d, "target")),
                        str(_require(d, "announce_date")),
                        _cell(d.get("value")),
                        str(_require(d, "status")),
                    ),
                    "deal",
                )
                for d in _require(doc, "deals")
            )
            return StatementTable(subject, kind, columns, rows, scale, currency, ("value",))
        if kind == StatementKind.TRANSCRIPT:
            columns = ("speaker", "role", "text")
            rows = tuple(
                Row(
                    str(i + 1),
                    (str(_require(t, "speaker")), str(_require(t, "role")), str(_require(t, "text"))),
                    "turn",
                )
                for i, t in enumerate(_require(doc, "turns"))
            )
            return StatementTable(subject, kind, columns, rows, None, "n/a")
        period = FiscalPeriod.parse(_require(doc, "period")).label
        scale = Scale(_require(doc, "scale"))
        rows = tuple(
            Row(str(_require(r, "label")), (_cell(r.get("value")),), r.get("unit", "currency"))
            for r in _require(doc, "rows")
        )
    except (ValueError, ArgumentValidation) as exc:
        raise DecodeError(str(exc)) from None
    return StatementTable(subject, kind, (period,), rows, scale, currency)
