"""The financial-data tool suite.

Eleven tools over a provider handle. Handlers are stateless; every call made
through ``ToolSuite.call`` leaves exactly one ``ToolCallRecord`` in the run
log, whether it succeeded or not.
"""

from __future__ import annotations

import itertools
import os
import threading
from dataclasses import asdict, dataclass, field
from datetime import date
from pathlib import Path
from typing import Any, Callable

from finmcp import jsonio
from finmcp.clock import Clock, WallClock
from finmcp.errors import (
    ArgumentValidation,
    RateLimited,
    InvalidDateRange,
    NotFound,
    PeriodUnavailable,
    UnknownCompany,
    UnknownTool,
)
from finmcp.provider import DateRange, FiscalPeriod, Provider, Scale, StatementKind, StatementTable
from finmcp.provider.tables import merge_periods
from finmcp.ratelimit import TokenBucket

# argument schemas


@dataclass(frozen=True)
class ArgSpec:
    name: str
    type: str  # "string" | "integer"
    description: str
    required: bool = True
    enum: tuple[str, ...] | None = None
    format: str | None = None  # "date" | "period"
    minimum: int | None = None
    default: Any = None

    def json_schema(self) -> dict[str, Any]:
        out: dict[str, Any] = {"type": self.type, "description": self.description}
        if self.enum:
            out["enum"] = list(self.enum)
        if self.format == "date":
            out["format"] = "date"
        if self.format == "period":
            out["pattern"] = r"^FY\d{4}(Q[1-4])?$"
        if self.minimum is not None:
            out["minimum"] = self.minimum
        if self.default is not None:
            out["default"] = self.default
        return out


@dataclass(frozen=True)
class ToolDescriptor:
    name: str
    description: str
    arguments: tuple[ArgSpec, ...]

    def input_schema(self) -> dict[str, Any]:
        return {
            "type": "object",
            "properties": {a.name: a.json_schema() for a in self.arguments},
            "required": [a.name for a in self.arguments if a.required],
            "additionalProperties": False,
        }

    def to_wire(self) -> dict[str, Any]:
        return {"name": self.name, "description": self.description, "inputSchema": self.input_schema()}

    def validate(self, arguments: Any) -> dict[str, Any]:
        """Check ``arguments`` against the schema and fill defaults."""
        if arguments is None:
            arguments = {}
        if not isinstance(arguments, dict):
            raise ArgumentValidation(f"{self.name}: arguments must be an object")
        known = {a.name: a for a in self.arguments}
        extra = sorted(set(arguments) - set(known))
        if extra:
            raise ArgumentValidation(f"{self.name}: unexpected argument {extra[0]!r}")
        out: dict[str, Any] = {}
        for spec in self.arguments:
            if spec.name not in arguments or arguments[spec.name] is None:
                if spec.required:
                    raise ArgumentValidation(f"{self.name}: missing required argument {spec.name!r}")
                out[spec.name] = spec.default
                continue
            value = arguments[spec.name]
            if spec.type == "string":
                if not isinstance(value, str):
                    raise ArgumentValidation(f"{self.name}: argument {spec.name!r} must be a string")
                if not value.strip():
                    raise ArgumentValidation(f"{self.name}: argument {spec.name!r} must not be empty")
            elif spec.type == "integer":
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ArgumentValidation(f"{self.name}: argument {spec.name!r} must be an integer")
                if spec.minimum is not None and value < spec.minimum:
                    raise ArgumentValidation(f"{self.name}: argument {spec.name!r} must be >= {spec.minimum}")
            if spec.enum and value not in spec.enum:
                raise ArgumentValidation(
                    f"{self.name}: argument {spec.name!r} must be one of {', '.join(spec.enum)}"
                )
            if spec.format == "period":
                try:
                    FiscalPeriod.parse(value)
                except ArgumentValidation:
                    raise ArgumentValidation(
                        f"{self.name}: argument {spec.name!r} must look like FY2023 or FY2023Q2"
                    ) from None
            if spec.format == "date":
                try:
                    date.fromisoformat(value)
                except ValueError:
                    raise ArgumentValidation(
                        f"{self.name}: argument {spec.name!r} must be an ISO date (YYYY-MM-DD)"
                    ) from None
            out[spec.name] = value
        return out


@dataclass(frozen=True)
class ToolArgs:
    comp_name: str
    period: str | None = None
    scale: Scale = Scale.MILLIONS
    periods: int = 1
    start_date: date | None = None
    end_date: date | None = None

    def __post_init__(self) -> None:
        if self.period is not None:
            FiscalPeriod.parse(self.period)
        if self.start_date and self.end_date and self.start_date > self.end_date:
            raise InvalidDateRange(f"start_date {self.start_date} is after end_date {self.end_date}")

    @classmethod
    def from_validated(cls, values: dict[str, Any]) -> "ToolArgs":
        return cls(
            comp_name=values["comp_name"],
            period=values.get("period"),
            scale=Scale(values.get("scale") or Scale.MILLIONS.value),
            periods=values.get("periods") or 1,
            start_date=date.fromisoformat(values["start_date"]) if values.get("start_date") else None,
            end_date=date.fromisoformat(values["end_date"]) if values.get("end_date") else None,
        )


_COMP = ArgSpec("comp_name", "string", "Company name, ticker-like alias, or identifier.")
_PERIOD = ArgSpec(
    "period", "string", "Fiscal period, FY<year> or FY<year>Q<1-4>, e.g. FY2023 or FY2023Q2.",
    format="period",
)
_SCALE = ArgSpec(
    "scale", "string", "Unit scale for monetary values.", required=False,
    enum=tuple(s.value for s in Scale), default=Scale.MILLIONS.value,
)
_PERIODS = ArgSpec(
    "periods", "integer",
    "Number of periods to return: the requested one plus earlier ones.",
    required=False, minimum=1, default=1,
)
_STATEMENT_ARGS = (_COMP, _PERIOD, _SCALE, _PERIODS)


# handlers


def _company(provider: Provider, name: str) -> str:
    try:
        return provider.resolve_company(name).id
    except NotFound:
        raise UnknownCompany(f"unknown company {name!r}") from None


def _periodic(kind: StatementKind, args: ToolArgs, provider: Provider, period_cap: int | None) -> StatementTable:
    company = _company(provider, args.comp_name)
    requested = FiscalPeriod.parse(args.period)
    available = set(provider.available_periods(kind, company))
    if requested.label not in available:
        if not available:
            empty = provider.fetch(kind, company, requested.label)
            return StatementTable(empty.subject, kind, empty.columns, (), args.scale, empty.currency)
        raise PeriodUnavailable(f"{kind.value} for {company} is not available for {requested.label}")
    n = args.periods if period_cap is None else min(args.periods, period_cap)
    parts = [
        provider.fetch(kind, company, p.label)
        for p in requested.trailing(n)
        if p.label in available
    ]
    return merge_periods(company, kind, parts).rescale(args.scale)


def get_financial_statement(kind: StatementKind, args: ToolArgs, provider: Provider,
                            period_cap: int | None = None) -> StatementTable:
    if kind not in (StatementKind.BALANCE_SHEET, StatementKind.INCOME, StatementKind.CASH_FLOW):
        raise ValueError(f"{kind} is not a financial statement")
    return _periodic(kind, args, provider, period_cap)


def get_segment_revenue(kind: StatementKind, args: ToolArgs, provider: Provider,
                        period_cap: int | None = None) -> StatementTable:
    if kind not in (StatementKind.BUSINESS_SEGMENTS, StatementKind.GEOGRAPHIC_SEGMENTS,
                    StatementKind.PRODUCT_SEGMENTS):
        raise ValueError(f"{kind} is not a segment kind")
    return _periodic(kind, args, provider, period_cap)


def get_capital_structure(args: ToolArgs, provider: Provider, period_cap: int | None = None) -> StatementTable:
    return _periodic(StatementKind.CAPITAL_STRUCTURE, args, provider, period_cap)


def get_operating_metrics(args: ToolArgs, provider: Provider, period_cap: int | None = None) -> StatementTable:
    return _periodic(StatementKind.OPERATING_METRICS, args, provider, period_cap)


def get_pension_plan(args: ToolArgs, provider: Provider, period_cap: int | None = None) -> StatementTable:
    return _periodic(StatementKind.PENSION_PLAN, args, provider, period_cap)


def get_acquisitions(comp_name: str, start_date: date, end_date: date, provider: Provider) -> StatementTable:
    if start_date > end_date:
        raise InvalidDateRange(f"start_date {start_date} is after end_date {end_date}")
    company = _company(provider, comp_name)
    return provider.fetch(StatementKind.ACQUISITIONS, company, DateRange(start_date, end_date))


def get_earningscall_transcript(comp_name: str, period: str, provider: Provider) -> StatementTable:
    company = _company(provider, comp_name)
    label = FiscalPeriod.parse(period).label
    try:
        return provider.fetch(StatementKind.TRANSCRIPT, company, label)
    except NotFound:
        raise PeriodUnavailable(f"no earnings call transcript for {company} in {label}") from None


Handler = Callable[[dict[str, Any], Provider, "int | None"], StatementTable]


def _statement_handler(kind: StatementKind) -> Handler:
    def run(values: dict[str, Any], provider: Provider, cap: int | None) -> StatementTable:
        return _periodic(kind, ToolArgs.from_validated(values), provider, cap)

    return run


def _acquisitions_handler(values: dict[str, Any], provider: Provider, cap: int | None) -> StatementTable:
    args = ToolArgs.from_validated(values)
    return get_acquisitions(args.comp_name, args.start_date, args.end_date, provider)


def _transcript_handler(values: dict[str, Any], provider: Provider, cap: int | None) -> StatementTable:
    return get_earningscall_transcript(values["comp_name"], values["period"], provider)


def _statement_tool(name: str, what: str, kind: StatementKind) -> tuple[ToolDescriptor, Handler]:
    return ToolDescriptor(name, what, _STATEMENT_ARGS), _statement_handler(kind)


DEFAULT_TOOLS: tuple[tuple[ToolDescriptor, Handler], ...] = (
    (
        ToolDescriptor(
            "get_acquisitions",
            "Finds relevant M&A data: deals announced between start_date and end_date.",
            (
                _COMP,
                ArgSpec("end_date", "string", "Last announcement date, YYYY-MM-DD.", format="date"),
                ArgSpec("start_date", "string", "First announcement date, YYYY-MM-DD.", format="date"),
            ),
        ),
        _acquisitions_handler,
    ),
    _statement_tool("get_balancesheet_statement", "Retrieves relevant balance sheet statement.",
                    StatementKind.BALANCE_SHEET),
    _statement_tool("get_business_segments", "Retrieves relevant business segment revenue data.",
                    StatementKind.BUSINESS_SEGMENTS),
    _statement_tool("get_capital_structure", "Retrieves relevant capital structure data.",
                    StatementKind.CAPITAL_STRUCTURE),
    _statement_tool("get_cashflow_statement", "Retrieves relevant cash flow statement.",
                    StatementKind.CASH_FLOW),
    (
        ToolDescriptor(
            "get_earningscall_transcript",
            "Outputs relevant earnings call transcript for a fiscal quarter.",
            (_COMP, _PERIOD),
        ),
        _transcript_handler,
    ),
    _statement_tool("get_geographic_segments", "Retrieves relevant geographic segment revenue data.",
                    StatementKind.GEOGRAPHIC_SEGMENTS),
    _statement_tool("get_income_statement", "Retrieves relevant income statement.", StatementKind.INCOME),
    _statement_tool("get_operating_metrics",
                    "Retrieves relevant operating metrics, including physical ones (stores, employees, tonnes).",
                    StatementKind.OPERATING_METRICS),
    _statement_tool("get_pension_plan", "Retrieves relevant pension plan data.", StatementKind.PENSION_PLAN),
    _statement_tool("get_product_segments", "Retrieves relevant product segment revenue data.",
                    StatementKind.PRODUCT_SEGMENTS),
)

TOOL_NAMES = tuple(d.name for d, _ in DEFAULT_TOOLS)


# rendering


def _cell_text(v: Any) -> str:
    if v is None:
        return "n/a"
    if isinstance(v, str):
        return v
    return jsonio.decimal_text(v)


def render_table(table: StatementTable) -> str:
    """Aligned plain-text rendering handed to the model as tool output."""
    head = f"{table.subject} | {table.kind.value}"
    if table.scale is not None:
        head += f" | scale: {table.scale.value}"
    head += f" | currency: {table.currency}"
    if table.kind == StatementKind.TRANSCRIPT:
        lines = [head]
        for row in table.rows:
            speaker, role, text = row.values
            lines.append(f"[{row.label}] {speaker} ({role}): {text}")
        if not table.rows:
            lines.append("(no data)")
        return "\n".join(lines)
    if not table.rows:
        return head + "\n(no data)"
    labels = [
        r.label if r.unit in ("currency", "deal") else f"{r.label} [{r.unit}]" for r in table.rows
    ]
    first = "Deal" if table.kind == StatementKind.ACQUISITIONS else "Line item"
    grid = [[first, *table.columns]] + [
        [label, *(_cell_text(v) for v in r.values)] for label, r in zip(labels, table.rows)
    ]
    widths = [max(len(row[i]) for row in grid) for i in range(len(grid[0]))]
    lines = [head]
    for row in grid:
        cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines)


def parse_transcript_text(rendered: str) -> list[str]:
    """Recover turn texts from a rendered transcript (inverse of render_table)."""
    texts = []
    for line in rendered.split("\n")[1:]:
        if line.startswith("["):
            _, _, rest = line.partition("): ")
            texts.append(rest)
    return texts


# call records and the run log


@dataclass(frozen=True)
class ToolCallRecord:
    call_id: str
    tool: str
    args: Any
    started_at: str
    ended_at: str
    outcome: str  # "Ok" | "Error"
    error_detail: str | None = None
    error_kind: str | None = None
    result_digest: str | None = None

    def __post_init__(self) -> None:
        if self.ended_at < self.started_at:
            raise ValueError("ended_at precedes started_at")
        if (self.outcome == "Error") != (self.error_detail is not None):
            raise ValueError("error_detail must be present exactly when outcome is Error")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ToolCallRecord":
        return cls(**data)


class RunLog:
    """Append-only JSON-lines log, safe for concurrent appends.

    Each record is written with a single ``os.write`` on an ``O_APPEND``
    descriptor, so lines from separate processes never interleave.
    """

    def __init__(self, path: Path | str | None = None) -> None:
        self.path = Path(path) if path is not None else None
        self._memory: list[ToolCallRecord] = []
        self._lock = threading.Lock()
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, record: ToolCallRecord) -> None:
        line = (jsonio.dumps(record.to_dict()) + "\n").encode("utf-8")
        with self._lock:
            self._memory.append(record)
            if self.path is not None:
                fd = os.open(self.path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
                try:
                    os.write(fd, line)
                finally:
                    os.close(fd)

    def records(self) -> list[ToolCallRecord]:
        if self.path is None:
            with self._lock:
                return list(self._memory)
        if not self.path.exists():
            return []
        out = []
        for line in self.path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                out.append(ToolCallRecord.from_dict(jsonio.loads(line)))
        return out


@dataclass
class ToolOutcome:
    record: ToolCallRecord
    table: StatementTable | None = None
    error: Exception | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class ToolSuite:
    provider: Provider
    log: RunLog = field(default_factory=RunLog)
    clock: Clock = field(default_factory=WallClock)
    period_cap: int | None = None
    budget: TokenBucket | None = None
    tools: tuple[tuple[ToolDescriptor, Handler], ...] = DEFAULT_TOOLS

    def __post_init__(self) -> None:
        names = [d.name for d, _ in self.tools]
        if len(set(names)) != len(names):
            raise ValueError("tool names must be unique")
        self._by_name = {d.name: (d, h) for d, h in self.tools}
        self._ids = itertools.count(1)
        self._ids_lock = threading.Lock()

    @property
    def descriptors(self) -> list[ToolDescriptor]:
        return [d for d, _ in self.tools]

    def next_call_id(self, prefix: str) -> str:
        with self._ids_lock:
            return f"{prefix}-{next(self._ids):04d}"

    def call(self, name: str, arguments: Any, call_id: str) -> ToolOutcome:
        started = self.clock.now()
        table = None
        error: Exception | None = None
        try:
            if name not in self._by_name:
                raise UnknownTool(f"unknown tool {name!r}")
            descriptor, handler = self._by_name[name]
            values = descriptor.validate(arguments)
            if self.budget is not None and not self.budget.try_acquire():
                raise RateLimited("per-minute tool call budget exhausted")
            table = handler(values, self.provider, self.period_cap)
        except Exception as exc:  # every failure still leaves a record
            error = exc
        ended = self.clock.now()
        record = ToolCallRecord(
            call_id=call_id,
            tool=name,
            args=arguments,
            started_at=started,
            ended_at=ended,
            outcome="Ok" if error is None else "Error",
            error_detail=None if error is None else str(error),
            error_kind=None if error is None else type(error).__name__,
            result_digest=table.digest() if table is not None else None,
        )
        self.log.append(record)
        return ToolOutcome(record, table, error)
