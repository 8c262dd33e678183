"""Provider contract shared by the fixture and http backends.

Subclasses only supply raw documents (``_companies``, ``_periods``,
``_document``); window selection and decoding happen here, which is what
makes the two backends interchangeable for identical content.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Any, Union

from finmcp.errors import DecodeError, NotFound
from finmcp.provider.tables import (
    DateRange,
    FiscalPeriod,
    StatementKind,
    StatementTable,
    check_header,
    table_from_document,
)

Window = Union[str, DateRange]


@dataclass(frozen=True)
class CompanyInfo:
    id: str
    name: str
    aliases: tuple[str, ...] = ()
    currency: str = "n/a"

    @classmethod
    def from_document(cls, doc: Any) -> "CompanyInfo":
        check_header(doc)
        try:
            return cls(
                id=str(doc["id"]),
                name=str(doc["name"]),
                aliases=tuple(str(a) for a in doc.get("aliases", ())),
                currency=str(doc.get("currency", "n/a")),
            )
        except KeyError as exc:
            raise DecodeError(f"company document is missing {exc}") from None


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "fixture"  # "fixture" | "http"
    fixtures_dir: Path | None = None
    base_url: str | None = None
    auth_token_env: str = "FINMCP_VENDOR_TOKEN"
    timeout_ms: int = 10_000
    max_retries: int = 3
    backoff_s: float = 0.25
    per_minute_budget: int | None = None
    max_concurrency: int = 4
    extra: dict[str, Any] = field(default_factory=dict)


class Provider(abc.ABC):
    @abc.abstractmethod
    def _companies(self) -> list[CompanyInfo]: ...

    @abc.abstractmethod
    def _periods(self, kind: StatementKind, company_id: str) -> list[str]:
        """Available period labels; empty when the kind has no data."""

    @abc.abstractmethod
    def _document(self, kind: StatementKind, company_id: str, key: str | None) -> Any:
        """Raw document for one period (key) or the whole deal list (None)."""

    def companies(self) -> list[CompanyInfo]:
        return self._companies()

    def resolve_company(self, name: str) -> CompanyInfo:
        """Exact id or name, then case-insensitive, then alias. Never fuzzy."""
        companies = self._companies()
        for c in companies:
            if name in (c.id, c.name):
                return c
        folded = name.casefold().strip()
        for c in companies:
            if folded in (c.id.casefold(), c.name.casefold()):
                return c
        for c in companies:
            if folded in (a.casefold() for a in c.aliases):
                return c
        raise NotFound(f"unknown company {name!r}")

    def available_periods(self, kind: StatementKind, company_id: str) -> list[str]:
        if not kind.periodic:
            return self._periods(kind, company_id)
        return sorted(
            self._periods(kind, company_id),
            key=lambda p: FiscalPeriod.parse(p).sort_key(),
            reverse=True,
        )

    def fetch(self, kind: StatementKind, subject: str, window: Window) -> StatementTable:
        company = self.resolve_company(subject)
        if kind == StatementKind.ACQUISITIONS:
            if not isinstance(window, DateRange):
                raise TypeError("acquisitions need a DateRange window")
            return self._fetch_deals(company, window)
        period = FiscalPeriod.parse(str(window)).label
        periods = self._periods(kind, company.id)
        if period not in periods:
            if not periods and kind != StatementKind.TRANSCRIPT:
                return StatementTable(company.id, kind, (period,), (), None, company.currency)
            raise NotFound(f"{kind.value} for {company.id} has no period {period}")
        table = table_from_document(self._document(kind, company.id, period), company.id)
        if table.kind != kind:
            raise DecodeError(f"asked for {kind.value}, document holds {table.kind.value}")
        return table

    def _fetch_deals(self, company: CompanyInfo, window: DateRange) -> StatementTable:
        if not self._periods(StatementKind.ACQUISITIONS, company.id):
            return StatementTable(
                company.id, StatementKind.ACQUISITIONS,
                ("target", "announce_date", "value", "status"), (), None,
                company.currency, ("value",),
            )
        full = table_from_document(self._document(StatementKind.ACQUISITIONS, company.id, None), company.id)
        rows = []
        for row in full.rows:
            try:
                announced = date.fromisoformat(str(row.values[1]))
            except ValueError:
                raise DecodeError(f"deal {row.label} has bad date {row.values[1]!r}") from None
            if window.start <= announced <= window.end:
                rows.append(row)
        return StatementTable(
            full.subject, full.kind, full.columns, tuple(rows), full.scale,
            full.currency, full.money_columns,
        )
