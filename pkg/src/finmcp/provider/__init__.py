"""Data providers: a fixture store for offline runs and an http client."""

from __future__ import annotations

from finmcp.provider.base import CompanyInfo, Provider, ProviderConfig, Window
from finmcp.provider.fixture import FixtureProvider, default_fixtures_dir
from finmcp.provider.tables import (
    DateRange,
    FiscalPeriod,
    Row,
    Scale,
    StatementKind,
    StatementTable,
)


def make_provider(config: ProviderConfig) -> Provider:
    if config.kind == "fixture":
        return FixtureProvider(config.fixtures_dir)
    if config.kind == "http":
        from finmcp.provider.http import HttpProvider

        return HttpProvider(config)
    raise ValueError(f"unknown provider kind {config.kind!r}")


__all__ = [
    "CompanyInfo", "DateRange", "FiscalPeriod", "FixtureProvider", "Provider",
    "ProviderConfig", "Row", "Scale", "StatementKind", "StatementTable", "Window",
    "default_fixtures_dir", "make_provider",
]
