"""Deterministic on-disk provider.

Layout: ``<root>/<company>/company.json`` plus one file per
``<kind>/<PERIOD>.json``; acquisitions live in ``acquisitions/deals.json``.
See docs/fixtures.md for the document schema.
"""

from __future__ import annotations

import importlib.resources
from pathlib import Path
from typing import Any

from finmcp import jsonio
from finmcp.errors import DecodeError, NotFound
from finmcp.provider.base import CompanyInfo, Provider
from finmcp.provider.tables import StatementKind

DEALS_FILE = "deals.json"


def default_fixtures_dir() -> Path:
    return Path(str(importlib.resources.files("finmcp") / "data" / "fixtures"))


def read_document(path: Path) -> Any:
    try:
        return jsonio.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise NotFound(str(path)) from None
    except ValueError as exc:
        raise DecodeError(f"{path}: {exc}") from None


class FixtureProvider(Provider):
    def __init__(self, root: Path | str | None = None) -> None:
        self.root = Path(root) if root is not None else default_fixtures_dir()
        if not self.root.is_dir():
            raise NotFound(f"fixture directory {self.root} does not exist")
        companies = []
        self._dirs: dict[str, Path] = {}
        for sub in sorted(p for p in self.root.iterdir() if p.is_dir()):
            info = CompanyInfo.from_document(read_document(sub / "company.json"))
            companies.append(info)
            self._dirs[info.id] = sub
        self._company_list = companies

    def _companies(self) -> list[CompanyInfo]:
        return list(self._company_list)

    def _kind_dir(self, kind: StatementKind, company_id: str) -> Path:
        try:
            return self._dirs[company_id] / kind.dirname
        except KeyError:
            raise NotFound(f"unknown company {company_id!r}") from None

    def _periods(self, kind: StatementKind, company_id: str) -> list[str]:
        d = self._kind_dir(kind, company_id)
        if not d.is_dir():
            return []
        if kind == StatementKind.ACQUISITIONS:
            return ["deals"] if (d / DEALS_FILE).is_file() else []
        return sorted(p.stem for p in d.glob("*.json"))

    def _document(self, kind: StatementKind, company_id: str, key: str | None) -> Any:
        d = self._kind_dir(kind, company_id)
        return read_document(d / (DEALS_FILE if key is None else f"{key}.json"))

    def company_document(self, company_id: str) -> Any:
        return read_document(self._dirs[company_id] / "company.json")
