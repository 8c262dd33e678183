"""HTTP provider for a live vendor API.

The client speaks a small internal wire schema whose documents are the same
ones the fixture store holds. A vendor-specific ``Adapter`` maps that
schema onto real endpoints; a licensee only writes the adapter.
"""

from __future__ import annotations

import logging
import os
import threading
import time
from typing import Any, Callable
from urllib.parse import quote

import httpx

from finmcp import jsonio
from finmcp.ratelimit import TokenBucket
from finmcp.errors import AuthFailure, DecodeError, NotFound, ProviderFailure, RateLimited
from finmcp.provider.base import CompanyInfo, Provider, ProviderConfig
from finmcp.provider.tables import StatementKind, check_header

log = logging.getLogger(__name__)

RETRYABLE = frozenset({429, 500, 502, 503, 504})


class Adapter:
    """Identity adapter for the internal wire schema.

    Paths are relative to ``base_url``. Decoders must return documents in
    the fixture schema.
    """

    def companies_path(self) -> str:
        return "/v1/companies"

    def periods_path(self, kind: StatementKind, company_id: str) -> str:
        return f"/v1/companies/{quote(company_id, safe='')}/{kind.dirname}"

    def document_path(self, kind: StatementKind, company_id: str, key: str) -> str:
        return f"{self.periods_path(kind, company_id)}/{quote(key, safe='')}"

    def decode_companies(self, payload: Any) -> list[Any]:
        check_header(payload)
        return list(payload["companies"])

    def decode_periods(self, payload: Any) -> list[str]:
        check_header(payload)
        return [str(p) for p in payload["periods"]]

    def decode_document(self, kind: StatementKind, payload: Any) -> Any:
        return payload


class HttpProvider(Provider):
    def __init__(
        self,
        config: ProviderConfig,
        adapter: Adapter | None = None,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        if not config.base_url:
            raise ValueError("http provider needs base_url")
        headers = {"Accept": "application/json"}
        if config.auth_token_env:
            token = os.environ.get(config.auth_token_env)
            if not token:
                raise AuthFailure(f"environment variable {config.auth_token_env} is not set")
            headers["Authorization"] = f"Bearer {token}"
        self.config = config
        self.adapter = adapter or Adapter()
        self._client = httpx.Client(
            base_url=config.base_url.rstrip("/"),
            headers=headers,
            timeout=config.timeout_ms / 1000.0,
            transport=transport,
        )
        self._sleep = sleep
        self._pool = threading.BoundedSemaphore(config.max_concurrency)
        self._bucket = TokenBucket(config.per_minute_budget) if config.per_minute_budget else None
        self._companies_cache: list[CompanyInfo] | None = None
        self._cache_lock = threading.Lock()
        self.attempts = 0  # total HTTP attempts, for inspection

    def close(self) -> None:
        self._client.close()

    def _get(self, path: str) -> Any:
        if self._bucket is not None and not self._bucket.try_acquire():
            raise RateLimited(f"per-minute budget of {self.config.per_minute_budget} exhausted")
        last_error = ""
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                self._sleep(self.config.backoff_s * 2 ** (attempt - 1))
            with self._pool:
                self.attempts += 1
                try:
                    resp = self._client.get(path)
                except httpx.TransportError as exc:
                    last_error = f"transport error: {exc}"
                    log.warning("GET %s failed (%s), attempt %d", path, exc, attempt + 1)
                    continue
            status = resp.status_code
            if status in (401, 403):
                raise AuthFailure(f"GET {path}: HTTP {status}")
            if status == 404:
                raise NotFound(f"GET {path}: HTTP 404")
            if status in RETRYABLE:
                last_error = f"HTTP {status}"
                log.warning("GET %s returned %d, attempt %d", path, status, attempt + 1)
                continue
            if status >= 400:
                raise ProviderFailure(f"GET {path}: HTTP {status}")
            try:
                return jsonio.loads(resp.content)
            except ValueError as exc:
                raise DecodeError(f"GET {path}: {exc}") from None
        if last_error == "HTTP 429":
            raise RateLimited(f"GET {path}: still rate limited after {self.config.max_retries} retries")
        raise ProviderFailure(f"GET {path}: {last_error} after {self.config.max_retries} retries")

    def _companies(self) -> list[CompanyInfo]:
        with self._cache_lock:
            if self._companies_cache is None:
                try:
                    docs = self.adapter.decode_companies(self._get(self.adapter.companies_path()))
                except (KeyError, TypeError) as exc:
                    raise DecodeError(f"company list: {exc}") from None
                self._companies_cache = [CompanyInfo.from_document(d) for d in docs]
            return list(self._companies_cache)

    def _periods(self, kind: StatementKind, company_id: str) -> list[str]:
        try:
            return self.adapter.decode_periods(self._get(self.adapter.periods_path(kind, company_id)))
        except (KeyError, TypeError) as exc:
            raise DecodeError(f"period list: {exc}") from None

    def _document(self, kind: StatementKind, company_id: str, key: str | None) -> Any:
        payload = self._get(self.adapter.document_path(kind, company_id, key or "deals"))
        return self.adapter.decode_document(kind, payload)
