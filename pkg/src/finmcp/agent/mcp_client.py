"""Client side of an MCP session, over an in-process or subprocess transport."""

from __future__ import annotations

import itertools
import subprocess
import sys
from dataclasses import dataclass
from typing import Any, Protocol, Sequence

from finmcp import __version__
from finmcp.errors import FinMcpError
from finmcp.protocol import PROTOCOL_VERSION, RpcMessage, Session, parse_frame


class McpClientError(FinMcpError):
    """The server broke the session (not a tool-level error)."""


class Transport(Protocol):
    def exchange(self, line: str, expect_reply: bool) -> str | None: ...

    def close(self) -> None: ...


class InProcessTransport:
    def __init__(self, session: Session) -> None:
        self.session = session

    def exchange(self, line: str, expect_reply: bool) -> str | None:
        return self.session.handle_line(line)

    def close(self) -> None:
        pass


class StdioTransport:
    """Spawns ``python -m finmcp serve ...`` and talks over its pipes."""

    def __init__(self, serve_args: Sequence[str], python: str = sys.executable) -> None:
        self.proc = subprocess.Popen(
            [python, "-m", "finmcp", "serve", *serve_args],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
        )

    def exchange(self, line: str, expect_reply: bool) -> str | None:
        assert self.proc.stdin is not None and self.proc.stdout is not None
        self.proc.stdin.write(line.encode("utf-8") + b"\n")
        self.proc.stdin.flush()
        if not expect_reply:
            return None
        reply = self.proc.stdout.readline()
        if not reply:
            raise McpClientError("server closed the stream")
        return reply.decode("utf-8")

    def close(self) -> None:
        if self.proc.stdin:
            self.proc.stdin.close()
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait()
        if self.proc.stdout:
            self.proc.stdout.close()


@dataclass(frozen=True)
class ToolResult:
    text: str
    is_error: bool
    record: dict[str, Any] | None = None
    structured: Any = None


class McpClient:
    def __init__(self, transport: Transport) -> None:
        self.transport = transport
        self._ids = itertools.count(1)
        self.server_info: dict[str, Any] = {}

    def _request(self, method: str, params: Any = None) -> RpcMessage:
        msg = RpcMessage.request(next(self._ids), method, params)
        line = self.transport.exchange(msg.to_json(), True)
        if line is None:
            raise McpClientError(f"no reply to {method}")
        return parse_frame(line)

    def _notify(self, method: str, params: Any = None) -> None:
        self.transport.exchange(RpcMessage.notification(method, params).to_json(), False)

    def initialize(self) -> dict[str, Any]:
        reply = self._request("initialize", {
            "protocolVersion": PROTOCOL_VERSION,
            "capabilities": {},
            "clientInfo": {"name": "finmcp-agent", "version": __version__},
        })
        if reply.error is not None:
            raise McpClientError(f"initialize failed: {reply.error.get('message')}")
        self.server_info = reply.result.get("serverInfo", {})
        self._notify("notifications/initialized")
        return reply.result

    def list_tools(self) -> list[dict[str, Any]]:
        reply = self._request("tools/list")
        if reply.error is not None:
            raise McpClientError(f"tools/list failed: {reply.error.get('message')}")
        return list(reply.result["tools"])

    def call_tool(self, name: str, arguments: Any) -> ToolResult:
        reply = self._request("tools/call", {"name": name, "arguments": arguments})
        if reply.error is not None:
            data = reply.error.get("data") or {}
            return ToolResult(
                f"Error: {reply.error.get('message', 'unknown error')}",
                True,
                data.get("toolCallRecord") if isinstance(data, dict) else None,
            )
        result = reply.result or {}
        text = "\n".join(c.get("text", "") for c in result.get("content", []) if c.get("type") == "text")
        meta = result.get("_meta") or {}
        return ToolResult(text, bool(result.get("isError")), meta.get("toolCallRecord"),
                          result.get("structuredContent"))

    def close(self) -> None:
        try:
            self._request("shutdown")
        except (McpClientError, OSError, ValueError):
            pass
        self.transport.close()

    def __enter__(self) -> "McpClient":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()
