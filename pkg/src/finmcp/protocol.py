"""MCP server session over newline-delimited JSON-RPC 2.0.

A ``Session`` owns the handshake state machine and dispatches ``tools/*``
requests to a ``ToolSuite``. ``serve`` drives one session over a byte
stream pair (stdio by default). Requests are handled strictly in arrival
order.
"""

from __future__ import annotations

import enum
import logging
import socketserver
from dataclasses import dataclass, field
from typing import Any, BinaryIO, Callable, Union

from finmcp import SERVER_NAME, __version__, jsonio
from finmcp.errors import ArgumentValidation, UnknownTool
from finmcp.tools import ToolDescriptor, ToolSuite, render_table

log = logging.getLogger(__name__)

PROTOCOL_VERSION = "2025-06-18"

PARSE_ERROR = -32700
INVALID_REQUEST = -32600
METHOD_NOT_FOUND = -32601
INVALID_PARAMS = -32602
INTERNAL_ERROR = -32603
NOT_INITIALIZED = -32002

RequestId = Union[int, str]


class ProtocolError(Exception):
    code = INTERNAL_ERROR

    def __init__(self, message: str, request_id: RequestId | None = None, data: Any = None) -> None:
        super().__init__(message)
        self.request_id = request_id
        self.data = data


class MalformedFrame(ProtocolError):
    code = PARSE_ERROR


class InvalidMessage(ProtocolError):
    code = INVALID_REQUEST


class DoubleInitialize(InvalidMessage):
    pass


class MethodNotFound(ProtocolError):
    code = METHOD_NOT_FOUND


class InvalidParams(ProtocolError):
    code = INVALID_PARAMS


class NotReady(ProtocolError):
    code = NOT_INITIALIZED


class EndOfStream(Exception):
    """The peer closed its side of the stream."""


class MessageKind(enum.Enum):
    REQUEST = "request"
    NOTIFICATION = "notification"
    RESPONSE = "response"


_NO_ID = object()


@dataclass(frozen=True)
class RpcMessage:
    method: str | None = None
    id: Any = _NO_ID
    params: Any = None
    result: Any = None
    error: dict[str, Any] | None = None

    @property
    def kind(self) -> MessageKind:
        if self.method is not None:
            return MessageKind.NOTIFICATION if self.id is _NO_ID else MessageKind.REQUEST
        return MessageKind.RESPONSE

    @property
    def has_id(self) -> bool:
        return self.id is not _NO_ID

    @classmethod
    def request(cls, id: RequestId, method: str, params: Any = None) -> "RpcMessage":
        return cls(method=method, id=id, params=params)

    @classmethod
    def notification(cls, method: str, params: Any = None) -> "RpcMessage":
        return cls(method=method, params=params)

    @classmethod
    def response(cls, id: RequestId | None, result: Any) -> "RpcMessage":
        return cls(id=id, result=result)

    @classmethod
    def error_response(cls, id: RequestId | None, code: int, message: str, data: Any = None) -> "RpcMessage":
        err: dict[str, Any] = {"code": code, "message": message}
        if data is not None:
            err["data"] = data
        return cls(id=id, error=err)

    def to_obj(self) -> dict[str, Any]:
        out: dict[str, Any] = {"jsonrpc": "2.0"}
        if self.has_id:
            out["id"] = self.id
        if self.kind == MessageKind.RESPONSE:
            if self.error is not None:
                out["error"] = self.error
            else:
                out["result"] = self.result
        else:
            out["method"] = self.method
            if self.params is not None:
                out["params"] = self.params
        return out

    def to_json(self) -> str:
        return jsonio.dumps(self.to_obj())

    @classmethod
    def from_obj(cls, obj: Any) -> "RpcMessage":
        if not isinstance(obj, dict):
            raise InvalidMessage("Invalid Request: message must be a JSON object")
        rid = obj.get("id", _NO_ID)
        valid_id = rid is _NO_ID or (
            isinstance(rid, (int, str)) and not isinstance(rid, bool)
        )
        reply_id = rid if valid_id and rid is not _NO_ID else None
        if obj.get("jsonrpc") != "2.0":
            raise InvalidMessage("Invalid Request: jsonrpc must be \"2.0\"", reply_id)
        if not valid_id:
            raise InvalidMessage("Invalid Request: id must be an integer or string")
        has_method = "method" in obj
        has_outcome = "result" in obj or "error" in obj
        if has_method == has_outcome:
            raise InvalidMessage("Invalid Request: need exactly one of method or result/error", reply_id)
        if has_method:
            if not isinstance(obj["method"], str):
                raise InvalidMessage("Invalid Request: method must be a string", reply_id)
            params = obj.get("params")
            if params is not None and not isinstance(params, (dict, list)):
                raise InvalidMessage("Invalid Request: params must be structured", reply_id)
            return cls(method=obj["method"], id=rid, params=params)
        if rid is _NO_ID:
            raise InvalidMessage("Invalid Request: response without id")
        if "result" in obj and "error" in obj:
            raise InvalidMessage("Invalid Request: both result and error", reply_id)
        return cls(id=rid, result=obj.get("result"), error=obj.get("error"))


def parse_frame(line: bytes | str) -> RpcMessage:
    try:
        text = line.decode("utf-8") if isinstance(line, bytes) else line
        obj = jsonio.loads(text)
    except (UnicodeDecodeError, ValueError):
        raise MalformedFrame("Parse error") from None
    return RpcMessage.from_obj(obj)


def read_frame(stream: BinaryIO) -> RpcMessage:
    """Read the next message; blank lines between frames are skipped."""
    while True:
        line = stream.readline()
        if not line:
            raise EndOfStream()
        if line.strip():
            return parse_frame(line)


def write_frame(stream: BinaryIO, message: RpcMessage) -> None:
    stream.write(message.to_json().encode("utf-8") + b"\n")
    stream.flush()


class Phase(enum.Enum):
    AWAITING_INITIALIZE = "AwaitingInitialize"
    READY = "Ready"
    CLOSED = "Closed"


@dataclass
class SessionState:
    phase: Phase = Phase.AWAITING_INITIALIZE
    initialize_answered: bool = False
    negotiated_capabilities: frozenset[str] = frozenset()
    tool_registry: tuple[ToolDescriptor, ...] = ()
    client_info: dict[str, Any] = field(default_factory=dict)

    def advance(self, phase: Phase) -> None:
        order = list(Phase)
        if order.index(phase) < order.index(self.phase):
            raise ValueError(f"cannot move from {self.phase.value} back to {phase.value}")
        self.phase = phase


class Session:
    def __init__(
        self,
        suite: ToolSuite,
        session_id: str = "session",
        protocol_version: str = PROTOCOL_VERSION,
    ) -> None:
        self.suite = suite
        self.session_id = session_id
        self.protocol_version = protocol_version
        self.state = SessionState(tool_registry=tuple(suite.descriptors))

    @property
    def closed(self) -> bool:
        return self.state.phase == Phase.CLOSED

    def handle_line(self, line: bytes | str) -> str | None:
        """Process one raw frame and return the serialized reply, if any."""
        try:
            msg = parse_frame(line)
        except ProtocolError as exc:
            return RpcMessage.error_response(exc.request_id, exc.code, str(exc)).to_json()
        reply = self.handle(msg)
        return reply.to_json() if reply is not None else None

    def handle(self, msg: RpcMessage) -> RpcMessage | None:
        if msg.kind == MessageKind.RESPONSE:
            return None
        if msg.kind == MessageKind.NOTIFICATION:
            self._notification(msg)
            return None
        try:
            return self._dispatch(msg)
        except ProtocolError as exc:
            return RpcMessage.error_response(msg.id, exc.code, str(exc), exc.data)
        except Exception:  # the session must survive handler bugs
            log.exception("internal error handling %s", msg.method)
            return RpcMessage.error_response(msg.id, INTERNAL_ERROR, "Internal error")

    def _notification(self, msg: RpcMessage) -> None:
        if msg.method == "notifications/initialized" and self.state.initialize_answered:
            if self.state.phase == Phase.AWAITING_INITIALIZE:
                self.state.advance(Phase.READY)

    def _dispatch(self, msg: RpcMessage) -> RpcMessage:
        method = msg.method
        if method == "initialize":
            return self.handle_initialize(msg)
        if method == "ping":
            return RpcMessage.response(msg.id, {})
        if method == "shutdown":
            self.state.advance(Phase.CLOSED)
            return RpcMessage.response(msg.id, {})
        if method == "tools/list":
            return self.handle_tools_list(msg)
        if method == "tools/call":
            return self.handle_tools_call(msg)
        raise MethodNotFound(f"Method not found: {method}")

    def _require_ready(self) -> None:
        if self.state.phase != Phase.READY:
            raise NotReady("Server not initialized")

    def handle_initialize(self, msg: RpcMessage) -> RpcMessage:
        if self.state.initialize_answered or self.state.phase != Phase.AWAITING_INITIALIZE:
            raise DoubleInitialize("Already initialized")
        params = msg.params if isinstance(msg.params, dict) else {}
        requested = params.get("protocolVersion")
        if requested != self.protocol_version:
            raise InvalidParams(
                "Unsupported protocol version",
                data={"requested": requested, "supported": [self.protocol_version]},
            )
        self.state.initialize_answered = True
        self.state.negotiated_capabilities = frozenset({"tools"})
        self.state.client_info = dict(params.get("clientInfo") or {})
        return RpcMessage.response(msg.id, {
            "protocolVersion": self.protocol_version,
            "capabilities": {"tools": {"listChanged": False}},
            "serverInfo": {"name": SERVER_NAME, "version": __version__},
        })

    def handle_tools_list(self, msg: RpcMessage) -> RpcMessage:
        self._require_ready()
        return RpcMessage.response(msg.id, {"tools": [d.to_wire() for d in self.state.tool_registry]})

    def handle_tools_call(self, msg: RpcMessage) -> RpcMessage:
        self._require_ready()
        params = msg.params
        if not isinstance(params, dict) or not isinstance(params.get("name"), str):
            raise InvalidParams("Invalid params: tools/call needs a string name")
        call_id = self.suite.next_call_id(self.session_id)
        outcome = self.suite.call(params["name"], params.get("arguments"), call_id)
        meta = {"toolCallRecord": outcome.record.to_dict()}
        if isinstance(outcome.error, (UnknownTool, ArgumentValidation)):
            message = str(outcome.error)
            if isinstance(outcome.error, UnknownTool):
                message = f"Unknown tool: {params['name']}"
            return RpcMessage.error_response(msg.id, INVALID_PARAMS, message, meta)
        if outcome.error is not None:
            text = f"Error ({type(outcome.error).__name__}): {outcome.error}"
            return RpcMessage.response(msg.id, {
                "content": [{"type": "text", "text": text}],
                "isError": True,
                "_meta": meta,
            })
        table = outcome.table
        return RpcMessage.response(msg.id, {
            "content": [{"type": "text", "text": render_table(table)}],
            "structuredContent": table.to_dict(),
            "isError": False,
            "_meta": meta,
        })


def serve(session: Session, reader: BinaryIO, writer: BinaryIO) -> None:
    """Run ``session`` until EOF or shutdown."""
    while not session.closed:
        try:
            msg = read_frame(reader)
        except EndOfStream:
            break
        except ProtocolError as exc:
            write_frame(writer, RpcMessage.error_response(exc.request_id, exc.code, str(exc)))
            continue
        reply = session.handle(msg)
        if reply is not None:
            write_frame(writer, reply)
    if session.state.phase != Phase.CLOSED:
        session.state.advance(Phase.CLOSED)


def serve_tcp(host: str, port: int, session_factory: Callable[[], Session]) -> socketserver.ThreadingTCPServer:
    """One session per connection, same framing as stdio. Caller runs ``serve_forever``."""

    class Handler(socketserver.StreamRequestHandler):
        def handle(self) -> None:
            serve(session_factory(), self.rfile, self.wfile)

    socketserver.ThreadingTCPServer.allow_reuse_address = True
    return socketserver.ThreadingTCPServer((host, port), Handler)
