"""Chat-completion clients.

``OpenAIChatClient`` talks to any chat-completions endpoint that supports
function calling. ``ScriptedModel`` replays a per-question script and is what
the offline tests and the demo run on.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol, Sequence

from finmcp import jsonio
from finmcp.agent.config import Endpoint, ModelParams
from finmcp.errors import ModelEndpointFailure

Message = dict[str, Any]


@dataclass(frozen=True)
class ToolCall:
    id: str
    name: str
    # parsed object, or the raw string when the model emitted invalid JSON
    arguments: Any

    def to_message(self) -> dict[str, Any]:
        raw = self.arguments if isinstance(self.arguments, str) else jsonio.dumps(self.arguments)
        return {"id": self.id, "type": "function", "function": {"name": self.name, "arguments": raw}}


@dataclass(frozen=True)
class Completion:
    content: str | None
    tool_calls: tuple[ToolCall, ...] = ()
    usage: dict[str, int] = field(default_factory=dict)


class ChatClient(Protocol):
    def complete(
        self,
        messages: Sequence[Message],
        *,
        params: ModelParams,
        tools: Sequence[dict[str, Any]] | None = None,
        response_format: dict[str, Any] | None = None,
        tags: dict[str, str] | None = None,
    ) -> Completion: ...


def mcp_tool_to_function(tool: dict[str, Any]) -> dict[str, Any]:
    return {
        "type": "function",
        "function": {
            "name": tool["name"],
            "description": tool.get("description", ""),
            "parameters": tool.get("inputSchema", {"type": "object"}),
        },
    }


def _parse_arguments(raw: Any) -> Any:
    if not isinstance(raw, str):
        return raw
    try:
        return json.loads(raw) if raw.strip() else {}
    except ValueError:
        return raw


class OpenAIChatClient:
    def __init__(self, endpoint: Endpoint, transport: Any = None) -> None:
        import httpx

        self.endpoint = endpoint
        key = os.environ.get(endpoint.api_key_env, "") if endpoint.api_key_env else ""
        headers = {"Authorization": f"Bearer {key}"} if key else {}
        self._client = httpx.Client(
            base_url=endpoint.base_url.rstrip("/"),
            headers=headers,
            timeout=endpoint.timeout_s,
            transport=transport,
        )
        self._httpx = httpx

    def complete(self, messages, *, params, tools=None, response_format=None, tags=None) -> Completion:
        body: dict[str, Any] = {"model": self.endpoint.model, "messages": list(messages), **params.as_request()}
        if tools:
            body["tools"] = list(tools)
        if response_format is not None:
            body["response_format"] = response_format
        try:
            resp = self._client.post("/chat/completions", content=jsonio.dumps(body),
                                     headers={"Content-Type": "application/json"})
        except self._httpx.HTTPError as exc:
            raise ModelEndpointFailure(f"request failed: {exc}") from exc
        if resp.status_code != 200:
            raise ModelEndpointFailure(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            data = resp.json()
            msg = data["choices"][0]["message"]
        except (ValueError, KeyError, IndexError) as exc:
            raise ModelEndpointFailure(f"malformed completion: {exc}") from exc
        calls = tuple(
            ToolCall(c["id"], c["function"]["name"], _parse_arguments(c["function"].get("arguments")))
            for c in msg.get("tool_calls") or ()
        )
        usage = {k: int(v) for k, v in (data.get("usage") or {}).items() if isinstance(v, int)}
        return Completion(msg.get("content"), calls, usage)

    def close(self) -> None:
        self._client.close()


class ScriptedModel:
    """Deterministic stand-in for a chat model.

    The script maps question ids to a list of turns; the turn played is the
    number of assistant messages already in the conversation, so apart from
    the failure counters for ``times`` the model is stateless and can be
    shared across threads. Past the end of a script the last turn repeats.

    Turn forms::

        {"tool_calls": [{"name": ..., "arguments": {...}}]}
        {"final_answer": "..."}          # sent as a structured JSON reply
        {"content": "..."}               # sent verbatim
        {"error": "..."}                 # raises ModelEndpointFailure
        {"error": "...", "times": 2}     # fails only on the first 2 attempts
    """

    def __init__(self, script: dict[str, Any]) -> None:
        self.questions: dict[str, list[dict[str, Any]]] = dict(script.get("questions", {}))
        self.default: list[dict[str, Any]] = list(script.get("default", [{"final_answer": "unknown"}]))
        self._attempts: dict[tuple[str, int], int] = {}

    @classmethod
    def load(cls, path: Path | str) -> "ScriptedModel":
        return cls(jsonio.loads(Path(path).read_text(encoding="utf-8")))

    def complete(self, messages, *, params, tools=None, response_format=None, tags=None) -> Completion:
        qid = (tags or {}).get("question_id", "")
        turns = self.questions.get(qid, self.default)
        index = sum(1 for m in messages if m.get("role") == "assistant")
        turn = turns[min(index, len(turns) - 1)]
        if not tools and turn.get("tool_calls"):
            # a model offered no tools cannot call any; play its next answer turn
            later = [t for t in turns[index:] if not t.get("tool_calls")]
            turn = later[0] if later else {"content": ""}
        if "error" in turn:
            key = (qid, index)
            seen = self._attempts.get(key, 0)
            self._attempts[key] = seen + 1
            if "times" not in turn or seen < int(turn["times"]):
                raise ModelEndpointFailure(str(turn["error"]))
            turn = {k: v for k, v in turn.items() if k not in ("error", "times")}
        usage = {"prompt_tokens": sum(len(str(m.get("content") or "")) for m in messages) // 4}
        if turn.get("tool_calls"):
            calls = tuple(
                ToolCall(f"call_{index}_{i}", c["name"], c.get("arguments", {}))
                for i, c in enumerate(turn["tool_calls"])
            )
            usage["completion_tokens"] = sum(len(jsonio.dumps(c.arguments)) for c in calls) // 4
            return Completion(turn.get("content"), calls, usage)
        if "final_answer" in turn:
            content = jsonio.dumps({"final_answer": turn["final_answer"]})
        else:
            content = str(turn.get("content", ""))
        usage["completion_tokens"] = len(content) // 4
        return Completion(content, (), usage)
