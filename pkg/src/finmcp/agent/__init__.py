"""Generation loop: chat model plus MCP tool session per question."""

from finmcp.agent.config import Endpoint, ModelParams, RunConfig
from finmcp.agent.mcp_client import InProcessTransport, McpClient, StdioTransport, ToolResult
from finmcp.agent.models import ChatClient, Completion, OpenAIChatClient, ScriptedModel, ToolCall
from finmcp.agent.runner import (
    RunRecord,
    extract_final_answer,
    in_process_sessions,
    read_runs,
    run_benchmark,
    run_question,
)

__all__ = [
    "ChatClient", "Completion", "Endpoint", "InProcessTransport", "McpClient", "ModelParams",
    "OpenAIChatClient", "RunConfig", "RunRecord", "ScriptedModel", "StdioTransport", "ToolCall",
    "ToolResult", "extract_final_answer", "in_process_sessions", "read_runs", "run_benchmark",
    "run_question",
]
