"""Per-question generation loop and the batch runner with checkpointing."""

from __future__ import annotations

import logging
import os
import re
import threading
import time
from concurrent.futures import FIRST_EXCEPTION, ThreadPoolExecutor, wait
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from finmcp import jsonio
from finmcp.agent.config import RunConfig
from finmcp.agent.mcp_client import InProcessTransport, McpClient
from finmcp.agent.models import ChatClient, Completion, mcp_tool_to_function
from finmcp.clock import Clock, make_clock
from finmcp.dataset import QARecord
from finmcp.errors import ModelEndpointFailure
from finmcp.protocol import Session
from finmcp.provider.base import Provider
from finmcp.tools import RunLog, ToolSuite

log = logging.getLogger(__name__)

FINAL_ANSWER_FORMAT = {
    "type": "json_schema",
    "json_schema": {
        "name": "final_answer",
        "strict": True,
        "schema": {
            "type": "object",
            "properties": {"final_answer": {"type": "string"}},
            "required": ["final_answer"],
            "additionalProperties": False,
        },
    },
}

FLAG_BUDGET = "budget_exhausted"
FLAG_EXTRACTION = "structured_extraction_failed"
FLAG_REFUSED = "tool_call_refused"

TOOLS_DISABLED_TEXT = "Error: tool access is disabled for this run."

CHECKPOINT_FILE = "checkpoint.jsonl"
RUNS_FILE = "runs.jsonl"
TOOL_LOG_FILE = "tool_calls.jsonl"


@dataclass
class RunRecord:
    question_id: str
    question: str
    ground_truth: str
    transcript: list[dict[str, Any]] = field(default_factory=list)
    tool_calls: list[dict[str, Any]] = field(default_factory=list)
    retrieved_context: str = ""
    final_answer: str = ""
    raw_output: str = ""
    rounds: list[dict[str, Any]] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunRecord":
        return cls(**data)

    def to_json(self) -> str:
        return jsonio.dumps(self.to_dict())


_FENCE = re.compile(r"^```(?:json)?\s*(.*?)\s*```$", re.S)


def extract_final_answer(content: str) -> tuple[str, bool]:
    """Pull ``final_answer`` out of a structured reply.

    Returns the answer and whether the structured parse succeeded; on failure
    the whole stripped completion comes back instead.
    """
    text = content.strip()
    m = _FENCE.match(text)
    body = m.group(1) if m else text
    try:
        obj = jsonio.loads(body)
    except ValueError:
        return text, False
    if isinstance(obj, dict) and isinstance(obj.get("final_answer"), str) and obj["final_answer"].strip():
        return obj["final_answer"].strip(), True
    return text, False


def _complete_with_retry(
    model: ChatClient, messages: list[dict[str, Any]], config: RunConfig, tools: list[dict[str, Any]] | None,
    tags: dict[str, str], sleep: Callable[[float], None],
) -> Completion:
    attempt = 0
    while True:
        try:
            return model.complete(
                messages, params=config.generator, tools=tools,
                response_format=FINAL_ANSWER_FORMAT, tags=tags,
            )
        except ModelEndpointFailure:
            if attempt >= config.max_model_retries:
                raise
            sleep(config.retry_backoff_s * (2 ** attempt))
            attempt += 1


def run_question(
    record: QARecord,
    config: RunConfig,
    session: McpClient | None,
    model: ChatClient,
    clock: Clock | None = None,
    no_tools: bool = False,
    sleep: Callable[[float], None] = time.sleep,
) -> RunRecord:
    """Run the tool-use loop for one question.

    ``session`` must already be initialized; pass ``None`` (or ``no_tools``)
    to run without tool access.
    """
    clock = clock or make_clock(config.clock)
    out = RunRecord(record.id, record.question, record.answer)
    messages: list[dict[str, Any]] = [
        {"role": "system", "content": config.resolved_system_prompt},
        {"role": "user", "content": record.question},
    ]
    out.transcript = messages
    tools_enabled = session is not None and not no_tools
    tools = [mcp_tool_to_function(t) for t in session.list_tools()] if tools_enabled else None
    tags = {"question_id": record.id}
    contexts: list[str] = []
    completion: Completion | None = None
    finished = False

    for round_no in range(config.max_rounds):
        # the last allowed round offers no tools, so the model has to answer
        forced = tools is not None and round_no == config.max_rounds - 1
        t0 = clock.monotonic()
        try:
            completion = _complete_with_retry(model, messages, config, None if forced else tools, tags, sleep)
        except ModelEndpointFailure as exc:
            out.error = f"ModelEndpointFailure: {exc}"
            break
        out.rounds.append({
            "round": round_no + 1,
            "elapsed_s": round(clock.monotonic() - t0, 6),
            "prompt_tokens": completion.usage.get("prompt_tokens", 0),
            "completion_tokens": completion.usage.get("completion_tokens", 0),
        })
        assistant: dict[str, Any] = {"role": "assistant", "content": completion.content}
        if completion.tool_calls:
            assistant["tool_calls"] = [c.to_message() for c in completion.tool_calls]
        messages.append(assistant)
        if forced:
            break  # tool requests made anyway are left unanswered
        if not completion.tool_calls:
            finished = True
            break
        for call in completion.tool_calls:
            if tools_enabled:
                result = session.call_tool(call.name, call.arguments)
                text = result.text
                if result.record is not None:
                    out.tool_calls.append(result.record)
            else:
                text = TOOLS_DISABLED_TEXT
                if FLAG_REFUSED not in out.flags:
                    out.flags.append(FLAG_REFUSED)
            messages.append({"role": "tool", "tool_call_id": call.id, "content": text})
            contexts.append(text)

    out.retrieved_context = "\n\n".join(contexts)
    if out.error is not None:
        return out
    if not finished:
        out.flags.append(FLAG_BUDGET)
    out.raw_output = (completion.content or "") if completion else ""
    answer, structured = extract_final_answer(out.raw_output)
    if not structured:
        out.flags.append(FLAG_EXTRACTION)
    out.final_answer = answer
    if not answer:
        out.error = "EmptyAnswer: the final completion had no content"
    return out


SessionFactory = Callable[[str], McpClient]


def in_process_sessions(
    provider: Provider,
    run_log: RunLog,
    clock_kind: str = "wall",
    period_cap: int | None = None,
) -> SessionFactory:
    """Factory giving each question its own initialized in-process session."""

    def factory(question_id: str) -> McpClient:
        suite = ToolSuite(provider, run_log, make_clock(clock_kind), period_cap=period_cap)
        client = McpClient(InProcessTransport(Session(suite, session_id=question_id)))
        client.initialize()
        return client

    return factory


def read_checkpoint(path: Path) -> dict[str, RunRecord]:
    """Load finished records; a torn last line from a crash is ignored."""
    done: dict[str, RunRecord] = {}
    if not path.exists():
        return done
    lines = path.read_bytes().split(b"\n")
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            rec = RunRecord.from_dict(jsonio.loads(line))
        except (ValueError, TypeError, KeyError):
            if i >= len(lines) - 2:
                log.warning("dropping truncated checkpoint line %d", i + 1)
                continue
            raise
        done[rec.question_id] = rec
    return done


def _rewrite_checkpoint(path: Path, records: Iterable[RunRecord]) -> None:
    tmp = path.with_suffix(".tmp")
    tmp.write_text("".join(r.to_json() + "\n" for r in records), encoding="utf-8")
    os.replace(tmp, path)


def _prune_run_log(path: Path, keep_sessions: set[str]) -> None:
    """Drop tool-call lines left behind by questions that never checkpointed."""
    if not path.exists():
        return
    kept = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        try:
            call_id = jsonio.loads(line)["call_id"]
        except (ValueError, KeyError, TypeError):
            continue
        if call_id.rsplit("-", 1)[0] in keep_sessions:
            kept.append(line + "\n")
    tmp = path.with_suffix(".tmp")
    tmp.write_text("".join(kept), encoding="utf-8")
    os.replace(tmp, path)


def write_runs(path: Path, records: Sequence[RunRecord]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text("".join(r.to_json() + "\n" for r in records), encoding="utf-8")
    os.replace(tmp, path)


def read_runs(path: Path | str) -> list[RunRecord]:
    p = Path(path)
    if p.is_dir():
        p = p / RUNS_FILE
    return [RunRecord.from_dict(jsonio.loads(line))
            for line in p.read_text(encoding="utf-8").splitlines() if line.strip()]


def run_benchmark(
    records: Sequence[QARecord],
    config: RunConfig,
    model: ChatClient,
    session_factory: SessionFactory | None,
    out_dir: Path | str | None = None,
    concurrency: int = 1,
    no_tools: bool = False,
    sleep: Callable[[float], None] = time.sleep,
) -> list[RunRecord]:
    """Run every question and return records in input order.

    With ``out_dir`` set, each finished question is appended to a checkpoint
    as it completes and a rerun skips question ids already present there.
    Failures of single questions are recorded on their RunRecord.
    """
    ids = [r.id for r in records]
    if len(set(ids)) != len(ids):
        raise ValueError("question ids must be unique")
    out = Path(out_dir) if out_dir is not None else None
    done: dict[str, RunRecord] = {}
    ckpt: Path | None = None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        ckpt = out / CHECKPOINT_FILE
        done = {k: v for k, v in read_checkpoint(ckpt).items() if k in set(ids)}
        if ckpt.exists():
            # normalise away any torn tail before appending
            _rewrite_checkpoint(ckpt, done.values())
            _prune_run_log(out / TOOL_LOG_FILE, set(done))
    pending = [r for r in records if r.id not in done]
    lock = threading.Lock()

    def one(rec: QARecord) -> RunRecord:
        session = None if no_tools or session_factory is None else session_factory(rec.id)
        try:
            result = run_question(rec, config, session, model, make_clock(config.clock), no_tools, sleep)
        except Exception as exc:  # keep the batch alive
            log.exception("question %s failed", rec.id)
            result = RunRecord(rec.id, rec.question, rec.answer, error=f"{type(exc).__name__}: {exc}")
        finally:
            if session is not None:
                session.close()
        with lock:
            done[rec.id] = result
            if ckpt is not None:
                with open(ckpt, "a", encoding="utf-8") as fh:
                    fh.write(result.to_json() + "\n")
                    fh.flush()
                    os.fsync(fh.fileno())
        return result

    if concurrency <= 1:
        for rec in pending:
            one(rec)
    else:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            futures = [pool.submit(one, rec) for rec in pending]
            wait(futures, return_when=FIRST_EXCEPTION)
            for f in futures:
                if f.done() and f.exception() is not None:
                    for g in futures:
                        g.cancel()
                    raise f.exception()
            wait(futures)

    ordered = [done[i] for i in ids]
    if out is not None:
        write_runs(out / RUNS_FILE, ordered)
    return ordered
