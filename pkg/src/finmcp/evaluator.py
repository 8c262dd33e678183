"""LLM-judge scoring of run records.

Context relevance and response groundedness each ask two judges for a 0/1/2
score and combine them onto a quarter-point lattice. Answer accuracy asks one
judge for a binary verdict. Every judge exchange is recorded so a later run
can replay it without calling any endpoint.
"""

from __future__ import annotations

import logging
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Sequence

from finmcp import jsonio
from finmcp.agent.config import ModelParams, RunConfig
from finmcp.agent.models import ChatClient, Completion
from finmcp.agent.runner import RunRecord
from finmcp.dataset import PLACEHOLDER_ANSWER
from finmcp.errors import FinMcpError, JudgeEndpointFailure, ModelEndpointFailure

log = logging.getLogger(__name__)

CONTEXT_RELEVANCE = "context_relevance"
RESPONSE_GROUNDEDNESS = "response_groundedness"
ANSWER_ACCURACY = "answer_accuracy"
METRICS = (CONTEXT_RELEVANCE, RESPONSE_GROUNDEDNESS, ANSWER_ACCURACY)

HIGH_QUALITY_THRESHOLD = 0.75
LATTICE = (0.0, 0.25, 0.5, 0.75, 1.0)

EVALS_FILE = "evals.jsonl"
TRANSCRIPT_DIR = "transcripts"

FLAG_EXCLUDED = "excluded_placeholder_ground_truth"
FLAG_RUN_ERROR = "run_error"


class OutOfRangeScore(FinMcpError):
    pass


class UnparseableVerdict(FinMcpError):
    pass


class ReplayMismatch(FinMcpError):
    """A replayed judge call has no recording or its prompt changed."""


def combine_judge_scores(s1: int, s2: int) -> float:
    for s in (s1, s2):
        if isinstance(s, bool) or not isinstance(s, int) or s not in (0, 1, 2):
            raise OutOfRangeScore(f"judge score {s!r} is not 0, 1 or 2")
    return (s1 / 2 + s2 / 2) / 2


def is_high_quality(context_relevance: float | None) -> bool | None:
    if context_relevance is None:
        return None
    return context_relevance >= HIGH_QUALITY_THRESHOLD


# prompts


def fill(template: str, **values: str) -> str:
    """Substitute ``{name}`` slots without treating other braces as fields."""
    for key, value in values.items():
        template = template.replace("{" + key + "}", value)
    return template


@dataclass(frozen=True)
class PromptSet:
    context_relevance: tuple[str, str]
    groundedness: tuple[str, str]
    accuracy: str
    rubric: str
    reprompt: str

    @classmethod
    def load(cls, directory: Path | str | None = None) -> "PromptSet":
        if directory is None:
            root = resources.files("finmcp") / "data" / "prompts"
            read = lambda name: (root / name).read_text(encoding="utf-8")  # noqa: E731
        else:
            base = Path(directory)
            read = lambda name: (base / name).read_text(encoding="utf-8")  # noqa: E731
        return cls(
            (read("context_relevance_1.txt"), read("context_relevance_2.txt")),
            (read("groundedness_1.txt"), read("groundedness_2.txt")),
            read("answer_accuracy.txt"),
            read("answer_accuracy_rubric.txt").strip(),
            read("reprompt.txt"),
        )


def score_format(allowed: Sequence[int]) -> dict[str, Any]:
    return {
        "type": "json_schema",
        "json_schema": {
            "name": "judge_score",
            "strict": True,
            "schema": {
                "type": "object",
                "properties": {"score": {"type": "integer", "enum": list(allowed)}},
                "required": ["score"],
                "additionalProperties": False,
            },
        },
    }


_BARE = re.compile(r"^\s*\[?\s*(-?\d+)\s*\]?\s*\.?\s*$")


def parse_score(reply: str | None, allowed: Sequence[int]) -> int:
    """Read ``{"score": n}``, a bare integer or ``[n]``; anything else is rejected."""
    if reply is None:
        raise UnparseableVerdict("empty reply")
    text = reply.strip()
    value: Any = None
    try:
        obj = jsonio.loads(text)
    except ValueError:
        m = _BARE.match(text)
        if not m:
            raise UnparseableVerdict(f"cannot read a score from {text[:80]!r}") from None
        value = int(m.group(1))
    else:
        if isinstance(obj, dict) and "score" in obj:
            value = obj["score"]
        elif isinstance(obj, int) and not isinstance(obj, bool):
            value = obj
        elif isinstance(obj, list) and len(obj) == 1:
            value = obj[0]
        else:
            raise UnparseableVerdict(f"cannot read a score from {text[:80]!r}")
    if isinstance(value, bool) or not isinstance(value, int):
        raise UnparseableVerdict(f"score {value!r} is not an integer")
    if value not in allowed:
        raise OutOfRangeScore(f"score {value} outside {list(allowed)}")
    return value


# judges


@dataclass
class Judges:
    """Two judge slots; by default one model sampled with two seeds."""

    clients: tuple[ChatClient, ChatClient]
    params: tuple[ModelParams, ModelParams]
    prompts: PromptSet = field(default_factory=PromptSet.load)
    max_endpoint_retries: int = 2
    retry_backoff_s: float = 1.0
    sleep: Callable[[float], None] = time.sleep

    @classmethod
    def from_config(cls, client: ChatClient, config: RunConfig, prompts: PromptSet | None = None,
                    second: ChatClient | None = None) -> "Judges":
        s1, s2 = config.judge_seeds
        return cls(
            (client, second or client),
            (replace(config.evaluator, seed=s1), replace(config.evaluator, seed=s2)),
            prompts or PromptSet.load(),
            retry_backoff_s=config.retry_backoff_s,
        )


@dataclass
class _Recorder:
    question_id: str
    calls: list[dict[str, Any]] = field(default_factory=list)


def _ask(judges: Judges, rec: _Recorder, metric: str, judge: int, prompt: str,
         allowed: Sequence[int]) -> int | None:
    """One judge's score, with endpoint retries and a single re-prompt."""
    client = judges.clients[judge]
    params = judges.params[judge]
    messages: list[dict[str, Any]] = [{"role": "user", "content": prompt}]
    attempt = 0
    reprompted = False
    failures = 0
    while True:
        tags = {"question_id": rec.question_id, "metric": metric, "judge": str(judge), "attempt": str(attempt)}
        entry: dict[str, Any] = {
            "metric": metric, "judge": judge, "attempt": attempt,
            "messages": [dict(m) for m in messages], "params": params.as_request(),
            "prompt_digest": jsonio.digest(messages),
        }
        rec.calls.append(entry)
        attempt += 1
        try:
            completion = client.complete(
                messages, params=params, response_format=score_format(allowed), tags=tags,
            )
        except (ModelEndpointFailure, JudgeEndpointFailure) as exc:
            entry["error"] = str(exc)
            failures += 1
            if failures > judges.max_endpoint_retries:
                return None
            judges.sleep(judges.retry_backoff_s * 2 ** (failures - 1))
            continue
        entry["reply"] = completion.content
        try:
            score = parse_score(completion.content, allowed)
        except (UnparseableVerdict, OutOfRangeScore) as exc:
            entry["parse_error"] = str(exc)
            if reprompted:
                return None
            reprompted = True
            allowed_text = ", ".join(str(a) for a in allowed)
            messages = messages + [
                {"role": "assistant", "content": completion.content or ""},
                {"role": "user", "content": fill(judges.prompts.reprompt, allowed=allowed_text).strip()},
            ]
            continue
        entry["score"] = score
        return score


def _two_judge_metric(judges: Judges, rec: _Recorder, metric: str, prompts: tuple[str, str],
                      **values: str) -> tuple[float | None, list[int | None]]:
    scores = [_ask(judges, rec, metric, j, fill(prompts[j], **values), (0, 1, 2)) for j in (0, 1)]
    if any(s is None for s in scores):
        return None, scores
    return combine_judge_scores(scores[0], scores[1]), scores


def score_context_relevance(question: str, retrieved_context: str, judges: Judges,
                            recorder: _Recorder | None = None) -> float | None:
    """Two-judge relevance of the context to the question; empty context scores 0 with no calls."""
    if not retrieved_context.strip():
        return 0.0
    rec = recorder or _Recorder("")
    value, _ = _two_judge_metric(judges, rec, CONTEXT_RELEVANCE, judges.prompts.context_relevance,
                                 query=question, context=retrieved_context)
    return value


def score_response_groundedness(answer: str, retrieved_context: str, judges: Judges,
                                recorder: _Recorder | None = None) -> float | None:
    if not retrieved_context.strip():
        return 0.0
    rec = recorder or _Recorder("")
    value, _ = _two_judge_metric(judges, rec, RESPONSE_GROUNDEDNESS, judges.prompts.groundedness,
                                 response=answer, context=retrieved_context)
    return value


def score_answer_accuracy(question: str, final_answer: str, ground_truth: str, judges: Judges,
                          recorder: _Recorder | None = None) -> int | None:
    rec = recorder or _Recorder("")
    prompt = fill(judges.prompts.accuracy, rubric=judges.prompts.rubric, query=question,
                  reference=ground_truth, response=final_answer)
    return _ask(judges, rec, ANSWER_ACCURACY, 0, prompt, (0, 1))


# results


@dataclass
class EvalResult:
    question_id: str
    context_relevance: float | None
    response_groundedness: float | None
    answer_accuracy: int | None
    high_quality: bool | None
    excluded: bool = False
    flags: list[str] = field(default_factory=list)
    judge_transcripts: list[dict[str, Any]] = field(default_factory=list)

    def __post_init__(self) -> None:
        for v in (self.context_relevance, self.response_groundedness):
            if v is not None and v not in LATTICE:
                raise ValueError(f"lattice metric {v!r} is off the 0.25 grid")
        if self.answer_accuracy not in (None, 0, 1):
            raise ValueError(f"answer_accuracy {self.answer_accuracy!r} is not binary")
        if self.high_quality != is_high_quality(self.context_relevance):
            raise ValueError("high_quality disagrees with context_relevance")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EvalResult":
        d = dict(data)
        for key in ("context_relevance", "response_groundedness"):
            if d.get(key) is not None:
                d[key] = float(d[key])
        return cls(**d)

    def to_json(self) -> str:
        return jsonio.dumps(self.to_dict())


def evaluate_run(run: RunRecord, judges: Judges) -> EvalResult:
    rec = _Recorder(run.question_id)
    excluded = run.ground_truth == PLACEHOLDER_ANSWER
    flags = [FLAG_EXCLUDED] if excluded else []
    if run.error is not None:
        return EvalResult(run.question_id, None, None, None, None, excluded, flags + [FLAG_RUN_ERROR])
    cr = score_context_relevance(run.question, run.retrieved_context, judges, rec)
    rg = score_response_groundedness(run.final_answer, run.retrieved_context, judges, rec)
    aa = score_answer_accuracy(run.question, run.final_answer, run.ground_truth, judges, rec)
    for name, value in ((CONTEXT_RELEVANCE, cr), (RESPONSE_GROUNDEDNESS, rg), (ANSWER_ACCURACY, aa)):
        if value is None:
            flags.append(f"unscored_{name}")
    return EvalResult(run.question_id, cr, rg, aa, is_high_quality(cr), excluded, flags, rec.calls)


# replay and scripted judges


class ReplayClient:
    """Answers judge calls from recorded transcripts, checking each prompt."""

    def __init__(self, transcripts: dict[str, list[dict[str, Any]]]) -> None:
        self._calls: dict[tuple[str, str, str, str], dict[str, Any]] = {}
        for qid, calls in transcripts.items():
            for c in calls:
                self._calls[(qid, c["metric"], str(c["judge"]), str(c["attempt"]))] = c

    @classmethod
    def from_dir(cls, directory: Path | str) -> "ReplayClient":
        base = Path(directory)
        if (base / TRANSCRIPT_DIR).is_dir():
            base = base / TRANSCRIPT_DIR
        data = {}
        for path in sorted(base.glob("*.json")):
            doc = jsonio.loads(path.read_text(encoding="utf-8"))
            data[doc["question_id"]] = doc["calls"]
        return cls(data)

    def complete(self, messages, *, params, tools=None, response_format=None, tags=None):
        t = tags or {}
        key = (t.get("question_id", ""), t.get("metric", ""), t.get("judge", ""), t.get("attempt", ""))
        call = self._calls.get(key)
        if call is None:
            raise ReplayMismatch(f"no recorded judge call for {key}")
        if call["prompt_digest"] != jsonio.digest(list(messages)):
            raise ReplayMismatch(f"prompt changed since recording for {key}")
        if "error" in call:
            raise JudgeEndpointFailure(call["error"])
        return Completion(call.get("reply"))


class ScriptedJudge:
    """Judge stand-in driven by a per-question table of replies.

    ``{"questions": {qid: {metric: replies}}, "default": {metric: replies}}``
    where the lattice metrics list one entry per judge and accuracy has a
    single entry. An entry is an integer (sent as ``{"score": n}``), a raw
    string, ``{"error": msg}``, or a list of those played per attempt.
    """

    def __init__(self, script: dict[str, Any]) -> None:
        self.questions = dict(script.get("questions", {}))
        self.default = dict(script.get("default", {
            CONTEXT_RELEVANCE: [2, 2], RESPONSE_GROUNDEDNESS: [2, 2], ANSWER_ACCURACY: 1,
        }))
        self.calls = 0
        self._lock = threading.Lock()

    @classmethod
    def load(cls, path: Path | str) -> "ScriptedJudge":
        return cls(jsonio.loads(Path(path).read_text(encoding="utf-8")))

    def complete(self, messages, *, params, tools=None, response_format=None, tags=None):
        with self._lock:
            self.calls += 1
        t = tags or {}
        table = {**self.default, **self.questions.get(t.get("question_id", ""), {})}
        entry = table.get(t.get("metric", ""))
        if entry is None:
            raise JudgeEndpointFailure(f"no scripted reply for {t.get('metric')}")
        if t.get("metric") != ANSWER_ACCURACY:
            entry = entry[int(t.get("judge", 0))]
        if isinstance(entry, list):
            entry = entry[min(int(t.get("attempt", 0)), len(entry) - 1)]
        if isinstance(entry, dict) and "error" in entry:
            raise JudgeEndpointFailure(str(entry["error"]))
        if isinstance(entry, int) and not isinstance(entry, bool):
            return Completion(jsonio.dumps({"score": entry}))
        return Completion(str(entry))


# batch


def write_transcript(directory: Path, result: EvalResult) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{result.question_id}.json"
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(jsonio.dumps({"question_id": result.question_id, "calls": result.judge_transcripts}) + "\n",
                   encoding="utf-8")
    os.replace(tmp, path)
    return path


def evaluate_runs(
    runs: Sequence[RunRecord],
    judges: Judges,
    out_dir: Path | str | None = None,
    concurrency: int = 1,
) -> list[EvalResult]:
    """Score every run, preserving input order; writes evals and transcripts when ``out_dir`` is set."""
    out = Path(out_dir) if out_dir is not None else None
    tdir = out / TRANSCRIPT_DIR if out is not None else None

    def one(run: RunRecord) -> EvalResult:
        result = evaluate_run(run, judges)
        if tdir is not None:
            write_transcript(tdir, result)
        return result

    if concurrency <= 1:
        results = [one(r) for r in runs]
    else:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            results = list(pool.map(one, runs))
    if out is not None:
        write_evals(out / EVALS_FILE, results)
    return results


def write_evals(path: Path, results: Sequence[EvalResult]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text("".join(r.to_json() + "\n" for r in results), encoding="utf-8")
    os.replace(tmp, path)


def read_evals(path: Path | str) -> list[EvalResult]:
    p = Path(path)
    if p.is_dir():
        p = p / EVALS_FILE
    return [EvalResult.from_dict(jsonio.loads(line))
            for line in p.read_text(encoding="utf-8").splitlines() if line.strip()]
