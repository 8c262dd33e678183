"""Shared drivers for slow, end-to-end style checks."""

import subprocess
import sys
import time
from pathlib import Path

GOLDEN = Path(__file__).parent / "golden"
GOLDEN_SERVE_ARGS = ["serve", "--provider", "fixture", "--clock", "logical", "--session-id", "golden"]


def run_golden_session():
    """Feed the recorded request script to a real stdio server.

    Returns (stdout bytes, expected bytes, seconds spent in the session).
    """
    requests = (GOLDEN / "protocol_requests.jsonl").read_bytes()
    expected = (GOLDEN / "protocol_responses.jsonl").read_bytes()
    started = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "finmcp", *GOLDEN_SERVE_ARGS], input=requests,
                          capture_output=True, timeout=30)
    elapsed = time.perf_counter() - started
    assert proc.returncode == 0, proc.stderr.decode()
    return proc.stdout, expected, elapsed


def demo_inputs():
    """Bundled demo questions and scripted model."""
    from finmcp.agent import ScriptedModel
    from finmcp.cli import demo_paths
    from finmcp.dataset import load_records

    paths = demo_paths()
    return load_records(paths["dataset"]), ScriptedModel.load(paths["script"]), paths


def bench(records, model, out_dir=None, concurrency=1, no_tools=False, provider=None, **overrides):
    """run_benchmark over in-process fixture sessions with a logical clock."""
    from finmcp.agent import RunConfig
    from finmcp.agent.runner import TOOL_LOG_FILE, in_process_sessions, run_benchmark
    from finmcp.provider import FixtureProvider
    from finmcp.tools import RunLog

    config = RunConfig(clock="logical", **overrides)
    log_path = Path(out_dir) / TOOL_LOG_FILE if out_dir is not None else None
    log = RunLog(log_path)
    factory = in_process_sessions(provider or FixtureProvider(), log, "logical")
    runs = run_benchmark(records, config, model, factory, out_dir, concurrency, no_tools,
                         sleep=lambda s: None)
    return runs, log
