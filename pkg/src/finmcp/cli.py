"""Command-line entry point: serve, prep, bench, eval, report, demo, stub-vendor."""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from importlib import resources
from pathlib import Path
from typing import Sequence

from finmcp import jsonio

log = logging.getLogger("finmcp")


def _provider_config(args: argparse.Namespace):
    from finmcp.provider import ProviderConfig

    return ProviderConfig(
        kind=args.provider,
        fixtures_dir=Path(args.fixtures) if args.fixtures else None,
        base_url=args.base_url,
        auth_token_env=args.token_env,
        per_minute_budget=args.calls_per_minute,
    )


def _add_provider_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--provider", choices=("fixture", "http"), default="fixture")
    p.add_argument("--fixtures", help="fixture store directory (default: bundled demo store)")
    p.add_argument("--base-url", help="vendor base URL for --provider http")
    p.add_argument("--token-env", default="FINMCP_VENDOR_TOKEN",
                   help="environment variable holding the vendor token")
    p.add_argument("--calls-per-minute", type=int, default=None,
                   help="client-side request budget for the http provider")
    p.add_argument("--period-window", type=int, default=None,
                   help="hard cap on fiscal periods per tool call")


def cmd_serve(args: argparse.Namespace) -> int:
    from finmcp.clock import make_clock
    from finmcp.protocol import Session, serve
    from finmcp.provider import make_provider
    from finmcp.ratelimit import TokenBucket
    from finmcp.tools import RunLog, ToolSuite

    provider = make_provider(_provider_config(args))
    budget = TokenBucket(args.calls_per_minute) if args.calls_per_minute and args.provider == "fixture" else None
    suite = ToolSuite(provider, RunLog(args.log), make_clock(args.clock), args.period_window, budget)
    serve(Session(suite, session_id=args.session_id), sys.stdin.buffer, sys.stdout.buffer)
    return 0


def cmd_prep(args: argparse.Namespace) -> int:
    from finmcp.dataset import compute_corpus_stats, load_lexicon, load_rows, preprocess_with_report, write_records

    records, recon = preprocess_with_report(load_rows(args.dataset))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_records(out, records)
    sys.stdout.write(recon.to_text())
    if args.stats:
        stats = compute_corpus_stats(records, load_lexicon(args.lexicon))
        Path(args.stats).write_text(jsonio.dumps(stats.to_dict()) + "\n", encoding="utf-8")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    from finmcp.agent import McpClient, OpenAIChatClient, RunConfig, ScriptedModel, StdioTransport
    from finmcp.agent.runner import TOOL_LOG_FILE, in_process_sessions, run_benchmark
    from finmcp.dataset import load_records
    from finmcp.provider import make_provider
    from finmcp.tools import RunLog

    config = RunConfig.load(args.config)
    clock = args.clock or ("logical" if args.mock_script else config.clock)
    config = config.with_overrides(clock=clock)
    records = load_records(args.dataset)
    if args.limit:
        records = records[: args.limit]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = ScriptedModel.load(args.mock_script) if args.mock_script else OpenAIChatClient(config.model_endpoint)
    tool_log = out / TOOL_LOG_FILE
    if args.transport == "stdio":
        base = ["--provider", args.provider, "--log", str(tool_log), "--clock", clock,
                "--token-env", args.token_env]
        if args.fixtures:
            base += ["--fixtures", args.fixtures]
        if args.base_url:
            base += ["--base-url", args.base_url]
        if args.period_window:
            base += ["--period-window", str(args.period_window)]

        def factory(qid: str) -> McpClient:
            client = McpClient(StdioTransport([*base, "--session-id", qid]))
            client.initialize()
            return client
    else:
        provider = make_provider(_provider_config(args))
        factory = in_process_sessions(provider, RunLog(tool_log), clock, args.period_window)
    started = time.perf_counter()
    runs = run_benchmark(records, config, model, factory, out, args.concurrency, args.no_tools)
    failed = sum(1 for r in runs if r.error)
    calls = sum(len(r.tool_calls) for r in runs)
    log.info("bench: %d questions, %d tool calls, %d failed, %.2fs",
             len(runs), calls, failed, time.perf_counter() - started)
    sys.stdout.write(f"{len(runs)} runs written to {out / 'runs.jsonl'} ({failed} failed)\n")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    from finmcp.agent import OpenAIChatClient, RunConfig, read_runs
    from finmcp.evaluator import Judges, PromptSet, ReplayClient, ScriptedJudge, evaluate_runs

    config = RunConfig.load(args.config)
    runs = read_runs(args.runs)
    if args.replay:
        client = ReplayClient.from_dir(args.replay)
    elif args.mock_judges:
        client = ScriptedJudge.load(args.mock_judges)
    else:
        client = OpenAIChatClient(config.judge_endpoint)
    judges = Judges.from_config(client, config, PromptSet.load(args.prompts))
    if args.replay or args.mock_judges:
        judges.sleep = lambda s: None
    results = evaluate_runs(runs, judges, args.out, args.concurrency)
    unscored = sum(1 for r in results if any(f.startswith("unscored") for f in r.flags))
    sys.stdout.write(f"{len(results)} evaluations written to {Path(args.out) / 'evals.jsonl'} "
                     f"({unscored} with unscored metrics)\n")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    from finmcp.dataset import compute_corpus_stats, load_lexicon, load_records
    from finmcp.evaluator import read_evals
    from finmcp.report import build_summary, build_tables, emit_report, join

    records = load_records(args.dataset)
    results = read_evals(args.evals)
    if args.subset:
        ids = {r.question_id for r in results}
        records = [r for r in records if r.id in ids]
    joined = join(results, records)
    stats = compute_corpus_stats(records, load_lexicon(args.lexicon))
    tables = build_tables(joined, stats, args.small_n)
    written = emit_report(tables, build_summary(joined, records, stats), args.out, args.format)
    sys.stdout.write(f"{len(written)} report files written to {args.out}\n")
    return 0


def demo_paths() -> dict[str, Path]:
    root = Path(str(resources.files("finmcp") / "data" / "demo"))
    return {
        "dataset": root / "questions.jsonl",
        "script": root / "mock_model.json",
        "judges": root / "mock_judges.json",
    }


def cmd_demo(args: argparse.Namespace) -> int:
    """bench, eval and report over the bundled ten-question demo."""
    paths = demo_paths()
    out = Path(args.out)
    steps = [
        ["bench", "--dataset", str(paths["dataset"]), "--out", str(out / "runs"),
         "--mock-script", str(paths["script"]), "--concurrency", "4"],
        ["eval", "--runs", str(out / "runs"), "--out", str(out / "evals"),
         "--mock-judges", str(paths["judges"])],
        ["report", "--evals", str(out / "evals"), "--dataset", str(paths["dataset"]),
         "--out", str(out / "report"), "--format", args.format],
    ]
    for step in steps:
        rc = main(step)
        if rc:
            return rc
    return 0


def cmd_stub_vendor(args: argparse.Namespace) -> int:
    from finmcp.provider.stub import StubVendor

    token = os.environ.get(args.token_env) if args.token_env else None
    stub = StubVendor(args.fixtures, token=token, host=args.host, port=args.port)
    sys.stderr.write(f"stub vendor listening on {stub.url}\n")
    try:
        stub.server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        stub.server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="finmcp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run an MCP server on stdio")
    _add_provider_args(p)
    p.add_argument("--log", help="append tool-call records to this JSON-lines file")
    p.add_argument("--session-id", default="session", help="prefix for tool call ids")
    p.add_argument("--clock", choices=("wall", "logical"), default="wall")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("prep", help="preprocess a raw dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="output JSON-lines file")
    p.add_argument("--stats", help="also write per-category text statistics here")
    p.add_argument("--lexicon", help="forward-looking word list (default: bundled)")
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("bench", help="run the benchmark")
    p.add_argument("--dataset", required=True)
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("--out", required=True)
    p.add_argument("--no-tools", action="store_true", help="offer the model no tools")
    p.add_argument("--mock-script", help="scripted model turns instead of a live endpoint")
    p.add_argument("--concurrency", type=int, default=4)
    p.add_argument("--limit", type=int, default=None, help="run only the first N questions")
    p.add_argument("--transport", choices=("inprocess", "stdio"), default="inprocess")
    p.add_argument("--clock", choices=("wall", "logical"), default=None)
    _add_provider_args(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("eval", help="score benchmark runs with LLM judges")
    p.add_argument("--runs", required=True, help="runs.jsonl or the bench output directory")
    p.add_argument("--out", required=True)
    p.add_argument("--replay", help="replay judge replies from a previous eval directory")
    p.add_argument("--mock-judges", help="scripted judge replies")
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("--prompts", help="directory with replacement judge prompts")
    p.add_argument("--concurrency", type=int, default=4)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="aggregate evaluations into tables and charts")
    p.add_argument("--evals", required=True, help="evals.jsonl or the eval output directory")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "md"), default="csv")
    p.add_argument("--small-n", type=int, default=30, help="flag groups smaller than this")
    p.add_argument("--lexicon", help="forward-looking word list (default: bundled)")
    p.add_argument("--subset", action="store_true",
                   help="restrict the dataset to the evaluated ids instead of failing on a mismatch")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("demo", help="offline end-to-end run on the bundled demo questions")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "md"), default="md")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("stub-vendor", help="serve a fixture store over http")
    p.add_argument("--fixtures")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--token-env", default="FINMCP_VENDOR_TOKEN",
                   help="require the token held in this variable (unset: no auth)")
    p.set_defaults(func=cmd_stub_vendor)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if not logging.getLogger().handlers:
        level = logging.WARNING - 10 * min(args.verbose, 2)
        logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    from finmcp.errors import FinMcpError

    try:
        return int(args.func(args) or 0)
    except FinMcpError as exc:
        sys.stderr.write(f"finmcp {args.command}: {type(exc).__name__}: {exc}\n")
        return 2
