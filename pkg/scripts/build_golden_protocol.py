"""Capture the golden stdio transcript used by the protocol conformance test.

The request script is fixed below. Responses come from a real ``finmcp serve``
subprocess with a logical clock, and are reviewed by hand before being
committed. Rerun only when the wire format changes on purpose.

Usage: python3 scripts/build_golden_protocol.py [out_dir]   (default tests/golden)
"""

import json
import subprocess
import sys
from pathlib import Path

REQUESTS = [
    {"jsonrpc": "2.0", "id": 1, "method": "initialize",
     "params": {"protocolVersion": "2025-06-18", "capabilities": {},
                "clientInfo": {"name": "golden-client", "version": "1"}}},
    {"jsonrpc": "2.0", "method": "notifications/initialized"},
    {"jsonrpc": "2.0", "id": 2, "method": "tools/list"},
    {"jsonrpc": "2.0", "id": 3, "method": "tools/call",
     "params": {"name": "get_income_statement",
                "arguments": {"comp_name": "FixtureCorp", "period": "FY2023", "periods": 2}}},
    {"jsonrpc": "2.0", "id": 4, "method": "tools/call",
     "params": {"name": "get_stock_price", "arguments": {"comp_name": "FixtureCorp"}}},
    {"jsonrpc": "2.0", "id": 5, "method": "tools/call",
     "params": {"name": "get_balancesheet_statement", "arguments": {"comp_name": "FixtureCorp", "period": "2023"}}},
]

SERVE_ARGS = ["serve", "--provider", "fixture", "--clock", "logical", "--session-id", "golden"]


def main() -> None:
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "tests/golden")
    out.mkdir(parents=True, exist_ok=True)
    request_text = "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in REQUESTS)
    proc = subprocess.run([sys.executable, "-m", "finmcp", *SERVE_ARGS], input=request_text.encode(),
                          capture_output=True, check=True)
    (out / "protocol_requests.jsonl").write_text(request_text, encoding="utf-8")
    (out / "protocol_responses.jsonl").write_bytes(proc.stdout)
    print(f"{len(proc.stdout.splitlines())} responses written to {out}")


if __name__ == "__main__":
    main()
