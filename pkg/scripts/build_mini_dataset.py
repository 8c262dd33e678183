"""Write the 40-record synthetic mini-dataset and its expected preprocessed form.

Each row is built from its intended clean values first; the raw row is then
damaged on purpose (old type label, missing answer, wrong reasoning flag,
raw column names). The expected record is the clean intent, so it does not
depend on the preprocessing code at all.

Usage: python3 scripts/build_mini_dataset.py [out_dir]   (default tests/data)
"""

import json
import random
import sys
from pathlib import Path

PLACEHOLDER = "No ground truth provided by the authors."
CATEGORIES = ["Financials", "Accounting", "Risk", "Governance", "Company overview", "Legal", "Footnotes",
              "Shareholder return"]
TYPES = ["Information extraction", "Logical reasoning", "Addition", "Compositional", "Division",
         "Multiplication", "Subtraction"]
NUMERIC = {"Addition", "Compositional", "Division", "Multiplication", "Subtraction"}
FLIPS = ["8dc5ccdd", "2dba4bde"]


def build(seed: int = 20240607):
    rng = random.Random(seed)
    raw, golden = [], []
    ids = FLIPS + [f"{rng.getrandbits(32):08x}" for _ in range(38)]
    for i, rid in enumerate(ids):
        qtype = TYPES[i % len(TYPES)]
        category = CATEGORIES[i % len(CATEGORIES)]
        flagged = qtype in NUMERIC and i % 3 != 0
        answer = f"Value {i * 17 % 101} million_X000D_ in FY{2019 + i % 5}" if i % 4 else f"Answer {i}"
        refs = [f"Reference {i}a with {i} items", f"Reference {i}b"]
        row = {
            "_id": rid,
            "text": f"Question {i} about {category.lower()}?",
            "answer": answer,
            "references": refs,
            "category": category,
            "type": qtype,
            "reasoning": flagged,
        }
        expected_reasoning = flagged
        expected_answer = answer
        # damage
        if qtype == "Subtraction" and i % 2 == 0:
            row["type"] = "Subtract"
        if rid in FLIPS:
            row["reasoning"] = False
            expected_reasoning = True
        if i in (5, 11, 23):
            row["answer"] = None
            expected_answer = PLACEHOLDER
        elif i in (17, 29):
            row["answer"] = "   "
            expected_answer = PLACEHOLDER
        if i % 5 == 0:
            row["references"] = json.dumps(refs)
        if i % 7 == 3:
            row["reasoning"] = "True" if row["reasoning"] else "False"
        raw.append(row)
        if qtype in NUMERIC:
            group = "Numerical reasoning"
        else:
            group = qtype
        golden.append({
            "id": rid,
            "question": row["text"],
            "answer": expected_answer,
            "references": refs,
            "category": category,
            "question_reasoning": qtype,
            "reasoning": expected_reasoning,
            "reasoning_group": group,
        })
    return raw, golden


def main() -> None:
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "tests/data")
    out.mkdir(parents=True, exist_ok=True)
    raw, golden = build()
    for name, rows in (("mini_raw.jsonl", raw), ("mini_golden.jsonl", golden)):
        with open(out / name, "w", encoding="utf-8") as fh:
            for r in rows:
                fh.write(json.dumps(r, sort_keys=True) + "\n")
    print(f"wrote {len(raw)} rows to {out}")


if __name__ == "__main__":
    main()
