import json
import os
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from finmcp.dataset import (
    CARRIAGE_MARKER,
    NUMERICAL_REASONING,
    NUMERICAL_TYPES,
    PLACEHOLDER_ANSWER,
    NumberBins,
    QARecord,
    compute_corpus_stats,
    field_text,
    forward_word_count,
    load_lexicon,
    load_records,
    load_rows,
    number_occurrence_bin,
    numeric_counts,
    numeric_density,
    preprocess,
    preprocess_with_report,
    strip_carriage_markers,
    write_records,
)
from finmcp.errors import DatasetError, DuplicateId, EmptyLexicon, MissingColumn
from hand_cases import DENSITY_CASES, FORWARD_CASES


def raw_row(**over):
    row = {"_id": "r1", "text": "Q?", "answer": "A", "references": ["ref"], "category": "Risk",
           "type": "Information extraction", "reasoning": False}
    row.update(over)
    return row


def read_jsonl(path):
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]


def test_step_subtract():
    (r,) = preprocess([raw_row(type="Subtract", reasoning=True)])
    assert r.question_reasoning == "Subtraction"
    assert r.reasoning_group == NUMERICAL_REASONING


@pytest.mark.parametrize("empty", [None, "", "   ", float("nan")])
def test_step_fill_answer(empty):
    (r,) = preprocess([raw_row(answer=empty)])
    assert r.answer == "No ground truth provided by the authors."


def test_step_fill_absent_column():
    row = raw_row()
    del row["answer"]
    assert preprocess([row])[0].answer == PLACEHOLDER_ANSWER


def test_step_flip():
    (r,) = preprocess([raw_row(_id="8dc5ccdd", reasoning=False)])
    assert r.reasoning is True
    (other,) = preprocess([raw_row(_id="aaaaaaaa", reasoning=False)])
    assert other.reasoning is False


def test_steps_rename():
    (r,) = preprocess([raw_row()])
    assert r.question == "Q?" and r.question_reasoning == "Information extraction"


def test_group_derivation():
    for t in NUMERICAL_TYPES:
        assert preprocess([raw_row(type=t)])[0].reasoning_group == NUMERICAL_REASONING
    for t in ("Information extraction", "Logical reasoning"):
        assert preprocess([raw_row(type=t)])[0].reasoning_group == t
    with pytest.raises(DatasetError):
        preprocess([raw_row(type="Guesswork")])


def test_errors():
    row = raw_row()
    del row["category"]
    with pytest.raises(MissingColumn):
        preprocess([row])
    with pytest.raises(DuplicateId):
        preprocess([raw_row(), raw_row()])
    with pytest.raises(DatasetError):
        preprocess([raw_row(reasoning="maybe")])


def test_mini_golden(data_dir):
    raw = load_rows(data_dir / "mini_raw.jsonl")
    golden = read_jsonl(data_dir / "mini_golden.jsonl")
    records, recon = preprocess_with_report(raw)
    assert [r.to_dict() for r in records] == golden
    assert recon.total == 40
    assert recon.step_changes == {"step 1 Subtract->Subtraction": 3, "step 2 filled answers": 5,
                                  "step 3 reasoning flipped": 2}
    assert recon.reasoning_true == sum(g["reasoning"] for g in golden)
    assert sum(recon.category_counts.values()) == 40


def test_mini_idempotent(data_dir, tmp_path):
    once = preprocess(load_rows(data_dir / "mini_raw.jsonl"))
    twice = preprocess([r.to_dict() for r in once])
    assert twice == once
    out = tmp_path / "prep.jsonl"
    write_records(out, once)
    assert load_records(out) == once
    _, recon = preprocess_with_report([r.to_dict() for r in once])
    assert set(recon.step_changes.values()) == {0}


def test_csv_input(tmp_path, data_dir):
    import csv

    golden = read_jsonl(data_dir / "mini_golden.jsonl")[:3]
    path = tmp_path / "d.csv"
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["_id", "text", "answer", "references", "category", "type", "reasoning"])
        w.writeheader()
        for g in golden:
            w.writerow({"_id": g["id"], "text": g["question"], "answer": g["answer"],
                        "references": json.dumps(g["references"]), "category": g["category"],
                        "type": g["question_reasoning"], "reasoning": str(g["reasoning"])})
    assert [r.to_dict() for r in load_records(path)] == golden


record_rows = st.lists(
    st.fixed_dictionaries({
        "text": st.text(max_size=20),
        "answer": st.one_of(st.none(), st.just(""), st.text(max_size=20)),
        "references": st.lists(st.text(max_size=10), max_size=3),
        "category": st.sampled_from(["Financials", "Risk", "Legal"]),
        "type": st.sampled_from(["Subtract", "Subtraction", "Addition", "Logical reasoning",
                                 "Information extraction"]),
        "reasoning": st.booleans(),
    }),
    max_size=15,
)


@given(record_rows, st.booleans())
def test_idempotence_property(rows, include_flip):
    for i, row in enumerate(rows):
        row["_id"] = "8dc5ccdd" if include_flip and i == 0 else f"id{i}"
    once = preprocess(rows)
    assert len(once) == len(rows)
    assert preprocess([r.to_dict() for r in once]) == once
    for r in once:
        assert r.answer.strip()
        assert (r.reasoning_group == NUMERICAL_REASONING) == (r.question_reasoning in NUMERICAL_TYPES)


@pytest.mark.parametrize("text, expected", DENSITY_CASES)
def test_density_hand_cases(text, expected):
    numbers, total = numeric_counts(text)
    assert (Fraction(numbers, total) if total else Fraction(0)) == expected
    assert numeric_density(text) == float(expected)


@pytest.mark.parametrize("text, expected", FORWARD_CASES)
def test_forward_hand_cases(text, expected):
    assert forward_word_count(text) == expected


@given(st.text())
def test_density_bounds(text):
    assert 0.0 <= numeric_density(text) <= 1.0


@given(st.text(alphabet=st.characters(blacklist_categories=("Nd", "Zs", "Cc")), min_size=1).filter(str.strip))
def test_density_half(word):
    if any(ch.isspace() for ch in word) or any(ch.isdecimal() for ch in word):
        return
    assert numeric_density(f"{word} 5") == 0.5


@given(st.lists(st.sampled_from(["_X000D_", "_X000", "D_", "a", "_", "7"]), max_size=12).map("".join))
def test_marker_idempotent(text):
    once = strip_carriage_markers(text)
    assert CARRIAGE_MARKER not in once
    assert strip_carriage_markers(once) == once


def test_marker_examples():
    assert strip_carriage_markers("a_X000D_b") == "ab"
    assert strip_carriage_markers("plain") == "plain"
    assert strip_carriage_markers(strip_carriage_markers("x_X000D__X000D_y")) == "xy"
    assert strip_carriage_markers("_X000_X000D_D_") == ""


def test_answer_field_drops_markers():
    r = QARecord("i", "q", "Revenue 5_X000D_ rose", (), "Risk", "Addition", True, NUMERICAL_REASONING)
    assert field_text(r, "answer") == "Revenue 5 rose"
    assert numeric_counts(field_text(r, "answer")) == (1, 3)


def test_lexicon_errors(tmp_path):
    empty = tmp_path / "lex.txt"
    empty.write_text("# nothing here\n\n")
    with pytest.raises(EmptyLexicon):
        load_lexicon(empty)
    with pytest.raises(EmptyLexicon):
        forward_word_count("we expect", [])


def test_custom_lexicon(tmp_path):
    path = tmp_path / "lex.txt"
    path.write_text("Going Concern\nhedge\n")
    lex = load_lexicon(path)
    assert forward_word_count("going  concern doubts; we HEDGE", lex) == 2


def test_bins():
    assert number_occurrence_bin("no digits here") == "0"
    assert number_occurrence_bin(" ".join(["1"] * 150)) == "101+"
    assert number_occurrence_bin("a 1 b 2 c 3 d 4 e 5 f 6 g 7") == "1–10"
    assert number_occurrence_bin(" ".join(["9"] * 11)) == "11–50"
    assert number_occurrence_bin(" ".join(["9"] * 100)) == "51–100"
    assert number_occurrence_bin(" ".join(["9"] * 101)) == "101+"
    custom = NumberBins(((0, 4), (5, None)))
    assert custom.labels == ("0–4", "5+")
    with pytest.raises(ValueError):
        NumberBins(((1, 2),)).label_for(0)


def test_corpus_stats(data_dir):
    records = preprocess(load_rows(data_dir / "mini_raw.jsonl"))
    stats = compute_corpus_stats(records)
    counts = {}
    for (cat, fld), s in stats.by_key.items():
        assert 0.0 <= s.avg_numeric_density <= 1.0
        assert s.avg_forward_word_count >= 0
        counts[cat] = s.record_count
    assert sum(counts.values()) == len(records)
    ranked = stats.ranking("references", "avg_numeric_density")
    assert sorted(ranked) == stats.categories()


FINDER = os.environ.get("FINDER_PATH")


@pytest.mark.finder
@pytest.mark.skipif(not FINDER, reason="FINDER_PATH not set")
def test_finder_counts():
    records, recon = preprocess_with_report(load_rows(FINDER))
    assert recon.total == 5703
    assert recon.type_counts["Subtraction"] == 119
    assert recon.reasoning_true == 883
    assert recon.category_counts["Financials"] == 990
    assert recon.total - recon.category_counts["Financials"] == 4713


@pytest.mark.finder
@pytest.mark.skipif(not FINDER, reason="FINDER_PATH not set")
def test_finder_rankings():
    stats = compute_corpus_stats(preprocess(load_rows(FINDER)))
    assert stats.ranking("references", "avg_numeric_density")[0] == "Financials"
    assert stats.ranking("references", "avg_forward_word_count")[-1] == "Financials"
    assert stats.ranking("answer", "avg_forward_word_count")[-1] == "Financials"
