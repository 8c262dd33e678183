import threading
from datetime import date
from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import money_cells, other_cells, scaled_calls
from finmcp.clock import LogicalClock
from finmcp.errors import (
    ArgumentValidation,
    InvalidDateRange,
    PeriodUnavailable,
    UnknownCompany,
    UnknownTool,
)
from finmcp.provider import Scale, StatementKind
from finmcp.tools import (
    TOOL_NAMES,
    RunLog,
    ToolArgs,
    ToolCallRecord,
    ToolSuite,
    get_acquisitions,
    get_earningscall_transcript,
    get_financial_statement,
    get_operating_metrics,
    get_pension_plan,
    get_segment_revenue,
    parse_transcript_text,
    render_table,
)

TABLE_1 = (
    "get_acquisitions", "get_balancesheet_statement", "get_business_segments", "get_capital_structure",
    "get_cashflow_statement", "get_earningscall_transcript", "get_geographic_segments",
    "get_income_statement", "get_operating_metrics", "get_pension_plan", "get_product_segments",
)


def test_registry_names():
    assert TOOL_NAMES == TABLE_1


def test_income_statement(provider):
    t = get_financial_statement(StatementKind.INCOME, ToolArgs("FixtureCorp", "FY2023"), provider)
    assert t.columns == ("FY2023",)
    assert t.row("Revenue").values == (Decimal("5003.2"),)
    assert t.scale == Scale.MILLIONS


def test_thousands_vs_millions(provider):
    m = get_financial_statement(StatementKind.INCOME, ToolArgs("FixtureCorp", "FY2023", Scale.MILLIONS), provider)
    k = get_financial_statement(StatementKind.INCOME, ToolArgs("FixtureCorp", "FY2023", Scale.THOUSANDS), provider)
    assert [r.label for r in m.rows] == [r.label for r in k.rows]
    assert k.row("Revenue").values == (Decimal("5003200"),)
    for key, v in money_cells(m).items():
        assert money_cells(k)[key] == v * 1000


def test_unknown_company(provider):
    with pytest.raises(UnknownCompany):
        get_financial_statement(StatementKind.INCOME, ToolArgs("NoSuchCo", "FY2023"), provider)


def test_period_unavailable(provider):
    with pytest.raises(PeriodUnavailable):
        get_financial_statement(StatementKind.INCOME, ToolArgs("FixtureCorp", "FY2010"), provider)


def test_trailing_periods(provider):
    t = get_financial_statement(StatementKind.INCOME, ToolArgs("FixtureCorp", "FY2023", periods=3), provider)
    assert t.columns == ("FY2023", "FY2022", "FY2021")
    capped = get_financial_statement(StatementKind.INCOME, ToolArgs("FixtureCorp", "FY2023", periods=9),
                                     provider, period_cap=2)
    assert capped.columns == ("FY2023", "FY2022")
    # only as much history as the store has
    t = get_financial_statement(StatementKind.INCOME, ToolArgs("FixtureCorp", "FY2020", periods=5), provider)
    assert t.columns == ("FY2020", "FY2019")
    for row in t.rows:
        assert len(row.values) == len(t.columns)


def test_product_segments(provider):
    t = get_segment_revenue(StatementKind.PRODUCT_SEGMENTS, ToolArgs("FixtureCorp", "FY2023"), provider)
    assert [r.label for r in t.rows] == ["Apparel", "Footwear", "Accessories", "Total revenue"]
    assert sum(r.values[0] for r in t.rows[:-1]) == t.row("Total revenue").values[0]


def test_segments_absent_is_empty(provider):
    t = get_segment_revenue(StatementKind.PRODUCT_SEGMENTS, ToolArgs("QuietLabs", "FY2023"), provider)
    assert t.rows == ()


def test_wrong_kind_for_wrapper(provider):
    with pytest.raises(ValueError):
        get_financial_statement(StatementKind.PENSION_PLAN, ToolArgs("FixtureCorp", "FY2023"), provider)
    with pytest.raises(ValueError):
        get_segment_revenue(StatementKind.INCOME, ToolArgs("FixtureCorp", "FY2023"), provider)


def test_physical_rows_ignore_scale(provider):
    m = get_operating_metrics(ToolArgs("FixtureCorp", "FY2023", Scale.MILLIONS), provider)
    u = get_operating_metrics(ToolArgs("FixtureCorp", "FY2023", Scale.UNITS), provider)
    stores = m.row("Number of stores")
    assert stores.unit == "stores" and stores.values == (Decimal(960),)
    assert u.row("Number of stores").values == stores.values
    assert u.row("Same-store sales growth").values == m.row("Same-store sales growth").values
    assert u.row("Revenue per store").values == (Decimal("5212000"),)


def test_pension_absent_is_empty(provider):
    assert get_pension_plan(ToolArgs("QuietLabs", "FY2023"), provider).rows == ()


def test_acquisitions_window(provider):
    t = get_acquisitions("FixtureCorp", date(2023, 1, 1), date(2023, 12, 31), provider)
    assert t.columns == ("target", "announce_date", "value", "status")
    assert [r.values for r in t.rows] == [("Acme Outfitters Inc", "2023-06-15", Decimal("250"), "Completed")]


def test_acquisitions_empty_day(provider):
    assert get_acquisitions("FixtureCorp", date(2023, 6, 14), date(2023, 6, 14), provider).rows == ()
    assert len(get_acquisitions("FixtureCorp", date(2023, 6, 15), date(2023, 6, 15), provider).rows) == 1


def test_acquisitions_reversed(provider):
    with pytest.raises(InvalidDateRange):
        get_acquisitions("FixtureCorp", date(2023, 12, 31), date(2023, 1, 1), provider)
    with pytest.raises(InvalidDateRange):
        ToolArgs("FixtureCorp", start_date=date(2023, 2, 1), end_date=date(2023, 1, 1))


def test_transcript(provider):
    t = get_earningscall_transcript("FixtureCorp", "FY2023Q4", provider)
    assert t.rows[0].values[1] == "operator"
    with pytest.raises(PeriodUnavailable):
        get_earningscall_transcript("FixtureCorp", "FY2022Q1", provider)


def test_transcript_round_trip(provider):
    t = get_earningscall_transcript("FixtureCorp", "FY2023Q4", provider)
    stored = [r.values[2] for r in t.rows]
    rendered = render_table(t)
    assert parse_transcript_text(rendered) == stored
    assert "\n".join(stored) in "\n".join(parse_transcript_text(rendered))


def test_render_marks_units(provider):
    text = render_table(get_operating_metrics(ToolArgs("FixtureCorp", "FY2023"), provider))
    assert "Number of stores [stores]" in text
    assert "Revenue per store [" not in text
    assert text.splitlines()[0] == "FixtureCorp | OperatingMetrics | scale: millions | currency: USD"


def test_render_empty(provider):
    text = render_table(get_pension_plan(ToolArgs("QuietLabs", "FY2023"), provider))
    assert text.endswith("(no data)")


@pytest.mark.parametrize("args, message", [
    ({"period": "FY2023"}, "get_income_statement: missing required argument 'comp_name'"),
    ({"comp_name": "FixtureCorp"}, "get_income_statement: missing required argument 'period'"),
    ({"comp_name": "FixtureCorp", "period": "2023"},
     "get_income_statement: argument 'period' must look like FY2023 or FY2023Q2"),
    ({"comp_name": "FixtureCorp", "period": "FY2023Q5"},
     "get_income_statement: argument 'period' must look like FY2023 or FY2023Q2"),
    ({"comp_name": "FixtureCorp", "period": "FY2023", "scale": "percent"},
     "get_income_statement: argument 'scale' must be one of units, thousands, millions, billions"),
    ({"comp_name": "FixtureCorp", "period": "FY2023", "periods": 0},
     "get_income_statement: argument 'periods' must be >= 1"),
    ({"comp_name": "FixtureCorp", "period": "FY2023", "periods": True},
     "get_income_statement: argument 'periods' must be an integer"),
    ({"comp_name": "FixtureCorp", "period": "FY2023", "year": 2023},
     "get_income_statement: unexpected argument 'year'"),
    ({"comp_name": 42, "period": "FY2023"}, "get_income_statement: argument 'comp_name' must be a string"),
    ({"comp_name": "  ", "period": "FY2023"}, "get_income_statement: argument 'comp_name' must not be empty"),
])
def test_validation_messages(suite, args, message):
    out = suite.call("get_income_statement", args, "t-1")
    assert isinstance(out.error, ArgumentValidation)
    assert str(out.error) == message
    assert out.record.error_detail == message


def test_bad_date_message(suite):
    out = suite.call("get_acquisitions", {"comp_name": "FixtureCorp", "start_date": "2023-13-01",
                                          "end_date": "2023-12-31"}, "t-1")
    assert str(out.error) == "get_acquisitions: argument 'start_date' must be an ISO date (YYYY-MM-DD)"


def test_validation_fills_defaults(suite):
    d = next(d for d in suite.descriptors if d.name == "get_income_statement")
    assert d.validate({"comp_name": "FixtureCorp", "period": "FY2023"}) == {
        "comp_name": "FixtureCorp", "period": "FY2023", "scale": "millions", "periods": 1,
    }


def test_schema_shape(suite):
    d = next(d for d in suite.descriptors if d.name == "get_acquisitions")
    schema = d.input_schema()
    assert schema["required"] == ["comp_name", "end_date", "start_date"]
    assert schema["additionalProperties"] is False


def test_every_call_logged_once(suite):
    calls = [
        ("get_income_statement", {"comp_name": "FixtureCorp", "period": "FY2023"}),
        ("get_income_statement", {"comp_name": "NoSuchCo", "period": "FY2023"}),
        ("get_stock_price", {"comp_name": "FixtureCorp"}),
        ("get_pension_plan", {"comp_name": "FixtureCorp", "period": "2023"}),
        ("get_earningscall_transcript", {"comp_name": "FixtureCorp", "period": "FY2023Q4"}),
    ]
    outs = [suite.call(n, a, f"c-{i}") for i, (n, a) in enumerate(calls)]
    records = suite.log.records()
    assert [r.call_id for r in records] == [f"c-{i}" for i in range(len(calls))]
    assert [r.outcome for r in records] == ["Ok", "Error", "Error", "Error", "Ok"]
    assert isinstance(outs[1].error, UnknownCompany)
    assert isinstance(outs[2].error, UnknownTool)
    assert records[2].error_kind == "UnknownTool"
    for r in records:
        assert r.ended_at >= r.started_at
        assert (r.outcome == "Error") == (r.error_detail is not None)
        assert (r.result_digest is None) == (r.outcome == "Error")
    assert records[0].result_digest == outs[0].table.digest()


def test_record_invariants():
    with pytest.raises(ValueError):
        ToolCallRecord("x", "t", {}, "2023-01-01T00:00:02Z", "2023-01-01T00:00:01Z", "Ok")
    with pytest.raises(ValueError):
        ToolCallRecord("x", "t", {}, "a", "a", "Error")
    with pytest.raises(ValueError):
        ToolCallRecord("x", "t", {}, "a", "a", "Ok", error_detail="boom")


def test_deterministic_digests(provider):
    args = {"comp_name": "FixtureCorp", "period": "FY2023", "periods": 3}
    a = ToolSuite(provider, RunLog(), LogicalClock()).call("get_cashflow_statement", args, "a")
    b = ToolSuite(provider, RunLog(), LogicalClock()).call("get_cashflow_statement", args, "b")
    assert a.record.result_digest == b.record.result_digest


def test_call_ids_unique_across_threads(provider):
    suite = ToolSuite(provider, RunLog(), LogicalClock())
    ids = []
    lock = threading.Lock()

    def work():
        mine = [suite.next_call_id("s") for _ in range(200)]
        with lock:
            ids.extend(mine)

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(set(ids)) == 1600


def test_run_log_concurrent_appends(tmp_path, provider):
    path = tmp_path / "calls.jsonl"
    suite = ToolSuite(provider, RunLog(path), LogicalClock())

    def work(n):
        for i in range(50):
            suite.call("get_income_statement", {"comp_name": "FixtureCorp", "period": "FY2023"}, f"w{n}-{i}")

    threads = [threading.Thread(target=work, args=(n,)) for n in range(6)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    records = RunLog(path).records()
    assert len(records) == 300
    assert len({r.call_id for r in records}) == 300


def test_scale_identity_whole_corpus(suite, provider):
    checked = 0
    for tool, args in scaled_calls(provider):
        k = suite.call(tool, {**args, "scale": "thousands"}, "k")
        m = suite.call(tool, {**args, "scale": "millions"}, "m")
        assert k.ok and m.ok, (tool, args)
        km, mm = money_cells(k.table), money_cells(m.table)
        assert km.keys() == mm.keys()
        for key in mm:
            assert km[key] == mm[key] * Decimal(1000), (tool, args, key)
            checked += 1
        assert other_cells(k.table) == other_cells(m.table)
    assert checked > 200


def test_scale_identity_deals(provider):
    t = get_acquisitions("FixtureCorp", date(2000, 1, 1), date(2030, 1, 1), provider)
    k, m = t.rescale(Scale.THOUSANDS), t.rescale(Scale.MILLIONS)
    for key, v in money_cells(m).items():
        assert money_cells(k)[key] == v * 1000
    assert other_cells(k) == other_cells(m)


@settings(max_examples=60, deadline=None)
@given(
    tool=st.sampled_from([n for n in TABLE_1 if n not in ("get_acquisitions", "get_earningscall_transcript")]),
    src=st.sampled_from(list(Scale)),
    dst=st.sampled_from(list(Scale)),
    periods=st.integers(min_value=1, max_value=6),
)
def test_rescale_any_pair(provider, tool, src, dst, periods):
    suite = ToolSuite(provider, RunLog(), LogicalClock())
    base = {"comp_name": "FixtureCorp", "period": "FY2023", "periods": periods}
    a = suite.call(tool, {**base, "scale": src.value}, "a").table
    b = suite.call(tool, {**base, "scale": dst.value}, "b").table
    factor = Decimal(10) ** (src.exponent - dst.exponent)
    for key, v in money_cells(a).items():
        assert money_cells(b)[key] == v * factor
