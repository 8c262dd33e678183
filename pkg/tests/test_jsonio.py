from decimal import Decimal

import pytest
from hypothesis import given, strategies as st

from finmcp import jsonio


def test_sorted_compact_output():
    assert jsonio.dumps({"b": 1, "a": [True, None, "x"]}) == '{"a":[true,null,"x"],"b":1}'


def test_decimals_are_bare_numerals():
    assert jsonio.dumps({"v": Decimal("5003.20")}) == '{"v":5003.2}'
    assert jsonio.dumps(Decimal("1E+3")) == "1000"
    assert jsonio.dumps(Decimal("-0.0")) == "0"


def test_floats_read_back_as_decimal():
    assert jsonio.loads('{"v": 0.1}') == {"v": Decimal("0.1")}


def test_non_ascii_is_escaped():
    assert jsonio.dumps("1–10") == '"1\\u201310"'


def test_digest_is_order_independent():
    assert jsonio.digest({"a": 1, "b": 2}) == jsonio.digest({"b": 2, "a": 1})
    assert jsonio.digest({"a": 1}).startswith("sha256:")


@given(st.decimals(allow_nan=False, allow_infinity=False, places=4, min_value=-10**9, max_value=10**9))
def test_decimal_round_trip(d):
    assert jsonio.loads(jsonio.dumps(d)) == d


def test_rejects_nan():
    with pytest.raises(ValueError):
        jsonio.dumps(float("nan"))
