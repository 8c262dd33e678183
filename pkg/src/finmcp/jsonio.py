"""Canonical JSON: sorted keys, compact separators, exact decimals.

Decimals are written as plain fixed-point numerals and read back as
``Decimal`` so monetary values never pass through binary floats.
"""

from __future__ import annotations

import hashlib
import json
import math
from decimal import Decimal, localcontext
from typing import Any

_encode_str = json.encoder.encode_basestring_ascii


def decimal_text(d: Decimal) -> str:
    with localcontext() as ctx:
        ctx.prec = 200
        text = format(d.normalize(), "f")
    return "0" if text in ("-0", "0") else text


def _encode(obj: Any, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, str):
        out.append(_encode_str(obj))
    elif isinstance(obj, Decimal):
        if not obj.is_finite():
            raise ValueError(f"non-finite decimal {obj}")
        out.append(decimal_text(obj))
    elif isinstance(obj, int):
        out.append(str(int(obj)))
    elif isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite float {obj}")
        out.append(repr(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError(f"non-string key {key!r}")
            if i:
                out.append(",")
            out.append(_encode_str(key))
            out.append(":")
            _encode(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _encode(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any) -> str:
    out: list[str] = []
    _encode(obj, out)
    return "".join(out)


def loads(text: str | bytes) -> Any:
    return json.loads(text, parse_float=Decimal)


def digest(obj: Any) -> str:
    return "sha256:" + hashlib.sha256(dumps(obj).encode("utf-8")).hexdigest()
