"""JSON-compatible values: the universal currency of both engines.

A value is null, a boolean, a finite number, a string, or an array/object
of values, nested at most MAX_DEPTH deep.  NaN and infinity are rejected
at every boundary so they can neither enter nor leave the system.
"""

from __future__ import annotations

import copy
import json
from typing import Any, Union

from .errors import InvalidValue

Value = Union[None, bool, int, float, str, list, dict]

MAX_DEPTH = 64


def validate_value(value: Any, *, what: str = "value") -> None:
    """Check that `value` is a well-formed tree; raise InvalidValue otherwise."""
    _validate(value, MAX_DEPTH, what)


def _validate(value: Any, budget: int, what: str) -> None:
    if budget < 0:
        raise InvalidValue(f"{what} exceeds nesting depth {MAX_DEPTH}")
    if value is None or isinstance(value, (bool, str)):
        return
    if isinstance(value, (int, float)):
        if isinstance(value, float) and (value != value or value in (float("inf"), float("-inf"))):
            raise InvalidValue(f"{what} contains a non-finite number")
        return
    if isinstance(value, list):
        for item in value:
            _validate(item, budget - 1, what)
        return
    if isinstance(value, dict):
        for key, item in value.items():
            if not isinstance(key, str):
                raise InvalidValue(f"{what} has a non-string object key: {key!r}")
            _validate(item, budget - 1, what)
        return
    raise InvalidValue(f"{what} contains a non-JSON type: {type(value).__name__}")


def copy_value(value: Value) -> Value:
    return copy.deepcopy(value)


def canonical_json(value: Value) -> str:
    """Deterministic serialization: sorted keys, compact separators, no NaN."""
    return json.dumps(value, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _reject_constant(name: str) -> None:
    raise ValueError(f"non-finite JSON constant {name} not allowed")


def loads_strict(text: str | bytes, *, what: str = "payload") -> Value:
    """Parse JSON, rejecting NaN/Infinity and enforcing value invariants."""
    try:
        value = json.loads(text, parse_constant=_reject_constant)
    except ValueError as exc:
        raise InvalidValue(f"malformed JSON in {what}: {exc}") from None
    validate_value(value, what=what)
    return value


def parse_scalar(text: str) -> Value:
    """JSON-parse a query-string value, falling back to the raw string.

    "35.05" becomes a number, "true" a boolean, "\"x\"" the string x;
    anything unparseable stays a plain string.
    """
    try:
        return loads_strict(text)
    except InvalidValue:
        return text
