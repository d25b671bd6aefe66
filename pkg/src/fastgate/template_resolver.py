"""Server-side `{{...}}` substitution inside argument payloads.

A template body is a path starting with /rest/ (fetch the resource) or
/lambda/ (apply a function to its query-string arguments).  A string leaf
that is exactly one template becomes the typed result; a template embedded
in a longer string is substituted as JSON text (strings verbatim).  A
backslash immediately before "{{" makes the braces literal.

Resolution runs innermost-first: templates inside a body are substituted
before the body is parsed, and templates inside a fetched result are
resolved in turn.  Every hop down such a chain consumes one unit of the
depth budget, so reference cycles terminate with DepthExceeded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional
from urllib.parse import parse_qsl, unquote

from .errors import DepthExceeded, InvalidValue, MalformedTemplate, UnserializableResult
from .values import Value, canonical_json, parse_scalar

DEFAULT_DEPTH_LIMIT = 8

_OPEN = "{{"
_CLOSE = "}}"
_ESCAPED_OPEN = "\\{{"


@dataclass(frozen=True)
class TemplateRef:
    """One template occurrence: the trimmed body and its parsed halves."""

    raw: str
    kind: str  # "rest" | "lambda"
    path: str
    query: str

    def args(self) -> dict[str, str]:
        """Query-string arguments as raw strings (lambda kind only).

        Keys and values are stripped: parameter names can never contain
        whitespace, and hand-written refs often pad around the "=".
        """
        return {
            key.strip(): value.strip()
            for key, value in parse_qsl(self.query, keep_blank_values=True)
        }


@dataclass(frozen=True)
class _Span:
    start: int  # index of "{{"
    end: int  # index one past "}}"
    body: str


def _find_spans(text: str) -> list[_Span]:
    """Top-level template spans, honoring the backslash escape.

    Nested "{{" inside a span must balance; an unterminated opener is an
    error.  A "}}" with no opener is literal text.
    """
    spans = []
    i = 0
    n = len(text)
    while i < n:
        if text.startswith(_ESCAPED_OPEN, i):
            i += 3
            continue
        if not text.startswith(_OPEN, i):
            i += 1
            continue
        start = i
        i += 2
        depth = 1
        while i < n and depth:
            if text.startswith(_ESCAPED_OPEN, i):
                i += 3
            elif text.startswith(_OPEN, i):
                depth += 1
                i += 2
            elif text.startswith(_CLOSE, i):
                depth -= 1
                i += 2
            else:
                i += 1
        if depth:
            raise MalformedTemplate(
                f"unbalanced braces: template opened at index {start} never closes"
            )
        spans.append(_Span(start, i, text[start + 2 : i - 2]))
    return spans


def _unescape(text: str) -> str:
    return text.replace(_ESCAPED_OPEN, _OPEN)


def _parse_ref(body: str) -> TemplateRef:
    trimmed = body.strip()
    if not trimmed:
        raise MalformedTemplate("empty template body")
    if trimmed.startswith("/rest/"):
        return TemplateRef(trimmed, "rest", trimmed, "")
    if trimmed.startswith("/lambda/"):
        path, _, query = trimmed.partition("?")
        return TemplateRef(trimmed, "lambda", path, query)
    raise MalformedTemplate(
        f"template body must start with /rest/ or /lambda/, got {trimmed!r}"
    )


def scan(payload: Value) -> list[TemplateRef]:
    """All template occurrences in string leaves, depth-first.

    An occurrence nested inside another's body is listed after its host.
    Does not touch either machine.
    """
    found: list[TemplateRef] = []

    def visit_text(text: str) -> None:
        for span in _find_spans(text):
            found.append(_parse_ref(span.body))
            visit_text(span.body)

    def visit(value: Value) -> None:
        if isinstance(value, str):
            visit_text(value)
        elif isinstance(value, list):
            for item in value:
                visit(item)
        elif isinstance(value, dict):
            for item in value.values():
                visit(item)

    visit(payload)
    return found


class TemplateResolver:
    """Binds the substitution pass to a resource store and a lambda machine."""

    def __init__(self, store, machine, depth_limit: int = DEFAULT_DEPTH_LIMIT):
        if depth_limit < 1:
            raise InvalidValue(f"depth limit must be >= 1, got {depth_limit}")
        self.store = store
        self.machine = machine
        self.depth_limit = depth_limit

    def resolve(self, payload: Value, depth_limit: Optional[int] = None) -> Value:
        limit = self.depth_limit if depth_limit is None else depth_limit
        if limit < 1:
            raise InvalidValue(f"depth limit must be >= 1, got {limit}")
        return self._walk(payload, limit)

    def _walk(self, value: Value, depth: int) -> Value:
        if isinstance(value, str):
            return self._resolve_text(value, depth)
        if isinstance(value, list):
            return [self._walk(item, depth) for item in value]
        if isinstance(value, dict):
            return {key: self._walk(item, depth) for key, item in value.items()}
        return value

    def _resolve_text(self, text: str, depth: int) -> Value:
        spans = _find_spans(text)
        if not spans:
            return _unescape(text)
        if len(spans) == 1:
            only = spans[0]
            if not text[: only.start].strip() and not text[only.end :].strip():
                # the leaf is exactly one template: substitute the typed value
                result = self._dispatch(only.body, depth)
                return self._walk(result, depth - 1)
        pieces = []
        cursor = 0
        for span in spans:
            pieces.append(_unescape(text[cursor : span.start]))
            result = self._walk(self._dispatch(span.body, depth), depth - 1)
            pieces.append(result if isinstance(result, str) else canonical_json(result))
            cursor = span.end
        pieces.append(_unescape(text[cursor:]))
        return "".join(pieces)

    def _dispatch(self, body: str, depth: int) -> Value:
        if depth < 1:
            raise DepthExceeded(
                f"template nesting exceeds the depth limit of {self.depth_limit}"
            )
        # inner templates resolve before the body is parsed
        resolved_body = self._resolve_text(body, depth - 1)
        if not isinstance(resolved_body, str):
            # a body that was itself one whole template yielded a typed value;
            # only string bodies can be parsed as references
            raise MalformedTemplate("template body did not resolve to text")
        ref = _parse_ref(resolved_body)
        if ref.kind == "rest":
            # get_resource percent-decodes during normalization
            return self.store.get_resource(ref.path)
        handle = self._lookup(ref.path)
        args = {name: parse_scalar(raw) for name, raw in ref.args().items()}
        result = self.machine.bind_and_call(handle, args)
        if not _is_plain_value(result):
            raise UnserializableResult(
                "template resolved to a function value, which cannot be spliced"
            )
        return result

    def _lookup(self, path: str):
        from .lambda_machine import FunctionRef

        segments = [unquote(s) for s in path.split("/")[2:] if s]
        if len(segments) == 2:
            return self.machine.lookup(FunctionRef(segments[0], segments[1]))
        if len(segments) == 1:
            return self.machine.resolve_unique(segments[0])
        raise MalformedTemplate(
            f"lambda template path needs one or two segments, got {path!r}"
        )


def _is_plain_value(result) -> bool:
    from .lambda_machine import FunctionValue, _contains_function_value

    return not isinstance(result, FunctionValue) and not _contains_function_value(result)
