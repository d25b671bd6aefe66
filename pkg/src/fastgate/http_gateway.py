"""The single API surface in front of both machines.

Routes:
    /rest/*                 resource store (GET, POST, PUT, DELETE)
    /lambda/<m>/<f>         pure call; one segment means a unique bare name
    /fast/<m>[/<f>]         compute then optionally post the result to a URI
    /query                  the query language carrier
    /healthz                liveness

Everything speaks JSON.  Error bodies are {"message": ...} with status
drawn from {400, 404, 405, 413, 422, 500}; 200 bodies are the bare result.
The core handler is transport-free; `wsgi_app` adapts it to WSGI.
"""

from __future__ import annotations

import ast
import json
from dataclasses import dataclass, field
from http.client import responses as _REASONS
from typing import Callable, Optional
from urllib.parse import parse_qsl

from .errors import (
    BadRequest,
    FastError,
    MethodNotAllowed,
    NotFound,
    PayloadTooLarge,
    UnserializableResult,
)
from .lambda_machine import (
    FunctionRef,
    FunctionValue,
    LambdaRequest,
    _contains_function_value,
)
from .rest_machine import DEFAULT_MAX_BYTES
from .values import Value, canonical_json, loads_strict, parse_scalar

RESERVED_PARAMS = frozenset(
    {"data", "uri", "to_do", "to_uri", "fns", "module", "function", "q"}
)

_ABSENT = object()


@dataclass
class WireRequest:
    method: str
    path: str
    query: dict = field(default_factory=dict)  # str -> str
    body: Optional[bytes] = None
    content_type: str = ""


@dataclass
class WireResponse:
    status: int
    body: Value


class Gateway:
    """Dispatches wire requests to the machines behind one surface.

    `allow` is the security hook point: a callback (method, path) -> bool;
    denied requests answer 404 so the route's existence is not revealed.
    """

    def __init__(
        self,
        store,
        machine,
        resolver,
        engine,
        max_bytes: int = DEFAULT_MAX_BYTES,
        check_purity: bool = False,
        allow: Optional[Callable[[str, str], bool]] = None,
    ):
        self.store = store
        self.machine = machine
        self.resolver = resolver
        self.engine = engine
        self.max_bytes = max_bytes
        self.check_purity = check_purity
        self.allow = allow

    # --- entry points

    def handle(self, req: WireRequest) -> WireResponse:
        try:
            if req.body is not None and len(req.body) > self.max_bytes:
                raise PayloadTooLarge(f"request body exceeds {self.max_bytes} bytes")
            if self.allow is not None and not self.allow(req.method, req.path):
                raise NotFound("Not found")
            return WireResponse(200, self._route(req))
        except FastError as exc:
            return WireResponse(exc.http_status, {"message": exc.message})
        except Exception as exc:  # last-resort guard; never leak a traceback
            return WireResponse(500, {"message": f"{type(exc).__name__}: {exc}"})

    def wsgi_app(self, environ, start_response):
        method = environ.get("REQUEST_METHOD", "GET").upper()
        path = environ.get("PATH_INFO", "/")
        query = dict(
            parse_qsl(environ.get("QUERY_STRING", ""), keep_blank_values=True)
        )
        try:
            length = int(environ.get("CONTENT_LENGTH") or 0)
        except ValueError:
            length = 0
        if length > self.max_bytes:
            response = WireResponse(
                413, {"message": f"request body exceeds {self.max_bytes} bytes"}
            )
        else:
            body = environ["wsgi.input"].read(length) if length else None
            response = self.handle(
                WireRequest(
                    method,
                    path,
                    query,
                    body,
                    environ.get("CONTENT_TYPE", ""),
                )
            )
        payload = canonical_json(response.body).encode("utf-8")
        reason = _REASONS.get(response.status, "Unknown")
        start_response(
            f"{response.status} {reason}",
            [
                ("Content-Type", "application/json"),
                ("Content-Length", str(len(payload))),
            ],
        )
        return [payload]

    # --- routing

    def _route(self, req: WireRequest) -> Value:
        path = req.path
        if path == "/healthz":
            self._require_method(req, ("GET",))
            return {"status": "ok"}
        if path == "/query":
            self._require_method(req, ("GET", "POST"))
            return self.handle_query(req)
        if path.startswith("/rest/"):
            self._require_method(req, ("GET", "POST", "PUT", "DELETE"))
            return self.handle_rest(req)
        if path.startswith("/lambda/"):
            self._require_method(req, ("GET", "POST"))
            return self.handle_lambda(req)
        if path.startswith("/fast/"):
            self._require_method(req, ("GET", "POST"))
            return self.handle_fast(req)
        raise NotFound("Not found")

    @staticmethod
    def _require_method(req: WireRequest, allowed: tuple) -> None:
        if req.method not in allowed:
            raise MethodNotAllowed(
                f"{req.method} is not allowed here; use {' or '.join(allowed)}"
            )

    # --- handlers

    def handle_rest(self, req: WireRequest) -> Value:
        if req.method == "GET":
            if req.query.get("children") in ("true", "1"):
                return self.store.list_children(req.path)
            return self.store.get_resource(req.path)
        if req.method == "DELETE":
            return self.store.delete_resource(req.path)
        body = self._json_body(req)
        if body is _ABSENT:
            raise BadRequest("a JSON body is required to store a resource")
        if isinstance(body, dict) and set(body) == {"data"}:
            body = body["data"]  # unwrap the {"data": ...} envelope
        return self.store.post_resource(req.path, body)

    def handle_lambda(self, req: WireRequest) -> Value:
        segments = self._tail_segments(req.path, "/lambda/")
        if len(segments) == 1:
            handle = self.machine.resolve_unique(segments[0])
            ref = FunctionRef(handle.module, handle.name)
        elif len(segments) == 2:
            ref = FunctionRef(segments[0], segments[1])
            self.machine.lookup(ref)  # fail fast with 404 before reading args
        else:
            raise NotFound("Not found")
        to_do, payload = self._argument_payload(req)
        return self._run_wire(ref, to_do, payload)

    def handle_fast(self, req: WireRequest) -> Value:
        segments = self._tail_segments(req.path, "/fast/")
        if not segments or len(segments) > 2:
            raise NotFound("Not found")
        module = segments[0]
        container = self._control_container(req)
        to_uri = container.get("to_uri")
        fn_names = self._fns_list(container.get("fns"))
        if to_uri is not None and not isinstance(to_uri, str):
            raise BadRequest("to_uri must be a resource URI string")
        if to_uri is not None and req.method != "POST":
            raise MethodNotAllowed("posting a result to a URI requires POST")
        if len(segments) == 2 and fn_names:
            raise BadRequest("give either a function segment or fns, not both")
        if len(segments) == 1 and not fn_names:
            raise BadRequest("fns is required when the path names no function")
        if to_uri is None and not fn_names:
            raise BadRequest("to_uri is required when calling a single function")
        to_do, payload = self._argument_payload(req)
        if fn_names:
            result: Value = {}
            for name in fn_names:
                result[name] = self._run_wire(FunctionRef(module, name), to_do, payload)
        else:
            result = self._run_wire(FunctionRef(module, segments[1]), to_do, payload)
        if to_uri is None:
            return result
        self.store.post_resource(to_uri, result)
        return {"status": "success", "to_uri": to_uri}

    def handle_query(self, req: WireRequest) -> Value:
        from .query_language import PostTo, parse

        text = req.query.get("q")
        body = self._json_body(req)
        if isinstance(body, dict) and isinstance(body.get("q"), str):
            text = body["q"]
        if not text:
            raise BadRequest('missing query parameter "q"')
        expr = parse(text)
        if isinstance(expr, PostTo) and req.method != "POST":
            raise MethodNotAllowed("Post queries require POST")
        return self.engine.evaluate(expr)

    # --- request plumbing

    @staticmethod
    def _tail_segments(path: str, prefix: str) -> list[str]:
        return [seg for seg in path[len(prefix) :].split("/") if seg]

    def _json_body(self, req: WireRequest):
        """The parsed JSON body, _ABSENT when there is none.

        Form-encoded bodies are folded into the query params by
        _control_container instead, so they come back _ABSENT here.
        """
        if not req.body:
            return _ABSENT
        if self._is_form(req):
            return _ABSENT
        try:
            text = req.body.decode("utf-8")
        except UnicodeDecodeError:
            raise BadRequest("request body is not valid UTF-8") from None
        return loads_strict(text, what="request body")

    @staticmethod
    def _is_form(req: WireRequest) -> bool:
        return req.content_type.split(";")[0].strip().lower() == (
            "application/x-www-form-urlencoded"
        )

    def _merged_params(self, req: WireRequest) -> dict:
        """Query params with any form-encoded body folded in (body wins)."""
        params = dict(req.query)
        if req.body and self._is_form(req):
            try:
                text = req.body.decode("utf-8")
            except UnicodeDecodeError:
                raise BadRequest("request body is not valid UTF-8") from None
            params.update(dict(parse_qsl(text, keep_blank_values=True)))
        return params

    def _control_container(self, req: WireRequest) -> dict:
        """Reserved control fields from params and body; the body wins."""
        container: dict = dict(self._merged_params(req))
        body = self._json_body(req)
        if isinstance(body, dict):
            for key in RESERVED_PARAMS:
                if key in body:
                    container[key] = body[key]
        return container

    def _argument_payload(self, req: WireRequest):
        """The (to_do, payload) pair for a lambda-style call.

        Argument priority: JSON body object (its "data" key, else its free
        keys) > list or scalar body > "data" param > free query params.
        A "uri" control field overrides inline data with a fetched
        resource.  The final payload passes through the template resolver.
        """
        params = self._merged_params(req)
        body = self._json_body(req)
        to_do = params.get("to_do") or "apply"
        uri = params.get("uri")
        data = _ABSENT
        if isinstance(body, dict):
            if isinstance(body.get("to_do"), str):
                to_do = body["to_do"]
            if isinstance(body.get("uri"), str):
                uri = body["uri"]
            if "data" in body:
                data = body["data"]
            else:
                free = {k: v for k, v in body.items() if k not in RESERVED_PARAMS}
                if free:
                    data = free
        elif body is not _ABSENT:
            data = body
        if data is _ABSENT:
            if "data" in params:
                data = loads_strict(params["data"], what="data parameter")
            else:
                free = {
                    k: parse_scalar(v)
                    for k, v in params.items()
                    if k not in RESERVED_PARAMS
                }
                data = free
        if uri is not None:
            data = self.store.get_resource(uri)
        return to_do, self.resolver.resolve(data)

    def _run_wire(self, ref: FunctionRef, to_do: str, payload: Value) -> Value:
        request = LambdaRequest(ref, to_do, data=payload)
        if self.check_purity:
            result = self.machine.invoke_checked(request, self.store)
        else:
            result = self.machine.invoke(request, self.store)
        if isinstance(result, FunctionValue) or _contains_function_value(result):
            raise UnserializableResult(
                "the result is a function value and cannot be returned over the wire"
            )
        return result

    @staticmethod
    def _fns_list(raw) -> list[str]:
        """fns as a list of names; accepts JSON, Python-literal, or a,b,c."""
        if raw is None:
            return []
        items = raw
        if isinstance(raw, str):
            text = raw.strip()
            if not text:
                return []
            try:
                items = json.loads(text)
            except ValueError:
                try:
                    items = ast.literal_eval(text)
                except (ValueError, SyntaxError):
                    items = [part.strip() for part in text.split(",")]
        if not isinstance(items, (list, tuple)) or not items:
            raise BadRequest("fns must be a non-empty list of function names")
        names = list(items)
        if any(not isinstance(name, str) or not name for name in names):
            raise BadRequest("fns must be a non-empty list of function names")
        return names
