"""The pure-function engine: a closed registry of packages and a dispatcher.

Calls have no side effects and are deterministic: the same request yields
the same serialized result every time, so any two requests commute.  The
four dispatch modes are apply, map, reduce and filter; map can fan out to
a thread pool and still assembles results in input order.
"""

from __future__ import annotations

import inspect
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

from .errors import (
    ArityMismatch,
    DomainError,
    DuplicatePackage,
    EmptyReduce,
    FastError,
    FunctionNotFound,
    AmbiguousFunction,
    InvalidValue,
    ModuleNotAvailable,
    NotAnArray,
    ParseError,
    PurityViolation,
    UnknownParameter,
    UnserializableResult,
)
from .values import Value, canonical_json, validate_value

COMBINATORS = ("apply", "map", "reduce", "filter")

MODULE_NOT_AVAILABLE = "Module not available"

_MISSING = object()


class FunctionValue:
    """Opaque callable produced by a higher-order function.

    Lives only inside an evaluation; returning one to the wire is an error.
    """

    def __init__(self, fn: Callable, label: str = "function"):
        self.fn = fn
        self.label = label

    def __repr__(self):
        return f"<FunctionValue {self.label}>"


@dataclass(frozen=True)
class FunctionRef:
    module: str
    function: str


@dataclass
class LambdaRequest:
    """One pure invocation: a function, a dispatch mode, and a data source.

    The source is either inline data or a resource URI; a URI is fetched
    from the resource store before dispatch and then treated as inline.
    """

    fn: FunctionRef
    combinator: str = "apply"
    data: Value = None
    uri: Optional[str] = None

    def __post_init__(self):
        if self.combinator not in COMBINATORS:
            raise InvalidValue(
                f"to_do must be one of {', '.join(COMBINATORS)}, got {self.combinator!r}"
            )


class FunctionHandle:
    """A registered function plus its declared parameter names."""

    def __init__(self, module: str, name: str, fn: Callable):
        self.module = module
        self.name = name
        self.fn = fn
        sig = inspect.signature(fn)
        self.params = [
            p.name
            for p in sig.parameters.values()
            if p.kind in (p.POSITIONAL_ONLY, p.POSITIONAL_OR_KEYWORD)
        ]
        self.required = [
            p.name
            for p in sig.parameters.values()
            if p.kind in (p.POSITIONAL_ONLY, p.POSITIONAL_OR_KEYWORD)
            and p.default is p.empty
        ]
        self.var_positional = any(
            p.kind == p.VAR_POSITIONAL for p in sig.parameters.values()
        )
        self.var_keyword = any(p.kind == p.VAR_KEYWORD for p in sig.parameters.values())

    @property
    def label(self) -> str:
        return f"{self.module}.{self.name}"


def _callable_of(target):
    if isinstance(target, FunctionHandle):
        return target.fn, target.label
    if isinstance(target, FunctionValue):
        return target.fn, target.label
    raise TypeError(f"not a callable target: {target!r}")


def _bind(target, payload: Value):
    """Bind an argument payload and call: arrays positionally, objects by name.

    Any other value is passed as a single positional argument.
    """
    fn, label = _callable_of(target)
    if isinstance(payload, list):
        args, kwargs = payload, {}
    elif isinstance(payload, dict):
        args, kwargs = [], payload
    else:
        args, kwargs = [payload], {}
    if isinstance(target, FunctionHandle):
        _check_binding(target, args, kwargs)
    try:
        return fn(*args, **kwargs)
    except FastError:
        raise
    except TypeError as exc:
        if isinstance(target, FunctionHandle):
            # binding was already checked, so this came from the function body
            raise DomainError(f"{label}: {exc}") from None
        raise ArityMismatch(f"{label}: {exc}") from None
    except ZeroDivisionError:
        raise DomainError(f"{label}: division by zero") from None
    except (ValueError, ArithmeticError) as exc:
        raise DomainError(f"{label}: {exc}") from None


def _check_binding(handle: FunctionHandle, args: list, kwargs: dict) -> None:
    if args and not kwargs:
        if handle.var_positional:
            if len(args) < len(handle.required):
                raise ArityMismatch(
                    f"{handle.label} expects at least {len(handle.required)} "
                    f"arguments, got {len(args)}"
                )
            return
        if not (len(handle.required) <= len(args) <= len(handle.params)):
            raise ArityMismatch(
                f"{handle.label} expects {len(handle.params)} arguments, got {len(args)}"
            )
        return
    if not handle.var_keyword:
        unknown = sorted(set(kwargs) - set(handle.params))
        if unknown:
            raise UnknownParameter(
                f"{handle.label} got unexpected parameter(s): {', '.join(unknown)}"
            )
    missing = sorted(set(handle.required) - set(kwargs))
    if missing and not args:
        raise ArityMismatch(
            f"{handle.label} missing required parameter(s): {', '.join(missing)}"
        )


def _checked_result(result):
    """Validate a function result; FunctionValue passes only at the top level."""
    if isinstance(result, FunctionValue):
        return result
    if _contains_function_value(result):
        raise UnserializableResult(
            "result contains a function value and cannot be serialized"
        )
    try:
        validate_value(result, what="result")
    except InvalidValue as exc:
        raise DomainError(f"function produced an invalid result: {exc.message}") from None
    return result


def _contains_function_value(value) -> bool:
    if isinstance(value, FunctionValue):
        return True
    if isinstance(value, list):
        return any(_contains_function_value(v) for v in value)
    if isinstance(value, dict):
        return any(_contains_function_value(v) for v in value.values())
    return False


def _element_error(exc: Exception, combinator: str, index: int) -> FastError:
    message = f"{combinator} element {index}: {getattr(exc, 'message', exc)}"
    if isinstance(exc, FastError) and not isinstance(exc, ParseError):
        return type(exc)(message)
    return DomainError(message)


class LambdaMachine:
    """Registry and dispatcher; fully thread-safe once registration is done.

    Registration is a startup-only phase; after it, any number of request
    handlers may invoke concurrently.
    """

    def __init__(self, map_workers: int = 1):
        self.map_workers = max(1, int(map_workers))
        self._packages: dict[str, dict[str, FunctionHandle]] = {}
        self._pool: Optional[ThreadPoolExecutor] = None

    # --- registry

    def register_package(self, name: str, functions: dict[str, Callable]) -> None:
        if name in self._packages:
            raise DuplicatePackage(f"package already registered: {name}")
        self._packages[name] = {
            fname: FunctionHandle(name, fname, fn) for fname, fn in functions.items()
        }

    def packages(self) -> list[str]:
        return sorted(self._packages)

    def lookup(self, ref: FunctionRef) -> FunctionHandle:
        if ref.module not in self._packages:
            raise ModuleNotAvailable(MODULE_NOT_AVAILABLE)
        handle = self._packages[ref.module].get(ref.function)
        if handle is None:
            raise FunctionNotFound(f"Function not found: {ref.module}.{ref.function}")
        return handle

    def resolve_unique(self, function: str) -> FunctionHandle:
        """Find a function by bare name; it must be unique across packages."""
        matches = [
            pkg for pkg in sorted(self._packages) if function in self._packages[pkg]
        ]
        if not matches:
            raise FunctionNotFound(f"Function not found: {function}")
        if len(matches) > 1:
            raise AmbiguousFunction(
                f"function {function!r} is ambiguous across packages: "
                f"{', '.join(matches)}"
            )
        return self._packages[matches[0]][function]

    # --- evaluation

    def bind_and_call(self, target, payload: Value):
        """One pure call of a handle or function value with a bound payload."""
        return _checked_result(_bind(target, payload))

    def run(self, target, combinator: str, data: Value):
        """Dispatch one of apply/map/reduce/filter over already-fetched data."""
        if combinator == "apply":
            return self.bind_and_call(target, data)
        if not isinstance(data, list):
            raise NotAnArray(f"{combinator} requires an array payload")
        if combinator == "map":
            return self._map(target, data)
        if combinator == "reduce":
            return self._reduce(target, data)
        if combinator == "filter":
            return self._filter(target, data)
        raise InvalidValue(f"unknown combinator: {combinator!r}")

    def invoke(self, req: LambdaRequest, store=None):
        """Resolve the request's function and source, then dispatch."""
        handle = self.lookup(req.fn)
        data = self._fetch_source(req, store)
        return self.run(handle, req.combinator, data)

    def verify_purity(self, req: LambdaRequest, store=None) -> bool:
        """Debug check: evaluate twice against one source snapshot.

        True when the serialized results are byte-identical.
        """
        data = self._fetch_source(req, store)
        handle = self.lookup(req.fn)
        first = canonical_json(_require_serializable(self.run(handle, req.combinator, data)))
        second = canonical_json(_require_serializable(self.run(handle, req.combinator, data)))
        return first == second

    def invoke_checked(self, req: LambdaRequest, store=None):
        """Invoke with the purity check on; raises PurityViolation on mismatch."""
        data = self._fetch_source(req, store)
        handle = self.lookup(req.fn)
        first = self.run(handle, req.combinator, data)
        second = self.run(handle, req.combinator, data)
        if canonical_json(_require_serializable(first)) != canonical_json(
            _require_serializable(second)
        ):
            raise PurityViolation(
                f"purity check failed: {handle.label} returned differing results"
            )
        return first

    def _fetch_source(self, req: LambdaRequest, store):
        if req.uri is not None:
            if store is None:
                raise InvalidValue("resource sources need a resource store")
            return store.get_resource(req.uri)
        return req.data

    # --- combinators

    def _map(self, target, data: list) -> list:
        def one(indexed):
            index, element = indexed
            try:
                return self.bind_and_call(target, element)
            except Exception as exc:
                raise _element_error(exc, "map", index) from None

        if self.map_workers > 1 and len(data) > 1:
            results = list(self._executor().map(one, enumerate(data)))
        else:
            results = [one(pair) for pair in enumerate(data)]
        # a function value is only meaningful as a whole result, never
        # as an array element nothing can consume
        if any(isinstance(r, FunctionValue) for r in results):
            raise UnserializableResult("map produced function values")
        return results

    def _reduce(self, target, data: list):
        if not data:
            raise EmptyReduce("reduce of empty array")
        accumulator = data[0]
        for index, element in enumerate(data[1:], start=1):
            try:
                accumulator = self.bind_and_call(target, [accumulator, element])
            except Exception as exc:
                raise _element_error(exc, "reduce", index) from None
        return _checked_result(accumulator)

    def _filter(self, target, data: list) -> list:
        kept = []
        for index, element in enumerate(data):
            try:
                verdict = self.bind_and_call(target, element)
                if not isinstance(verdict, bool):
                    raise DomainError(
                        f"filter predicate must return a boolean, got {verdict!r}"
                    )
            except Exception as exc:
                raise _element_error(exc, "filter", index) from None
            if verdict:
                kept.append(element)
        return kept

    def _executor(self) -> ThreadPoolExecutor:
        if self._pool is None:
            self._pool = ThreadPoolExecutor(max_workers=self.map_workers)
        return self._pool

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


def _require_serializable(result):
    if isinstance(result, FunctionValue) or _contains_function_value(result):
        raise UnserializableResult(
            "result is a function value and cannot be serialized"
        )
    return result
