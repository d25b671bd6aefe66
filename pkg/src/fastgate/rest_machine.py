"""The resource engine: a URI-addressed store of mutable values.

This is the only mutable state in the system.  Every URI lives under
/rest/, maps to at most one value, and POST is an upsert.  Reads never
block each other; writes swap whole values so a concurrent read observes
either the old or the new value, never a partial one.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
import urllib.parse

from .errors import InvalidUri, NotFound, PayloadTooLarge
from .values import Value, canonical_json, copy_value, loads_strict, validate_value

DEFAULT_MAX_BYTES = 1024 * 1024

SUCCESS = {"status": "success"}

RESOURCE_NOT_FOUND = "Resource not found"


def normalize_uri(path: str) -> str:
    """Validate and normalize a resource URI.

    Must start with /rest/, be percent-decoded, carry no query string,
    no template braces, and no empty segments.
    """
    if not isinstance(path, str):
        raise InvalidUri(f"resource URI must be a string, got {type(path).__name__}")
    decoded = urllib.parse.unquote(path)
    if "?" in decoded:
        raise InvalidUri(f"resource URI may not contain a query string: {decoded}")
    # single braces too: they are reserved for templates and invalid in URIs
    if "{" in decoded or "}" in decoded:
        raise InvalidUri(f"resource URI may not contain template braces: {decoded}")
    if not decoded.startswith("/rest/"):
        raise InvalidUri(f"resource URI must start with /rest/: {decoded}")
    segments = decoded[len("/rest/"):].split("/")
    if any(seg == "" for seg in segments):
        raise InvalidUri(f"resource URI may not contain empty segments: {decoded}")
    return decoded


class ResourceStore:
    """Associative URI -> value mapping with per-URI linearizability."""

    def __init__(self, max_bytes: int = DEFAULT_MAX_BYTES):
        self.max_bytes = max_bytes
        self._entries: dict[str, Value] = {}
        self._lock = threading.RLock()

    def get_resource(self, uri: str) -> Value:
        """Return the stored value, or raise NotFound."""
        key = normalize_uri(uri)
        # dict lookup is atomic; entries are replaced wholesale, never mutated
        try:
            stored = self._entries[key]
        except KeyError:
            raise NotFound(RESOURCE_NOT_FOUND) from None
        return copy_value(stored)

    def post_resource(self, uri: str, value: Value) -> dict:
        """Create or replace the entry (upsert); returns a success status."""
        key = normalize_uri(uri)
        validate_value(value)
        serialized = canonical_json(value)
        if len(serialized.encode("utf-8")) > self.max_bytes:
            raise PayloadTooLarge(f"payload exceeds {self.max_bytes} bytes")
        stored = copy_value(value)
        with self._lock:
            self._entries[key] = stored
        return dict(SUCCESS)

    def delete_resource(self, uri: str) -> dict:
        key = normalize_uri(uri)
        with self._lock:
            if key not in self._entries:
                raise NotFound(RESOURCE_NOT_FOUND)
            del self._entries[key]
        return dict(SUCCESS)

    def list_children(self, uri: str) -> list[str]:
        """All stored URIs strictly below `uri` at a segment boundary, sorted."""
        prefix = normalize_uri(uri) + "/"
        with self._lock:
            keys = list(self._entries)
        return sorted(k for k in keys if k.startswith(prefix))

    def snapshot(self) -> dict[str, Value]:
        """A deep copy of the whole store, keyed by URI."""
        with self._lock:
            return {k: copy_value(v) for k, v in self._entries.items()}

    def canonical_dump(self) -> str:
        """Deterministic serialization of the entire store, for diffing."""
        return canonical_json(self.snapshot())

    def save(self, path: str) -> None:
        """Write the store to a UTF-8 JSON file, atomically."""
        data = canonical_json(self.snapshot())
        directory = os.path.dirname(os.path.abspath(path))
        fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def load(self, path: str) -> None:
        """Replace the store contents from a JSON file written by save()."""
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
        data = loads_strict(raw, what=f"store file {path}")
        if not isinstance(data, dict):
            raise InvalidUri(f"store file {path} must hold a JSON object keyed by URI")
        entries = {}
        for uri, value in data.items():
            entries[normalize_uri(uri)] = copy_value(value)
        with self._lock:
            self._entries = entries
