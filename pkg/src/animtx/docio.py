"""Reading and writing the JSON documents used for charts, transitions and plans.

All three document kinds share one serialization family: UTF-8 JSON objects
carrying a ``schema`` tag of the form ``animtx.<kind>/<major>``. Output is
canonical (sorted keys, no insignificant whitespace) so identical values
always produce identical bytes.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any

from .errors import DocumentError

SCHEMA_PREFIX = "animtx."


def schema_tag(kind: str, version: int) -> str:
    return f"{SCHEMA_PREFIX}{kind}/{version}"


def loads(text: str | bytes, path: str | None = None) -> Any:
    """Parse JSON text, reporting syntax errors as byte offsets."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DocumentError(f"invalid UTF-8: {exc.reason}", exc.start, path) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise DocumentError(f"syntax error: {exc.msg}", offset, path) from None


def check_schema(doc: Any, kind: str, version: int, path: str | None = None) -> None:
    if not isinstance(doc, dict):
        raise DocumentError(f"expected a JSON object for a {kind} document", path=path)
    tag = doc.get("schema")
    expected = schema_tag(kind, version)
    if tag is None:
        raise DocumentError(f"missing 'schema' (expected {expected!r})", path=path)
    if tag != expected:
        raise DocumentError(f"schema version mismatch: got {tag!r}, expected {expected!r}", path=path)


def _default(obj: Any) -> Any:
    if isinstance(obj, Fraction):
        return int(obj) if obj.denominator == 1 else float(obj)
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not serializable: {type(obj).__name__}")


def dumps(doc: Any, *, pretty: bool = False) -> str:
    """Canonical JSON text (sorted keys)."""
    if pretty:
        return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False, default=_default,
                          allow_nan=False) + "\n"
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False,
                      default=_default, allow_nan=False)


def read_text(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from exc
