"""Newline-delimited JSON framing for the MEC socket protocol and event traces."""

import json
from typing import Any

from app.exceptions import InvalidInputError

MAX_LINE_BYTES = 1 << 20


def encode_message(message: dict[str, Any]) -> bytes:
    """Canonical encoding: sorted keys, no whitespace, one trailing newline."""
    return (json.dumps(message, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def decode_line(line: bytes | str) -> dict[str, Any]:
    """Parse one request or response line.

    Raises:
        InvalidInputError: not UTF-8, not JSON, or not a JSON object
    """
    if isinstance(line, bytes):
        if len(line) > MAX_LINE_BYTES:
            raise InvalidInputError("line too long")
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise InvalidInputError("line is not valid UTF-8") from exc
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise InvalidInputError("expected a JSON object")
    return data
