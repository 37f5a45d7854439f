"""Reusable annotated field types for binary values carried as text on the wire."""

import base64
import binascii
from typing import Annotated, Any

from pydantic import BeforeValidator, PlainSerializer


def _hex_coercer(length: int | None):
    def _coerce(value: Any) -> bytes:
        if isinstance(value, (bytes, bytearray)):
            raw = bytes(value)
        elif isinstance(value, str):
            try:
                raw = bytes.fromhex(value)
            except ValueError as exc:
                raise ValueError("expected a hex string") from exc
        else:
            raise ValueError("expected bytes or a hex string")
        if length is not None and len(raw) != length:
            raise ValueError(f"expected {length} bytes, got {len(raw)}")
        return raw

    return _coerce


def _b64_coerce(value: Any) -> bytes:
    if isinstance(value, (bytes, bytearray)):
        return bytes(value)
    if isinstance(value, str):
        try:
            return base64.b64decode(value, validate=True)
        except binascii.Error as exc:
            raise ValueError("expected a base64 string") from exc
    raise ValueError("expected bytes or a base64 string")


def hex_bytes(length: int | None = None) -> Any:
    """Bytes field rendered as lowercase hex in JSON mode."""
    return Annotated[
        bytes,
        BeforeValidator(_hex_coercer(length)),
        PlainSerializer(lambda b: b.hex(), return_type=str, when_used="json"),
    ]


Digest = hex_bytes(32)
ClusterId = hex_bytes(16)
Nonce = hex_bytes(12)
Tag = hex_bytes(16)

Base64Bytes = Annotated[
    bytes,
    BeforeValidator(_b64_coerce),
    PlainSerializer(lambda b: base64.b64encode(b).decode("ascii"), return_type=str, when_used="json"),
]


def to_ms(seconds: float) -> int:
    """Quantize simulation seconds to integer milliseconds."""
    return int(round(seconds * 1000))


def floor_ms(seconds: float) -> int:
    """Quantize to integer milliseconds, never landing after ``seconds``."""
    ms = to_ms(seconds)
    return ms - 1 if ms / 1000 > seconds else ms


# Frame timestamps travel as unsigned 8-byte integers in the associated data;
# MEC wire times stay within the exactly representable float range.
MAX_TS_MS = 2**63 - 1
MAX_WIRE_MS = 2**53
