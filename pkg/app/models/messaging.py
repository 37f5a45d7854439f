"""Pydantic models for broadcast frames and multiplexed signals."""

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.enums import FrameLevel, ReceiveStatus
from app.models.fields import MAX_TS_MS, Base64Bytes, ClusterId, Digest, Nonce, Tag, to_ms

_CRYPTO_FIELDS = ("cluster_id", "nonce", "ciphertext", "tag", "alg")


class BroadcastFrame(BaseModel):
    """A core (plaintext emergency) or enhancement (AEAD driving data) frame.

    Wire format::

        {"level": "core"|"enh", "sender_value": hex, "ts_ms": int,
         "cluster_id": hex|null, "nonce": hex|null, "ct": base64|null,
         "tag": hex|null, "pt": base64|null, "alg": "aes-256-gcm"|null}
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    level: FrameLevel
    sender_value: Digest
    timestamp: float = Field(..., ge=0, le=MAX_TS_MS / 1000, description="seconds")
    cluster_id: ClusterId | None = None
    nonce: Nonce | None = None
    ciphertext: Base64Bytes | None = None
    tag: Tag | None = None
    plaintext: Base64Bytes | None = None
    alg: str | None = None

    @model_validator(mode="after")
    def _check_layout(self) -> "BroadcastFrame":
        present = [name for name in _CRYPTO_FIELDS if getattr(self, name) is not None]
        if self.level is FrameLevel.CORE:
            if present:
                raise ValueError(f"core frames carry no cryptographic fields: {present}")
            if self.plaintext is None:
                raise ValueError("core frames carry a plaintext payload")
        else:
            if len(present) != len(_CRYPTO_FIELDS):
                raise ValueError("enhancement frames need cluster_id, nonce, ct, tag and alg")
            if self.plaintext is not None:
                raise ValueError("enhancement frames never carry plaintext")
        return self

    @property
    def ts_ms(self) -> int:
        return to_ms(self.timestamp)

    def to_wire(self) -> dict:
        data = self.model_dump(mode="json")
        return {
            "level": data["level"],
            "sender_value": data["sender_value"],
            "ts_ms": self.ts_ms,
            "cluster_id": data["cluster_id"],
            "nonce": data["nonce"],
            "ct": data["ciphertext"],
            "tag": data["tag"],
            "pt": data["plaintext"],
            "alg": data["alg"],
        }

    @classmethod
    def from_wire(cls, data: dict) -> "BroadcastFrame":
        ts_ms = data.get("ts_ms")
        if not isinstance(ts_ms, int) or isinstance(ts_ms, bool):
            raise ValueError("ts_ms must be an integer")
        if not 0 <= ts_ms <= MAX_TS_MS:
            raise ValueError(f"ts_ms must be within 0..{MAX_TS_MS}")
        return cls.model_validate(
            {
                "level": data.get("level"),
                "sender_value": data.get("sender_value"),
                "timestamp": ts_ms / 1000,
                "cluster_id": data.get("cluster_id"),
                "nonce": data.get("nonce"),
                "ciphertext": data.get("ct"),
                "tag": data.get("tag"),
                "plaintext": data.get("pt"),
                "alg": data.get("alg"),
            }
        )


class MuxedSignal(BaseModel):
    """Frames emitted together: at most one core frame, then enhancement frames."""

    model_config = ConfigDict(frozen=True)

    frames: tuple[BroadcastFrame, ...]

    @model_validator(mode="after")
    def _check_frames(self) -> "MuxedSignal":
        if not self.frames:
            raise ValueError("a signal carries at least one frame")
        cores = sum(1 for f in self.frames if f.level is FrameLevel.CORE)
        if cores > 1:
            raise ValueError("at most one core frame per signal")
        if len({f.ts_ms for f in self.frames}) != 1:
            raise ValueError("frames of one signal share the emission timestamp")
        return self

    @property
    def emitted_at(self) -> float:
        return self.frames[0].timestamp


class ReceiveResult(BaseModel):
    """Result variant of receiving a frame; plaintext only when accepted."""

    model_config = ConfigDict(frozen=True)

    status: ReceiveStatus
    plaintext: bytes | None = None

    @classmethod
    def accepted(cls, plaintext: bytes) -> "ReceiveResult":
        return cls(status=ReceiveStatus.ACCEPTED, plaintext=plaintext)

    @classmethod
    def ignored(cls) -> "ReceiveResult":
        return cls(status=ReceiveStatus.IGNORED)

    @classmethod
    def expired(cls) -> "ReceiveResult":
        return cls(status=ReceiveStatus.EXPIRED)

    @classmethod
    def auth_failure(cls) -> "ReceiveResult":
        return cls(status=ReceiveStatus.AUTH_FAILURE)
