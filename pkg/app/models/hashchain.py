"""Pydantic models for vehicle hash chains."""

import re

from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator

from app.config import settings
from app.exceptions import ChainRangeError
from app.models.fields import Digest

VIN_PATTERN = re.compile(r"[A-HJ-NPR-Z0-9]{17}")
PERMISSIVE_VIN_PATTERN = re.compile(r"[A-Za-z0-9]{11,17}")


class Vin(BaseModel):
    """Vehicle identification number, the secret seed of a hash chain.

    Strict mode accepts the 17-character convention (no I, O or Q).
    Permissive mode (``VIN_PERMISSIVE`` or ``context={"permissive": True}``)
    accepts 11-17 alphanumerics for test corpora.
    """

    model_config = ConfigDict(frozen=True)

    text: str = Field(..., description="VIN characters, canonical encoding is ASCII")

    @field_validator("text")
    @classmethod
    def _check_format(cls, value: str, info: ValidationInfo) -> str:
        permissive = settings.vin_permissive
        if info.context and "permissive" in info.context:
            permissive = bool(info.context["permissive"])
        pattern = PERMISSIVE_VIN_PATTERN if permissive else VIN_PATTERN
        if not pattern.fullmatch(value):
            raise ValueError("not a valid vehicle identification number")
        return value

    @classmethod
    def parse(cls, text: str, *, permissive: bool | None = None) -> "Vin":
        """Validate ``text`` as a VIN."""
        context = None if permissive is None else {"permissive": permissive}
        return cls.model_validate({"text": text}, context=context)

    def encode(self) -> bytes:
        """Canonical byte encoding: the ASCII bytes of the text, no padding."""
        return self.text.encode("ascii")

    def __repr__(self) -> str:
        # VINs stay out of logs and tracebacks
        return "Vin(<redacted>)"

    __str__ = __repr__


class ChainDisclosure(BaseModel):
    """Public (value, m) pair a vehicle discloses, tagged with the hash algorithm."""

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {
                "value": "3f0c9b0d5e0a3d1c8d2b4f7e9a6c1b2d3e4f5a6b7c8d9e0f1a2b3c4d5e6f7a8b",
                "m": 1000,
                "alg": "sha-256",
            }
        },
    )

    value: Digest = Field(..., description="H^m(VIN), 32 bytes")
    m: int = Field(..., ge=1, description="Number of hash applications from the VIN")
    alg: str = Field(default="sha-256", description="Hash algorithm tag")

    def to_wire(self) -> dict:
        return self.model_dump(mode="json")

    @classmethod
    def from_wire(cls, data: dict) -> "ChainDisclosure":
        return cls.model_validate(data)


class HashChain(BaseModel):
    """Digest chain values[1..N] with values[1] = H(VIN) and values[k] = H(values[k-1])."""

    model_config = ConfigDict(frozen=True)

    seed_vin: Vin
    alg: str
    values: tuple[bytes, ...] = Field(..., repr=False)

    @property
    def length(self) -> int:
        return len(self.values)

    def value_at(self, k: int) -> bytes:
        """Return values[k] using 1-based indexing."""
        if not 1 <= k <= len(self.values):
            raise ChainRangeError(f"index {k} outside 1..{len(self.values)}")
        return self.values[k - 1]
