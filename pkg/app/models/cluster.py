"""Pydantic models for secure cluster formation and key distribution."""

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.fields import ClusterId, Digest
from app.models.hashchain import ChainDisclosure


class Announcement(BaseModel):
    """Broadcast claim that a vehicle's VSC meets the threshold, with its disclosure."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    sender: str
    disclosure: ChainDisclosure
    vsc_value: float
    timestamp: float


class SecureCluster(BaseModel):
    """A formed secure cluster.

    ``group_key`` is excluded from every serialization.
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    cluster_id: ClusterId
    initiator: str
    threshold: float
    members: dict[str, ChainDisclosure]
    group_key: bytes = Field(..., exclude=True, repr=False)
    created_at: float
    expires_at: float

    @model_validator(mode="after")
    def _check_invariants(self) -> "SecureCluster":
        if self.expires_at <= self.created_at:
            raise ValueError("expires_at must be after created_at")
        if not self.members:
            raise ValueError("a cluster needs members")
        if len(self.group_key) != 32:
            raise ValueError("group_key must be 32 bytes")
        return self

    @property
    def size(self) -> int:
        return len(self.members)

    def sorted_values(self) -> list[bytes]:
        """Member chain values ascending by hex rendering."""
        return sorted((d.value for d in self.members.values()), key=bytes.hex)


class MemberRecord(BaseModel):
    """One member entry of distributed key material."""

    model_config = ConfigDict(frozen=True)

    id: str
    value: Digest
    m: int = Field(..., ge=1)


class KeyMaterial(BaseModel):
    """Hash chain information sent to every member of a cluster.

    Members re-derive the group key from it; the key itself is never sent.
    """

    model_config = ConfigDict(
        frozen=True,
        allow_inf_nan=False,
        json_schema_extra={
            "example": {
                "cluster_id": "5be0c3a1f2d94e6a8b7c6d5e4f3a2b1c",
                "threshold": 1.0,
                "created_at_ms": 2000,
                "expires_at_ms": 12000,
                "members": [
                    {
                        "id": "a1b2c3d4e5f60718",
                        "value": "3f0c9b0d5e0a3d1c8d2b4f7e9a6c1b2d3e4f5a6b7c8d9e0f1a2b3c4d5e6f7a8b",
                        "m": 1000,
                    }
                ],
            }
        },
    )

    cluster_id: ClusterId
    threshold: float
    created_at_ms: int
    expires_at_ms: int
    members: list[MemberRecord]


class KeyMaterialMessage(BaseModel):
    """Key material addressed to a single member."""

    model_config = ConfigDict(frozen=True)

    addressee: str
    payload: KeyMaterial
