"""Pydantic models for the MEC secure clustering service and its wire protocol."""

from typing import Annotated, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, model_validator

from app.models.cluster import KeyMaterial
from app.models.enums import ClusterStatus, RejectReason
from app.models.fields import MAX_WIRE_MS, ClusterId
from app.models.hashchain import ChainDisclosure


class ClusterRequest(BaseModel):
    """Secure clustering service request issued by a host vehicle."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    host_id: str
    threshold: float
    ttl_seconds: float = Field(..., gt=0, le=MAX_WIRE_MS / 1000)
    window_seconds: float = Field(..., gt=0, le=MAX_WIRE_MS / 1000)


class ClusterResponse(BaseModel):
    """Service response; key material is present iff status is ok."""

    model_config = ConfigDict(frozen=True)

    status: ClusterStatus
    key_material: KeyMaterial | None = None

    @model_validator(mode="after")
    def _material_iff_ok(self) -> "ClusterResponse":
        if (self.status is ClusterStatus.OK) != (self.key_material is not None):
            raise ValueError("key material is present iff status is ok")
        return self


class IngestResult(BaseModel):
    """Outcome of ingesting an announcement."""

    model_config = ConfigDict(frozen=True)

    accepted: bool
    reason: RejectReason | None = None


# Wire requests, one JSON object per line, discriminated by "op".
# All timestamps and durations are integer milliseconds.


class RegisterOp(BaseModel):
    op: Literal["register"]
    vin: str
    id: str | None = None


class AnnounceOp(BaseModel):
    op: Literal["announce"]
    sender: str
    disclosure: ChainDisclosure
    vsc: float = Field(..., allow_inf_nan=False)
    ts_ms: int = Field(..., ge=0, le=MAX_WIRE_MS)
    now_ms: int | None = Field(default=None, ge=0, le=MAX_WIRE_MS)


class ClusterOp(BaseModel):
    op: Literal["cluster"]
    host_id: str
    threshold: float = Field(..., allow_inf_nan=False)
    ttl_ms: int = Field(..., gt=0, le=MAX_WIRE_MS)
    window_ms: int = Field(..., gt=0, le=MAX_WIRE_MS)
    now_ms: int | None = Field(default=None, ge=0, le=MAX_WIRE_MS)


class KeyMaterialOp(BaseModel):
    op: Literal["key_material"]
    cluster_id: ClusterId
    now_ms: int | None = Field(default=None, ge=0, le=MAX_WIRE_MS)


WireRequest = Annotated[
    Union[RegisterOp, AnnounceOp, ClusterOp, KeyMaterialOp],
    Field(discriminator="op"),
]

wire_request_adapter: TypeAdapter[WireRequest] = TypeAdapter(WireRequest)
