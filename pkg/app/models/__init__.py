"""Pydantic models for secure vehicle clusters."""

from app.models.channel import ChannelInfo, ChannelParams, Position, VscInputs
from app.models.cluster import (
    Announcement,
    KeyMaterial,
    KeyMaterialMessage,
    MemberRecord,
    SecureCluster,
)
from app.models.enums import (
    ClusterStatus,
    FrameLevel,
    ReceiveStatus,
    RejectReason,
    VehicleRole,
)
from app.models.hashchain import ChainDisclosure, HashChain, Vin
from app.models.mec import ClusterRequest, ClusterResponse, IngestResult
from app.models.messaging import BroadcastFrame, MuxedSignal, ReceiveResult
from app.models.responses import (
    ErrorResponse,
    HealthResponse,
    ReadinessResponse,
    WireResponse,
)
from app.models.scenario import Event, Metrics, Scenario, VehicleSpec

__all__ = [
    # Hash chains
    "Vin",
    "HashChain",
    "ChainDisclosure",
    # Channel
    "Position",
    "ChannelParams",
    "ChannelInfo",
    "VscInputs",
    # Clusters
    "Announcement",
    "SecureCluster",
    "MemberRecord",
    "KeyMaterial",
    "KeyMaterialMessage",
    # Messaging
    "BroadcastFrame",
    "MuxedSignal",
    "ReceiveResult",
    # MEC
    "ClusterRequest",
    "ClusterResponse",
    "IngestResult",
    # Simulation
    "Scenario",
    "VehicleSpec",
    "Event",
    "Metrics",
    # Enums
    "FrameLevel",
    "VehicleRole",
    "ClusterStatus",
    "RejectReason",
    "ReceiveStatus",
    # Responses
    "WireResponse",
    "ErrorResponse",
    "HealthResponse",
    "ReadinessResponse",
]
