"""Enum definitions for the secure cluster protocol."""

from enum import Enum


class FrameLevel(str, Enum):
    """Broadcast layer of a frame."""
    CORE = "core"
    ENHANCEMENT = "enh"


class VehicleRole(str, Enum):
    """Role of a vehicle in a scenario."""
    LEGITIMATE = "legitimate"
    EAVESDROPPER = "eavesdropper"


class ClusterStatus(str, Enum):
    """Outcome of a secure clustering service request."""
    OK = "ok"
    DEGENERATE = "degenerate"
    HOST_BELOW_THRESHOLD = "host_below_threshold"


class RejectReason(str, Enum):
    """Why the MEC refused an announcement."""
    UNKNOWN_SENDER = "unknown_sender"
    BAD_DISCLOSURE = "bad_disclosure"
    STALE = "stale"


class ReceiveStatus(str, Enum):
    """Disposition of a received broadcast frame."""
    ACCEPTED = "accepted"
    IGNORED = "ignored"
    EXPIRED = "expired"
    AUTH_FAILURE = "auth_failure"
