"""Exception hierarchy for the secure cluster protocol.

Every error carries a stable machine-readable ``code`` which is what the
socket protocol and the HTTP facade put in the ``error`` field of their
error envelopes.
"""


class SecureClusterError(Exception):
    """Base class for protocol errors."""

    code = "internal_error"
    status = 500


class InvalidInputError(SecureClusterError, ValueError):
    """Input failed validation."""

    code = "validation_error"
    status = 400


class ChainRangeError(SecureClusterError, IndexError):
    """Requested hash chain index lies outside 1..N."""

    code = "range_error"
    status = 400


class OrderingError(InvalidInputError):
    """Two disclosures were passed in the wrong order."""

    code = "ordering_error"


class InsufficientObservationsError(SecureClusterError):
    """No channel information was received in the window."""

    code = "insufficient_observations"
    status = 422


class DegenerateClusterError(SecureClusterError):
    """No vehicle besides the initiator qualified."""

    code = "degenerate_cluster"
    status = 422


class HostBelowThresholdError(SecureClusterError):
    """The initiating vehicle's own VSC is below the threshold."""

    code = "host_below_threshold"
    status = 422


class ClusterExpiredError(SecureClusterError):
    """Operation on a cluster past its expiry instant."""

    code = "expired"
    status = 410


class NotAMemberError(SecureClusterError):
    """Sender chain value is not in the cluster member list."""

    code = "not_a_member"
    status = 403


class ConflictError(SecureClusterError):
    """Duplicate registration."""

    code = "conflict"
    status = 409


class UnknownHostError(SecureClusterError):
    """Pseudo-id is not in the registry."""

    code = "unknown_host"
    status = 404


class UnknownClusterError(SecureClusterError):
    """No live cluster with the requested id."""

    code = "not_found"
    status = 404


class AssumptionViolationError(SecureClusterError):
    """An eavesdropper's SNR is not below a legitimate host's observed mean."""

    code = "assumption_violation"
    status = 422


class NonceReuseError(SecureClusterError):
    """A (key, nonce) pair was used twice."""

    code = "nonce_reuse"


def status_for_code(code: str) -> int:
    """HTTP status of the error class with this ``code`` (400 when unknown)."""
    pending = [SecureClusterError]
    while pending:
        cls = pending.pop()
        if cls.code == code:
            return cls.status
        pending.extend(cls.__subclasses__())
    return 400
