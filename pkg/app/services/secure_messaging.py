"""Core and enhancement broadcast frames, AES-256-GCM under the cluster group key.

Core frames carry plaintext emergency data every vehicle can read. Enhancement
frames are sealed with the group key; the nonce is the sender's 4-byte index
in the sorted member list followed by its 8-byte counter, and the associated
data binds cluster_id, the sender's chain value and the emission timestamp.
"""

import hashlib
import json
import logging
from collections.abc import Sequence

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from pydantic import ValidationError

from app.config import settings
from app.exceptions import (
    ClusterExpiredError,
    InvalidInputError,
    NonceReuseError,
    NotAMemberError,
)
from app.models.cluster import SecureCluster
from app.models.enums import FrameLevel
from app.models.fields import to_ms
from app.models.messaging import BroadcastFrame, MuxedSignal, ReceiveResult
from app.services.cluster_protocol import contains

logger = logging.getLogger(__name__)

TAG_LENGTH = 16
AEAD_ALGORITHMS = {"aes-256-gcm"}


class NonceCounter:
    """Per-sender message counter. Owned by exactly one sending vehicle."""

    def __init__(self, start: int = 0):
        self._value = start

    @property
    def value(self) -> int:
        return self._value

    def next(self) -> int:
        if self._value >= 2**64:
            raise InvalidInputError("nonce counter exhausted")
        current = self._value
        self._value += 1
        return current


class NonceLedger:
    """Global record of (key, nonce) pairs, switched on in test builds."""

    def __init__(self):
        self._seen: set[tuple[bytes, bytes]] = set()

    def __len__(self) -> int:
        return len(self._seen)

    def record(self, key: bytes, nonce: bytes) -> None:
        entry = (hashlib.sha256(key).digest(), nonce)
        if entry in self._seen:
            raise NonceReuseError(f"nonce {nonce.hex()} reused under one key")
        self._seen.add(entry)

    def clear(self) -> None:
        self._seen.clear()


nonce_ledger = NonceLedger()


def make_core_frame(sender_value: bytes, plaintext: bytes, now: float) -> BroadcastFrame:
    """Plaintext emergency frame."""
    return BroadcastFrame(
        level=FrameLevel.CORE,
        sender_value=sender_value,
        timestamp=to_ms(now) / 1000,
        plaintext=plaintext,
    )


def sender_index(cluster: SecureCluster, sender_value: bytes) -> int:
    """Position of ``sender_value`` in the member values sorted by hex."""
    try:
        return cluster.sorted_values().index(sender_value)
    except ValueError:
        raise NotAMemberError("sender chain value is not in the member list") from None


def build_nonce(index: int, counter: int) -> bytes:
    return index.to_bytes(4, "big") + counter.to_bytes(8, "big")


def associated_data(cluster_id: bytes, sender_value: bytes, ts_ms: int) -> bytes:
    return cluster_id + sender_value + ts_ms.to_bytes(8, "big")


def encrypt_broadcast(
    cluster: SecureCluster,
    sender_value: bytes,
    plaintext: bytes,
    now: float,
    nonce_counter: NonceCounter,
) -> BroadcastFrame:
    """Seal ``plaintext`` into an enhancement frame.

    Raises:
        NotAMemberError: ``sender_value`` is not a member value
        ClusterExpiredError: ``now`` is at or past the cluster expiry
    """
    index = sender_index(cluster, sender_value)
    if now >= cluster.expires_at:
        raise ClusterExpiredError(f"cluster {cluster.cluster_id.hex()} has expired")
    if now < cluster.created_at:
        raise InvalidInputError("cluster is not active yet")

    ts_ms = to_ms(now)
    nonce = build_nonce(index, nonce_counter.next())
    if settings.track_nonces:
        nonce_ledger.record(cluster.group_key, nonce)

    sealed = AESGCM(cluster.group_key).encrypt(
        nonce, plaintext, associated_data(cluster.cluster_id, sender_value, ts_ms)
    )
    return BroadcastFrame(
        level=FrameLevel.ENHANCEMENT,
        sender_value=sender_value,
        timestamp=ts_ms / 1000,
        cluster_id=cluster.cluster_id,
        nonce=nonce,
        ciphertext=sealed[:-TAG_LENGTH],
        tag=sealed[-TAG_LENGTH:],
        alg=settings.aead_algorithm,
    )


def try_decrypt(frame: BroadcastFrame, key: bytes) -> bytes | None:
    """Open an enhancement frame with ``key``; None when authentication fails."""
    if frame.level is not FrameLevel.ENHANCEMENT or len(key) != 32:
        return None
    try:
        return AESGCM(key).decrypt(
            frame.nonce,
            frame.ciphertext + frame.tag,
            associated_data(frame.cluster_id, frame.sender_value, frame.ts_ms),
        )
    except InvalidTag:
        return None


def receive_broadcast(
    frame: BroadcastFrame,
    cluster: SecureCluster | None,
    now: float,
    *,
    replay_window: float | None = None,
) -> ReceiveResult:
    """Classify a received frame. Never raises on frame content."""
    if frame.level is FrameLevel.CORE:
        return ReceiveResult.accepted(frame.plaintext)

    if cluster is None or frame.cluster_id != cluster.cluster_id:
        logger.debug("Ignoring frame for a cluster we are not in")
        return ReceiveResult.ignored()
    if not contains(cluster, frame.sender_value):
        logger.debug("Ignoring frame from non-member %s", frame.sender_value.hex()[:16])
        return ReceiveResult.ignored()
    if now >= cluster.expires_at:
        return ReceiveResult.expired()

    window = settings.replay_window_seconds if replay_window is None else replay_window
    if now - frame.timestamp > window:
        logger.debug("Ignoring frame older than the replay window")
        return ReceiveResult.ignored()
    if frame.alg not in AEAD_ALGORITHMS:
        return ReceiveResult.ignored()

    plaintext = try_decrypt(frame, cluster.group_key)
    if plaintext is None:
        logger.debug("Authentication failed for frame from %s", frame.sender_value.hex()[:16])
        return ReceiveResult.auth_failure()
    return ReceiveResult.accepted(plaintext)


def receive_wire(
    raw: bytes | str,
    cluster: SecureCluster | None,
    now: float,
    *,
    replay_window: float | None = None,
) -> ReceiveResult:
    """Byte-level entry: anything that does not parse as a frame is ignored."""
    try:
        data = json.loads(raw)
        if not isinstance(data, dict):
            return ReceiveResult.ignored()
        frame = BroadcastFrame.from_wire(data)
    except (ValueError, TypeError, OverflowError, ValidationError, UnicodeDecodeError):
        return ReceiveResult.ignored()
    return receive_broadcast(frame, cluster, now, replay_window=replay_window)


def mux(core: BroadcastFrame | None, enhancements: Sequence[BroadcastFrame]) -> MuxedSignal:
    """Multiplex an optional core frame with enhancement frames."""
    if core is not None and core.level is not FrameLevel.CORE:
        raise InvalidInputError("core slot holds an enhancement frame")
    if any(frame.level is FrameLevel.CORE for frame in enhancements):
        raise InvalidInputError("at most one core frame per signal")
    frames = ((core,) if core is not None else ()) + tuple(enhancements)
    try:
        return MuxedSignal(frames=frames)
    except ValidationError as exc:
        raise InvalidInputError(str(exc)) from exc


def demux(signal: MuxedSignal) -> tuple[BroadcastFrame | None, list[BroadcastFrame]]:
    core = None
    enhancements = []
    for frame in signal.frames:
        if frame.level is FrameLevel.CORE:
            core = frame
        else:
            enhancements.append(frame)
    return core, enhancements
