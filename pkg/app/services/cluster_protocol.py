"""Secure cluster admission, group key derivation, distribution and lifetime."""

import hmac
import logging
import math
from collections.abc import Callable, Iterable

from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from app.config import settings
from app.exceptions import (
    ClusterExpiredError,
    DegenerateClusterError,
    HostBelowThresholdError,
    InvalidInputError,
)
from app.models.cluster import (
    Announcement,
    KeyMaterial,
    KeyMaterialMessage,
    MemberRecord,
    SecureCluster,
)
from app.models.fields import floor_ms, to_ms
from app.models.hashchain import ChainDisclosure
from app.services.rng import RandomSource

logger = logging.getLogger(__name__)

Verifier = Callable[[str, ChainDisclosure], bool]

GROUP_KEY_INFO = b"secure-cluster/group-key/v1"

KDF_HASHES = {
    "sha-256": hashes.SHA256,
    "sha3-256": hashes.SHA3_256,
}


def make_announcement(
    sender: str,
    disclosure: ChainDisclosure,
    vsc_value: float,
    threshold: float,
    timestamp: float,
) -> Announcement | None:
    """Announce only when ``vsc_value >= threshold`` (inclusive)."""
    if not math.isfinite(vsc_value) or vsc_value < threshold:
        return None
    return Announcement(
        sender=sender, disclosure=disclosure, vsc_value=vsc_value, timestamp=timestamp
    )


def latest_per_sender(announcements: Iterable[Announcement]) -> dict[str, Announcement]:
    """Keep one announcement per sender: latest timestamp wins, ties keep the first seen."""
    latest: dict[str, Announcement] = {}
    for announcement in announcements:
        current = latest.get(announcement.sender)
        if current is None or announcement.timestamp > current.timestamp:
            latest[announcement.sender] = announcement
    return latest


def derive_group_key(
    member_disclosures: Iterable[ChainDisclosure],
    cluster_id: bytes,
    expires_at: float,
    *,
    alg: str | None = None,
) -> bytes:
    """HKDF over sorted member values, the cluster id and the expiry in ms.

    IKM = value_1 || ... || value_k (ascending by hex) || cluster_id
    || expires_at_ms as 8-byte big-endian.
    """
    values = sorted((d.value for d in member_disclosures), key=bytes.hex)
    if not values:
        raise InvalidInputError("cannot derive a group key for an empty member set")
    name = alg or settings.hash_algorithm
    try:
        algorithm = KDF_HASHES[name]()
    except KeyError:
        raise InvalidInputError(f"unsupported hash algorithm: {name}") from None

    expires_ms = to_ms(expires_at) if math.isfinite(expires_at) else -1
    if not 0 <= expires_ms < 2**64:
        raise InvalidInputError(f"expiry {expires_at!r} is outside the 64-bit millisecond range")
    ikm = b"".join(values) + cluster_id + expires_ms.to_bytes(8, "big")
    return HKDF(algorithm=algorithm, length=32, salt=None, info=GROUP_KEY_INFO).derive(ikm)


def form_cluster(
    initiator: Announcement,
    announcements: Iterable[Announcement],
    verifier: Verifier,
    now: float,
    ttl_seconds: float,
    threshold: float,
    *,
    rng: RandomSource,
) -> SecureCluster:
    """Form a cluster from the initiator and every qualifying, verified announcer.

    Raises:
        HostBelowThresholdError: the initiator's own VSC is below threshold
        DegenerateClusterError: nobody besides the initiator qualifies
    """
    if ttl_seconds <= 0:
        raise InvalidInputError("ttl_seconds must be positive")
    if initiator.vsc_value < threshold:
        raise HostBelowThresholdError(
            f"initiator {initiator.sender} VSC {initiator.vsc_value:.4f} below {threshold}"
        )

    members: dict[str, ChainDisclosure] = {initiator.sender: initiator.disclosure}
    candidates = latest_per_sender(announcements)
    for sender in sorted(candidates):
        if sender == initiator.sender:
            continue
        announcement = candidates[sender]
        if announcement.vsc_value < threshold:
            logger.debug("Not admitting %s: VSC below threshold", sender)
            continue
        if not verifier(sender, announcement.disclosure):
            logger.debug("Not admitting %s: disclosure failed verification", sender)
            continue
        members[sender] = announcement.disclosure

    if len(members) < 2:
        raise DegenerateClusterError("no vehicle besides the initiator qualified")

    cluster_id = rng.randbytes(16)
    created_at = floor_ms(now) / 1000
    expires_at = to_ms(now + ttl_seconds) / 1000
    group_key = derive_group_key(members.values(), cluster_id, expires_at)

    cluster = SecureCluster(
        cluster_id=cluster_id,
        initiator=initiator.sender,
        threshold=threshold,
        members=members,
        group_key=group_key,
        created_at=created_at,
        expires_at=expires_at,
    )
    logger.info(
        "Formed cluster %s with %d members (expires at %.3f s)",
        cluster_id.hex(),
        cluster.size,
        expires_at,
    )
    return cluster


def is_active(cluster: SecureCluster, now: float) -> bool:
    """Lifetime is the half-open interval [created_at, expires_at)."""
    return cluster.created_at <= now < cluster.expires_at


def contains(cluster: SecureCluster, chain_value: bytes) -> bool:
    """Whether some member disclosed ``chain_value``."""
    return any(hmac.compare_digest(d.value, chain_value) for d in cluster.members.values())


def key_material(cluster: SecureCluster) -> KeyMaterial:
    """Shared hash chain information of a cluster (never the key)."""
    return KeyMaterial(
        cluster_id=cluster.cluster_id,
        threshold=cluster.threshold,
        created_at_ms=to_ms(cluster.created_at),
        expires_at_ms=to_ms(cluster.expires_at),
        members=[
            MemberRecord(id=member_id, value=d.value, m=d.m)
            for member_id, d in sorted(cluster.members.items())
        ],
    )


def distribute(cluster: SecureCluster, now: float) -> list[KeyMaterialMessage]:
    """One key material message per member.

    Raises:
        ClusterExpiredError: the cluster is past its expiry
    """
    if now >= cluster.expires_at:
        raise ClusterExpiredError(f"cluster {cluster.cluster_id.hex()} has expired")
    payload = key_material(cluster)
    return [
        KeyMaterialMessage(addressee=member_id, payload=payload)
        for member_id in sorted(cluster.members)
    ]


def _disclosures(material: KeyMaterial) -> dict[str, ChainDisclosure]:
    return {
        record.id: ChainDisclosure(value=record.value, m=record.m, alg=settings.hash_algorithm)
        for record in material.members
    }


def rederive_key(material: KeyMaterial) -> bytes:
    """Group key as a member re-derives it from distributed key material."""
    return derive_group_key(
        _disclosures(material).values(), material.cluster_id, material.expires_at_ms / 1000
    )


def cluster_from_key_material(material: KeyMaterial, initiator: str = "") -> SecureCluster:
    """A member's local view of the cluster, group key included."""
    return SecureCluster(
        cluster_id=material.cluster_id,
        initiator=initiator,
        threshold=material.threshold,
        members=_disclosures(material),
        group_key=rederive_key(material),
        created_at=material.created_at_ms / 1000,
        expires_at=material.expires_at_ms / 1000,
    )
