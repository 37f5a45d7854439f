"""MEC-hosted secure clustering service.

The service is the one party that learns VINs: vehicles register out of band,
announcements are verified against the registry, and cluster requests are
answered with the shared hash chain information of the formed cluster.
"""

import json
import logging
import os
import threading
import time
from collections import defaultdict, deque
from collections.abc import Callable
from pathlib import Path
from typing import Any

from cachetools import TLRUCache
from pydantic import ValidationError

from app.config import settings
from app.exceptions import (
    ConflictError,
    DegenerateClusterError,
    HostBelowThresholdError,
    InvalidInputError,
    SecureClusterError,
    UnknownClusterError,
    UnknownHostError,
)
from app.models.cluster import Announcement, KeyMaterial
from app.models.enums import ClusterStatus, RejectReason
from app.models.hashchain import ChainDisclosure, Vin
from app.models.mec import (
    AnnounceOp,
    ClusterOp,
    ClusterRequest,
    ClusterResponse,
    IngestResult,
    KeyMaterialOp,
    RegisterOp,
    wire_request_adapter,
)
from app.services.cluster_protocol import form_cluster, key_material
from app.services.hashchain import verify_disclosure
from app.services.rng import RandomSource, Xoshiro256StarStar

logger = logging.getLogger(__name__)

RETENTION_WINDOWS = 10
MAX_LIVE_CLUSTERS = 4096


def _monotonic_clock() -> Callable[[], float]:
    start = time.monotonic()
    return lambda: time.monotonic() - start


def _error(exc: Exception) -> dict[str, Any]:
    code = exc.code if isinstance(exc, SecureClusterError) else "validation_error"
    return {"status": "error", "body": {"error": code, "message": str(exc)}}


class MecService:
    """Secure clustering service for one MEC platform.

    Requests are serialized by a lock, so a cluster request always sees a
    consistent snapshot of the retained announcements.
    """

    def __init__(
        self,
        *,
        rng: RandomSource | None = None,
        window_seconds: float | None = None,
        clock: Callable[[], float] | None = None,
    ):
        if rng is None:
            seed = settings.sim_seed
            rng = Xoshiro256StarStar(seed if seed is not None else int.from_bytes(os.urandom(8), "big"))
        self._rng = rng
        self.window_seconds = window_seconds or settings.window_seconds
        self._clock = clock or _monotonic_clock()
        self._now = 0.0
        self._lock = threading.RLock()

        self._registry: dict[str, Vin] = {}
        self._ids_by_vin: dict[str, str] = {}
        retention = max(1, int(round(self.window_seconds * RETENTION_WINDOWS)))
        self._announcements: dict[str, deque[Announcement]] = defaultdict(
            lambda: deque(maxlen=retention)
        )
        self._clusters: TLRUCache = TLRUCache(
            maxsize=MAX_LIVE_CLUSTERS,
            ttu=lambda _key, cluster, _now: cluster.expires_at,
            timer=lambda: self._now,
        )

    # Registry

    @property
    def registry_size(self) -> int:
        return len(self._registry)

    def is_registered(self, pseudo_id: str) -> bool:
        return pseudo_id in self._registry

    def register_vehicle(self, vin: Vin | str, pseudo_id: str | None = None) -> str:
        """Bind a VIN to a fresh (or pre-assigned) opaque pseudo-id.

        Raises:
            InvalidInputError: malformed VIN
            ConflictError: VIN or pseudo-id already registered
        """
        if not isinstance(vin, Vin):
            try:
                vin = Vin.parse(vin)
            except ValidationError as exc:
                raise InvalidInputError("not a valid vehicle identification number") from exc
        with self._lock:
            if vin.text in self._ids_by_vin:
                raise ConflictError("vehicle already registered")
            if pseudo_id is None:
                pseudo_id = self._rng.randbytes(8).hex()
                while pseudo_id in self._registry:
                    pseudo_id = self._rng.randbytes(8).hex()
            elif pseudo_id in self._registry:
                raise ConflictError(f"pseudo-id {pseudo_id} already registered")
            self._registry[pseudo_id] = vin
            self._ids_by_vin[vin.text] = pseudo_id
        logger.info("Registered vehicle %s", pseudo_id)
        return pseudo_id

    def verify_member(self, sender: str, disclosure: ChainDisclosure) -> bool:
        """Registry-backed disclosure verification."""
        vin = self._registry.get(sender)
        return vin is not None and verify_disclosure(disclosure, vin)

    def load_registry(self, path: str | Path) -> int:
        """Load ``{"vehicles": {pseudo_id: vin}}``; a missing file loads nothing."""
        path = Path(path)
        if not path.exists():
            return 0
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}: not valid JSON: {exc}") from exc
        vehicles = data.get("vehicles", {}) if isinstance(data, dict) else None
        if not isinstance(vehicles, dict) or not all(isinstance(v, str) for v in vehicles.values()):
            raise InvalidInputError(f"{path}: expected {{\"vehicles\": {{pseudo_id: vin}}}}")
        for pseudo_id, vin in sorted(vehicles.items()):
            self.register_vehicle(vin, pseudo_id)
        logger.info("Loaded %d registered vehicles", len(vehicles))
        return len(vehicles)

    def save_registry(self, path: str | Path) -> None:
        """Write the registry. This file is the only artifact holding VINs."""
        with self._lock:
            vehicles = {pid: vin.text for pid, vin in self._registry.items()}
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps({"vehicles": vehicles}, sort_keys=True, indent=2), encoding="utf-8")
        logger.info("Saved %d registered vehicles", len(vehicles))

    # Announcements and clusters

    def _advance(self, now: float) -> None:
        self._now = now

    def ingest_announcement(self, announcement: Announcement, now: float) -> IngestResult:
        """Accept iff the sender is registered, its disclosure verifies and it is current."""
        with self._lock:
            self._advance(now)
            sender = announcement.sender
            if sender not in self._registry:
                return IngestResult(accepted=False, reason=RejectReason.UNKNOWN_SENDER)
            if not self.verify_member(sender, announcement.disclosure):
                logger.debug("Rejected announcement from %s: bad disclosure", sender)
                return IngestResult(accepted=False, reason=RejectReason.BAD_DISCLOSURE)
            if not now - self.window_seconds <= announcement.timestamp <= now:
                return IngestResult(accepted=False, reason=RejectReason.STALE)

            retained = self._announcements[sender]
            horizon = now - self.window_seconds * RETENTION_WINDOWS
            while retained and retained[0].timestamp < horizon:
                retained.popleft()
            retained.append(announcement)
            logger.debug("Accepted announcement from %s (VSC %.4f)", sender, announcement.vsc_value)
            return IngestResult(accepted=True)

    def _window(self, now: float, window_seconds: float) -> list[Announcement]:
        start = now - window_seconds
        return [
            a
            for sender in sorted(self._announcements)
            for a in self._announcements[sender]
            if start <= a.timestamp <= now
        ]

    def handle_cluster_request(self, request: ClusterRequest, now: float) -> ClusterResponse:
        """Form a cluster around the host from announcements in [now - window, now].

        Raises:
            UnknownHostError: the host is not registered
        """
        with self._lock:
            self._advance(now)
            if request.host_id not in self._registry:
                raise UnknownHostError(f"host {request.host_id} is not registered")

            candidates = self._window(now, request.window_seconds)
            own = [a for a in candidates if a.sender == request.host_id]
            if not own:
                logger.info("Host %s made no announcement in the window", request.host_id)
                return ClusterResponse(status=ClusterStatus.HOST_BELOW_THRESHOLD)
            initiator = max(own, key=lambda a: a.timestamp)

            try:
                cluster = form_cluster(
                    initiator,
                    candidates,
                    self.verify_member,
                    now,
                    request.ttl_seconds,
                    request.threshold,
                    rng=self._rng,
                )
            except HostBelowThresholdError:
                return ClusterResponse(status=ClusterStatus.HOST_BELOW_THRESHOLD)
            except DegenerateClusterError:
                logger.info("Cluster request from %s is degenerate", request.host_id)
                return ClusterResponse(status=ClusterStatus.DEGENERATE)

            self._clusters[cluster.cluster_id] = cluster
            return ClusterResponse(status=ClusterStatus.OK, key_material=key_material(cluster))

    def get_key_material(self, cluster_id: bytes, now: float) -> KeyMaterial:
        """Key material of a live cluster.

        Raises:
            UnknownClusterError: no such cluster, or it has expired
        """
        with self._lock:
            self._advance(now)
            cluster = self._clusters.get(cluster_id)
            if cluster is None:
                raise UnknownClusterError(f"no live cluster {cluster_id.hex()}")
            return key_material(cluster)

    @property
    def live_clusters(self) -> int:
        with self._lock:
            self._clusters.expire()
            return len(self._clusters)

    # Wire protocol

    def handle_wire(self, request: dict[str, Any]) -> dict[str, Any]:
        """Dispatch one decoded wire request to a ``{"status", "body"}`` response."""
        try:
            op = wire_request_adapter.validate_python(request)
        except ValidationError as exc:
            first = exc.errors()[0]
            where = ".".join(str(part) for part in first["loc"])
            return _error(InvalidInputError(f"invalid request at {where or 'root'}: {first['msg']}"))

        now = op.now_ms / 1000 if getattr(op, "now_ms", None) is not None else self._clock()
        try:
            if isinstance(op, RegisterOp):
                pseudo_id = self.register_vehicle(op.vin, op.id)
                return {"status": "ok", "body": {"id": pseudo_id}}
            if isinstance(op, AnnounceOp):
                announcement = Announcement(
                    sender=op.sender,
                    disclosure=op.disclosure,
                    vsc_value=op.vsc,
                    timestamp=op.ts_ms / 1000,
                )
                result = self.ingest_announcement(announcement, now)
                if result.accepted:
                    return {"status": "accepted", "body": {}}
                return {"status": "rejected", "body": {"reason": result.reason.value}}
            if isinstance(op, ClusterOp):
                response = self.handle_cluster_request(
                    ClusterRequest(
                        host_id=op.host_id,
                        threshold=op.threshold,
                        ttl_seconds=op.ttl_ms / 1000,
                        window_seconds=op.window_ms / 1000,
                    ),
                    now,
                )
                body = response.key_material.model_dump(mode="json") if response.key_material else {}
                return {"status": response.status.value, "body": body}
            if isinstance(op, KeyMaterialOp):
                material = self.get_key_material(op.cluster_id, now)
                return {"status": "ok", "body": material.model_dump(mode="json")}
        except SecureClusterError as exc:
            return _error(exc)
        except ValidationError as exc:
            return _error(InvalidInputError(str(exc)))
        return _error(InvalidInputError("unsupported op"))


# Global service instance used by the HTTP facade
mec_service = MecService()
