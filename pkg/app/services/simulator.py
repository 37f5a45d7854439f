"""Deterministic tick-driven world: mobility, channel signaling, clustering and data.

Each tick runs six phases in a fixed order:

1. mobility (constant velocity)
2. channel information exchange between every pair of vehicles
3. VSC computation and announcements, at unit-time window boundaries
4. key material delivery and scheduled cluster formation
5. broadcast data delivery and emission
6. expiry checks

Events of one tick are ordered by (phase, actor). Every random draw comes
from the single scenario-seeded generator, so equal scenarios give equal
traces and metrics.
"""

import csv
import json
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from app.config import settings
from app.exceptions import (
    AssumptionViolationError,
    ChainRangeError,
    DegenerateClusterError,
    HostBelowThresholdError,
    UnknownClusterError,
)
from app.models.channel import ChannelInfo, ChannelParams, Position, VscInputs
from app.models.cluster import Announcement, KeyMaterial, SecureCluster
from app.models.enums import ClusterStatus, FrameLevel, ReceiveStatus, VehicleRole
from app.models.hashchain import ChainDisclosure
from app.models.mec import ClusterRequest
from app.models.messaging import BroadcastFrame, MuxedSignal
from app.models.scenario import Event, Metrics, Scenario, VehicleSpec
from app.parsers.wire import encode_message
from app.services.channel_model import (
    distance,
    in_range,
    rayleigh_fading,
    snr_linear,
    snr_matrix,
    vsc,
)
from app.services.cluster_protocol import (
    cluster_from_key_material,
    distribute,
    form_cluster,
    is_active,
    make_announcement,
)
from app.services.hashchain import ChainCursor, generate_chain, make_link_verifier
from app.services.mec_service import MecService
from app.services.rng import Xoshiro256StarStar
from app.services.secure_messaging import (
    NonceCounter,
    encrypt_broadcast,
    make_core_frame,
    mux,
    receive_broadcast,
    try_decrypt,
)

logger = logging.getLogger(__name__)

PHASE_MOBILITY = 1
PHASE_CHANNEL = 2
PHASE_ANNOUNCE = 3
PHASE_CLUSTER = 4
PHASE_DATA = 5
PHASE_EXPIRY = 6

MAX_PUSH_DOUBLINGS = 64


@dataclass
class VehicleState:
    """Mutable per-vehicle simulation state."""

    spec: VehicleSpec
    position: Position
    cursor: ChainCursor | None = None
    pending: ChainDisclosure | None = None
    public_value: bytes | None = None
    cluster: SecureCluster | None = None
    member_value: bytes | None = None
    nonce_counter: NonceCounter = field(default_factory=NonceCounter)
    observations: deque = field(default_factory=deque)
    inbox: list[Announcement] = field(default_factory=list)
    own_announcement: Announcement | None = None

    @property
    def id(self) -> str:
        return self.spec.id

    @property
    def legitimate(self) -> bool:
        return self.spec.role is VehicleRole.LEGITIMATE


@dataclass
class _KeyDelivery:
    deliver_at_ms: int
    requested_at_ms: int
    initiator: str
    material: KeyMaterial
    group_key: bytes | None = None


@dataclass
class _SignalDelivery:
    deliver_at_ms: int
    sender: str
    signal: MuxedSignal


def _mean_legitimate_snr(scenario: Scenario) -> dict[str, float]:
    """Each legitimate host's mean SNR over the other legitimate vehicles."""
    params = scenario.channel
    legitimate = sorted(scenario.legitimate, key=lambda v: v.id)
    means = {}
    for host in legitimate:
        values = [
            snr_linear(other.position, host.position, params)
            if in_range(distance(other.position, host.position), params)
            else 0.0
            for other in legitimate
            if other.id != host.id
        ]
        means[host.id] = math.fsum(values) / len(values)
    return means


def _violations(
    position: Position,
    hosts: list[VehicleSpec],
    means: dict[str, float],
    params: ChannelParams,
) -> list[str]:
    violated = []
    for host in hosts:
        mean = means[host.id]
        if mean == 0.0:
            # isolated host: never computes a VSC
            continue
        d = distance(position, host.position)
        snr = snr_linear(position, host.position, params) if in_range(d, params) else 0.0
        if not snr < mean:
            violated.append(host.id)
    return violated


def place_eavesdropper_validly(scenario: Scenario, *, adjust: bool | None = None) -> Scenario:
    """Check that every eavesdropper's SNR at each legitimate host is below that host's mean.

    With ``adjust`` (default: ``scenario.auto_place``) an offending eavesdropper
    is pushed outward from the legitimate centroid until the condition holds.

    Raises:
        AssumptionViolationError: the condition fails and cannot be repaired
    """
    if not scenario.eavesdroppers:
        return scenario
    adjust = scenario.auto_place if adjust is None else adjust
    hosts = sorted(scenario.legitimate, key=lambda v: v.id)
    means = _mean_legitimate_snr(scenario)
    params = scenario.channel
    centroid = Position(
        x=math.fsum(v.position.x for v in hosts) / len(hosts),
        y=math.fsum(v.position.y for v in hosts) / len(hosts),
    )

    placed: list[VehicleSpec] = []
    for vehicle in scenario.vehicles:
        if vehicle.role is VehicleRole.LEGITIMATE:
            placed.append(vehicle)
            continue
        violated = _violations(vehicle.position, hosts, means, params)
        if not violated:
            placed.append(vehicle)
            continue
        if not adjust:
            raise AssumptionViolationError(
                f"eavesdropper {vehicle.id}: SNR at {violated[0]} is not below that host's mean SNR"
            )
        dx = vehicle.position.x - centroid.x
        dy = vehicle.position.y - centroid.y
        if dx == 0 and dy == 0:
            raise AssumptionViolationError(
                f"eavesdropper {vehicle.id} sits at the legitimate centroid and cannot be pushed out"
            )
        for k in range(1, MAX_PUSH_DOUBLINGS + 1):
            candidate = Position(x=centroid.x + dx * 2**k, y=centroid.y + dy * 2**k)
            if not _violations(candidate, hosts, means, params):
                break
        else:
            raise AssumptionViolationError(f"no valid placement found for eavesdropper {vehicle.id}")
        logger.info(
            "Moved eavesdropper %s to (%.1f, %.1f)", vehicle.id, candidate.x, candidate.y
        )
        placed.append(vehicle.model_copy(update={"position": candidate}))

    return scenario.model_copy(update={"vehicles": placed})


class Simulator:
    """One simulation run over a validated scenario."""

    def __init__(self, scenario: Scenario, *, trace: bool | None = None):
        self.scenario = place_eavesdropper_validly(scenario)
        self.trace = settings.trace if trace is None else trace
        self.rng = Xoshiro256StarStar(self.scenario.seed)
        self.metrics = Metrics()
        self.events: list[Event] = []
        self.tick_index = 0
        self.now_ms = 0

        self.mec_mode = self.scenario.initiator == "mec"
        self.host_id = self.scenario.requesting_host
        self.vehicles: dict[str, VehicleState] = {
            spec.id: VehicleState(spec=spec, position=spec.position)
            for spec in sorted(self.scenario.vehicles, key=lambda v: v.id)
        }
        self._ids = list(self.vehicles)
        self._legitimate = [vid for vid in self._ids if self.vehicles[vid].legitimate]
        self._eavesdroppers = [vid for vid in self._ids if not self.vehicles[vid].legitimate]

        self.mec = MecService(
            rng=self.rng,
            window_seconds=self.scenario.window_seconds,
            clock=lambda: self.now,
        )
        for vid in self._legitimate:
            state = self.vehicles[vid]
            # eavesdroppers are never registered
            self.mec.register_vehicle(state.spec.vin, vid)
            state.cursor = ChainCursor(generate_chain(state.spec.vin, self.scenario.chain_length))
            self._draw_disclosure(state)

        self._link_verifier = make_link_verifier()
        self._pending_keys: list[_KeyDelivery] = []
        self._in_flight: list[_SignalDelivery] = []
        self._sizes: list[int] = []
        self._latencies: list[float] = []
        self._expired: set[bytes] = set()
        logger.info(
            "Simulating %d vehicles (%d eavesdroppers) for %d ticks, seed %d",
            len(self._ids),
            len(self._eavesdroppers),
            self.scenario.ticks,
            self.scenario.seed,
        )

    @property
    def now(self) -> float:
        return self.now_ms / 1000

    def observations(self, vehicle_id: str) -> list[ChannelInfo]:
        """Channel information the vehicle holds for the current window."""
        return [info for _, info in self.vehicles[vehicle_id].observations]

    def _event(self, phase: int, actor: str, kind: str, **data) -> Event:
        return Event(t_ms=self.now_ms, phase=phase, actor=actor, kind=kind, data=data)

    def _draw_disclosure(self, state: VehicleState) -> None:
        try:
            state.pending = state.cursor.next_disclosure()
        except ChainRangeError:
            logger.warning("Hash chain of %s is exhausted", state.id)
            state.pending = None
            return
        state.public_value = state.pending.value

    def _has_active_cluster(self, state: VehicleState) -> bool:
        return state.cluster is not None and is_active(state.cluster, self.now)

    # Tick

    def step(self) -> list[Event]:
        """Advance one tick and return its events in (phase, actor) order."""
        self.tick_index += 1
        self.now_ms = self.tick_index * self.scenario.tick_ms
        boundary = self.tick_index % self.scenario.window_ticks == 0

        events: list[Event] = []
        self._move(events)
        self._exchange_channel_info(events)
        if boundary:
            self._announce(events)
        self._deliver_key_material(events)
        if boundary:
            self._form_cluster(events)
        self._exchange_data(events)
        self._check_expiry(events)

        events.sort(key=lambda e: (e.phase, e.actor))
        if self.trace:
            self.events.extend(events)
        return events

    def _move(self, events: list[Event]) -> None:
        dt = self.scenario.tick_s
        for vid in self._ids:
            state = self.vehicles[vid]
            vx, vy = state.spec.velocity
            if vx == 0 and vy == 0:
                continue
            state.position = Position(x=state.position.x + vx * dt, y=state.position.y + vy * dt)
            events.append(
                self._event(PHASE_MOBILITY, vid, "move", x=state.position.x, y=state.position.y)
            )

    def _exchange_channel_info(self, events: list[Event]) -> None:
        params = self.scenario.channel
        positions = [self.vehicles[vid].position for vid in self._ids]
        snr = snr_matrix(positions, params)
        horizon = self.now_ms - self.scenario.window_ticks * self.scenario.tick_ms

        for j, receiver_id in enumerate(self._ids):
            receiver = self.vehicles[receiver_id]
            if not receiver.legitimate:
                continue
            for i, sender_id in enumerate(self._ids):
                if i == j:
                    continue
                sender = self.vehicles[sender_id]
                if not sender.legitimate and not self.scenario.eavesdroppers_respond:
                    continue
                if not in_range(distance(sender.position, receiver.position), params):
                    continue
                value = float(snr[i, j])
                if params.fading:
                    value = rayleigh_fading(value, self.rng)
                receiver.observations.append(
                    (
                        self.now_ms,
                        ChannelInfo(
                            sender=sender_id,
                            receiver=receiver_id,
                            snr_linear=value,
                            timestamp=self.now,
                        ),
                    )
                )
            while receiver.observations and receiver.observations[0][0] <= horizon:
                receiver.observations.popleft()
            events.append(
                self._event(
                    PHASE_CHANNEL, receiver_id, "channel_info", held=len(receiver.observations)
                )
            )

    def _vsc_of(self, state: VehicleState) -> float | None:
        """VSC toward the responder with the highest window-mean SNR."""
        by_sender: dict[str, list[float]] = {}
        for _, info in state.observations:
            by_sender.setdefault(info.sender, []).append(info.snr_linear)
        if not by_sender:
            return None
        means = {s: math.fsum(values) / len(values) for s, values in sorted(by_sender.items())}
        target = max(means, key=means.__getitem__)
        inputs = VscInputs(
            host=state.id,
            snr_ab=means[target],
            observed=tuple(info for _, info in state.observations),
        )
        return vsc(inputs)

    def _announce(self, events: list[Event]) -> None:
        window_start = self.now - self.scenario.window_seconds
        for vid in self._legitimate:
            state = self.vehicles[vid]
            state.own_announcement = None
            state.inbox = [a for a in state.inbox if a.timestamp >= window_start]

        for vid in self._legitimate:
            state = self.vehicles[vid]
            value = self._vsc_of(state)
            if value is None:
                continue
            self.metrics.vsc_trace.setdefault(vid, []).append((self.now, value))
            if self._has_active_cluster(state):
                continue
            if state.pending is None:
                self._draw_disclosure(state)
                if state.pending is None:
                    continue

            announcement = make_announcement(
                vid, state.pending, value, self.scenario.threshold, self.now
            )
            if announcement is None:
                continue
            self.metrics.announcements += 1
            state.own_announcement = announcement
            events.append(
                self._event(
                    PHASE_ANNOUNCE,
                    vid,
                    "announce",
                    vsc=value,
                    value=state.pending.value.hex(),
                    m=state.pending.m,
                )
            )
            if self.mec_mode:
                result = self.mec.ingest_announcement(announcement, self.now)
                if not result.accepted:
                    events.append(
                        self._event(PHASE_ANNOUNCE, vid, "announce_rejected", reason=result.reason.value)
                    )
            # legitimate vehicles only; eavesdroppers never learn disclosures
            for other in self._legitimate:
                if other != vid:
                    self.vehicles[other].inbox.append(announcement)

    def _deliver_key_material(self, events: list[Event]) -> None:
        due = [d for d in self._pending_keys if d.deliver_at_ms <= self.now_ms]
        if not due:
            return
        self._pending_keys = [d for d in self._pending_keys if d.deliver_at_ms > self.now_ms]

        for delivery in due:
            material = delivery.material
            if self.mec_mode:
                try:
                    material = self.mec.get_key_material(material.cluster_id, self.now)
                except UnknownClusterError:
                    events.append(
                        self._event(
                            PHASE_CLUSTER,
                            delivery.initiator,
                            "key_material_missing",
                            cluster_id=material.cluster_id.hex(),
                        )
                    )
                    continue

            keys: list[bytes] = []
            for record in material.members:
                state = self.vehicles[record.id]
                local = cluster_from_key_material(material, initiator=delivery.initiator)
                state.cluster = local
                state.member_value = record.value
                state.public_value = record.value
                state.nonce_counter = NonceCounter()
                if state.pending is not None and state.pending.value == record.value:
                    state.pending = None
                keys.append(local.group_key)
                events.append(
                    self._event(
                        PHASE_CLUSTER,
                        record.id,
                        "key_material",
                        cluster_id=material.cluster_id.hex(),
                        members=len(material.members),
                    )
                )

            expected = delivery.group_key if delivery.group_key is not None else keys[0]
            self.metrics.key_agreement_failures += sum(1 for key in keys if key != expected)
            self._latencies.append((self.now_ms - delivery.requested_at_ms) / 1000)

    def _form_cluster(self, events: list[Event]) -> None:
        host = self.vehicles[self.host_id]
        if self._pending_keys or self._has_active_cluster(host):
            return

        if self.mec_mode:
            response = self.mec.handle_cluster_request(
                ClusterRequest(
                    host_id=self.host_id,
                    threshold=self.scenario.threshold,
                    ttl_seconds=self.scenario.ttl_seconds,
                    window_seconds=self.scenario.window_seconds,
                ),
                self.now,
            )
            events.append(
                self._event(PHASE_CLUSTER, self.host_id, "cluster_request", status=response.status.value)
            )
            if response.status is not ClusterStatus.OK:
                return
            material = response.key_material
            group_key = None
        else:
            if host.own_announcement is None:
                events.append(
                    self._event(
                        PHASE_CLUSTER,
                        self.host_id,
                        "cluster_request",
                        status=ClusterStatus.HOST_BELOW_THRESHOLD.value,
                    )
                )
                return
            try:
                cluster = form_cluster(
                    host.own_announcement,
                    host.inbox,
                    self._link_verifier,
                    self.now,
                    self.scenario.ttl_seconds,
                    self.scenario.threshold,
                    rng=self.rng,
                )
            except (DegenerateClusterError, HostBelowThresholdError) as exc:
                events.append(
                    self._event(PHASE_CLUSTER, self.host_id, "cluster_request", status=exc.code)
                )
                return
            messages = distribute(cluster, self.now)
            material = messages[0].payload
            group_key = cluster.group_key

        size = len(material.members)
        self.metrics.clusters_formed += 1
        self.metrics.cluster_sizes.append((self.now, material.cluster_id.hex(), size))
        self._sizes.append(size)
        events.append(
            self._event(
                PHASE_CLUSTER,
                self.host_id,
                "cluster_formed",
                cluster_id=material.cluster_id.hex(),
                size=size,
                members=[record.id for record in material.members],
                expires_at_ms=material.expires_at_ms,
            )
        )
        self._pending_keys.append(
            _KeyDelivery(
                deliver_at_ms=self.now_ms + self.scenario.tick_ms,
                requested_at_ms=self.now_ms,
                initiator=self.host_id,
                material=material,
                group_key=group_key,
            )
        )

    def _tamper(self, frame: BroadcastFrame) -> BroadcastFrame:
        corrupted = bytearray(frame.ciphertext)
        corrupted[self.rng.randbelow(len(corrupted))] ^= 0x01
        return frame.model_copy(update={"ciphertext": bytes(corrupted)})

    def _deliver_signals(self) -> None:
        due = [d for d in self._in_flight if d.deliver_at_ms <= self.now_ms]
        if not due:
            return
        self._in_flight = [d for d in self._in_flight if d.deliver_at_ms > self.now_ms]
        m = self.metrics
        tamper_rate = self.scenario.tamper_rate

        for delivery in due:
            for receiver_id in self._legitimate:
                if receiver_id == delivery.sender:
                    continue
                receiver = self.vehicles[receiver_id]
                for frame in delivery.signal.frames:
                    if (
                        tamper_rate > 0
                        and frame.level is FrameLevel.ENHANCEMENT
                        and frame.ciphertext
                        and self.rng.random() < tamper_rate
                    ):
                        frame = self._tamper(frame)
                    result = receive_broadcast(frame, receiver.cluster, self.now)
                    if result.status is ReceiveStatus.ACCEPTED:
                        m.frames_accepted += 1
                    elif result.status is ReceiveStatus.IGNORED:
                        m.frames_ignored += 1
                    elif result.status is ReceiveStatus.EXPIRED:
                        m.frames_expired += 1
                    else:
                        m.frames_auth_failed += 1

            # eavesdroppers record everything and guess keys for sealed frames
            for _ in self._eavesdroppers:
                for frame in delivery.signal.frames:
                    if frame.level is FrameLevel.CORE:
                        m.eavesdrop_core_read += 1
                        continue
                    m.eavesdrop_attempts += 1
                    if try_decrypt(frame, self.rng.randbytes(32)) is not None:
                        m.eavesdrop_success += 1

    def _exchange_data(self, events: list[Event]) -> None:
        self._deliver_signals()
        m = self.metrics
        receivers = len(self._legitimate) - 1

        for vid in self._legitimate:
            state = self.vehicles[vid]
            core = None
            if (
                self.scenario.core_rate > 0
                and state.public_value is not None
                and self.rng.random() < self.scenario.core_rate
            ):
                core = make_core_frame(
                    state.public_value, f"EMERGENCY|{vid}|{self.now_ms}".encode(), self.now
                )
            enhancements = []
            if self._has_active_cluster(state) and state.member_value is not None:
                for k in range(self.scenario.traffic):
                    enhancements.append(
                        encrypt_broadcast(
                            state.cluster,
                            state.member_value,
                            f"DATA|{vid}|{self.now_ms}|{k}".encode(),
                            self.now,
                            state.nonce_counter,
                        )
                    )
            if core is None and not enhancements:
                continue

            signal = mux(core, enhancements)
            count = len(signal.frames)
            m.frames_emitted += count
            m.core_frames_sent += 0 if core is None else 1
            m.enhancement_frames_sent += len(enhancements)
            m.frames_sent += count * receivers
            self._in_flight.append(
                _SignalDelivery(
                    deliver_at_ms=self.now_ms + self.scenario.tick_ms, sender=vid, signal=signal
                )
            )
            data = {"core": core is not None, "enh": len(enhancements)}
            if self.trace:
                data["frames"] = [frame.to_wire() for frame in signal.frames]
            events.append(self._event(PHASE_DATA, vid, "broadcast", **data))

    def _check_expiry(self, events: list[Event]) -> None:
        for vid in self._legitimate:
            cluster = self.vehicles[vid].cluster
            if cluster is None or cluster.cluster_id in self._expired:
                continue
            if self.now >= cluster.expires_at:
                self._expired.add(cluster.cluster_id)
                logger.debug("Cluster %s expired", cluster.cluster_id.hex())
                events.append(
                    self._event(
                        PHASE_EXPIRY, cluster.initiator, "cluster_expired", cluster_id=cluster.cluster_id.hex()
                    )
                )

    # Results

    def finalize(self) -> Metrics:
        """Close the books: frames still travelling count as in flight."""
        m = self.metrics
        receivers = len(self._legitimate) - 1
        m.frames_in_flight = sum(len(d.signal.frames) for d in self._in_flight) * receivers
        m.mean_cluster_size = math.fsum(self._sizes) / len(self._sizes) if self._sizes else 0.0
        m.formation_latency_s = (
            math.fsum(self._latencies) / len(self._latencies) if self._latencies else 0.0
        )
        return m

    def run(self) -> Metrics:
        for _ in range(self.scenario.ticks):
            self.step()
        metrics = self.finalize()
        logger.info(
            "Run finished: %d clusters, %d frames sent, %d eavesdrop successes",
            metrics.clusters_formed,
            metrics.frames_sent,
            metrics.eavesdrop_success,
        )
        return metrics


def run(scenario: Scenario, *, trace: bool | None = None) -> Metrics:
    """Run a scenario to completion."""
    return Simulator(scenario, trace=trace).run()


def metrics_json(metrics: Metrics) -> str:
    """Canonical metrics document: sorted keys, stable float rendering."""
    return json.dumps(metrics.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"


def write_outputs(metrics: Metrics, out_dir: str | Path, events: list[Event] | None = None) -> list[Path]:
    """Write metrics.json, metrics.csv, vsc_trace.csv, clusters.csv and optionally trace.ndjson."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "metrics.json"
    path.write_text(metrics_json(metrics), encoding="utf-8")
    written.append(path)

    scalars = metrics.scalar_fields()
    path = out / "metrics.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(sorted(scalars))
        writer.writerow([scalars[name] for name in sorted(scalars)])
    written.append(path)

    path = out / "vsc_trace.csv"
    rows = sorted(
        (t, vid, value) for vid, series in metrics.vsc_trace.items() for t, value in series
    )
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time_s", "vehicle", "vsc"])
        writer.writerows(rows)
    written.append(path)

    path = out / "clusters.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time_s", "cluster_id", "size"])
        writer.writerows(metrics.cluster_sizes)
    written.append(path)

    if events is not None:
        path = out / "trace.ndjson"
        with path.open("wb") as fh:
            for event in events:
                fh.write(encode_message(event.model_dump(mode="json")))
        written.append(path)

    return written


def _convoy_vin(n: int) -> str:
    return f"1HGCM82633A{n:06d}"


def default_scenario(seed: int = 0) -> Scenario:
    """Ten-vehicle convoy at 20 m spacing with one eavesdropper 300 m off the road."""
    velocity = (25.0, 0.0)
    vehicles = [
        VehicleSpec(
            id=f"v{n:02d}",
            vin=_convoy_vin(n),
            position=Position(x=20.0 * n, y=0.0),
            velocity=velocity,
        )
        for n in range(10)
    ]
    vehicles.append(
        VehicleSpec(
            id="eve",
            vin=_convoy_vin(99),
            position=Position(x=90.0, y=300.0),
            velocity=velocity,
            role=VehicleRole.EAVESDROPPER,
        )
    )
    return Scenario(
        seed=seed,
        duration_s=60.0,
        tick_s=0.1,
        threshold=1.0,
        ttl_seconds=10.0,
        vehicles=vehicles,
    )
