"""Pydantic models for simulation scenarios, trace events and metrics."""

from typing import Annotated, Any

from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    model_validator,
)

from app.models.channel import ChannelParams, Position
from app.models.enums import VehicleRole
from app.models.hashchain import Vin

ScenarioVin = Annotated[
    Vin,
    BeforeValidator(lambda v: Vin.parse(v) if isinstance(v, str) else v),
    PlainSerializer(lambda v: v.text, return_type=str),
]


class VehicleSpec(BaseModel):
    """One vehicle of a scenario."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    id: str = Field(..., min_length=1, max_length=64, description="Pseudo-id")
    vin: ScenarioVin
    position: Position
    velocity: tuple[float, float] = Field(default=(0.0, 0.0), description="m/s")
    role: VehicleRole = VehicleRole.LEGITIMATE


class Scenario(BaseModel):
    """Simulation world description.

    ``initiator`` is a legitimate vehicle id (vehicle-initiated formation) or
    ``"mec"`` (the MEC forms clusters on behalf of ``host``).
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False, extra="forbid")

    seed: int = Field(default=0, ge=0, lt=2**64)
    duration_s: float = Field(default=60.0, gt=0)
    tick_s: float = Field(default=0.1, gt=0)
    channel: ChannelParams = Field(default_factory=ChannelParams)
    threshold: float = 1.0
    ttl_seconds: float = Field(default=10.0, gt=0)
    window_seconds: float = Field(default=1.0, gt=0)
    chain_length: int = Field(default=1000, ge=1, le=1_000_000)
    vehicles: list[VehicleSpec]
    initiator: str = "mec"
    host: str | None = None
    traffic: int = Field(default=1, ge=0, description="Enhancement frames per tick per member")
    core_rate: float = Field(default=0.02, ge=0, le=1)
    tamper_rate: float = Field(default=0.0, ge=0, le=1)
    eavesdroppers_respond: bool = True
    auto_place: bool = False

    @model_validator(mode="after")
    def _check_world(self) -> "Scenario":
        if abs(self.tick_s * 1000 - round(self.tick_s * 1000)) > 1e-9:
            raise ValueError("tick_s must be a whole number of milliseconds")
        if self.window_seconds < self.tick_s:
            raise ValueError("window_seconds must be at least one tick")
        ids = [v.id for v in self.vehicles]
        if len(set(ids)) != len(ids):
            raise ValueError("vehicle ids must be unique")
        vins = [v.vin.text for v in self.vehicles]
        if len(set(vins)) != len(vins):
            raise ValueError("vehicle VINs must be unique")
        legitimate = {v.id for v in self.vehicles if v.role is VehicleRole.LEGITIMATE}
        if len(legitimate) < 2:
            raise ValueError("a scenario needs at least 2 legitimate vehicles")
        if self.initiator != "mec" and self.initiator not in legitimate:
            raise ValueError("initiator must be 'mec' or a legitimate vehicle id")
        if self.host is not None and self.host not in legitimate:
            raise ValueError("host must be a legitimate vehicle id")
        return self

    @property
    def tick_ms(self) -> int:
        return int(round(self.tick_s * 1000))

    @property
    def ticks(self) -> int:
        return int(round(self.duration_s / self.tick_s))

    @property
    def window_ticks(self) -> int:
        return max(1, int(round(self.window_seconds / self.tick_s)))

    @property
    def legitimate(self) -> list[VehicleSpec]:
        return [v for v in self.vehicles if v.role is VehicleRole.LEGITIMATE]

    @property
    def eavesdroppers(self) -> list[VehicleSpec]:
        return [v for v in self.vehicles if v.role is VehicleRole.EAVESDROPPER]

    @property
    def requesting_host(self) -> str:
        """Vehicle that requests clusters (the initiator or the MEC host)."""
        if self.initiator != "mec":
            return self.initiator
        return self.host or min(v.id for v in self.legitimate)


class Event(BaseModel):
    """One trace event; ordering key is (t_ms, phase, actor)."""

    model_config = ConfigDict(frozen=True)

    t_ms: int
    phase: int
    actor: str
    kind: str
    data: dict[str, Any] = Field(default_factory=dict)


class Metrics(BaseModel):
    """Measured outcomes of a run.

    Conservation: frames_sent = frames_accepted + frames_ignored
    + frames_auth_failed + frames_expired + frames_in_flight, where
    frames_sent counts per-receiver deliveries of every emitted frame.
    """

    clusters_formed: int = 0
    mean_cluster_size: float = 0.0
    formation_latency_s: float = 0.0
    frames_emitted: int = 0
    core_frames_sent: int = 0
    enhancement_frames_sent: int = 0
    frames_sent: int = 0
    frames_accepted: int = 0
    frames_ignored: int = 0
    frames_auth_failed: int = 0
    frames_expired: int = 0
    frames_in_flight: int = 0
    announcements: int = 0
    eavesdrop_attempts: int = 0
    eavesdrop_success: int = 0
    eavesdrop_core_read: int = 0
    key_agreement_failures: int = 0
    vsc_trace: dict[str, list[tuple[float, float]]] = Field(default_factory=dict)
    cluster_sizes: list[tuple[float, str, int]] = Field(default_factory=list)

    def scalar_fields(self) -> dict[str, int | float]:
        """Flat scalar view used for metrics.csv."""
        return {
            name: value
            for name, value in self.model_dump().items()
            if isinstance(value, (int, float))
        }

    def is_conserved(self) -> bool:
        return self.frames_sent == (
            self.frames_accepted
            + self.frames_ignored
            + self.frames_auth_failed
            + self.frames_expired
            + self.frames_in_flight
        )
