"""Pydantic models for the channel model and VSC inputs.

All SNR values are linear power ratios, never dB.
"""

from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Position(BaseModel):
    """Planar position in meters."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    x: float = Field(..., description="meters")
    y: float = Field(..., description="meters")


class ChannelParams(BaseModel):
    """Log-distance path loss parameters."""

    model_config = ConfigDict(
        frozen=True,
        allow_inf_nan=False,
        json_schema_extra={
            "example": {
                "tx_power_dbm": 23.0,
                "ref_loss_db": 47.0,
                "ref_distance_m": 1.0,
                "path_loss_exponent": 2.7,
                "noise_floor_dbm": -96.0,
                "min_distance_m": 1.0,
                "range_m": None,
                "fading": False,
            }
        },
    )

    tx_power_dbm: float = 23.0
    ref_loss_db: float = 47.0
    ref_distance_m: float = Field(default=1.0, gt=0)
    path_loss_exponent: float = Field(default=2.7, gt=0)
    noise_floor_dbm: float = -96.0
    min_distance_m: float = Field(default=1.0, gt=0)
    range_m: float | None = Field(default=None, gt=0, description="Radio range cutoff, off when null")
    fading: bool = Field(default=False, description="Rayleigh fading on linear SNR")


class ChannelInfo(BaseModel):
    """One channel signaling response observed by ``receiver``."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    sender: str
    receiver: str
    snr_linear: float = Field(..., ge=0)
    timestamp: float

    @model_validator(mode="after")
    def _distinct_endpoints(self) -> "ChannelInfo":
        if self.sender == self.receiver:
            raise ValueError("sender and receiver must differ")
        return self


class VscInputs(BaseModel):
    """Inputs of the VSC equation for one host over one unit-time window.

    ``observed`` never holds entries sent by the host itself; they are dropped
    on construction. An empty ``observed`` is representable and fails later
    with an insufficient-observations error.
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    host: str | None = None
    snr_ab: float = Field(..., ge=0)
    observed: tuple[ChannelInfo, ...] = ()

    @model_validator(mode="before")
    @classmethod
    def _exclude_host(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("host") is not None:
            host = data["host"]
            data = dict(data)
            data["observed"] = tuple(
                info
                for info in data.get("observed", ())
                if (info.sender if isinstance(info, ChannelInfo) else info.get("sender")) != host
            )
        return data
