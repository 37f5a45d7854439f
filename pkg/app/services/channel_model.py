"""Per-link SNR from geometry, channel capacity and the vehicular secrecy capacity.

VSC = log2(1 + SNR_AB) - log2(1 + mean(SNR_Ai)), where the mean runs over
every channel signaling the host received in one unit-time window, the
target included and the host excluded. All SNRs are linear power ratios.
"""

import math
from collections.abc import Iterable, Sequence

import numpy as np

from app.exceptions import InsufficientObservationsError, InvalidInputError
from app.models.channel import ChannelInfo, ChannelParams, Position, VscInputs
from app.services.rng import Xoshiro256StarStar

_LN2 = math.log(2)


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise InvalidInputError(f"{name} must be finite, got {value!r}")


def distance(a: Position, b: Position) -> float:
    """Euclidean distance in meters."""
    return math.hypot(a.x - b.x, a.y - b.y)


def in_range(distance_m: float, params: ChannelParams) -> bool:
    """Whether a link of this length is inside the optional range cutoff."""
    return params.range_m is None or distance_m <= params.range_m


def path_loss_db(distance_m: float, params: ChannelParams) -> float:
    """Log-distance path loss, distances clamped below to ``min_distance_m``."""
    _require_finite(distance_m=distance_m)
    if distance_m < 0:
        raise InvalidInputError("distance must be non-negative")
    d = max(distance_m, params.min_distance_m)
    return params.ref_loss_db + 10 * params.path_loss_exponent * math.log10(d / params.ref_distance_m)


def snr_linear(tx: Position, rx: Position, params: ChannelParams) -> float:
    """Linear SNR at ``rx`` for a transmission from ``tx``."""
    loss = path_loss_db(distance(tx, rx), params)
    return 10 ** ((params.tx_power_dbm - loss - params.noise_floor_dbm) / 10)


def snr_matrix(positions: Sequence[Position], params: ChannelParams) -> np.ndarray:
    """Pairwise linear SNR, entry [i, j] is the SNR at j of i's transmission.

    The diagonal and links beyond ``range_m`` are 0.
    """
    coords = np.array([[p.x, p.y] for p in positions], dtype=float).reshape(-1, 2)
    deltas = coords[:, None, :] - coords[None, :, :]
    dist = np.hypot(deltas[..., 0], deltas[..., 1])
    clamped = np.maximum(dist, params.min_distance_m)
    loss = params.ref_loss_db + 10 * params.path_loss_exponent * np.log10(
        clamped / params.ref_distance_m
    )
    snr = 10 ** ((params.tx_power_dbm - loss - params.noise_floor_dbm) / 10)
    if params.range_m is not None:
        snr = np.where(dist <= params.range_m, snr, 0.0)
    np.fill_diagonal(snr, 0.0)
    return snr


def rayleigh_fading(snr: float, rng: Xoshiro256StarStar) -> float:
    """Scale a linear SNR by an exponential(1) power gain."""
    return snr * -math.log1p(-rng.random())


def capacity(snr: float) -> float:
    """Shannon capacity log2(1 + snr) in bits/s/Hz."""
    _require_finite(snr_linear=snr)
    if snr < 0:
        raise InvalidInputError("SNR must be non-negative")
    # strictly increasing down to subnormal SNRs
    return math.log1p(snr) / _LN2


def average_snr(observed: Iterable[ChannelInfo]) -> tuple[float, int]:
    """Mean linear SNR of the observations and their count M.

    Raises:
        InsufficientObservationsError: no observations
    """
    values = [info.snr_linear for info in observed]
    if not values:
        raise InsufficientObservationsError("no channel information received in the window")
    # fsum is correctly rounded, so the mean does not depend on arrival order
    return math.fsum(values) / len(values), len(values)


def vsc(inputs: VscInputs) -> float:
    """Vehicular secrecy capacity; negative values are valid and simply fail thresholds."""
    mean, _ = average_snr(inputs.observed)
    return capacity(inputs.snr_ab) - capacity(mean)
