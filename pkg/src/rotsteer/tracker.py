"""Causal target-speaker tracker on a steered FOA sound field.

The tracker sees each STFT frame after it has been rotated by the previous
steering estimate, so the target sits near the front. It forms a weighted
pseudo-intensity vector, smooths it, converts it to a direction and
reports the deviation from the initial direction of arrival. Optionally the
previous enhanced frame supplies per-bin weights that favour target-dominated
bins (autoregressive tracking).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .rotation import rot_y, rot_z, rotation_angle
from .sh import SphericalDirection, cart_to_sph, wrap_angle
from .stft import StftConfig

_EPS = 1e-12


@dataclass(frozen=True)
class TrackerConfig:
    """Tracker settings.

    ``focus`` sharpens a per-bin weight ``((1 + cos a) / 2) ** focus`` where
    ``a`` is the angle between a bin's own intensity direction and the
    front; it keeps the estimate locked on the steered target when an
    interferer dominates some bins. ``directness`` raises each bin's
    ``|I| / E`` (1 for a single plane wave, smaller when reflections or
    several sources share the bin) to that power. ``ar_mode``
    selects how the previous enhanced frame is compared: ``"magnitude"``
    compares magnitudes (robust to the phase advance of one hop),
    ``"complex"`` compares complex spectra.
    """

    smoothing_constant: float = 0.8
    gate_angle: float = math.radians(2.0)
    freq_band: tuple[int, int] = (10, 128)
    ar_enabled: bool = False
    ar_mask_floor: float = 0.05
    ar_mode: str = "magnitude"
    focus: float = 20.0
    directness: float = 0.0
    deadband: float = 1e-9
    silence_threshold: float = 1e-14

    def __post_init__(self):
        if not 0.0 <= self.smoothing_constant < 1.0:
            raise ValueError("smoothing_constant must lie in [0, 1)")
        if not self.gate_angle > 0:
            raise ValueError("gate_angle must be positive")
        lo, hi = self.freq_band
        if not 0 <= lo < hi:
            raise ValueError("freq_band needs 0 <= lo < hi")
        if not 0.0 <= self.ar_mask_floor <= 1.0:
            raise ValueError("ar_mask_floor must lie in [0, 1]")
        if self.ar_mode not in ("magnitude", "complex"):
            raise ValueError("ar_mode must be 'magnitude' or 'complex'")
        if self.focus < 0 or self.directness < 0:
            raise ValueError("focus and directness exponents must be non-negative")

    @classmethod
    def for_stft(cls, stft: StftConfig, lo_hz: float = 300.0, hi_hz: float = 4000.0,
                 **kw) -> "TrackerConfig":
        """Config whose band covers ``lo_hz..hi_hz`` on the given STFT grid."""
        return cls(freq_band=(stft.bin_of(lo_hz), min(stft.bin_of(hi_hz), stft.n_bins)), **kw)

    def check_bins(self, n_bins: int) -> None:
        if self.freq_band[1] > n_bins:
            raise ValueError(f"freq_band {self.freq_band} exceeds {n_bins} bins")


@dataclass
class TrackerState:
    initial: SphericalDirection
    deviation: tuple[float, float] = (0.0, 0.0)
    intensity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    frame: int = 0

    @property
    def direction(self) -> SphericalDirection:
        return absolute_direction(self.initial, self.deviation)


def absolute_direction(initial: SphericalDirection, deviation) -> SphericalDirection:
    """``(theta_0 + d_theta, phi_0 + d_phi)`` as a direction."""
    return SphericalDirection(initial.azimuth + deviation[0], initial.elevation + deviation[1])


def frame_matrix(direction: SphericalDirection) -> np.ndarray:
    """3x3 rotation carrying the front axis to ``direction``."""
    return rot_z(direction.azimuth) @ rot_y(-direction.elevation)


def bin_intensity(frame: np.ndarray) -> np.ndarray:
    """Per-bin ``Re{conj(W) (X, Y, Z)}`` of an ambiX frame ``(K, 4)`` -> ``(K, 3)``."""
    frame = np.asarray(frame)
    w = np.conj(frame[:, 0])[:, None]
    # ACN order W, Y, Z, X -> Cartesian x, y, z
    return np.real(w * frame[:, [3, 1, 2]])


def pseudo_intensity(frame: np.ndarray, weights=None) -> np.ndarray:
    """Weighted pseudo-intensity vector of one FOA frame ``(K, 4)``."""
    per_bin = bin_intensity(frame)
    if weights is None:
        return per_bin.sum(axis=0)
    return np.asarray(weights, dtype=float) @ per_bin


def ar_weights(prev_enhanced: np.ndarray, noisy_w: np.ndarray, cfg: TrackerConfig) -> np.ndarray:
    """Per-bin weights in ``[floor, 1]`` marking bins where the previous
    enhanced frame explains the current omni channel."""
    s = np.asarray(prev_enhanced)
    y = np.asarray(noisy_w)
    ps = np.abs(s) ** 2
    if cfg.ar_mode == "magnitude":
        resid = (np.abs(y) - np.abs(s)) ** 2
    else:
        resid = np.abs(y - s) ** 2
    w = ps / (ps + resid + _EPS)
    return np.maximum(cfg.ar_mask_floor, w)


def _band_mask(n_bins: int, cfg: TrackerConfig) -> np.ndarray:
    cfg.check_bins(n_bins)
    m = np.zeros(n_bins)
    m[cfg.freq_band[0]:cfg.freq_band[1]] = 1.0
    return m


def directness_weights(frame: np.ndarray, per_bin: np.ndarray, power: float) -> np.ndarray:
    """``(|I_k| / E_k) ** power`` with ``E = (|W|^2 + |X|^2 + |Y|^2 + |Z|^2) / 2``."""
    if power == 0:
        return np.ones(per_bin.shape[0])
    energy = 0.5 * np.sum(np.abs(frame) ** 2, axis=1)
    ratio = np.divide(np.linalg.norm(per_bin, axis=1), energy, out=np.zeros(per_bin.shape[0]),
                      where=energy > 0)
    return np.minimum(ratio, 1.0) ** power


def focus_weights(per_bin: np.ndarray, focus: float, centre=(1.0, 0.0, 0.0)) -> np.ndarray:
    """``((1 + cos a) / 2) ** focus`` with ``a`` measured from ``centre``."""
    norm = np.linalg.norm(per_bin, axis=1)
    cos = np.divide(per_bin @ np.asarray(centre, dtype=float), norm, out=np.zeros_like(norm),
                    where=norm > 0)
    if focus == 0:
        return (norm > 0).astype(float)
    return np.where(norm > 0, (0.5 * (1.0 + cos)) ** focus, 0.0)


def _gate(prev: SphericalDirection, az: float, el: float, gate: float) -> tuple[float, float]:
    """Largest step toward ``(az, el)`` whose steering rotation is within ``gate``."""
    Q0 = frame_matrix(prev)
    d_az = wrap_angle(az - prev.azimuth)
    d_el = el - prev.elevation

    def angle(s):
        Q = rot_z(prev.azimuth + s * d_az) @ rot_y(-(prev.elevation + s * d_el))
        return rotation_angle(Q0.T @ Q)

    if angle(1.0) <= gate:
        return d_az, d_el
    lo, hi = 0.0, 1.0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if angle(mid) <= gate:
            lo = mid
        else:
            hi = mid
    return lo * d_az, lo * d_el


def track_step(state: TrackerState, steered_frame: np.ndarray, prev_enhanced=None,
               cfg: TrackerConfig = TrackerConfig()) -> tuple[TrackerState, tuple[float, float]]:
    """Advance the tracker by one frame.

    ``steered_frame`` ``(K, 4)`` must be the observation rotated by the
    previous steering estimate (the one ``state`` describes). Returns the
    new state and the deviation ``(d_theta, d_phi)`` from the initial
    direction.
    """
    frame = np.asarray(steered_frame)
    per_bin = bin_intensity(frame)
    base = _band_mask(frame.shape[0], cfg) * directness_weights(frame, per_bin, cfg.directness)
    if cfg.ar_enabled:
        if prev_enhanced is None:
            raise ValueError("autoregressive tracking needs the previous enhanced frame")
        base = base * ar_weights(prev_enhanced, frame[:, 0], cfg)
    w = base * focus_weights(per_bin, cfg.focus)
    energy = float(w @ (np.abs(frame[:, 0]) ** 2))
    nxt = replace(state, frame=state.frame + 1)
    if energy <= cfg.silence_threshold:
        # target silent (or nothing in band): hold the estimate and memory
        return nxt, state.deviation
    prev_dir = state.direction
    obs = frame_matrix(prev_dir) @ (w @ per_bin)
    lam = cfg.smoothing_constant
    smoothed = lam * state.intensity + (1.0 - lam) * obs
    nxt.intensity = smoothed
    if np.linalg.norm(smoothed) <= 0:
        return nxt, state.deviation
    az, el = cart_to_sph(smoothed)
    d_az, d_el = _gate(prev_dir, float(az), float(el), cfg.gate_angle)
    if math.hypot(d_az, d_el) <= cfg.deadband:
        return nxt, state.deviation
    dev_el = state.deviation[1] + d_el
    # keep the absolute elevation inside the valid range
    lim = math.pi / 2
    dev_el = min(lim - state.initial.elevation, max(-lim - state.initial.elevation, dev_el))
    dev_az = wrap_angle(state.deviation[0] + d_az)
    nxt.deviation = (float(dev_az), float(dev_el))
    return nxt, nxt.deviation


class Tracker:
    """Stateful wrapper used by the pipeline; subclass to plug in another estimator."""

    def __init__(self, initial: SphericalDirection, cfg: TrackerConfig = TrackerConfig()):
        self.cfg = cfg
        self.state = TrackerState(initial)

    def step(self, steered_frame, prev_enhanced=None) -> tuple[float, float]:
        self.state, dev = track_step(self.state, steered_frame, prev_enhanced, self.cfg)
        return dev


class ZeroTracker(Tracker):
    """Always reports zero deviation (reduces adaptive steering to fixed)."""

    def step(self, steered_frame, prev_enhanced=None) -> tuple[float, float]:
        self.state.frame += 1
        return (0.0, 0.0)
