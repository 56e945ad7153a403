"""Spatially selective filter for a front-steered FOA sound field.

A first-order beamformer looks at the front, a Wiener postfilter removes
what leaks through. The postfilter's a-priori SNR follows the
decision-directed rule; in autoregressive mode the previous enhanced frame
anchors the speech-PSD estimate, otherwise the current beamformer output
alone drives it.

Noise PSD is the largest of three estimates: a minimum-statistics floor of
the beamformer output (slowly varying noise), a target-blocking spatial
estimate built from the channels that vanish for a front plane wave, and a
directional estimate that attributes the part of each bin arriving away
from the front (per the bin's intensity direction) to interference.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

_TINY = 1e-30


class Beamformer(enum.Enum):
    MAX_DI = "maxdi"
    CARDIOID_FAMILY = "cardioid"


# first-order pattern (1 - a) + a cos(angle); a = 3/4 maximises directivity
MAX_DI_SHAPE = 0.75


@dataclass(frozen=True)
class SsfConfig:
    beamformer: Beamformer = Beamformer.MAX_DI
    shape: float = MAX_DI_SHAPE
    postfilter_enabled: bool = True
    ar_enabled: bool = False
    dd_smoothing: float = 0.6
    gain_floor: float = 0.1
    noise_window: int = 94          # frames, ~1.5 s at a 16 ms hop
    noise_bias: float = 1.5
    power_smoothing: float = 0.5
    spatial_noise: bool = True
    spatial_smoothing: float = 0.5
    directional_noise: bool = True
    direction_sharpness: float = 8.0

    def __post_init__(self):
        if not 0.0 <= self.shape <= 1.0:
            raise ValueError("shape must lie in [0, 1]")
        if not 0.0 <= self.dd_smoothing < 1.0:
            raise ValueError("dd_smoothing must lie in [0, 1)")
        if not 0.0 < self.gain_floor <= 1.0:
            raise ValueError("gain_floor must lie in (0, 1]")
        if self.noise_window < 1:
            raise ValueError("noise_window must be at least one frame")
        if self.direction_sharpness < 0:
            raise ValueError("direction_sharpness must be non-negative")
        for a in (self.power_smoothing, self.spatial_smoothing):
            if not 0.0 <= a < 1.0:
                raise ValueError("smoothing factors must lie in [0, 1)")

    @property
    def beam_shape(self) -> float:
        return MAX_DI_SHAPE if self.beamformer is Beamformer.MAX_DI else self.shape


def directivity_index(shape: float) -> float:
    """Directivity factor of ``(1 - a) + a cos`` in an isotropic field."""
    a = float(shape)
    return 1.0 / ((1.0 - a) ** 2 + a ** 2 / 3.0)


def front_beamform(steered_frame: np.ndarray, cfg: SsfConfig = SsfConfig()) -> np.ndarray:
    """``(1 - a) W + a X``: unit gain for a front plane wave (ambiX W = X there)."""
    f = np.asarray(steered_frame)
    a = cfg.beam_shape
    return (1.0 - a) * f[..., 0] + a * f[..., 3]


def blocked_power(steered_frame: np.ndarray) -> np.ndarray:
    """Spatial noise estimate from the front-blocking channels.

    ``W - X``, ``Y`` and ``Z`` all vanish for a front plane wave. The 1/8
    scale makes the estimate equal the MaxDI output power in an isotropic
    field (4/3 + 1/3 + 1/3 = 2 times the W power, against 1/4 for the beam).
    """
    f = np.asarray(steered_frame)
    return (np.abs(f[..., 0] - f[..., 3]) ** 2 + np.abs(f[..., 1]) ** 2
            + np.abs(f[..., 2]) ** 2) / 8.0


def front_mask(steered_frame: np.ndarray, sharpness: float) -> np.ndarray:
    """``((1 + cos a) / 2) ** sharpness`` per bin, ``a`` the angle between the
    bin's pseudo-intensity and the front; bins without intensity get 1."""
    f = np.asarray(steered_frame)
    inten = np.real(np.conj(f[..., 0])[..., None] * f[..., [3, 1, 2]])
    norm = np.linalg.norm(inten, axis=-1)
    cos = np.divide(inten[..., 0], norm, out=np.ones_like(norm), where=norm > 0)
    return (0.5 * (1.0 + cos)) ** sharpness


@dataclass
class SsfState:
    prev_enhanced: np.ndarray
    xi: np.ndarray
    noise_psd: np.ndarray
    power: np.ndarray
    spatial: np.ndarray
    history: np.ndarray = field(repr=False)
    frame: int = 0

    @classmethod
    def initial(cls, first_frame: np.ndarray, cfg: SsfConfig = SsfConfig()) -> "SsfState":
        """State before frame 0; the previous enhanced frame starts as the
        beamformed first frame."""
        b = front_beamform(first_frame, cfg)
        p = np.abs(b) ** 2
        hist = np.zeros((cfg.noise_window, p.shape[-1]))
        return cls(b.copy(), np.zeros_like(p), p.copy(), p.copy(),
                   blocked_power(first_frame), hist, 0)


def _update_noise(state: SsfState, beam_power: np.ndarray, steered_frame, cfg: SsfConfig):
    a = cfg.power_smoothing
    power = a * state.power + (1.0 - a) * beam_power
    hist = state.history.copy()
    hist[state.frame % cfg.noise_window] = power
    noise = cfg.noise_bias * hist.min(axis=0)
    spatial = state.spatial
    if cfg.spatial_noise:
        s = cfg.spatial_smoothing
        spatial = s * state.spatial + (1.0 - s) * blocked_power(steered_frame)
        noise = np.maximum(noise, spatial)
    if cfg.directional_noise:
        noise = np.maximum(noise, beam_power * (1.0 - front_mask(steered_frame,
                                                                 cfg.direction_sharpness)))
    return power, hist, spatial, noise


def postfilter(beamformed: np.ndarray, steered_frame: np.ndarray, state: SsfState,
               cfg: SsfConfig = SsfConfig()) -> tuple[np.ndarray, SsfState]:
    """Wiener gains ``xi / (1 + xi)`` floored at ``gain_floor``.

    Decision-directed a-priori SNR: ``xi = alpha * |S_prev|^2 / noise_prev
    + (1 - alpha) * max(gamma - 1, 0)``, the anchor being the previous
    enhanced power over the previous noise estimate. Without AR,
    ``xi = max(gamma - 1, 0)`` from the current frame alone.
    """
    b = np.asarray(beamformed)
    beam_power = np.abs(b) ** 2
    power, hist, spatial, noise = _update_noise(state, beam_power, steered_frame, cfg)
    lam = np.maximum(noise, _TINY)
    gamma = beam_power / lam
    ml = np.maximum(gamma - 1.0, 0.0)
    if cfg.ar_enabled:
        alpha = cfg.dd_smoothing
        prev_lam = np.maximum(state.noise_psd, _TINY)
        xi = alpha * np.abs(state.prev_enhanced) ** 2 / prev_lam + (1.0 - alpha) * ml
    else:
        xi = ml
    gains = np.maximum(cfg.gain_floor, xi / (1.0 + xi))
    new = SsfState(state.prev_enhanced, xi, noise, power, spatial, hist, state.frame + 1)
    return gains, new


def enhance_step(state: SsfState, steered_frame: np.ndarray,
                 cfg: SsfConfig = SsfConfig()) -> tuple[SsfState, np.ndarray]:
    """Enhanced monopole estimate for one steered frame ``(K, 4)``."""
    b = front_beamform(steered_frame, cfg)
    if cfg.postfilter_enabled:
        gains, state = postfilter(b, steered_frame, state, cfg)
        s_hat = gains * b
    else:
        s_hat = b
        state = SsfState(state.prev_enhanced, state.xi, state.noise_psd, state.power,
                         state.spatial, state.history, state.frame + 1)
    state.prev_enhanced = s_hat
    return state, s_hat
