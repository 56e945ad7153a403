"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``."""
from __future__ import annotations

import numpy as np

_CHUNK = 16384


def _taps(x: np.ndarray, half_width: float) -> np.ndarray:
    with np.errstate(invalid="ignore", divide="ignore"):
        h = np.sinc(x) * 0.5 * (1.0 + np.cos(np.pi * x / half_width))
    h[np.abs(x) >= half_width] = 0.0
    return h


def accumulate_fractional_delays(out: np.ndarray, delays: np.ndarray, gains: np.ndarray,
                                 half_width: int) -> None:
    """Add Hann-windowed sinc impulses ``gains[i]`` at ``delays[i]`` into ``out``."""
    delays = np.asarray(delays, dtype=float)
    gains = np.asarray(gains, dtype=float)
    n_out, n_ch = out.shape
    if gains.shape != (delays.shape[0], n_ch):
        raise ValueError("gains must have shape (len(delays), out.shape[1])")
    offsets = np.arange(-half_width + 1, half_width + 1)
    for start in range(0, delays.shape[0], _CHUNK):
        tau = delays[start:start + _CHUNK]
        g = gains[start:start + _CHUNK]
        idx = np.floor(tau).astype(np.int64)[:, None] + offsets[None, :]
        h = _taps(idx - tau[:, None], float(half_width))
        keep = (idx >= 0) & (idx < n_out)
        flat = idx[keep]
        for c in range(n_ch):
            out[:, c] += np.bincount(flat, weights=(h * g[:, c:c + 1])[keep], minlength=n_out)
