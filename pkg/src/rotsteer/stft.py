"""Causal sqrt-Hann STFT with 50 % overlap.

Frame ``t`` covers samples ``[t*hop, t*hop + window_len)``. The input is
zero-padded at the tail only, so no frame looks ahead of its own window.
Samples in the first hop are attenuated by the window ramp and are not
reconstructed exactly; everything from ``hop`` up to the last fully
overlapped sample is.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StftConfig:
    sample_rate: int = 16000
    window_len: int = 512

    def __post_init__(self):
        if self.window_len <= 0 or self.window_len % 2:
            raise ValueError("window_len must be a positive even integer")

    @classmethod
    def from_durations(cls, sample_rate: int = 16000, window_ms: float = 32.0) -> "StftConfig":
        n = int(round(sample_rate * window_ms / 1000.0))
        return cls(sample_rate, n + (n % 2))

    @property
    def hop(self) -> int:
        return self.window_len // 2

    @property
    def n_bins(self) -> int:
        return self.window_len // 2 + 1

    @property
    def window(self) -> np.ndarray:
        n = np.arange(self.window_len)
        return np.sqrt(0.5 - 0.5 * np.cos(2.0 * np.pi * n / self.window_len))

    def n_frames(self, n_samples: int) -> int:
        if n_samples < self.window_len:
            raise ValueError(f"signal of {n_samples} samples is shorter than one window")
        return 1 + -(-(n_samples - self.window_len) // self.hop)

    def interior(self, n_samples: int) -> slice:
        """Samples that a round trip reconstructs exactly."""
        T = self.n_frames(n_samples)
        return slice(self.hop, min(n_samples, T * self.hop))

    def bin_of(self, freq_hz: float) -> int:
        return int(round(freq_hz * self.window_len / self.sample_rate))


def analyze(x: np.ndarray, cfg: StftConfig) -> np.ndarray:
    """STFT of ``x`` with shape ``(samples,)`` or ``(samples, channels)``.

    Returns complex ``(frames, bins, channels)``; mono input gets one channel.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    T = cfg.n_frames(x.shape[0])
    L, hop = cfg.window_len, cfg.hop
    need = (T - 1) * hop + L
    if need > x.shape[0]:
        x = np.concatenate([x, np.zeros((need - x.shape[0], x.shape[1]))], axis=0)
    idx = np.arange(T)[:, None] * hop + np.arange(L)[None, :]
    frames = x[idx] * cfg.window[None, :, None]
    return np.fft.rfft(frames, axis=1)


def synthesize(spec: np.ndarray, cfg: StftConfig, length: int | None = None) -> np.ndarray:
    """Weighted overlap-add inverse of :func:`analyze`.

    ``spec`` is ``(frames, bins)`` or ``(frames, bins, channels)``. The
    output is ``(samples,)`` for 2-D input, else ``(samples, channels)``.
    """
    spec = np.asarray(spec)
    squeeze = spec.ndim == 2
    if squeeze:
        spec = spec[:, :, None]
    if spec.shape[1] != cfg.n_bins:
        raise ValueError(f"spectrogram has {spec.shape[1]} bins, config expects {cfg.n_bins}")
    T, _, C = spec.shape
    L, hop = cfg.window_len, cfg.hop
    frames = np.fft.irfft(spec, n=L, axis=1) * cfg.window[None, :, None]
    out = np.zeros(((T - 1) * hop + L, C))
    # two interleaved phases: frames of equal parity never overlap
    for phase in (0, 1):
        sel = frames[phase::2]
        n = sel.shape[0]
        if n == 0:
            continue
        start = phase * hop
        block = sel.reshape(n * L, C)
        out[start:start + n * L] += block[: max(0, min(n * L, out.shape[0] - start))]
    if length is not None:
        if length > out.shape[0]:
            out = np.concatenate([out, np.zeros((length - out.shape[0], C))], axis=0)
        out = out[:length]
    return out[:, 0] if squeeze else out
