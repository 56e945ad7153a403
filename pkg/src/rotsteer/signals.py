"""Speech-like test signals.

Voiced syllables with a drifting pitch, formant envelopes, syllabic
on/off modulation and short pauses. Different speakers get different pitch
ranges and formant tables, so their harmonic patterns interleave in the
STFT the way real voices do.
"""
from __future__ import annotations

import numpy as np

_VOWELS = np.array([
    (730.0, 1090.0, 2440.0),
    (270.0, 2290.0, 3010.0),
    (530.0, 1840.0, 2480.0),
    (570.0, 840.0, 2410.0),
    (300.0, 870.0, 2240.0),
    (660.0, 1720.0, 2410.0),
    (440.0, 1020.0, 2240.0),
])


def _formant_gain(freqs: np.ndarray, formants: np.ndarray, scale: float) -> np.ndarray:
    g = np.zeros_like(freqs)
    for i, f in enumerate(formants * scale):
        bw = 60.0 + 0.06 * f
        g += (0.9 ** i) / (1.0 + ((freqs - f) / bw) ** 2)
    return g * (1.0 + freqs / 500.0) ** -1.0


def synth_speech(rng: np.random.Generator | int, duration: float, sample_rate: int = 16000,
                 f0: float | None = None, rms: float = 0.1,
                 pause_prob: float = 0.2) -> np.ndarray:
    """Generate ``duration`` seconds of a speech-like mono signal."""
    rng = np.random.default_rng(rng)
    n = int(round(duration * sample_rate))
    if f0 is None:
        f0 = float(rng.uniform(90.0, 240.0))
    formant_scale = float(rng.uniform(0.85, 1.2))
    f_inst = np.empty(n)
    env = np.zeros(n)
    formant_idx = np.zeros(n, dtype=int)
    pos = 0
    while pos < n:
        if rng.random() < pause_prob:
            length = int(rng.uniform(0.05, 0.2) * sample_rate)
            f_inst[pos:pos + length] = f0
            pos += length
            continue
        length = int(rng.uniform(0.12, 0.3) * sample_rate)
        seg = slice(pos, min(n, pos + length))
        m = seg.stop - seg.start
        t = np.arange(m) / sample_rate
        glide = rng.uniform(-0.15, 0.15)
        f_inst[seg] = f0 * (1.0 + glide * t / max(t[-1], 1e-3) + 0.03 * np.sin(2 * np.pi * 5.0 * t))
        ramp = np.maximum(np.sin(np.pi * np.arange(m) / max(m - 1, 1)), 0.0) ** 0.7
        env[seg] = ramp * rng.uniform(0.5, 1.0)
        formant_idx[seg] = rng.integers(len(_VOWELS))
        pos += length
    phase = 2.0 * np.pi * np.cumsum(f_inst) / sample_rate
    out = np.zeros(n)
    n_harm = int(min(4000.0, 0.45 * sample_rate) // (0.8 * f0))
    for idx in np.unique(formant_idx):
        mask = formant_idx == idx
        for h in range(1, n_harm + 1):
            fh = h * f_inst[mask]
            amp = _formant_gain(fh, _VOWELS[idx], formant_scale)
            amp[fh > 0.45 * sample_rate] = 0.0
            out[mask] += amp * np.sin(h * phase[mask])
    out *= env
    out += 0.01 * env * rng.standard_normal(n)
    return out * (rms / max(np.sqrt(np.mean(out ** 2)), 1e-12))
