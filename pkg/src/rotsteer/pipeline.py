"""The causal steer -> track -> re-steer -> enhance -> feed-back loop.

Per frame ``t`` the observation is rotated by a steering matrix whose
source depends on the guidance mode:

* ``FIXED`` - the initial direction throughout;
* ``STRONG_ORACLE`` - the ground-truth direction of frame ``t``;
* ``ADAPTIVE`` - the previous estimate ``D_{t-1}``; the tracker then
  updates the deviation, and the already-steered frame is corrected by
  the increment ``D_{t-1}^T D_t`` before enhancement.

Frame ``t`` of the STFT is centred on sample ``(t + 1) * hop``, so it is
paired with sample ``t + 1`` of a hop-grid trajectory
(:func:`frame_trajectory`).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .rotation import RealRotation, steering_matrix
from .scene import Trajectory
from .sh import SphericalDirection
from .ssf import SsfConfig, SsfState, enhance_step
from .stft import StftConfig, analyze, synthesize
from .tracker import Tracker, TrackerConfig, absolute_direction


class Guidance(enum.Enum):
    STRONG_ORACLE = "strong"
    FIXED = "fixed"
    ADAPTIVE = "adaptive"


@dataclass(frozen=True)
class PipelineMode:
    guidance: Guidance
    ar_tst: bool = False
    ar_ssf: bool = False

    def __post_init__(self):
        if self.ar_tst and self.guidance is not Guidance.ADAPTIVE:
            raise ValueError(f"{self.guidance.value} guidance has no tracker; ar_tst needs adaptive")

    @property
    def label(self) -> str:
        parts = [self.guidance.value]
        if self.ar_tst:
            parts.append("ar-tst")
        if self.ar_ssf:
            parts.append("ar-ssf")
        return "+".join(parts)

    @classmethod
    def from_label(cls, label: str) -> "PipelineMode":
        parts = label.split("+")
        extra = set(parts[1:])
        unknown = extra - {"ar-tst", "ar-ssf"}
        if unknown:
            raise ValueError(f"unknown mode flags {sorted(unknown)}")
        return cls(Guidance(parts[0]), "ar-tst" in extra, "ar-ssf" in extra)


@dataclass(frozen=True)
class FrameLog:
    """Where the rotations applied in one frame came from.

    ``tracker_source`` is the frame whose information produced the rotation
    the tracker observed through (``-1``: the initial direction, ``None``:
    no tracker ran); ``ssf_source`` likewise for the enhancer input.
    """

    frame: int
    direction: SphericalDirection
    tracker_source: int | None
    ssf_source: int


@dataclass
class RunResult:
    enhanced: np.ndarray
    enhanced_spec: np.ndarray
    est_traj: Trajectory
    log: list[FrameLog] = field(repr=False)
    mode: PipelineMode | None = None


def frame_trajectory(traj: Trajectory, n_frames: int) -> Trajectory:
    """Trajectory samples aligned to STFT frame centres (sample ``t + 1``)."""
    if len(traj) < n_frames + 1:
        raise ValueError(f"trajectory has {len(traj)} samples; {n_frames + 1} needed")
    sl = slice(1, n_frames + 1)
    return Trajectory(traj.azimuth[sl], traj.elevation[sl], traj.range[sl], traj.hop,
                      traj.sample_rate)


def initial_direction(traj: Trajectory) -> SphericalDirection:
    """The weak-guidance direction: the true DoA of frame 0."""
    return traj.direction(1)


def steering_trace(log: list[FrameLog], hop: int = 256, sample_rate: int = 16000) -> Trajectory:
    """Absolute steered direction per frame."""
    az = np.array([f.direction.azimuth for f in log])
    el = np.array([f.direction.elevation for f in log])
    return Trajectory(az, el, np.full(len(log), np.nan), hop, sample_rate)


class _SteeringCache:
    """Steering matrices keyed by direction; rebuilding identical inputs is
    deterministic but costs a Wigner evaluation."""

    def __init__(self):
        self._key = None
        self._val = None

    def __call__(self, direction: SphericalDirection) -> RealRotation:
        key = (direction.azimuth, direction.elevation)
        if key != self._key:
            self._key, self._val = key, steering_matrix(direction, 1)
        return self._val


def run_spec(spec: np.ndarray, init_dir: SphericalDirection, mode: PipelineMode,
             oracle: Trajectory | None = None, tracker_cfg: TrackerConfig | None = None,
             ssf_cfg: SsfConfig = SsfConfig(), tracker: Tracker | None = None,
             stft_cfg: StftConfig = StftConfig()):
    """Run the loop on an FOA spectrogram ``(T, K, 4)``.

    ``oracle`` is frame-aligned (one sample per frame). Returns the
    enhanced spectrogram ``(T, K)`` and the frame log.
    """
    spec = np.asarray(spec)
    if spec.ndim != 3 or spec.shape[2] != 4:
        raise ValueError("expected an FOA spectrogram of shape (frames, bins, 4)")
    T, K, _ = spec.shape
    if mode.guidance is Guidance.STRONG_ORACLE:
        if oracle is None:
            raise ValueError("strong-oracle guidance needs the oracle trajectory")
        if len(oracle) < T:
            raise ValueError(f"oracle trajectory has {len(oracle)} frames; {T} needed")
    ssf_cfg = replace(ssf_cfg, ar_enabled=mode.ar_ssf)
    if mode.guidance is Guidance.ADAPTIVE and tracker is None:
        if tracker_cfg is None:
            tracker_cfg = TrackerConfig.for_stft(stft_cfg)
        tracker = Tracker(init_dir, replace(tracker_cfg, ar_enabled=mode.ar_tst))
    steer = _SteeringCache()
    D_prev = steer(init_dir)
    dev_prev = (0.0, 0.0)
    d_source = -1       # frame whose information built D_prev (-1: initial direction)
    out = np.zeros((T, K), dtype=complex)
    log: list[FrameLog] = []
    ssf_state = None
    for t in range(T):
        Y = spec[t]
        tracker_source: int | None = None
        if mode.guidance is Guidance.FIXED:
            direction, D = init_dir, D_prev
            steered = Y @ D.matrix
            ssf_source = -1
        elif mode.guidance is Guidance.STRONG_ORACLE:
            direction = oracle.direction(t)
            D = steer(direction)
            steered = Y @ D.matrix
            ssf_source = t
        else:
            observed = Y @ D_prev.matrix
            tracker_source = d_source
            if ssf_state is None:
                ssf_state = SsfState.initial(observed, ssf_cfg)
            dev = tracker.step(observed, ssf_state.prev_enhanced)
            direction = absolute_direction(init_dir, dev)
            if dev == dev_prev:
                D, steered = D_prev, observed
            else:
                D = steer(direction)
                steered = observed @ (D_prev.transpose() @ D).matrix
                d_source = t
            ssf_source = d_source
            D_prev, dev_prev = D, dev
        if ssf_state is None:
            ssf_state = SsfState.initial(steered, ssf_cfg)
        ssf_state, s_hat = enhance_step(ssf_state, steered, ssf_cfg)
        out[t] = s_hat
        log.append(FrameLog(t, direction, tracker_source, ssf_source))
    return out, log


def run(mixture: np.ndarray, init_dir: SphericalDirection, mode: PipelineMode,
        oracle_traj: Trajectory | None = None, stft_cfg: StftConfig = StftConfig(),
        tracker_cfg: TrackerConfig | None = None, ssf_cfg: SsfConfig = SsfConfig(),
        tracker: Tracker | None = None) -> RunResult:
    """Enhance the target of an FOA mixture ``(samples, 4)``.

    ``oracle_traj`` is a hop-grid trajectory (as produced by the scene
    simulator); it is aligned to frames internally.
    """
    mixture = np.asarray(mixture, dtype=float)
    if mixture.ndim != 2 or mixture.shape[1] != 4:
        raise ValueError("mixture must have shape (samples, 4)")
    if not isinstance(init_dir, SphericalDirection):
        raise TypeError("init_dir must be a SphericalDirection")
    spec = analyze(mixture, stft_cfg)
    T = spec.shape[0]
    oracle = None
    if oracle_traj is not None:
        oracle = frame_trajectory(oracle_traj, T)
    elif mode.guidance is Guidance.STRONG_ORACLE:
        raise ValueError("strong-oracle guidance needs the oracle trajectory")
    enhanced_spec, log = run_spec(spec, init_dir, mode, oracle, tracker_cfg, ssf_cfg, tracker,
                                  stft_cfg)
    enhanced = synthesize(enhanced_spec, stft_cfg, length=mixture.shape[0])
    est = steering_trace(log, stft_cfg.hop, stft_cfg.sample_rate)
    return RunResult(enhanced, enhanced_spec, est, log, mode)
