"""Seeded scene families and evaluation helpers for directional comparisons.

``controlled_scene`` builds a target on a sinusoidal azimuth path plus one
interferer whose angular offset to the target shrinks at a drawn relative
speed to a chosen closest-approach distance (or crosses through zero) and
grows again. Because the relative speed does not depend on the closest
distance, scenes with a smaller closest distance keep the interferer near
the target for longer, as happens with slowly varying random trajectories.
Optional further interferers stay well away from the target. Every draw
comes from the scene seed.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .metrics import EvalRecord, distance_bin, min_interferer_distance, si_sdr, utterance_mae
from .pipeline import Guidance, PipelineMode, frame_trajectory, initial_direction, run
from .scene import (ConstraintError, RenderConfig, RoomSpec, SceneConfig, SceneManifest,
                    SceneOutput, SourceSpec, Trajectory, random_room, trajectory_frames)
from .signals import synth_speech
from .ssf import SsfConfig
from .stft import StftConfig
from .tracker import TrackerConfig

ALL_MODES = (
    PipelineMode(Guidance.STRONG_ORACLE),
    PipelineMode(Guidance.FIXED),
    PipelineMode(Guidance.ADAPTIVE),
    PipelineMode(Guidance.ADAPTIVE, ar_tst=True),
    PipelineMode(Guidance.ADAPTIVE, ar_tst=True, ar_ssf=True),
)


@dataclass(frozen=True)
class ControlledSceneConfig:
    """Angles in degrees, times in seconds."""

    duration: float = 3.0
    rt60_range: tuple[float, float] = (0.2, 0.5)
    render: RenderConfig = RenderConfig(max_time=0.15)
    target_amplitude: tuple[float, float] = (20.0, 60.0)
    target_frequency: tuple[float, float] = (0.1, 0.25)
    elevation_offset: tuple[float, float] = (-10.0, 10.0)
    relative_speed: tuple[float, float] = (8.0, 20.0)     # degrees per second
    closest_time: tuple[float, float] = (0.35, 0.75)
    range_limits: tuple[float, float] = (1.2, 2.8)
    extra_clearance: float = 30.0
    source_rms: float = 0.1
    wall_margin: float = 0.3
    max_retries: int = 200
    sample_rate: int = 16000
    hop: int = 256


def _inside(room: RoomSpec, traj: Trajectory, margin: float) -> bool:
    pos = traj.positions(room.array_position)
    d = np.asarray(room.dimensions)
    return bool(np.all(pos > margin) and np.all(pos < d - margin))


def controlled_scene(seed: int, min_distance_deg: float, n_sources: int = 2,
                     crossing: bool = False,
                     cfg: ControlledSceneConfig = ControlledSceneConfig()) -> SceneManifest:
    """Target plus interferers with a prescribed closest approach.

    With ``crossing`` the first interferer's azimuth offset passes through
    zero at the closest-approach time instead of turning back at
    ``min_distance_deg``.
    """
    if n_sources < 2:
        raise ValueError("a controlled scene needs at least one interferer")
    rng = np.random.default_rng(seed)
    fs, hop = cfg.sample_rate, cfg.hop
    n_samples = int(round(cfg.duration * fs))
    n_frames = trajectory_frames(n_samples, hop)
    t = np.arange(n_frames) * hop / fs
    t_end = t[-1]
    room = random_room(rng, SceneConfig(rt60_range=cfg.rt60_range))
    rad = math.radians
    for _ in range(cfg.max_retries):
        az0 = rng.uniform(-math.pi, math.pi)
        amp = rad(rng.uniform(*cfg.target_amplitude))
        f = rng.uniform(*cfg.target_frequency)
        ph = rng.uniform(0, 2 * math.pi)
        az_t = az0 + amp * (np.sin(2 * math.pi * f * t + ph) - math.sin(ph))
        el_t = rad(rng.uniform(*cfg.elevation_offset)) + rad(2.0) * np.sin(
            2 * math.pi * rng.uniform(0.05, 0.2) * t + rng.uniform(0, 2 * math.pi))
        r_t = rng.uniform(*cfg.range_limits) + 0.2 * np.sin(
            2 * math.pi * rng.uniform(0.05, 0.2) * t + rng.uniform(0, 2 * math.pi))
        target = Trajectory(np.angle(np.exp(1j * az_t)), el_t, np.clip(r_t, 1.0, 3.0), hop, fs)

        side = rng.choice([-1.0, 1.0])
        tc = rng.uniform(*cfg.closest_time) * t_end
        d = rad(min_distance_deg)
        v = rad(rng.uniform(*cfg.relative_speed))
        if crossing:
            g = side * v * (tc - t)
        else:
            g = side * (d + v * np.abs(t - tc))
        el_i = el_t + rad(rng.uniform(-1.0, 1.0))
        r_i = np.clip(rng.uniform(*cfg.range_limits) + 0.2 * np.sin(
            2 * math.pi * rng.uniform(0.05, 0.2) * t + rng.uniform(0, 2 * math.pi)), 1.0, 3.0)
        trajs = [target, Trajectory(np.angle(np.exp(1j * (az_t + g))), el_i, r_i, hop, fs)]
        floor = max(min_distance_deg, 0.0) + cfg.extra_clearance
        for _k in range(n_sources - 2):
            off = rng.uniform(rad(floor + 10.0), rad(170.0)) * rng.choice([-1.0, 1.0])
            az_k = az_t + off + rad(10.0) * np.sin(2 * math.pi * rng.uniform(0.05, 0.2) * t)
            el_k = np.full_like(t, rad(rng.uniform(-10.0, 10.0)))
            r_k = np.full_like(t, rng.uniform(*cfg.range_limits))
            trajs.append(Trajectory(np.angle(np.exp(1j * az_k)), el_k, r_k, hop, fs))
        if not all(_inside(room, tr, cfg.wall_margin) for tr in trajs):
            continue
        if len(trajs) > 2 and min_interferer_distance(trajs[0], trajs[2:]) < floor:
            continue
        u = np.array([tr.unit_vectors()[0] for tr in trajs])
        sep = np.degrees(np.arccos(np.clip(u @ u.T, -1, 1)))[np.triu_indices(len(trajs), 1)]
        if sep.min() < 15.0:
            continue
        break
    else:
        raise ConstraintError(f"controlled scene constraints unsatisfied (seed={seed})")
    signals = [synth_speech(rng, cfg.duration, fs, rms=cfg.source_rms) for _ in trajs]
    specs = [SourceSpec(tr, signal=x) for tr, x in zip(trajs, signals)]
    return SceneManifest(room, specs, int(seed), 0, cfg.render, fs, hop)


# closest-approach ranges (degrees) cycled through by ``trend_scene``; the
# gaps keep scenes away from the reporting bin edges
TREND_DISTANCE_RANGES = ((0.0, 12.0), (17.0, 28.0), (33.0, 57.0), (65.0, 100.0))


def trend_scene(index: int, base_seed: int = 0,
                cfg: ControlledSceneConfig = ControlledSceneConfig()) -> tuple[SceneManifest, bool]:
    """Scene ``index`` of the distance-trend family and whether it is a crossing scene.

    Scenes cycle through :data:`TREND_DISTANCE_RANGES`; every block of four
    alternates between two and three sources, and the closest-range scene
    of every other block of eight has its interferer cross the target.
    """
    seed = base_seed + index
    lo, hi = TREND_DISTANCE_RANGES[index % len(TREND_DISTANCE_RANGES)]
    d = float(np.random.default_rng(1000 + seed).uniform(lo, hi))
    crossing = index % 4 == 0 and (index // 8) % 2 == 0
    return controlled_scene(seed, d, 2 + (index // 4) % 2, crossing=crossing, cfg=cfg), crossing


@dataclass
class SceneEvaluation:
    records: list[EvalRecord]
    results: dict = field(repr=False, default_factory=dict)


def evaluate_output(scene: SceneOutput, scene_id: str, modes=ALL_MODES,
                    stft_cfg: StftConfig = StftConfig(),
                    tracker_cfg: TrackerConfig | None = None,
                    ssf_cfg: SsfConfig = SsfConfig(), keep_results: bool = False,
                    edges=None) -> SceneEvaluation:
    """Run every mode on one rendered scene and score it."""
    from .metrics import DEFAULT_BIN_EDGES
    edges = DEFAULT_BIN_EDGES if edges is None else edges
    T = stft_cfg.n_frames(scene.mixture.shape[0])
    truth = frame_trajectory(scene.target_trajectory, T)
    others = [frame_trajectory(tr, T) for tr in scene.interferer_trajectories]
    dist = min_interferer_distance(truth, others)
    init = initial_direction(scene.target_trajectory)
    records, results = [], {}
    for mode in modes:
        t0 = time.perf_counter()
        res = run(scene.mixture, init, mode, scene.target_trajectory, stft_cfg, tracker_cfg,
                  ssf_cfg)
        runtime = time.perf_counter() - t0
        records.append(EvalRecord(scene_id, mode.label, utterance_mae(res.est_traj, truth),
                                  si_sdr(res.enhanced, scene.anechoic_target), dist,
                                  distance_bin(dist, edges), runtime))
        if keep_results:
            results[mode.label] = res
    return SceneEvaluation(records, results)
