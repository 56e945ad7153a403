"""Synthetic moving-speaker scenes in first-order Ambisonics.

Shoebox image-method acoustics, far-field plane-wave encoding of every
image into ambiX FOA, hop-wise moving-source rendering with linear
cross-fades, and mixture assembly with ground-truth references.
"""
from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.fft import irfft, next_fast_len, rfft

from . import _accel
from .io import (dump_json, load_json, read_trajectory_csv, read_wav,
                 write_trajectory_csv)
from .sh import SphericalDirection, cart_to_sph, sh_eval, sph_to_cart

SCHEMA_VERSION = 1
RT60_BOUNDS = (0.2, 0.5)
RANGE_BOUNDS = (1.0, 3.0)


class ConstraintError(RuntimeError):
    """Random generation could not satisfy its constraints."""


# --------------------------------------------------------------------- room

@dataclass(frozen=True)
class RoomSpec:
    dimensions: tuple[float, float, float]
    rt60: float
    array_position: tuple[float, float, float]
    speed_of_sound: float = 343.0

    def __post_init__(self):
        dims = tuple(float(d) for d in self.dimensions)
        arr = tuple(float(a) for a in self.array_position)
        object.__setattr__(self, "dimensions", dims)
        object.__setattr__(self, "array_position", arr)
        if len(dims) != 3 or min(dims) <= 0:
            raise ValueError("room dimensions must be three positive lengths")
        if self.rt60 < 0:
            raise ValueError("rt60 must be non-negative")
        if not self.contains(arr):
            raise ValueError(f"array position {arr} is not strictly inside the room")

    def contains(self, p, margin: float = 0.0) -> bool:
        p = np.asarray(p, dtype=float)
        d = np.asarray(self.dimensions)
        return bool(np.all(p > margin) and np.all(p < d - margin))

    def check_dataset_bounds(self, bounds=RT60_BOUNDS) -> None:
        lo, hi = bounds
        if not lo <= self.rt60 <= hi:
            raise ValueError(f"rt60 {self.rt60} s outside the dataset range [{lo}, {hi}] s")

    @property
    def volume(self) -> float:
        x, y, z = self.dimensions
        return x * y * z

    @property
    def surface(self) -> float:
        x, y, z = self.dimensions
        return 2.0 * (x * y + x * z + y * z)

    def eyring_reflection_coefficient(self) -> float:
        """Uniform pressure reflection coefficient from Eyring's formula."""
        if self.rt60 == 0:
            return 0.0
        k = 24.0 * math.log(10.0) * self.volume / (self.speed_of_sound * self.surface * self.rt60)
        return math.exp(-0.5 * k)

    def reflection_coefficient(self) -> float:
        """Reflection coefficient whose rendered T20 matches ``rt60``.

        Image-method decay in a shoebox is not exponential at the Eyring
        rate (flat rooms keep long tangential chains alive), so Eyring is
        only the starting point of a short calibration; see
        :func:`calibrate_reflection`.
        """
        if self.rt60 == 0:
            return 0.0
        return calibrate_reflection(self.dimensions, float(self.rt60), float(self.speed_of_sound))

    def to_dict(self) -> dict:
        return {"dimensions": list(self.dimensions), "rt60": self.rt60,
                "array_position": list(self.array_position),
                "speed_of_sound": self.speed_of_sound}

    @classmethod
    def from_dict(cls, d: dict) -> "RoomSpec":
        return cls(tuple(d["dimensions"]), float(d["rt60"]), tuple(d["array_position"]),
                   float(d.get("speed_of_sound", 343.0)))


def schroeder_t20(h: np.ndarray, sample_rate: int) -> float:
    """Reverberation time from a -5..-25 dB line fit of the Schroeder curve."""
    e = np.asarray(h, dtype=float) ** 2
    edc = np.cumsum(e[::-1])[::-1]
    db = 10.0 * np.log10(np.maximum(edc / edc[0], 1e-300))
    sel = (db <= -5.0) & (db >= -25.0)
    if sel.sum() < 2:
        raise ValueError("impulse response too short for a T20 fit")
    t = np.arange(e.shape[0]) / sample_rate
    slope = np.polyfit(t[sel], db[sel], 1)[0]
    return -60.0 / slope


_CAL_FS = 8000
_CAL_HALF_WIDTH = 8


@lru_cache(maxsize=256)
def calibrate_reflection(dimensions: tuple, rt60: float, speed_of_sound: float = 343.0,
                         tol: float = 0.02, max_iter: int = 8) -> float:
    """Fit the wall reflection coefficient so a reference RIR decays in ``rt60``.

    The reference pairs an array near the room centre with a source
    offset by ~1.5 m. Each pass renders the omni RIR at a low sample rate,
    measures T20 and rescales ``log(beta)`` by ``T20 / rt60`` (the decay
    rate is proportional to ``-log(beta)``). A handful of passes land
    within ``tol``.
    """
    d = np.asarray(dimensions, dtype=float)
    room = RoomSpec(tuple(d), rt60, tuple(0.5 * d + [0.1, -0.1, 0.0]), speed_of_sound)
    src = np.asarray(room.array_position) + np.minimum([1.2, 0.9, 0.1], 0.3 * d)
    beta = room.eyring_reflection_coefficient()
    cap = 1.5 * rt60
    reach = cap * speed_of_sound
    lattice = _ImageLattice(room, reach, None, beta=beta)
    for _ in range(max_iter):
        lattice.beta = beta
        foa = encode_foa(lattice.images(src, room.array_position, reach),
                         room.array_position, speed_of_sound)
        out = np.zeros((_rir_length(cap, _CAL_FS, _CAL_HALF_WIDTH), 1))
        _accel.accumulate_fractional_delays(out, np.ascontiguousarray(foa.delay * _CAL_FS),
                                            np.ascontiguousarray(foa.gain[:, None]),
                                            _CAL_HALF_WIDTH)
        t20 = schroeder_t20(out[:, 0], _CAL_FS)
        if abs(t20 / rt60 - 1.0) < tol:
            break
        beta = math.exp(math.log(beta) * t20 / rt60)
    return float(beta)


@dataclass(frozen=True)
class RenderConfig:
    """RIR truncation and interpolation settings.

    ``max_time`` caps the image delays (seconds); when both caps are unset
    the room's rt60 is used.
    """

    max_order: int | None = None
    max_time: float | None = None
    fd_half_width: int = 16

    def time_cap(self, room: RoomSpec, max_distance: float) -> float:
        if self.max_time is not None:
            return float(self.max_time)
        if self.max_order is None:
            return max(room.rt60, max_distance / room.speed_of_sound)
        diag = float(np.linalg.norm(room.dimensions))
        return (max_distance + 2.0 * self.max_order * diag) / room.speed_of_sound


# -------------------------------------------------------------- trajectory

@dataclass
class Trajectory:
    """Per-hop source direction and range relative to the array."""

    azimuth: np.ndarray
    elevation: np.ndarray
    range: np.ndarray
    hop: int = 256
    sample_rate: int = 16000

    def __post_init__(self):
        self.azimuth = np.asarray(self.azimuth, dtype=float)
        self.elevation = np.asarray(self.elevation, dtype=float)
        self.range = np.asarray(self.range, dtype=float)
        if not (self.azimuth.shape == self.elevation.shape == self.range.shape):
            raise ValueError("trajectory columns must have equal length")
        if np.any(np.abs(self.elevation) > np.pi / 2):
            raise ValueError("trajectory elevation outside [-pi/2, pi/2]")

    def __len__(self) -> int:
        return self.azimuth.shape[0]

    @classmethod
    def constant(cls, direction: SphericalDirection, n: int, range_m: float = float("nan"),
                 hop: int = 256, sample_rate: int = 16000) -> "Trajectory":
        return cls(np.full(n, direction.azimuth), np.full(n, direction.elevation),
                   np.full(n, range_m), hop, sample_rate)

    def direction(self, i: int) -> SphericalDirection:
        return SphericalDirection(float(self.azimuth[i]), float(self.elevation[i]))

    def unit_vectors(self) -> np.ndarray:
        return sph_to_cart(self.azimuth, self.elevation)

    def positions(self, origin) -> np.ndarray:
        return np.asarray(origin, dtype=float) + self.range[:, None] * self.unit_vectors()

    def head(self, n: int) -> "Trajectory":
        if n > len(self):
            raise ValueError(f"trajectory has {len(self)} samples, {n} requested")
        return Trajectory(self.azimuth[:n], self.elevation[:n], self.range[:n],
                          self.hop, self.sample_rate)

    def to_csv(self, path) -> None:
        write_trajectory_csv(path, self.azimuth, self.elevation, self.range)

    @classmethod
    def from_csv(cls, path, hop: int = 256, sample_rate: int = 16000) -> "Trajectory":
        az, el, r = read_trajectory_csv(path)
        return cls(az, el, r, hop, sample_rate)


def trajectory_frames(n_samples: int, hop: int) -> int:
    """Number of hop-grid samples needed to render ``n_samples`` of audio."""
    return (n_samples - 1) // hop + 2


@dataclass(frozen=True)
class TrajectoryBounds:
    """Sampling ranges for ``offset + A * sin(2 pi f t + phase)`` per coordinate.

    Angles in radians. The defaults are choices of this package, not values
    taken from a published parametrisation.
    """

    azimuth_amplitude: tuple[float, float] = (0.0, math.radians(60.0))
    elevation_offset: tuple[float, float] = (math.radians(-10.0), math.radians(10.0))
    elevation_amplitude: tuple[float, float] = (0.0, math.radians(5.0))
    range_limits: tuple[float, float] = RANGE_BOUNDS
    range_amplitude: tuple[float, float] = (0.0, 0.8)
    frequency: tuple[float, float] = (0.05, 0.25)
    max_retries: int = 500


def gen_trajectory(seed, n_frames: int, bounds: TrajectoryBounds = TrajectoryBounds(),
                   hop: int = 256, sample_rate: int = 16000,
                   start_azimuth: float | None = None,
                   room: RoomSpec | None = None, wall_margin: float = 0.3) -> Trajectory:
    """Draw a randomised sinusoidal trajectory on the hop grid.

    Rejection-resamples until the range box (and, when ``room`` is given,
    the room interior with ``wall_margin``) holds at every sample.
    """
    if n_frames <= 0:
        raise ValueError("trajectory needs a positive duration")
    rng = np.random.default_rng(seed)
    t = np.arange(n_frames) * hop / sample_rate
    lo_r, hi_r = bounds.range_limits

    def sinusoid(amp_range, offset):
        a = rng.uniform(*amp_range)
        f = rng.uniform(*bounds.frequency)
        ph = rng.uniform(0.0, 2.0 * np.pi)
        return a, offset, a * np.sin(2.0 * np.pi * f * t + ph), math.sin(ph)

    for _ in range(bounds.max_retries):
        a_az, _, s_az, sin0 = sinusoid(bounds.azimuth_amplitude, 0.0)
        if start_azimuth is None:
            az0 = rng.uniform(-np.pi, np.pi)
        else:
            az0 = start_azimuth - a_az * sin0
        _, el0, s_el, _ = sinusoid(bounds.elevation_amplitude, rng.uniform(*bounds.elevation_offset))
        _, r0, s_r, _ = sinusoid(bounds.range_amplitude, rng.uniform(lo_r, hi_r))
        az = np.angle(np.exp(1j * (az0 + s_az)))
        el = el0 + s_el
        r = r0 + s_r
        if r.min() < lo_r or r.max() > hi_r or np.abs(el).max() > np.pi / 2:
            continue
        traj = Trajectory(az, el, r, hop, sample_rate)
        if room is not None:
            pos = traj.positions(room.array_position)
            d = np.asarray(room.dimensions)
            if np.any(pos <= wall_margin) or np.any(pos >= d - wall_margin):
                continue
        return traj
    raise ConstraintError(f"no trajectory satisfied the constraints after "
                          f"{bounds.max_retries} draws (seed={seed!r})")


# ----------------------------------------------------------- image method

@dataclass
class ImageSet:
    positions: np.ndarray
    amplitudes: np.ndarray
    orders: np.ndarray

    def __len__(self) -> int:
        return self.amplitudes.shape[0]


class _ImageLattice:
    """Image indices for one room, reused across source positions."""

    def __init__(self, room: RoomSpec, reach: float, max_order: int | None,
                 beta: float | None = None):
        d = np.asarray(room.dimensions)
        if max_order is not None:
            k = np.full(3, max_order + 1)
        else:
            k = np.ceil(reach / (2.0 * d)).astype(int) + 1
        axes = [np.arange(-ki, ki + 1) for ki in k]
        n = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        p = np.stack(np.meshgrid([0, 1], [0, 1], [0, 1], indexing="ij"), axis=-1).reshape(-1, 3)
        n = np.repeat(n, len(p), axis=0)
        p = np.tile(p, (len(n) // len(p), 1))
        orders = (np.abs(n - p) + np.abs(n)).sum(axis=1)
        keep = np.ones(len(n), dtype=bool) if max_order is None else orders <= max_order
        self.sign = (1 - 2 * p[keep]).astype(float)
        self.shift = 2.0 * n[keep] * d
        self.orders = orders[keep]
        self.beta = room.reflection_coefficient() if beta is None else beta
        order_sorted = np.lexsort((self.shift[:, 2], self.shift[:, 1], self.shift[:, 0],
                                   self.sign[:, 2], self.sign[:, 1], self.sign[:, 0], self.orders))
        self.sign, self.shift, self.orders = (self.sign[order_sorted], self.shift[order_sorted],
                                              self.orders[order_sorted])

    def images(self, src, array_pos, reach: float) -> ImageSet:
        pos = self.sign * np.asarray(src, dtype=float) + self.shift
        dist = np.linalg.norm(pos - np.asarray(array_pos, dtype=float), axis=1)
        # slack so an image exactly at the cap (e.g. the direct path when the
        # cap is the farthest source distance) survives rounding
        keep = dist <= reach * (1.0 + 1e-9)
        with np.errstate(divide="ignore"):
            refl = np.power(self.beta, self.orders[keep].astype(float))
        return ImageSet(pos[keep], refl / dist[keep], self.orders[keep])


def _check_inside(room: RoomSpec, src) -> None:
    if not room.contains(src):
        raise ValueError(f"source position {tuple(np.round(src, 4))} is not strictly inside the room")


def image_sources(room: RoomSpec, src_pos, array_pos=None, max_order: int | None = None,
                  max_time: float | None = None) -> ImageSet:
    """Shoebox image sources with amplitudes ``beta**order / distance``.

    ``max_order`` limits the reflection count; ``max_time`` limits the
    propagation delay. With neither, images up to ``rt60`` are kept.
    """
    array_pos = room.array_position if array_pos is None else array_pos
    _check_inside(room, src_pos)
    if not room.contains(array_pos):
        raise ValueError("array position is not strictly inside the room")
    direct = float(np.linalg.norm(np.subtract(src_pos, array_pos)))
    cap = RenderConfig(max_order, max_time).time_cap(room, direct)
    reach = cap * room.speed_of_sound
    lattice = _ImageLattice(room, reach, max_order)
    return lattice.images(src_pos, array_pos, reach)


@dataclass
class FoaImages:
    azimuth: np.ndarray
    elevation: np.ndarray
    delay: np.ndarray
    gain: np.ndarray
    coefficients: np.ndarray


def encode_foa(images: ImageSet, array_pos, speed_of_sound: float = 343.0) -> FoaImages:
    """Far-field plane-wave encoding of each image into ambiX FOA."""
    rel = images.positions - np.asarray(array_pos, dtype=float)
    dist = np.linalg.norm(rel, axis=1)
    if np.any(dist < 1e-9):
        raise ValueError("an image source coincides with the array")
    az, el = cart_to_sph(rel)
    gain = images.amplitudes
    coeffs = gain[:, None] * sh_eval(az, el, 1)
    return FoaImages(az, el, dist / speed_of_sound, gain, coeffs)


def _rir_length(cap: float, fs: int, half_width: int) -> int:
    return int(math.ceil(cap * fs)) + half_width + 1


def _accumulate(foa: FoaImages, fs: int, length: int, half_width: int) -> np.ndarray:
    out = np.zeros((length, 4))
    _accel.accumulate_fractional_delays(out, np.ascontiguousarray(foa.delay * fs),
                                        np.ascontiguousarray(foa.coefficients), half_width)
    return out


def rir_foa(room: RoomSpec, src_pos, sample_rate: int = 16000,
            render: RenderConfig = RenderConfig()) -> np.ndarray:
    """Static FOA room impulse response, shape ``(samples, 4)``."""
    _check_inside(room, src_pos)
    direct = float(np.linalg.norm(np.subtract(src_pos, room.array_position)))
    cap = render.time_cap(room, direct)
    reach = cap * room.speed_of_sound
    lattice = _ImageLattice(room, reach, render.max_order)
    foa = encode_foa(lattice.images(src_pos, room.array_position, reach),
                     room.array_position, room.speed_of_sound)
    return _accumulate(foa, sample_rate, _rir_length(cap, sample_rate, render.fd_half_width),
                       render.fd_half_width)


def render_moving(signal: np.ndarray, trajectory: Trajectory, room: RoomSpec,
                  render: RenderConfig = RenderConfig()) -> np.ndarray:
    """Render a mono source moving along ``trajectory`` into FOA.

    Sample ``j`` of the trajectory applies to emission times around
    ``j * hop``; a triangular window of two hops hands each emitted sample
    linearly from one hop-position RIR to the next. Output has the input
    length.
    """
    signal = np.asarray(signal, dtype=float)
    fs, hop = trajectory.sample_rate, trajectory.hop
    L = signal.shape[0]
    n_seg = trajectory_frames(L, hop)
    if len(trajectory) < n_seg:
        raise ValueError(f"trajectory has {len(trajectory)} samples; {n_seg} needed "
                         f"for {L} audio samples at hop {hop}")
    pos = trajectory.positions(room.array_position)[:n_seg]
    for p in pos:
        _check_inside(room, p)
    max_dist = float(np.max(trajectory.range[:n_seg]))
    cap = render.time_cap(room, max_dist)
    reach = cap * room.speed_of_sound
    lattice = _ImageLattice(room, reach, render.max_order)
    Lr = _rir_length(cap, fs, render.fd_half_width)
    seg_len = 2 * hop
    nfft = next_fast_len(seg_len + Lr - 1)
    tri = 1.0 - np.abs(np.arange(seg_len) - hop) / hop
    padded = np.concatenate([np.zeros(hop), signal, np.zeros(2 * hop)])
    out = np.zeros((L + hop + seg_len + Lr, 4))
    H, last = None, None
    for j in range(n_seg):
        seg = padded[j * hop:j * hop + seg_len] * tri
        if not seg.any():
            continue
        if last is None or not np.array_equal(pos[j], last):
            foa = encode_foa(lattice.images(pos[j], room.array_position, reach),
                             room.array_position, room.speed_of_sound)
            H = rfft(_accumulate(foa, fs, Lr, render.fd_half_width), nfft, axis=0)
            last = pos[j]
        y = irfft(rfft(seg, nfft)[:, None] * H, nfft, axis=0)[:seg_len + Lr - 1]
        out[j * hop:j * hop + seg_len + Lr - 1] += y
    return out[hop:hop + L]


# ------------------------------------------------------------------ scenes

@dataclass
class SourceSpec:
    trajectory: Trajectory
    wav: str | None = None
    signal: np.ndarray | None = field(default=None, repr=False)

    def load(self, base_dir=None) -> np.ndarray:
        if self.signal is not None:
            return np.asarray(self.signal, dtype=float)
        if self.wav is None:
            raise ValueError("source has neither a signal nor a WAV path")
        path = Path(self.wav)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        data, _ = read_wav(path)
        if data.ndim != 1:
            raise ValueError(f"{path}: source WAV must be mono")
        return data


@dataclass
class SceneManifest:
    room: RoomSpec
    sources: list[SourceSpec]
    seed: int
    target_index: int = 0
    render: RenderConfig = RenderConfig()
    sample_rate: int = 16000
    hop: int = 256

    def __post_init__(self):
        if not 0 <= self.target_index < len(self.sources):
            raise ValueError("target_index does not name a source")

    def start_separations(self) -> np.ndarray:
        """Pairwise angular separation (radians) of the sources at t=0."""
        u = np.array([s.trajectory.unit_vectors()[0] for s in self.sources])
        return np.arccos(np.clip(u @ u.T, -1.0, 1.0))

    def to_json(self, path) -> None:
        """Write the manifest; trajectories go to sibling CSV files."""
        path = Path(path)
        entries = []
        for i, s in enumerate(self.sources):
            csv_name = f"trajectory_{i}.csv"
            s.trajectory.to_csv(path.parent / csv_name)
            if s.wav is None:
                raise ValueError("sources must reference WAV files to be serialised")
            entries.append({"wav": s.wav, "trajectory": csv_name})
        dump_json(path, {
            "schema": SCHEMA_VERSION, "seed": self.seed, "target_index": self.target_index,
            "sample_rate": self.sample_rate, "hop": self.hop, "room": self.room.to_dict(),
            "render": asdict(self.render), "sources": entries,
        })

    @classmethod
    def from_json(cls, path) -> "SceneManifest":
        path = Path(path)
        d = load_json(path)
        if d.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"{path}: unsupported manifest schema {d.get('schema')!r}")
        fs, hop = int(d["sample_rate"]), int(d["hop"])
        sources = [SourceSpec(Trajectory.from_csv(path.parent / e["trajectory"], hop, fs), e["wav"])
                   for e in d["sources"]]
        return cls(RoomSpec.from_dict(d["room"]), sources, int(d["seed"]), int(d["target_index"]),
                   RenderConfig(**d["render"]), fs, hop)


@dataclass
class SceneOutput:
    mixture: np.ndarray
    anechoic_target: np.ndarray
    renders: list[np.ndarray]
    trajectories: list[Trajectory]
    target_index: int

    @property
    def target_trajectory(self) -> Trajectory:
        return self.trajectories[self.target_index]

    @property
    def interferer_trajectories(self) -> list[Trajectory]:
        return [t for i, t in enumerate(self.trajectories) if i != self.target_index]


def assemble_scene(manifest: SceneManifest, base_dir=None) -> SceneOutput:
    """Render every source and sum them in source order."""
    signals = [s.load(base_dir) for s in manifest.sources]
    length = min(len(x) for x in signals)
    renders = [render_moving(x[:length], s.trajectory, manifest.room, manifest.render)
               for x, s in zip(signals, manifest.sources)]
    mixture = np.zeros((length, 4))
    for r in renders:
        mixture = mixture + r
    tgt = manifest.sources[manifest.target_index]
    direct = render_moving(signals[manifest.target_index][:length], tgt.trajectory, manifest.room,
                           replace(manifest.render, max_order=0))
    return SceneOutput(mixture, direct[:, 0].copy(), renders,
                       [s.trajectory for s in manifest.sources], manifest.target_index)


@dataclass(frozen=True)
class SceneConfig:
    """Random-scene generator settings (angles in radians)."""

    n_sources: int = 3
    duration: float = 4.0
    room_min: tuple[float, float, float] = (7.0, 7.0, 2.8)
    room_max: tuple[float, float, float] = (10.0, 9.0, 3.5)
    rt60_range: tuple[float, float] = RT60_BOUNDS
    array_jitter: float = 0.3
    array_height: tuple[float, float] = (1.3, 1.7)
    min_separation: float = math.radians(15.0)
    wall_margin: float = 0.3
    trajectory: TrajectoryBounds = TrajectoryBounds()
    render: RenderConfig = RenderConfig()
    allow_rt60_outside: bool = False
    max_retries: int = 200

    def validate(self) -> None:
        lo, hi = self.rt60_range
        if lo > hi:
            raise ValueError("rt60_range is reversed")
        if not self.allow_rt60_outside and (lo < RT60_BOUNDS[0] or hi > RT60_BOUNDS[1]):
            raise ValueError(f"rt60_range {self.rt60_range} leaves the dataset bounds {RT60_BOUNDS}")
        if self.n_sources < 1:
            raise ValueError("need at least one source")
        rl = self.trajectory.range_limits
        if rl[0] < RANGE_BOUNDS[0] or rl[1] > RANGE_BOUNDS[1]:
            raise ValueError(f"range_limits {rl} leave {RANGE_BOUNDS}")


def random_room(rng: np.random.Generator, cfg: SceneConfig) -> RoomSpec:
    dims = rng.uniform(cfg.room_min, cfg.room_max)
    center = dims / 2.0
    arr = np.array([center[0] + rng.uniform(-1, 1) * cfg.array_jitter,
                    center[1] + rng.uniform(-1, 1) * cfg.array_jitter,
                    min(rng.uniform(*cfg.array_height), dims[2] - 0.5)])
    return RoomSpec(tuple(dims), float(rng.uniform(*cfg.rt60_range)), tuple(arr))


def make_manifest(seed: int, sources: list, cfg: SceneConfig = SceneConfig(),
                  sample_rate: int = 16000, hop: int = 256,
                  n_samples: int | None = None) -> SceneManifest:
    """Draw a room and one trajectory per source.

    ``sources`` holds WAV paths (str) or signal arrays. Trajectories are
    redrawn until all start directions are ``cfg.min_separation`` apart.
    """
    cfg.validate()
    rng = np.random.default_rng(seed)
    if n_samples is None:
        n_samples = int(round(cfg.duration * sample_rate))
    n_frames = trajectory_frames(n_samples, hop)
    room = random_room(rng, cfg)
    trajs: list[Trajectory] = []
    for k in range(len(sources)):
        for _ in range(cfg.max_retries):
            tr = gen_trajectory(rng, n_frames, cfg.trajectory, hop, sample_rate,
                                room=room, wall_margin=cfg.wall_margin)
            u = tr.unit_vectors()[0]
            if all(math.acos(min(1.0, float(u @ o.unit_vectors()[0]))) >= cfg.min_separation
                   for o in trajs):
                trajs.append(tr)
                break
        else:
            raise ConstraintError(f"source {k}: start separation unattainable (seed={seed})")
    specs = []
    for src, tr in zip(sources, trajs):
        if isinstance(src, (str, Path)):
            specs.append(SourceSpec(tr, wav=str(src)))
        else:
            specs.append(SourceSpec(tr, signal=np.asarray(src, dtype=float)))
    return SceneManifest(room, specs, int(seed), 0, cfg.render, sample_rate, hop)
