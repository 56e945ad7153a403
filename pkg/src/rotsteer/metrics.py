"""Tracking and enhancement metrics plus the distance-binned summary."""
from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, fields

import numpy as np

from .scene import Trajectory
from .sh import SphericalDirection

SI_SDR_CAP = 60.0
DEFAULT_BIN_EDGES = (0.0, 15.0, 30.0, 60.0, 180.0)
RECORD_SCHEMA = 1


def _unit(d) -> np.ndarray:
    if isinstance(d, SphericalDirection):
        return d.to_vector()
    return np.asarray(d, dtype=float)


def angular_error(a, b) -> float:
    """Great-circle angle between two directions, in degrees."""
    u, v = _unit(a), _unit(b)
    c = float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))
    return math.degrees(math.acos(max(-1.0, min(1.0, c))))


def _frame_errors(a: Trajectory, b: Trajectory) -> np.ndarray:
    u, v = a.unit_vectors(), b.unit_vectors()
    return np.degrees(np.arccos(np.clip(np.sum(u * v, axis=1), -1.0, 1.0)))


def utterance_mae(est: Trajectory, truth: Trajectory) -> float:
    """Mean per-frame angular error in degrees."""
    if len(est) != len(truth):
        raise ValueError(f"trajectory lengths differ: {len(est)} vs {len(truth)}")
    if len(est) == 0:
        raise ValueError("empty trajectories")
    return float(np.mean(_frame_errors(est, truth)))


def si_sdr(est, ref, cap: float = SI_SDR_CAP) -> float:
    """Scale-invariant SDR in dB, capped at ``cap``."""
    est = np.asarray(est, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if est.shape != ref.shape:
        raise ValueError(f"shape mismatch {est.shape} vs {ref.shape}")
    ref_energy = float(ref @ ref)
    if ref_energy == 0.0:
        raise ValueError("reference signal is all zeros")
    alpha = float(est @ ref) / ref_energy
    target = alpha * ref
    err = est - target
    num, den = float(target @ target), float(err @ err)
    if den == 0.0 or den <= num * 10.0 ** (-cap / 10.0):
        return float(cap)
    if num == 0.0:
        return -float(cap)
    return float(max(-cap, 10.0 * math.log10(num / den)))


def min_interferer_distance(target: Trajectory, interferers: list[Trajectory],
                            window: slice | None = None) -> float:
    """Smallest angle (degrees) between target and any interferer over frames."""
    if not interferers:
        return 180.0
    window = window or slice(None)
    best = 180.0
    for other in interferers:
        if len(other) != len(target):
            raise ValueError("trajectories are not aligned")
        best = min(best, float(np.min(_frame_errors(target, other)[window])))
    return best


def distance_bin(distance: float, edges=DEFAULT_BIN_EDGES) -> str:
    """Label of the half-open bin ``[lo, hi)`` holding ``distance`` (last bin closed)."""
    edges = tuple(float(e) for e in edges)
    if not 0.0 <= distance <= edges[-1]:
        raise ValueError(f"distance {distance} outside [{edges[0]}, {edges[-1]}]")
    for lo, hi in zip(edges[:-1], edges[1:]):
        if lo <= distance < hi:
            return bin_label(lo, hi)
    return bin_label(edges[-2], edges[-1])


def bin_label(lo: float, hi: float) -> str:
    return f"{lo:g}-{hi:g}"


@dataclass
class EvalRecord:
    scene_id: str
    mode: str
    mae_deg: float
    si_sdr_db: float
    min_dist_deg: float
    bin: str
    runtime_s: float = float("nan")

    def __post_init__(self):
        if not self.mae_deg >= 0:
            raise ValueError("MAE must be non-negative")


@dataclass
class GroupSummary:
    mode: str
    bin: str
    n: int
    mae_mean: float
    mae_ci: float
    si_sdr_mean: float
    si_sdr_ci: float


def mean_ci(values) -> tuple[float, float]:
    """Mean and 95 % normal-approximation half-width ``1.96 s / sqrt(n)``."""
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two values for a confidence interval")
    return float(x.mean()), float(1.96 * x.std(ddof=1) / math.sqrt(x.size))


def summarize(records: list[EvalRecord], by_bin: bool = True,
              edges=DEFAULT_BIN_EDGES, strict: bool = True) -> list[GroupSummary]:
    """Per (mode, bin) means and CIs; ``bin == "all"`` rows pool every bin.

    Groups with fewer than two records raise, or are skipped when
    ``strict`` is false.
    """
    if not records:
        raise ValueError("no records to summarise")
    groups: dict[tuple[str, str], list[EvalRecord]] = defaultdict(list)
    for r in records:
        groups[(r.mode, "all")].append(r)
        if by_bin:
            groups[(r.mode, r.bin)].append(r)
    order = {bin_label(lo, hi): i for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:]))}
    out = []
    for (mode, b), rs in sorted(groups.items(), key=lambda kv: (kv[0][0], order.get(kv[0][1], -1))):
        if len(rs) < 2:
            if strict:
                raise ValueError(f"group ({mode}, {b}) has fewer than two records")
            continue
        m, mc = mean_ci([r.mae_deg for r in rs])
        s, sc = mean_ci([r.si_sdr_db for r in rs])
        out.append(GroupSummary(mode, b, len(rs), m, mc, s, sc))
    return out


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def records_csv(records: list[EvalRecord], include_runtime: bool = False) -> str:
    names = [f.name for f in fields(EvalRecord) if include_runtime or f.name != "runtime_s"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for r in records:
        d = asdict(r)
        w.writerow([_fmt(d[n]) if isinstance(d[n], float) else d[n] for n in names])
    return buf.getvalue()


def summary_csv(groups: list[GroupSummary]) -> str:
    names = [f.name for f in fields(GroupSummary)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for g in groups:
        d = asdict(g)
        w.writerow([_fmt(d[n]) if isinstance(d[n], float) else d[n] for n in names])
    return buf.getvalue()


def summary_markdown(groups: list[GroupSummary]) -> str:
    lines = ["| mode | bin (deg) | n | MAE (deg) | SI-SDR (dB) |",
             "|---|---|---|---|---|"]
    for g in groups:
        lines.append(f"| {g.mode} | {g.bin} | {g.n} | {g.mae_mean:.2f} ± {g.mae_ci:.2f} "
                     f"| {g.si_sdr_mean:.2f} ± {g.si_sdr_ci:.2f} |")
    return "\n".join(lines) + "\n"
