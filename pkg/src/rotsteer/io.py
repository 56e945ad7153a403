"""WAV, CSV and JSON helpers shared by the simulator, pipeline and CLI."""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np
from scipy.io import wavfile

TRAJECTORY_COLUMNS = ("frame", "azimuth_rad", "elevation_rad", "range_m")


def write_wav(path, data: np.ndarray, sample_rate: int) -> None:
    """Write 32-bit float WAV; ``data`` is ``(samples,)`` or ``(samples, channels)``."""
    wavfile.write(str(path), int(sample_rate), np.asarray(data, dtype=np.float32))


def read_wav(path) -> tuple[np.ndarray, int]:
    sample_rate, data = wavfile.read(str(path))
    if np.issubdtype(data.dtype, np.integer):
        data = data.astype(np.float64) / float(np.iinfo(data.dtype).max)
    return np.asarray(data, dtype=np.float64), int(sample_rate)


def write_trajectory_csv(path, azimuth, elevation, range_m) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for i, (a, e, r) in enumerate(zip(azimuth, elevation, range_m)):
            w.writerow([i, repr(float(a)), repr(float(e)), repr(float(r))])


def read_trajectory_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and tuple(rows[0].keys()) != TRAJECTORY_COLUMNS:
        raise ValueError(f"{path}: expected columns {TRAJECTORY_COLUMNS}")
    frames = [int(r["frame"]) for r in rows]
    if frames != list(range(len(rows))):
        raise ValueError(f"{path}: frame column must count 0..n-1")
    cols = [np.array([float(r[c]) for r in rows]) for c in TRAJECTORY_COLUMNS[1:]]
    return cols[0], cols[1], cols[2]


def dump_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def load_json(path):
    return json.loads(Path(path).read_text())


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
