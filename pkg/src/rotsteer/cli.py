"""Command-line interface: ``rotsteer simulate | run | eval``.

Configuration files are JSON with all angles in degrees; they are
converted to radians here and nowhere else. Outputs carry the hash of the
configuration that produced them, ``run`` skips scenes whose outputs
already match, and reports never contain wall-clock data, so repeating a
round with the same inputs reproduces the report files byte for byte.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 internal error.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import ControlledSceneConfig, trend_scene
from .io import config_hash, dump_json, file_sha256, load_json, read_wav, write_wav
from .metrics import (DEFAULT_BIN_EDGES, EvalRecord, bin_label, distance_bin,
                      min_interferer_distance, records_csv, si_sdr, summarize, summary_csv,
                      summary_markdown, utterance_mae)
from .pipeline import Guidance, PipelineMode, frame_trajectory, initial_direction, run
from .scene import (RT60_BOUNDS, RenderConfig, SceneConfig, SceneManifest, Trajectory,
                    TrajectoryBounds, assemble_scene, make_manifest)
from .signals import synth_speech
from .ssf import Beamformer, SsfConfig
from .stft import StftConfig
from .tracker import TrackerConfig

log = logging.getLogger("rotsteer")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4
OUTPUT_ROOT_ENV = "ROTSTEER_OUTPUT_ROOT"
CONFIG_SCHEMA = 1
ALL_MODE_LABELS = ("strong", "fixed", "adaptive", "adaptive+ar-tst", "adaptive+ar-tst+ar-ssf")


class ConfigError(Exception):
    """Invalid or inconsistent configuration."""


class DataError(Exception):
    """Missing, malformed or mismatched dataset / run files."""


# ------------------------------------------------------------------ config

@dataclass
class DatasetSection:
    family: str = "random"              # "random" or "trend"
    scene_count: int = 4
    n_sources: int = 3
    duration_s: float = 4.0
    room_min_m: tuple = (7.0, 7.0, 2.8)
    room_max_m: tuple = (10.0, 9.0, 3.5)
    rt60_range_s: tuple = RT60_BOUNDS
    allow_rt60_outside: bool = False
    min_separation_deg: float = 15.0
    azimuth_amplitude_deg: tuple = (0.0, 60.0)
    elevation_offset_deg: tuple = (-10.0, 10.0)
    elevation_amplitude_deg: tuple = (0.0, 5.0)
    range_limits_m: tuple = (1.0, 3.0)
    range_amplitude_m: tuple = (0.0, 0.8)
    frequency_hz: tuple = (0.05, 0.25)
    rir_max_time_s: float | None = None
    rir_max_order: int | None = None
    sources_dir: str | None = None
    source_rms: float = 0.1


@dataclass
class TrackerSection:
    band_hz: tuple = (300.0, 4000.0)
    gate_angle_deg: float = 2.0
    smoothing_constant: float = 0.8
    focus: float = 20.0
    directness: float = 0.0
    ar_mask_floor: float = 0.05
    ar_mode: str = "magnitude"


@dataclass
class SsfSection:
    beamformer: str = "maxdi"
    shape: float = 0.75
    postfilter: bool = True
    dd_smoothing: float = 0.6
    gain_floor: float = 0.1
    direction_sharpness: float = 8.0


@dataclass
class ExperimentConfig:
    """Everything that determines a simulate -> run -> eval round."""

    seed: int = 0
    sample_rate: int = 16000
    hop: int = 256
    modes: tuple = ALL_MODE_LABELS
    bin_edges_deg: tuple = DEFAULT_BIN_EDGES
    dataset: DatasetSection = field(default_factory=DatasetSection)
    tracker: TrackerSection = field(default_factory=TrackerSection)
    ssf: SsfSection = field(default_factory=SsfSection)

    # -- parsing
    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        schema = d.pop("schema", CONFIG_SCHEMA)
        if schema != CONFIG_SCHEMA:
            raise ConfigError(f"unsupported config schema {schema!r}")
        sections = {"dataset": DatasetSection, "tracker": TrackerSection, "ssf": SsfSection}
        kw = {}
        for name, typ in sections.items():
            kw[name] = _build(typ, d.pop(name, {}), name)
        cfg = _build(cls, d, "config", **kw)
        cfg.validate()
        return cfg

    @staticmethod
    def read(path) -> dict:
        """Raw JSON object of a config file."""
        try:
            data = load_json(path)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file {path} not found") from exc
        except ValueError as exc:
            raise ConfigError(f"config file {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        return data

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(cls.read(path))

    def to_dict(self) -> dict:
        d = _jsonable(asdict(self))
        d["schema"] = CONFIG_SCHEMA
        return d

    # -- validation and conversion
    def validate(self) -> None:
        ds = self.dataset
        if ds.family not in ("random", "trend"):
            raise ConfigError(f"dataset.family must be 'random' or 'trend', not {ds.family!r}")
        if ds.scene_count < 1:
            raise ConfigError("dataset.scene_count must be positive")
        if self.sample_rate <= 0 or self.hop <= 0:
            raise ConfigError("sample_rate and hop must be positive")
        for label in self.modes:
            self.mode(label)
        edges = tuple(float(e) for e in self.bin_edges_deg)
        if edges[0] != 0.0 or edges[-1] != 180.0 or any(b <= a for a, b in zip(edges, edges[1:])):
            raise ConfigError("bin_edges_deg must increase strictly from 0 to 180")
        try:
            self.scene_config().validate()
            self.tracker_config()
            self.ssf_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @staticmethod
    def mode(label: str) -> PipelineMode:
        try:
            return PipelineMode.from_label(label)
        except ValueError as exc:
            raise ConfigError(f"invalid mode {label!r}: {exc}") from exc

    def stft_config(self) -> StftConfig:
        return StftConfig(sample_rate=self.sample_rate, window_len=2 * self.hop)

    def render_config(self) -> RenderConfig:
        return RenderConfig(self.dataset.rir_max_order, self.dataset.rir_max_time_s)

    def scene_config(self) -> SceneConfig:
        ds, rad = self.dataset, _radians
        traj = TrajectoryBounds(
            azimuth_amplitude=rad(ds.azimuth_amplitude_deg),
            elevation_offset=rad(ds.elevation_offset_deg),
            elevation_amplitude=rad(ds.elevation_amplitude_deg),
            range_limits=tuple(ds.range_limits_m), range_amplitude=tuple(ds.range_amplitude_m),
            frequency=tuple(ds.frequency_hz))
        return SceneConfig(n_sources=ds.n_sources, duration=ds.duration_s,
                           room_min=tuple(ds.room_min_m), room_max=tuple(ds.room_max_m),
                           rt60_range=tuple(ds.rt60_range_s),
                           min_separation=math.radians(ds.min_separation_deg),
                           trajectory=traj, render=self.render_config(),
                           allow_rt60_outside=ds.allow_rt60_outside)

    def controlled_config(self) -> ControlledSceneConfig:
        ds = self.dataset
        render = self.render_config()
        if render.max_time is None and render.max_order is None:
            render = ControlledSceneConfig().render
        return ControlledSceneConfig(duration=ds.duration_s, rt60_range=tuple(ds.rt60_range_s),
                                     render=render, source_rms=ds.source_rms,
                                     sample_rate=self.sample_rate, hop=self.hop)

    def tracker_config(self) -> TrackerConfig:
        t = self.tracker
        lo, hi = t.band_hz
        return TrackerConfig.for_stft(self.stft_config(), lo, hi,
                                      gate_angle=math.radians(t.gate_angle_deg),
                                      smoothing_constant=t.smoothing_constant, focus=t.focus,
                                      directness=t.directness, ar_mask_floor=t.ar_mask_floor,
                                      ar_mode=t.ar_mode)

    def ssf_config(self) -> SsfConfig:
        s = self.ssf
        try:
            bf = Beamformer(s.beamformer)
        except ValueError as exc:
            raise ConfigError(f"unknown beamformer {s.beamformer!r}") from exc
        return SsfConfig(beamformer=bf, shape=s.shape, postfilter_enabled=s.postfilter,
                         dd_smoothing=s.dd_smoothing, gain_floor=s.gain_floor,
                         direction_sharpness=s.direction_sharpness)

    def dataset_hash(self) -> str:
        d = self.to_dict()
        return config_hash({k: d[k] for k in ("schema", "seed", "sample_rate", "hop", "dataset")})

    def run_hash(self, mode_label: str) -> str:
        d = self.to_dict()
        return config_hash({"dataset": self.dataset_hash(), "mode": mode_label,
                            "tracker": d["tracker"], "ssf": d["ssf"], "version": __version__})


def _radians(pair) -> tuple:
    return tuple(math.radians(float(v)) for v in pair)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _build(typ, values, where: str, **extra):
    if not isinstance(values, dict):
        raise ConfigError(f"{where}: expected an object")
    names = {f.name for f in fields(typ)}
    unknown = set(values) - names
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kw = {}
    for f in fields(typ):
        if f.name in values:
            v = values[f.name]
            kw[f.name] = tuple(v) if isinstance(v, list) else v
    try:
        return typ(**kw, **extra)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


# ---------------------------------------------------------------- simulate

def _scene_dir(root: Path, i: int) -> Path:
    return root / f"scene_{i:04d}"


def _synth_sources(cfg: ExperimentConfig, scene_seed: int) -> list:
    ds = cfg.dataset
    if ds.sources_dir is None:
        rng = np.random.default_rng([scene_seed, 7])
        return [synth_speech(rng, ds.duration_s, cfg.sample_rate, rms=ds.source_rms)
                for _ in range(ds.n_sources)]
    files = sorted(Path(ds.sources_dir).glob("*.wav"))
    if len(files) < ds.n_sources:
        raise DataError(f"{ds.sources_dir}: need {ds.n_sources} WAV files, found {len(files)}")
    rng = np.random.default_rng([scene_seed, 11])
    chosen = rng.choice(len(files), size=ds.n_sources, replace=False)
    n = int(round(ds.duration_s * cfg.sample_rate))
    out = []
    for k in chosen:
        x, fs = read_wav(files[k])
        if fs != cfg.sample_rate or x.ndim != 1:
            raise DataError(f"{files[k]}: need mono audio at {cfg.sample_rate} Hz")
        if len(x) < n:
            raise DataError(f"{files[k]}: shorter than {ds.duration_s} s")
        out.append(x[:n])
    return out


def simulate_scene(cfg: ExperimentConfig, i: int, out_dir: Path) -> str:
    """Render scene ``i`` into ``out_dir`` and return its directory name."""
    scene_seed = cfg.seed + i
    if cfg.dataset.family == "trend":
        manifest, _ = trend_scene(i, cfg.seed, cfg.controlled_config())
    else:
        manifest = make_manifest(scene_seed, _synth_sources(cfg, scene_seed), cfg.scene_config(),
                                 cfg.sample_rate, cfg.hop)
    d = _scene_dir(out_dir, i)
    d.mkdir(parents=True, exist_ok=True)
    for k, src in enumerate(manifest.sources):
        name = f"source_{k}.wav"
        write_wav(d / name, src.load(), cfg.sample_rate)
        src.signal, src.wav = None, name
    out = assemble_scene(manifest, base_dir=d)
    manifest.to_json(d / "manifest.json")
    write_wav(d / "mixture.wav", out.mixture, cfg.sample_rate)
    write_wav(d / "target.wav", out.anechoic_target, cfg.sample_rate)
    return d.name


def cmd_simulate(cfg: ExperimentConfig, out_dir: Path, jobs: int) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    info_path = out_dir / "dataset.json"
    if info_path.exists() and load_json(info_path).get("hash") != cfg.dataset_hash():
        raise DataError(f"{out_dir} holds a dataset made from a different config")
    names = _map(simulate_scene, [(cfg, i, out_dir) for i in range(cfg.dataset.scene_count)], jobs)
    dump_json(info_path, {"hash": cfg.dataset_hash(), "config": cfg.to_dict(),
                          "scenes": names, "version": __version__})
    log.info("simulated %d scenes into %s", len(names), out_dir)
    return EXIT_OK


# --------------------------------------------------------------------- run

def _load_dataset(data_dir: Path) -> dict:
    info = data_dir / "dataset.json"
    if not info.exists():
        raise DataError(f"{data_dir} is not a dataset directory (no dataset.json)")
    return load_json(info)


def run_scene(cfg: ExperimentConfig, label: str, scene_dir: Path, out_dir: Path) -> bool:
    """Process one scene in one mode; returns False when the output was current."""
    h = cfg.run_hash(label)
    status_path = out_dir / "status.json"
    if status_path.exists() and load_json(status_path).get("hash") == h:
        return False
    manifest_path = scene_dir / "manifest.json"
    if not manifest_path.exists():
        raise DataError(f"{scene_dir}: missing manifest.json")
    manifest = SceneManifest.from_json(manifest_path)
    mixture, fs = read_wav(scene_dir / "mixture.wav")
    if fs != cfg.sample_rate:
        raise DataError(f"{scene_dir}: sample rate {fs} differs from the config")
    target = manifest.sources[manifest.target_index].trajectory
    mode = cfg.mode(label)
    t0 = time.perf_counter()
    res = run(mixture, initial_direction(target), mode, target, cfg.stft_config(),
              cfg.tracker_config(), cfg.ssf_config())
    runtime = time.perf_counter() - t0
    out_dir.mkdir(parents=True, exist_ok=True)
    write_wav(out_dir / "enhanced.wav", res.enhanced, fs)
    res.est_traj.to_csv(out_dir / "estimate.csv")
    dump_json(status_path, {"hash": h, "mode": label, "runtime_s": runtime,
                            "mixture_sha256": file_sha256(scene_dir / "mixture.wav")})
    return True


def cmd_run(cfg: ExperimentConfig, data_dir: Path, out_root: Path, labels, jobs: int) -> int:
    info = _load_dataset(data_dir)
    scenes = info.get("scenes") or []
    if not scenes:
        raise DataError(f"{data_dir}: dataset lists no scenes")
    for label in labels:
        run_dir = out_root / label.replace("+", "_")
        run_dir.mkdir(parents=True, exist_ok=True)
        dump_json(run_dir / "run.json", {"mode": label, "dataset": str(data_dir.resolve()),
                                         "dataset_hash": info["hash"],
                                         "hash": cfg.run_hash(label), "seed": cfg.seed,
                                         "scenes": scenes})
        done = _map(run_scene, [(cfg, label, data_dir / s, run_dir / s) for s in scenes], jobs)
        log.info("%s: %d of %d scenes processed (%d up to date)", label, sum(done), len(done),
                 len(done) - sum(done))
    return EXIT_OK


# -------------------------------------------------------------------- eval

def evaluate_scene(data_dir: Path, run_dir: Path, scene: str, label: str,
                   cfg: ExperimentConfig) -> EvalRecord:
    sd, rd = data_dir / scene, run_dir / scene
    for p in (sd / "manifest.json", sd / "target.wav", rd / "enhanced.wav", rd / "estimate.csv",
              rd / "status.json"):
        if not p.exists():
            raise DataError(f"missing {p}")
    status = load_json(rd / "status.json")
    if status.get("mixture_sha256") != file_sha256(sd / "mixture.wav"):
        raise DataError(f"{rd} was not produced from {sd}")
    manifest = SceneManifest.from_json(sd / "manifest.json")
    trajs = [s.trajectory for s in manifest.sources]
    est = Trajectory.from_csv(rd / "estimate.csv", cfg.hop, cfg.sample_rate)
    T = len(est)
    truth = frame_trajectory(trajs[manifest.target_index], T)
    others = [frame_trajectory(t, T) for k, t in enumerate(trajs) if k != manifest.target_index]
    enhanced, _ = read_wav(rd / "enhanced.wav")
    target, _ = read_wav(sd / "target.wav")
    dist = min_interferer_distance(truth, others)
    return EvalRecord(scene, label, utterance_mae(est, truth), si_sdr(enhanced, target), dist,
                      distance_bin(dist, cfg.bin_edges_deg), float(status.get("runtime_s", "nan")))


def cmd_eval(cfg: ExperimentConfig, run_dirs: list[Path], out_dir: Path) -> int:
    if not run_dirs:
        raise DataError("no run directories given")
    records: list[EvalRecord] = []
    for rd in run_dirs:
        info_path = rd / "run.json"
        if not info_path.exists():
            raise DataError(f"{rd} is not a run directory (no run.json)")
        info = load_json(info_path)
        scenes = info.get("scenes") or []
        if not scenes:
            raise DataError(f"{rd}: run lists no scenes")
        data_dir = Path(info["dataset"])
        if _load_dataset(data_dir).get("hash") != info.get("dataset_hash"):
            raise DataError(f"{rd} was run against a different dataset than {data_dir}")
        records += [evaluate_scene(data_dir, rd, s, info["mode"], cfg) for s in scenes]
    records.sort(key=lambda r: (r.mode, r.scene_id))
    edges = tuple(float(e) for e in cfg.bin_edges_deg)
    groups = summarize(records, edges=edges, strict=False)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "records.csv").write_text(records_csv(records))
    (out_dir / "summary.csv").write_text(summary_csv(groups))
    (out_dir / "summary.md").write_text(summary_markdown(groups))
    (out_dir / "plot_by_distance.csv").write_text(
        summary_csv([g for g in groups if g.bin != "all"]))
    order = [bin_label(a, b) for a, b in zip(edges[:-1], edges[1:])]
    log.info("evaluated %d records over bins %s", len(records), ", ".join(order))
    return EXIT_OK


# ------------------------------------------------------------------ helpers

def _call(args):
    fn, a = args
    return fn(*a)


def _map(fn, arg_list, jobs: int) -> list:
    if jobs <= 1 or len(arg_list) <= 1:
        return [fn(*a) for a in arg_list]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_call, [(fn, a) for a in arg_list]))


def _output_root(explicit, sub: str) -> Path:
    if explicit is not None:
        return Path(explicit)
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "rotsteer-out")) / sub


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rotsteer", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, help="experiment config (JSON, degrees)")
        sp.add_argument("--seed", type=int, help="override the config's base seed")
        sp.add_argument("--jobs", type=int, default=1, help="scene-level worker processes")
        sp.add_argument("-v", "--verbose", action="store_true", help="log progress")

    s = sub.add_parser("simulate", help="render a synthetic FOA dataset")
    common(s)
    s.add_argument("--out", type=Path, help=f"dataset directory (default ${OUTPUT_ROOT_ENV}/dataset)")
    s.add_argument("--scenes", type=int, help="override dataset.scene_count")
    s.add_argument("--allow-rt60-outside", action="store_true",
                   help=f"accept rt60 ranges outside {RT60_BOUNDS[0]}-{RT60_BOUNDS[1]} s")

    r = sub.add_parser("run", help="enhance every scene of a dataset")
    common(r)
    r.add_argument("dataset", type=Path)
    r.add_argument("--out", type=Path, help=f"run root (default ${OUTPUT_ROOT_ENV}/runs)")
    r.add_argument("--mode", choices=[g.value for g in Guidance],
                   help="guidance mode (default: every mode listed in the config)")
    r.add_argument("--ar-tst", action="store_true", help="autoregressive tracking")
    r.add_argument("--ar-ssf", action="store_true", help="autoregressive enhancement")

    e = sub.add_parser("eval", help="score runs and write the reports")
    common(e)
    e.add_argument("runs", type=Path, nargs="*", help="run directories (one per mode)")
    e.add_argument("--out", type=Path, help=f"report directory (default ${OUTPUT_ROOT_ENV}/report)")
    return p


def _config(args) -> ExperimentConfig:
    raw = ExperimentConfig.read(args.config) if args.config else {}
    dataset = dict(raw.get("dataset", {}))
    if args.seed is not None:
        raw["seed"] = args.seed
    if getattr(args, "scenes", None) is not None:
        dataset["scene_count"] = args.scenes
    if getattr(args, "allow_rt60_outside", False):
        dataset["allow_rt60_outside"] = True
    raw["dataset"] = dataset
    return ExperimentConfig.from_dict(raw)


def _labels(args, cfg: ExperimentConfig) -> list[str]:
    if args.mode is None:
        if args.ar_tst or args.ar_ssf:
            raise ConfigError("--ar-tst/--ar-ssf need an explicit --mode")
        return list(cfg.modes)
    mode = ExperimentConfig.mode("+".join([args.mode] + ["ar-tst"] * args.ar_tst
                                           + ["ar-ssf"] * args.ar_ssf))
    return [mode.label]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        if args.command == "simulate":
            return cmd_simulate(cfg, _output_root(args.out, "dataset"), args.jobs)
        if args.command == "run":
            return cmd_run(cfg, args.dataset, _output_root(args.out, "runs"), _labels(args, cfg),
                           args.jobs)
        return cmd_eval(cfg, args.runs, _output_root(args.out, "report"))
    except ConfigError as exc:
        print(f"rotsteer: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError) as exc:
        print(f"rotsteer: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - last-resort classification for the exit code
        log.debug("internal error", exc_info=True)
        print(f"rotsteer: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
