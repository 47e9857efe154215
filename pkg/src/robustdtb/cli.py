"""Command line front end.

Exit codes: 0 success, 2 validation error, 3 numerical breakdown, 4 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .dataset import ArrayDataSet, read_adf, write_adf
from .dtb import DtbConfig, dtb_run, dtb_unregularized
from .errors import (
    BreakdownError,
    ConfigurationError,
    ConvergenceError,
    DeflationError,
    DtbError,
    IndefiniteGramian,
    PipelineError,
    StabilityError,
)
from .metrics import misfit_report
from .presets import DEFAULT_TAU, Experiment, load_preset
from .romcore import TruncationSpec, gramian_spectrum, write_spectrum_csv
from .wavesim import SensorGeometry, add_noise, born_oracle, simulate
from .wavesim.mediumio import read_medium

log = logging.getLogger("robustdtb")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4
NUMERICAL = (IndefiniteGramian, BreakdownError, DeflationError, ConvergenceError, StabilityError)
CHANNEL_NAMES = {"horizontal": 0, "vertical": 1, "pressure": 0}


@dataclass
class ExperimentConfig:
    physics: Optional[str] = None
    preset: Optional[str] = None
    medium: Optional[str] = None
    m_a: Optional[int] = None
    spacing: Optional[float] = None
    width: Optional[float] = None
    start: Optional[float] = None
    tau: Optional[float] = None
    n: Optional[int] = None
    substeps: Optional[int] = None
    noise_percent: float = 0.0
    seed: int = 0
    mode: str = "threshold"
    value: Optional[float] = None
    out: str = "."
    jobs: int = 1
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.preset is None and self.medium is None:
            raise ConfigurationError("give either a preset or a medium file")
        if self.medium is not None and not Path(self.medium).is_file():
            raise FileNotFoundError(f"medium file not found: {self.medium}")
        for name in ("tau", "spacing", "width"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ConfigurationError(f"{name} must be positive")
        for name in ("n", "m_a", "substeps"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ConfigurationError(f"{name} must be a positive integer")
        if self.noise_percent < 0:
            raise ConfigurationError("noise percent must be >= 0")
        if self.mode not in ("threshold", "rank"):
            raise ConfigurationError(f"truncation mode must be threshold or rank, got {self.mode!r}")
        if self.jobs <= 0:
            raise ConfigurationError("--jobs must be positive")

    def truncation(self) -> TruncationSpec:
        if self.mode == "rank":
            if self.value is None:
                raise ConfigurationError("rank truncation needs a value")
            return TruncationSpec.rank(int(self.value))
        return TruncationSpec.threshold(self.value)


def _get(cp, section, key, conv):
    if cp.has_option(section, key):
        raw = cp.get(section, key).strip()
        try:
            return conv(raw)
        except ValueError as exc:
            raise ConfigurationError(f"[{section}] {key}: cannot parse {raw!r}") from exc
    return None


def read_config(path) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise FileNotFoundError(f"config file not found: {path}")
    base = Path(path).parent
    cfg = ExperimentConfig()
    cfg.physics = _get(cp, "physics", "kind", str)
    cfg.preset = _get(cp, "physics", "preset", str)
    medium = _get(cp, "physics", "medium", str)
    cfg.medium = str(base / medium) if medium else None
    cfg.m_a = _get(cp, "array", "m_a", int)
    cfg.spacing = _get(cp, "array", "spacing", float)
    cfg.width = _get(cp, "array", "width", float)
    cfg.start = _get(cp, "array", "start", float)
    cfg.tau = _get(cp, "timing", "tau", float)
    cfg.n = _get(cp, "timing", "n", int)
    cfg.substeps = _get(cp, "timing", "substeps", int)
    cfg.noise_percent = _get(cp, "noise", "percent", float) or 0.0
    cfg.seed = _get(cp, "noise", "seed", int) or 0
    cfg.mode = _get(cp, "truncation", "mode", str) or "threshold"
    value = _get(cp, "truncation", "value", str)
    if value is not None and value.lower() not in ("", "auto", "default"):
        try:
            cfg.value = float(value)
        except ValueError as exc:
            raise ConfigurationError(f"[truncation] value: cannot parse {value!r}") from exc
    cfg.out = _get(cp, "outputs", "directory", str) or "."
    return cfg


def build_experiment(cfg: ExperimentConfig) -> Experiment:
    cfg.validate()
    if cfg.preset is not None:
        exp = load_preset(cfg.preset, m_a=cfg.m_a, n=cfg.n, tau=cfg.tau)
        if cfg.physics is not None and cfg.physics != exp.physics:
            raise ConfigurationError(f"preset {cfg.preset!r} is {exp.physics}, config says {cfg.physics}")
    else:
        medium = read_medium(cfg.medium)
        if cfg.physics is not None and cfg.physics != medium.physics:
            raise ConfigurationError(f"medium file is {medium.physics}, config says {cfg.physics}")
        tau = cfg.tau or DEFAULT_TAU
        if cfg.n is None or cfg.m_a is None:
            raise ConfigurationError("a medium file needs [timing] n and [array] m_a")
        slow = medium.c.min() if medium.physics == "acoustic" else medium.cs.min()
        spacing = cfg.spacing or float(slow) * tau
        start = cfg.start if cfg.start is not None else spacing
        channels = 1 if medium.physics == "acoustic" else 2
        geo = SensorGeometry.uniform(cfg.m_a, spacing, start, cfg.width, channels)
        exp = Experiment(medium, geo, tau, cfg.n)
    if cfg.preset is not None and (cfg.spacing or cfg.width or cfg.start is not None):
        g = exp.geometry
        spacing = cfg.spacing or float(np.diff(g.positions).mean() if g.m_a > 1 else g.width)
        start = cfg.start if cfg.start is not None else float(g.positions[0])
        geo = SensorGeometry.uniform(g.m_a, spacing, start, cfg.width or g.width, g.channels)
        exp = replace(exp, geometry=geo)
    return exp


def _sim_kwargs(cfg: ExperimentConfig) -> dict:
    return {"substeps": cfg.substeps, "jobs": cfg.jobs}


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(cfg: ExperimentConfig, with_born: bool = False) -> dict:
    exp = build_experiment(cfg)
    out = _out_dir(cfg)
    data = simulate(exp.medium, exp.geometry, exp.tau, exp.n, **_sim_kwargs(cfg))
    data = add_noise(data, cfg.noise_percent, cfg.seed)
    write_adf(out / "data.adf", data)
    manifest = {"command": "simulate", "physics": exp.physics, "m": data.m, "twice_n": data.twice_n,
                "tau": data.tau, "meta": data.meta, "digest": data.payload_digest(), "files": ["data.adf"]}
    if with_born:
        born = born_oracle(exp.medium, exp.geometry, exp.tau, exp.n, **_sim_kwargs(cfg))
        write_adf(out / "born.adf", born)
        manifest["files"].append("born.adf")
        manifest["born_digest"] = born.payload_digest()
    _write_json(out / "simulate_manifest.json", manifest)
    return manifest


def cmd_dtb(measured_path, cfg: ExperimentConfig, unregularized: bool = False) -> dict:
    measured = read_adf(measured_path)
    exp = build_experiment(replace(cfg, n=cfg.n or measured.n, tau=cfg.tau or measured.tau))
    if exp.geometry.m != measured.m:
        raise ConfigurationError(f"configured array has m={exp.geometry.m}, data have m={measured.m}")
    out = _out_dir(cfg)
    reference = simulate(exp.medium.reference(), exp.geometry, measured.tau, measured.n, **_sim_kwargs(cfg))
    if unregularized:
        born = dtb_unregularized(measured, reference, measured.tau)
        manifest = {"command": "dtb", "unregularized": True}
    else:
        result = dtb_run(measured, DtbConfig(measured.tau, reference, cfg.truncation()))
        born = result.born
        manifest = {"command": "dtb", "unregularized": False, **result.manifest}
    write_adf(out / "born.adf", born)
    manifest["digest"] = born.payload_digest()
    _write_json(out / "dtb_manifest.json", manifest)
    return manifest


def cmd_compare(a_path, b_path, out_dir) -> dict:
    a, b = read_adf(a_path), read_adf(b_path)
    if not a.compatible_with(b):
        raise ConfigurationError(f"incompatible data sets: {a.D.shape}/{a.tau} vs {b.D.shape}/{b.tau}")
    report = misfit_report(a.D, b.D)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report.write_json(out / "misfit.json")
    report.write_csv(out / "misfit.csv")
    return report.to_dict()


def cmd_spectrum(path, out_file) -> np.ndarray:
    ev = gramian_spectrum(read_adf(path))
    write_spectrum_csv(out_file, ev)
    return ev


def parse_amplify(specs, channels: int) -> dict[int, float]:
    """``["vertical=8"]`` -> ``{1: 8.0}``; channels may be named or numbered."""
    out: dict[int, float] = {}
    for spec in specs or ():
        name, sep, factor = spec.partition("=")
        if not sep:
            raise ConfigurationError(f"--amplify-channel expects NAME=FACTOR, got {spec!r}")
        name = name.strip().lower()
        try:
            idx = CHANNEL_NAMES[name] if name in CHANNEL_NAMES else int(name)
            value = float(factor)
        except ValueError as exc:
            raise ConfigurationError(f"bad --amplify-channel value {spec!r}") from exc
        if not 0 <= idx < channels:
            raise ConfigurationError(f"channel {name!r} does not exist for {channels}-channel data")
        out[idx] = value
    return out


def gather(data: ArrayDataSet, source: int, amplify: dict[int, float] | None = None) -> np.ndarray:
    """Rows k, columns receiver channels, for one source channel."""
    if not 0 <= source < data.m:
        raise ConfigurationError(f"source index {source} outside 0..{data.m - 1}")
    g = data.D[:, :, source].copy()
    channels = 2 if data.physics == "elastic" else 1
    for p, factor in (amplify or {}).items():
        g[:, p::channels] *= factor
    return g


def cmd_export_gather(path, source, out_file, amplify_specs=()) -> np.ndarray:
    data = read_adf(path)
    channels = 2 if data.physics == "elastic" else 1
    if source is None:
        source = (data.m // channels // 2) * channels
    g = gather(data, source, parse_amplify(amplify_specs, channels))
    labels = [f"r{r // channels}" + ("hv"[r % channels] if channels == 2 else "") for r in range(data.m)]
    with open(out_file, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k"] + labels)
        for k, row in enumerate(g):
            w.writerow([k] + [repr(float(v)) for v in row])
    return g


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI experiment file")
    p.add_argument("--preset", help="built-in experiment name")
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel source simulations")
    p.add_argument("--m-a", type=int, dest="m_a", help="number of sensor locations")
    p.add_argument("--n", type=int, help="half the number of recorded time samples")
    p.add_argument("--tau", type=float, help="sampling interval (s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robustdtb", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize array data")
    _add_common(p)
    p.add_argument("--noise-percent", type=float, dest="noise_percent")
    p.add_argument("--seed", type=int)
    p.add_argument("--born", action="store_true", help="also write the brute-force Born data")

    p = sub.add_parser("dtb", help="apply the Data-to-Born transform")
    p.add_argument("measured")
    _add_common(p)
    p.add_argument("--theta", type=float, help="eigenvalue threshold")
    p.add_argument("--rank", type=int, help="truncation rank z (blocks)")
    p.add_argument("--unregularized", action="store_true")

    p = sub.add_parser("compare", help="misfit of A against reference B")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--out", default=".")

    p = sub.add_parser("spectrum", help="Gramian eigenvalues as CSV")
    p.add_argument("data")
    p.add_argument("--out", default="spectrum.csv")

    p = sub.add_parser("export-gather", help="one source gather as CSV")
    p.add_argument("data")
    p.add_argument("--source", type=int)
    p.add_argument("--amplify-channel", action="append", dest="amplify", default=[])
    p.add_argument("--out", default="gather.csv")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    cfg = read_config(args.config) if args.config else ExperimentConfig()
    if args.preset:
        cfg.preset, cfg.medium = args.preset, None
    for name in ("m_a", "n", "tau"):
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg, name, v)
    if args.out:
        cfg.out = args.out
    cfg.jobs = args.jobs
    if getattr(args, "noise_percent", None) is not None:
        cfg.noise_percent = args.noise_percent
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "theta", None) is not None and getattr(args, "rank", None) is not None:
        raise ConfigurationError("--theta and --rank are mutually exclusive")
    if getattr(args, "theta", None) is not None:
        cfg.mode, cfg.value = "threshold", args.theta
    if getattr(args, "rank", None) is not None:
        cfg.mode, cfg.value = "rank", args.rank
    return cfg


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, PipelineError):
        exc = exc.cause
    if isinstance(exc, NUMERICAL):
        return EXIT_NUMERICAL
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_VALIDATION


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate":
            result = cmd_simulate(_config_from_args(args), args.born)
        elif args.command == "dtb":
            result = cmd_dtb(args.measured, _config_from_args(args), args.unregularized)
        elif args.command == "compare":
            result = cmd_compare(args.a, args.b, args.out)
        elif args.command == "spectrum":
            ev = cmd_spectrum(args.data, args.out)
            result = {"count": int(ev.size), "condition": float(ev[0] / ev[-1]) if ev[-1] > 0 else None}
        else:
            cmd_export_gather(args.data, args.source, args.out, args.amplify)
            result = {"written": args.out}
    except (DtbError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code(exc)
    print(json.dumps(result, default=_jsonable, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
