"""Command-line interface.

Subcommands: simulate, sweep, spectrum, calibrate, optimize, reproduce.
Exit codes: 0 success, 2 configuration error, 3 data-format error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import (fit_g_vs_power, fit_modulation_index,
                          fit_occupancy_scale, load_table_file)
from .config import (RunConfig, config_hash, load_config_file,
                     serialize_config)
from .errors import (AnalysisError, ConfigError, ConvergenceError, FitError,
                     FormatError, IntegrationError, ParameterError)
from .experiments import (enhancement, ladder_occupancies,
                          optimize_pulse_duration,
                          phase_averaged_trajectory, rabi_power_sweep)
from .io_utils import ResultManifest, write_csv, write_json
from .model import GHZ, TWO_PI
from .pulses import PowerCalibration
from .reproduce import run_figure
from .solver import propagate
from .spectroscopy import (FilterSpec, SpectrumData, cw_scattering_spectrum,
                           excitation_spectrum, filtered_time_signal,
                           integrated_filtered_spectrum)

GHZ_ANG = TWO_PI * GHZ


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phonodot",
        description="Driven two-level emitter with acoustic frequency "
                    "modulation: Lindblad dynamics, spectra, calibrations.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="YAML run configuration")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--workers", type=int, default=os.cpu_count(),
                       help="worker pool size for sweeps")
        p.add_argument("--dry-run", action="store_true",
                       help="validate and print the resolved config only")
        p.add_argument("--seed", type=int, default=None,
                       help="seed for synthetic noisy fixtures")

    common(sub.add_parser("simulate", help="propagate one configuration"))
    sweep = sub.add_parser("sweep", help="sweep one numeric config field")
    common(sweep)
    sweep.add_argument("--axis", required=True,
                       help="config path, e.g. system.g_ghz")
    sweep.add_argument("--values", required=True,
                       help="comma-separated axis values")
    common(sub.add_parser("spectrum", help="frequency-domain observables"))
    cal = sub.add_parser("calibrate", help="run a calibration fit")
    common(cal)
    cal.add_argument("--data", default=None,
                     help="two- or three-column data file")
    common(sub.add_parser("optimize", help="scan pulse durations"))
    rep = sub.add_parser("reproduce", help="run a pinned figure recipe")
    rep.add_argument("figure", help="figure id, e.g. fig1c")
    rep.add_argument("--out", default="out")
    rep.add_argument("--workers", type=int, default=os.cpu_count())
    return parser


def _prepare(args):
    cfg = load_config_file(args.config)
    if args.dry_run:
        sys.stdout.write(serialize_config(cfg))
        return cfg, None
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    return cfg, outdir


def _traj_csv(path, traj):
    return write_csv(path, {
        "time_ns": traj.times() / 1e-9,
        "occupancy": traj.occupancy,
        "sx": traj.bloch[:, 0],
        "sy": traj.bloch[:, 1],
        "sz": traj.bloch[:, 2],
        "trace_error": traj.trace_error,
    })


def _run_trajectory(cfg: RunConfig):
    p = cfg.system.build()
    grid = cfg.grid.build()
    env = cfg.pulse.build(grid)
    scfg = cfg.solver.build()
    kind = cfg.experiment.kind
    opts = cfg.experiment.options
    if kind == "phase_average":
        return phase_averaged_trajectory(p, env,
                                         int(opts.get("n_phases", 8)), scfg)
    return propagate(p, env, scfg)


def cmd_simulate(args) -> int:
    cfg, outdir = _prepare(args)
    if outdir is None:
        return 0
    manifest = ResultManifest(command="simulate",
                              config_hash=config_hash(cfg),
                              tool_version=__version__)
    kind = cfg.experiment.kind
    if kind == "ladder":
        direct, sideband = ladder_occupancies(
            cfg.system.build(), cfg.pulse.build(cfg.grid.build()),
            cfg.solver.build())
        manifest.add_output(_traj_csv(outdir / "ladder_direct.csv", direct))
        manifest.add_output(_traj_csv(outdir / "ladder_sideband.csv",
                                      sideband))
    elif kind == "enhancement":
        opts = cfg.experiment.options
        p = cfg.system.build()
        grid = cfg.grid.build()
        env = cfg.pulse.build(grid)
        scfg = cfg.solver.build()
        n_phases = int(opts.get("n_phases", 8))
        traj_g = phase_averaged_trajectory(p, env, n_phases, scfg)
        traj_0 = propagate(replace(p, g=0.0), env, scfg)
        ser = enhancement(traj_g, traj_0,
                          floor=float(opts.get("floor", 1e-4)))
        manifest.add_output(_traj_csv(outdir / "trajectory_driven.csv",
                                      traj_g))
        manifest.add_output(_traj_csv(outdir / "trajectory_reference.csv",
                                      traj_0))
        manifest.add_output(write_csv(outdir / "enhancement.csv", {
            "time_ns": ser.times() / 1e-9,
            "c": np.where(ser.valid_mask, ser.c, 0.0),
            "valid": ser.valid_mask.astype(float),
        }))
    else:
        traj = _run_trajectory(cfg)
        manifest.add_output(_traj_csv(outdir / "trajectory.csv", traj))
    manifest.write(outdir)
    return 0


def _axis_target(cfg: RunConfig, path: str):
    parts = path.split(".")
    if len(parts) != 2:
        raise ConfigError(f"axis path {path!r} must be section.field")
    section, fld = parts
    if not hasattr(cfg, section):
        raise ConfigError(f"unknown config section {section!r}")
    sec = getattr(cfg, section)
    if fld not in getattr(sec, "__dataclass_fields__", {}):
        raise ConfigError(f"unknown field {path!r}")
    current = getattr(sec, fld)
    if not isinstance(current, (int, float)) or isinstance(current, bool):
        raise ConfigError(f"{path!r} is not a numeric field")
    return section, fld


def _with_axis_value(cfg: RunConfig, section: str, fld: str, value: float):
    sec = replace(getattr(cfg, section), **{fld: value})
    return replace(cfg, **{section: sec})


def _sweep_worker(payload):
    cfg, section, fld, value = payload
    traj = _run_trajectory(_with_axis_value(cfg, section, fld, value))
    return value, traj


def cmd_sweep(args) -> int:
    cfg, outdir = _prepare(args)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse --values: {exc}") from None
    if not values:
        raise ConfigError("--values is empty")
    section, fld = _axis_target(cfg, args.axis)
    if outdir is None:
        return 0
    manifest = ResultManifest(command="sweep",
                              config_hash=config_hash(cfg),
                              tool_version=__version__)
    payloads = [(cfg, section, fld, v) for v in values]
    workers = max(1, int(args.workers or 1))
    if workers > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_worker, payloads))
    else:
        results = [_sweep_worker(p) for p in payloads]

    matrix = None
    for value, traj in results:
        tag = format(value, "g").replace(".", "p").replace("-", "m")
        manifest.add_output(
            _traj_csv(outdir / f"sweep_{fld}_{tag}.csv", traj))
        if matrix is None:
            matrix = {"time_ns": traj.times() / 1e-9}
        matrix[format(value, "g")] = traj.occupancy
    manifest.add_output(write_csv(outdir / "sweep_matrix.csv", matrix))
    manifest.write(outdir)
    return 0


def _spectrum_csv(path, spec: SpectrumData):
    cols = {"detuning_ghz": spec.detuning_axis / GHZ_ANG,
            "intensity": spec.intensity}
    if spec.components:
        for name in ("coherent", "incoherent"):
            if name in spec.components:
                cols[name] = spec.components[name]
    return write_csv(path, cols)


def cmd_spectrum(args) -> int:
    cfg, outdir = _prepare(args)
    if outdir is None:
        return 0
    p = cfg.system.build()
    opts = cfg.experiment.options
    kind = cfg.experiment.kind
    scfg = cfg.solver.build()
    rabi = cfg.pulse.peak_rabi_ghz * GHZ_ANG
    manifest = ResultManifest(command="spectrum",
                              config_hash=config_hash(cfg),
                              tool_version=__version__)
    if kind == "spectrum_cw":
        spec = cw_scattering_spectrum(
            p, rabi, window=float(opts.get("window_ns", 20.0)) * 1e-9,
            n_period_samples=int(opts.get("n_period_samples", 16)))
        manifest.add_output(_spectrum_csv(outdir / "spectrum.csv", spec))
    elif kind == "spectrum_excitation":
        lo = float(opts.get("delta_min_ghz", -5.0))
        hi = float(opts.get("delta_max_ghz", 5.0))
        step = float(opts.get("delta_step_ghz", 0.05))
        axis = GHZ_ANG * np.round(np.arange(lo, hi + step / 2, step), 9)
        spec = excitation_spectrum(p, rabi, axis, scfg)
        manifest.add_output(_spectrum_csv(outdir / "spectrum.csv", spec))
    elif kind in ("filtered_time", "filtered_spectrum"):
        grid = cfg.grid.build()
        env = cfg.pulse.build(grid)
        bw = float(opts.get("bandwidth_mhz", 1000.0)) * 1e6
        if kind == "filtered_time":
            filt = FilterSpec(
                center_detuning=float(opts.get("center_ghz", 0.0))
                * GHZ_ANG, bandwidth_fwhm=bw)
            sig = filtered_time_signal(p, env, filt, cfg=scfg)
            manifest.add_output(write_csv(outdir / "filtered_time.csv", {
                "time_ns": sig.times() / 1e-9, "signal": sig.signal}))
        else:
            lo = float(opts.get("axis_min_ghz", -5.5))
            hi = float(opts.get("axis_max_ghz", 2.0))
            step = float(opts.get("axis_step_ghz", 0.05))
            axis = GHZ_ANG * np.round(np.arange(lo, hi + step / 2, step), 9)
            spec = integrated_filtered_spectrum(p, env, bw, axis, cfg=scfg)
            manifest.add_output(_spectrum_csv(outdir / "spectrum.csv",
                                              spec))
    else:
        raise ConfigError(f"experiment.kind {kind!r} is not a spectrum kind")
    manifest.write(outdir)
    return 0


def cmd_calibrate(args) -> int:
    cfg, outdir = _prepare(args)
    if outdir is None:
        return 0
    opts = cfg.experiment.options
    kind = opts.get("kind", "g_vs_power")
    manifest = ResultManifest(command="calibrate",
                              config_hash=config_hash(cfg),
                              tool_version=__version__)
    if kind == "g_vs_power":
        if args.data:
            pts = load_table_file(args.data, columns=(2,))
        else:
            rng = np.random.default_rng(0 if args.seed is None
                                        else args.seed)
            a_true = float(opts.get("true_coefficient", 2.0e9))
            dbm = np.linspace(-50.0, -35.0, 12)
            p_w = 10.0 ** ((dbm - 30.0) / 10.0)
            g = a_true * np.sqrt(p_w) * (1.0 + 0.05 * rng.standard_normal(
                dbm.shape))
            pts = np.column_stack([dbm, g])
        fit = fit_g_vs_power(pts)
    elif kind == "modulation_index":
        if not args.data:
            raise ConfigError("modulation_index needs --data spectrum CSV")
        table = load_table_file(args.data, columns=(2, 3))
        spec = SpectrumData(detuning_axis=table[:, 0] * GHZ_ANG,
                            intensity=table[:, 1])
        fit = fit_modulation_index(spec, cfg.system.build().omega_saw)
    elif kind == "occupancy_scale":
        if not args.data:
            raise ConfigError("occupancy_scale needs --data counts file")
        pts = load_table_file(args.data, columns=(2, 3))[:, :2]
        cal = PowerCalibration(
            coefficient=float(opts.get("power_coefficient", 4.5e13)))
        fit = fit_occupancy_scale(pts, cfg.system.build(), cal,
                                  cfg=cfg.solver.build())
    else:
        raise ConfigError(f"unknown calibration kind {kind!r}")

    manifest.add_output(write_json(outdir / "fit.json", {
        "model": fit.model,
        "parameters": fit.parameters,
        "errors": fit.errors,
        "residual_norm": fit.residual_norm,
        "extras": fit.extras,
    }))
    manifest.write(outdir)
    return 0


def cmd_optimize(args) -> int:
    cfg, outdir = _prepare(args)
    if outdir is None:
        return 0
    p = cfg.system.build()
    grid = cfg.grid.build()
    scfg = cfg.solver.build()
    opts = cfg.experiment.options
    pulse_cfg = cfg.pulse

    def family(duration):
        return replace(pulse_cfg, duration_ns=duration / 1e-9).build(grid)

    objective = opts.get("objective", "min_bare_occupancy")
    eval_time = opts.get("eval_time_ns")
    optima = optimize_pulse_duration(
        p, family, objective,
        (float(opts.get("min_duration_ns", 0.1)) * 1e-9,
         float(opts.get("max_duration_ns", 1.0)) * 1e-9),
        cfg=scfg,
        eval_time=None if eval_time is None else float(eval_time) * 1e-9)
    manifest = ResultManifest(command="optimize",
                              config_hash=config_hash(cfg),
                              tool_version=__version__)
    manifest.add_output(write_csv(outdir / "optima.csv", {
        "duration_ps": [d / 1e-12 for d, _ in optima],
        "objective": [v for _, v in optima],
    }))
    manifest.write(outdir)
    return 0


def cmd_reproduce(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    files, checks = run_figure(args.figure, outdir, workers=args.workers)
    digest = hashlib.sha256(f"figure:{args.figure}".encode()).hexdigest()
    manifest = ResultManifest(command=f"reproduce {args.figure}",
                              config_hash=digest,
                              tool_version=__version__)
    for f in files:
        manifest.add_output(f)
    for c in checks:
        manifest.add_check(c)
        sys.stdout.write(c.line() + "\n")
    manifest.write(outdir)
    return 0


_HANDLERS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "spectrum": cmd_spectrum,
    "calibrate": cmd_calibrate,
    "optimize": cmd_optimize,
    "reproduce": cmd_reproduce,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (ConfigError, ParameterError) as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return 2
    except (FormatError,) as exc:
        sys.stderr.write(f"data format error: {exc}\n")
        return 3
    except (IntegrationError, ConvergenceError, AnalysisError,
            FitError) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 4


if __name__ == "__main__":
    sys.exit(main())
