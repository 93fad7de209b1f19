"""Composite numerical experiments: mechanical-phase averages, enhancement
curves, reduced-ladder comparisons, pulse-duration optimization, and power
sweeps.

The phonon drive phase is not synchronized to the pulse in the measurements
these reproduce, so observable trajectories are averaged over a uniform set
of phases (8 by default). Enhancement is the occupancy ratio against the
undriven (g = 0) reference minus one, masked where the reference occupancy
is too small for the ratio to be meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AnalysisError, ParameterError
from .model import SystemParams, TWO_PI, generalized_rabi
from .pulses import PowerCalibration, PulseEnvelope, TimeGrid, square_pulse
from .solver import SolverConfig, Trajectory, propagate

__all__ = [
    "EnhancementSeries",
    "SweepResult",
    "phase_averaged_trajectory",
    "enhancement",
    "enhancement_spike_peak",
    "ladder_occupancies",
    "sideband_rabi_oracle",
    "optimize_pulse_duration",
    "rabi_power_sweep",
]

DEFAULT_ENHANCEMENT_FLOOR = 1e-4


@dataclass(frozen=True)
class EnhancementSeries:
    """Occupancy ratio minus one, defined where the reference is above
    ``floor``; masked samples hold NaN."""

    grid: TimeGrid
    c: np.ndarray
    valid_mask: np.ndarray
    floor: float

    def times(self) -> np.ndarray:
        return self.grid.times()

    def peak(self):
        """(time, value) of the maximum enhancement on the valid mask."""
        if not self.valid_mask.any():
            raise AnalysisError("no valid samples in enhancement series")
        idx = np.nanargmax(np.where(self.valid_mask, self.c, -np.inf))
        return float(self.times()[idx]), float(self.c[idx])


@dataclass(frozen=True)
class SweepResult:
    """Scalar summaries (or trajectories) along one swept parameter."""

    axis_name: str
    axis_values: np.ndarray
    values: object
    provenance: str = ""

    def __post_init__(self):
        ax = np.asarray(self.axis_values, dtype=float)
        if ax.size >= 2:
            d = np.diff(ax)
            if not (np.all(d > 0) or np.all(d < 0)):
                raise ParameterError("sweep axis must be strictly monotonic")
        object.__setattr__(self, "axis_values", ax)


def phase_averaged_trajectory(p: SystemParams, env: PulseEnvelope,
                              n_phases: int = 8,
                              cfg: SolverConfig | None = None) -> Trajectory:
    """Mean trajectory over n uniformly spaced mechanical phases.

    Occupancy and Bloch components are averaged arithmetically in fixed
    phase order; trace diagnostics keep the worst case.
    """
    if n_phases < 1:
        raise ParameterError("n_phases must be >= 1")
    occ = bloch = trace = None
    base = None
    for k in range(n_phases):
        traj = propagate(p.with_phi(p.phi + TWO_PI * k / n_phases), env, cfg)
        if occ is None:
            base = traj
            occ = traj.occupancy.copy()
            bloch = traj.bloch.copy()
            trace = traj.trace_error.copy()
        else:
            occ += traj.occupancy
            bloch += traj.bloch
            trace = np.maximum(trace, traj.trace_error)
    occ /= n_phases
    bloch /= n_phases
    meta = dict(env.meta)
    meta["phase_average"] = n_phases
    return Trajectory(grid=base.grid, occupancy=occ, bloch=bloch,
                      trace_error=trace, params=p, envelope_meta=meta)


def enhancement(traj_g: Trajectory, traj_0: Trajectory,
                floor: float = DEFAULT_ENHANCEMENT_FLOOR) -> EnhancementSeries:
    """Occupancy ratio (driven over reference) minus one.

    Samples where the reference occupancy falls below ``floor`` are masked:
    there the ratio diverges without carrying signal.
    """
    if floor <= 0:
        raise ParameterError("floor must be positive")
    if traj_g.grid != traj_0.grid:
        raise ParameterError("trajectories live on different grids")
    ref = traj_0.occupancy
    mask = ref >= floor
    c = np.full(ref.shape, np.nan)
    c[mask] = traj_g.occupancy[mask] / ref[mask] - 1.0
    return EnhancementSeries(grid=traj_g.grid, c=c, valid_mask=mask,
                             floor=floor)


def _scaled_envelope(env: PulseEnvelope, scale: float) -> PulseEnvelope:
    meta = dict(env.meta)
    meta["peak_rabi"] = meta.get("peak_rabi", env.peak()) * scale
    return PulseEnvelope(grid=env.grid, values=env.values * scale, meta=meta)


def ladder_occupancies(p: SystemParams, env: PulseEnvelope,
                       cfg: SolverConfig | None = None):
    """Occupancies of the two reduced ladder channels.

    The direct channel is the bare detuned two-level system driven by the
    envelope; the sideband channel is a resonant two-level system driven by
    the envelope scaled by g0*sqrt(n)/omega_saw. Both start from the ground
    state, with no acoustic modulation of their own.
    """
    from .model import _require_ladder_inputs

    _require_ladder_inputs(p)
    scale = p.g0 * math.sqrt(p.n_phonons) / p.omega_saw
    direct_params = replace(p, g=0.0, g0=None, n_phonons=None)
    sideband_params = replace(p, delta=0.0, g=0.0, g0=None, n_phonons=None)
    direct = propagate(direct_params, env, cfg)
    sideband = propagate(sideband_params, _scaled_envelope(env, scale), cfg)
    return direct, sideband


def _running_mean(x: np.ndarray, window: int) -> np.ndarray:
    if window <= 1:
        return x.copy()
    kernel = np.ones(window) / window
    pad = window // 2
    padded = np.concatenate([np.full(pad, x[0]), x, np.full(pad, x[-1])])
    return np.convolve(padded, kernel, mode="same")[pad:pad + x.shape[0]]


def sideband_rabi_oracle(p: SystemParams, rabi0: float,
                         cfg: SolverConfig | None = None,
                         n_phases: int = 8,
                         fit_window=(0.3e-9, 1.2e-9)) -> float:
    """Measure the effective phonon-assisted transfer rate from the full
    modulated propagation.

    Runs the red-detuned (delta = -omega_saw), undamped system under a
    constant drive and extracts the rate from the short-time limit of the
    slow population transfer, occupancy ~ (rate*t/2)**2, which holds
    regardless of the drive-induced level shift that detunes the
    long-time sin(rate*t/2)**2 oscillation. The fast micromotion is
    removed by phase averaging, cascaded running means over the
    generalized-Rabi and acoustic periods, and subtraction of the g = 0
    reference. This is the measurement side of the ladder-rate
    comparison; see ``model.ladder_models``.
    """
    if p.g == 0:
        return 0.0
    if p.g / p.omega_saw >= 0.5:
        raise ParameterError("oracle valid only for g/omega_saw < 0.5")
    if abs(p.delta + p.omega_saw) > 1e-6 * p.omega_saw:
        raise ParameterError("oracle requires delta = -omega_saw")
    if p.gamma_qd != 0 or p.gamma_z != 0:
        raise ParameterError("oracle requires an undamped system")

    cfg = cfg or SolverConfig()
    t_lo, t_hi = fit_window
    grid = TimeGrid.from_span(-10e-12, t_hi + 1.0e-9, cfg.output_dt)
    env = square_pulse(grid, start=0.0,
                       duration=grid.t_end - grid.t0 - 15e-12,
                       rise=0.0, fall=0.0, peak=rabi0)

    w_fast = max(1, int(round(TWO_PI / generalized_rabi(rabi0, p.delta)
                              / cfg.output_dt)))
    w_saw = max(1, int(round(p.saw_period() / cfg.output_dt)))

    def smoothed(params):
        traj = phase_averaged_trajectory(params, env, n_phases, cfg)
        sel = traj.times() >= 0
        y = _running_mean(_running_mean(traj.occupancy[sel], w_fast), w_saw)
        return traj.times()[sel], y

    t, y_mod = smoothed(p)
    _, y_ref = smoothed(replace(p, g=0.0))
    sel = (t >= t_lo) & (t <= t_hi)
    t_ns = t[sel] / 1e-9
    diff = (y_mod - y_ref)[sel]
    basis = np.column_stack([np.ones_like(t_ns), t_ns**2])
    coef, *_ = np.linalg.lstsq(basis, diff, rcond=None)
    resid = float(np.sqrt(np.mean((diff - basis @ coef) ** 2)))
    amp = float(np.abs(diff).max())
    if coef[1] <= 0 or resid > 0.05 * amp:
        raise AnalysisError(
            f"sideband-rate fit residual {resid:.3g} exceeds 5% of the "
            f"transfer amplitude {amp:.3g}")
    return float(2.0 * math.sqrt(coef[1]) / 1e-9)


def enhancement_spike_peak(series: EnhancementSeries,
                           reference: Trajectory):
    """Largest enhancement spike, evaluated at the reference minima.

    Enhancement peaks sit where the undriven occupancy swings toward zero;
    between those spikes the series is micromotion-dominated and its raw
    argmax is not a stable statistic. Returns (time, value) of the largest
    spike center. Minima below the series floor are excluded.
    """
    occ = reference.occupancy
    interior = (occ[1:-1] <= occ[:-2]) & (occ[1:-1] <= occ[2:])
    idx = np.nonzero(interior)[0] + 1
    idx = idx[series.valid_mask[idx]]
    # keep one sample per dip: drop indices adjacent to a lower neighbor
    keep = []
    for i in idx:
        if keep and i - keep[-1] < 10:
            if occ[i] < occ[keep[-1]]:
                keep[-1] = i
        else:
            keep.append(i)
    if not keep:
        raise AnalysisError("no usable reference minima above the floor")
    keep = np.asarray(keep)
    best = keep[np.argmax(series.c[keep])]
    return float(series.times()[best]), float(series.c[best])


def _pulse_end(env: PulseEnvelope) -> float:
    meta = env.meta
    if {"start", "duration", "rise", "fall"} <= set(meta):
        return (meta["start"] + 0.5 * meta["rise"] + meta["duration"]
                + 0.5 * meta["fall"])
    nz = np.nonzero(env.values)[0]
    if nz.size == 0:
        raise ParameterError("envelope is identically zero")
    return float(env.grid.times()[nz[-1]])


def optimize_pulse_duration(p: SystemParams, pulse_family, objective,
                            search_range, cfg: SolverConfig | None = None,
                            eval_time: float | None = None,
                            scan_step: float = 5e-12,
                            refine_tol: float = 0.5e-12,
                            n_phases: int = 8):
    """Scan pulse duration for the best state-preparation windows.

    ``pulse_family`` maps a duration (s) to a :class:`PulseEnvelope`.
    ``objective`` selects what is evaluated for each candidate duration:

    - ``"min_bare_occupancy"``: occupancy of the undriven (g = 0) system at
      the end of the pulse; local minima are returned.
    - ``"max_enhancement_at"``: phase-averaged enhancement at ``eval_time``;
      local maxima are returned.

    A coarse scan at ``scan_step`` locates local optima, each then refined
    by golden-section search to ``refine_tol``. Returns a list of
    ``(duration, objective_value)`` sorted best-first.
    """
    lo, hi = float(search_range[0]), float(search_range[1])
    if not hi > lo:
        raise ParameterError("search range must have positive length")
    if objective not in ("min_bare_occupancy", "max_enhancement_at"):
        raise ParameterError(f"unknown objective {objective!r}")
    if objective == "max_enhancement_at" and eval_time is None:
        raise ParameterError("max_enhancement_at needs eval_time")
    sign = 1.0 if objective == "min_bare_occupancy" else -1.0

    bare = replace(p, g=0.0)

    def cost(duration: float) -> float:
        env = pulse_family(duration)
        if objective == "min_bare_occupancy":
            traj = propagate(bare, env, cfg)
            idx = min(int(round((_pulse_end(env) - traj.grid.t0)
                                / traj.grid.dt)), traj.grid.n - 1)
            return float(traj.occupancy[idx])
        traj_g = phase_averaged_trajectory(p, env, n_phases, cfg)
        traj_0 = propagate(bare, env, cfg)
        series = enhancement(traj_g, traj_0)
        idx = int(round((eval_time - series.grid.t0) / series.grid.dt))
        if not (0 <= idx < series.grid.n) or not series.valid_mask[idx]:
            raise AnalysisError("enhancement undefined at eval_time")
        return -float(series.c[idx])

    n_scan = max(int(math.floor((hi - lo) / scan_step)) + 1, 3)
    durations = lo + scan_step * np.arange(n_scan)
    durations = durations[durations <= hi]
    values = np.array([cost(d) for d in durations])

    golden = (math.sqrt(5.0) - 1.0) / 2.0
    results = []
    for i in range(1, len(durations) - 1):
        if values[i] <= values[i - 1] and values[i] <= values[i + 1]:
            a, b = durations[i - 1], durations[i + 1]
            c1 = b - golden * (b - a)
            c2 = a + golden * (b - a)
            f1, f2 = cost(c1), cost(c2)
            while (b - a) > refine_tol:
                if f1 <= f2:
                    b, c2, f2 = c2, c1, f1
                    c1 = b - golden * (b - a)
                    f1 = cost(c1)
                else:
                    a, c1, f1 = c1, c2, f2
                    c2 = a + golden * (b - a)
                    f2 = cost(c2)
            d_best = 0.5 * (a + b)
            v = cost(d_best)
            results.append((float(d_best), v if sign > 0 else -v))
    # best-first: smallest occupancy, or largest enhancement
    results.sort(key=lambda r: sign * r[1])
    return results


def rabi_power_sweep(p: SystemParams, powers, cal: PowerCalibration,
                     readout_time: float,
                     pulse_start: float = 0.0,
                     pulse_duration: float = 130e-12,
                     pulse_edges: float = 15e-12,
                     cfg: SolverConfig | None = None,
                     grid: TimeGrid | None = None) -> SweepResult:
    """Occupancy at a fixed readout time versus average optical power.

    Each power is converted to a peak Rabi rate through the square-root
    calibration and applied as a short flat-top pulse; reading out after
    the pulse maps out the power-domain Rabi oscillation. The pulse is
    considered over once its trailing edge crosses half maximum.
    """
    powers = np.asarray(powers, dtype=float)
    if np.any(powers < 0):
        raise ParameterError("powers must be >= 0")
    end = pulse_start + 0.5 * pulse_edges + pulse_duration
    if readout_time <= end:
        raise ParameterError("readout time must fall after the pulse")
    if grid is None:
        grid = TimeGrid.from_span(0.0, max(readout_time + 50e-12, 0.3e-9),
                                  1e-12)
    occ = np.empty(powers.shape)
    for i, power in enumerate(powers):
        peak = cal.coefficient * math.sqrt(power)
        env = square_pulse(grid, pulse_start, pulse_duration,
                           pulse_edges, pulse_edges, peak)
        traj = propagate(p, env, cfg)
        idx = int(round((readout_time - grid.t0) / traj.grid.dt))
        occ[i] = traj.occupancy[idx]
    return SweepResult(axis_name="power_w", axis_values=powers, values=occ)
