"""Optical pulse envelopes Omega0(t) on a uniform time grid.

Envelopes are amplitude-like (rad/s Rabi rate, always >= 0). The etalon
filter acts on this amplitude; square the values for intensity-style plots.

Envelope files are UTF-8 text, whitespace-delimited, two columns
(time_ns, relative_intensity), '#' starts a comment. Loading converts
intensity to amplitude with a square root and rescales to a requested peak.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, ParameterError
from .model import NS

__all__ = [
    "TimeGrid",
    "PulseEnvelope",
    "PowerCalibration",
    "square_pulse",
    "etalon_filtered_pulse",
    "cw_envelope",
    "power_to_rabi",
    "load_envelope",
    "load_envelope_file",
    "parse_envelope_text",
]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid: n samples starting at t0 with spacing dt (s)."""

    t0: float
    dt: float
    n: int

    def __post_init__(self):
        if self.dt <= 0:
            raise ParameterError("grid spacing must be positive")
        if self.n < 2:
            raise ParameterError("grid needs at least 2 samples")

    @property
    def t_end(self) -> float:
        return self.t0 + (self.n - 1) * self.dt

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    @classmethod
    def from_span(cls, t0: float, span: float, dt: float) -> "TimeGrid":
        return cls(t0=t0, dt=dt, n=int(round(span / dt)) + 1)


@dataclass(frozen=True)
class PulseEnvelope:
    """Sampled Rabi envelope on a :class:`TimeGrid`.

    ``values`` is non-negative, zero at the first grid point, and its
    maximum equals ``meta['peak_rabi']``.
    """

    grid: TimeGrid
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise ParameterError("envelope length does not match grid")
        if not np.all(np.isfinite(values)):
            raise ParameterError("envelope contains non-finite values")
        if np.any(values < 0):
            raise ParameterError("envelope must be non-negative")
        if values[0] != 0.0:
            raise ParameterError("envelope must vanish at the grid start")
        peak = self.meta.get("peak_rabi")
        vmax = float(values.max())
        if peak is not None and vmax > 0 and abs(vmax - peak) > 1e-9 * peak:
            raise ParameterError("meta peak_rabi inconsistent with samples")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def peak(self) -> float:
        return float(self.values.max())


@dataclass(frozen=True)
class PowerCalibration:
    """Square-root law between average optical power and Rabi rate."""

    coefficient: float  # rad/s per sqrt(W)

    def __post_init__(self):
        if self.coefficient <= 0:
            raise ParameterError("calibration coefficient must be positive")


def _raised_cosine_ramp(x):
    # x in [0, 1] -> smooth 0..1, half amplitude at x = 1/2
    return 0.5 * (1.0 - np.cos(np.pi * np.clip(x, 0.0, 1.0)))


def square_pulse(grid: TimeGrid, start: float, duration: float, rise: float,
                 fall: float, peak: float) -> PulseEnvelope:
    """Flat-top pulse with raised-cosine edges and FWHM equal to duration.

    ``start`` is where the leading edge leaves zero. With zero rise/fall the
    pulse is an ideal rectangle of width ``duration``.
    """
    if duration <= 0:
        raise ParameterError("duration must be positive")
    if rise < 0 or fall < 0:
        raise ParameterError("rise and fall must be >= 0")
    if peak < 0:
        raise ParameterError("peak must be >= 0")
    if duration < 0.5 * (rise + fall):
        raise ParameterError("duration shorter than the ramp half-widths")
    end = start + 0.5 * rise + duration + 0.5 * fall  # envelope support end
    if start < grid.t0 or end > grid.t_end:
        raise ParameterError("pulse extends outside the time grid")

    t = grid.times()
    eps = 1e-6 * grid.dt  # absorb rounding at exact breakpoints
    fall_start = end - fall
    vals = np.zeros(grid.n)
    top = (t >= start + rise - eps) & (t <= fall_start + eps)
    vals[top] = 1.0
    if rise > 0:
        on = (t >= start - eps) & (t < start + rise - eps)
        vals[on] = _raised_cosine_ramp((t[on] - start) / rise)
    else:
        vals[(t >= start - eps) & (t <= fall_start + eps)] = 1.0
    if fall > 0:
        off = (t > fall_start + eps) & (t <= end + eps)
        vals[off] = _raised_cosine_ramp((end - t[off]) / fall)
    vals *= peak
    if grid.t0 == start:
        vals[0] = 0.0  # envelope invariant; the edge turns on just after t0
    meta = {"shape": "square", "peak_rabi": peak, "duration": duration,
            "rise": rise, "fall": fall, "start": start}
    return PulseEnvelope(grid=grid, values=vals, meta=meta)


def etalon_filtered_pulse(pulse: PulseEnvelope,
                          bandwidth_fwhm: float) -> PulseEnvelope:
    """Pass the envelope amplitude through a causal single-pole filter.

    The impulse response is h(t) = k exp(-k t) for t >= 0 with k = pi *
    bandwidth_fwhm, so after the input stops the amplitude rings down with
    1/e time 1/(pi*bandwidth_fwhm). The result is rescaled so its maximum
    equals the input's nominal peak.
    """
    if bandwidth_fwhm <= 0:
        raise ParameterError("filter bandwidth must be positive")
    kappa = math.pi * bandwidth_fwhm
    x = pulse.values
    dt = pulse.grid.dt
    decay = math.exp(-kappa * dt)
    # exact update for piecewise-linear input
    w_new = 1.0 - decay - (1.0 - decay - kappa * dt * decay) / (kappa * dt)
    w_old = (1.0 - decay - kappa * dt * decay) / (kappa * dt)
    y = np.empty_like(x)
    y[0] = 0.0
    acc = 0.0
    for k in range(1, x.shape[0]):
        acc = acc * decay + w_new * x[k] + w_old * x[k - 1]
        y[k] = acc
    peak = pulse.meta.get("peak_rabi", pulse.peak())
    ymax = float(y.max())
    if ymax > 0 and peak > 0:
        y *= peak / ymax
    meta = dict(pulse.meta)
    meta.update(shape="etalon_" + str(pulse.meta.get("shape", "pulse")),
                filter_bandwidth=bandwidth_fwhm, peak_rabi=peak)
    return PulseEnvelope(grid=pulse.grid, values=y, meta=meta)


def cw_envelope(grid: TimeGrid, rabi: float,
                turn_on: float = 50e-12) -> PulseEnvelope:
    """Continuous drive with a short raised-cosine turn-on at the grid start.

    Used for steady-state spectroscopy; the turn-on keeps the envelope zero
    at t0 and is forgotten once the system settles.
    """
    if rabi < 0:
        raise ParameterError("rabi must be >= 0")
    if turn_on <= 0 or turn_on > 0.5 * (grid.t_end - grid.t0):
        raise ParameterError("turn_on must fit inside the grid")
    t = grid.times() - grid.t0
    vals = rabi * _raised_cosine_ramp(t / turn_on)
    vals[t >= turn_on] = rabi
    vals[0] = 0.0
    meta = {"shape": "cw", "peak_rabi": rabi, "turn_on": turn_on}
    return PulseEnvelope(grid=grid, values=vals, meta=meta)


def power_to_rabi(power: float, cal: PowerCalibration) -> float:
    """Convert average optical power (W) to a resonant Rabi rate (rad/s)."""
    if power < 0:
        raise ParameterError("power must be >= 0")
    return cal.coefficient * math.sqrt(power)


def load_envelope(samples, peak: float, grid: TimeGrid) -> PulseEnvelope:
    """Resample measured (time, intensity) pairs onto the simulation grid.

    Times are in seconds and must be strictly increasing. Intensity is
    converted to amplitude with a square root, linearly interpolated, zero
    outside the sampled range, and scaled so the maximum equals ``peak``.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != 2 or samples.shape[0] < 2:
        raise FormatError("need at least two (time, intensity) samples")
    t_s, intens = samples[:, 0], samples[:, 1]
    if np.any(np.diff(t_s) <= 0):
        raise FormatError("sample times must be strictly increasing")
    if np.any(intens < 0):
        raise FormatError("intensities must be >= 0")
    if peak < 0:
        raise ParameterError("peak must be >= 0")
    amp = np.sqrt(intens)
    vals = np.interp(grid.times(), t_s, amp, left=0.0, right=0.0)
    vmax = float(vals.max())
    if vmax > 0:
        vals *= peak / vmax
    vals[0] = 0.0
    meta = {"shape": "measured", "peak_rabi": peak if vmax > 0 else 0.0}
    return PulseEnvelope(grid=grid, values=vals, meta=meta)


def parse_envelope_text(text: str) -> np.ndarray:
    """Parse the two-column envelope format; returns (time_s, intensity)."""
    rows = []
    for lineno, line in enumerate(io.StringIO(text), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if len(parts) != 2:
            raise FormatError(f"line {lineno}: expected 2 columns, "
                              f"got {len(parts)}")
        try:
            t_ns, intensity = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
        rows.append((t_ns * NS, intensity))
    if not rows:
        raise FormatError("envelope file contains no data rows")
    return np.asarray(rows, dtype=float)


def load_envelope_file(path, peak: float, grid: TimeGrid) -> PulseEnvelope:
    with open(path, "r", encoding="utf-8") as fh:
        samples = parse_envelope_text(fh.read())
    env = load_envelope(samples, peak, grid)
    env.meta["source"] = str(path)
    return env
