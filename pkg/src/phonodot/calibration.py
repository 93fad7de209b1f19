"""Calibration fits: modulation index from sideband spectra, coupling rate
versus microwave power, and the counts-to-occupancy scale.

These are tiny, well-conditioned least-squares problems; they are solved
with a damped Gauss-Newton iteration and analytic Jacobians rather than a
general optimization framework.

Imported experimental data use the same whitespace-delimited text format
as envelope files: two columns (x, value) or three (x, value, sigma),
with '#' comments.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import jv

from .errors import FitError, FormatError, ParameterError
from .model import SystemParams
from .pulses import PowerCalibration, TimeGrid, square_pulse
from .solver import SolverConfig, propagate
from .spectroscopy import SpectrumData

__all__ = [
    "CalibrationFit",
    "fit_modulation_index",
    "fit_g_vs_power",
    "fit_occupancy_scale",
    "simulated_readout_occupancy",
    "dbm_to_watts",
    "parse_table_text",
    "load_table_file",
]


@dataclass(frozen=True)
class CalibrationFit:
    """Result of one calibration fit."""

    model: str
    parameters: dict
    errors: dict
    residual_norm: float
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.residual_norm < 0:
            raise ParameterError("residual_norm must be >= 0")
        for name, err in self.errors.items():
            if err < 0:
                raise ParameterError(f"negative error for {name}")


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def parse_table_text(text: str, columns=(2, 3)) -> np.ndarray:
    """Parse whitespace-delimited numeric rows; '#' starts a comment."""
    rows = []
    width = None
    for lineno, line in enumerate(io.StringIO(text), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if width is None:
            if len(parts) not in columns:
                raise FormatError(f"line {lineno}: expected {columns} "
                                  "columns")
            width = len(parts)
        elif len(parts) != width:
            raise FormatError(f"line {lineno}: inconsistent column count")
        try:
            rows.append([float(v) for v in parts])
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from None
    if not rows:
        raise FormatError("data file contains no rows")
    return np.asarray(rows, dtype=float)


def load_table_file(path, columns=(2, 3)) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_table_text(fh.read(), columns)


def _line_weights(axis: np.ndarray, intensity: np.ndarray, carrier: float,
                  omega_saw: float, n_sidebands: int):
    """Decompose the spectrum into Lorentzian lines at the expected comb
    positions with a common width, least-squares in the weights.

    Returns (weights indexed -n..n, half_width). Fitting the shape rather
    than integrating bands keeps the slowly decaying tail of the carrier
    from biasing the weak sidebands.
    """
    positions = carrier + omega_saw * np.arange(-n_sidebands,
                                                n_sidebands + 1)
    sel = np.abs(axis - carrier) <= (n_sidebands + 0.5) * omega_saw
    x = axis[sel]
    y = intensity[sel]
    if x.size < 2 * (2 * n_sidebands + 1):
        raise FitError("spectrum too coarse for sideband decomposition")
    bin_w = float(np.median(np.abs(np.diff(x))))

    def solve(half_width):
        basis = 1.0 / (1.0 + ((x[:, None] - positions[None, :])
                              / half_width) ** 2)
        w, *_ = np.linalg.lstsq(basis, y, rcond=None)
        r = y - basis @ w
        return w, float(r @ r)

    # profile the common width on a log grid, then golden-section refine
    widths = np.geomspace(0.5 * bin_w, 0.25 * omega_saw, 40)
    sses = [solve(a)[1] for a in widths]
    i = int(np.argmin(sses))
    lo = widths[max(i - 1, 0)]
    hi = widths[min(i + 1, len(widths) - 1)]
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = math.log(lo), math.log(hi)
    c1, c2 = b - golden * (b - a), a + golden * (b - a)
    f1, f2 = solve(math.exp(c1))[1], solve(math.exp(c2))[1]
    for _ in range(60):
        if b - a < 1e-4:
            break
        if f1 <= f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - golden * (b - a)
            f1 = solve(math.exp(c1))[1]
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + golden * (b - a)
            f2 = solve(math.exp(c2))[1]
    half_width = math.exp(0.5 * (a + b))
    w, _ = solve(half_width)
    return w, half_width


def _bessel_ratio(chi: float, k: int) -> float:
    return (jv(k, chi) / jv(0, chi)) ** 2


def _bessel_ratio_deriv(chi: float, k: int) -> float:
    j0 = jv(0, chi)
    jk = jv(k, chi)
    djk = 0.5 * (jv(k - 1, chi) - jv(k + 1, chi))
    dj0 = -jv(1, chi)
    return 2.0 * (jk / j0) * (djk * j0 - jk * dj0) / j0**2


def fit_modulation_index(spectrum: SpectrumData, omega_saw: float,
                         carrier_detuning: float | None = None,
                         n_sidebands: int = 2) -> CalibrationFit:
    """Extract the frequency-modulation index from sideband weights.

    Line weights at the carrier and its first ``n_sidebands`` sideband
    pairs are obtained by a common-width Lorentzian decomposition, and the
    sideband/carrier ratios are fit to (J_k(chi)/J_0(chi))**2. Works on
    the coherent component when the spectrum provides one. Returns chi and
    the implied coupling g = omega_saw * chi.
    """
    if omega_saw <= 0:
        raise ParameterError("omega_saw must be positive")
    axis = np.asarray(spectrum.detuning_axis)
    intensity = np.asarray(
        spectrum.components["coherent"]
        if spectrum.components and "coherent" in spectrum.components
        else spectrum.intensity)
    if carrier_detuning is None:
        carrier_detuning = float(axis[np.argmax(intensity)])

    weights, half_width = _line_weights(axis, intensity, carrier_detuning,
                                        omega_saw, n_sidebands)
    w0 = weights[n_sidebands]
    if w0 <= 0:
        raise FitError("no carrier weight found")
    ratios = []
    orders = []
    for k in range(1, n_sidebands + 1):
        w_k = 0.5 * (weights[n_sidebands + k] + weights[n_sidebands - k])
        if k == 1 and w_k <= 1e-4 * w0:
            raise FitError("no resolvable sidebands; modulation too weak")
        if w_k > 0:
            ratios.append(w_k / w0)
            orders.append(k)
    ratios = np.asarray(ratios)

    chi = 2.0 * math.sqrt(ratios[0])  # small-index limit J1/J0 ~ chi/2
    lam = 1e-4
    for _ in range(100):
        model = np.array([_bessel_ratio(chi, k) for k in orders])
        res = ratios - model
        jac = np.array([_bessel_ratio_deriv(chi, k) for k in orders])
        jtj = float(jac @ jac)
        if jtj == 0:
            break
        step = float(jac @ res) / (jtj * (1.0 + lam))
        chi_new = chi + step
        model_new = np.array([_bessel_ratio(chi_new, k) for k in orders])
        if float(((ratios - model_new) ** 2).sum()) <= float((res**2).sum()):
            if abs(step) < 1e-12 * max(abs(chi), 1e-12):
                chi = chi_new
                break
            chi = chi_new
            lam = max(lam * 0.3, 1e-12)
        else:
            lam *= 10.0
            if lam > 1e10:
                break
    model = np.array([_bessel_ratio(chi, k) for k in orders])
    res = ratios - model
    resid = float(np.sqrt((res**2).sum()))
    jac = np.array([_bessel_ratio_deriv(chi, k) for k in orders])
    dof = max(len(orders) - 1, 1)
    chi_err = (math.sqrt((res**2).sum() / dof / float(jac @ jac))
               if float(jac @ jac) > 0 else 0.0)
    return CalibrationFit(
        model="bessel_index",
        parameters={"chi": float(chi), "g": float(chi * omega_saw)},
        errors={"chi": chi_err, "g": chi_err * omega_saw},
        residual_norm=resid,
        extras={"orders": list(orders), "ratios": ratios.tolist(),
                "carrier_detuning": carrier_detuning,
                "line_half_width": half_width})


def fit_g_vs_power(points) -> CalibrationFit:
    """One-parameter fit g = a * sqrt(P) to (P_microwave[dBm], g) points."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise FitError("need at least two (dBm, g) points")
    p_w = np.array([dbm_to_watts(v) for v in pts[:, 0]])
    g = pts[:, 1]
    sp = np.sqrt(p_w)
    denom = float(sp @ sp)
    if denom == 0:
        raise FitError("all powers are zero")
    a = float(sp @ g) / denom
    res = g - a * sp
    resid = float(np.sqrt((res**2).sum()))
    dof = max(len(g) - 1, 1)
    a_err = math.sqrt(float(res @ res) / dof / denom)
    return CalibrationFit(model="sqrt_power",
                          parameters={"coefficient": a},
                          errors={"coefficient": a_err},
                          residual_norm=resid)


def simulated_readout_occupancy(powers, p: SystemParams,
                                cal: PowerCalibration,
                                pulse_start: float = 0.0,
                                pulse_duration: float = 130e-12,
                                pulse_edges: float = 15e-12,
                                readout: float = 140e-12,
                                bin_width: float = 16e-12,
                                cfg: SolverConfig | None = None
                                ) -> np.ndarray:
    """Simulated occupancy in the readout bin for each average power.

    Forward model shared by :func:`fit_occupancy_scale` and fixture
    generation: a flat-top pulse at the calibrated peak Rabi rate,
    occupancy averaged over the bin centered on ``readout``.
    """
    powers = np.asarray(powers, dtype=float)
    pulse_end = pulse_start + 0.5 * pulse_edges + pulse_duration
    if readout < pulse_end:
        raise ParameterError("readout bin overlaps the pulse window")
    grid = TimeGrid.from_span(0.0, readout + bin_width + 60e-12, 1e-12)
    occ = np.empty(powers.shape)
    for i, power in enumerate(powers):
        if power < 0:
            raise ParameterError("powers must be >= 0")
        peak = cal.coefficient * math.sqrt(power)
        env = square_pulse(grid, pulse_start, pulse_duration, pulse_edges,
                           pulse_edges, peak)
        traj = propagate(p, env, cfg)
        sel = np.abs(traj.times() - readout) <= 0.5 * bin_width
        occ[i] = float(traj.occupancy[sel].mean())
    return occ


def fit_occupancy_scale(counts, p: SystemParams, cal: PowerCalibration,
                        pulse_start: float = 0.0,
                        pulse_duration: float = 130e-12,
                        pulse_edges: float = 15e-12,
                        readout: float = 140e-12,
                        bin_width: float = 16e-12,
                        cfg: SolverConfig | None = None) -> CalibrationFit:
    """Scale factor between measured count rates and simulated occupancy.

    ``counts`` is a list of (average power W, counts per second) read out
    in a short time bin immediately after the pulse. The simulation is run
    at each power and a single multiplicative factor eta with
    counts = eta * occupancy is fit. The pulse is considered over once its
    trailing edge crosses half maximum.
    """
    pts = np.asarray(counts, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise FitError("need at least three (power, counts) points")
    occ = simulated_readout_occupancy(
        pts[:, 0], p, cal, pulse_start=pulse_start,
        pulse_duration=pulse_duration, pulse_edges=pulse_edges,
        readout=readout, bin_width=bin_width, cfg=cfg)

    meas = pts[:, 1]
    denom = float(occ @ occ)
    if denom == 0 or np.all(meas == 0):
        raise FitError("degenerate data: zero occupancy or zero counts")
    if np.ptp(meas) == 0:
        raise FitError("degenerate data: counts do not vary with power")
    eta = float(occ @ meas) / denom
    res = meas - eta * occ
    resid = float(np.sqrt((res**2).sum()))
    dof = max(len(meas) - 1, 1)
    eta_err = math.sqrt(float(res @ res) / dof / denom)
    return CalibrationFit(
        model="occupancy_scale",
        parameters={"eta": eta},
        errors={"eta": eta_err},
        residual_norm=resid,
        extras={"simulated_occupancy": occ.tolist(),
                "implied_occupancy": (meas / eta).tolist()})
