"""Frequency-domain observables from two-time dipole correlations.

The first-order correlation G1(t1, t2) = <sigma_plus(t2) sigma_minus(t1)>
is computed with the quantum regression theorem: sigma_minus * rho(t1) is
propagated forward with the same Lindblad generator as the state, and the
sigma_plus expectation is read off along the way.

Frequency conventions. Everything is computed in the frame rotating with
the pump; a rotating-frame component exp(-i*w*tau) of the emitted field
corresponds to laboratory frequency omega_pump + w. Spectra are reported
on the detuning axis relative to the emitter frequency,

    detuning_axis = p.delta + w,

so the pump (Rayleigh) line sits at p.delta and emitter luminescence at 0.

Detection filters are causal single-pole Lorentzians with intensity
transmission FWHM ``bandwidth_fwhm``; their amplitude impulse response is
h(t) = k exp(-k t) exp(-i w_c t) with k = pi * bandwidth_fwhm and w_c the
filter center in the rotating frame. The time-resolved filtered photon
rate is the standard physical-spectrum quadratic form

    I_F(t) = gamma_qd * integral h(t-t1) h*(t-t2) G1(t1, t2) dt1 dt2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import AnalysisError, ConvergenceError, ParameterError
from .linalg import GROUND
from .model import SystemParams, TWO_PI
from .pulses import PulseEnvelope, TimeGrid, cw_envelope
from .solver import SolverConfig, propagate_conditional

__all__ = [
    "FilterSpec",
    "SpectrumData",
    "CorrelationGrid",
    "FilteredSignal",
    "two_time_correlation",
    "cw_scattering_spectrum",
    "excitation_spectrum",
    "filtered_time_signal",
    "integrated_filtered_spectrum",
]


@dataclass(frozen=True)
class FilterSpec:
    """Causal single-pole Lorentzian detection filter.

    ``center_detuning`` is quoted on the emitter-relative detuning axis
    (rad/s); ``bandwidth_fwhm`` is the intensity-transmission FWHM in Hz.
    """

    center_detuning: float
    bandwidth_fwhm: float

    def __post_init__(self):
        if self.bandwidth_fwhm <= 0:
            raise ParameterError("filter bandwidth must be positive")

    @property
    def kappa(self) -> float:
        """Amplitude ring-down rate, pi * bandwidth_fwhm (1/s)."""
        return math.pi * self.bandwidth_fwhm


@dataclass(frozen=True)
class SpectrumData:
    """Intensity versus emitter-relative detuning (relative units)."""

    detuning_axis: np.ndarray
    intensity: np.ndarray
    components: dict | None = None
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CorrelationGrid:
    """G1(t1, t2) on a square time grid; Hermitian, diagonal = occupancy."""

    grid: TimeGrid
    values: np.ndarray  # (n, n) complex

    def times(self) -> np.ndarray:
        return self.grid.times()

    def occupancy(self) -> np.ndarray:
        return np.real(np.diagonal(self.values))


@dataclass(frozen=True)
class FilteredSignal:
    """Time-resolved photon rate behind a detection filter."""

    grid: TimeGrid
    signal: np.ndarray
    filter: FilterSpec

    def times(self) -> np.ndarray:
        return self.grid.times()


def _clip_small_negative(x: np.ndarray, tol: float = 1e-9):
    floor = float(x.min(initial=0.0))
    scale = max(float(np.abs(x).max(initial=0.0)), 1e-300)
    if floor < -tol * scale:
        raise AnalysisError(f"intensity has negative values ({floor:.3e}) "
                            "beyond the windowing tolerance")
    return np.maximum(x, 0.0), floor


def two_time_correlation(p: SystemParams, env: PulseEnvelope,
                         grid: TimeGrid,
                         cfg: SolverConfig | None = None,
                         init: np.ndarray | None = None) -> CorrelationGrid:
    """Dipole correlation G1 on ``grid`` x ``grid`` under pulsed driving.

    Row t1: the state is propagated to t1, seeded as sigma_minus*rho(t1),
    and evolved to the end of the grid; the lower triangle follows from
    G1(t2, t1) = conj(G1(t1, t2)).
    """
    if grid.t0 < env.grid.t0 - 1e-15 or grid.t_end > env.grid.t_end + 1e-15:
        raise ParameterError("correlation grid must lie inside the envelope")
    cfg = cfg or SolverConfig(output_dt=grid.dt)
    if abs(cfg.output_dt - grid.dt) > 1e-18:
        cfg = SolverConfig(rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol,
                           max_step=cfg.max_step, output_dt=grid.dt)
    rho0 = GROUND if init is None else init

    span_env = PulseEnvelope(grid=env.grid, values=env.values,
                             meta=dict(env.meta))
    states = propagate_conditional(p, span_env, cfg, rho0,
                                   grid.t0).matrices
    n = grid.n
    values = np.zeros((n, n), dtype=np.complex128)
    times = grid.times()
    for i in range(n):
        rho_t1 = states[i]
        # sigma_minus @ rho -> [[rho_eg, rho_ee], [0, 0]]
        seed = np.array([[rho_t1[1, 0], rho_t1[1, 1]], [0.0, 0.0]],
                        dtype=np.complex128)
        if i == n - 1:
            values[i, i] = seed[0, 1]
            break
        row = propagate_conditional(p, span_env, cfg, seed, times[i])
        values[i, i:] = row.matrices[: n - i, 0, 1]
    idx_l, idx_u = np.tril_indices(n, -1)
    values[idx_l, idx_u] = np.conj(values[idx_u, idx_l])

    diag = np.diagonal(values)
    if np.abs(diag.imag).max(initial=0.0) > 1e-9:
        raise AnalysisError("correlation diagonal is not real")
    return CorrelationGrid(grid=grid, values=values)


def _steady_state_run(p: SystemParams, rabi0: float, window: float,
                      n_period_samples: int, cfg: SolverConfig):
    """Drive to the quasi-steady state; return (envelope, t1 samples,
    per-sample density matrices)."""
    if p.gamma_qd <= 0:
        raise ConvergenceError("steady state needs gamma_qd > 0")
    t_saw = p.saw_period()
    t_settle = max(10.0 / p.gamma_qd, 20.0 * t_saw)
    t_total = t_settle + t_saw + window + 2 * cfg.output_dt
    grid = TimeGrid.from_span(0.0, t_total, cfg.output_dt)
    env = cw_envelope(grid, rabi0)

    run = propagate_conditional(p, env, cfg, GROUND, 0.0)
    occ = run.matrices[:, 1, 1].real
    times = run.grid.times()
    per = max(1, int(round(t_saw / cfg.output_dt)))
    i_settle = int(round(t_settle / cfg.output_dt))
    last = occ[i_settle - per:i_settle].mean()
    prev = occ[i_settle - 2 * per:i_settle - per].mean()
    if abs(last - prev) > 1e-4:
        raise ConvergenceError(
            f"occupancy drift {abs(last - prev):.2e} per mechanical period; "
            "not in steady state")

    t1s = t_settle + t_saw * np.arange(n_period_samples) / n_period_samples
    idx = np.round((t1s - times[0]) / cfg.output_dt).astype(int)
    return env, times[idx], run.matrices[idx]


def cw_scattering_spectrum(p: SystemParams, rabi0: float,
                           window: float = 20e-9,
                           n_period_samples: int = 16,
                           cfg: SolverConfig | None = None,
                           apodization_rate: float | None = None
                           ) -> SpectrumData:
    """Emission spectrum under continuous driving, with the mechanical
    sidebands resolved.

    After settling into the driven quasi-steady state, G1(t1, t1+tau) is
    computed for t1 sampled over one mechanical period and averaged,
    apodized with exp(-apodization_rate*tau) (default gamma_qd/2) and
    Fourier transformed over tau. The coherent part is built from
    <sigma_plus><sigma_minus> on the same samples; the remainder is the
    incoherent component.
    """
    if rabi0 < 0:
        raise ParameterError("rabi0 must be >= 0")
    if n_period_samples < 1:
        raise ParameterError("n_period_samples must be >= 1")
    cfg = cfg or SolverConfig(output_dt=5e-12)
    apod = p.gamma_qd / 2.0 if apodization_rate is None else apodization_rate
    env, t1s, rhos = _steady_state_run(p, rabi0, window, n_period_samples,
                                       cfg)

    dt = cfg.output_dt
    n_tau = int(math.floor(window / dt)) + 1
    g_total = np.zeros(n_tau, dtype=np.complex128)
    g_coh = np.zeros(n_tau, dtype=np.complex128)
    for t1, rho in zip(t1s, rhos):
        seed = np.array([[rho[1, 0], rho[1, 1]], [0.0, 0.0]],
                        dtype=np.complex128)
        lam = propagate_conditional(p, env, cfg, seed, t1)
        g_total += lam.matrices[:n_tau, 0, 1]
        fwd = propagate_conditional(p, env, cfg, rho, t1)
        # <sigma_plus(t1+tau)> <sigma_minus(t1)> = rho_ge(t1+tau) rho_eg(t1)
        g_coh += fwd.matrices[:n_tau, 0, 1] * rho[1, 0]
    g_total /= len(t1s)
    g_coh /= len(t1s)

    tau = dt * np.arange(n_tau)
    w_apod = np.exp(-apod * tau)
    w_apod[0] *= 0.5  # trapezoid end correction at tau = 0

    def _transform(series):
        spec = np.fft.fft(series * w_apod, n=n_tau)
        return np.fft.fftshift(spec.real) * dt

    omega = TWO_PI * np.fft.fftshift(np.fft.fftfreq(n_tau, d=dt))
    total = _transform(g_total)
    coherent = _transform(g_coh)
    incoherent = _transform(g_total - g_coh)
    total, floor = _clip_small_negative(total, tol=1e-6)
    coherent, _ = _clip_small_negative(coherent, tol=1e-6)
    incoherent = np.maximum(incoherent, 0.0)

    meta = {"window": window, "apodization_rate": apod,
            "n_period_samples": n_period_samples, "rabi0": rabi0,
            "clipped_min": floor, "bin_hz": 1.0 / (n_tau * dt)}
    return SpectrumData(detuning_axis=p.delta + omega, intensity=total,
                        components={"coherent": coherent,
                                    "incoherent": incoherent},
                        meta=meta)


def excitation_spectrum(p: SystemParams, rabi0: float, delta_axis,
                        cfg: SolverConfig | None = None) -> SpectrumData:
    """Total scattered rate versus pump detuning under continuous driving.

    For each detuning the system is driven to its quasi-steady state and
    the response gamma_qd * (occupancy averaged over one mechanical
    period) is recorded. Acoustic driving adds absorption satellites at
    multiples of the mechanical frequency.
    """
    delta_axis = np.asarray(delta_axis, dtype=float)
    if delta_axis.size == 0 or not np.all(np.isfinite(delta_axis)):
        raise ParameterError("delta_axis must be finite and non-empty")
    if rabi0 < 0:
        raise ParameterError("rabi0 must be >= 0")
    cfg = cfg or SolverConfig(output_dt=5e-12)
    if p.gamma_qd <= 0:
        raise ConvergenceError("steady state needs gamma_qd > 0")

    from dataclasses import replace

    t_saw = p.saw_period()
    t_settle = max(10.0 / p.gamma_qd, 20.0 * t_saw)
    grid = TimeGrid.from_span(0.0, t_settle + t_saw, cfg.output_dt)
    env = cw_envelope(grid, rabi0)
    per = max(1, int(round(t_saw / cfg.output_dt)))

    response = np.empty(delta_axis.shape)
    for i, delta in enumerate(delta_axis):
        run = propagate_conditional(replace(p, delta=float(delta)), env,
                                    cfg, GROUND, 0.0)
        occ = run.matrices[:, 1, 1].real
        last = occ[-per:].mean()
        prev = occ[-2 * per:-per].mean()
        if abs(last - prev) > 1e-4:
            raise ConvergenceError(
                f"no steady state at detuning {delta / TWO_PI / 1e9:.3f} GHz")
        response[i] = p.gamma_qd * last
    return SpectrumData(detuning_axis=delta_axis.copy(), intensity=response,
                        meta={"rabi0": rabi0, "kind": "excitation"})


def _filter_center_rotating(p: SystemParams, filt: FilterSpec) -> float:
    return filt.center_detuning - p.delta


def filtered_time_signal(p: SystemParams, env: PulseEnvelope,
                         filt: FilterSpec,
                         corr: CorrelationGrid | None = None,
                         grid: TimeGrid | None = None,
                         cfg: SolverConfig | None = None) -> FilteredSignal:
    """Photon rate behind a narrowband filter as a function of time.

    Evaluates the physical-spectrum quadratic form of the correlation grid
    with the causal filter kernel. Pass ``corr`` to reuse a precomputed
    correlation (recommended when scanning filters).
    """
    if corr is None:
        if grid is None:
            grid = TimeGrid.from_span(env.grid.t0,
                                      env.grid.t_end - env.grid.t0, 5e-12)
        corr = two_time_correlation(p, env, grid, cfg)
    times = corr.times()
    dt = corr.grid.dt
    w_c = _filter_center_rotating(p, filt)
    if abs(w_c) > math.pi / dt:
        warnings.warn("filter center beyond the correlation Nyquist band; "
                      "signal will alias", stacklevel=2)
    kappa = filt.kappa
    # kern[i, k] = h(t_k - t_i) dt  (complex, causal)
    lag = times[None, :] - times[:, None]
    causal = lag >= 0
    kern = np.where(causal,
                    np.exp(-(kappa + 1j * w_c) * np.maximum(lag, 0.0)), 0.0)
    kern = kern * (kappa * dt)
    acc = corr.values @ np.conj(kern)
    signal = np.einsum("ik,ik->k", kern, acc).real * p.gamma_qd
    signal, floor = _clip_small_negative(signal, tol=1e-9)
    return FilteredSignal(grid=corr.grid, signal=signal, filter=filt)


def integrated_filtered_spectrum(p: SystemParams, env: PulseEnvelope,
                                 bandwidth: float, detuning_axis,
                                 corr: CorrelationGrid | None = None,
                                 grid: TimeGrid | None = None,
                                 cfg: SolverConfig | None = None
                                 ) -> SpectrumData:
    """Time-integrated filtered photon counts versus filter center.

    The time integral of the filtered rate has a closed form for the
    single-pole filter: counts(w_c) = gamma_qd * sum_ij G1_ij
    (kappa/2) exp(-kappa|ti-tj|) exp(-i w_c (tj-ti)) dt^2, evaluated per
    anti-diagonal so the filter scan costs O(n) per detuning.
    """
    detuning_axis = np.asarray(detuning_axis, dtype=float)
    if detuning_axis.size == 0:
        raise ParameterError("detuning_axis must not be empty")
    if bandwidth <= 0:
        raise ParameterError("bandwidth must be positive")
    if corr is None:
        if grid is None:
            grid = TimeGrid.from_span(env.grid.t0,
                                      env.grid.t_end - env.grid.t0, 5e-12)
        corr = two_time_correlation(p, env, grid, cfg)
    n = corr.grid.n
    dt = corr.grid.dt
    kappa = math.pi * bandwidth
    offsets = np.arange(n)
    decay = 0.5 * kappa * np.exp(-kappa * dt * offsets) * dt * dt

    # c[m] = sum of G1 over the m-th superdiagonal (t2 - t1 = m dt)
    diag_sums = np.array([corr.values.diagonal(m).sum() for m in range(n)])
    diag_sums *= decay

    w_c = detuning_axis - p.delta  # rotating-frame filter centers
    phases = np.exp(-1j * np.outer(w_c, dt * offsets))
    counts = (phases[:, 0] * diag_sums[0]
              + 2.0 * (phases[:, 1:] @ diag_sums[1:])).real
    counts *= p.gamma_qd
    counts, floor = _clip_small_negative(counts, tol=1e-9)
    meta = {"bandwidth": bandwidth, "clipped_min": floor,
            "kind": "integrated_filtered"}
    return SpectrumData(detuning_axis=detuning_axis.copy(),
                        intensity=counts, meta=meta)
