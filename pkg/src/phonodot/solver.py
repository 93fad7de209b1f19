"""Lindblad propagation of the driven two-level state under a pulse
envelope.

:func:`propagate` evolves a density matrix and returns occupancy/Bloch
time series; :func:`propagate_conditional` evolves an arbitrary 2x2
operator under the same generator, which is what the quantum-regression
correlation machinery in :mod:`phonodot.spectroscopy` builds on.

Collapse channels are fixed per the physical model: sqrt(gamma_qd) *
sigma_minus (radiative decay) and sqrt(gamma_z) * sigma_z (pure
dephasing).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernel import BACKEND, propagate_kernel
from .errors import IntegrationError, ParameterError
from .linalg import GROUND, validate_density
from .model import SystemParams
from .pulses import PulseEnvelope, TimeGrid

__all__ = [
    "SolverConfig",
    "Trajectory",
    "OperatorTrajectory",
    "propagate",
    "propagate_conditional",
    "kernel_backend",
]


def kernel_backend() -> str:
    """Name of the active propagation backend ('compiled' or 'python')."""
    return BACKEND


@dataclass(frozen=True)
class SolverConfig:
    """Integrator tolerances and output sampling."""

    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = 50e-12
    output_dt: float = 1e-12

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ParameterError("tolerances must be positive")
        if self.max_step <= 0 or self.output_dt <= 0:
            raise ParameterError("max_step and output_dt must be positive")


@dataclass(frozen=True)
class Trajectory:
    """Sampled observables from one propagation."""

    grid: TimeGrid
    occupancy: np.ndarray
    bloch: np.ndarray  # shape (n, 3): <sigma_x>, <sigma_y>, <sigma_z>
    trace_error: np.ndarray
    params: SystemParams
    envelope_meta: dict = field(default_factory=dict)

    def times(self) -> np.ndarray:
        return self.grid.times()

    def min_eigenvalue(self) -> np.ndarray:
        """Smaller density-matrix eigenvalue at each sample (trace-normed)."""
        radius = np.sqrt((self.bloch**2).sum(axis=1))
        return 0.5 * (1.0 - radius)


@dataclass(frozen=True)
class OperatorTrajectory:
    """Time series of a 2x2 operator evolved under the Lindblad generator."""

    grid: TimeGrid
    matrices: np.ndarray  # shape (n, 2, 2) complex

    def times(self) -> np.ndarray:
        return self.grid.times()


def _output_grid(env: PulseEnvelope, cfg: SolverConfig,
                 t_start: float | None = None) -> TimeGrid:
    t0 = env.grid.t0 if t_start is None else t_start
    span = env.grid.t_end - t0
    if span < cfg.output_dt:
        raise ParameterError("envelope grid does not cover the output window")
    n = int(math.floor(span / cfg.output_dt + 1e-9)) + 1
    return TimeGrid(t0=t0, dt=cfg.output_dt, n=n)


def _run_kernel(p: SystemParams, env: PulseEnvelope, cfg: SolverConfig,
                y0: np.ndarray, out: TimeGrid) -> np.ndarray:
    states, _, _, fail_t = propagate_kernel(
        y0, out.t0, out.dt, out.n,
        p.delta, p.g, p.omega_saw, p.phi, p.gamma_qd, p.gamma_z,
        env.grid.t0, env.grid.dt, env.values,
        cfg.rel_tol, cfg.abs_tol, cfg.max_step)
    if not math.isnan(fail_t):
        raise IntegrationError(
            f"step size underflow at t = {fail_t * 1e9:.6f} ns", t=fail_t)
    return states


def propagate(p: SystemParams, env: PulseEnvelope,
              cfg: SolverConfig | None = None,
              init: np.ndarray | None = None) -> Trajectory:
    """Evolve a density matrix under the pulsed Hamiltonian.

    The initial state defaults to the ground state. Output samples lie on
    a uniform grid with spacing ``cfg.output_dt`` spanning the envelope
    grid. Raises :class:`IntegrationError` if the error control cannot
    meet the tolerance, and checks trace preservation on the result.
    """
    cfg = cfg or SolverConfig()
    if init is None:
        init = GROUND
    validate_density(init)
    out = _output_grid(env, cfg)
    y0 = np.array([init[0, 0], init[0, 1], init[1, 0], init[1, 1]],
                  dtype=np.complex128)
    states = _run_kernel(p, env, cfg, y0, out)

    occ = states[:, 3].real.copy()
    trace_error = np.abs(states[:, 0] + states[:, 3] - 1.0)
    bloch = np.empty((out.n, 3))
    bloch[:, 0] = (states[:, 1] + states[:, 2]).real
    bloch[:, 1] = (1j * (states[:, 2] - states[:, 1])).real
    bloch[:, 2] = (states[:, 3] - states[:, 0]).real

    if trace_error.max() > 1e-7:
        raise IntegrationError(
            f"trace error {trace_error.max():.2e} exceeds 1e-7; "
            "tighten tolerances")
    if occ.min() < -1e-9 or occ.max() > 1.0 + 1e-9:
        raise IntegrationError("occupancy left [0, 1] beyond tolerance")

    return Trajectory(grid=out, occupancy=occ, bloch=bloch,
                      trace_error=trace_error, params=p,
                      envelope_meta=dict(env.meta))


def propagate_conditional(p: SystemParams, env: PulseEnvelope,
                          cfg: SolverConfig | None,
                          init_operator: np.ndarray,
                          t_start: float) -> OperatorTrajectory:
    """Evolve an arbitrary operator under the Lindblad generator.

    The generator is linear, so ``init_operator`` does not need to be a
    density matrix; quantum-regression evolution of sigma_minus * rho is
    the intended use. Evolution starts at ``t_start`` (which must lie
    inside the envelope grid) and runs to the end of the envelope grid.
    """
    cfg = cfg or SolverConfig()
    init_operator = np.asarray(init_operator, dtype=np.complex128)
    if init_operator.shape != (2, 2):
        raise ParameterError("init_operator must be 2x2")
    if t_start < env.grid.t0 - 1e-15 or t_start > env.grid.t_end:
        raise ParameterError("t_start outside the envelope grid")
    out = _output_grid(env, cfg, t_start=t_start)
    y0 = np.array([init_operator[0, 0], init_operator[0, 1],
                   init_operator[1, 0], init_operator[1, 1]],
                  dtype=np.complex128)
    states = _run_kernel(p, env, cfg, y0, out)
    return OperatorTrajectory(grid=out,
                              matrices=states.reshape(out.n, 2, 2))
