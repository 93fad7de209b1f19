"""Physical parameters and Hamiltonians of the driven, acoustically
modulated two-level emitter.

All rates and frequencies are stored internally as angular frequencies
(rad/s). Human-facing constructors take plain frequencies in GHz and times
in ns, matching how device numbers are usually quoted; use
:meth:`SystemParams.from_ghz`.

In the frame rotating with the optical drive, the Hamiltonian is

    H(t)/hbar = 1/2 [-delta + g cos(omega_saw t + phi)] sigma_z
                + Omega0(t)/2 sigma_x

where delta = omega_pump - omega_emitter is the optical detuning, g the
semiclassical acoustic modulation amplitude (g = g0 sqrt(n) for n coherent
phonons), and Omega0(t) the real-valued resonant Rabi envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, ParameterError
from .linalg import SIGMA_X, SIGMA_Z

__all__ = [
    "TWO_PI",
    "GHZ",
    "NS",
    "PS",
    "SystemParams",
    "LadderParams",
    "rotating_frame_hamiltonian",
    "generalized_rabi",
    "ladder_models",
    "phonon_scattering_rates",
]

TWO_PI = 2.0 * math.pi
GHZ = 1e9  # plain-frequency unit used by from_ghz constructors
NS = 1e-9
PS = 1e-12


@dataclass(frozen=True)
class SystemParams:
    """Rates and frequencies of the emitter-resonator system (rad/s).

    delta
        Optical pump detuning, omega_pump - omega_emitter. Red-detuned
        phonon-assisted operation uses delta = -omega_saw.
    omega_saw
        Mechanical mode angular frequency; must be > 0.
    g
        Semiclassical modulation amplitude g = g0*sqrt(n_phonons).
    phi
        Mechanical drive phase at t = 0.
    gamma_qd, gamma_z
        Radiative decay rate and pure-dephasing rate.
    g0, n_phonons
        Optional single-phonon rate and mean phonon number; only needed by
        the reduced ladder models. When both are given they must be
        consistent with ``g``.
    """

    delta: float
    omega_saw: float
    g: float = 0.0
    phi: float = 0.0
    gamma_qd: float = 0.0
    gamma_z: float = 0.0
    g0: float | None = None
    n_phonons: float | None = None

    def __post_init__(self):
        if self.omega_saw <= 0:
            raise ParameterError("omega_saw must be positive")
        for name in ("g", "gamma_qd", "gamma_z"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0")
        if self.g0 is not None and self.g0 < 0:
            raise ParameterError("g0 must be >= 0")
        if self.n_phonons is not None and self.n_phonons < 0:
            raise ParameterError("n_phonons must be >= 0")
        if self.g0 is not None and self.n_phonons is not None and self.g > 0:
            implied = self.g0 * math.sqrt(self.n_phonons)
            if abs(self.g - implied) > 1e-9 * self.g:
                raise ParameterError(
                    f"inconsistent coupling: g={self.g} but "
                    f"g0*sqrt(n)={implied}")

    @classmethod
    def from_ghz(cls, delta_ghz, omega_saw_ghz, g_ghz=0.0, phi=0.0,
                 gamma_qd_ghz=0.0, gamma_z_ghz=0.0, g0_ghz=None,
                 n_phonons=None) -> "SystemParams":
        """Build from plain frequencies in GHz (angular = 2*pi * value)."""
        conv = TWO_PI * GHZ
        return cls(
            delta=delta_ghz * conv,
            omega_saw=omega_saw_ghz * conv,
            g=g_ghz * conv,
            phi=phi,
            gamma_qd=gamma_qd_ghz * conv,
            gamma_z=gamma_z_ghz * conv,
            g0=None if g0_ghz is None else g0_ghz * conv,
            n_phonons=n_phonons,
        )

    def with_phi(self, phi: float) -> "SystemParams":
        return replace(self, phi=phi)

    def saw_period(self) -> float:
        return TWO_PI / self.omega_saw


@dataclass(frozen=True)
class LadderParams:
    """One reduced two-level channel of the emitter-resonator ladder."""

    rabi: float
    detuning: float
    label: str = field(default="direct")

    def __post_init__(self):
        if self.label not in ("direct", "sideband"):
            raise ParameterError(f"unknown ladder label {self.label!r}")
        if self.label == "sideband" and self.detuning != 0.0:
            raise ParameterError("sideband channel is resonant by convention")


def rotating_frame_hamiltonian(p: SystemParams, rabi_at_t: float,
                               t: float) -> np.ndarray:
    """Rotating-frame Hamiltonian (units of angular frequency) at time t."""
    if rabi_at_t < 0:
        raise ParameterError("Rabi envelope must be real and >= 0")
    az = 0.5 * (-p.delta + p.g * math.cos(p.omega_saw * t + p.phi))
    return az * SIGMA_Z + 0.5 * rabi_at_t * SIGMA_X


def generalized_rabi(rabi0: float, delta: float) -> float:
    """Oscillation rate sqrt(rabi0**2 + delta**2) of detuned driving."""
    if rabi0 < 0:
        raise ParameterError("rabi0 must be >= 0")
    return math.hypot(rabi0, delta)


def _require_ladder_inputs(p: SystemParams):
    if p.g0 is None or p.n_phonons is None:
        raise ConfigError("ladder models need g0 and n_phonons")


def ladder_models(p: SystemParams, rabi0: float):
    """Reduced two-level channels for direct and single-phonon excitation.

    Returns ``(direct, sideband)`` where the direct channel oscillates at
    (rabi0, delta) and the sideband channel is resonant with rate
    g0 * rabi0 * sqrt(n) / omega_saw. The rate is implemented exactly as
    this product; the full modulated simulation resolves an effective rate
    rabi0 * J1(g/omega_saw), about half this value for small modulation
    (see ``experiments.sideband_rabi_oracle``, which measures it).
    """
    _require_ladder_inputs(p)
    if rabi0 < 0:
        raise ParameterError("rabi0 must be >= 0")
    gamma_side = p.g0 * rabi0 * math.sqrt(p.n_phonons) / p.omega_saw
    direct = LadderParams(rabi=rabi0, detuning=p.delta, label="direct")
    sideband = LadderParams(rabi=gamma_side, detuning=0.0, label="sideband")
    return direct, sideband


def phonon_scattering_rates(p: SystemParams, rabi0: float):
    """Single-phonon coupling rates of the quantized-resonator expansion.

    Returns ``(rate_minus, rate_plus)`` with
    rate_minus = g0*rabi0*sqrt(n+1)/omega_saw and
    rate_plus = g0*rabi0*sqrt(n)/omega_saw. Labels follow the source
    convention (minus <-> sqrt(n+1)) even though the standard ladder-operator
    roles would be reversed.
    """
    _require_ladder_inputs(p)
    if rabi0 < 0:
        raise ParameterError("rabi0 must be >= 0")
    base = p.g0 * rabi0 / p.omega_saw
    return (base * math.sqrt(p.n_phonons + 1.0),
            base * math.sqrt(p.n_phonons))
