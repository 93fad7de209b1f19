"""Dense 2x2 complex kernels: Pauli algebra, density-matrix diagnostics,
and a reference Lindblad right-hand side.

Basis convention, fixed package-wide: basis order is (|g>, |e>) with
sigma_z = |e><e| - |g><g| = diag(-1, +1), so the ground state sits at the
south pole of the Bloch sphere. The lowering operator is
sigma_minus = |g><e|.

The propagation hot path lives in ``phonodot._kernel`` with the Lindblad
right-hand side expanded by hand; :func:`lindblad_rhs` here is the plain
matrix-algebra form and serves as the independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

__all__ = [
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "SIGMA_MINUS",
    "SIGMA_PLUS",
    "IDENTITY",
    "GROUND",
    "EXCITED",
    "BlochVector",
    "bloch_vector",
    "occupancy",
    "lindblad_rhs",
    "is_hermitian",
    "validate_density",
    "min_eigenvalue",
]


def _const(m):
    a = np.array(m, dtype=np.complex128)
    a.setflags(write=False)
    return a


SIGMA_X = _const([[0, 1], [1, 0]])
SIGMA_Y = _const([[0, 1j], [-1j, 0]])
SIGMA_Z = _const([[-1, 0], [0, 1]])
SIGMA_MINUS = _const([[0, 1], [0, 0]])  # |g><e|
SIGMA_PLUS = _const([[0, 0], [1, 0]])  # |e><g|
IDENTITY = _const([[1, 0], [0, 1]])

GROUND = _const([[1, 0], [0, 0]])  # |g><g|
EXCITED = _const([[0, 0], [0, 1]])  # |e><e|


@dataclass(frozen=True)
class BlochVector:
    """Expectation values (<sigma_x>, <sigma_y>, <sigma_z>) of a TLS state."""

    sx: float
    sy: float
    sz: float

    def norm(self) -> float:
        return float(np.sqrt(self.sx**2 + self.sy**2 + self.sz**2))

    def as_array(self) -> np.ndarray:
        return np.array([self.sx, self.sy, self.sz])


def is_hermitian(m: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.all(np.abs(m - m.conj().T) <= tol))


def validate_density(rho: np.ndarray, trace_tol: float = 1e-6,
                     herm_tol: float = 1e-9, eig_floor: float = -1e-9) -> None:
    """Raise :class:`ParameterError` unless ``rho`` is a valid TLS state."""
    rho = np.asarray(rho)
    if rho.shape != (2, 2):
        raise ParameterError(f"density matrix must be 2x2, got {rho.shape}")
    tr = rho[0, 0] + rho[1, 1]
    if abs(tr - 1.0) > trace_tol:
        raise ParameterError(f"density matrix trace {tr} deviates from 1 "
                             f"by more than {trace_tol}")
    if not is_hermitian(rho, herm_tol):
        raise ParameterError("density matrix is not Hermitian")
    if min_eigenvalue(rho) < eig_floor:
        raise ParameterError("density matrix has a negative eigenvalue")


def min_eigenvalue(rho: np.ndarray) -> float:
    """Smaller eigenvalue of a Hermitian 2x2 matrix, in closed form."""
    tr = (rho[0, 0] + rho[1, 1]).real
    half_diff = 0.5 * (rho[1, 1] - rho[0, 0]).real
    rad = np.sqrt(half_diff**2 + abs(rho[0, 1]) ** 2)
    return float(0.5 * tr - rad)


def bloch_vector(rho: np.ndarray) -> BlochVector:
    """Bloch vector of a density matrix; ground state maps to (0, 0, -1)."""
    validate_density(rho)
    c = rho[0, 1]  # rho_ge
    return BlochVector(
        sx=float((rho[0, 1] + rho[1, 0]).real),
        sy=float(2.0 * c.imag),
        sz=float((rho[1, 1] - rho[0, 0]).real),
    )


def occupancy(rho: np.ndarray) -> float:
    """Excited-state population rho_ee = (1 + <sigma_z>)/2."""
    validate_density(rho)
    return float(rho[1, 1].real)


def lindblad_rhs(h: np.ndarray, collapse, rho: np.ndarray) -> np.ndarray:
    """Lindblad generator applied to ``rho``:

        d(rho)/dt = -i[H, rho]
                    + 1/2 sum_n (2 C_n rho C_n^+ - rho C_n^+ C_n - C_n^+ C_n rho)

    with C_n = sqrt(rate_n) * op_n for each ``(rate, op)`` in ``collapse``.
    ``h`` is in angular-frequency units (hbar = 1). The result is traceless,
    and Hermitian whenever ``rho`` is.
    """
    h = np.asarray(h, dtype=np.complex128)
    rho = np.asarray(rho, dtype=np.complex128)
    if not is_hermitian(h, 1e-9 * max(1.0, float(np.abs(h).max()))):
        raise ParameterError("Hamiltonian must be Hermitian")
    out = -1j * (h @ rho - rho @ h)
    for rate, op in collapse:
        if rate < 0:
            raise ParameterError(f"collapse rate must be >= 0, got {rate}")
        op = np.asarray(op, dtype=np.complex128)
        opd = op.conj().T
        opdop = opd @ op
        out = out + rate * (op @ rho @ opd - 0.5 * (opdop @ rho + rho @ opdop))
    return out
