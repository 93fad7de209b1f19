"""Pure-Python propagation kernel.

Same algorithm as the compiled extension ``_core``: an embedded
Dormand-Prince 5(4) Runge-Kutta pair stepping the 2x2 Lindblad equation

    dy/dt = -i[H(t), y] + gamma_qd D[sigma_minus] y + gamma_z D[sigma_z] y

with H(t)/hbar = 1/2(-delta + g cos(omega_saw t + phi)) sigma_z
               + Omega0(t)/2 sigma_x,

written out by hand for the state y = (y_gg, y_ge, y_eg, y_ee). The input
need not be Hermitian (quantum-regression propagation of sigma_minus*rho
uses the same generator). Steps are clipped so every output time is hit
exactly; the embedded 4th-order solution drives the step-size controller.

Keep the arithmetic in this file and in ``_core.pyx`` textually in sync:
the backend-parity tests require matching results to near machine
precision.
"""

import math

import numpy as np

BACKEND = "python"

# Dormand-Prince coefficients
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (19372.0 / 6561.0, -25360.0 / 2187.0,
                          64448.0 / 6561.0, -212.0 / 729.0)
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0,
                                46732.0 / 5247.0, 49.0 / 176.0,
                                -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                           -2187.0 / 6784.0, 11.0 / 84.0)
# b5 - b4 (error-estimate weights)
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0,
                                71.0 / 1920.0, -17253.0 / 339200.0,
                                22.0 / 525.0, -1.0 / 40.0)
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


def _envelope(t, env_t0, env_dt, env):
    x = (t - env_t0) / env_dt
    if x <= 0.0:
        return env[0]
    last = len(env) - 1
    if x >= last:
        return env[last]
    i = int(x)
    frac = x - i
    return env[i] * (1.0 - frac) + env[i + 1] * frac


def _rhs(t, p, c, d, q, delta, g, omega_saw, phi, gamma_qd, gamma_t,
         env_t0, env_dt, env):
    om = _envelope(t, env_t0, env_dt, env)
    az = -delta + g * math.cos(omega_saw * t + phi)
    half_om = 0.5 * om
    dp = 1j * half_om * (c - d) + gamma_qd * q
    dc = 1j * az * c - 1j * half_om * (q - p) - gamma_t * c
    dd = -1j * az * d + 1j * half_om * (q - p) - gamma_t * d
    dq = -1j * half_om * (c - d) - gamma_qd * q
    return dp, dc, dd, dq


def propagate_kernel(y0, t_start, out_dt, n_out, delta, g, omega_saw, phi,
                     gamma_qd, gamma_z, env_t0, env_dt, env_values,
                     rel_tol, abs_tol, max_step):
    """Integrate from t_start, recording n_out states spaced out_dt apart.

    Returns ``(out, n_steps, n_rejected, fail_t)`` where ``out`` is a
    complex array of shape (n_out, 4) and ``fail_t`` is NaN on success or
    the time at which the step size underflowed.
    """
    env = np.ascontiguousarray(env_values, dtype=float)
    out = np.empty((n_out, 4), dtype=np.complex128)
    gamma_t = 0.5 * gamma_qd + 2.0 * gamma_z

    p, c, d, q = complex(y0[0]), complex(y0[1]), complex(y0[2]), complex(y0[3])
    out[0, 0], out[0, 1], out[0, 2], out[0, 3] = p, c, d, q

    n_steps = 0
    n_rejected = 0
    h = min(out_dt, max_step)
    h_min = 1e-6 * out_dt
    k1 = None

    for seg in range(1, n_out):
        t = t_start + (seg - 1) * out_dt
        t_end = t_start + seg * out_dt
        while t < t_end:
            remaining = t_end - t
            h_try = h if h < max_step else max_step
            last = h_try >= remaining
            if last:
                h_try = remaining
            if k1 is None:
                k1 = _rhs(t, p, c, d, q, delta, g, omega_saw, phi,
                          gamma_qd, gamma_t, env_t0, env_dt, env)

            k1p, k1c, k1d, k1q = k1
            k2 = _rhs(t + _C2 * h_try,
                      p + h_try * (_A21 * k1p),
                      c + h_try * (_A21 * k1c),
                      d + h_try * (_A21 * k1d),
                      q + h_try * (_A21 * k1q),
                      delta, g, omega_saw, phi, gamma_qd, gamma_t,
                      env_t0, env_dt, env)
            k2p, k2c, k2d, k2q = k2
            k3 = _rhs(t + _C3 * h_try,
                      p + h_try * (_A31 * k1p + _A32 * k2p),
                      c + h_try * (_A31 * k1c + _A32 * k2c),
                      d + h_try * (_A31 * k1d + _A32 * k2d),
                      q + h_try * (_A31 * k1q + _A32 * k2q),
                      delta, g, omega_saw, phi, gamma_qd, gamma_t,
                      env_t0, env_dt, env)
            k3p, k3c, k3d, k3q = k3
            k4 = _rhs(t + _C4 * h_try,
                      p + h_try * (_A41 * k1p + _A42 * k2p + _A43 * k3p),
                      c + h_try * (_A41 * k1c + _A42 * k2c + _A43 * k3c),
                      d + h_try * (_A41 * k1d + _A42 * k2d + _A43 * k3d),
                      q + h_try * (_A41 * k1q + _A42 * k2q + _A43 * k3q),
                      delta, g, omega_saw, phi, gamma_qd, gamma_t,
                      env_t0, env_dt, env)
            k4p, k4c, k4d, k4q = k4
            k5 = _rhs(t + _C5 * h_try,
                      p + h_try * (_A51 * k1p + _A52 * k2p + _A53 * k3p
                                   + _A54 * k4p),
                      c + h_try * (_A51 * k1c + _A52 * k2c + _A53 * k3c
                                   + _A54 * k4c),
                      d + h_try * (_A51 * k1d + _A52 * k2d + _A53 * k3d
                                   + _A54 * k4d),
                      q + h_try * (_A51 * k1q + _A52 * k2q + _A53 * k3q
                                   + _A54 * k4q),
                      delta, g, omega_saw, phi, gamma_qd, gamma_t,
                      env_t0, env_dt, env)
            k5p, k5c, k5d, k5q = k5
            k6 = _rhs(t + h_try,
                      p + h_try * (_A61 * k1p + _A62 * k2p + _A63 * k3p
                                   + _A64 * k4p + _A65 * k5p),
                      c + h_try * (_A61 * k1c + _A62 * k2c + _A63 * k3c
                                   + _A64 * k4c + _A65 * k5c),
                      d + h_try * (_A61 * k1d + _A62 * k2d + _A63 * k3d
                                   + _A64 * k4d + _A65 * k5d),
                      q + h_try * (_A61 * k1q + _A62 * k2q + _A63 * k3q
                                   + _A64 * k4q + _A65 * k5q),
                      delta, g, omega_saw, phi, gamma_qd, gamma_t,
                      env_t0, env_dt, env)
            k6p, k6c, k6d, k6q = k6

            np_ = p + h_try * (_B1 * k1p + _B3 * k3p + _B4 * k4p
                               + _B5 * k5p + _B6 * k6p)
            nc = c + h_try * (_B1 * k1c + _B3 * k3c + _B4 * k4c
                              + _B5 * k5c + _B6 * k6c)
            nd = d + h_try * (_B1 * k1d + _B3 * k3d + _B4 * k4d
                              + _B5 * k5d + _B6 * k6d)
            nq = q + h_try * (_B1 * k1q + _B3 * k3q + _B4 * k4q
                              + _B5 * k5q + _B6 * k6q)

            k7 = _rhs(t + h_try, np_, nc, nd, nq, delta, g, omega_saw, phi,
                      gamma_qd, gamma_t, env_t0, env_dt, env)
            k7p, k7c, k7d, k7q = k7

            ep = h_try * (_E1 * k1p + _E3 * k3p + _E4 * k4p + _E5 * k5p
                          + _E6 * k6p + _E7 * k7p)
            ec = h_try * (_E1 * k1c + _E3 * k3c + _E4 * k4c + _E5 * k5c
                          + _E6 * k6c + _E7 * k7c)
            ed = h_try * (_E1 * k1d + _E3 * k3d + _E4 * k4d + _E5 * k5d
                          + _E6 * k6d + _E7 * k7d)
            eq = h_try * (_E1 * k1q + _E3 * k3q + _E4 * k4q + _E5 * k5q
                          + _E6 * k6q + _E7 * k7q)

            err = 0.0
            for e_i, y_i, yn_i in ((ep, p, np_), (ec, c, nc),
                                   (ed, d, nd), (eq, q, nq)):
                mag = abs(y_i)
                mag_n = abs(yn_i)
                scale = abs_tol + rel_tol * (mag if mag > mag_n else mag_n)
                r = abs(e_i) / scale
                err += r * r
            err = math.sqrt(0.25 * err)

            if err <= 1.0:
                n_steps += 1
                t = t_end if last else t + h_try
                p, c, d, q = np_, nc, nd, nq
                k1 = k7
                factor = (_MAX_FACTOR if err == 0.0
                          else min(_MAX_FACTOR,
                                   max(_MIN_FACTOR,
                                       _SAFETY * err ** -0.2)))
                h = h_try * factor
            else:
                n_rejected += 1
                h = h_try * max(_MIN_FACTOR, _SAFETY * err ** -0.2)
                if h < h_min:
                    out[seg:, :] = np.nan
                    return out, n_steps, n_rejected, t
        out[seg, 0], out[seg, 1], out[seg, 2], out[seg, 3] = p, c, d, q

    return out, n_steps, n_rejected, math.nan
