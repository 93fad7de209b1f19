# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled propagation kernel (Dormand-Prince 5(4), 2x2 Lindblad).

Mirror of ``_fallback.py`` -- keep the arithmetic textually in sync; the
backend-parity tests compare the two to near machine precision.
"""

import numpy as np

from libc.math cimport cos, sqrt, pow, NAN

BACKEND = "compiled"

cdef double _A21 = 1.0 / 5.0
cdef double _A31 = 3.0 / 40.0, _A32 = 9.0 / 40.0
cdef double _A41 = 44.0 / 45.0, _A42 = -56.0 / 15.0, _A43 = 32.0 / 9.0
cdef double _A51 = 19372.0 / 6561.0, _A52 = -25360.0 / 2187.0
cdef double _A53 = 64448.0 / 6561.0, _A54 = -212.0 / 729.0
cdef double _A61 = 9017.0 / 3168.0, _A62 = -355.0 / 33.0
cdef double _A63 = 46732.0 / 5247.0, _A64 = 49.0 / 176.0
cdef double _A65 = -5103.0 / 18656.0
cdef double _B1 = 35.0 / 384.0, _B3 = 500.0 / 1113.0, _B4 = 125.0 / 192.0
cdef double _B5 = -2187.0 / 6784.0, _B6 = 11.0 / 84.0
cdef double _E1 = 71.0 / 57600.0, _E3 = -71.0 / 16695.0
cdef double _E4 = 71.0 / 1920.0, _E5 = -17253.0 / 339200.0
cdef double _E6 = 22.0 / 525.0, _E7 = -1.0 / 40.0
cdef double _C2 = 1.0 / 5.0, _C3 = 3.0 / 10.0, _C4 = 4.0 / 5.0
cdef double _C5 = 8.0 / 9.0

cdef double _SAFETY = 0.9
cdef double _MIN_FACTOR = 0.2
cdef double _MAX_FACTOR = 5.0


cdef inline double _envelope(double t, double env_t0, double env_dt,
                             const double[::1] env, Py_ssize_t n_env) nogil:
    cdef double x = (t - env_t0) / env_dt
    cdef Py_ssize_t i
    cdef double frac
    if x <= 0.0:
        return env[0]
    if x >= n_env - 1:
        return env[n_env - 1]
    i = <Py_ssize_t> x
    frac = x - i
    return env[i] * (1.0 - frac) + env[i + 1] * frac


cdef inline void _rhs(double t,
                      double complex p, double complex c,
                      double complex d, double complex q,
                      double delta, double g, double omega_saw, double phi,
                      double gamma_qd, double gamma_t,
                      double env_t0, double env_dt, const double[::1] env,
                      Py_ssize_t n_env,
                      double complex *dp, double complex *dc,
                      double complex *dd, double complex *dq) nogil:
    cdef double om = _envelope(t, env_t0, env_dt, env, n_env)
    cdef double az = -delta + g * cos(omega_saw * t + phi)
    cdef double half_om = 0.5 * om
    dp[0] = 1j * half_om * (c - d) + gamma_qd * q
    dc[0] = 1j * az * c - 1j * half_om * (q - p) - gamma_t * c
    dd[0] = -1j * az * d + 1j * half_om * (q - p) - gamma_t * d
    dq[0] = -1j * half_om * (c - d) - gamma_qd * q


def propagate_kernel(y0, double t_start, double out_dt, Py_ssize_t n_out,
                     double delta, double g, double omega_saw, double phi,
                     double gamma_qd, double gamma_z, double env_t0,
                     double env_dt, env_values, double rel_tol,
                     double abs_tol, double max_step):
    """See ``_fallback.propagate_kernel``; identical contract."""
    cdef const double[::1] env = np.ascontiguousarray(env_values, dtype=np.float64)
    cdef Py_ssize_t n_env = env.shape[0]
    out_arr = np.empty((n_out, 4), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef double gamma_t = 0.5 * gamma_qd + 2.0 * gamma_z

    cdef double complex p = y0[0], c = y0[1], d = y0[2], q = y0[3]
    out[0, 0] = p
    out[0, 1] = c
    out[0, 2] = d
    out[0, 3] = q

    cdef long n_steps = 0
    cdef long n_rejected = 0
    cdef double h = out_dt if out_dt < max_step else max_step
    cdef double h_min = 1e-6 * out_dt
    cdef bint have_k1 = False
    cdef bint last
    cdef double t, t_end, remaining, h_try, err, scale, r, mag, mag_n
    cdef double factor, fail_t = NAN
    cdef Py_ssize_t seg
    cdef double complex k1p = 0, k1c = 0, k1d = 0, k1q = 0
    cdef double complex k2p, k2c, k2d, k2q
    cdef double complex k3p, k3c, k3d, k3q
    cdef double complex k4p, k4c, k4d, k4q
    cdef double complex k5p, k5c, k5d, k5q
    cdef double complex k6p, k6c, k6d, k6q
    cdef double complex k7p, k7c, k7d, k7q
    cdef double complex np_, nc, nd, nq, ep, ec, ed, eq
    cdef bint failed = False

    with nogil:
        for seg in range(1, n_out):
            if failed:
                break
            t = t_start + (seg - 1) * out_dt
            t_end = t_start + seg * out_dt
            while t < t_end:
                remaining = t_end - t
                h_try = h if h < max_step else max_step
                last = h_try >= remaining
                if last:
                    h_try = remaining
                if not have_k1:
                    _rhs(t, p, c, d, q, delta, g, omega_saw, phi,
                         gamma_qd, gamma_t, env_t0, env_dt, env, n_env,
                         &k1p, &k1c, &k1d, &k1q)
                    have_k1 = True

                _rhs(t + _C2 * h_try,
                     p + h_try * (_A21 * k1p),
                     c + h_try * (_A21 * k1c),
                     d + h_try * (_A21 * k1d),
                     q + h_try * (_A21 * k1q),
                     delta, g, omega_saw, phi, gamma_qd, gamma_t,
                     env_t0, env_dt, env, n_env, &k2p, &k2c, &k2d, &k2q)
                _rhs(t + _C3 * h_try,
                     p + h_try * (_A31 * k1p + _A32 * k2p),
                     c + h_try * (_A31 * k1c + _A32 * k2c),
                     d + h_try * (_A31 * k1d + _A32 * k2d),
                     q + h_try * (_A31 * k1q + _A32 * k2q),
                     delta, g, omega_saw, phi, gamma_qd, gamma_t,
                     env_t0, env_dt, env, n_env, &k3p, &k3c, &k3d, &k3q)
                _rhs(t + _C4 * h_try,
                     p + h_try * (_A41 * k1p + _A42 * k2p + _A43 * k3p),
                     c + h_try * (_A41 * k1c + _A42 * k2c + _A43 * k3c),
                     d + h_try * (_A41 * k1d + _A42 * k2d + _A43 * k3d),
                     q + h_try * (_A41 * k1q + _A42 * k2q + _A43 * k3q),
                     delta, g, omega_saw, phi, gamma_qd, gamma_t,
                     env_t0, env_dt, env, n_env, &k4p, &k4c, &k4d, &k4q)
                _rhs(t + _C5 * h_try,
                     p + h_try * (_A51 * k1p + _A52 * k2p + _A53 * k3p
                                  + _A54 * k4p),
                     c + h_try * (_A51 * k1c + _A52 * k2c + _A53 * k3c
                                  + _A54 * k4c),
                     d + h_try * (_A51 * k1d + _A52 * k2d + _A53 * k3d
                                  + _A54 * k4d),
                     q + h_try * (_A51 * k1q + _A52 * k2q + _A53 * k3q
                                  + _A54 * k4q),
                     delta, g, omega_saw, phi, gamma_qd, gamma_t,
                     env_t0, env_dt, env, n_env, &k5p, &k5c, &k5d, &k5q)
                _rhs(t + h_try,
                     p + h_try * (_A61 * k1p + _A62 * k2p + _A63 * k3p
                                  + _A64 * k4p + _A65 * k5p),
                     c + h_try * (_A61 * k1c + _A62 * k2c + _A63 * k3c
                                  + _A64 * k4c + _A65 * k5c),
                     d + h_try * (_A61 * k1d + _A62 * k2d + _A63 * k3d
                                  + _A64 * k4d + _A65 * k5d),
                     q + h_try * (_A61 * k1q + _A62 * k2q + _A63 * k3q
                                  + _A64 * k4q + _A65 * k5q),
                     delta, g, omega_saw, phi, gamma_qd, gamma_t,
                     env_t0, env_dt, env, n_env, &k6p, &k6c, &k6d, &k6q)

                np_ = p + h_try * (_B1 * k1p + _B3 * k3p + _B4 * k4p
                                   + _B5 * k5p + _B6 * k6p)
                nc = c + h_try * (_B1 * k1c + _B3 * k3c + _B4 * k4c
                                  + _B5 * k5c + _B6 * k6c)
                nd = d + h_try * (_B1 * k1d + _B3 * k3d + _B4 * k4d
                                  + _B5 * k5d + _B6 * k6d)
                nq = q + h_try * (_B1 * k1q + _B3 * k3q + _B4 * k4q
                                  + _B5 * k5q + _B6 * k6q)

                _rhs(t + h_try, np_, nc, nd, nq, delta, g, omega_saw, phi,
                     gamma_qd, gamma_t, env_t0, env_dt, env, n_env,
                     &k7p, &k7c, &k7d, &k7q)

                ep = h_try * (_E1 * k1p + _E3 * k3p + _E4 * k4p + _E5 * k5p
                              + _E6 * k6p + _E7 * k7p)
                ec = h_try * (_E1 * k1c + _E3 * k3c + _E4 * k4c + _E5 * k5c
                              + _E6 * k6c + _E7 * k7c)
                ed = h_try * (_E1 * k1d + _E3 * k3d + _E4 * k4d + _E5 * k5d
                              + _E6 * k6d + _E7 * k7d)
                eq = h_try * (_E1 * k1q + _E3 * k3q + _E4 * k4q + _E5 * k5q
                              + _E6 * k6q + _E7 * k7q)

                err = 0.0
                mag = abs(p)
                mag_n = abs(np_)
                scale = abs_tol + rel_tol * (mag if mag > mag_n else mag_n)
                r = abs(ep) / scale
                err += r * r
                mag = abs(c)
                mag_n = abs(nc)
                scale = abs_tol + rel_tol * (mag if mag > mag_n else mag_n)
                r = abs(ec) / scale
                err += r * r
                mag = abs(d)
                mag_n = abs(nd)
                scale = abs_tol + rel_tol * (mag if mag > mag_n else mag_n)
                r = abs(ed) / scale
                err += r * r
                mag = abs(q)
                mag_n = abs(nq)
                scale = abs_tol + rel_tol * (mag if mag > mag_n else mag_n)
                r = abs(eq) / scale
                err += r * r
                err = sqrt(0.25 * err)

                if err <= 1.0:
                    n_steps += 1
                    t = t_end if last else t + h_try
                    p = np_
                    c = nc
                    d = nd
                    q = nq
                    k1p = k7p
                    k1c = k7c
                    k1d = k7d
                    k1q = k7q
                    if err == 0.0:
                        factor = _MAX_FACTOR
                    else:
                        factor = _SAFETY * pow(err, -0.2)
                        if factor > _MAX_FACTOR:
                            factor = _MAX_FACTOR
                        elif factor < _MIN_FACTOR:
                            factor = _MIN_FACTOR
                    h = h_try * factor
                else:
                    n_rejected += 1
                    factor = _SAFETY * pow(err, -0.2)
                    if factor < _MIN_FACTOR:
                        factor = _MIN_FACTOR
                    h = h_try * factor
                    if h < h_min:
                        fail_t = t
                        failed = True
                        break
            if not failed:
                out[seg, 0] = p
                out[seg, 1] = c
                out[seg, 2] = d
                out[seg, 3] = q

    if failed:
        fail_seg = int((fail_t - t_start) / out_dt) + 1
        out_arr[max(fail_seg, 1):, :] = np.nan
        return out_arr, n_steps, n_rejected, fail_t
    return out_arr, n_steps, n_rejected, float("nan")
