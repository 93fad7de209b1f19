import numpy as np
import pytest

from conftest import GHZ_ANG, constant_drive, make_params
from phonodot._kernel import available_backends, get_kernel
from phonodot.errors import ParameterError
from phonodot.linalg import EXCITED, GROUND, SIGMA_MINUS
from phonodot.model import TWO_PI, generalized_rabi
from phonodot.pulses import TimeGrid, square_pulse
from phonodot.solver import (SolverConfig, propagate, propagate_conditional)


class TestAnalyticOracles:
    def test_resonant_rabi(self):
        grid, env = constant_drive(GHZ_ANG)
        traj = propagate(make_params(delta_ghz=0.0), env)
        t = traj.times()
        sel = (t >= 0) & (t <= 3e-9)
        # drive effectively switches on half a grid step before t = 0
        exact = np.sin(0.5 * GHZ_ANG * (t[sel] + 0.5 * grid.dt)) ** 2
        assert np.abs(traj.occupancy[sel] - exact).max() < 1e-6

    def test_detuned_rabi(self):
        grid, env = constant_drive(GHZ_ANG)
        p = make_params()
        traj = propagate(p, env)
        t = traj.times()
        sel = (t >= 0) & (t <= 3e-9)
        gen = generalized_rabi(GHZ_ANG, p.delta)
        exact = (GHZ_ANG / gen) ** 2 * np.sin(
            0.5 * gen * (t[sel] + 0.5 * grid.dt)) ** 2
        assert np.abs(traj.occupancy[sel] - exact).max() < 1e-5

    def test_free_decay(self):
        grid = TimeGrid.from_span(0.0, 2.0e-9, 1e-12)
        env = square_pulse(grid, 1e-9, 0.5e-9, 0.0, 0.0, 0.0)
        p = make_params(delta_ghz=0.0, gamma_qd_ghz=0.32)
        traj = propagate(p, env, init=EXCITED)
        expected = np.exp(-p.gamma_qd * traj.times())
        assert np.abs(traj.occupancy - expected).max() < 1e-8


class TestInvariants:
    def test_trace_and_positivity(self):
        _, env = constant_drive(TWO_PI * 1.385e9)
        for g_ghz in (0.0, 0.87, 1.55):
            p = make_params(delta_ghz=-3.5881, saw_ghz=3.5881, g_ghz=g_ghz,
                            gamma_qd_ghz=0.32, gamma_z_ghz=0.06)
            traj = propagate(p, env)
            assert traj.trace_error.max() < 1e-9
            assert traj.min_eigenvalue().min() > -1e-8

    def test_tolerance_convergence(self):
        _, env = constant_drive(GHZ_ANG, span=2.0e-9)
        p = make_params(g_ghz=1.0, gamma_qd_ghz=0.32)
        loose = propagate(p, env, SolverConfig(rel_tol=2e-8))
        tight = propagate(p, env, SolverConfig(rel_tol=1e-8))
        assert np.abs(loose.occupancy - tight.occupancy).max() < 10 * 2e-8

    def test_phase_wraparound(self):
        _, env = constant_drive(GHZ_ANG, span=1.0e-9)
        p = make_params(g_ghz=1.0, phi=0.4)
        a = propagate(p, env)
        b = propagate(p.with_phi(p.phi + TWO_PI), env)
        assert np.abs(a.occupancy - b.occupancy).max() < 1e-12


class TestConditionalPropagation:
    def test_density_matrix_consistency(self):
        _, env = constant_drive(GHZ_ANG, span=1.0e-9)
        p = make_params(g_ghz=0.7, gamma_qd_ghz=0.32, gamma_z_ghz=0.06)
        traj = propagate(p, env)
        ops = propagate_conditional(p, env, None, GROUND, env.grid.t0)
        occ = ops.matrices[:, 1, 1].real
        n = min(len(occ), len(traj.occupancy))
        assert np.abs(occ[:n] - traj.occupancy[:n]).max() < 1e-12

    def test_zero_operator_stays_zero(self):
        _, env = constant_drive(GHZ_ANG, span=0.5e-9)
        p = make_params(g_ghz=1.0, gamma_qd_ghz=0.32)
        ops = propagate_conditional(p, env, None, np.zeros((2, 2)),
                                    env.grid.t0)
        assert np.abs(ops.matrices).max() == 0.0

    def test_coherence_decay_oracle(self):
        # Tr[sigma_plus evolved(sigma_minus |e><e|)]
        #   = exp(-(gamma/2 + 2 gamma_z) tau) * exp(-i delta tau)
        grid = TimeGrid.from_span(0.0, 2.0e-9, 1e-12)
        env = square_pulse(grid, 1e-9, 0.5e-9, 0.0, 0.0, 0.0)
        p = make_params(delta_ghz=-2.0, gamma_qd_ghz=0.32, gamma_z_ghz=0.06)
        ops = propagate_conditional(p, env, None, SIGMA_MINUS @ EXCITED, 0.0)
        got = ops.matrices[:, 0, 1]
        tau = ops.times()
        rate = 0.5 * p.gamma_qd + 2.0 * p.gamma_z
        expected = np.exp(-rate * tau) * np.exp(-1j * p.delta * tau)
        assert np.abs(got - expected).max() < 1e-9

    def test_rejects_bad_start(self):
        _, env = constant_drive(GHZ_ANG, span=0.5e-9)
        with pytest.raises(ParameterError):
            propagate_conditional(make_params(), env, None, GROUND, 1.0)


class TestValidation:
    def test_rejects_invalid_initial_state(self):
        _, env = constant_drive(GHZ_ANG, span=0.5e-9)
        with pytest.raises(ParameterError):
            propagate(make_params(), env, init=2.0 * GROUND)

    def test_rejects_bad_solver_config(self):
        with pytest.raises(ParameterError):
            SolverConfig(rel_tol=0.0)


class TestKernelBackends:
    def test_backends_agree(self):
        backends = available_backends()
        if "compiled" not in backends:
            pytest.skip("compiled kernel not built")
        grid, env = constant_drive(TWO_PI * 1.385e9, span=2.0e-9)
        args = (np.array([1, 0, 0, 0], dtype=complex), 0.0, 1e-12, 2001,
                -TWO_PI * 3.5881e9, TWO_PI * 1e9, TWO_PI * 3.5881e9, 0.3,
                TWO_PI * 0.32e9, TWO_PI * 0.06e9, grid.t0, grid.dt,
                env.values, 1e-8, 1e-10, 50e-12)
        out_c = get_kernel("compiled")(*args)[0]
        out_p = get_kernel("python")(*args)[0]
        assert np.abs(out_c - out_p).max() < 1e-12
