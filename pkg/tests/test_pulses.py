import math

import numpy as np
import pytest

from phonodot.errors import FormatError, ParameterError
from phonodot.model import TWO_PI
from phonodot.pulses import (PowerCalibration, PulseEnvelope, TimeGrid,
                             cw_envelope, etalon_filtered_pulse,
                             load_envelope, parse_envelope_text,
                             power_to_rabi, square_pulse)

PEAK = TWO_PI * 1e9


@pytest.fixture
def grid():
    return TimeGrid.from_span(0.0, 3.0e-9, 1e-12)


class TestTimeGrid:
    def test_times(self):
        g = TimeGrid(t0=1e-9, dt=2e-12, n=3)
        assert np.allclose(g.times(), [1e-9, 1.002e-9, 1.004e-9])
        assert g.t_end == pytest.approx(1.004e-9)

    def test_validation(self):
        with pytest.raises(ParameterError):
            TimeGrid(t0=0.0, dt=0.0, n=10)
        with pytest.raises(ParameterError):
            TimeGrid(t0=0.0, dt=1e-12, n=1)


class TestSquarePulse:
    def test_ideal_rectangle(self, grid):
        env = square_pulse(grid, 0.1e-9, 130e-12, 0.0, 0.0, PEAK)
        t = grid.times()
        inside = (t >= 0.1e-9) & (t <= 0.23e-9)
        assert np.all(env.values[inside] == PEAK)
        assert np.all(env.values[~inside] == 0.0)

    def test_fwhm_matches_duration(self, grid):
        env = square_pulse(grid, 0.1e-9, 130e-12, 15e-12, 15e-12, PEAK)
        t = grid.times()
        above = t[env.values >= PEAK / 2]
        fwhm = above[-1] - above[0]
        assert abs(fwhm - 130e-12) <= grid.dt

    def test_zero_peak_gives_zero_envelope(self, grid):
        env = square_pulse(grid, 0.1e-9, 130e-12, 15e-12, 15e-12, 0.0)
        assert np.all(env.values == 0.0)

    def test_out_of_grid_rejected(self, grid):
        with pytest.raises(ParameterError):
            square_pulse(grid, 2.95e-9, 130e-12, 15e-12, 15e-12, PEAK)

    def test_too_short_for_ramps(self, grid):
        with pytest.raises(ParameterError):
            square_pulse(grid, 0.1e-9, 10e-12, 30e-12, 30e-12, PEAK)

    def test_envelope_invariants(self, grid):
        env = square_pulse(grid, 0.1e-9, 130e-12, 15e-12, 15e-12, PEAK)
        assert env.values[0] == 0.0
        assert env.peak() == pytest.approx(PEAK)
        assert np.all(env.values >= 0.0)


class TestEtalonFilter:
    def test_post_pulse_decay_time(self, grid):
        env = square_pulse(grid, 0.1e-9, 130e-12, 0.0, 0.0, PEAK)
        out = etalon_filtered_pulse(env, 600e6)
        t = grid.times()
        sel = (t >= 0.6e-9) & (t <= 1.6e-9)
        coef = np.polyfit(t[sel], np.log(out.values[sel]), 1)
        tau = -1.0 / coef[0]
        assert tau == pytest.approx(1.0 / (math.pi * 600e6), rel=0.01)
        assert tau == pytest.approx(530.5e-12, rel=0.01)

    def test_all_pass_limit(self, grid):
        env = square_pulse(grid, 0.3e-9, 0.5e-9, 50e-12, 50e-12, PEAK)
        out = etalon_filtered_pulse(env, 1000e9)  # bandwidth*dt = 1000
        scale = max(env.values.max(), 1.0)
        assert np.abs(out.values - env.values).max() < 0.01 * scale

    def test_zero_envelope_stays_zero(self, grid):
        env = square_pulse(grid, 0.1e-9, 130e-12, 0.0, 0.0, 0.0)
        out = etalon_filtered_pulse(env, 600e6)
        assert np.all(out.values == 0.0)

    def test_causality(self, grid):
        env = square_pulse(grid, 0.1e-9, 130e-12, 15e-12, 15e-12, PEAK)
        out1 = etalon_filtered_pulse(env, 600e6)
        # shrink the input tail well after the filtered maximum
        cut = np.argmax(out1.values) + 200
        vals = env.values.copy()
        vals[cut:] = 0.0
        env2 = PulseEnvelope(grid=grid, values=vals, meta=dict(env.meta))
        out2 = etalon_filtered_pulse(env2, 600e6)
        assert np.allclose(out1.values[:cut], out2.values[:cut],
                           rtol=0, atol=1e-9 * PEAK)

    def test_rejects_bad_bandwidth(self, grid):
        env = square_pulse(grid, 0.1e-9, 130e-12, 0.0, 0.0, PEAK)
        with pytest.raises(ParameterError):
            etalon_filtered_pulse(env, 0.0)


class TestPowerToRabi:
    def test_zero(self):
        assert power_to_rabi(0.0, PowerCalibration(1e13)) == 0.0

    def test_square_root_law(self, rng):
        cal = PowerCalibration(2.5e13)
        for _ in range(10):
            power = rng.uniform(0, 1e-6)
            a = rng.uniform(0, 3)
            assert power_to_rabi(a**2 * power, cal) == pytest.approx(
                a * power_to_rabi(power, cal), rel=1e-12)

    def test_four_times_power_doubles_rabi(self):
        cal = PowerCalibration(1e13)
        assert power_to_rabi(4e-9, cal) == pytest.approx(
            2 * power_to_rabi(1e-9, cal))

    def test_negative_power_rejected(self):
        with pytest.raises(ParameterError):
            power_to_rabi(-1e-9, PowerCalibration(1e13))


class TestLoadEnvelope:
    def test_rectangle(self, grid):
        samples = [(0.1e-9, 0.0), (0.1001e-9, 1.0), (0.5e-9, 1.0),
                   (0.5001e-9, 0.0)]
        env = load_envelope(samples, PEAK, grid)
        t = grid.times()
        flat = (t >= 0.15e-9) & (t <= 0.45e-9)
        assert np.allclose(env.values[flat], PEAK)

    def test_square_root_of_intensity(self, grid):
        # triangular intensity -> sqrt amplitude
        t_s = np.linspace(0.1e-9, 0.9e-9, 101)
        tri = 1.0 - np.abs((t_s - 0.5e-9) / 0.4e-9)
        env = load_envelope(np.column_stack([t_s, tri]), PEAK, grid)
        t = grid.times()
        inside = (t > 0.15e-9) & (t < 0.85e-9)
        expected = PEAK * np.sqrt(
            np.interp(t[inside], t_s, tri) / tri.max())
        assert np.abs(env.values[inside] - expected).max() < 1e-3 * PEAK

    def test_empty_rejected(self, grid):
        with pytest.raises(FormatError):
            load_envelope(np.zeros((0, 2)), PEAK, grid)

    def test_non_monotonic_rejected(self, grid):
        samples = [(0.2e-9, 1.0), (0.1e-9, 1.0)]
        with pytest.raises(FormatError):
            load_envelope(samples, PEAK, grid)

    def test_text_format(self):
        text = "# time_ns intensity\n0.1 0.0\n0.2 1.0 # peak\n\n0.3 0.0\n"
        table = parse_envelope_text(text)
        assert table.shape == (3, 2)
        assert table[1, 0] == pytest.approx(0.2e-9)

    def test_text_format_errors(self):
        with pytest.raises(FormatError):
            parse_envelope_text("# only comments\n")
        with pytest.raises(FormatError):
            parse_envelope_text("0.1 1.0 3.0\n")
        with pytest.raises(FormatError):
            parse_envelope_text("0.1 abc\n")


class TestCwEnvelope:
    def test_reaches_plateau(self, grid):
        env = cw_envelope(grid, PEAK)
        assert env.values[0] == 0.0
        assert np.all(env.values[100:] == PEAK)

    def test_finite_and_nonnegative(self, grid):
        env = cw_envelope(grid, PEAK)
        assert np.all(np.isfinite(env.values))
        assert np.all(env.values >= 0)
