"""Figure-reproduction recipes.

Each recipe pins a full parameter set, runs the corresponding experiment,
writes plottable CSV files into the output directory, and returns
quantitative pass/fail checks where a published target exists.

Parameter choices not printed in the source material (peak Rabi rates of
the pulsed measurements, square-pulse length) are pinned here to
reproduce the published quantitative anchors: the square pulse at
Omega0/2pi = 1.385 GHz gives a bare flat-top occupancy of 0.06 and Rabi
extrema spaced 130 ps (the 370 ps / 500 ps pulse pair); the gradual pulse
(180 ps drive through the 600 MHz etalon at 0.5 GHz peak) yields undephased
enhancements of order 1000 around 1.3 ns.
"""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from .errors import ConfigError
from .experiments import (enhancement, enhancement_spike_peak,
                          ladder_occupancies, phase_averaged_trajectory)
from .io_utils import Check, write_csv
from .model import SystemParams, TWO_PI, generalized_rabi
from .pulses import PulseEnvelope, TimeGrid, etalon_filtered_pulse, \
    square_pulse
from .solver import SolverConfig, Trajectory, propagate
from .spectroscopy import (FilterSpec, cw_scattering_spectrum,
                           excitation_spectrum, filtered_time_signal,
                           integrated_filtered_spectrum,
                           two_time_correlation)

__all__ = ["FIGURES", "run_figure"]

GHZ_ANG = TWO_PI * 1e9

# shared Fig. 3 / Fig. 4 system constants
SAW_GHZ = 3.5881
GAMMA_QD_GHZ = 0.32
GAMMA_Z_GHZ = 0.06
G_SWEEP_GHZ = (0.0, 0.49, 0.87, 1.23, 1.55)

# square-pulse drive (Figs. 3d, 4): flat-top mean occupancy 0.06
SQUARE_RABI_GHZ = 1.385
SQUARE_START = 50e-12
SQUARE_EDGE = 30e-12
SQUARE_DURATION = 1.2e-9

# gradual pulse (Figs. 3c, S6): drive pulse through the 600 MHz etalon
GRADUAL_RABI_GHZ = 0.5
GRADUAL_INPUT_DURATION = 180e-12
GRADUAL_EDGE = 15e-12
ETALON_BW = 600e6

# Fig. 4 pulse pair: end on the 2nd Rabi maximum / minimum (374 / 505 ps)
FIG4_G_GHZ = 1.0
FIG4_DUR_SHORT = 374e-12
FIG4_DUR_LONG = 505e-12


def _grid(span=3.0e-9, dt=1e-12, t0=0.0):
    return TimeGrid.from_span(t0, span, dt)


def _system(g_ghz, gamma_qd=GAMMA_QD_GHZ, gamma_z=GAMMA_Z_GHZ,
            saw=SAW_GHZ, **kw):
    return SystemParams.from_ghz(-saw, saw, g_ghz, gamma_qd_ghz=gamma_qd,
                                 gamma_z_ghz=gamma_z, **kw)


def _gradual_pulse(grid, peak_ghz=GRADUAL_RABI_GHZ):
    base = square_pulse(grid, SQUARE_START, GRADUAL_INPUT_DURATION,
                        GRADUAL_EDGE, GRADUAL_EDGE, peak_ghz * GHZ_ANG)
    return etalon_filtered_pulse(base, ETALON_BW)


def _square(grid, duration=SQUARE_DURATION, peak_ghz=SQUARE_RABI_GHZ):
    return square_pulse(grid, SQUARE_START, duration, SQUARE_EDGE,
                        SQUARE_EDGE, peak_ghz * GHZ_ANG)


def _traj_columns(traj: Trajectory):
    return {
        "time_ns": traj.times() / 1e-9,
        "occupancy": traj.occupancy,
        "sx": traj.bloch[:, 0],
        "sy": traj.bloch[:, 1],
        "sz": traj.bloch[:, 2],
    }


def _local_minima(y: np.ndarray):
    # strict on one side to reject plateaus
    sel = ((y[1:-1] <= y[:-2]) & (y[1:-1] <= y[2:])
           & ((y[1:-1] < y[:-2]) | (y[1:-1] < y[2:])))
    idx = np.nonzero(sel)[0] + 1
    keep = []
    for i in idx:
        if keep and i - keep[-1] < 10:
            if y[i] < y[keep[-1]]:
                keep[-1] = i
        else:
            keep.append(i)
    return np.asarray(keep, dtype=int)


def fig1c(outdir, workers=1):
    """Reduced ladder-channel occupancies, no damping, 1.7 ns window."""
    p = SystemParams.from_ghz(-3.5, 3.5, 1.0, g0_ghz=1.0, n_phonons=1.0)
    grid = _grid(span=1.72e-9, t0=-10e-12)
    env = square_pulse(grid, 0.0, 1.7e-9, 0.0, 0.0, 1.0 * GHZ_ANG)
    direct, sideband = ladder_occupancies(p, env)

    files = [
        write_csv(outdir / "fig1c_direct.csv", _traj_columns(direct)),
        write_csv(outdir / "fig1c_sideband.csv", _traj_columns(sideband)),
    ]
    t = direct.times()
    minima_idx = _local_minima(direct.occupancy)
    minima_idx = minima_idx[(t[minima_idx] > 50e-12)
                            & (t[minima_idx] < 1.7e-9)]
    t_min = t[minima_idx]
    files.append(write_csv(outdir / "fig1c_direct_minima.csv",
                           {"time_ns": t_min / 1e-9,
                            "occupancy": direct.occupancy[minima_idx]}))

    period = TWO_PI / generalized_rabi(1.0 * GHZ_ANG, p.delta)
    # the sampled envelope turns on half a grid step before t = 0
    t_eff = t_min + 0.5 * grid.dt
    k = np.round(t_eff / period)
    worst = float(np.abs(t_eff - k * period).max())
    checks = [Check("fig1c.direct_minima_at_generalized_rabi_period",
                    worst < 2e-12, worst / 1e-12, "< 2 ps offset")]

    gamma_side = p.g0 * (1.0 * GHZ_ANG) * math.sqrt(p.n_phonons) \
        / p.omega_saw
    sel = (t >= 0) & (t <= 1.7e-9 - grid.dt)
    ideal = np.sin(0.5 * gamma_side * (t[sel] + 0.5 * grid.dt)) ** 2
    dev = float(np.abs(sideband.occupancy[sel] - ideal).max())
    checks.append(Check("fig1c.sideband_matches_resonant_rabi",
                        dev < 1e-6, dev, "< 1e-6"))
    return files, checks


def fig1d(outdir, workers=1):
    """Bloch trajectories with and without the acoustic drive."""
    grid = _grid(span=1.72e-9, t0=-10e-12)
    env = square_pulse(grid, 0.0, 1.7e-9, 0.0, 0.0, 1.0 * GHZ_ANG)
    files = []
    for g_ghz in (0.0, 2.0):
        p = SystemParams.from_ghz(-3.5, 3.5, g_ghz)
        traj = propagate(p, env)
        tag = format(g_ghz, "g").replace(".", "p")
        files.append(write_csv(outdir / f"fig1d_bloch_g{tag}.csv",
                               _traj_columns(traj)))
    return files, []


def _fig3(outdir, pulse_kind, label, gamma_z_ghz, n_phases=8,
          floor=1e-4, solver_cfg=None):
    grid = _grid()
    env = _gradual_pulse(grid) if pulse_kind == "gradual" else _square(grid)
    ref = None
    files = [write_csv(outdir / f"{label}_pulse.csv",
                       {"time_ns": grid.times() / 1e-9,
                        "rabi_ghz": env.values / GHZ_ANG,
                        "intensity": (env.values / env.peak()) ** 2
                        if env.peak() > 0 else env.values})]
    occ_matrix = {"time_ns": grid.times() / 1e-9}
    series = {}
    for g_ghz in G_SWEEP_GHZ:
        p = _system(g_ghz, gamma_z=gamma_z_ghz)
        traj = (propagate(p, env, solver_cfg) if g_ghz == 0.0 else
                phase_averaged_trajectory(p, env, n_phases, solver_cfg))
        if g_ghz == 0.0:
            ref = traj
        tag = format(g_ghz, "g").replace(".", "p")
        occ_matrix[f"g_{tag}"] = traj.occupancy
        series[g_ghz] = traj
    files.append(write_csv(outdir / f"{label}_occupancy.csv", occ_matrix))

    enh_matrix = {"time_ns": grid.times() / 1e-9}
    enhancements = {}
    for g_ghz, traj in series.items():
        if g_ghz == 0.0:
            continue
        ser = enhancement(traj, ref, floor=floor)
        enhancements[g_ghz] = ser
        tag = format(g_ghz, "g").replace(".", "p")
        enh_matrix[f"c_g_{tag}"] = np.where(ser.valid_mask, ser.c, 0.0)
    files.append(write_csv(outdir / f"{label}_enhancement.csv", enh_matrix))
    return files, series, enhancements, ref


def fig3c(outdir, workers=1):
    """Gradual-pulse dynamics and enhancements, phase averaged."""
    files, _, _, _ = _fig3(outdir, "gradual", "fig3c", GAMMA_Z_GHZ)
    return files, []


def fig3d(outdir, workers=1):
    """Square-pulse dynamics and enhancements, phase averaged."""
    files, series, _, ref = _fig3(outdir, "square", "fig3d", GAMMA_Z_GHZ)
    t = ref.times()
    period = TWO_PI / generalized_rabi(SQUARE_RABI_GHZ * GHZ_ANG,
                                       ref.params.delta)
    w = max(int(round(period / ref.grid.dt)), 1)
    kernel = np.ones(w) / w
    running = np.convolve(ref.occupancy, kernel, mode="same")
    sel = (t > 0.4e-9) & (t < 1.0e-9)
    mean_val = float(running[sel].mean())
    checks = [Check("fig3d.bare_flat_top_running_mean",
                    abs(mean_val - 0.06) <= 0.01, mean_val, "0.06 +- 0.01")]
    return files, checks


def figS1(outdir, workers=1):
    """Mechanical-phase dependence and the stability of the enhancement."""
    grid = _grid()
    env = _square(grid)
    files = []

    # panel a/b analogue: individual phases at g/2pi = 1 GHz, no damping
    p_ideal = SystemParams.from_ghz(-SAW_GHZ, SAW_GHZ, 1.0)
    cols = {"time_ns": grid.times() / 1e-9}
    for k in range(5):
        phi = TWO_PI * k / 8
        cols[f"phi_{k}_of_8"] = propagate(p_ideal.with_phi(phi),
                                          env).occupancy
    cols["phi_avg_8"] = phase_averaged_trajectory(p_ideal, env, 8).occupancy
    files.append(write_csv(outdir / "figS1_phases.csv", cols))

    # panel c/d analogue: enhancement at phi = 0 versus the phase average
    p = _system(1.23)
    ref = propagate(_system(0.0), env)
    c_phi0 = enhancement(propagate(p, env), ref)
    avg8 = phase_averaged_trajectory(p, env, 8)
    avg16 = phase_averaged_trajectory(p, env, 16)
    c_avg = enhancement(avg8, ref)
    files.append(write_csv(outdir / "figS1_enhancement.csv", {
        "time_ns": grid.times() / 1e-9,
        "c_phi0": np.where(c_phi0.valid_mask, c_phi0.c, 0.0),
        "c_avg8": np.where(c_avg.valid_mask, c_avg.c, 0.0),
    }))

    t0p, _ = enhancement_spike_peak(c_phi0, ref)
    t8p, _ = enhancement_spike_peak(c_avg, ref)
    dt_peak = abs(t0p - t8p)
    occ_diff = float(np.abs(avg8.occupancy - avg16.occupancy).max()
                     / avg16.occupancy.max())
    checks = [
        Check("figS1.peak_time_agreement", dt_peak <= 50e-12,
              dt_peak / 1e-12, "<= 50 ps"),
        Check("figS1.phase_count_convergence", occ_diff < 0.01,
              occ_diff, "< 1% of peak occupancy"),
    ]
    return files, checks


def figS5(outdir, workers=1):
    """Fig. 3 data as time-by-coupling matrices."""
    files = []
    for pulse_kind, label in (("gradual", "figS5_gradual"),
                              ("square", "figS5_square")):
        sub, _, _, _ = _fig3(outdir, pulse_kind, label, GAMMA_Z_GHZ)
        files.extend(sub)
    return files, []


def figS6(outdir, workers=1):
    """Gradual-pulse enhancements without extra dephasing."""
    cfg = SolverConfig(rel_tol=1e-10, abs_tol=1e-13)
    files, _, enhancements, ref = _fig3(
        outdir, "gradual", "figS6", gamma_z_ghz=0.0, floor=1e-6,
        solver_cfg=cfg)
    checks = []
    summary = {"g_ghz": [], "peak_time_ns": [], "peak_value": []}
    for g_ghz, ser in sorted(enhancements.items()):
        t_pk, v_pk = enhancement_spike_peak(ser, ref)
        summary["g_ghz"].append(g_ghz)
        summary["peak_time_ns"].append(t_pk / 1e-9)
        summary["peak_value"].append(v_pk)
        if g_ghz >= 1.0:
            tag = format(g_ghz, "g")
            checks.append(Check(
                f"figS6.peak_enhancement_g{tag}",
                1000.0 / 3.0 <= v_pk <= 3000.0, v_pk,
                "within factor 3 of 1000"))
            checks.append(Check(
                f"figS6.peak_time_g{tag}",
                abs(t_pk - 1.3e-9) <= 0.3e-9, t_pk / 1e-9,
                "1.3 +- 0.3 ns"))
    files.append(write_csv(outdir / "figS6_peaks.csv", summary))
    return files, checks


def fig2d_sim(outdir, workers=1):
    """CW excitation and scattering spectra with acoustic sidebands."""
    rabi = 0.1 * GHZ_ANG
    files = []
    checks = []

    axis = GHZ_ANG * np.round(np.arange(-5.0, 5.0001, 0.05), 6)
    exc_cols = {"detuning_ghz": axis / GHZ_ANG}
    for g_ghz in (0.0, 0.87, 1.55):
        p = SystemParams.from_ghz(0.0, SAW_GHZ, g_ghz,
                                  gamma_qd_ghz=GAMMA_QD_GHZ,
                                  gamma_z_ghz=GAMMA_Z_GHZ)
        spec = excitation_spectrum(p, rabi, axis)
        tag = format(g_ghz, "g").replace(".", "p")
        exc_cols[f"g_{tag}"] = spec.intensity
    files.append(write_csv(outdir / "fig2d_excitation.csv", exc_cols))

    scatter_cols = None
    for g_ghz in (0.0, 0.87, 1.55):
        p = _system(g_ghz)
        spec = cw_scattering_spectrum(p, rabi)
        if scatter_cols is None:
            scatter_cols = {"detuning_ghz": spec.detuning_axis / GHZ_ANG}
        tag = format(g_ghz, "g").replace(".", "p")
        scatter_cols[f"g_{tag}"] = spec.intensity
        scatter_cols[f"g_{tag}_coherent"] = spec.components["coherent"]
        scatter_cols[f"g_{tag}_incoherent"] = spec.components["incoherent"]
        if g_ghz > 0:
            # sideband comb centered on the emitter line at detuning 0
            d = spec.detuning_axis
            bin_w = TWO_PI * spec.meta["bin_hz"]
            peaks = _local_minima(-spec.intensity)
            peaks = peaks[spec.intensity[peaks]
                          >= 1e-5 * spec.intensity.max()]
            worst = 0.0
            n_found = 0
            for k in (-2, -1, 1, 2):
                target = k * p.omega_saw
                cand = peaks[np.abs(d[peaks] - target)
                             <= 0.45 * p.omega_saw]
                if cand.size == 0:
                    continue  # below the resolvable floor at this drive
                best = cand[np.argmax(spec.intensity[cand])]
                n_found += 1
                worst = max(worst, abs(d[best] - target))
            checks.append(Check(
                f"fig2d.sideband_positions_g{format(g_ghz, 'g')}",
                n_found >= 2 and worst <= bin_w, worst / bin_w,
                "within one frequency bin"))
    files.append(write_csv(outdir / "fig2d_scattering.csv", scatter_cols))
    return files, checks


def _decay_rate(times, signal, t_start, t_stop):
    sel = (times >= t_start) & (times <= t_stop) & (signal > 0)
    coef = np.polyfit(times[sel], np.log(signal[sel]), 1)
    return -float(coef[0])


def fig4_sim(outdir, workers=1):
    """Pulsed filtered spectra and time-resolved filtered signals."""
    files = []
    checks = []
    egrid = _grid(span=4.0e-9)
    cgrid = TimeGrid.from_span(0.0, 4.0e-9, 5e-12)
    axis = GHZ_ANG * np.round(np.arange(-5.5, 2.0001, 0.05), 6)

    qd_weights = {}
    for dur, tag in ((FIG4_DUR_SHORT, "short"), (FIG4_DUR_LONG, "long")):
        env = _square(egrid, duration=dur)
        for g_ghz in (0.0, FIG4_G_GHZ):
            p = _system(g_ghz)
            corr = two_time_correlation(p, env, cgrid)
            gtag = format(g_ghz, "g").replace(".", "p")
            spec = integrated_filtered_spectrum(p, env, 25e6, axis,
                                                corr=corr)
            files.append(write_csv(
                outdir / f"fig4c_{tag}_g{gtag}.csv",
                {"detuning_ghz": axis / GHZ_ANG,
                 "intensity": spec.intensity}))
            d = axis / GHZ_ANG
            qd_weights[(tag, g_ghz)] = float(
                spec.intensity[np.abs(d) <= 0.5].sum())

            sig_cols = {"time_ns": cgrid.times() / 1e-9}
            for fname, center in (("qd", 0.0), ("pump", p.delta)):
                filt = FilterSpec(center_detuning=center,
                                  bandwidth_fwhm=1e9)
                sig = filtered_time_signal(p, env, filt, corr=corr)
                sig_cols[fname] = sig.signal
                if (tag, g_ghz) == ("long", FIG4_G_GHZ):
                    end = SQUARE_START + SQUARE_EDGE + dur
                    if fname == "qd":
                        rate = _decay_rate(sig.times(), sig.signal,
                                           end + 0.4e-9, end + 2.2e-9)
                        target = p.gamma_qd
                        name = "fig4d.qd_component_decay_rate"
                    else:
                        rate = _decay_rate(sig.times(), sig.signal,
                                           end + 0.1e-9, end + 1.1e-9)
                        target = math.pi * 1e9
                        name = "fig4d.pump_component_decay_rate"
                    checks.append(Check(
                        name, abs(rate / target - 1.0) <= 0.15,
                        rate * 1e-9,
                        f"within 15% of {target * 1e-9:.3f} /ns"))
            files.append(write_csv(outdir / f"fig4d_{tag}_g{gtag}.csv",
                                   sig_cols))

    short_zero_phonon = qd_weights[("short", 0.0)] \
        / qd_weights[("short", FIG4_G_GHZ)]
    long_phonon = 1.0 - qd_weights[("long", 0.0)] \
        / qd_weights[("long", FIG4_G_GHZ)]
    checks.append(Check("fig4c.short_pulse_zero_phonon_fraction",
                        short_zero_phonon >= 0.5, short_zero_phonon,
                        ">= 0.5 of the driven emitter-line weight"))
    checks.append(Check("fig4c.long_pulse_phonon_assisted_fraction",
                        long_phonon >= 0.5, long_phonon,
                        ">= 0.5 of the driven emitter-line weight"))
    return files, checks


FIGURES = {
    "fig1c": fig1c,
    "fig1d": fig1d,
    "fig3c": fig3c,
    "fig3d": fig3d,
    "figS1": figS1,
    "figS5": figS5,
    "figS6": figS6,
    "fig2d_sim": fig2d_sim,
    "fig4_sim": fig4_sim,
}


def run_figure(figure_id: str, outdir, workers: int = 1):
    """Run one recipe; returns (files, checks)."""
    if figure_id not in FIGURES:
        known = ", ".join(sorted(FIGURES))
        raise ConfigError(f"unknown figure id {figure_id!r}; known: {known}")
    from pathlib import Path

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    return FIGURES[figure_id](outdir, workers=workers)
