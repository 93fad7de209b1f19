"""Simulation toolkit for an optically driven two-level emitter whose
transition frequency is modulated by a coherent acoustic mode.

Core pieces: Lindblad propagation under shaped detuned pulses
(:mod:`phonodot.solver`), phonon-assisted enhancement experiments
(:mod:`phonodot.experiments`), emission/excitation spectra via the quantum
regression theorem (:mod:`phonodot.spectroscopy`), and calibration fits
(:mod:`phonodot.calibration`). The ``phonodot`` command line exposes
simulate/sweep/spectrum/calibrate/optimize/reproduce entry points.
"""

from importlib.metadata import PackageNotFoundError, version

from .calibration import (CalibrationFit, fit_g_vs_power,
                          fit_modulation_index, fit_occupancy_scale)
from .errors import (AnalysisError, ConfigError, ConvergenceError, FitError,
                     FormatError, IntegrationError, ParameterError,
                     PhonodotError)
from .experiments import (EnhancementSeries, SweepResult, enhancement,
                          enhancement_spike_peak,
                          ladder_occupancies, optimize_pulse_duration,
                          phase_averaged_trajectory, rabi_power_sweep,
                          sideband_rabi_oracle)
from .linalg import BlochVector, bloch_vector, lindblad_rhs, occupancy
from .model import (LadderParams, SystemParams, generalized_rabi,
                    ladder_models, phonon_scattering_rates,
                    rotating_frame_hamiltonian)
from .pulses import (PowerCalibration, PulseEnvelope, TimeGrid, cw_envelope,
                     etalon_filtered_pulse, load_envelope,
                     load_envelope_file, power_to_rabi, square_pulse)
from .solver import (OperatorTrajectory, SolverConfig, Trajectory,
                     kernel_backend, propagate, propagate_conditional)
from .spectroscopy import (CorrelationGrid, FilteredSignal, FilterSpec,
                           SpectrumData, cw_scattering_spectrum,
                           excitation_spectrum, filtered_time_signal,
                           integrated_filtered_spectrum,
                           two_time_correlation)

try:
    __version__ = version("phonodot")
except PackageNotFoundError:  # pragma: no cover - source tree use
    __version__ = "0.0.0"

__all__ = [
    "AnalysisError", "BlochVector", "CalibrationFit", "ConfigError",
    "ConvergenceError", "CorrelationGrid", "EnhancementSeries",
    "FilterSpec", "FilteredSignal", "FitError", "FormatError",
    "IntegrationError", "LadderParams", "OperatorTrajectory",
    "ParameterError", "PhonodotError", "PowerCalibration", "PulseEnvelope",
    "SolverConfig", "SpectrumData", "SweepResult", "SystemParams",
    "TimeGrid", "Trajectory", "bloch_vector", "cw_envelope",
    "cw_scattering_spectrum", "enhancement", "enhancement_spike_peak", "etalon_filtered_pulse",
    "excitation_spectrum", "filtered_time_signal", "fit_g_vs_power",
    "fit_modulation_index", "fit_occupancy_scale", "generalized_rabi",
    "integrated_filtered_spectrum", "kernel_backend", "ladder_models",
    "ladder_occupancies", "lindblad_rhs", "load_envelope",
    "load_envelope_file", "occupancy", "optimize_pulse_duration",
    "phase_averaged_trajectory", "phonon_scattering_rates",
    "power_to_rabi", "propagate", "propagate_conditional",
    "rabi_power_sweep", "rotating_frame_hamiltonian",
    "sideband_rabi_oracle", "square_pulse", "two_time_correlation",
    "__version__",
]
