"""Run configuration: YAML schema, unit conversion, hashing.

Config files quote every frequency as a plain frequency in GHz (the
angular value divided by 2*pi) and times in ns or ps; the loader converts
to internal angular rad/s and seconds. ``parse(serialize(cfg))`` is the
identity for any valid config.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import yaml

from .errors import ConfigError
from .model import GHZ, NS, PS, SystemParams, TWO_PI
from .pulses import (PulseEnvelope, TimeGrid, cw_envelope,
                     etalon_filtered_pulse, load_envelope_file, square_pulse)
from .solver import SolverConfig

__all__ = [
    "SCHEMA_VERSION",
    "GridConfig",
    "PulseConfig",
    "SolverSection",
    "ExperimentConfig",
    "OutputConfig",
    "RunConfig",
    "parse_config",
    "serialize_config",
    "load_config_file",
    "config_hash",
]

SCHEMA_VERSION = 1

PULSE_SHAPES = ("square", "etalon_square", "cw", "file")
EXPERIMENT_KINDS = ("simulate", "phase_average", "enhancement", "ladder",
                    "spectrum_cw", "spectrum_excitation", "filtered_time",
                    "filtered_spectrum", "power_sweep", "optimize")


@dataclass(frozen=True)
class SystemSection:
    delta_ghz: float
    omega_saw_ghz: float
    g_ghz: float = 0.0
    phi_rad: float = 0.0
    gamma_qd_ghz: float = 0.0
    gamma_z_ghz: float = 0.0
    g0_ghz: float | None = None
    n_phonons: float | None = None

    def build(self) -> SystemParams:
        return SystemParams.from_ghz(
            delta_ghz=self.delta_ghz, omega_saw_ghz=self.omega_saw_ghz,
            g_ghz=self.g_ghz, phi=self.phi_rad,
            gamma_qd_ghz=self.gamma_qd_ghz, gamma_z_ghz=self.gamma_z_ghz,
            g0_ghz=self.g0_ghz, n_phonons=self.n_phonons)


@dataclass(frozen=True)
class GridConfig:
    t0_ns: float = 0.0
    span_ns: float = 3.0
    dt_ps: float = 1.0

    def build(self) -> TimeGrid:
        return TimeGrid.from_span(self.t0_ns * NS, self.span_ns * NS,
                                  self.dt_ps * PS)


@dataclass(frozen=True)
class PulseConfig:
    shape: str = "square"
    start_ns: float = 0.01
    duration_ns: float = 0.13
    rise_ps: float = 15.0
    fall_ps: float = 15.0
    peak_rabi_ghz: float = 1.0
    filter_bandwidth_mhz: float | None = None
    path: str | None = None

    def __post_init__(self):
        if self.shape not in PULSE_SHAPES:
            raise ConfigError(f"pulse.shape must be one of {PULSE_SHAPES}")
        if self.shape == "etalon_square" and not self.filter_bandwidth_mhz:
            raise ConfigError("etalon_square needs pulse.filter_bandwidth_mhz")
        if self.shape == "file" and not self.path:
            raise ConfigError("file-shaped pulse needs pulse.path")

    def build(self, grid: TimeGrid) -> PulseEnvelope:
        peak = self.peak_rabi_ghz * TWO_PI * GHZ
        if self.shape == "cw":
            return cw_envelope(grid, peak)
        if self.shape == "file":
            return load_envelope_file(self.path, peak, grid)
        env = square_pulse(grid, self.start_ns * NS, self.duration_ns * NS,
                           self.rise_ps * PS, self.fall_ps * PS, peak)
        if self.shape == "etalon_square":
            env = etalon_filtered_pulse(env,
                                        self.filter_bandwidth_mhz * 1e6)
        return env


@dataclass(frozen=True)
class SolverSection:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step_ps: float = 50.0
    output_dt_ps: float = 1.0

    def build(self) -> SolverConfig:
        return SolverConfig(rel_tol=self.rel_tol, abs_tol=self.abs_tol,
                            max_step=self.max_step_ps * PS,
                            output_dt=self.output_dt_ps * PS)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "simulate"
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(
                f"experiment.kind must be one of {EXPERIMENT_KINDS}")


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    format: str = "csv"

    def __post_init__(self):
        if self.format != "csv":
            raise ConfigError("only csv output is supported")


@dataclass(frozen=True)
class RunConfig:
    system: SystemSection
    grid: GridConfig = field(default_factory=GridConfig)
    pulse: PulseConfig = field(default_factory=PulseConfig)
    solver: SolverSection = field(default_factory=SolverSection)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    schema_version: int = SCHEMA_VERSION


def _build_section(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping")
    fields = {f.name for f in cls.__dataclass_fields__.values()}
    unknown = set(data) - fields
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def parse_config(data: dict) -> RunConfig:
    """Validate a plain mapping (already parsed YAML) into a RunConfig."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    version_seen = data.get("schema_version", SCHEMA_VERSION)
    if version_seen != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version_seen}")
    if "system" not in data:
        raise ConfigError("system: section is required")
    known = {"schema_version", "system", "grid", "pulse", "solver",
             "experiment", "output"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    return RunConfig(
        system=_build_section(SystemSection, data["system"], "system"),
        grid=_build_section(GridConfig, data.get("grid", {}), "grid"),
        pulse=_build_section(PulseConfig, data.get("pulse", {}), "pulse"),
        solver=_build_section(SolverSection, data.get("solver", {}),
                              "solver"),
        experiment=_build_section(ExperimentConfig,
                                  data.get("experiment", {}), "experiment"),
        output=_build_section(OutputConfig, data.get("output", {}),
                              "output"),
        schema_version=SCHEMA_VERSION,
    )


def serialize_config(cfg: RunConfig) -> str:
    """Deterministic YAML text for a RunConfig."""
    data = asdict(cfg)
    return yaml.safe_dump(data, sort_keys=True, default_flow_style=False)


def load_config_file(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(data or {})


def config_hash(cfg: RunConfig) -> str:
    """Platform-stable hash of the resolved configuration."""
    canonical = json.dumps(asdict(cfg), sort_keys=True,
                           separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
