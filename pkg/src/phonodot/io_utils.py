"""Deterministic result serialization: CSV series, JSON manifests.

Data files must be byte-identical across runs of the same configuration;
floats are therefore formatted with a fixed '%.12g' and all metadata that
can vary (wall time) is confined to the manifest.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["format_float", "write_csv", "write_json", "ResultManifest",
           "Check"]


def format_float(x: float) -> str:
    return format(float(x), ".12g")


def write_csv(path, columns: dict) -> Path:
    """Write named columns (equal-length 1-D arrays) as CSV."""
    path = Path(path)
    names = list(columns)
    arrays = [np.asarray(columns[n]).ravel() for n in names]
    n = arrays[0].shape[0]
    if any(a.shape[0] != n for a in arrays):
        raise ValueError("columns differ in length")
    lines = [",".join(names)]
    for i in range(n):
        lines.append(",".join(format_float(a[i]) for a in arrays))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_json(path, data) -> Path:
    path = Path(path)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


@dataclass
class Check:
    """One quantitative acceptance check attached to a result."""

    name: str
    passed: bool
    value: float
    target: str

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed),
                "value": float(self.value), "target": self.target}

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {format_float(self.value)} " \
               f"(target {self.target})"


@dataclass
class ResultManifest:
    """Provenance record written next to every result set."""

    command: str
    config_hash: str
    tool_version: str
    outputs: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    started: float = field(default_factory=time.time)

    def add_output(self, path) -> None:
        self.outputs.append(Path(path).name)

    def add_check(self, check: Check) -> None:
        self.checks.append(check)

    def write(self, directory) -> Path:
        data = {
            "tool": "phonodot",
            "tool_version": self.tool_version,
            "command": self.command,
            "config_hash": self.config_hash,
            "wall_time_s": round(time.time() - self.started, 3),
            "outputs": sorted(self.outputs),
            "checks": [c.as_dict() for c in self.checks],
        }
        return write_json(Path(directory) / "manifest.json", data)

    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)
