"""Experiment configuration: JSON ingestion, validation, canonical hashing."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .geometry import (
    MoranSystem,
    binary_full,
    cantor,
    carpet4,
    demo_periodic,
    periodic,
)
from .measure import CylinderMeasure
from .quantizer import LloydConfig

_DEFAULTS = {
    "r": 2.0,
    "depth": 8,
    "k_max": 3,
    "pairing_multiplier": 1,
    "k0": 2,
    "budget": 1_000_000,
    "band_tol": 4.0,
    "constants_H": 2,
    "svg": False,
    "output_dir": "out",
}

_QUANT_DEFAULTS = {"restarts": 8, "seed": 0, "tol": 1e-10, "max_iter": 500}


@dataclass
class ExperimentConfig:
    system: MoranSystem
    measure: CylinderMeasure
    r: float
    depth: int
    n_values: list[int]
    k_max: int
    quantizer: LloydConfig
    pairing_multiplier: int
    k0: int
    budget: int
    band_tol: float
    constants_H: int
    svg: bool
    output_dir: str
    resolved: dict = field(default_factory=dict)

    def config_hash(self) -> str:
        """Digest of the fully resolved semantic fields."""
        blob = json.dumps(self.resolved, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _require(cond: bool, key: str, msg: str):
    if not cond:
        raise ConfigError(f"{key}: {msg}")


def _build_system(raw: dict) -> MoranSystem:
    template = raw.get("template")
    _require(template is not None, "system.template", "missing")
    try:
        if template == "cantor":
            return cantor(float(raw.get("gap", 1 / 3)))
        if template == "binary-full":
            return binary_full()
        if template == "carpet4":
            return carpet4(float(raw.get("ratio", 0.25)))
        if template == "periodic-demo":
            return periodic_demo_system()
        if template == "periodic":
            _require("levels" in raw, "system.levels", "missing for periodic template")
            return periodic(
                raw["levels"],
                dimension=int(raw.get("dimension", 1)),
                name=raw.get("name", "periodic"),
            )
    except ConfigError as exc:
        raise ConfigError(f"system: {exc}") from exc
    raise ConfigError(f"system.template: unknown template {template!r}")


def periodic_demo_system() -> MoranSystem:
    return demo_periodic()


def _build_measure(raw: dict, system: MoranSystem) -> CylinderMeasure:
    if raw.get("uniform", False):
        return CylinderMeasure.uniform(system)
    _require("masses" in raw, "measure.masses", "missing (or set uniform: true)")
    try:
        return CylinderMeasure.for_system(system, raw["masses"])
    except ConfigError as exc:
        raise ConfigError(f"measure: {exc}") from exc


def _n_values(raw: dict) -> list[int]:
    if "n_values" in raw:
        vals = [int(v) for v in raw["n_values"]]
    elif "n_range" in raw:
        pair = raw["n_range"]
        _require(
            isinstance(pair, (list, tuple)) and len(pair) == 2,
            "n_range", "expected [lo, hi]",
        )
        vals = list(range(int(pair[0]), int(pair[1]) + 1))
    else:
        vals = list(range(1, 9))
    _require(bool(vals) and min(vals) >= 1, "n_range", "values must be >= 1")
    return vals


def from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("top level: expected an object")
    _require("system" in raw, "system", "missing")
    _require("measure" in raw, "measure", "missing")
    system = _build_system(raw["system"])
    measure = _build_measure(raw["measure"], system)

    vals = {key: raw.get(key, default) for key, default in _DEFAULTS.items()}
    _require(float(vals["r"]) > 0, "r", f"must be positive, got {vals['r']}")
    _require(int(vals["depth"]) >= 1, "depth", "must be >= 1")
    _require(int(vals["k_max"]) >= 0, "k_max", "must be >= 0")
    _require(int(vals["pairing_multiplier"]) >= 1, "pairing_multiplier", "must be >= 1")
    _require(int(vals["budget"]) >= 1, "budget", "must be >= 1")

    qraw = dict(_QUANT_DEFAULTS)
    qraw.update(raw.get("quantizer", {}))
    _require(int(qraw["restarts"]) >= 1, "quantizer.restarts", "must be >= 1")
    _require(float(qraw["tol"]) > 0, "quantizer.tol", "must be positive")
    _require(int(qraw["max_iter"]) >= 1, "quantizer.max_iter", "must be >= 1")
    quant = LloydConfig(
        restarts=int(qraw["restarts"]),
        seed=int(qraw["seed"]),
        tol=float(qraw["tol"]),
        max_iter=int(qraw["max_iter"]),
    )

    n_values = _n_values(raw)
    resolved = {
        "system": raw["system"],
        "measure": raw["measure"],
        "r": float(vals["r"]),
        "depth": int(vals["depth"]),
        "n_values": n_values,
        "k_max": int(vals["k_max"]),
        "quantizer": {
            "restarts": quant.restarts,
            "seed": quant.seed,
            "tol": quant.tol,
            "max_iter": quant.max_iter,
        },
        "pairing_multiplier": int(vals["pairing_multiplier"]),
        "k0": int(vals["k0"]),
        "budget": int(vals["budget"]),
        "band_tol": float(vals["band_tol"]),
        "constants_H": int(vals["constants_H"]),
    }
    return ExperimentConfig(
        system=system,
        measure=measure,
        r=float(vals["r"]),
        depth=int(vals["depth"]),
        n_values=n_values,
        k_max=int(vals["k_max"]),
        quantizer=quant,
        pairing_multiplier=int(vals["pairing_multiplier"]),
        k0=int(vals["k0"]),
        budget=int(vals["budget"]),
        band_tol=float(vals["band_tol"]),
        constants_H=int(vals["constants_H"]),
        svg=bool(vals["svg"]),
        output_dir=str(vals["output_dir"]),
        resolved=resolved,
    )


def load(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}")
    return from_dict(raw)
