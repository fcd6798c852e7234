"""Experiment configuration: INI-style sections, validated before any work.

Unknown sections or keys are rejected so typos fail fast; the resolved
configuration (all defaults made explicit) can be written back out and
reproduces the run exactly.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from .exceptions import ConfigError

__all__ = ["ExperimentConfig", "load_config", "parse_config", "dump_config"]

_SCHEMA = {
    "surface": {
        "name": ("str", "sphere", ("sphere", "dziuk", "star")),
    },
    "problem": {
        "solution": ("str", "xy", ("xy", "spherical_singular", "none")),
        "lambda": ("float", 0.6, None),
        "rhs_constant": ("float", 1.0, None),
    },
    "mesh": {
        "source": ("str", "icosphere", ("icosphere", "file", "adapted")),
        "level": ("int", 2, None),
        "path": ("str", "", None),
        "format": ("str", "", ("", "off", "obj")),
        "target_edges": ("int", 1000, None),
        "relax_sweeps": ("int", 4, None),
    },
    "refinement": {
        "mode": ("str", "uniform", ("uniform", "adaptive")),
        "rounds": ("int", 4, None),
        "theta": ("float", 0.5, None),
        "projection": ("str", "exact", ("exact", "first_order", "none")),
    },
    "quadrature": {
        "mass_degree": ("int", 2, None),
        "load_degree": ("int", 4, None),
        "norm_degree": ("int", 4, None),
    },
    "recovery": {
        "min_layers": ("int", 1, None),
    },
    "solver": {
        "tol": ("float", 1e-10, None),
        "max_iter": ("int", 0, None),
        "preconditioner": ("str", "jacobi", ("jacobi", "none")),
    },
    "output": {
        "directory": ("str", "out", None),
        "figures": ("bool", True, None),
        "fields": ("bool", False, None),
        "meshes": ("bool", False, None),
        "mesh_path": ("str", "projected.off", None),
    },
}


@dataclass
class ExperimentConfig:
    """Flat validated view of one experiment description."""

    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, section, key):
        return self.values[f"{section}.{key}"]


def _coerce(kind, raw, where):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            if isinstance(raw, bool):
                return raw
            low = str(raw).strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return str(raw)
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {kind}") from None


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate INI text; unknown sections/keys are errors."""
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key '{key}' in [{section}]")
    for section, keys in _SCHEMA.items():
        for key, (kind, default, allowed) in keys.items():
            where = f"[{section}] {key}"
            if parser.has_option(section, key):
                val = _coerce(kind, parser.get(section, key), where)
            else:
                val = default
            if allowed is not None and val not in allowed:
                raise ConfigError(
                    f"{where}: {val!r} not one of {sorted(allowed)}")
            values[f"{section}.{key}"] = val
    cfg = ExperimentConfig(values)
    _cross_validate(cfg)
    return cfg


def _cross_validate(cfg: ExperimentConfig) -> None:
    theta = cfg.get("refinement", "theta")
    if not 0.0 < theta < 1.0:
        raise ConfigError(f"[refinement] theta: {theta} not in (0, 1)")
    if cfg.get("refinement", "rounds") < 0:
        raise ConfigError("[refinement] rounds must be >= 0")
    if cfg.get("mesh", "level") < 0:
        raise ConfigError("[mesh] level must be >= 0")
    if cfg.get("mesh", "source") == "file" and not cfg.get("mesh", "path"):
        raise ConfigError("[mesh] path required when source = file")
    if cfg.get("mesh", "source") == "adapted":
        if cfg.get("mesh", "target_edges") < 30:
            raise ConfigError("[mesh] target_edges must be >= 30")
        if cfg.get("problem", "solution") == "none":
            raise ConfigError(
                "an adapted initial mesh needs a solvable problem")
    if cfg.get("recovery", "min_layers") < 1:
        raise ConfigError("[recovery] min_layers must be >= 1")
    if cfg.get("solver", "tol") <= 0:
        raise ConfigError("[solver] tol must be positive")
    lam = cfg.get("problem", "lambda")
    if cfg.get("problem", "solution") == "spherical_singular":
        if not 0.0 < lam:
            raise ConfigError("[problem] lambda must be positive")
        if cfg.get("surface", "name") != "sphere":
            raise ConfigError(
                "spherical_singular solution requires [surface] name = sphere")


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def dump_config(cfg: ExperimentConfig) -> str:
    """Serialize with every key explicit (the effective configuration)."""
    out = []
    for section, keys in _SCHEMA.items():
        out.append(f"[{section}]")
        for key in keys:
            val = cfg.get(section, key)
            if isinstance(val, bool):
                val = "true" if val else "false"
            elif isinstance(val, float):
                val = repr(val)
            out.append(f"{key} = {val}")
        out.append("")
    return "\n".join(out)
