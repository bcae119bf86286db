"""Scenario configuration: loading, schema validation and preset defaults.

A config file is JSON or YAML with the top-level keys

    schema_version: 1
    kind: static | simulate | equilibrium | capacity | ri | growth | home-bias
          | representation-check | chamberlain
    preset: optional preset name supplying default parameters
    parameters: mapping (keys depend on kind)
    seed: integer
    output: {path: ..., format: csv | json}

Unknown keys at any level are rejected before anything runs.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import presets
from .errors import ConfigError

SCHEMA_VERSION = 1
KINDS = ("static", "simulate", "equilibrium", "capacity", "ri", "growth", "home-bias", "representation-check", "chamberlain")
FORMATS = ("csv", "json")
TOP_LEVEL = {"schema_version", "kind", "preset", "parameters", "seed", "output"}

_RUNNING = {
    "environment": "running-example",
    "lam": 1.0,
    "mus": [-0.4, 0.0, 0.4],
    "pi": None,
}

#: Allowed parameter keys per kind, with defaults. ``environment`` accepts a preset name or
#: an explicit mapping (see ``environment_keys``).
PARAMETERS = {
    "static": _RUNNING,
    "simulate": {
        "environment": "cycle-env",
        "mu_bar": 0.0,
        "horizon": 10_000,
        "n_seeds": 1,
        "snapshot_every": 100,
        "window": None,
        "workers": 1,
    },
    "equilibrium": {"environment": "cycle-env", "mu_bar": 0.0, "c": None, "resolution": 1 / 200},
    "capacity": {
        "environment": "running-example",
        "lam": 1.0,
        "action": "r",
        "pi": [1.0, 0.0],
        "mu_grid": [round(0.1 * k, 10) for k in range(10)],
        "B": None,
    },
    "ri": {
        "v": presets.ri_2x2()["v"],
        "g": presets.ri_2x2()["g"],
        "xi": 0.5,
        "lam": 1.0,
        "mu": 0.3,
        "states": list(presets.ri_2x2()["states"]),
        "actions": list(presets.ri_2x2()["actions"]),
        "mu_grid": None,
        "damping": 0.5,
        "tol": 1e-10,
        "max_iters": 100_000,
    },
    "growth": {
        "gross_returns": presets.GROWTH_COUNTEREXAMPLE["gross_returns"],
        "p_true": presets.GROWTH_COUNTEREXAMPLE["p_true"],
        "p_mis": presets.GROWTH_COUNTEREXAMPLE["p_mis"],
        "mu_grid": [0.0] + presets.GROWTH_COUNTEREXAMPLE["mu_grid"],
    },
    "home-bias": dict(presets.HOME_BIAS_SWEEP),
    "representation-check": {"u": [1.0, 0.0], "q": [0.7, 0.3], "lam": 1.0, "mu": 0.4},
    "chamberlain": dict(presets.CHAMBERLAIN, n_lambda=51, n_mubar=200),
}

ENVIRONMENT_KEYS = {"actions", "outcomes", "u", "models", "true_dgp", "prior", "c", "lambda_cap", "lambda0"}

#: Preset name -> (kind, parameter overrides).
PRESET_CONFIGS = {
    "running-example": ("static", {}),
    "cycle-env": ("simulate", {"environment": "cycle-env", "mu_bar": 0.0, "horizon": 100_000}),
    "growth-counterexample": ("growth", {}),
    "home-bias-sweep": ("home-bias", {}),
    "chamberlain-gap": ("chamberlain", {}),
    "ri-2x2": ("ri", {"mu_grid": [0.0, 0.3, 0.6, 0.9, 0.999]}),
}


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    parameters: dict
    seed: int = 0
    preset: str | None = None
    output_path: str | None = None
    output_format: str = "json"
    schema_version: int = SCHEMA_VERSION
    source: dict = field(default_factory=dict)

    def echo(self) -> dict:
        """The resolved config, as embedded in every report."""
        return {
            "schema_version": self.schema_version,
            "kind": self.kind,
            "preset": self.preset,
            "parameters": copy.deepcopy(self.parameters),
            "seed": self.seed,
            "output": {"path": self.output_path, "format": self.output_format},
        }


def load_file(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text) if p.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping at the top level")
    return data


def _check_keys(where: str, given, allowed) -> None:
    extra = sorted(set(given) - set(allowed))
    if extra:
        raise ConfigError(f"unknown keys in {where}: {', '.join(extra)}")


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _validate_environment(env) -> None:
    if isinstance(env, str):
        if env not in ("running-example", "cycle-env", "correct-spec"):
            raise ConfigError(f"unknown environment preset {env!r}")
        return
    if not isinstance(env, dict):
        raise ConfigError("environment must be a preset name or a mapping")
    _check_keys("parameters.environment", env, ENVIRONMENT_KEYS)
    for k in ("actions", "outcomes", "u", "models", "true_dgp"):
        if k not in env:
            raise ConfigError(f"parameters.environment.{k} is required")
    if not isinstance(env["models"], dict) or not env["models"]:
        raise ConfigError("parameters.environment.models must map model names to matrices")


def resolve(data: dict, kind: str | None = None, preset: str | None = None, seed: int | None = None,
            out: str | None = None, fmt: str | None = None, horizon: int | None = None) -> ScenarioConfig:
    """Merge file contents, preset defaults and command-line overrides, then validate."""
    data = copy.deepcopy(data or {})
    _check_keys("config", data, TOP_LEVEL)
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r}; expected {SCHEMA_VERSION}")
    preset = preset or data.get("preset")
    base = {}
    if preset is not None:
        if preset not in PRESET_CONFIGS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(presets.PRESET_NAMES)}")
        p_kind, base = PRESET_CONFIGS[preset]
        if kind is not None and kind != p_kind:
            raise ConfigError(f"preset {preset!r} is a {p_kind!r} scenario, not {kind!r}")
        kind = p_kind
    file_kind = data.get("kind")
    if file_kind is not None and kind is not None and file_kind != kind:
        raise ConfigError(f"config kind {file_kind!r} does not match command {kind!r}")
    kind = kind or file_kind
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {', '.join(KINDS)}, got {kind!r}")
    params = dict(PARAMETERS[kind])
    params.update(base)
    given = data.get("parameters") or {}
    if not isinstance(given, dict):
        raise ConfigError("parameters must be a mapping")
    _check_keys("parameters", given, PARAMETERS[kind])
    params.update(given)
    if horizon is not None:
        if kind != "simulate":
            raise ConfigError("--horizon applies only to simulate")
        params["horizon"] = horizon
    if "environment" in params:
        _validate_environment(params["environment"])
    if kind == "simulate":
        for k in ("horizon", "n_seeds", "snapshot_every", "workers"):
            if not _is_int(params[k]) or params[k] < 1:
                raise ConfigError(f"parameters.{k} must be a positive integer")

    seed = seed if seed is not None else data.get("seed", 0)
    if not _is_int(seed) or seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    output = data.get("output") or {}
    if not isinstance(output, dict):
        raise ConfigError("output must be a mapping")
    _check_keys("output", output, {"path", "format"})
    path = out if out is not None else output.get("path")
    suffix = Path(path).suffix.lstrip(".") if path else ""
    fmt = fmt or output.get("format") or (suffix if suffix in FORMATS else "json")
    if fmt not in FORMATS:
        raise ConfigError(f"output format must be csv or json, got {fmt!r}")
    return ScenarioConfig(kind, params, seed, preset, path, fmt, SCHEMA_VERSION, data)
