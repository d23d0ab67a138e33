"""Run configuration: a TOML (or JSON) file with sections, validated strictly.

Schema version 1. Every key is listed in ``SCHEMA`` with its default;
required keys have default ``REQUIRED``. Unknown sections or keys are errors.
See README.md for the annotated schema.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import tomli

from .kernels import FracParams, SpectralKernel, make_kernel
from .noise import GridSpec
from .sim import InitialCondition, SigmaSpec

SCHEMA_VERSION = 1
REQUIRED = object()


class ConfigError(ValueError):
    """Malformed configuration: parse failure, unknown key, wrong type or value."""


SCHEMA: dict[str, Any] = {
    "schema": REQUIRED,
    "seed": 0,
    "replicas": 100,
    "output": None,
    "params": {"beta": REQUIRED, "alpha": REQUIRED, "gamma": 0.0, "nu": 1.0, "lam": 1.0, "d": 1},
    # kernel keys depend on the type; checked by make_kernel
    "kernel": {"type": REQUIRED},
    "grid": {"L": 16.0, "n": 256, "dt": 1.0 / 128, "nt": 128},
    "sigma": {"kind": "constant", "value": 1.0, "eps": 1.0, "table_x": [], "table_y": []},
    "u0": {"kind": "zero", "value": 0.0, "samples": []},
    "simulate": {"sampler": "additive", "scheme": "midpoint", "batch": 256, "k_max": 20,
                 "tol": 1e-8, "save_fields": True},
    "analysis": {"holder": False, "lag_steps": [0, 1, 2, 4, 8], "growth_band": 0.3,
                 "tau": 0.0, "t_list": [5.0, 10.0, 20.0, 40.0]},
}

_KERNEL_KEYS = {"type", "d", "delta", "tau", "H", "total_mass"}


@dataclass
class RunConfig:
    params: FracParams
    kernel: SpectralKernel
    grid: Optional[GridSpec]
    sigma: SigmaSpec
    u0: InitialCondition
    replicas: int
    seed: int
    output: Optional[str]
    simulate: dict
    analysis: dict
    raw: dict = field(default_factory=dict)

    def echo(self) -> dict:
        """The fully-defaulted configuration, enough to rebuild this object."""
        return json.loads(json.dumps(self.raw))


def _type_ok(default, value) -> bool:
    if default is None or default is REQUIRED:
        return True
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, int):
        return isinstance(value, int) and not isinstance(value, bool)
    if isinstance(default, float):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(default, str):
        return isinstance(value, str)
    if isinstance(default, list):
        return isinstance(value, list)
    return True


def _merge(schema: dict, data: dict, where: str) -> dict:
    out = {}
    unknown = set(data) - set(schema)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")
    for key, default in schema.items():
        path = f"{where}.{key}" if where else key
        if isinstance(default, dict):
            sub = data.get(key, {})
            if not isinstance(sub, dict):
                raise ConfigError(f"{path}: expected a section")
            if key == "kernel":
                extra = set(sub) - _KERNEL_KEYS
                if extra:
                    raise ConfigError(f"{path}: unknown key(s) {sorted(extra)}")
                if "type" not in sub:
                    raise ConfigError(f"{path}.type: required")
                out[key] = dict(sub)
            else:
                out[key] = _merge(default, sub, path)
            continue
        if key in data:
            v = data[key]
            if not _type_ok(default, v):
                raise ConfigError(f"{path}: expected {type(default).__name__}, got {v!r}")
            out[key] = float(v) if isinstance(default, float) else v
        elif default is REQUIRED:
            raise ConfigError(f"{path}: required")
        else:
            out[key] = default
    return out


def _parse_text(text: str, name: str) -> dict:
    if name.endswith(".json") or text.lstrip().startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{name}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        return tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    m = _merge(SCHEMA, data, "")
    if m["schema"] != SCHEMA_VERSION:
        raise ConfigError(f"schema: version {m['schema']!r} not supported (expected {SCHEMA_VERSION})")
    try:
        params = FracParams(**m["params"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"params: {exc}") from exc
    kspec = dict(m["kernel"])
    kspec.setdefault("d", params.d)
    if kspec.get("type") == "white" and params.d != 1:
        raise ConfigError("kernel.type: white noise needs params.d = 1")
    try:
        kernel = make_kernel(kspec)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"kernel: {exc}") from exc
    m["kernel"] = kernel.describe()
    grid = None
    if params.d <= 2:  # simulation grids exist for d <= 2; admissibility checks work in any d
        try:
            grid = GridSpec(d=params.d, **m["grid"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"grid: {exc}") from exc
    s = m["sigma"]
    try:
        sigma = SigmaSpec(s["kind"], s["value"], s["eps"], tuple(s["table_x"]), tuple(s["table_y"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"sigma: {exc}") from exc
    u = m["u0"]
    try:
        u0 = InitialCondition(u["kind"], u["value"], tuple(u["samples"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"u0: {exc}") from exc
    if m["simulate"]["sampler"] not in ("additive", "walsh", "picard"):
        raise ConfigError("simulate.sampler: must be additive, walsh or picard")
    if m["simulate"]["scheme"] not in ("midpoint", "left"):
        raise ConfigError("simulate.scheme: must be midpoint or left")
    if not (isinstance(m["replicas"], int) and m["replicas"] >= 1):
        raise ConfigError("replicas: must be a positive integer")
    if not isinstance(m["seed"], int) or m["seed"] < 0:
        raise ConfigError("seed: must be a nonnegative integer")
    return RunConfig(params, kernel, grid, sigma, u0, m["replicas"], m["seed"], m["output"],
                     m["simulate"], m["analysis"], m)


def load(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    return from_dict(_parse_text(text, p.name))


def output_dir(cfg: Optional[RunConfig], override: Optional[str] = None) -> Path:
    """--out beats FRACSPDE_OUT beats the config's ``output`` beats ./fracspde-out."""
    for cand in (override, os.environ.get("FRACSPDE_OUT"), cfg.output if cfg else None):
        if cand:
            return Path(cand)
    return Path("fracspde-out")


def thread_count(override: Optional[int] = None) -> int:
    if override:
        return max(1, int(override))
    env = os.environ.get("FRACSPDE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"FRACSPDE_THREADS: not an integer ({env!r})") from exc
    return 1


def finite_float(x, name: str) -> float:
    v = float(x)
    if not math.isfinite(v):
        raise ConfigError(f"{name}: must be finite")
    return v
