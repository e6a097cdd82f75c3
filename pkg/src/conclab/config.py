"""Experiment configuration, INI round-tripping, and the matrix mini-language."""

from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import linalg
from .distributions import SeedStream

SECTION = "experiment"
THREADS_ENV = "CONCLAB_THREADS"


@dataclass
class ExperimentConfig:
    subcommand: str = ""
    matrix: str = "identity:20"
    dist: str = "gaussian"
    t_grid: str = "1:40:20"
    samples: int = 100_000
    conf: float = 0.99
    seed: int = 0
    c: float = 0.125
    C: float = 2.0
    C3: float = 1.0
    K: str = "analytic"
    workers: int = 1
    out: str = ""
    check: str = "holds"
    y: str = "zero"
    n: int = 10
    draws: int = 200
    s_scale: float = 1.0
    t_scale: float = 1.0
    trials: int = 20
    lambdas: str = "0.1,0.25,0.4"
    tol: float = 0.02
    curve: str = ""
    safety: float = 1.0
    m: int = 3
    chunk: int = 1 << 15

    def to_ini(self) -> str:
        lines = [f"[{SECTION}]"]
        for f in fields(self):
            val = getattr(self, f.name)
            lines.append(f"{f.name} = {val!r}" if isinstance(val, float) else f"{f.name} = {val}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def read_ini(path) -> dict:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    if not cp.read(path):
        raise OSError(f"cannot read config file {path}")
    if SECTION not in cp:
        raise ValueError(f"config file {path} has no [{SECTION}] section")
    out = {}
    for key, val in cp[SECTION].items():
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES:
            raise ValueError(f"unknown config key {key!r}")
        out[key] = coerce(key, val)
    return out


def env_workers(default: int = 1) -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return default
    val = int(raw)
    if val < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer")
    return val


def parse_grid(spec: str) -> np.ndarray:
    """``min:max:count`` (linear) or ``min:max:count:log``; or a comma list."""
    if ":" not in spec:
        vals = np.array([float(v) for v in spec.split(",")])
        return np.sort(vals)
    parts = spec.split(":")
    if len(parts) not in (3, 4):
        raise ValueError(f"bad grid spec {spec!r}")
    lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    spacing = parts[3] if len(parts) == 4 else "linear"
    if count < 1 or hi < lo:
        raise ValueError(f"bad grid spec {spec!r}")
    if spacing == "log":
        if lo <= 0:
            raise ValueError("log grid needs a positive minimum")
        return np.geomspace(lo, hi, count)
    if spacing not in ("linear", "lin"):
        raise ValueError(f"unknown grid spacing {spacing!r}")
    return np.linspace(lo, hi, count)


def parse_floats(spec: str) -> list[float]:
    return [float(v) for v in spec.split(",") if v.strip()]


def build_matrix(spec: str) -> np.ndarray:
    """Matrix from the generator mini-language.

    ``identity:n``, ``diag:v1,v2,...``, ``projection:n,r:seed`` (rank-r
    orthogonal projector), ``gaussian:m,n:seed``, ``coord:n,d`` (first d
    coordinate vectors as columns), ``file:path``.
    """
    kind, _, rest = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "identity":
        return np.eye(int(rest))
    if kind == "diag":
        return np.diag(parse_floats(rest))
    if kind == "file":
        return linalg.read_matrix(rest)
    if kind == "coord":
        n, d = (int(v) for v in rest.split(","))
        return np.eye(n)[:, :d]
    if kind in ("gaussian", "projection"):
        dims, _, seed = rest.partition(":")
        a, b = (int(v) for v in dims.split(","))
        rng = SeedStream(int(seed or 0), 0).generator()
        if kind == "gaussian":
            return rng.standard_normal((a, b))
        basis = rng.standard_normal((a, b))
        return np.eye(a) - linalg.orth_complement_projector(basis)
    raise ValueError(f"unknown matrix generator {spec!r}")


def parse_vector(spec: str, length: int) -> np.ndarray:
    if spec.strip().lower() in ("zero", "0", ""):
        return np.zeros(length)
    return np.array(parse_floats(spec))


def load_config(path: Optional[str]) -> dict:
    return read_ini(Path(path)) if path else {}
