"""Dataclass configuration objects and strict JSON (de)serialization."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

F_KINDS = ("none", "log_damped_power", "subcritical_power")
G_KINDS = ("none", "bounded_mixed")


@dataclass(frozen=True)
class PerturbationSpec:
    """Choice and parameters of the lower-order source terms f and g."""

    kind_f: str = "none"
    kind_g: str = "none"
    M0: float = 1.0
    alpha: float = 2.0
    epsilon: float = 1e-3
    q_exp: float = 1.5
    x0: float = 0.0
    T0: float = 1.0

    def __post_init__(self):
        if self.kind_f not in F_KINDS:
            raise ValueError(f"unknown kind_f {self.kind_f!r}")
        if self.kind_g not in G_KINDS:
            raise ValueError(f"unknown kind_g {self.kind_g!r}")
        if self.M0 < 0:
            raise ValueError("M0 must be >= 0")
        if self.alpha <= 1:
            raise ValueError("alpha must be > 1")
        if self.T0 <= 0:
            raise ValueError("T0 must be > 0")

    @property
    def active(self) -> bool:
        return self.kind_f != "none" or self.kind_g != "none"


@dataclass(frozen=True)
class ProblemConfig:
    """Global problem parameters: nonlinearity, soliton count, target center."""

    p: float = 3.0
    k: int = 2
    zeta0: float = 0.0
    c1: float = 1.0
    s0: float = 50.0
    perturbation: PerturbationSpec = field(default_factory=PerturbationSpec)

    def __post_init__(self):
        if self.p <= 1:
            raise ValueError("p must be > 1")
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.c1 <= 0:
            raise ValueError("c1 must be > 0")
        if self.s0 <= 0:
            raise ValueError("s0 must be > 0")


def pbar(p: float) -> float:
    """Effective power entering the remainder-decay estimate."""
    if p < 2:
        return p
    if p == 2:
        return 2 - 1 / 100
    return 2.0


def gammas(k: int, p: float) -> np.ndarray:
    """Per-soliton drift exponents gamma_i = (p-1)(-i + (k+1)/2), i=1..k."""
    i = np.arange(1, k + 1, dtype=float)
    return (p - 1) * (-i + (k + 1) / 2)


def shrink_exponent(p: float, pert: PerturbationSpec, delta: float = 0.5) -> float:
    """Decay exponent of the shrinking-set gauge on the mode coordinates.

    One quarter of the smallest of {1, delta, pbar/2 - 1/2, (alpha-1)/2};
    the alpha term participates only when a perturbation is switched on.
    """
    terms = [1.0, delta, pbar(p) / 2 - 0.5]
    if pert.active:
        terms.append((pert.alpha - 1) / 2)
    eta = 0.25 * min(terms)
    if eta <= 0:
        raise ValueError("shrink exponent must be positive; check delta and alpha")
    return eta


@dataclass(frozen=True)
class SimConfig:
    """Discretization and time-stepping knobs for the similarity-variable PDE."""

    n: int = 64
    c_cfl: float = 2.0
    cadence: float = 0.05
    filter_fraction: float = 0.1
    filter_strength: float = 0.5
    filter_order: int = 2
    blow_limit: float = 1e6
    max_halvings: int = 3

    def __post_init__(self):
        if self.n < 8:
            raise ValueError("n must be >= 8")
        if not (0 < self.filter_strength <= 1):
            raise ValueError("filter_strength in (0, 1]")
        if not (0 <= self.filter_fraction < 1):
            raise ValueError("filter_fraction in [0, 1)")


@dataclass(frozen=True)
class ModulationConfig:
    """Newton solve parameters for the orthogonal soliton decomposition."""

    newton_tol: float = 1e-10
    max_iter: int = 50
    fd_step: float = 1e-6
    min_gap: float | None = None  # None -> (p-1)/8 * log(s0) at call time
    armijo_c: float = 1e-4
    armijo_max_backtracks: int = 12


@dataclass(frozen=True)
class ShootingConfig:
    """Parameter-ball scan and subdivision-search settings."""

    s_max: float = 56.0
    delta: float = 0.5
    level0_per_axis: int = 5
    subdiv_per_axis: int = 3
    max_depth: int = 6
    threads: int = 1

    def __post_init__(self):
        if self.level0_per_axis < 2 or self.subdiv_per_axis < 2:
            raise ValueError("need at least 2 cells per axis")


@dataclass(frozen=True)
class RunConfig:
    """Top-level bundle consumed by the command-line front end."""

    problem: ProblemConfig = field(default_factory=ProblemConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    modulation: ModulationConfig = field(default_factory=ModulationConfig)
    shooting: ShootingConfig = field(default_factory=ShootingConfig)
    out_dir: str = "out"
    seed: int = 0
    nu0: tuple[float, ...] | None = None
    phi10: float | None = None
    horizon: float | None = None


_NESTED = {
    "problem": ProblemConfig,
    "sim": SimConfig,
    "modulation": ModulationConfig,
    "shooting": ShootingConfig,
    "perturbation": PerturbationSpec,
}


def _build(cls, data: dict[str, Any], path: str):
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ValueError(f"unknown config key(s) at {path}: {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in _NESTED and isinstance(value, dict):
            kwargs[key] = _build(_NESTED[key], value, f"{path}.{key}")
        elif key == "nu0" and value is not None:
            kwargs[key] = tuple(float(v) for v in value)
        else:
            kwargs[key] = value
    return cls(**kwargs)


def run_config_from_dict(data: dict[str, Any]) -> RunConfig:
    if not isinstance(data, dict):
        raise ValueError("config root must be a JSON object")
    return _build(RunConfig, data, "$")


def load_run_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return run_config_from_dict(json.load(fh))


def run_config_to_dict(cfg: RunConfig) -> dict[str, Any]:
    def convert(obj):
        if dataclasses.is_dataclass(obj):
            return {f.name: convert(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
        if isinstance(obj, tuple):
            return list(obj)
        return obj

    return convert(cfg)


def dump_run_config(cfg: RunConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(run_config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
