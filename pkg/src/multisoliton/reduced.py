"""Finite-dimensional dynamics of the soliton centers.

The centers obey a nearest-neighbor system with exponential interaction;
its explicit solution has log-spaced gaps and zero center of mass. The
linearization around that solution is a symmetric tridiagonal matrix whose
spectrum {-i(i-1)/2} separates one neutral direction (uniform shifts, the
center of mass) from decaying ones.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh_tridiagonal

from .config import ProblemConfig


@dataclass(frozen=True)
class ReducedConfig:
    k: int
    p: float
    c1: float = 1.0
    zeta0: float = 0.0

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.p <= 1:
            raise ValueError("p must be > 1")
        if self.c1 <= 0:
            raise ValueError("c1 must be > 0")


def reduced_config(problem: ProblemConfig) -> ReducedConfig:
    return ReducedConfig(k=problem.k, p=problem.p, c1=problem.c1, zeta0=problem.zeta0)


@dataclass(frozen=True)
class ReducedState:
    s: float
    zeta: np.ndarray

    def __post_init__(self):
        if self.s <= 0:
            raise ValueError("s must be > 0")


def sigmas(k: int) -> np.ndarray:
    """Off-diagonal couplings sigma_i = i(k-i)/2, i=1..k-1."""
    i = np.arange(1, k, dtype=float)
    return i * (k - i) / 2


def center_offsets(cfg: ReducedConfig) -> np.ndarray:
    """Constant offsets of the explicit solution, zero-mean.

    Gap factors L_i = (p-1) sigma_i / (2 c1) fix the consecutive offset
    differences; the additive constant is pinned by sum = 0.
    """
    sig = sigmas(cfg.k)
    L = (cfg.p - 1) * sig / (2 * cfg.c1)
    gaps = -((cfg.p - 1) / 2) * np.log(L)
    alpha = np.concatenate([[0.0], np.cumsum(gaps)])
    return alpha - alpha.mean()


def reference_centers(cfg: ReducedConfig, s: float) -> np.ndarray:
    """Explicit log-spaced trajectory (without the zeta0 translation)."""
    if s <= 0:
        raise ValueError("s must be > 0")
    i = np.arange(1, cfg.k + 1, dtype=float)
    return (i - (cfg.k + 1) / 2) * ((cfg.p - 1) / 2) * np.log(s) + center_offsets(cfg)


def center_rhs(cfg: ReducedConfig, zeta: np.ndarray) -> np.ndarray:
    """Nearest-neighbor interaction velocities; missing neighbors contribute 0."""
    zeta = np.asarray(zeta, dtype=float)
    if np.any(np.diff(zeta) <= 0):
        warnings.warn("centers not strictly increasing", stacklevel=2)
    ex = np.exp(-(2 / (cfg.p - 1)) * np.diff(zeta))
    left = np.concatenate([[0.0], ex])
    right = np.concatenate([ex, [0.0]])
    return cfg.c1 * (left - right)


@dataclass(frozen=True)
class ReducedTrajectory:
    cfg: ReducedConfig
    s: np.ndarray
    zeta: np.ndarray  # shape (len(s), k)

    def xi(self) -> np.ndarray:
        bar = np.array([reference_centers(self.cfg, si) for si in self.s])
        return (2 / (self.cfg.p - 1)) * (self.zeta - bar - self.cfg.zeta0)

    def phi(self) -> np.ndarray:
        return np.array([to_phi_coords(self.cfg, row) for row in self.xi()])


def integrate_centers(
    cfg: ReducedConfig,
    state0: ReducedState,
    s_end: float,
    forcing=None,
    n_out: int = 200,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> ReducedTrajectory:
    """Adaptive integration of the center system from state0 to s_end.

    forcing(s, zeta) -> length-k array is added to the velocities, emulating
    the bounded remainder terms of the modulated flow.
    """
    if s_end <= state0.s:
        raise ValueError("s_end must exceed the initial s")

    def rhs(s, z):
        v = center_rhs(cfg, z)
        if forcing is not None:
            v = v + forcing(s, z)
        return v

    s_eval = np.geomspace(state0.s, s_end, n_out)
    sol = solve_ivp(
        rhs,
        (state0.s, s_end),
        np.asarray(state0.zeta, dtype=float),
        method="DOP853",
        t_eval=s_eval,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise RuntimeError(f"center integration failed: {sol.message}")
    traj = ReducedTrajectory(cfg=cfg, s=sol.t, zeta=sol.y.T)
    if np.any(np.diff(traj.zeta, axis=1) <= 0):
        warnings.warn("center ordering lost along trajectory", stacklevel=2)
    return traj


def interaction_matrix(cfg: ReducedConfig) -> np.ndarray:
    """Symmetric tridiagonal linearization around the explicit solution."""
    sig = sigmas(cfg.k)
    lower = np.concatenate([[0.0], sig])
    upper = np.concatenate([sig, [0.0]])
    M = np.diag(-(lower + upper)) + np.diag(sig, 1) + np.diag(sig, -1)
    return M


def eigen_system(cfg: ReducedConfig) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and max-norm eigenvectors of the interaction
    matrix; each eigenvector's first nonzero entry is made positive."""
    vals, vecs = _eigen_cached(cfg.k)
    return vals.copy(), vecs.copy()


@lru_cache(maxsize=64)
def _eigen_cached(k: int) -> tuple[np.ndarray, np.ndarray]:
    sig = sigmas(k)
    diag = np.zeros(k)
    diag[:-1] -= sig
    diag[1:] -= sig
    vals, vecs = eigh_tridiagonal(diag, sig)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    for j in range(k):
        v = vecs[:, j]
        v = v / np.max(np.abs(v))
        nz = np.flatnonzero(np.abs(v) > 1e-12)
        if v[nz[0]] < 0:
            v = -v
        vecs[:, j] = v
    return vals, vecs


def to_phi_coords(cfg: ReducedConfig, xi: np.ndarray) -> np.ndarray:
    """Coefficients of xi in the eigenbasis of the interaction matrix."""
    _, vecs = eigen_system(cfg)
    return np.linalg.solve(vecs, np.asarray(xi, dtype=float))


def from_phi_coords(cfg: ReducedConfig, phi: np.ndarray) -> np.ndarray:
    _, vecs = eigen_system(cfg)
    return vecs @ np.asarray(phi, dtype=float)


def xi_from_centers(cfg: ReducedConfig, s: float, zeta: np.ndarray) -> np.ndarray:
    return (2 / (cfg.p - 1)) * (
        np.asarray(zeta, dtype=float) - reference_centers(cfg, s) - cfg.zeta0
    )
