"""Weighted Gauss-Jacobi spectral discretization of (-1, 1).

Everything lives on open nodes of the Gauss-Jacobi rule for the weight
rho(y) = (1 - y^2)^(2/(p-1)), so the degenerate boundary is never touched.
A Field is the array of nodal values of one scalar function; a State is the
pair (w, ds w) stored as two Fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import eval_jacobi, roots_jacobi

Field = np.ndarray


@dataclass(frozen=True)
class State:
    """Pair (w, ds w) of nodal value arrays on a common grid."""

    w1: np.ndarray
    w2: np.ndarray

    def __add__(self, other: "State") -> "State":
        return State(self.w1 + other.w1, self.w2 + other.w2)

    def __sub__(self, other: "State") -> "State":
        return State(self.w1 - other.w1, self.w2 - other.w2)

    def __mul__(self, a: float) -> "State":
        return State(a * self.w1, a * self.w2)

    __rmul__ = __mul__

    def copy(self) -> "State":
        return State(self.w1.copy(), self.w2.copy())


def _bary_weights(x: np.ndarray) -> np.ndarray:
    # differences scaled by 2 (capacity of [-1,1]) to keep products O(1)
    diff = 2.0 * (x[:, None] - x[None, :])
    np.fill_diagonal(diff, 1.0)
    w = 1.0 / np.prod(diff, axis=1)
    return w / np.max(np.abs(w))


def _diff_matrix(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    n = x.size
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    D = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(D, 0.0)
    # negative-sum trick with compensated summation: rows sum to zero exactly
    diag = np.array([-math.fsum(D[j]) for j in range(n)])
    np.fill_diagonal(D, diag)
    return D


def interpolation_matrix(x: np.ndarray, w: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Barycentric evaluation of the nodal interpolant at points t."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    dt = t[:, None] - x[None, :]
    hit = np.isclose(dt, 0.0, atol=1e-300)
    dt_safe = np.where(hit, 1.0, dt)
    C = w[None, :] / dt_safe
    E = C / C.sum(axis=1, keepdims=True)
    rows_hit = hit.any(axis=1)
    if rows_hit.any():
        E[rows_hit] = hit[rows_hit].astype(float)
    return E


@dataclass(frozen=True, eq=False)
class Grid:
    """Gauss-Jacobi nodes, quadrature, differentiation and solver operators."""

    n: int
    p: float
    nodes: np.ndarray
    quad_weights: np.ndarray
    bary: np.ndarray
    D: np.ndarray
    D2: np.ndarray
    Lmat: np.ndarray
    helmholtz: tuple
    modal_V: np.ndarray
    modal_analysis: np.ndarray
    aux_nodes: np.ndarray
    aux_weights: np.ndarray
    aux_interp: np.ndarray

    @property
    def one_minus_y2(self) -> np.ndarray:
        return 1.0 - self.nodes**2


def make_grid(n: int, p: float) -> Grid:
    """Grid for the weight (1-y^2)^(2/(p-1)); rejects n < 8 or p <= 1."""
    if n < 8:
        raise ValueError("n must be >= 8")
    if p <= 1:
        raise ValueError("p must be > 1")
    a = 2.0 / (p - 1.0)
    nodes, wq = roots_jacobi(n, a, a)
    bw = _bary_weights(nodes)
    D = _diff_matrix(nodes, bw)
    D2 = D @ D
    omy2 = 1.0 - nodes**2
    Lmat = omy2[:, None] * D2 - ((2.0 + 4.0 / (p - 1.0)) * nodes)[:, None] * D

    # Galerkin matrix of the H0 inner product; also the -L + 1 weak operator.
    A = D.T @ ((wq * omy2)[:, None] * D) + np.diag(wq)
    A = 0.5 * (A + A.T)
    helm = cho_factor(A, lower=True)

    V = np.empty((n, n))
    for k in range(n):
        V[:, k] = eval_jacobi(k, a, a, nodes)
    hk = wq @ V**2
    analysis = (V.T * wq[None, :]) / hk[:, None]

    # companion rule with weight exponent a-1 for loads carrying a 1/(1-y^2)
    aux_nodes, aux_w = roots_jacobi(n, a - 1.0, a - 1.0)
    aux_interp = interpolation_matrix(nodes, bw, aux_nodes)

    return Grid(
        n=n,
        p=p,
        nodes=nodes,
        quad_weights=wq,
        bary=bw,
        D=D,
        D2=D2,
        Lmat=Lmat,
        helmholtz=helm,
        modal_V=V,
        modal_analysis=analysis,
        aux_nodes=aux_nodes,
        aux_weights=aux_w,
        aux_interp=aux_interp,
    )


def _check(g: Grid, f: Field) -> None:
    if f.shape != (g.n,):
        raise ValueError(f"field shape {f.shape} does not match grid n={g.n}")


def integrate(g: Grid, values: Field) -> float:
    """Quadrature of nodal values against rho(y) dy."""
    return float(g.quad_weights @ values)


def differentiate(g: Grid, f: Field) -> Field:
    """Spectral derivative through the barycentric interpolant.

    The mean is subtracted first; constants differentiate to exactly zero
    and near-constant fields lose the large-entry cancellation noise.
    """
    _check(g, f)
    return g.D @ (f - f.mean())


def interpolate(g: Grid, f: Field, points) -> np.ndarray:
    _check(g, f)
    return interpolation_matrix(g.nodes, g.bary, np.asarray(points, float)) @ f


def apply_L(g: Grid, f: Field) -> Field:
    """Degenerate second-order operator (1/rho) d_y(rho (1-y^2) d_y f).

    Evaluated in the expanded form (1-y^2) f'' - (2 + 4/(p-1)) y f' so no
    division by rho occurs near the endpoints.
    """
    _check(g, f)
    return g.Lmat @ f


def solve_helmholtz(g: Grid, rhs: Field) -> Field:
    """Galerkin solution of -L r + r = rhs in the discrete H0 space."""
    _check(g, rhs)
    return solve_helmholtz_weak(g, g.quad_weights * rhs)


def solve_helmholtz_weak(g: Grid, load: np.ndarray) -> Field:
    """Same solve, with the weak-form load vector supplied directly."""
    _check(g, load)
    r = cho_solve(g.helmholtz, load)
    if not np.all(np.isfinite(r)):
        raise ArithmeticError("helmholtz solve produced non-finite values")
    return r


def norm_H0(g: Grid, f: Field) -> float:
    """Weighted first-order norm of a single Field."""
    _check(g, f)
    df = g.D @ f
    val = g.quad_weights @ (f**2 + df**2 * g.one_minus_y2)
    return float(np.sqrt(max(val, 0.0)))


def norm_H(g: Grid, s: State) -> float:
    """Weighted energy-space norm of a State."""
    _check(g, s.w1)
    _check(g, s.w2)
    df = g.D @ s.w1
    val = g.quad_weights @ (s.w1**2 + df**2 * g.one_minus_y2 + s.w2**2)
    return float(np.sqrt(max(val, 0.0)))


def inner_phi0(g: Grid, q: State, r: State) -> float:
    """Symmetric pairing int (q1 r1 + q1' r1' (1-y^2) + q2 r2) rho dy."""
    dq = g.D @ q.w1
    dr = g.D @ r.w1
    val = g.quad_weights @ (q.w1 * r.w1 + dq * dr * g.one_minus_y2 + q.w2 * r.w2)
    return float(val)


def zero_state(g: Grid) -> State:
    return State(np.zeros(g.n), np.zeros(g.n))


def to_modal(g: Grid, f: Field) -> np.ndarray:
    """Coefficients of f in the orthogonal Jacobi basis of the grid weight."""
    return g.modal_analysis @ f


def from_modal(g: Grid, coeffs: np.ndarray) -> Field:
    return g.modal_V @ coeffs


def filter_matrix(g: Grid, fraction: float, strength: float, order: int) -> np.ndarray:
    """Nodal matrix of a smooth exponential cutoff on the top modal band.

    Modes above (1 - fraction) of the band are damped, reaching the given
    strength factor at the last mode; fraction 0 or strength 1 is identity.
    """
    n = g.n
    sigma = np.ones(n)
    k0 = int(np.floor((1.0 - fraction) * (n - 1)))
    if fraction > 0 and strength < 1 and k0 < n - 1:
        ks = np.arange(k0 + 1, n)
        t = (ks - k0) / (n - 1 - k0)
        sigma[k0 + 1 :] = np.exp(np.log(strength) * t ** (2 * order))
    return g.modal_V @ (sigma[:, None] * g.modal_analysis)
