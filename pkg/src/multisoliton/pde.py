"""Time integration of the similarity-variable wave equation.

First-order system for (w, ds w) on the open Gauss-Jacobi grid, classical
RK4 with a conservative step c_cfl/n^2 and a weak exponential modal filter.
The characteristic speeds vanish at the endpoints, so no boundary condition
is imposed. Perturbation terms are evaluated in forms where the huge
e^(2s/(p-1)) factors cancel analytically, so large s never overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import PerturbationSpec, ProblemConfig, SimConfig, gammas, shrink_exponent
from .grid import Field, Grid, State, filter_matrix, norm_H
from .reduced import reduced_config, reference_centers
from .solitons import alternating_params, soliton_sum


@dataclass(frozen=True)
class SimRecord:
    s: float
    state: State
    cfl_dt: float
    stable: bool = True


def _signed_power(w: np.ndarray, p: float) -> np.ndarray:
    return np.abs(w) ** (p - 1) * w


def perturbation_f(pert: PerturbationSpec, p: float, s: float, w1: np.ndarray) -> np.ndarray:
    """Scaled source e^(-2ps/(p-1)) f(e^(2s/(p-1)) w) in overflow-free form."""
    if pert.kind_f == "none":
        return np.zeros_like(w1)
    if pert.kind_f == "log_damped_power":
        # log(2 + u^2) with u = e^(2s/(p-1)) w, written as a + log(w^2 + 2 e^-a)
        a = 4 * s / (p - 1)
        log_term = a + np.log(w1 * w1 + 2 * math.exp(-min(a, 700.0)))
        return _signed_power(w1, p) / log_term**pert.alpha
    if pert.kind_f == "subcritical_power":
        q = pert.q_exp
        return math.exp(2 * s * (q - p) / (p - 1)) * _signed_power(w1, q)
    raise ValueError(pert.kind_f)


def _huge_tanh(exponent: float, vals: np.ndarray) -> np.ndarray:
    # tanh(e^exponent * vals) without forming the product when it overflows
    if exponent > 300.0:
        return np.sign(vals)
    return np.tanh(math.exp(exponent) * vals)


def perturbation_g(
    pert: PerturbationSpec,
    p: float,
    g: Grid,
    s: float,
    w1: np.ndarray,
    w2: np.ndarray,
    dw1: np.ndarray,
) -> np.ndarray:
    """Scaled mixed source with the five physical arguments reconstructed
    from the similarity frame at (x0, T0)."""
    if pert.kind_g == "none":
        return np.zeros_like(w1)
    if pert.kind_g != "bounded_mixed":
        raise ValueError(pert.kind_g)
    y = g.nodes
    x = pert.x0 + y * math.exp(-s)
    # e^(-2ps/(p-1)) (1+u^2)^((p+1)/4) = e^-s (w^2 + e^-b)^((p+1)/4), b = 4s/(p-1)
    b = 4 * s / (p - 1)
    u_term = math.exp(-s) * (w1 * w1 + math.exp(-min(b, 700.0))) ** ((p + 1) / 4)
    grad_exp = (p + 1) * s / (p - 1)
    v_term = _huge_tanh(grad_exp, dw1)
    z_vals = w2 + y * dw1 + (2 / (p - 1)) * w1
    z_term = _huge_tanh(grad_exp, z_vals)
    damp = math.exp(-2 * p * s / (p - 1)) if 2 * p * s / (p - 1) < 700.0 else 0.0
    return pert.epsilon * (np.cos(x) * u_term + damp * (v_term + z_term))


class Stepper:
    """Precomputed operators and the RK4 step for one (problem, grid) pair."""

    def __init__(self, problem: ProblemConfig, g: Grid, sim: SimConfig | None = None):
        self.problem = problem
        self.g = g
        self.sim = sim or SimConfig(n=g.n)
        p = problem.p
        self.c_lin = 2 * (p + 1) / (p - 1) ** 2
        self.c_damp = (p + 3) / (p - 1)
        self.needs_dw1 = problem.perturbation.kind_g != "none"
        self._filter: np.ndarray | None = None
        self._filter_built = False

    @property
    def filter(self) -> np.ndarray | None:
        # built on first use: rhs-only callers never pay for it
        if not self._filter_built:
            self._filter_built = True
            if self.sim.filter_fraction > 0 and self.sim.filter_strength < 1:
                self._filter = filter_matrix(
                    self.g,
                    self.sim.filter_fraction,
                    self.sim.filter_strength,
                    self.sim.filter_order,
                )
        return self._filter

    def rhs(self, s: float, w1: np.ndarray, w2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        g = self.g
        p = self.problem.p
        pert = self.problem.perturbation
        r2 = g.Lmat @ w1 - self.c_lin * w1 + _signed_power(w1, p)
        r2 -= self.c_damp * w2
        r2 -= 2 * g.nodes * (g.D @ w2)
        if pert.kind_f != "none":
            r2 += perturbation_f(pert, p, s, w1)
        if pert.kind_g != "none":
            dw1 = g.D @ w1
            r2 += perturbation_g(pert, p, g, s, w1, w2, dw1)
        return w2, r2

    def rk4(self, s: float, w1: np.ndarray, w2: np.ndarray, ds: float):
        a1, b1 = self.rhs(s, w1, w2)
        a2, b2 = self.rhs(s + ds / 2, w1 + ds / 2 * a1, w2 + ds / 2 * b1)
        a3, b3 = self.rhs(s + ds / 2, w1 + ds / 2 * a2, w2 + ds / 2 * b2)
        a4, b4 = self.rhs(s + ds, w1 + ds * a3, w2 + ds * b3)
        w1n = w1 + (ds / 6) * (a1 + 2 * a2 + 2 * a3 + a4)
        w2n = w2 + (ds / 6) * (b1 + 2 * b2 + 2 * b3 + b4)
        if self.filter is not None:
            w1n = self.filter @ w1n
            w2n = self.filter @ w2n
        return w1n, w2n


def pde_rhs(problem: ProblemConfig, g: Grid, s: float, st: State) -> State:
    """Right-hand side of the first-order system at time s."""
    r1, r2 = Stepper(problem, g).rhs(s, st.w1, st.w2)
    return State(r1.copy(), r2)


class Instability(RuntimeError):
    def __init__(self, last_stable_s: float):
        super().__init__(f"time integration lost stability after s={last_stable_s:.6f}")
        self.last_stable_s = last_stable_s


def step(problem: ProblemConfig, g: Grid, s: float, st: State, ds: float) -> State:
    """One RK4 step of size ds (filter included)."""
    if ds <= 0:
        raise ValueError("ds must be positive")
    w1, w2 = Stepper(problem, g).rk4(s, st.w1, st.w2, ds)
    return State(w1, w2)


def simulate(
    problem: ProblemConfig,
    g: Grid,
    st0: State,
    s0: float,
    s_end: float,
    observer=None,
    sim: SimConfig | None = None,
) -> list[SimRecord]:
    """March from s0 to s_end, emitting records every sim.cadence.

    The step is cadence/ceil(cadence n^2 / c_cfl), i.e. the largest divisor
    of the cadence below c_cfl/n^2. On blow-up of the iterates the run is
    restarted with c_cfl halved, up to sim.max_halvings; if still unstable
    the partial record list ends with a stable=False entry.
    """
    sim = sim or SimConfig(n=g.n)
    if s_end <= s0:
        raise ValueError("s_end must exceed s0")
    n_out = int(round((s_end - s0) / sim.cadence))
    n_out = max(n_out, 1)
    c_cfl = sim.c_cfl
    records: list[SimRecord] = []
    for attempt in range(sim.max_halvings + 1):
        stepper = Stepper(problem, g, sim)
        per_out = max(1, math.ceil(sim.cadence * g.n**2 / c_cfl))
        ds = sim.cadence / per_out
        w1 = st0.w1.copy()
        w2 = st0.w2.copy()
        records = [SimRecord(s0, State(w1.copy(), w2.copy()), ds)]
        if observer is not None and observer(records[0]):
            return records
        ok = True
        for j in range(n_out):
            s_block = s0 + j * sim.cadence
            with np.errstate(over="ignore", invalid="ignore"):
                for i in range(per_out):
                    w1, w2 = stepper.rk4(s_block + i * ds, w1, w2, ds)
            bad = not (np.all(np.isfinite(w1)) and np.all(np.isfinite(w2)))
            if not bad:
                bad = max(np.max(np.abs(w1)), np.max(np.abs(w2))) > sim.blow_limit
            if bad:
                ok = False
                break
            rec = SimRecord(s0 + (j + 1) * sim.cadence, State(w1.copy(), w2.copy()), ds)
            records.append(rec)
            if observer is not None and observer(rec):
                return records
        if ok:
            return records
        c_cfl /= 2
    final = SimRecord(records[-1].s + sim.cadence, records[-1].state, ds, stable=False)
    records.append(final)
    if observer is not None:
        observer(final)
    return records


def build_initial_data(
    problem: ProblemConfig,
    g: Grid,
    s0: float,
    nu0,
    phi10: float,
    delta: float = 0.5,
) -> State:
    """Signed soliton sum with centers on the reference trajectory shifted by
    the target center of mass and the neutral-direction parameter."""
    nu0 = np.asarray(nu0, dtype=float)
    if nu0.shape != (problem.k,):
        raise ValueError(f"nu0 must have length k={problem.k}")
    gam = np.abs(gammas(problem.k, problem.p))
    bounds = s0 ** (-0.5 - gam)
    if np.any(np.abs(nu0) > bounds * (1 + 1e-12)):
        raise ValueError("nu0 outside the admissible ball")
    eta = shrink_exponent(problem.p, problem.perturbation, delta)
    if abs(phi10) > s0 ** (-eta) * (1 + 1e-12):
        raise ValueError("phi10 outside the admissible ball")
    rc = reduced_config(problem)
    shift = problem.zeta0 + ((problem.p - 1) / 2) * phi10
    d_hat = -np.tanh(reference_centers(rc, s0) + shift)
    return soliton_sum(g, alternating_params(d_hat, nu0))


def flow_residual(
    problem: ProblemConfig,
    g: Grid,
    exact,
    s: float,
    h: float = 1e-6,
    exact_deriv=None,
) -> float:
    """Energy-norm defect of a candidate solution s -> State at time s."""
    if exact_deriv is not None:
        der = exact_deriv(s)
    else:
        plus, minus = exact(s + h), exact(s - h)
        der = State((plus.w1 - minus.w1) / (2 * h), (plus.w2 - minus.w2) / (2 * h))
    rhs = pde_rhs(problem, g, s, exact(s))
    return norm_H(g, der - rhs)


def to_physical(problem: ProblemConfig, g: Grid, st: State, s: float) -> dict:
    """Samples of u on the backward-cone slice t = T0 - e^-s."""
    pert = problem.perturbation
    scale = math.exp(2 * s / (problem.p - 1))
    return {
        "t": pert.T0 - math.exp(-s),
        "x": pert.x0 + g.nodes * math.exp(-s),
        "u": scale * st.w1,
    }


def from_physical(problem: ProblemConfig, g: Grid, u: np.ndarray, s: float) -> Field:
    """Inverse of to_physical on the same slice."""
    return math.exp(-2 * s / (problem.p - 1)) * np.asarray(u, dtype=float)
