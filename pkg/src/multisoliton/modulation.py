"""Decomposition of a state into signed generalized solitons plus an
orthogonal remainder, and re-decomposition along simulated trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import ModulationConfig, ProblemConfig, SimConfig, gammas, shrink_exponent
from .grid import Grid, State, norm_H
from .pde import simulate
from .reduced import eigen_system, reduced_config, xi_from_centers
from .solitons import SolitonParam, alternating_params, project, projector_basis, soliton_sum


class ModulationError(RuntimeError):
    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class Decomposition:
    """One modulated snapshot: parameters, orthogonal remainder, residuals."""

    s: float
    params: list[SolitonParam]
    q: State
    residuals: np.ndarray
    normq: float

    @property
    def d(self) -> np.ndarray:
        return np.array([sp.d for sp in self.params])

    @property
    def nu(self) -> np.ndarray:
        return np.array([sp.nu for sp in self.params])

    @property
    def zeta(self) -> np.ndarray:
        return np.array([sp.zeta for sp in self.params])

    @property
    def zeta_star(self) -> np.ndarray:
        return np.array([sp.zeta_star for sp in self.params])


def _residual_vector(g: Grid, st: State, theta: np.ndarray, signs) -> np.ndarray:
    k = len(signs)
    params = [
        SolitonParam(d=float(theta[2 * i]), nu=float(theta[2 * i + 1]), sign=signs[i])
        for i in range(k)
    ]
    q = st - soliton_sum(g, params)
    res = np.empty(2 * k)
    for i, sp in enumerate(params):
        basis = projector_basis(g, sp.d_star)
        res[2 * i] = project(basis, 0, q)
        res[2 * i + 1] = project(basis, 1, q)
    return res


def _feasible(theta: np.ndarray, k: int) -> bool:
    d = theta[0::2]
    nu = theta[1::2]
    return bool(np.all(np.abs(d) < 1 - 1e-12) and np.all(nu > -1 + np.abs(d) + 1e-12))


def decompose(
    problem: ProblemConfig,
    g: Grid,
    st: State,
    guess: list[SolitonParam],
    s: float,
    mod: ModulationConfig | None = None,
) -> Decomposition:
    """Damped Newton solve of the 2k orthogonality conditions in (d_i, nu_i).

    The guess fixes the sign pattern. Separation of the guess centers below
    the basin threshold is rejected up front; non-convergence raises with the
    last residual attached.
    """
    mod = mod or ModulationConfig()
    k = problem.k
    if len(guess) != k:
        raise ValueError(f"guess must contain k={k} solitons")
    signs = [sp.sign for sp in guess]

    min_gap = mod.min_gap
    if min_gap is None:
        min_gap = (problem.p - 1) / 8 * math.log(max(s, math.e))
    zs = np.array([sp.zeta_star for sp in guess])
    if np.any(np.diff(zs) < min_gap):
        raise ModulationError(
            f"guess centers too close: min gap {np.min(np.diff(zs)):.3f} < {min_gap:.3f}"
        )

    theta = np.empty(2 * k)
    for i, sp in enumerate(guess):
        theta[2 * i] = sp.d
        theta[2 * i + 1] = sp.nu

    res = _residual_vector(g, st, theta, signs)
    rnorm = np.max(np.abs(res))
    for _ in range(mod.max_iter):
        if rnorm < mod.newton_tol:
            break
        jac = np.empty((2 * k, 2 * k))
        for j in range(2 * k):
            h = mod.fd_step * (1 - abs(theta[2 * (j // 2)]))
            tp = theta.copy()
            tm = theta.copy()
            tp[j] += h
            tm[j] -= h
            jac[:, j] = (_residual_vector(g, st, tp, signs) - _residual_vector(g, st, tm, signs)) / (2 * h)
        try:
            delta = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError as exc:
            raise ModulationError(f"singular modulation Jacobian: {exc}", rnorm) from exc
        lam = 1.0
        accepted = False
        for _ in range(mod.armijo_max_backtracks):
            cand = theta + lam * delta
            if _feasible(cand, k):
                cres = _residual_vector(g, st, cand, signs)
                cnorm = np.max(np.abs(cres))
                if cnorm <= (1 - mod.armijo_c * lam) * rnorm or cnorm < mod.newton_tol:
                    theta, res, rnorm = cand, cres, cnorm
                    accepted = True
                    break
            lam /= 2
        if not accepted:
            raise ModulationError("modulation line search stalled", rnorm)
    else:
        raise ModulationError(
            f"modulation Newton did not converge in {mod.max_iter} iterations", rnorm
        )

    params = [
        SolitonParam(d=float(theta[2 * i]), nu=float(theta[2 * i + 1]), sign=signs[i])
        for i in range(k)
    ]
    q = st - soliton_sum(g, params)
    return Decomposition(s=s, params=params, q=q, residuals=res, normq=norm_H(g, q))


@dataclass
class ModulatedTrajectory:
    """Time series of decompositions along one simulated trajectory."""

    problem: ProblemConfig
    delta: float
    s: list[float] = field(default_factory=list)
    decs: list[Decomposition] = field(default_factory=list)
    failure: tuple[str, float] | None = None

    @property
    def k(self) -> int:
        return self.problem.k

    def _stack(self, attr) -> np.ndarray:
        return np.array([getattr(dec, attr) for dec in self.decs])

    @property
    def d(self) -> np.ndarray:
        return self._stack("d")

    @property
    def nu(self) -> np.ndarray:
        return self._stack("nu")

    @property
    def zeta(self) -> np.ndarray:
        return self._stack("zeta")

    @property
    def zeta_star(self) -> np.ndarray:
        return self._stack("zeta_star")

    @property
    def normq(self) -> np.ndarray:
        return np.array([dec.normq for dec in self.decs])

    def xi(self) -> np.ndarray:
        rc = reduced_config(self.problem)
        return np.array(
            [xi_from_centers(rc, dec.s, dec.zeta) for dec in self.decs]
        )

    def phi(self) -> np.ndarray:
        rc = reduced_config(self.problem)
        _, vecs = eigen_system(rc)
        return np.linalg.solve(vecs, self.xi().T).T

    def gap_sums(self) -> tuple[np.ndarray, np.ndarray]:
        """Interaction gauge from plain centers and the nu gauge."""
        p = self.problem.p
        zeta = self.zeta
        J = np.exp(-(2 / (p - 1)) * np.diff(zeta, axis=1)).sum(axis=1)
        d = self.d
        Jbar = (np.abs(self.nu) / (1 - d**2)).sum(axis=1)
        return J, Jbar

    def shrink_norms(self) -> np.ndarray:
        sarr = np.asarray(self.s)
        eta = shrink_exponent(self.problem.p, self.problem.perturbation, self.delta)
        gam = np.abs(gammas(self.k, self.problem.p))
        phi = self.phi()
        nu = self.nu
        normq = self.normq
        n_q = sarr ** (0.5 + eta) * normq
        n_nu = np.max(sarr[:, None] ** (0.5 + gam[None, :]) * np.abs(nu), axis=1)
        n_phi = np.max(sarr[:, None] ** eta * np.abs(phi), axis=1)
        return np.maximum(n_q, np.maximum(n_nu, n_phi))


def track(
    problem: ProblemConfig,
    g: Grid,
    st0: State,
    s0: float,
    s_end: float,
    guess0: list[SolitonParam],
    mod: ModulationConfig | None = None,
    sim: SimConfig | None = None,
    delta: float = 0.5,
    stop_when=None,
) -> ModulatedTrajectory:
    """Simulate and re-decompose at every output time, warm-starting each
    solve from the previous parameters.

    stop_when(traj) may end the run early (used by the exit-time monitor);
    decomposition failure or integrator instability ends it with a failure
    tag carrying the last good s.
    """
    mod = mod or ModulationConfig()
    traj = ModulatedTrajectory(problem=problem, delta=delta)
    last_params = list(guess0)

    def observer(rec) -> bool:
        nonlocal last_params
        if not rec.stable:
            traj.failure = ("instability", traj.s[-1] if traj.s else s0)
            return True
        try:
            dec = decompose(problem, g, rec.state, last_params, rec.s, mod)
        except ModulationError:
            traj.failure = ("decompose", traj.s[-1] if traj.s else s0)
            return True
        last_params = dec.params
        traj.s.append(rec.s)
        traj.decs.append(dec)
        if stop_when is not None and stop_when(traj):
            return True
        return False

    simulate(problem, g, st0, s0, s_end, observer=observer, sim=sim)
    return traj
