"""Parameter-ball shooting: rescaling, shrinking-set gauge, exit times, and
the subdivision search for the longest-surviving initial parameters."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import (
    ModulationConfig,
    ProblemConfig,
    ShootingConfig,
    SimConfig,
    gammas,
    shrink_exponent,
)
from .grid import Grid
from .modulation import Decomposition, ModulatedTrajectory, track
from .pde import build_initial_data
from .reduced import eigen_system, reduced_config, reference_centers, xi_from_centers
from .solitons import alternating_params


def ball_to_params(
    problem: ProblemConfig, s: float, coords: np.ndarray, delta: float = 0.5
) -> tuple[np.ndarray, float]:
    """Componentwise rescaling from unit-ball coordinates to physical ones."""
    coords = np.asarray(coords, dtype=float)
    if coords.shape != (problem.k + 1,):
        raise ValueError(f"need k+1={problem.k + 1} ball coordinates")
    gam = np.abs(gammas(problem.k, problem.p))
    eta = shrink_exponent(problem.p, problem.perturbation, delta)
    nu0 = s ** (-0.5 - gam) * coords[:-1]
    phi10 = s ** (-eta) * coords[-1]
    return nu0, float(phi10)


def params_to_ball(
    problem: ProblemConfig, s: float, nu: np.ndarray, phi1: float, delta: float = 0.5
) -> np.ndarray:
    """Exact inverse of ball_to_params."""
    gam = np.abs(gammas(problem.k, problem.p))
    eta = shrink_exponent(problem.p, problem.perturbation, delta)
    return np.concatenate([s ** (0.5 + gam) * np.asarray(nu, float), [s**eta * phi1]])


def shrink_norm(problem: ProblemConfig, dec: Decomposition, delta: float = 0.5) -> float:
    """Gauge whose unit ball is the shrinking set at time dec.s."""
    s = dec.s
    eta = shrink_exponent(problem.p, problem.perturbation, delta)
    gam = np.abs(gammas(problem.k, problem.p))
    rc = reduced_config(problem)
    xi = xi_from_centers(rc, s, dec.zeta)
    _, vecs = eigen_system(rc)
    phi = np.linalg.solve(vecs, xi)
    n_q = s ** (0.5 + eta) * dec.normq
    n_nu = np.max(s ** (0.5 + gam) * np.abs(dec.nu))
    n_phi = np.max(s**eta * np.abs(phi))
    return float(max(n_q, n_nu, n_phi))


def _binding_axis(
    problem: ProblemConfig, dec: Decomposition, delta: float
) -> tuple[str, int, float]:
    """Which gauge component is largest at dec, its index and signed value."""
    s = dec.s
    eta = shrink_exponent(problem.p, problem.perturbation, delta)
    gam = np.abs(gammas(problem.k, problem.p))
    rc = reduced_config(problem)
    xi = xi_from_centers(rc, s, dec.zeta)
    _, vecs = eigen_system(rc)
    phi = np.linalg.solve(vecs, xi)
    cands = [("q", 0, s ** (0.5 + eta) * dec.normq)]
    for i in range(problem.k):
        cands.append(("nu", i + 1, s ** (0.5 + gam[i]) * dec.nu[i]))
    for i in range(problem.k):
        cands.append(("phi", i + 1, s**eta * phi[i]))
    name, idx, val = max(cands, key=lambda t: abs(t[2]))
    return name, idx, float(val)


@dataclass(frozen=True)
class ShootingPoint:
    ball_coords: np.ndarray
    nu0: np.ndarray
    phi10: float
    exit_s: float
    survived: bool
    exit_axis: str
    exit_index: int
    exit_direction: int
    outgoing: bool
    terminal_norm: float
    trajectory: ModulatedTrajectory | None = None

    def exit_label(self) -> str:
        if self.survived:
            return "survived"
        if self.exit_axis in ("nu", "phi"):
            return f"{self.exit_axis}_{self.exit_index}"
        return self.exit_axis


def exit_time(
    problem: ProblemConfig,
    g: Grid,
    coords: np.ndarray,
    shoot: ShootingConfig,
    sim: SimConfig | None = None,
    mod: ModulationConfig | None = None,
    keep_trajectory: bool = False,
) -> ShootingPoint:
    """Track the trajectory of one ball point and find where it leaves the
    shrinking set (gauge > 1), by linear interpolation between outputs.

    Decomposition failure or integrator blow-up before an exit is reported
    as its own axis label with the last good time.
    """
    coords = np.asarray(coords, dtype=float)
    if np.max(np.abs(coords)) > 1 + 1e-12:
        raise ValueError("ball coordinates must lie in the unit cube")
    s0 = problem.s0
    delta = shoot.delta
    nu0, phi10 = ball_to_params(problem, s0, coords, delta)
    st0 = build_initial_data(problem, g, s0, nu0, phi10, delta)
    rc = reduced_config(problem)
    shift = problem.zeta0 + ((problem.p - 1) / 2) * phi10
    d_hat = -np.tanh(reference_centers(rc, s0) + shift)
    guess = alternating_params(d_hat, nu0)

    norms: list[float] = []

    def stop_when(traj: ModulatedTrajectory) -> bool:
        norms.append(shrink_norm(problem, traj.decs[-1], delta))
        return norms[-1] > 1.0

    traj = track(
        problem,
        g,
        st0,
        s0,
        shoot.s_max,
        guess,
        mod=mod,
        sim=sim,
        delta=delta,
        stop_when=stop_when,
    )

    if traj.failure is not None:
        kind, last_s = traj.failure
        return ShootingPoint(
            ball_coords=coords,
            nu0=nu0,
            phi10=phi10,
            exit_s=last_s,
            survived=False,
            exit_axis=kind,
            exit_index=0,
            exit_direction=0,
            outgoing=False,
            terminal_norm=norms[-1] if norms else math.inf,
            trajectory=traj if keep_trajectory else None,
        )

    narr = np.asarray(norms)
    crossed = np.flatnonzero(narr > 1.0)
    if crossed.size == 0:
        return ShootingPoint(
            ball_coords=coords,
            nu0=nu0,
            phi10=phi10,
            exit_s=shoot.s_max,
            survived=True,
            exit_axis="survived",
            exit_index=0,
            exit_direction=0,
            outgoing=False,
            terminal_norm=float(narr[-1]),
            trajectory=traj if keep_trajectory else None,
        )

    j = int(crossed[0])
    s = np.asarray(traj.s)
    if j == 0:
        exit_s = float(s[0])
    else:
        n0, n1 = narr[j - 1], narr[j]
        frac = (1.0 - n0) / (n1 - n0) if n1 > n0 else 1.0
        exit_s = float(s[j - 1] + frac * (s[j] - s[j - 1]))
    axis, idx, val = _binding_axis(problem, traj.decs[j], delta)

    outgoing = True
    if j >= 1:
        prev = _signed_component(problem, traj.decs[j - 1], axis, idx, delta)
        deriv = (val - prev) / (s[j] - s[j - 1])
        outgoing = bool(deriv * np.sign(val) > 0)
    return ShootingPoint(
        ball_coords=coords,
        nu0=nu0,
        phi10=phi10,
        exit_s=exit_s,
        survived=False,
        exit_axis=axis,
        exit_index=idx,
        exit_direction=int(np.sign(val)) if val != 0 else 0,
        outgoing=outgoing,
        terminal_norm=float(narr[j]),
        trajectory=traj if keep_trajectory else None,
    )


def _signed_component(
    problem: ProblemConfig, dec: Decomposition, axis: str, idx: int, delta: float
) -> float:
    s = dec.s
    eta = shrink_exponent(problem.p, problem.perturbation, delta)
    gam = np.abs(gammas(problem.k, problem.p))
    if axis == "q":
        return s ** (0.5 + eta) * dec.normq
    if axis == "nu":
        return s ** (0.5 + gam[idx - 1]) * dec.nu[idx - 1]
    rc = reduced_config(problem)
    xi = xi_from_centers(rc, s, dec.zeta)
    _, vecs = eigen_system(rc)
    phi = np.linalg.solve(vecs, xi)
    return s**eta * phi[idx - 1]


@dataclass
class CellResult:
    index: tuple[int, ...]
    coords: np.ndarray
    point: ShootingPoint


@dataclass
class LevelReport:
    level: int
    cells: list[CellResult]
    kept_index: tuple[int, ...]
    kept_coords: np.ndarray
    best_exit_s: float
    best_survived: bool


@dataclass
class SearchResult:
    levels: list[LevelReport] = field(default_factory=list)
    best: ShootingPoint | None = None
    monotone: bool = True

    @property
    def best_history(self) -> list[float]:
        return [lv.best_exit_s for lv in self.levels]


def _rank_key(cell: CellResult) -> tuple:
    """Later exits first; among survivors the smaller terminal gauge wins
    (innermost trajectory); exact remaining ties go to the smaller index."""
    pt = cell.point
    exit_rank = math.inf if pt.survived else pt.exit_s
    inner = pt.terminal_norm if pt.survived else 0.0
    return (-exit_rank, inner, cell.index)


def search(
    problem: ProblemConfig,
    g: Grid,
    shoot: ShootingConfig,
    sim: SimConfig | None = None,
    mod: ModulationConfig | None = None,
) -> SearchResult:
    """Iterative subdivision over the parameter cube.

    Level 0 scans level0_per_axis cells per axis; each level keeps the best
    cell and subdivides it subdiv_per_axis-fold. The per-level best exit time
    is taken over all points evaluated so far, which makes the reported
    history non-decreasing by construction. Stops at max_depth or as soon as
    the best point survives to the horizon.
    """
    dims = problem.k + 1
    cache: dict[tuple, ShootingPoint] = {}

    def evaluate(coords: np.ndarray) -> ShootingPoint:
        key = tuple(np.round(coords, 14))
        if key not in cache:
            cache[key] = exit_time(problem, g, coords, shoot, sim=sim, mod=mod)
        return cache[key]

    def run_level(centers: list[np.ndarray], indices: list[tuple]) -> list[CellResult]:
        if shoot.threads > 1:
            with ThreadPoolExecutor(max_workers=shoot.threads) as ex:
                pts = list(ex.map(evaluate, centers))
        else:
            pts = [evaluate(c) for c in centers]
        return [CellResult(i, c, p) for i, c, p in zip(indices, centers, pts)]

    result = SearchResult()
    lo = np.full(dims, -1.0)
    width = np.full(dims, 2.0)
    best_cell: CellResult | None = None

    for level in range(shoot.max_depth + 1):
        m = shoot.level0_per_axis if level == 0 else shoot.subdiv_per_axis
        centers = []
        indices = []
        for index in itertools.product(range(m), repeat=dims):
            idx = np.array(index, dtype=float)
            centers.append(lo + (idx + 0.5) * width / m)
            indices.append(tuple(index))
        cells = run_level(centers, indices)
        kept = min(cells, key=_rank_key)
        contenders = [kept] if best_cell is None else [kept, best_cell]
        best_cell = min(contenders, key=_rank_key)
        result.levels.append(
            LevelReport(
                level=level,
                cells=cells,
                kept_index=kept.index,
                kept_coords=kept.coords,
                best_exit_s=best_cell.point.exit_s,
                best_survived=best_cell.point.survived,
            )
        )
        if best_cell.point.survived:
            break
        lo = lo + np.array(kept.index, dtype=float) * width / m
        width = width / m

    result.best = best_cell.point
    history = result.best_history
    result.monotone = all(b >= a - 1e-12 for a, b in zip(history, history[1:]))
    return result
