"""Closed-form soliton families, their parameter derivatives, and the dual
projectors that isolate the neutral (center) and expanding directions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field, Grid, State, inner_phi0, solve_helmholtz_weak


def kappa0(p: float) -> float:
    """Amplitude of the flat profile: (2(p+1)/(p-1)^2)^(1/(p-1))."""
    return (2 * (p + 1) / (p - 1) ** 2) ** (1 / (p - 1))


@dataclass(frozen=True)
class SolitonParam:
    """One generalized soliton: hyperbolic velocity d, decay parameter nu,
    and the alternating sign it carries in a multi-soliton sum."""

    d: float
    nu: float = 0.0
    sign: int = 1

    def __post_init__(self):
        if not -1 < self.d < 1:
            raise ValueError(f"d={self.d} outside (-1, 1)")
        if self.nu <= -1 + abs(self.d):
            raise ValueError(f"nu={self.nu} outside (-1+|d|, inf) for d={self.d}")
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +1 or -1")

    @property
    def d_star(self) -> float:
        return self.d / (1 + self.nu)

    @property
    def zeta(self) -> float:
        return -np.arctanh(self.d)

    @property
    def zeta_star(self) -> float:
        return -np.arctanh(self.d_star)


def soliton_profile(g: Grid, d: float) -> Field:
    """Stationary profile kappa0 (1-d^2)^(1/(p-1)) / (1+dy)^(2/(p-1))."""
    if not -1 < d < 1:
        raise ValueError(f"d={d} outside (-1, 1)")
    p = g.p
    return kappa0(p) * (1 - d * d) ** (1 / (p - 1)) / (1 + d * g.nodes) ** (2 / (p - 1))


def soliton_scale(p: float, d: float, nu: float) -> float:
    """Factor lambda with first component = lambda * profile(d/(1+nu))."""
    return ((1 - d * d) / ((1 + nu) ** 2 - d * d)) ** (1 / (p - 1))


def soliton_state(g: Grid, d: float, nu: float) -> State:
    """Two-component generalized soliton (first component, nu * its nu-derivative)."""
    if not -1 < d < 1:
        raise ValueError(f"d={d} outside (-1, 1)")
    if nu <= -1 + abs(d):
        raise ValueError(f"nu={nu} not > -1+|d| for d={d}")
    p = g.p
    c = 2 / (p - 1)
    u = 1 + d * g.nodes + nu
    k1 = kappa0(p) * (1 - d * d) ** (1 / (p - 1)) / u**c
    k2 = -c * nu * k1 / u
    return State(k1, k2)


def soliton_state_derivs(g: Grid, d: float, nu: float) -> tuple[State, State]:
    """Analytic d- and nu-derivatives of the generalized soliton State."""
    p = g.p
    c = 2 / (p - 1)
    y = g.nodes
    u = 1 + d * y + nu
    k1 = kappa0(p) * (1 - d * d) ** (1 / (p - 1)) / u**c
    dk1_dd = -k1 * (2 * d / ((p - 1) * (1 - d * d)) + c * y / u)
    dk1_dnu = -c * k1 / u
    dk2_dd = -(c * nu / u) * (dk1_dd - k1 * y / u)
    dk2_dnu = -(c / u) * (k1 + nu * dk1_dnu - nu * k1 / u)
    return State(dk1_dd, dk2_dd), State(dk1_dnu, dk2_dnu)


def soliton_sum(g: Grid, params: list[SolitonParam]) -> State:
    """Signed sum of generalized solitons."""
    st = State(np.zeros(g.n), np.zeros(g.n))
    for sp in params:
        st = st + sp.sign * soliton_state(g, sp.d, sp.nu)
    return st


def alternating_params(ds, nus) -> list[SolitonParam]:
    """Standard (-1)^i sign alternation, i starting at 1."""
    return [
        SolitonParam(d=float(d), nu=float(nu), sign=(-1) ** i)
        for i, (d, nu) in enumerate(zip(ds, nus), start=1)
    ]


@dataclass(frozen=True, eq=False)
class ProjectorBasis:
    """Dual pairs at one velocity d: pairing against dual_l, scaled by
    scale_l, gives 1 on direction_l and 0 on the other direction."""

    g: Grid
    d: float
    dual0: State
    dual1: State
    dir0: State
    dir1: State
    scale0: float
    scale1: float


def _dual_profiles(g: Grid, d: float, nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = g.p
    c = 2 / (p - 1)
    amp = (1 - d * d) ** (1 / (p - 1))
    u = 1 + d * nodes
    w02 = amp * (nodes + d) / u ** (c + 1)
    w12 = amp * (1 - nodes**2) / u ** (c + 1)
    return w02, w12


def projector_basis(g: Grid, d: float) -> ProjectorBasis:
    """Dual basis for the neutral (l=0) and expanding (l=1) directions at d.

    The second components are closed forms; the first components solve the
    -L + 1 problem weakly. The load term carrying 1/(1-y^2) is integrated on
    the companion quadrature rule (weight exponent lowered by one), which
    keeps the cross-duality at roundoff level.
    """
    if not -1 < d < 1:
        raise ValueError(f"d={d} outside (-1, 1)")
    p = g.p
    c = 2 / (p - 1)
    y = g.nodes
    amp = (1 - d * d) ** (1 / (p - 1))
    u = 1 + d * y

    w02, w12 = _dual_profiles(g, d, y)
    dw02 = amp * ((1 + d * y) - (c + 1) * d * (y + d)) / u ** (c + 2)
    dw12 = amp * (-2 * y * (1 + d * y) - (c + 1) * d * (1 - y**2)) / u ** (c + 2)
    w02_aux, w12_aux = _dual_profiles(g, d, g.aux_nodes)

    duals = []
    for l, (wl2, dwl2, wl2_aux) in enumerate([(w02, dw02, w02_aux), (w12, dw12, w12_aux)]):
        smooth = (l - (p + 3) / (p - 1)) * wl2 - 2 * y * dwl2
        load = g.quad_weights * smooth + (8 / (p - 1)) * (
            g.aux_interp.T @ (g.aux_weights * wl2_aux)
        )
        wl1 = solve_helmholtz_weak(g, load)
        duals.append(State(wl1, wl2))

    f0 = State(amp * (y + d) / u ** (c + 1), np.zeros(g.n))
    f1c = (1 - d * d) ** (p / (p - 1)) / u ** (c + 1)
    f1 = State(f1c, f1c.copy())

    raw0 = inner_phi0(g, duals[0], f0)
    raw1 = inner_phi0(g, duals[1], f1)
    if raw0 == 0.0 or raw1 == 0.0:
        raise ArithmeticError("degenerate projector normalization")
    return ProjectorBasis(
        g=g,
        d=d,
        dual0=duals[0],
        dual1=duals[1],
        dir0=f0,
        dir1=f1,
        scale0=1.0 / raw0,
        scale1=1.0 / raw1,
    )


def project(basis: ProjectorBasis, l: int, r: State) -> float:
    """Scaled pairing of r against the dual state l (0: neutral, 1: expanding)."""
    if l == 0:
        return basis.scale0 * inner_phi0(basis.g, basis.dual0, r)
    if l == 1:
        return basis.scale1 * inner_phi0(basis.g, basis.dual1, r)
    raise ValueError("l must be 0 or 1")
