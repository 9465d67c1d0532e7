import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from multisoliton.diagnostics import fit_power_decay
from multisoliton.reduced import (
    ReducedConfig,
    ReducedState,
    center_offsets,
    center_rhs,
    eigen_system,
    from_phi_coords,
    integrate_centers,
    interaction_matrix,
    reference_centers,
    to_phi_coords,
    xi_from_centers,
)


def reference_velocity(cfg, s):
    i = np.arange(1, cfg.k + 1)
    return (i - (cfg.k + 1) / 2) * ((cfg.p - 1) / 2) / s


def test_offsets_k2_p3():
    cfg = ReducedConfig(k=2, p=3.0, c1=1.0)
    a = center_offsets(cfg)
    # gap factor L1 = 1/2 so the offsets are -+(log 2)/2
    assert np.allclose(a, [-np.log(2) / 2, np.log(2) / 2], atol=1e-14)


@given(st.integers(2, 6), st.sampled_from([2.0, 3.0, 4.0]), st.floats(0.3, 4.0))
def test_offsets_zero_mean_antisymmetric(k, p, c1):
    cfg = ReducedConfig(k=k, p=p, c1=c1)
    a = center_offsets(cfg)
    assert abs(a.sum()) < 1e-13 * (1 + np.max(np.abs(a)))
    assert np.allclose(a, -a[::-1], atol=1e-13)


def test_reference_centers_formula():
    cfg = ReducedConfig(k=2, p=3.0, c1=1.0)
    a = center_offsets(cfg)
    z = reference_centers(cfg, np.e)
    # (i - 3/2)((p-1)/2) log(e) = -+1/2
    assert np.allclose(z, [-0.5 + a[0], 0.5 + a[1]], atol=1e-14)


def test_reference_centers_gaps():
    cfg = ReducedConfig(k=3, p=2.0, c1=1.0)
    a = center_offsets(cfg)
    for s in (10.0, 100.0):
        z = reference_centers(cfg, s)
        want = ((cfg.p - 1) / 2) * np.log(s) + np.diff(a)
        assert np.allclose(np.diff(z), want, atol=1e-13)


def test_reference_is_exact_solution():
    for k in (2, 3, 4, 5):
        for p in (2.0, 3.0):
            cfg = ReducedConfig(k=k, p=p, c1=1.7)
            for s in (10.0, 1e2, 1e3, 1e4, 1e5, 1e6):
                z = reference_centers(cfg, s)
                resid = center_rhs(cfg, z) - reference_velocity(cfg, s)
                assert np.max(np.abs(resid)) <= 1e-13


def test_rhs_translation_invariant():
    cfg = ReducedConfig(k=4, p=3.0)
    z = np.array([-3.0, -1.0, 1.5, 4.0])
    r1 = center_rhs(cfg, z)
    r2 = center_rhs(cfg, z + 2.7)
    assert np.allclose(r1, r2, atol=1e-15)


def test_rhs_two_body():
    cfg = ReducedConfig(k=2, p=3.0, c1=1.3)
    a = 1.1
    r = center_rhs(cfg, np.array([-a, a]))
    ex = np.exp(-4 * a / (cfg.p - 1))
    assert np.allclose(r, [-cfg.c1 * ex, cfg.c1 * ex], atol=1e-15)


def test_rhs_warns_on_disorder():
    cfg = ReducedConfig(k=2, p=3.0)
    with pytest.warns(UserWarning):
        center_rhs(cfg, np.array([1.0, -1.0]))


def test_interaction_matrix_k3():
    cfg = ReducedConfig(k=3, p=3.0)
    M = interaction_matrix(cfg)
    want = np.array([[-1.0, 1, 0], [1, -2, 1], [0, 1, -1]])
    assert np.array_equal(M, want)


def test_interaction_matrix_k2():
    M = interaction_matrix(ReducedConfig(k=2, p=3.0))
    assert np.array_equal(M, np.array([[-0.5, 0.5], [0.5, -0.5]]))


def test_spectrum_closed_form():
    for k in range(2, 11):
        cfg = ReducedConfig(k=k, p=3.0)
        vals, vecs = eigen_system(cfg)
        i = np.arange(1, k + 1)
        assert np.max(np.abs(vals + i * (i - 1) / 2)) < 1e-10
        assert np.max(np.abs(vecs[:, 0] - 1.0)) < 1e-10
        # consistency with the dense matrix
        M = interaction_matrix(cfg)
        for j in range(k):
            r = M @ vecs[:, j] - vals[j] * vecs[:, j]
            assert np.max(np.abs(r)) < 1e-10


def test_jacobian_matches_interaction_matrix():
    # s * (d rhs / d zeta) at the reference trajectory equals M
    cfg = ReducedConfig(k=3, p=3.0, c1=1.0)
    for s in (1e2, 1e4):
        z = reference_centers(cfg, s)
        h = 1e-6
        J = np.empty((3, 3))
        for j in range(3):
            zp, zm = z.copy(), z.copy()
            zp[j] += h
            zm[j] -= h
            J[:, j] = (center_rhs(cfg, zp) - center_rhs(cfg, zm)) / (2 * h)
        assert np.max(np.abs(s * J - interaction_matrix(cfg))) < 1e-2


@given(st.integers(2, 6))
def test_phi_roundtrip(k):
    cfg = ReducedConfig(k=k, p=3.0)
    rng = np.random.default_rng(k)
    xi = rng.standard_normal(k)
    phi = to_phi_coords(cfg, xi)
    assert np.max(np.abs(from_phi_coords(cfg, phi) - xi)) < 1e-12


def test_phi_of_kernel_direction():
    cfg = ReducedConfig(k=3, p=3.0)
    phi = to_phi_coords(cfg, np.ones(3))
    assert np.allclose(phi, [1.0, 0.0, 0.0], atol=1e-12)
    assert np.allclose(to_phi_coords(cfg, np.zeros(3)), 0.0, atol=1e-15)


def test_integrate_tracks_reference():
    cfg = ReducedConfig(k=2, p=3.0, zeta0=0.7)
    s0 = 17.0
    z0 = reference_centers(cfg, s0) + cfg.zeta0
    traj = integrate_centers(cfg, ReducedState(s0, z0), 10 * s0)
    bar = np.array([reference_centers(cfg, s) for s in traj.s]) + cfg.zeta0
    assert np.max(np.abs(traj.zeta - bar)) < 1e-8
    assert np.max(np.abs(traj.xi())) < 1e-8


def test_kernel_shift_persists():
    # e1 perturbation is neutral: the uniform shift survives a decade of s
    cfg = ReducedConfig(k=2, p=3.0)
    s0, shift = 20.0, 0.05
    z0 = reference_centers(cfg, s0) + shift
    traj = integrate_centers(cfg, ReducedState(s0, z0), 10 * s0)
    bar = np.array([reference_centers(cfg, s) for s in traj.s])
    dev = traj.zeta - bar - shift
    assert np.max(np.abs(dev)) < 1e-8


def test_mode2_decay_exponent():
    # e2 perturbation decays like s^-1 for k=2 (second eigenvalue)
    cfg = ReducedConfig(k=2, p=3.0)
    _, vecs = eigen_system(cfg)
    s0, amp = 10.0, 1e-2
    z0 = reference_centers(cfg, s0) + (cfg.p - 1) / 2 * amp * vecs[:, 1]
    traj = integrate_centers(cfg, ReducedState(s0, z0), 1e4, n_out=400)
    phi2 = np.abs(traj.phi()[:, 1])
    fitted = fit_power_decay(traj.s, phi2)
    assert abs(fitted - 1.0) < 0.1


def test_forcing_hook():
    cfg = ReducedConfig(k=2, p=3.0)
    s0 = 10.0
    z0 = reference_centers(cfg, s0)
    amp = 1e-3

    def forcing(s, z):
        return amp / s**2 * np.ones(2)

    traj = integrate_centers(cfg, ReducedState(s0, z0), 100.0, forcing=forcing)
    bar = np.array([reference_centers(cfg, s) for s in traj.s])
    dev = np.abs(traj.zeta - bar)
    # bounded forcing injects a bounded drift, here O(amp/s0)
    assert 0 < np.max(dev) < 10 * amp / s0 * (100 - s0)


def test_ordering_preserved():
    cfg = ReducedConfig(k=3, p=3.0)
    s0 = 15.0
    z0 = reference_centers(cfg, s0) + np.array([0.01, -0.005, 0.02])
    traj = integrate_centers(cfg, ReducedState(s0, z0), 150.0)
    assert np.all(np.diff(traj.zeta, axis=1) > 0)


def test_rejects_bad_horizon():
    cfg = ReducedConfig(k=2, p=3.0)
    with pytest.raises(ValueError):
        integrate_centers(cfg, ReducedState(10.0, np.array([-1.0, 1.0])), 5.0)
    with pytest.raises(ValueError):
        reference_centers(cfg, -1.0)


def test_xi_from_centers():
    cfg = ReducedConfig(k=2, p=3.0, zeta0=0.3)
    s = 25.0
    z = reference_centers(cfg, s) + cfg.zeta0 + 0.07
    xi = xi_from_centers(cfg, s, z)
    assert np.allclose(xi, 0.07, atol=1e-14)
