import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lindblad_mpa import mpa
from lindblad_mpa.lindblad import liouvillian_apply, local_current, steady_state
from lindblad_mpa.spinspace import embed, pauli
from lindblad_mpa.xxx import (
    LAB_FROM_MPA,
    XxxParams,
    b_operators,
    b_operators_explicit,
    boundary_vectors,
    boundary_vectors_dtheta,
    check_cubic,
    check_recursion,
    currents,
    density_matrix,
    gl2_commutator_residual,
    gl2_rep,
    helix_reference,
    lab_pauli_expectation,
    magnetization_profile,
    mpa_dissipators,
    partition_value,
    theta0_explicit,
    untwisted_state,
    xxx_chain_spec,
    xxx_rep,
    z_ratio_scan,
    zeno_scan,
)


def test_params_validation():
    with pytest.raises(ValueError):
        XxxParams(3, 0.0, 1.0)
    with pytest.raises(ValueError):
        XxxParams(3, 1.0, 0.0)
    with pytest.raises(ValueError):
        XxxParams(3, 1.0, 1.0, M=3)
    assert XxxParams(3, 2.0, 1.0).p == 0.5j
    assert XxxParams(3, 2.0, 1.0).trunc == 4


@pytest.mark.parametrize("p", [0.5, 1j, 0.3 - 2j])
def test_gl2_relations(p):
    g = gl2_rep(p, 10)
    assert gl2_commutator_residual(g) <= 1e-12
    # S+ moves level l to l-1
    e3 = np.zeros(10)
    e3[3] = 1
    assert np.argmax(np.abs(g.Splus @ e3)) == 2
    assert g.Sz[0, 0] == p


def test_gl2_exact_on_grid_values():
    assert gl2_commutator_residual(gl2_rep(1j, 12)) == 0.0
    assert gl2_commutator_residual(gl2_rep(0.5j, 12)) == 0.0


def test_half_spin_doublet():
    # at p = 1/2 the first two levels close into the spin-1/2 representation
    g = gl2_rep(0.5, 4)
    assert g.Sminus[2, 1] == 0
    np.testing.assert_allclose(g.Sz[:2, :2], np.diag([0.5, -0.5]))


def test_boundary_vectors_at_pi():
    W, V, Vb = boundary_vectors(np.pi, 1.0, 5)
    np.testing.assert_array_equal(V, np.eye(5)[0])
    np.testing.assert_array_equal(W, np.eye(5)[0])


@pytest.mark.parametrize("theta_", [0.4, np.pi / 2, 2.5])
def test_boundary_vector_series(theta_):
    G = 0.7
    _, V, Vb = boundary_vectors(theta_, G, 6)
    p = 1j / G
    c = -1 / np.tan(theta_ / 2)
    assert np.isclose(V[1], 2 * p * c)
    assert np.isclose(V[2], c**2 * 2 * p * (2 * p - 1) / 2)
    assert np.isclose(Vb[1], 2 * np.conj(p) * c)


@pytest.mark.parametrize("theta_", [0.4, np.pi / 2, 2.5])
def test_boundary_derivative_matches_finite_difference(theta_):
    G, M, h = 1.3, 7, 1e-6
    _, Vp, Vbp = boundary_vectors(theta_ + h, G, M)
    _, Vm, Vbm = boundary_vectors(theta_ - h, G, M)
    fd = (np.outer(Vp, Vbp) - np.outer(Vm, Vbm)) / (2 * h)
    an = boundary_vectors_dtheta(theta_, G, M)
    assert np.abs(an - fd).max() <= 1e-7 * np.abs(an).max()


@pytest.mark.parametrize("N,G,th", [(2, 1.0, np.pi / 2), (3, 0.5, 1.0), (4, 2.0, 2.5)])
def test_state_and_currents_match_oracle(N, G, th):
    params = XxxParams(N, G, th)
    oracle = steady_state(xxx_chain_spec(N, G, th))
    np.testing.assert_allclose(density_matrix(params), oracle.entries, atol=1e-12)
    jx, jy, jz = currents(params)
    for alpha, j in zip((1, 2, 3), (jx, jy, jz)):
        assert abs(j - local_current(oracle, 1, alpha)) < 1e-12
    prof = magnetization_profile(params)
    for k in range(1, N + 1):
        for a in (1, 2, 3):
            ref = oracle.expect(embed(pauli(a), k, N)).real
            assert abs(prof[k - 1, a] - ref) < 1e-12
    two = lab_pauli_expectation(params, [(1, 1), (2, 2)])
    ref = oracle.expect(embed(pauli(1), 1, N) @ embed(pauli(2), 2, N))
    assert abs(two - ref) < 1e-12


def test_mpa_frame_state_solves_rotated_chain():
    N = 3
    rep = xxx_rep(XxxParams(N, 1.0, 1.1))
    rho = mpa.density_matrix_from_mpa(rep, N)
    res = liouvillian_apply(xxx_chain_spec(N, 1.0, 1.1, frame="mpa"), rho)
    assert np.abs(res).max() < 1e-12
    DL, _ = mpa_dissipators(1.0, 1.1)
    sp = np.array([[0, 1], [0, 0]])
    np.testing.assert_allclose(DL, 2 * sp, atol=1e-15)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, np.pi - 0.05), st.floats(0.2, 5.0), st.integers(2, 30))
def test_current_ratio(theta_, G, N):
    jx, jy, _ = currents(XxxParams(N, G, theta_))
    assert jy / jx == pytest.approx(-1 / np.tan(theta_ / 2), rel=1e-12)


def test_b_operators_explicit():
    params = XxxParams(4, 0.8, 1.2, M=6)
    rep = xxx_rep(params)
    g, gb = gl2_rep(params.p, 6), gl2_rep(np.conj(params.p), 6)
    ex = b_operators_explicit(g, gb)
    B = b_operators(rep)
    for a in (1, 2, 3):
        np.testing.assert_allclose(B[LAB_FROM_MPA[a]].dense(), ex[a], atol=1e-12)
    np.testing.assert_allclose(mpa.theta0(rep).dense(), theta0_explicit(g, gb), atol=1e-12)


def test_cubic_relation():
    params = XxxParams(6, 1.0, np.pi / 2, M=12)
    assert max(check_cubic(params).values()) <= 1e-12
    # residual scales linearly with a perturbation of p
    r1 = max(check_cubic(params, p=params.p + 1e-3).values())
    r2 = max(check_cubic(params, p=params.p + 2e-3).values())
    assert r1 > 1e-8
    assert r2 / r1 == pytest.approx(2, rel=0.05)


def test_recursion_verdict():
    out = check_recursion(1.0, np.pi / 2, [3, 4, 5, 6])
    assert out["verdict"] == {"printed": False, "sign_variant": False, "cubic_derived": True}
    assert out["worst"]["cubic_derived"] < 1e-10
    with pytest.raises(ValueError):
        check_recursion(1.0, 1.0, [2, 3])


def test_helix_reference():
    x, y, z = helix_reference([0.0, 0.5, 1.0], np.pi / 2)
    np.testing.assert_allclose(x, [1, np.cos(np.pi / 4), 0], atol=1e-15)
    np.testing.assert_allclose(y, [0, np.sin(np.pi / 4), 1], atol=1e-15)
    assert not z.any()
    with pytest.raises(ValueError):
        helix_reference([1.5], 1.0)


def test_z_ratio_short_chain_matches_dense():
    # N = 2 ratio from an explicit trace of M M^dag
    rows = z_ratio_scan(1.0, np.pi / 2, 3)
    rep = xxx_rep(XxxParams(3, 1.0, np.pi / 2))
    z = []
    for N in (1, 2):
        Mm = mpa.mpa_matrix(rep, N)
        z.append(np.trace(Mm @ Mm.conj().T).real)
    assert rows[0, 0] == 2
    assert rows[0, 1] == pytest.approx(4 * z[0] / z[1], rel=1e-12)
    with pytest.raises(ValueError):
        z_ratio_scan(1.0, 1.0, 201)


def test_z_ratio_high_precision():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 60
    N = 100
    G, th = 1.0, np.pi / 2
    M = N + 1
    p = mpmath.mpc(0, 1) / G
    pb = mpmath.conj(p)
    c = -mpmath.cot(mpmath.mpf(th) / 2)

    def series(tp):
        v = [mpmath.mpc(1)]
        for m in range(M - 1):
            v.append(v[-1] * c * (tp - m) / (m + 1))
        return v

    V, Vb = series(2 * p), series(2 * pb)
    # row vector on the doubled space, sparse in (level, level) pairs
    X = {(0, 0): mpmath.mpc(1)}

    def step(X):
        # <<X| Theta0 with Theta0 = 2 Sz(x)Sz~ + S+(x)S+~ + S-(x)S-~
        out = {}
        for (i, j), x in X.items():
            for di, dj, f in (
                (0, 0, 2 * (p - i) * (pb - j)),
                (1, 1, (i + 1) * (j + 1)),
                (-1, -1, (2 * p - (i - 1)) * (2 * pb - (j - 1))),
            ):
                a, b = i + di, j + dj
                if 0 <= a < M and 0 <= b < M:
                    out[a, b] = out.get((a, b), 0) + x * f
        return out

    zs = []
    for _ in range(N):
        X = step(X)
        zs.append(sum(x * V[i] * Vb[j] for (i, j), x in X.items()))
    r_ref = float(mpmath.re(N**2 * zs[-2] / zs[-1]))
    r = z_ratio_scan(G, th, N)[-1, 1]
    assert r == pytest.approx(r_ref, rel=1e-11)
    assert r == pytest.approx(0.62911, abs=1e-5)


def test_partition_value_positive():
    m, lg = partition_value(XxxParams(30, 1.0, 1.0))
    assert m > 0 and np.isfinite(lg)


def test_zeno_scan():
    rows = zeno_scan(np.pi / 2, 4, [1e2, 1e3])
    assert abs(rows[1]["jx"]) < abs(rows[0]["jx"])
    with pytest.raises(ValueError):
        zeno_scan(np.pi / 2, 4, [1e3, 1e2])
    with pytest.warns(RuntimeWarning):
        zeno_scan(np.pi / 2, 2, [1e7])


def test_untwisted_state_is_stationary():
    for N in (2, 3):
        rho = untwisted_state(N)
        assert np.abs(liouvillian_apply(xxx_chain_spec(N, 1.0, 0.0), rho)).max() < 1e-12
        near = density_matrix(XxxParams(N, 1.0, 1e-6))
        assert np.abs(near - rho).max() < 1e-6
