from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dbrinterp import dainterp as da
from dbrinterp.ncalg import NcSeries, abelianize, enumerate_words, fock_norm, multinomial
from dbrinterp.ncinterp import NotStrictlyPositive, beurling, build_A
from dbrinterp.sysops import OutputPair, Realization, build_interpolation_data, compute_N, compute_P, observe

from instances import crandn, random_realization

F = Fraction


def commuting_pair(rng, d=2, n=3, p=1, bound=0.5):
    Q = np.linalg.qr(crandn(rng, n, n))[0]
    T = [Q @ np.diag(crandn(rng, n)) @ Q.conj().T for _ in range(d)]
    s = np.linalg.norm(np.vstack(T), 2)
    return OutputPair(crandn(rng, p, n), tuple(t * bound / s for t in T))


def random_da(rng, d, order, out_dim=1, in_dim=1):
    return da.DaSeries(d, order, out_dim, in_dim,
                       {n: crandn(rng, out_dim, in_dim) for n in da.multi_indices(d, order)})


def test_multi_index_counts():
    for d in (1, 2, 3):
        for order in range(5):
            idx = da.multi_indices(d, order)
            assert len(idx) == len(set(abelianize(w, d) for w in enumerate_words(d, order)))


def test_projection_examples():
    f = NcSeries(2, 2, 1, 1, {(1, 2): [[1.0]], (2, 1): [[-1.0]]})
    assert np.all(da.da_project(f).coef((1, 1)) == 0)
    g = da.DaSeries(2, 2, 1, 1, {(1, 1): np.ones((1, 1))})
    lift = da.symmetric_lift(g)
    assert set(lift.coeffs) == {(1, 2), (2, 1)}
    assert np.isclose(fock_norm(lift) ** 2, 0.5, rtol=0, atol=1e-15)
    assert np.isclose(da.da_norm(g) ** 2, 0.5, rtol=0, atol=1e-15)


@pytest.mark.parametrize("d,order", [(1, 6), (2, 5), (3, 4)])
def test_symmetric_lift_is_isometric_right_inverse(d, order):
    rng = np.random.default_rng(d)
    g = random_da(rng, d, order, 2, 1)
    lift = da.symmetric_lift(g)
    assert abs(fock_norm(lift) - da.da_norm(g)) <= 1e-12
    back = da.da_project(lift)
    assert max(np.max(np.abs(back.coef(n) - g.coef(n))) for n in da.multi_indices(d, order)) <= 1e-14


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(0, 4), st.integers(0, 2**31))
def test_projection_is_contractive_and_lift_minimal(d, order, seed):
    rng = np.random.default_rng(seed)
    words = enumerate_words(d, order)
    f = NcSeries(d, order, 1, 1, {w: crandn(rng, 1, 1) for w in words})
    g = da.da_project(f)
    assert da.da_norm(g) <= fock_norm(f) + 1e-12
    # every preimage of g is at least as long as the symmetric lift
    assert fock_norm(da.symmetric_lift(g)) <= fock_norm(f) + 1e-12


def test_da_norm_of_monomials():
    for n in [(0, 0), (1, 0), (2, 1), (1, 1, 1)]:
        g = da.DaSeries(len(n), sum(n), 1, 1, {n: np.ones((1, 1))})
        assert np.isclose(da.da_norm(g) ** 2, 1 / multinomial(n), rtol=1e-15)


def test_commuting_check():
    T = (np.array([[0.0, 0.3], [0.0, 0.0]]), np.array([[0.0, 0.0], [0.3, 0.0]]))
    with pytest.raises(da.NonCommutingTuple):
        da.da_observe(OutputPair(np.ones((1, 2)), T), np.ones(2), 3)


@pytest.mark.parametrize("seed", range(4))
def test_da_observe_adjointness(seed):
    rng = np.random.default_rng(seed)
    pair = commuting_pair(rng, d=2 + seed % 2, n=3, p=2)
    order = 4
    f = random_da(rng, pair.d, order, 2, 1)
    x = crandn(rng, 3)
    lhs = np.vdot(x, da.da_tangential_eval(pair, f)[:, 0])
    rhs = da.da_inner(f, da.da_observe(pair, x, order))
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_da_observe_is_projection_of_nc_observe():
    rng = np.random.default_rng(9)
    pair = commuting_pair(rng)
    x = crandn(rng, 3)
    a = da.da_observe(pair, x, 5)
    b = da.da_project(observe(pair, x, 5))
    assert max(np.max(np.abs(a.coef(n) - b.coef(n))) for n in da.multi_indices(2, 5)) <= 1e-14


@pytest.mark.parametrize("seed", range(6))
def test_commutative_P_matches_stein(seed):
    rng = np.random.default_rng(20 + seed)
    d = 1 + seed % 3
    pair = commuting_pair(rng, d=d, n=1 + seed % 4, p=1 + seed % 2)
    S0 = random_realization(rng, d, 2, pair.p, 1)
    N = compute_N(pair, S0)
    assert np.linalg.norm(da.da_compute_P(pair, N) - compute_P(pair, N).P, 2) <= 1e-12


def test_one_variable_gramian_is_geometric():
    pair = OutputPair(np.ones((1, 1)), (np.full((1, 1), 0.5),))
    assert np.isclose(da.da_gramian_converged(pair, np.ones((1, 1)))[0, 0], 4 / 3, rtol=1e-15)
    assert np.isclose(da.da_gramian_series(pair, np.ones((1, 1)), 3)[0, 0], 1 + 0.25 + 0.0625 + 0.015625)


def _commuting_data(seed, n=3):
    rng = np.random.default_rng(seed)
    pair = commuting_pair(rng, n=n)
    U = crandn(rng, 5, 3)
    U *= 0.5 / np.linalg.norm(U, 2)
    S0 = Realization((U[:2, :2], U[2:4, :2]), U[:4, 2:], U[4:, :2], U[4:, 2:])
    return build_interpolation_data(pair, S0, crandn(rng, n))


@pytest.mark.parametrize("seed", range(3))
def test_solve_oap_da(seed):
    data = _commuting_data(30 + seed)
    assert data.strict
    sol = da.solve_oap_da(data, 10)
    assert sol.kernel_residual <= 1e-8
    assert sol.interpolation_residual <= 1e-3
    coarse = da.solve_oap_da(data, 6)
    assert sol.interpolation_residual < coarse.interpolation_residual


def test_da_mult_matrix_identity_and_schur():
    one = da.DaSeries(2, 4, 1, 1, {(0, 0): np.ones((1, 1))})
    np.testing.assert_allclose(da.da_mult_matrix(one), np.eye(len(da.multi_indices(2, 4))))
    # the coordinate row [l1 l2] is a contraction on the ball
    Phi = da.DaSeries(2, 6, 1, 2, {(1, 0): np.array([[1.0, 0.0]]), (0, 1): np.array([[0.0, 1.0]])})
    assert np.linalg.norm(da.da_mult_matrix(Phi), 2) <= 1 + 1e-12


def test_sharp_da():
    rng = np.random.default_rng(5)
    S = random_da(rng, 2, 3, 2, 3)
    Sh = da.sharp_da(S)
    assert Sh.shape == (3, 2)
    np.testing.assert_array_equal(Sh.coef((1, 2)), S.coef((1, 2)).conj().T)
    assert da.sharp_da(Sh).coeffs.keys() == S.coeffs.keys()


REPRESENTER = da.DaSeries(2, 6, 1, 2, {(1, 0): np.array([[1.0, 0.0]]), (0, 1): np.array([[0.0, 1.0]])})


def test_mcct_representer_and_kernel_vector():
    rep = da.mcct_check(REPRESENTER)
    assert rep.passed and rep.worst_gap <= 1e-10
    v = da.DaSeries(2, 1, 2, 1, {(0, 1): np.array([[1.0], [0.0]]), (1, 0): np.array([[0.0], [-1.0]])})
    Mv, nv = da.da_kernel_vector(REPRESENTER, v)
    assert Mv <= 1e-10 and np.isclose(nv, np.sqrt(2))
    # a non-kernel direction is not annihilated
    w = da.DaSeries(2, 1, 2, 1, {(1, 0): np.array([[1.0], [0.0]])})
    assert da.da_kernel_vector(REPRESENTER, w)[0] > 0.5


def test_mcct_other_cases():
    z2 = da.DaSeries(1, 8, 1, 1, {(2,): np.ones((1, 1))})
    assert da.mcct_check(z2).passed
    half = da.DaSeries(2, 6, 1, 1, {(1, 0): np.full((1, 1), 0.5)})
    rep = da.mcct_check(half)
    assert not rep.passed and rep.worst_gap > 0.1


def test_beurling_representer_projects_to_partial_isometry():
    res = beurling(OutputPair(np.ones((1, 1)), (np.zeros((1, 1)), np.zeros((1, 1)))), 6)
    assert da.mcct_check(da.da_project(res.Phi)).passed


NP = da.ClassicalNpProblem([0, 0.5], [1, 1], None)


def test_classical_np_example():
    cd = da.classical_data(NP)
    np.testing.assert_allclose(cd.P, [[1, 1], [1, 4 / 3]], atol=1e-15)
    sol = da.classical_np_solve(NP)
    assert sol.interpolation_residual() <= 1e-12
    assert np.isclose(sol.norm_squared(), 1.0, rtol=0, atol=1e-14)


def test_classical_theta_identities():
    th = da.classical_theta(NP)
    np.testing.assert_allclose(th(1.0), np.eye(2), atol=1e-14)
    grid = da.polar_grid()
    assert th.iden_residual(grid) <= 1e-10
    assert th.j_contractivity_min_eig(grid) >= -1e-10
    # the series expansion reproduces the closed form inside the disk
    S = th.series(60)
    lam = 0.3 - 0.2j
    val = sum(c * lam ** len(w) for w, c in S.coeffs.items())
    np.testing.assert_allclose(val, th(lam), atol=1e-12)


def test_classical_family():
    sol = da.classical_np_solve(NP)
    rng = np.random.default_rng(6)
    for _ in range(5):
        a, b = rng.uniform(0, 0.99, 2) * np.exp(2j * np.pi * rng.uniform(size=2))
        h = (lambda c0, c1: (lambda lam: (c0 + c1 * lam) / 2))(a, b)
        assert sol.interpolation_residual(h) <= 1e-12


def test_classical_with_nonzero_s0():
    S0 = Realization((np.full((1, 1), 0.4),), np.full((1, 1), 0.5), np.full((1, 1), 0.5), np.full((1, 1), 0.2))
    prob = da.ClassicalNpProblem([0.1, -0.3j, 0.5], [0.4, -0.2, 1j], S0)
    sol = da.classical_np_solve(prob)
    assert sol.interpolation_residual() <= 1e-12
    th = sol.theta
    assert th.iden_residual(da.polar_grid(5, 6)) <= 1e-10
    # f0 as a power series agrees with its closed form
    S = sol.f0_series(80)
    lam = 0.25 + 0.1j
    val = sum(c[0, 0] * lam ** len(w) for w, c in S.coeffs.items())
    assert abs(val - sol.f0(lam)) <= 1e-12


def test_classical_matches_one_variable_colligation():
    sol_th = da.classical_theta(NP)
    cd = sol_th.data
    z = Realization((np.zeros((1, 1)),), np.zeros((1, 1)), np.zeros((1, 1)), np.zeros((1, 1)))
    data = build_interpolation_data(OutputPair(cd.E, (cd.T,)), z, np.ones(2))
    A = build_A(data, 60)

    def A_at(lam):
        return sum(c * lam ** len(w) for w, c in A.series.coeffs.items())

    # both realize the same kernel, so they differ by a constant J-unitary factor;
    # Theta vanishes at the node 0, so normalize elsewhere
    J = np.diag([1.0, -1.0])
    U = np.linalg.solve(sol_th(0.7), A_at(0.7))
    np.testing.assert_allclose(U.conj().T @ J @ U, J, atol=1e-10)
    for lam in (0.3, -0.2 + 0.4j, 0.5j):
        np.testing.assert_allclose(A_at(lam), sol_th(lam) @ U, atol=1e-10)


def test_classical_input_validation():
    with pytest.raises(ValueError):
        da.ClassicalNpProblem([0.2, 1.0], [0, 0])
    with pytest.raises(ValueError):
        da.ClassicalNpProblem([0.2, 0.2], [0, 0])
    with pytest.raises(ValueError):
        da.ClassicalNpProblem([0.2], [0, 0])
    unimodular = Realization((np.zeros((1, 1)),), np.zeros((1, 1)), np.zeros((1, 1)), np.ones((1, 1)))
    with pytest.raises(NotStrictlyPositive):
        da.classical_np_solve(da.ClassicalNpProblem([0.3, -0.1], [1.0, 1.0], unimodular))


WITNESS = [[F(1), F(0), F(1), F(-1, 4)],
           [F(0), F(4, 3), F(0), F(1)],
           [F(1), F(0), F(4, 3), F(0)],
           [F(-1, 4), F(1), F(0), F(1)]]


def test_witness_matrix_exact():
    assert da.witness_matrix_exact() == WITNESS
    rep = da.two_point_witness()
    assert rep.float_match == 0.0
    assert rep.charpoly == [F(1), F(-14, 3), F(871, 144), F(-25, 18), F(0)]
    assert rep.leading_minors == [F(1), F(4, 3), F(4, 9), F(0)]


def test_witness_matrix_is_singular():
    # frozen eigen-oracle: roots of l (l - 25/12) (l^2 - 31/12 l + 2/3)
    oracle = np.sort([0.0, 25 / 12, (31 - np.sqrt(577)) / 24, (31 + np.sqrt(577)) / 24])
    rep = da.two_point_witness()
    np.testing.assert_allclose(np.sort(rep.eigenvalues), oracle, atol=1e-14)
    assert rep.determinant == 0
    assert rep.positive_semidefinite
    assert not rep.positive_definite
