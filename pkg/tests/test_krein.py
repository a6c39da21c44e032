import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dbrinterp import krein, ncinterp
from dbrinterp.krein import (
    KreinMetric,
    inertia,
    inertia_check,
    is_j_coisometry,
    is_j_isometry,
    is_j_unitary,
    j_adjoint,
    j_cholesky,
    j_complete,
    j_complete_projector,
    signature,
)
from dbrinterp.sysops import stacked

from instances import crandn, interpolation_instance


def random_metric(rng, kp, km):
    Q = np.linalg.qr(crandn(rng, kp + km, kp + km))[0]
    ev = np.r_[rng.uniform(0.5, 3, kp), -rng.uniform(0.5, 3, km)]
    return KreinMetric((Q * ev) @ Q.conj().T)


def stein_isometry(data):
    """``V = [T; C]`` with domain metric ``P`` and codomain ``diag(I_d (x) P, J_YU)``."""
    d, n = data.pair.d, data.pair.n
    V = np.vstack([stacked(data.pair.T), data.C])
    cod = np.zeros((d * n + data.J_YU.shape[0],) * 2, dtype=complex)
    cod[:d * n, :d * n] = np.kron(np.eye(d), data.P)
    cod[d * n:, d * n:] = data.J_YU
    return V, KreinMetric(data.P), KreinMetric(cod)


def test_metric_validation():
    with pytest.raises(ValueError):
        KreinMetric(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        KreinMetric(np.diag([1.0, 0.0]))
    with pytest.raises(ValueError):
        KreinMetric(np.diag([1.0, -1.0]), inertia=(2, 0))
    assert KreinMetric.signature(2, 1).inertia == (2, 1)


def test_j_adjoint_examples():
    rng = np.random.default_rng(0)
    T = crandn(rng, 3, 2)
    np.testing.assert_allclose(j_adjoint(T, np.eye(2), np.eye(3)), T.conj().T)
    Jd, Jc = random_metric(rng, 1, 1), random_metric(rng, 2, 1)
    np.testing.assert_allclose(j_adjoint(j_adjoint(T, Jd, Jc), Jc, Jd), T, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3), st.integers(0, 3), st.integers(0, 2**31))
def test_j_adjoint_inner_product_identity(a, b, c, e, seed):
    if a + b == 0 or c + e == 0:
        return
    rng = np.random.default_rng(seed)
    Jd, Jc = random_metric(rng, a, b), random_metric(rng, c, e)
    T = crandn(rng, c + e, a + b)
    x, y = crandn(rng, a + b), crandn(rng, c + e)
    lhs = np.vdot(y, Jc.G @ (T @ x))
    rhs = np.vdot(j_adjoint(T, Jd, Jc) @ y, Jd.G @ x)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


def test_isometry_examples():
    J = signature(1, 1)
    ok, rep = is_j_unitary(np.eye(2), J, J)
    assert ok and rep.isometry == 0 and rep.coisometry == 0
    t = 0.8
    H = np.array([[np.cosh(t), np.sinh(t)], [np.sinh(t), np.cosh(t)]])
    ok, rep = is_j_unitary(H, J, J)
    assert ok and rep.isometry <= 1e-14 and rep.coisometry <= 1e-14
    # a Hilbert isometry that is not surjective
    V = np.array([[1.0], [0.0]])
    assert is_j_isometry(V, np.eye(1), np.eye(2))[0]
    assert not is_j_coisometry(V, np.eye(1), np.eye(2))[0]


@pytest.mark.parametrize("seed", range(6))
def test_stein_data_gives_isometry(seed):
    data = interpolation_instance(seed, d=1 + seed % 3, n=2 + seed % 3)
    V, Jd, Jc = stein_isometry(data)
    ok, res = is_j_isometry(V, Jd, Jc)
    assert ok and res <= 1e-10 * max(1.0, np.linalg.norm(data.P, 2))


def test_j_cholesky_examples():
    f = j_cholesky(np.diag([2.0, -3.0]))
    np.testing.assert_allclose(np.abs(f.W), np.diag([np.sqrt(2), np.sqrt(3)]), atol=1e-15)
    np.testing.assert_array_equal(f.J2, signature(1, 1))
    rng = np.random.default_rng(1)
    X = crandn(rng, 4, 3)
    f = j_cholesky(X @ X.conj().T)
    assert f.inertia == (3, 0)
    np.testing.assert_array_equal(f.J2, np.eye(3))
    np.testing.assert_allclose(f.W @ f.W.conj().T, X @ X.conj().T, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 20), st.integers(0, 2**31))
def test_j_cholesky_reconstructs(m, seed):
    rng = np.random.default_rng(seed)
    X = crandn(rng, m, m)
    R = X + X.conj().T
    f = j_cholesky(R)
    assert f.residual <= 1e-10 * max(1.0, np.linalg.norm(R, 2))
    assert f.inertia == inertia(R)
    ev = np.linalg.eigvalsh(R)
    cut = krein.RANK_TOL * np.max(np.abs(ev))
    assert f.inertia == (int(np.sum(ev > cut)), int(np.sum(ev < -cut)))


def test_j_complete_trivial_cases():
    J = signature(1, 1)
    c = j_complete(np.eye(2), J, J)
    assert c.W.shape == (2, 0)
    c = j_complete(np.array([[1.0], [0.0]]), np.eye(1), np.eye(2))
    assert c.W.shape == (2, 1)
    assert abs(c.W[0, 0]) <= 1e-15 and np.isclose(abs(c.W[1, 0]), 1.0)


def test_j_complete_rejects_non_isometry():
    with pytest.raises(ValueError):
        j_complete(np.array([[2.0], [0.0]]), np.eye(1), np.eye(2))


@pytest.mark.parametrize("seed", range(8))
def test_j_complete_stein_data(seed):
    data = interpolation_instance(200 + seed, d=1 + seed % 3, n=2 + seed % 3, p=1 + seed % 2)
    V, Jd, Jc = stein_isometry(data)
    c = j_complete(V, Jd, Jc, dom_factor=krein.metric_factor(data.P),
                   cod_factor=krein.block_factor(data.P, data.pair.d, data.J_YU))
    assert c.report.isometry <= 1e-9 and c.report.coisometry <= 1e-9
    # Ran W is J-orthogonal to Ran V
    assert np.linalg.norm(c.W.conj().T @ Jc.G @ V, 2) <= 1e-9 * max(1.0, np.linalg.norm(Jc.G, 2))


@pytest.mark.parametrize("seed", range(4))
def test_completion_unique_up_to_j_unitary(seed):
    data = interpolation_instance(300 + seed, d=2, n=3)
    V, Jd, Jc = stein_isometry(data)
    c = j_complete(V, Jd, Jc)
    Wt, Jt = j_complete_projector(V, Jd, Jc)
    # Wt = W X and X^* J2 X = Jt
    X = np.linalg.lstsq(c.W, Wt, rcond=None)[0]
    assert np.linalg.norm(c.W @ X - Wt, 2) <= 1e-8
    assert np.linalg.norm(X.conj().T @ c.J2 @ X - Jt, 2) <= 1e-8
    # X is invertible, so it is a J-unitary between (J2) and (Jt)
    assert abs(np.linalg.det(X)) > 1e-8


def test_inertia_check_dimension_examples():
    for d, n, p, expected in ((1, 2, 1, 1), (2, 3, 2, 5)):
        data = interpolation_instance(10 + d, d=d, n=n, p=p, q=1)
        A = ncinterp.build_A(data, 1)
        rep = inertia_check(A.colligation)
        assert rep.dim_F == expected and rep.passed


@pytest.mark.parametrize("seed", range(10))
def test_negative_inertia_equals_dim_u(seed):
    q = 1 + seed % 2
    data = interpolation_instance(400 + seed, d=1 + seed % 3, n=1 + seed % 4, p=1 + (seed // 2) % 2, q=q)
    rep = inertia_check(ncinterp.build_A(data, 1).colligation, strict=True)
    assert rep.kappa_minus == rep.dim_U == q
