import functools
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dbrinterp.ncalg import (
    NcSeries,
    SingularConstantTerm,
    Word,
    abelianize,
    concat,
    enumerate_words,
    ev_empty,
    fock_inner,
    fock_norm,
    invert_fps,
    mult_matrix,
    mult_matrix_sparse,
    multinomial,
    realize_transfer,
    reversal,
    series_multiply,
    sharp,
    shift,
    shift_adjoint,
)
from dbrinterp.sysops import word_power

from instances import crandn, random_realization, random_series

# ---------------------------------------------------------------- words


def test_concat_examples():
    assert concat(Word((1, 2), 3), Word((3,), 3)).letters == (1, 2, 3)
    w = Word((2, 1, 1), 2)
    assert concat(Word.empty(2), w) == w


def test_word_rejects_bad_letters():
    with pytest.raises(ValueError):
        Word((0,), 2)
    with pytest.raises(ValueError):
        Word((3,), 2)
    with pytest.raises(ValueError):
        concat(Word((1,), 2), Word((1,), 3))


def test_concat_reversal_exhaustive():
    ws = [Word(w, 3) for w in enumerate_words(3, 3)]
    for a, b in itertools.product(ws, ws):
        assert concat(reversal(a), reversal(b)) == reversal(concat(b, a))


def test_reversal_examples():
    assert reversal(()) == ()
    assert reversal((3, 1, 2)) == (2, 1, 3)
    for w in enumerate_words(3, 4):
        assert reversal(reversal(w)) == w


def test_abelianize_examples():
    assert abelianize((1, 2, 1), 2) == (2, 1)
    assert abelianize((), 3) == (0, 0, 0)
    assert abelianize(Word((2, 2), 2)) == (0, 2)
    assert sum(1 for w in enumerate_words(2, 2) if abelianize(w, 2) == (1, 1)) == 2


def test_multinomial_examples():
    assert multinomial((0, 0, 0)) == 1
    assert multinomial((1, 1)) == 2
    assert multinomial((2, 3)) == 10
    with pytest.raises(ValueError):
        multinomial((1, -1))


@functools.lru_cache(maxsize=None)
def _pascal(n):
    # |n|!/n! = sum over the last letter of the word
    if sum(n) == 0:
        return 1
    return sum(_pascal(n[:i] + (n[i] - 1,) + n[i + 1:]) for i in range(len(n)) if n[i] > 0)


def test_multinomial_matches_pascal_recursion():
    for d in range(1, 5):
        for n in itertools.product(range(5), repeat=d):
            if sum(n) <= 12:
                assert multinomial(n) == _pascal(n)


@given(st.lists(st.integers(0, 6), min_size=1, max_size=4))
def test_multinomial_counts_words(n):
    d = len(n)
    if sum(n) > 7 or d ** sum(n) > 20000:
        return
    count = sum(1 for w in itertools.product(range(1, d + 1), repeat=sum(n)) if abelianize(w, d) == tuple(n))
    assert count == multinomial(n)


def test_enumerate_words_examples():
    assert enumerate_words(2, 1) == [(), (1,), (2,)]
    assert len(enumerate_words(2, 2)) == 7
    assert len(enumerate_words(3, 3)) == 40
    ws = enumerate_words(3, 3)
    assert ws == sorted(ws, key=lambda w: (len(w), w))


# --------------------------------------------------------------- series


def _brute_product(S, U, order):
    out = {}
    for a in enumerate_words(S.d, order):
        acc = np.zeros((S.out_dim, U.in_dim), dtype=complex)
        for k in range(len(a) + 1):
            acc += S.coef(a[:k]) @ U.coef(a[k:])
        out[a] = acc
    return out


def test_multiply_constant_left():
    rng = np.random.default_rng(0)
    c = crandn(rng, 2, 3)
    U = random_series(rng, 2, 3, 3, 1)
    P = series_multiply(NcSeries.constant(c, 2, 3), U)
    for w in enumerate_words(2, 3):
        np.testing.assert_allclose(P.coef(w), c @ U.coef(w), atol=1e-14)


def test_multiply_word_order():
    M, M2 = np.array([[1.0, 2.0], [0.0, 1.0]]), np.array([[0.0, 1.0], [3.0, 0.0]])
    L = NcSeries(2, 3, 2, 2, {(): np.eye(2), (1,): M})
    R = NcSeries(2, 3, 2, 2, {(): np.eye(2), (2,): M2})
    P = series_multiply(L, R)
    np.testing.assert_array_equal(P.coef((1, 2)), M @ M2)
    np.testing.assert_array_equal(P.coef((2, 1)), 0)


@pytest.mark.parametrize("d,order", [(1, 5), (2, 4), (3, 3)])
def test_multiply_matches_brute_force(d, order):
    rng = np.random.default_rng(d)
    S, U = random_series(rng, d, order, 2, 3), random_series(rng, d, order, 3, 2)
    P = series_multiply(S, U)
    ref = _brute_product(S, U, order)
    assert max(np.max(np.abs(P.coef(w) - ref[w])) for w in ref) <= 1e-13


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(0, 4), st.integers(0, 2**31))
def test_multiply_associative(d, order, seed):
    if d == 3:
        order = min(order, 3)
    rng = np.random.default_rng(seed)
    A, B, C = (random_series(rng, d, order, 2, 2) for _ in range(3))
    lhs = series_multiply(series_multiply(A, B), C)
    rhs = series_multiply(A, series_multiply(B, C))
    assert lhs.max_abs_diff(rhs) <= 1e-12


def test_truncation_is_flagged():
    z1 = NcSeries.monomial((1,), 1.0, 1, 2)
    P = series_multiply(series_multiply(z1, z1), z1)
    assert P.truncated and not P.coeffs
    sq = series_multiply(z1, z1)
    assert not sq.truncated and sq.coef((1, 1))[0, 0] == 1


def test_sharp_examples():
    rng = np.random.default_rng(1)
    S = random_series(rng, 2, 3, 2, 3)
    assert sharp(sharp(S)).max_abs_diff(S) == 0
    M = crandn(rng, 2, 2)
    Ss = sharp(NcSeries.monomial((1, 2), M, 2, 2))
    np.testing.assert_array_equal(Ss.coef((2, 1)), M.conj().T)
    assert set(Ss.coeffs) == {(2, 1)}
    for w in enumerate_words(2, 3):
        assert np.isclose(np.linalg.norm(Ss.coef(w)), np.linalg.norm(NcSeries.monomial((1, 2), M, 2, 2).coef(w[::-1])))


@pytest.mark.parametrize("d", [1, 2, 3])
def test_sharp_of_schur_is_contractive(d):
    rng = np.random.default_rng(10 + d)
    order = {1: 8, 2: 5, 3: 3}[d]
    for _ in range(5):
        S = random_realization(rng, d, 2, 2, 2).series(order)
        assert np.linalg.norm(mult_matrix(sharp(S)), 2) <= 1 + 1e-10


def test_invert_geometric():
    S = NcSeries(1, 6, 1, 1, {(): 1.0, (1,): -1.0})
    inv = invert_fps(S)
    for k in range(7):
        assert inv.coef((1,) * k)[0, 0] == 1


def test_invert_constant_and_forward_check():
    C = np.array([[2.0, 1.0], [0.0, 4.0]])
    np.testing.assert_allclose(invert_fps(NcSeries.constant(C, 2, 3)).coef(()), np.linalg.inv(C))
    rng = np.random.default_rng(2)
    for d, order in ((1, 6), (2, 4), (3, 3)):
        S = random_series(rng, d, order, 3, 3)
        S = NcSeries(d, order, 3, 3, {**S.coeffs, (): np.eye(3)})
        E = series_multiply(S, invert_fps(S)) - NcSeries.identity(3, d, order)
        assert max((np.max(np.abs(c)) for c in E.coeffs.values()), default=0.0) <= 1e-10


def test_invert_singular_constant():
    with pytest.raises(SingularConstantTerm):
        invert_fps(NcSeries(2, 2, 2, 2, {(): np.diag([1.0, 0.0])}))


def test_mult_matrix_examples():
    c = np.array([[1.0, 2.0]])
    M = mult_matrix(NcSeries.constant(c, 2, 2))
    W = len(enumerate_words(2, 2))
    np.testing.assert_array_equal(M, np.kron(np.eye(W), c))
    z = NcSeries.monomial((1,), 1.0, 1, 2)
    np.testing.assert_array_equal(mult_matrix(z).real, np.eye(3, k=-1))


@pytest.mark.parametrize("d,order", [(1, 10), (2, 5), (3, 3)])
def test_mult_matrix_schur_norm(d, order):
    rng = np.random.default_rng(3)
    for _ in range(5):
        S = random_realization(rng, d, 2, 2, 1).series(order)
        assert np.linalg.norm(mult_matrix(S), 2) <= 1 + 1e-12


def test_mult_matrix_homomorphism_without_overflow():
    rng = np.random.default_rng(4)
    S = random_series(rng, 2, 4, 2, 2, degree=2)
    U = random_series(rng, 2, 4, 2, 2, degree=2)
    # restrict to columns of degree 0 so no product term overflows
    lhs = mult_matrix(series_multiply(S, U))
    rhs = mult_matrix(S) @ mult_matrix(U)
    np.testing.assert_allclose(lhs[:, :2], rhs[:, :2], atol=1e-13)


def test_mult_matrix_intertwines_right_shift():
    rng = np.random.default_rng(5)
    order = 4
    S = random_series(rng, 2, order, 1, 1)
    M = mult_matrix(S)
    for j in (1, 2):
        for k in range(6):
            g = random_series(rng, 2, order, 1, 1, degree=order - 1)
            a = NcSeries.from_dense(M @ shift(j, g).to_dense(), 2, order, 1)
            b = shift(j, NcSeries.from_dense(M @ g.to_dense(), 2, order, 1))
            assert a.max_abs_diff(b) <= 1e-13


def test_mult_matrix_sparse_matches_dense():
    rng = np.random.default_rng(6)
    S = random_series(rng, 3, 3, 2, 1)
    np.testing.assert_array_equal(mult_matrix_sparse(S).toarray(), mult_matrix(S))


# ------------------------------------------------------------ Fock ops


def test_shift_relations():
    rng = np.random.default_rng(7)
    d, order = 3, 3
    f = random_series(rng, d, order, 2, 1, degree=order - 1)
    for j in range(1, d + 1):
        assert shift_adjoint(j, shift(j, f)).max_abs_diff(f) == 0
        assert np.all(ev_empty(shift(j, f)) == 0)
    g = random_series(rng, d, order, 2, 1)
    total = NcSeries.constant(ev_empty(g), d, order)
    for j in range(1, d + 1):
        total = total + shift(j, shift_adjoint(j, g))
    assert total.max_abs_diff(g) == 0


def test_fock_inner_and_norm():
    rng = np.random.default_rng(8)
    f, g = random_series(rng, 2, 3, 2, 1), random_series(rng, 2, 3, 2, 1)
    np.testing.assert_allclose(fock_inner(f, g), np.vdot(g.to_dense(), f.to_dense()))
    assert np.isclose(fock_norm(f) ** 2, fock_inner(f, f).real)


# ---------------------------------------------------------- realization


def test_realize_transfer_examples():
    rng = np.random.default_rng(9)
    T = [crandn(rng, 2, 2) for _ in range(2)]
    D = crandn(rng, 1, 1)
    S = realize_transfer(T, np.zeros((4, 1)), crandn(rng, 1, 2), D, 3)
    assert set(S.coeffs) == {()}
    z = realize_transfer([np.zeros((1, 1))], np.ones((1, 1)), np.ones((1, 1)), np.zeros((1, 1)), 4)
    assert set(z.coeffs) == {(1,)} and z.coef((1,))[0, 0] == 1


@pytest.mark.parametrize("d", [1, 2, 3])
def test_realize_transfer_word_products(d):
    rng = np.random.default_rng(20 + d)
    R = random_realization(rng, d, 3, 2, 2)
    order = {1: 6, 2: 4, 3: 3}[d]
    S = R.series(order)
    Bj = R.B_blocks()
    for w in enumerate_words(d, order):
        if not w:
            ref = R.D
        else:
            ref = R.C @ word_power(R.A, w[:-1]) @ Bj[w[-1] - 1]
        np.testing.assert_allclose(S.coef(w), ref, atol=1e-14)


def test_series_rejects_bad_words():
    with pytest.raises(ValueError):
        NcSeries(2, 1, 1, 1, {(1, 1): 1.0})
    with pytest.raises(ValueError):
        NcSeries(2, 2, 1, 1, {(3,): 1.0})


def test_word_count_formula():
    from dbrinterp.ncalg import word_count

    for d in (1, 2, 3):
        for order in range(6):
            assert word_count(d, order) == len(enumerate_words(d, order))
    assert word_count(3, 7) == 3280
