"""Noncommutative interpolation: the J-inner multiplier, kernel checks,
linear-fractional parametrization, Fock-space solutions and Beurling-Lax
representers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import krein
from .ncalg import (
    NcSeries,
    enumerate_words,
    invert_fps,
    mult_matrix,
    mult_matrix_sparse,
    realize_transfer,
    series_multiply,
)
from .sysops import InterpolationData, OutputPair, gramian_solve, observe, stacked, tangential_eval

__all__ = [
    "IndefMultiplier",
    "OapSolution",
    "NotStrictlyPositive",
    "RecoveryError",
    "build_A",
    "kernel_gram",
    "observability_stack",
    "verify_kernel_identity",
    "dual_kernel_min_eig",
    "kolmogorov_R",
    "lft_apply",
    "lft_recover",
    "solve_oap",
    "beurling",
    "beurling_gram_residual",
    "dbr_norm",
]


class NotStrictlyPositive(ValueError):
    pass


class RecoveryError(ValueError):
    pass


def _norm(a) -> float:
    return float(np.linalg.norm(a, 2)) if np.size(a) else 0.0


@dataclass(frozen=True)
class IndefMultiplier:
    """Transfer function of a completed colligation, split ``[[A11, A12], [A21, A22]]``.

    Outputs are ``Y (p) + U (q)``, inputs ``F (f) + U (q)``.
    """

    series: NcSeries
    p: int
    q: int
    f: int
    colligation: krein.Colligation
    cholesky_residual: float
    near_threshold: int = 0

    @property
    def order(self) -> int:
        return self.series.order

    @property
    def d(self) -> int:
        return self.series.d

    def blocks(self):
        s, p, f = self.series, self.p, self.f
        return (s.block(slice(0, p), slice(0, f)), s.block(slice(0, p), slice(f, None)),
                s.block(slice(p, None), slice(0, f)), s.block(slice(p, None), slice(f, None)))

    @property
    def J_YU(self) -> np.ndarray:
        return self.colligation.J_YU

    @property
    def J_FU(self) -> np.ndarray:
        return self.colligation.J_FU

    def with_order(self, order: int) -> "IndefMultiplier":
        c = self.colligation
        s = realize_transfer(c.T_tuple(), c.B, c.C, c.D, order)
        return IndefMultiplier(s, self.p, self.q, self.f, c, self.cholesky_residual,
                               self.near_threshold)


def build_A(data: InterpolationData, order: int, rank_tol: float = krein.RANK_TOL) -> IndefMultiplier:
    """Complete ``[T; E; N]`` to a J-unitary colligation and expand its transfer function."""
    if not data.strict:
        raise NotStrictlyPositive(f"P is not strictly positive (min eigenvalue {data.min_eig:.3e})")
    pair = data.pair
    d, n, p, q = pair.d, pair.n, data.p, data.q
    Tst = stacked(pair.T)
    C = data.C
    V = np.vstack([Tst, C])
    Jcod = np.zeros((d * n + p + q,) * 2, dtype=complex)
    Jcod[:d * n, :d * n] = np.kron(np.eye(d), data.P)
    Jcod[d * n:, d * n:] = data.J_YU
    comp = krein.j_complete(V, data.P, Jcod, rank_tol,
                            dom_factor=krein.metric_factor(data.P),
                            cod_factor=krein.block_factor(data.P, d, data.J_YU))
    W = comp.W
    B, D = W[:d * n], W[d * n:]
    col = krein.Colligation(Tst, B, C, D, data.P, comp.J2, data.J_YU, d)
    rep = krein.inertia_check(col)
    if not rep.passed:
        raise krein.InertiaMismatch(
            f"kappa_- = {rep.kappa_minus}, dim U = {rep.dim_U}, dim F = {rep.dim_F}, "
            f"expected {rep.expected_F}")
    series = realize_transfer(pair.T, B, C, D, order)
    return IndefMultiplier(series, p, q, rep.dim_F, col, comp.cholesky_residual, comp.near_threshold)


# ------------------------------------------------------------- kernels


def kernel_gram(S: NcSeries, G, Gp, order: int) -> np.ndarray:
    """Gram matrix of ``k G - S (k G') S^*`` over words of length <= order.

    Equals ``(I x G) - M_S (I x G') M_S^*`` in the word basis; exact at
    truncation because ``M_S`` is block lower triangular by degree.
    """
    G = np.atleast_2d(np.asarray(G, dtype=complex))
    Gp = np.atleast_2d(np.asarray(Gp, dtype=complex))
    nw = len(enumerate_words(S.d, order))
    M = mult_matrix(S, order)
    return np.kron(np.eye(nw), G) - M @ np.kron(np.eye(nw), Gp) @ M.conj().T


def observability_stack(C, T, order: int) -> np.ndarray:
    """Rows ``C T^alpha`` stacked over the word basis."""
    C = np.atleast_2d(np.asarray(C, dtype=complex))
    T = [np.atleast_2d(np.asarray(t, dtype=complex)) for t in T]
    words = enumerate_words(len(T), order)
    powers = {(): np.eye(C.shape[1], dtype=complex)}
    rows = []
    for w in words:
        if w:
            powers[w] = powers[w[:-1]] @ T[w[-1] - 1]
        rows.append(C @ powers[w])
    return np.vstack(rows)


@dataclass(frozen=True)
class KernelReport:
    residual: float
    lhs_min_eig: float
    dual_min_eig: float
    order: int


def dual_kernel_min_eig(A: IndefMultiplier, order: int) -> float:
    """Smallest eigenvalue of ``J_FU x I - M^* (J_YU x I) M`` at truncation."""
    nw = len(enumerate_words(A.d, order))
    M = mult_matrix(A.series, order)
    G = np.kron(np.eye(nw), A.J_FU) - M.conj().T @ np.kron(np.eye(nw), A.J_YU) @ M
    return float(np.linalg.eigvalsh(0.5 * (G + G.conj().T)).min())


def verify_kernel_identity(A: IndefMultiplier, order: int | None = None) -> KernelReport:
    """Compare the Gram of ``k J_YU - A (k J_FU) A^*`` with ``O P^{-1} O^*``."""
    order = A.order if order is None else order
    if order > A.order:
        A = A.with_order(order)
    c = A.colligation
    lhs = kernel_gram(A.series, A.J_YU, A.J_FU, order)
    O = observability_stack(c.C, c.T_tuple(), order)
    rhs = O @ np.linalg.solve(c.P, O.conj().T)
    res = _norm(lhs - rhs)
    lmin = float(np.linalg.eigvalsh(0.5 * (lhs + lhs.conj().T)).min())
    return KernelReport(res, lmin, dual_kernel_min_eig(A, order), order)


@dataclass(frozen=True)
class KolmogorovReport:
    d: int
    order: int
    F: dict
    residual: float
    diagonal_residual: float
    inductive_min_eig: float
    inductive_residual: float


def _k_gram(d: int, order: int, letters: int | None = None) -> np.ndarray:
    """Gram of ``k I_m - Z(zeta)^* k Z(z)`` in ``m = letters`` variables,
    embedded in the ``d``-letter word basis (rows ``(alpha, r)``)."""
    m = d if letters is None else letters
    words = enumerate_words(d, order)
    idx = {w: i for i, w in enumerate(words)}
    nw = len(words)
    K = np.zeros((nw * m, nw * m))
    for i, w in enumerate(words):
        if all(x <= m for x in w):
            for r in range(m):
                K[i * m + r, i * m + r] = 1.0
    # -zeta_r k z_c sits at z-word gamma c, zeta-word gamma r
    for g in words:
        if len(g) >= order or any(x > m for x in g):
            continue
        for r in range(1, m + 1):
            for c in range(1, m + 1):
                a, b = idx[g + (c,)], idx[g + (r,)]
                K[a * m + (r - 1), b * m + (c - 1)] -= 1.0
    return K


def _k_gram_diag_formula(d: int, order: int, letters: int | None = None, comps: int | None = None) -> np.ndarray:
    """Same Gram built from the entrywise form ``1 + sum_{m != j} zeta_m k z_m``.

    ``letters`` bounds the alphabet of the words, ``comps`` the number of
    components (and the letters summed on the diagonal).  With ``comps <
    letters`` this is ``I + sum_{i<j<=comps} F_ij F_ij^*`` on the larger
    word space.
    """
    L = d if letters is None else letters
    c_n = L if comps is None else comps
    words = enumerate_words(d, order)
    idx = {w: i for i, w in enumerate(words)}
    nw = len(words)
    K = np.zeros((nw * c_n, nw * c_n))
    for j in range(c_n):
        K[j, j] = 1.0  # the constant 1 at the empty pair
    for g in words:
        if len(g) >= order or any(x > L for x in g):
            continue
        for r in range(1, c_n + 1):
            for c in range(1, c_n + 1):
                a, b = idx[g + (c,)], idx[g + (r,)]
                if r == c:
                    for j in range(1, c_n + 1):
                        if j != r:
                            K[a * c_n + j - 1, a * c_n + j - 1] += 1.0
                else:
                    K[a * c_n + (r - 1), b * c_n + (c - 1)] -= 1.0
    return K


def _right_shift_row(d: int, order: int, j: int, cols) -> np.ndarray:
    """Coefficient matrix of ``(R_j H)(z) = Row_gamma z^{gamma j}``."""
    words = enumerate_words(d, order)
    idx = {w: i for i, w in enumerate(words)}
    out = np.zeros((len(words), len(cols)))
    for k, g in enumerate(cols):
        out[idx[g + (j,)], k] = 1.0
    return out


def kolmogorov_R(d: int, order: int) -> KolmogorovReport:
    """Check the sum-of-squares decomposition of ``k I_d - Z(zeta)^* k Z(z)``.

    Builds ``F_ij = e_i (R_j H) - e_j (R_i H)`` for ``i < j`` as coefficient
    matrices over words of length <= order (columns indexed by words of
    length <= order - 1) and compares ``I_d + sum F_ij F_ij^*`` with the
    kernel Gram, coefficientwise.  Also checks the inductive step
    ``R_m - diag(R_{m-1}, 1) = G G^*``.
    """
    words = enumerate_words(d, order)
    nw = len(words)
    cols = enumerate_words(d, order - 1) if order >= 1 else []
    shifts = {j: _right_shift_row(d, order, j, cols) for j in range(1, d + 1)}
    F = {}
    rhs = np.zeros((nw * d, nw * d))
    # constant I_d term: coefficient at the empty pair only
    for r in range(d):
        rhs[r, r] = 1.0
    for i in range(1, d + 1):
        for j in range(i + 1, d + 1):
            Fm = np.zeros((nw * d, len(cols)))
            Fm[i - 1::d] += shifts[j]
            Fm[j - 1::d] -= shifts[i]
            F[(i, j)] = Fm
            rhs += Fm @ Fm.T
    lhs = _k_gram(d, order)
    diag_form = _k_gram_diag_formula(d, order)
    res = float(np.max(np.abs(lhs - rhs))) if lhs.size else 0.0
    dres = float(np.max(np.abs(lhs - diag_form))) if lhs.size else 0.0
    ind_min, ind_res = np.inf, 0.0
    for m in range(2, d + 1):
        Km = _k_gram(d, order, m)
        # the (m-1)-step form over the same m-letter words
        Kprev = _k_gram_diag_formula(d, order, m, m - 1)
        embed = np.zeros_like(Km)
        for a in range(nw):
            for b in range(nw):
                embed[a * m:a * m + m - 1, b * m:b * m + m - 1] = Kprev[a * (m - 1):(a + 1) * (m - 1),
                                                                         b * (m - 1):(b + 1) * (m - 1)]
        embed[m - 1, m - 1] = 1.0  # the scalar 1 in the corner
        diff = Km - embed
        # explicit G: rows (alpha, r); column blocks per letter < m plus one
        mwords = [g for g in cols if all(x <= m for x in g)]
        G = np.zeros((nw * m, len(mwords) * (m - 1)))
        Rm = _right_shift_row(d, order, m, mwords)
        for r in range(m - 1):
            G[r::m, r * len(mwords):(r + 1) * len(mwords)] = Rm
            G[m - 1::m, r * len(mwords):(r + 1) * len(mwords)] = -_right_shift_row(d, order, r + 1, mwords)
        ind_res = max(ind_res, float(np.max(np.abs(diff - G @ G.T))))
        ind_min = min(ind_min, float(np.linalg.eigvalsh(diff).min()))
    if d == 1:
        ind_min = 0.0
    return KolmogorovReport(d, order, F, res, dres, ind_min, ind_res)


# ------------------------------------------------------ linear fractional


def lft_apply(A: IndefMultiplier, E: NcSeries, rcond_min: float = 1e-10) -> NcSeries:
    """``(A11 E + A12)(A21 E + A22)^{-1}`` at the common order."""
    A11, A12, A21, A22 = A.blocks()
    if E.shape != (A.f, A.q):
        raise ValueError(f"parameter shape {E.shape} differs from {(A.f, A.q)}")
    order = min(A.order, E.order)
    num = series_multiply(A11, E, order) + A12.truncate(order)
    den = series_multiply(A21, E, order) + A22.truncate(order)
    return series_multiply(num, invert_fps(den, rcond_min), order)


def _solve_left(L: NcSeries, R: NcSeries, order: int) -> NcSeries:
    """Degreewise minimum-norm solution ``X`` of ``L X = R``."""
    L0 = L.coef(())
    pinv = np.linalg.pinv(L0)
    X: dict[tuple, np.ndarray] = {}
    for w in enumerate_words(L.d, order):
        acc = R.coef(w).copy()
        for k in range(1, len(w) + 1):
            lu = L.coeffs.get(w[:k])
            if lu is not None:
                xv = X.get(w[k:])
                if xv is not None:
                    acc = acc - lu @ xv
        X[w] = pinv @ acc
    return NcSeries(L.d, order, L.in_dim, R.in_dim, X)


@dataclass(frozen=True)
class Recovery:
    E: NcSeries
    forward_residual: float
    exact: bool


def lft_recover(A: IndefMultiplier, S: NcSeries, tol: float = 1e-8) -> Recovery:
    """Find a parameter ``E`` with ``LFT_A[E] = S``.

    Solves ``(A11 - S A21) E = S A22 - A12`` degree by degree; exact when
    the blocks are square, least squares otherwise.  Forming the inverse
    series first is not backward stable: ``A11 - S A21`` vanishes at the
    nodes, so its inverse grows like ``|lambda_min|^{-k}``.  The same
    factor bounds how well ``E`` is determined by a rounded ``S``.
    """
    A11, A12, A21, A22 = A.blocks()
    order = min(A.order, S.order)
    L = A11.truncate(order) - series_multiply(S, A21, order)
    R = series_multiply(S, A22, order) - A12.truncate(order)
    exact = L.out_dim == L.in_dim
    E = _solve_left(L, R, order)
    fwd = lft_apply(A, E).max_abs_diff(S.truncate(order), order)
    if fwd > tol:
        raise RecoveryError(f"forward residual {fwd:.3e} exceeds {tol:.1e}")
    return Recovery(E, fwd, exact)


# ------------------------------------------------------------ solutions


@dataclass(frozen=True)
class OapSolution:
    f0: NcSeries
    u: NcSeries
    v: NcSeries
    E0: NcSeries | None
    A: IndefMultiplier
    Pinv_x: np.ndarray
    order: int
    recovery_residual: float = float("nan")
    notes: tuple = field(default_factory=tuple)

    def solution(self, sigma: NcSeries | None = None) -> NcSeries:
        if sigma is None:
            return self.f0
        return self.f0 + series_multiply(self.u, sigma, self.order)


def solve_oap(data: InterpolationData, order: int, A: IndefMultiplier | None = None,
              recover: bool = True) -> OapSolution:
    """Minimal solution ``f0`` plus the homogeneous factor ``u = A11 - S0 A21``."""
    if not data.strict:
        raise NotStrictlyPositive(f"P is not strictly positive (min eigenvalue {data.min_eig:.3e})")
    pair = data.pair
    y = np.linalg.solve(data.P, data.x)
    S0 = data.S0.series(order)
    obsE = observe(pair, y, order)
    obsN = observe(OutputPair(data.N, pair.T), y, order)
    f0 = obsE - series_multiply(S0, obsN, order)
    if A is None:
        A = build_A(data, order)
    elif A.order < order:
        A = A.with_order(order)
    A11, A12, A21, A22 = A.blocks()
    u = A11 - series_multiply(S0, A21, order)
    v = series_multiply(S0, A22, order) - A12
    E0, rec_res, notes = None, float("nan"), []
    if recover:
        try:
            rec = lft_recover(A, S0)
            E0, rec_res = rec.E, rec.forward_residual
            if not rec.exact:
                notes.append("parameter recovered by degreewise least squares")
        except (RecoveryError, ValueError) as exc:
            notes.append(f"parameter recovery failed: {exc}")
    return OapSolution(f0, u, v, E0, A, y, order, rec_res, tuple(notes))


def interpolation_residual(data: InterpolationData, f: NcSeries) -> float:
    return float(np.linalg.norm(tangential_eval(data.pair, f).ravel() - data.x))


# -------------------------------------------------------------- Beurling


@dataclass(frozen=True)
class BeurlingResult:
    Phi: NcSeries
    B1: np.ndarray
    D1: np.ndarray
    P: np.ndarray
    pair: OutputPair
    cholesky_residual: float


def beurling(pair: OutputPair, order: int, rel: float = 1e-8) -> BeurlingResult:
    """Strictly inner representer ``Phi = D1 + E (I - Z T)^{-1} Z B1``."""
    P = gramian_solve(pair.T, pair.E.conj().T @ pair.E)
    ev = np.linalg.eigvalsh(P)
    if ev.min() <= rel * max(ev.max(), 1e-300):
        raise NotStrictlyPositive(f"observability gramian is singular (min eigenvalue {ev.min():.3e})")
    d, n, p = pair.d, pair.n, pair.p
    V = np.vstack([stacked(pair.T), pair.E])
    Jcod = np.zeros((d * n + p,) * 2, dtype=complex)
    Jcod[:d * n, :d * n] = np.kron(np.eye(d), P)
    Jcod[d * n:, d * n:] = np.eye(p)
    comp = krein.j_complete(V, P, Jcod)
    B1, D1 = comp.W[:d * n], comp.W[d * n:]
    Phi = realize_transfer(pair.T, B1, pair.E, D1, order)
    return BeurlingResult(Phi, B1, D1, P, pair, comp.cholesky_residual)


def beurling_gram_residual(res: BeurlingResult, order: int) -> float:
    """``|| (I - M_Phi M_Phi^*) - O P^{-1} O^* ||`` over words <= order."""
    Phi = res.Phi if res.Phi.order >= order else realize_transfer(
        res.pair.T, res.B1, res.pair.E, res.D1, order)
    lhs = kernel_gram(Phi, np.eye(Phi.out_dim), np.eye(Phi.in_dim), order)
    O = observability_stack(res.pair.E, res.pair.T, order)
    return _norm(lhs - O @ np.linalg.solve(res.P, O.conj().T))


# ---------------------------------------------------------------- norms


@dataclass(frozen=True)
class DbrNorm:
    value: float
    range_residual: float


def dbr_norm(S0: NcSeries, g: NcSeries, order: int | None = None,
             threshold: float = 1e-10, range_tol: float = 1e-8) -> DbrNorm:
    """``<(I - M M^*)^+ g, g>`` with ``M`` the truncated multiplication matrix.

    An order-dependent approximation of the lifted norm of ``g``.
    """
    order = min(S0.order, g.order) if order is None else order
    gv = g.to_dense(order)
    if gv.shape[0] > SPARSE_THRESHOLD:
        val = _dbr_norm_cg(S0, gv, order)
        if val is not None:
            return DbrNorm(val, 0.0)
    M = mult_matrix(S0, order)
    A = np.eye(M.shape[0]) - M @ M.conj().T
    A = 0.5 * (A + A.conj().T)
    # fast path: a well-separated positive definite defect
    try:
        L = np.linalg.cholesky(A)
        piv = np.abs(np.diag(L)) ** 2
        if piv.min() > 1e3 * threshold * max(1.0, float(piv.max())):
            z = np.linalg.solve(L, gv)
            return DbrNorm(float(np.real(np.vdot(z, z))), 0.0)
    except np.linalg.LinAlgError:
        pass
    ev, V = np.linalg.eigh(A)
    keep = ev > threshold * max(1.0, float(np.max(np.abs(ev))))
    coef = V.conj().T @ gv
    outside = coef[~keep]
    rng_res = float(np.linalg.norm(outside)) if outside.size else 0.0
    if rng_res > range_tol * max(1.0, float(np.linalg.norm(gv))):
        raise ValueError(f"vector lies outside the numerical range (residual {rng_res:.3e})")
    val = float(np.real(np.sum(np.abs(coef[keep]) ** 2 / ev[keep, None])))
    return DbrNorm(val, rng_res)


SPARSE_THRESHOLD = 1500


def _dbr_norm_cg(S0: NcSeries, gv: np.ndarray, order: int, rtol: float = 1e-13) -> float | None:
    """Conjugate gradients on ``I - M M^*``; ``None`` when it fails to converge."""
    from scipy.sparse.linalg import LinearOperator, cg

    M = mult_matrix_sparse(S0, order)
    MH = M.conj().T.tocsr()
    k = M.shape[0]
    op = LinearOperator((k, k), matvec=lambda v: v - M @ (MH @ v), dtype=complex)
    b = gv.ravel()
    z, info = cg(op, b, rtol=rtol, atol=0.0, maxiter=2000)
    if info != 0:
        return None
    if np.linalg.norm(op.matvec(z) - b) > 1e-10 * max(1.0, float(np.linalg.norm(b))):
        return None
    return float(np.real(np.vdot(b, z)))
