"""Commutative (Drury-Arveson) and classical one-variable interpolation."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np

from . import ncinterp
from .ncalg import NcSeries, abelianize, enumerate_words, multinomial, series_multiply
from .sysops import (
    InterpolationData,
    OutputPair,
    Realization,
    observe,
)

__all__ = [
    "DaSeries",
    "NonCommutingTuple",
    "multi_indices",
    "da_project",
    "symmetric_lift",
    "da_norm",
    "da_inner",
    "da_observe",
    "da_tangential_eval",
    "da_compute_P",
    "da_gramian_converged",
    "da_gramian_series",
    "da_mult_matrix",
    "solve_oap_da",
    "mcct_check",
    "sharp_da",
    "ClassicalNpProblem",
    "classical_data",
    "classical_theta",
    "classical_np_solve",
    "polar_grid",
    "witness_matrix",
    "witness_matrix_exact",
]

COMMUTE_TOL = 1e-12


class NonCommutingTuple(ValueError):
    pass


@lru_cache(maxsize=64)
def _multi_indices(d: int, order: int) -> tuple[tuple[int, ...], ...]:
    out = []
    for total in range(order + 1):
        block = [n for n in itertools.product(range(total + 1), repeat=d) if sum(n) == total]
        out.extend(sorted(block, reverse=True))
    return tuple(out)


def multi_indices(d: int, order: int) -> list[tuple[int, ...]]:
    """Multi-indices with ``|n| <= order``, graded."""
    return list(_multi_indices(d, order))


@dataclass(frozen=True)
class DaSeries:
    """Truncated commutative power series keyed by multi-indices."""

    d: int
    order: int
    out_dim: int
    in_dim: int
    coeffs: Mapping[tuple[int, ...], np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for n, c in self.coeffs.items():
            n = tuple(int(k) for k in n)
            if len(n) != self.d or any(k < 0 for k in n):
                raise ValueError(f"bad multi-index {n}")
            if sum(n) > self.order:
                raise ValueError(f"multi-index {n} exceeds order {self.order}")
            c = np.asarray(c, dtype=complex).reshape(self.out_dim, self.in_dim)
            if np.any(c != 0):
                clean[n] = c
        object.__setattr__(self, "coeffs", clean)

    def coef(self, n) -> np.ndarray:
        c = self.coeffs.get(tuple(n))
        return np.zeros((self.out_dim, self.in_dim), dtype=complex) if c is None else c

    @property
    def shape(self):
        return (self.out_dim, self.in_dim)

    def evaluate(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=complex)
        out = np.zeros(self.shape, dtype=complex)
        for n, c in self.coeffs.items():
            out += np.prod(lam ** np.array(n)) * c
        return out


def _weight(n) -> Fraction:
    """``n! / |n|!`` exactly."""
    return Fraction(1, multinomial(n))


def da_project(f: NcSeries) -> DaSeries:
    """Sum coefficients over each abelianization class."""
    out: dict[tuple, np.ndarray] = {}
    for w, c in f.coeffs.items():
        n = abelianize(w, f.d)
        out[n] = out[n] + c if n in out else c
    return DaSeries(f.d, f.order, f.out_dim, f.in_dim, out)


def symmetric_lift(g: DaSeries) -> NcSeries:
    """Minimal-norm Fock preimage: spread ``g_n`` evenly over its class."""
    out = {}
    for w in enumerate_words(g.d, g.order):
        n = abelianize(w, g.d)
        c = g.coeffs.get(n)
        if c is not None:
            out[w] = float(_weight(n)) * c
    return NcSeries(g.d, g.order, g.out_dim, g.in_dim, out)


def da_inner(f: DaSeries, g: DaSeries) -> complex:
    total = 0.0 + 0.0j
    for n, c in f.coeffs.items():
        h = g.coeffs.get(n)
        if h is not None:
            total += float(_weight(n)) * np.vdot(h, c)
    return complex(total)


def da_norm(g: DaSeries) -> float:
    return float(np.sqrt(max(0.0, da_inner(g, g).real)))


def _check_commuting(T: Sequence[np.ndarray], tol: float = COMMUTE_TOL):
    scale = max(1.0, max(np.linalg.norm(t, 2) for t in T) ** 2)
    for i in range(len(T)):
        for j in range(i + 1, len(T)):
            r = np.linalg.norm(T[i] @ T[j] - T[j] @ T[i], 2)
            if r > tol * scale:
                raise NonCommutingTuple(f"T_{i+1} and T_{j+1} do not commute (residual {r:.3e})")


def _mi_power(T, n) -> np.ndarray:
    out = np.eye(T[0].shape[0], dtype=complex)
    for t, k in zip(T, n):
        out = out @ np.linalg.matrix_power(t, k)
    return out


def da_observe(pair: OutputPair, x, order: int) -> DaSeries:
    """Coefficients ``(|n|!/n!) E T^n x``."""
    _check_commuting(pair.T)
    x = np.asarray(x, dtype=complex).reshape(pair.n, -1)
    out = {n: multinomial(n) * (pair.E @ _mi_power(pair.T, n) @ x)
           for n in multi_indices(pair.d, order)}
    return DaSeries(pair.d, order, pair.p, x.shape[1], out)


def da_tangential_eval(pair: OutputPair, f: DaSeries) -> np.ndarray:
    """``sum_n (T^n)^* E^* f_n``."""
    _check_commuting(pair.T)
    out = np.zeros((pair.n, f.in_dim), dtype=complex)
    for n, c in f.coeffs.items():
        out += _mi_power(pair.T, n).conj().T @ pair.E.conj().T @ c
    return out


def da_gramian_series(pair: OutputPair, W, order: int) -> np.ndarray:
    """``sum_{|n| <= order} (|n|!/n!) (T^n)^* W T^n`` (truncated commutative sum)."""
    _check_commuting(pair.T)
    W = np.atleast_2d(np.asarray(W, dtype=complex))
    out = np.zeros((pair.n, pair.n), dtype=complex)
    for n in multi_indices(pair.d, order):
        Tn = _mi_power(pair.T, n)
        out += multinomial(n) * (Tn.conj().T @ W @ Tn)
    return out


def da_gramian_converged(pair: OutputPair, W, rtol: float = 1e-17, max_degree: int = 400) -> np.ndarray:
    """``sum_n (|n|!/n!) (T^n)^* W T^n`` summed by degree until the tail is negligible.

    Uses only commuting monomials, so it does not touch the Stein solver.
    """
    _check_commuting(pair.T)
    W = np.atleast_2d(np.asarray(W, dtype=complex))
    d = pair.d
    layer = {(0,) * d: np.eye(pair.n, dtype=complex)}
    total = W.copy()
    for _ in range(max_degree):
        nxt = {}
        for n, Tn in layer.items():
            for j in range(d):
                m = n[:j] + (n[j] + 1,) + n[j + 1:]
                if m not in nxt:
                    nxt[m] = pair.T[j] @ Tn
        layer = nxt
        step = sum(multinomial(n) * (Tn.conj().T @ W @ Tn) for n, Tn in layer.items())
        total = total + step
        if np.linalg.norm(step, 2) <= rtol * max(np.linalg.norm(total, 2), 1e-300):
            return total
    raise ValueError("commutative gramian series did not converge")


def da_compute_P(pair: OutputPair, N) -> np.ndarray:
    """Gramian difference for a commuting tuple, from the weighted commutative series."""
    N = np.atleast_2d(np.asarray(N, dtype=complex)).reshape(-1, pair.n)
    P = (da_gramian_converged(pair, pair.E.conj().T @ pair.E)
         - da_gramian_converged(pair, N.conj().T @ N))
    return 0.5 * (P + P.conj().T)


def da_mult_matrix(S: DaSeries, order: int | None = None, col_order: int | None = None) -> np.ndarray:
    """Multiplication by ``S`` in the orthonormal basis ``sqrt(|n|!/n!) lambda^n``.

    Rows run over ``|n| <= order``, columns over ``|m| <= col_order``.
    """
    order = S.order if order is None else order
    col_order = order if col_order is None else col_order
    rows = multi_indices(S.d, order)
    cols = multi_indices(S.d, col_order)
    ridx = {n: i for i, n in enumerate(rows)}
    p, q = S.shape
    M = np.zeros((len(rows) * p, len(cols) * q), dtype=complex)
    for j, m in enumerate(cols):
        wm = multinomial(m)
        for k, c in S.coeffs.items():
            n = tuple(a + b for a, b in zip(k, m))
            i = ridx.get(n)
            if i is None:
                continue
            M[i * p:(i + 1) * p, j * q:(j + 1) * q] = np.sqrt(wm / multinomial(n)) * c
    return M


def sharp_da(S: DaSeries) -> DaSeries:
    return DaSeries(S.d, S.order, S.in_dim, S.out_dim,
                    {n: c.conj().T for n, c in S.coeffs.items()})


# ---------------------------------------------------------- DA solution


@dataclass(frozen=True)
class DaSolution:
    nc: ncinterp.OapSolution
    f0: DaSeries
    u: DaSeries
    A: DaSeries
    kernel_residual: float
    interpolation_residual: float


def da_kernel_residual(A: ncinterp.IndefMultiplier, Aa: DaSeries, order: int) -> float:
    """Commutative kernel identity from abelianized coefficients.

    Left: ``(|n|!/n!) delta J_YU - sum_k (|k|!/k!) A_{n-k} J_FU A_{m-k}^*``.
    Right: ``(|n|!/n!)(|m|!/m!) C T^n P^{-1} (T^m)^* C^*``.
    """
    c = A.colligation
    T = c.T_tuple()
    idx = multi_indices(A.d, order)
    k = A.p + A.q
    Pinv = np.linalg.inv(c.P)
    O = np.vstack([multinomial(n) * (c.C @ _mi_power(T, n)) for n in idx])
    rhs = O @ Pinv @ O.conj().T
    lhs = np.zeros_like(rhs)
    pos = {n: i for i, n in enumerate(idx)}
    for n in idx:
        i = pos[n]
        lhs[i * k:(i + 1) * k, i * k:(i + 1) * k] += multinomial(n) * A.J_YU
    for a in idx:
        for b in idx:
            for kk in idx:
                n = tuple(x + y for x, y in zip(a, kk))
                m = tuple(x + y for x, y in zip(b, kk))
                if n in pos and m in pos:
                    i, j = pos[n], pos[m]
                    lhs[i * k:(i + 1) * k, j * k:(j + 1) * k] -= (
                        multinomial(kk) * Aa.coef(a) @ A.J_FU @ Aa.coef(b).conj().T)
    return float(np.linalg.norm(lhs - rhs, 2))


def solve_oap_da(data: InterpolationData, order: int, kernel_order: int | None = None) -> DaSolution:
    """Run the noncommutative pipeline and abelianize its outputs."""
    _check_commuting(data.pair.T)
    sol = ncinterp.solve_oap(data, order, recover=False)
    f0 = da_project(sol.f0)
    u = da_project(sol.u)
    Aa = da_project(sol.A.series)
    ko = min(order, 3 if kernel_order is None else kernel_order)
    kres = da_kernel_residual(sol.A, Aa, ko)
    ires = float(np.linalg.norm(da_tangential_eval(data.pair, f0).ravel() - data.x))
    return DaSolution(sol, f0, u, Aa, kres, ires)


@dataclass(frozen=True)
class McctReport:
    singular_values: np.ndarray
    worst_gap: float
    passed: bool
    window: int
    boundary_excluded: bool


def mcct_check(Phi: DaSeries, order: int | None = None, tol: float = 1e-6,
               window: int | None = None) -> McctReport:
    """Partial-isometry test for the truncated DA multiplication matrix.

    Columns are restricted to degrees ``<= order - window`` so that no
    image coefficient falls outside the retained rows. ``window`` defaults
    to the top degree of ``Phi``.
    """
    order = Phi.order if order is None else order
    if window is None:
        window = max((sum(n) for n in Phi.coeffs), default=0)
    col_order = max(order - window, 0)
    M = da_mult_matrix(Phi, order, col_order)
    s = np.linalg.svd(M, compute_uv=False)
    gap = np.minimum(np.abs(s), np.abs(s - 1.0))
    worst = float(gap.max()) if s.size else 0.0
    return McctReport(s, worst, worst <= tol, window, col_order < order)


def da_kernel_vector(Phi: DaSeries, vec: DaSeries, order: int | None = None) -> tuple[float, float]:
    """``(|| M_Phi v ||, || v ||)`` for a candidate kernel element ``v``."""
    order = Phi.order if order is None else order
    window = max((sum(n) for n in Phi.coeffs), default=0)
    col_order = max(order - window, 0)
    M = da_mult_matrix(Phi, order, col_order)
    cols = multi_indices(Phi.d, col_order)
    q = Phi.in_dim
    v = np.zeros(len(cols) * q, dtype=complex)
    for j, m in enumerate(cols):
        c = vec.coef(m).ravel() if sum(m) <= vec.order else np.zeros(q)
        # coordinates in the orthonormal basis sqrt(|m|!/m!) lambda^m
        v[j * q:(j + 1) * q] = c / np.sqrt(multinomial(m))
    return float(np.linalg.norm(M @ v)), float(np.linalg.norm(v))


# ------------------------------------------------------------ classical


@dataclass(frozen=True)
class ClassicalNpProblem:
    points: np.ndarray
    values: np.ndarray
    S0: Realization | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex).ravel()
        vals = np.asarray(self.values, dtype=complex).ravel()
        if pts.size != vals.size:
            raise ValueError("points and values differ in length")
        if np.any(np.abs(pts) >= 1):
            raise ValueError("points must lie in the open unit disk")
        if len(set(np.round(pts, 14))) != pts.size:
            raise ValueError("points must be pairwise distinct")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    def s0_value(self, lam) -> np.ndarray:
        if self.S0 is None:
            return np.zeros((1, 1), dtype=complex)
        R = self.S0
        A = R.A[0]
        m = A.shape[0]
        return R.D + lam * R.C @ np.linalg.solve(np.eye(m) - lam * A, R.B)

    def s0_series(self, order: int) -> NcSeries:
        if self.S0 is None:
            return NcSeries.zero(1, order, 1, 1)
        return self.S0.series(order)


@dataclass(frozen=True)
class ClassicalData:
    E: np.ndarray
    N: np.ndarray
    T: np.ndarray
    P: np.ndarray


def classical_data(prob: ClassicalNpProblem) -> ClassicalData:
    """``T = diag(conj(lambda))``, ``E`` all ones, ``N = conj(S0(lambda_i))``,
    Pick matrix ``P_ij = (1 - S0(l_i) conj S0(l_j)) / (1 - l_i conj l_j)``."""
    lam = prob.points
    k = lam.size
    s = np.array([prob.s0_value(l)[0, 0] for l in lam])
    P = (1 - np.outer(s, s.conj())) / (1 - np.outer(lam, lam.conj()))
    return ClassicalData(np.ones((1, k), dtype=complex), s.conj()[None, :],
                         np.diag(lam.conj()), P)


@dataclass(frozen=True)
class ClassicalTheta:
    data: ClassicalData
    K: np.ndarray  # P^{-1} (I - T^*)^{-1} [E^*, -N^*]

    @property
    def C(self):
        return np.vstack([self.data.E, self.data.N])

    def __call__(self, lam) -> np.ndarray:
        T = self.data.T
        k = T.shape[0]
        return np.eye(2) + (lam - 1) * self.C @ np.linalg.solve(np.eye(k) - lam * T, self.K)

    def series(self, order: int) -> NcSeries:
        """Power series ``Theta_0 = I - C K``, ``Theta_j = C T^{j-1} (I - T) K``."""
        T, C, K = self.data.T, self.C, self.K
        k = T.shape[0]
        coeffs = {(): np.eye(2) - C @ K}
        Tp = np.eye(k, dtype=complex)
        for j in range(1, order + 1):
            coeffs[(1,) * j] = C @ Tp @ (np.eye(k) - T) @ K
            Tp = Tp @ T
        return NcSeries(1, order, 2, 2, coeffs, truncated=True)

    def iden_residual(self, grid: np.ndarray) -> float:
        """Worst two-point residual of the kernel identity over ``grid``."""
        J = np.diag([1.0, -1.0])
        C = self.C
        T = self.data.T
        k = T.shape[0]
        Pinv = np.linalg.inv(self.data.P)
        th = [self(l) for l in grid]
        left = [C @ np.linalg.inv(np.eye(k) - l * T) for l in grid]
        worst = 0.0
        for a, la in enumerate(grid):
            for b, lb in enumerate(grid):
                lhs = (J - th[a] @ J @ th[b].conj().T) / (1 - la * np.conj(lb))
                rhs = left[a] @ Pinv @ left[b].conj().T
                worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        return worst

    def j_contractivity_min_eig(self, grid: np.ndarray) -> float:
        J = np.diag([1.0, -1.0])
        return float(min(np.linalg.eigvalsh(J - self(l) @ J @ self(l).conj().T).min() for l in grid))


class ThetaUnavailable(ValueError):
    pass


def classical_theta(prob: ClassicalNpProblem) -> ClassicalTheta:
    data = classical_data(prob)
    k = data.T.shape[0]
    if np.min(np.abs(1 - np.diag(data.T))) < 1e-12:
        raise ThetaUnavailable("1 lies in the spectrum of T^*; use the colligation route")
    if np.linalg.eigvalsh(data.P).min() <= 1e-12 * np.linalg.norm(data.P, 2):
        raise ncinterp.NotStrictlyPositive("Pick matrix is singular")
    Pinv = np.linalg.inv(data.P)
    Ts = data.T.conj().T
    K = Pinv @ np.linalg.solve(np.eye(k) - Ts, np.hstack([data.E.conj().T, -data.N.conj().T]))
    return ClassicalTheta(data, K)


def polar_grid(n_r: int = 10, n_theta: int = 10, r_max: float = 0.9) -> np.ndarray:
    radii = np.linspace(r_max / n_r, r_max, n_r)
    angles = 2 * np.pi * np.arange(n_theta) / n_theta
    return (radii[:, None] * np.exp(1j * angles)[None, :]).ravel()


@dataclass(frozen=True)
class ClassicalSolution:
    theta: ClassicalTheta
    Pinv_x: np.ndarray
    problem: ClassicalNpProblem

    def f0(self, lam) -> complex:
        d = self.theta.data
        k = d.T.shape[0]
        row = d.E - self.problem.s0_value(lam) @ d.N
        return complex((row @ np.linalg.solve(np.eye(k) - lam * d.T, self.Pinv_x))[0])

    def homogeneous_factor(self, lam) -> complex:
        th = self.theta(lam)
        return complex(th[0, 0] - self.problem.s0_value(lam)[0, 0] * th[1, 0])

    def f(self, lam, h: Callable[[complex], complex] | None = None) -> complex:
        val = self.f0(lam)
        if h is not None:
            val += self.homogeneous_factor(lam) * h(lam)
        return val

    def interpolation_residual(self, h=None) -> float:
        pts, vals = self.problem.points, self.problem.values
        return float(max(abs(self.f(l, h) - v) for l, v in zip(pts, vals)))

    def norm_squared(self) -> float:
        x = self.problem.values
        return float(np.real(np.vdot(x, self.Pinv_x)))

    def f0_series(self, order: int) -> NcSeries:
        d = self.theta.data
        pair = OutputPair(d.E, (d.T,))
        a = observe(pair, self.Pinv_x, order)
        b = observe(OutputPair(d.N, (d.T,)), self.Pinv_x, order)
        return a - series_multiply(self.problem.s0_series(order), b, order)


def classical_np_solve(prob: ClassicalNpProblem) -> ClassicalSolution:
    th = classical_theta(prob)
    return ClassicalSolution(th, np.linalg.solve(th.data.P, prob.values), prob)


# ------------------------------------------------------------- witness


def _ker2002(lam, w):
    """``(I - [l1; l2][w1, w2]) / (1 - l1 w1 - l2 w2)`` for real rational points."""
    den = 1 - lam[0] * w[0] - lam[1] * w[1]
    return [[((1 if i == j else 0) - lam[i] * w[j]) / den for j in range(2)] for i in range(2)]


WITNESS_POINTS = ((Fraction(1, 2), Fraction(0)), (Fraction(0), Fraction(1, 2)))


def witness_matrix_exact(points=WITNESS_POINTS) -> list[list[Fraction]]:
    """Two-point Gram of the kernel for ``S = [l1 l2]`` in exact rationals."""
    out = [[Fraction(0)] * 4 for _ in range(4)]
    for a, wa in enumerate(points):
        for b, wb in enumerate(points):
            blk = _ker2002(wa, wb)
            for i in range(2):
                for j in range(2):
                    out[2 * a + i][2 * b + j] = blk[i][j]
    return out


def witness_matrix(points=((0.5, 0.0), (0.0, 0.5))) -> np.ndarray:
    """Floating-point version built from the closed-form kernel."""
    pts = [np.asarray(p, dtype=complex) for p in points]
    G = np.zeros((4, 4), dtype=complex)
    for a, wa in enumerate(pts):
        for b, wb in enumerate(pts):
            S_a = wa.reshape(2, 1)
            S_b = wb.reshape(2, 1)
            G[2 * a:2 * a + 2, 2 * b:2 * b + 2] = (np.eye(2) - S_a @ S_b.conj().T) / (1 - np.vdot(wb, wa))
    return G


def exact_charpoly(M: Sequence[Sequence[Fraction]]) -> list[Fraction]:
    """Characteristic polynomial coefficients (leading 1 first) by Faddeev-LeVerrier."""
    n = len(M)
    A = [[Fraction(x) for x in row] for row in M]
    coeffs = [Fraction(1)]
    Mk = [[Fraction(0)] * n for _ in range(n)]
    for k in range(1, n + 1):
        # Mk <- A Mk + c_{k-1} I
        prod = [[sum(A[i][t] * Mk[t][j] for t in range(n)) for j in range(n)] for i in range(n)]
        Mk = [[prod[i][j] + (coeffs[-1] if i == j else 0) for j in range(n)] for i in range(n)]
        AM = [[sum(A[i][t] * Mk[t][j] for t in range(n)) for j in range(n)] for i in range(n)]
        coeffs.append(-sum(AM[i][i] for i in range(n)) / k)
    return coeffs


def exact_leading_minors(M: Sequence[Sequence[Fraction]]) -> list[Fraction]:
    """Leading principal minors via fraction-exact elimination."""
    n = len(M)
    out = []
    for k in range(1, n + 1):
        A = [[Fraction(M[i][j]) for j in range(k)] for i in range(k)]
        det = Fraction(1)
        for c in range(k):
            piv = next((r for r in range(c, k) if A[r][c] != 0), None)
            if piv is None:
                det = Fraction(0)
                break
            if piv != c:
                A[c], A[piv] = A[piv], A[c]
                det = -det
            det *= A[c][c]
            for r in range(c + 1, k):
                f = A[r][c] / A[c][c]
                A[r] = [a - f * b for a, b in zip(A[r], A[c])]
        out.append(det)
    return out


@dataclass(frozen=True)
class WitnessReport:
    matrix: list
    charpoly: list
    leading_minors: list
    determinant: Fraction
    eigenvalues: np.ndarray
    float_match: float

    @property
    def positive_semidefinite(self) -> bool:
        # a Hermitian matrix is PSD iff every characteristic coefficient alternates in sign
        return all((-1) ** k * c >= 0 for k, c in enumerate(self.charpoly))

    @property
    def positive_definite(self) -> bool:
        return all(m > 0 for m in self.leading_minors)


def two_point_witness() -> WitnessReport:
    """Exact and floating analysis of the two-point witness matrix."""
    M = witness_matrix_exact()
    G = witness_matrix()
    ref = np.array([[float(x) for x in row] for row in M])
    return WitnessReport(M, exact_charpoly(M), exact_leading_minors(M),
                         exact_leading_minors(M)[-1], np.linalg.eigvalsh(G),
                         float(np.max(np.abs(G - ref))))
