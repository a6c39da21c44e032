"""Output pairs, observability gramians and the interpolation data N, P."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ncalg import NcSeries, enumerate_words

__all__ = [
    "OutputPair",
    "Realization",
    "InterpolationData",
    "StabilityError",
    "stacked",
    "stability_check",
    "observe",
    "gramian_solve",
    "tangential_eval",
    "compute_N",
    "compute_N_truncated",
    "compute_P",
    "stein_residual",
    "word_power",
    "build_interpolation_data",
]

STABILITY_MARGIN = 1e-6
POSITIVITY_REL = 1e-8


class StabilityError(ValueError):
    pass


def _mat(a) -> np.ndarray:
    return np.atleast_2d(np.asarray(a, dtype=complex))


def stacked(T: Sequence[np.ndarray]) -> np.ndarray:
    """The column ``[T_1; ...; T_d]``."""
    return np.vstack([_mat(t) for t in T])


def word_power(T: Sequence[np.ndarray], word) -> np.ndarray:
    """``T_{l1} T_{l2} ... T_{lk}`` for the stored letters of ``word``."""
    n = T[0].shape[0]
    out = np.eye(n, dtype=complex)
    for x in word:
        out = out @ T[x - 1]
    return out


@dataclass(frozen=True)
class OutputPair:
    """``E`` (p x n) with a d-tuple ``T`` of n x n matrices."""

    E: np.ndarray
    T: tuple[np.ndarray, ...]

    def __post_init__(self):
        E = _mat(self.E)
        T = tuple(_mat(t) for t in self.T)
        if not T:
            raise ValueError("need at least one state matrix")
        n = E.shape[1]
        for t in T:
            if t.shape != (n, n):
                raise ValueError(f"state matrix shape {t.shape} does not match n={n}")
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "T", T)

    @property
    def d(self) -> int:
        return len(self.T)

    @property
    def n(self) -> int:
        return self.E.shape[1]

    @property
    def p(self) -> int:
        return self.E.shape[0]

    @property
    def row_bound(self) -> float:
        return float(np.linalg.norm(stacked(self.T), 2)) if self.n else 0.0


@dataclass(frozen=True)
class Realization:
    """State-space data ``(A_1..A_d, [B_1;..;B_d], C, D)`` of a series."""

    A: tuple[np.ndarray, ...]
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A = tuple(_mat(a) for a in self.A)
        D = _mat(self.D)
        m = A[0].shape[0]
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "C", np.asarray(self.C, dtype=complex).reshape(D.shape[0], m))
        object.__setattr__(self, "B", np.asarray(self.B, dtype=complex).reshape(len(A) * m, D.shape[1]))

    @property
    def d(self) -> int:
        return len(self.A)

    @property
    def state_dim(self) -> int:
        return self.A[0].shape[0]

    def B_blocks(self) -> list[np.ndarray]:
        m = self.state_dim
        return [self.B[j * m:(j + 1) * m] for j in range(self.d)]

    def series(self, order: int) -> NcSeries:
        from .ncalg import realize_transfer

        return realize_transfer(self.A, self.B, self.C, self.D, order)

    def colligation_norm(self) -> float:
        top = np.hstack([stacked(self.A), self.B])
        bot = np.hstack([self.C, self.D])
        return float(np.linalg.norm(np.vstack([top, bot]), 2))


def _stein_operator(T: Sequence[np.ndarray]) -> np.ndarray:
    """Matrix of ``vec(P) -> vec(sum_j T_j^* P T_j)`` (column-major vec)."""
    n = T[0].shape[0]
    L = np.zeros((n * n, n * n), dtype=complex)
    for t in T:
        L += np.kron(t.T, t.conj().T)
    return L


def stability_check(T: Sequence[np.ndarray], iters: int = 200,
                    margin: float = STABILITY_MARGIN) -> tuple[float, bool]:
    """Power-iteration estimate of the spectral radius of ``P -> sum T_j^* P T_j``.

    The map is positive, so iterating on a positive definite start
    converges to the Perron root.  Returns ``(estimate, passed)``.
    """
    T = [_mat(t) for t in T]
    n = T[0].shape[0]
    if n == 0:
        return 0.0, True
    X = np.eye(n, dtype=complex) / np.sqrt(n)
    rho = 0.0
    for _ in range(iters):
        Y = sum(t.conj().T @ X @ t for t in T)
        nrm = float(np.linalg.norm(Y, 2))
        if nrm == 0.0:
            return 0.0, True
        rho = nrm
        X = Y / nrm
    return rho, rho < 1.0 - margin


def gramian_solve(T: Sequence[np.ndarray], W, check: bool = True) -> np.ndarray:
    """Solve ``P - sum_j T_j^* P T_j = W`` by a direct ``n^2`` linear solve."""
    T = [_mat(t) for t in T]
    W = _mat(W)
    n = T[0].shape[0]
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    if check:
        rho, ok = stability_check(T)
        if not ok:
            raise StabilityError(f"spectral radius estimate {rho:.6g} is not below 1 - margin")
    L = np.eye(n * n, dtype=complex) - _stein_operator(T)
    try:
        vecP = np.linalg.solve(L, W.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise StabilityError(f"singular Stein system: {exc}") from exc
    P = vecP.reshape(n, n, order="F")
    return 0.5 * (P + P.conj().T)


def observe(pair: OutputPair, x, order: int) -> NcSeries:
    """Coefficients ``E T^alpha x`` for all words up to ``order``."""
    x = np.asarray(x, dtype=complex).reshape(pair.n, -1)
    coeffs = {(): x}
    layer = {(): x}
    for _ in range(order):
        nxt = {}
        for w, v in layer.items():
            for j in range(pair.d):
                # T^{(j) + w} x = T_j (T^w x)
                nxt[(j + 1,) + w] = pair.T[j] @ v
        coeffs.update(nxt)
        layer = nxt
    out = {w: pair.E @ v for w, v in coeffs.items()}
    return NcSeries(pair.d, order, pair.p, x.shape[1], out, truncated=True)


def tangential_eval(pair: OutputPair, f: NcSeries) -> np.ndarray:
    """``sum_alpha (T^alpha)^* E^* f_alpha`` over the support of ``f``."""
    if f.out_dim != pair.p:
        raise ValueError(f"series rows {f.out_dim} differ from output dim {pair.p}")
    # Horner-style accumulation by word length keeps the cost linear
    acc: dict[tuple, np.ndarray] = {}
    by_len: dict[int, list] = {}
    for w, c in f.coeffs.items():
        by_len.setdefault(len(w), []).append((w, pair.E.conj().T @ c))
    if not by_len:
        return np.zeros((pair.n, f.in_dim), dtype=complex)
    top = max(by_len)
    Tstar = [t.conj().T for t in pair.T]
    for k in range(top, 0, -1):
        for w, v in by_len.get(k, []):
            acc[w] = acc.get(w, 0) + v
        # (T^{(j)+u})^* = (T^u)^* T_j^*: peel the first letter
        nxt: dict[tuple, np.ndarray] = {}
        for w, v in acc.items():
            u = w[1:]
            term = Tstar[w[0] - 1] @ v
            nxt[u] = nxt[u] + term if u in nxt else term
        acc = nxt
    total = acc.get((), np.zeros((pair.n, f.in_dim), dtype=complex))
    for w, v in by_len.get(0, []):
        total = total + v
    return total


def compute_N(pair: OutputPair, S0: Realization) -> np.ndarray:
    """Exact ``N = sum_alpha S0_alpha^* E T^alpha`` through a Stein-type solve."""
    if S0.d != pair.d:
        raise ValueError("alphabet mismatch between pair and realization")
    for tup, name in ((pair.T, "pair"), (S0.A, "S0 state tuple")):
        rho, ok = stability_check(tup)
        if not ok:
            raise StabilityError(f"{name} not stable (estimate {rho:.6g})")
    m, n = S0.state_dim, pair.n
    rhs = S0.C.conj().T @ pair.E  # m x n
    L = np.eye(m * n, dtype=complex)
    for a, t in zip(S0.A, pair.T):
        L -= np.kron(t.T, a.conj().T)
    Wm = np.linalg.solve(L, rhs.reshape(-1, order="F")).reshape(m, n, order="F")
    N = S0.D.conj().T @ pair.E
    for bj, t in zip(S0.B_blocks(), pair.T):
        N = N + bj.conj().T @ Wm @ t
    return N


def compute_N_truncated(pair: OutputPair, S0: NcSeries, order: int | None = None) -> np.ndarray:
    """Truncated sum ``sum_{|alpha| <= order} S0_alpha^* E T^alpha``."""
    order = S0.order if order is None else order
    N = np.zeros((S0.in_dim, pair.n), dtype=complex)
    powers = {(): np.eye(pair.n, dtype=complex)}
    for w in enumerate_words(pair.d, order):
        if w:
            powers[w] = powers[w[:-1]] @ pair.T[w[-1] - 1]
        c = S0.coeffs.get(w)
        if c is not None:
            N += c.conj().T @ pair.E @ powers[w]
    return N


@dataclass(frozen=True)
class PReport:
    P: np.ndarray
    min_eig: float
    strict: bool
    threshold: float


def compute_P(pair: OutputPair, N, rel: float = POSITIVITY_REL) -> PReport:
    """``P = G_{E,T} - G_{N,T}`` with a strict-positivity flag."""
    N = _mat(N).reshape(-1, pair.n)
    GE = gramian_solve(pair.T, pair.E.conj().T @ pair.E)
    GN = gramian_solve(pair.T, N.conj().T @ N, check=False)
    P = GE - GN
    P = 0.5 * (P + P.conj().T)
    eigs = np.linalg.eigvalsh(P) if pair.n else np.zeros(0)
    nrm = float(np.max(np.abs(eigs))) if pair.n else 0.0
    thr = rel * nrm
    mn = float(eigs.min()) if pair.n else 0.0
    return PReport(P, mn, bool(mn > thr) if pair.n else True, thr)


def stein_residual(pair: OutputPair, P, N) -> float:
    """``|| P - sum T_j^* P T_j - (E^*E - N^*N) ||_2``."""
    P = _mat(P)
    N = _mat(N).reshape(-1, pair.n)
    R = P - sum(t.conj().T @ P @ t for t in pair.T) - (pair.E.conj().T @ pair.E - N.conj().T @ N)
    return float(np.linalg.norm(R, 2))


@dataclass(frozen=True)
class InterpolationData:
    pair: OutputPair
    S0: Realization
    N: np.ndarray
    P: np.ndarray
    x: np.ndarray
    min_eig: float
    strict: bool

    @property
    def p(self) -> int:
        return self.pair.p

    @property
    def q(self) -> int:
        return self.N.shape[0]

    @property
    def J_YU(self) -> np.ndarray:
        return np.diag(np.r_[np.ones(self.p), -np.ones(self.q)]).astype(complex)

    @property
    def C(self) -> np.ndarray:
        return np.vstack([self.pair.E, self.N])

    def stein_residual(self) -> float:
        return stein_residual(self.pair, self.P, self.N)


def build_interpolation_data(pair: OutputPair, S0: Realization, x=None) -> InterpolationData:
    N = compute_N(pair, S0)
    rep = compute_P(pair, N)
    if x is None:
        x = np.zeros(pair.n, dtype=complex)
    x = np.asarray(x, dtype=complex).reshape(pair.n)
    return InterpolationData(pair, S0, N, rep.P, x, rep.min_eig, rep.strict)
