"""Indefinite-metric linear algebra: J-adjoints, J-Cholesky, J-unitary completion."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "KreinMetric",
    "InertiaMismatch",
    "j_adjoint",
    "isometry_residuals",
    "is_j_isometry",
    "is_j_coisometry",
    "is_j_unitary",
    "j_cholesky",
    "JCholesky",
    "j_complete",
    "metric_factor",
    "j_complete_projector",
    "inertia",
    "signature",
    "Colligation",
    "inertia_check",
]

RANK_TOL = 1e-10


class InertiaMismatch(ValueError):
    pass


def _mat(a) -> np.ndarray:
    return np.atleast_2d(np.asarray(a, dtype=complex))


def _herm(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def inertia(G, tol: float = RANK_TOL) -> tuple[int, int]:
    G = _mat(G)
    if G.size == 0:
        return (0, 0)
    ev = np.linalg.eigvalsh(_herm(G))
    cut = tol * max(1.0, float(np.max(np.abs(ev))))
    return int(np.sum(ev > cut)), int(np.sum(ev < -cut))


def signature(kplus: int, kminus: int) -> np.ndarray:
    return np.diag(np.r_[np.ones(kplus), -np.ones(kminus)]).astype(complex)


@dataclass(frozen=True)
class KreinMetric:
    """An invertible Hermitian Gram operator with its inertia."""

    G: np.ndarray
    inertia: tuple[int, int] = field(default=None)

    def __post_init__(self):
        G = _mat(self.G) if np.size(self.G) else np.zeros((0, 0), dtype=complex)
        if G.shape[0] != G.shape[1]:
            raise ValueError("metric must be square")
        if G.size and np.linalg.norm(G - G.conj().T) > 1e-12 * max(1.0, np.linalg.norm(G)):
            raise ValueError("metric is not Hermitian")
        G = _herm(G)
        kp, km = inertia(G)
        if kp + km != G.shape[0]:
            raise ValueError("metric is numerically singular")
        if self.inertia is not None and tuple(self.inertia) != (kp, km):
            raise ValueError(f"stored inertia {self.inertia} differs from computed {(kp, km)}")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "inertia", (kp, km))

    @property
    def dim(self) -> int:
        return self.G.shape[0]

    def inv(self) -> np.ndarray:
        return np.linalg.inv(self.G) if self.dim else self.G

    @classmethod
    def signature(cls, kplus: int, kminus: int) -> "KreinMetric":
        return cls(signature(kplus, kminus))


def _as_metric(J) -> KreinMetric:
    return J if isinstance(J, KreinMetric) else KreinMetric(J)


def j_adjoint(T, Jdom, Jcod) -> np.ndarray:
    """``Jdom^{-1} T^* Jcod``: the adjoint for ``[.,.]_Jdom -> [.,.]_Jcod``."""
    Jdom, Jcod = _as_metric(Jdom), _as_metric(Jcod)
    T = _mat(T)
    return np.linalg.solve(Jdom.G, T.conj().T @ Jcod.G)


@dataclass(frozen=True)
class IsometryReport:
    isometry: float
    coisometry: float

    def unitary(self, tol: float) -> bool:
        return self.isometry <= tol and self.coisometry <= tol


def isometry_residuals(T, Jdom, Jcod, dom_inv=None, cod_inv=None) -> IsometryReport:
    """``||T^* Jcod T - Jdom||`` and ``||T Jdom^{-1} T^* - Jcod^{-1}||``.

    Precomputed inverses may be passed so that a weight shared by both
    metrics is inverted only once.
    """
    Jdom, Jcod = _as_metric(Jdom), _as_metric(Jcod)
    T = _mat(T).reshape(Jcod.dim, Jdom.dim)
    dom_inv = Jdom.inv() if dom_inv is None else dom_inv
    cod_inv = Jcod.inv() if cod_inv is None else cod_inv
    iso = T.conj().T @ Jcod.G @ T - Jdom.G
    coiso = T @ dom_inv @ T.conj().T - cod_inv
    nrm = lambda a: float(np.linalg.norm(a, 2)) if a.size else 0.0
    return IsometryReport(nrm(iso), nrm(coiso))


def is_j_isometry(T, Jdom, Jcod, tol: float = 1e-9) -> tuple[bool, float]:
    r = isometry_residuals(T, Jdom, Jcod).isometry
    return r <= tol, r


def is_j_coisometry(T, Jdom, Jcod, tol: float = 1e-9) -> tuple[bool, float]:
    r = isometry_residuals(T, Jdom, Jcod).coisometry
    return r <= tol, r


def is_j_unitary(T, Jdom, Jcod, tol: float = 1e-9) -> tuple[bool, IsometryReport]:
    rep = isometry_residuals(T, Jdom, Jcod)
    return rep.unitary(tol), rep


@dataclass(frozen=True)
class JCholesky:
    W: np.ndarray
    J2: np.ndarray
    inertia: tuple[int, int]
    residual: float
    near_threshold: int


def j_cholesky(R, rank_tol: float = RANK_TOL) -> JCholesky:
    """Factor Hermitian ``R = W J2 W^*`` with ``J2 = diag(I, -I)``.

    Eigenpairs with ``|lambda| <= rank_tol * ||R||`` are discarded. The
    positive block comes first. ``near_threshold`` counts eigenvalues
    within a factor 100 of the cutoff, which signals a fragile rank call.
    """
    R = _herm(_mat(R))
    m = R.shape[0]
    if m == 0:
        return JCholesky(np.zeros((0, 0), dtype=complex), np.zeros((0, 0), dtype=complex), (0, 0), 0.0, 0)
    ev, V = np.linalg.eigh(R)
    scale = float(np.max(np.abs(ev)))
    cut = rank_tol * scale
    pos = np.where(ev > cut)[0][::-1]
    neg = np.where(ev < -cut)[0]
    near = int(np.sum((np.abs(ev) > cut) & (np.abs(ev) < 100 * cut)))
    W = np.hstack([V[:, pos] * np.sqrt(ev[pos]), V[:, neg] * np.sqrt(-ev[neg])])
    J2 = signature(len(pos), len(neg))
    res = float(np.linalg.norm(W @ J2 @ W.conj().T - R, 2)) if W.size else float(np.linalg.norm(R, 2))
    return JCholesky(W, J2, (len(pos), len(neg)), res, near)


@dataclass(frozen=True)
class Completion:
    V: np.ndarray
    W: np.ndarray
    J2: np.ndarray
    Jdom: KreinMetric
    Jcod: KreinMetric
    cholesky_residual: float
    report: IsometryReport
    near_threshold: int = 0

    @property
    def full(self) -> np.ndarray:
        return np.hstack([self.V, self.W])

    @property
    def domain_metric(self) -> np.ndarray:
        n1, n2 = self.Jdom.dim, self.J2.shape[0]
        G = np.zeros((n1 + n2, n1 + n2), dtype=complex)
        G[:n1, :n1] = self.Jdom.G
        G[n1:, n1:] = self.J2
        return G


def metric_factor(J) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(M, M^{-1}, S)`` with ``G = M^* S M`` and ``S`` a signature (positive first)."""
    J = _as_metric(J)
    ev, Q = np.linalg.eigh(J.G)
    order = np.r_[np.where(ev > 0)[0][::-1], np.where(ev <= 0)[0]]
    ev, Q = ev[order], Q[:, order]
    root = np.sqrt(np.abs(ev))
    M = root[:, None] * Q.conj().T
    Minv = Q / root[None, :]
    return M, Minv, np.diag(np.sign(ev)).astype(complex)


def block_factor(P, d: int, J) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Factor of ``diag(I_d (x) P, J)`` assembled from a single factor of ``P``."""
    M, Minv, S = metric_factor(P)
    _, Jinv_root, SJ = metric_factor(J)
    MJ = np.linalg.pinv(Jinv_root)
    blk = lambda a, b: np.block([[a, np.zeros((a.shape[0], b.shape[1]))], [np.zeros((b.shape[0], a.shape[1])), b]])
    I = np.eye(d)
    return (blk(np.kron(I, M), MJ), blk(np.kron(I, Minv), Jinv_root), blk(np.kron(I, S), SJ))


def j_complete(V, Jdom, Jcod, rank_tol: float = RANK_TOL, iso_tol: float = 1e-8,
               dom_factor=None, cod_factor=None) -> Completion:
    """Extend a ``(Jdom, Jcod)``-isometry ``V`` to a J-unitary ``[V W]``.

    ``W`` is the J-Cholesky factor of ``Jcod^{-1} - V Jdom^{-1} V^*``. The
    factorization runs after a congruence that turns both metrics into
    signatures, so a badly conditioned weight (such as ``P``) does not
    enter the rank decision through cancellation.
    """
    Jdom, Jcod = _as_metric(Jdom), _as_metric(Jcod)
    V = _mat(V).reshape(Jcod.dim, Jdom.dim)
    pre = isometry_residuals(V, Jdom, Jcod).isometry
    scale = max(1.0, float(np.linalg.norm(Jdom.G, 2)))
    if pre > iso_tol * scale:
        raise ValueError(f"input is not a J-isometry (residual {pre:.3e})")
    Mc, Mc_inv, Sc = metric_factor(Jcod) if cod_factor is None else cod_factor
    _, Md_inv, Sd = metric_factor(Jdom) if dom_factor is None else dom_factor
    Vs = Mc @ V @ Md_inv
    R = Sc - Vs @ Sd @ Vs.conj().T
    fac = j_cholesky(R, rank_tol)
    expected = Jcod.dim - Jdom.dim
    if fac.W.shape[1] != expected:
        raise InertiaMismatch(
            f"rank of the defect is {fac.W.shape[1]}, expected {expected} "
            f"(inertia {fac.inertia})")
    kp_c, km_c = Jcod.inertia
    kp_d, km_d = Jdom.inertia
    if fac.inertia != (kp_c - kp_d, km_c - km_d):
        raise InertiaMismatch(
            f"defect inertia {fac.inertia} differs from codomain {Jcod.inertia} "
            f"minus domain {Jdom.inertia}")
    W = Mc_inv @ fac.W
    full = np.hstack([V, W])
    G = np.zeros((full.shape[1], full.shape[1]), dtype=complex)
    G[:Jdom.dim, :Jdom.dim] = Jdom.G
    G[Jdom.dim:, Jdom.dim:] = fac.J2
    dom_inv = np.zeros_like(G)
    dom_inv[:Jdom.dim, :Jdom.dim] = Md_inv @ Sd @ Md_inv.conj().T
    dom_inv[Jdom.dim:, Jdom.dim:] = fac.J2
    rep = isometry_residuals(full, G, Jcod, dom_inv, Mc_inv @ Sc @ Mc_inv.conj().T)
    return Completion(V, W, fac.J2, Jdom, Jcod, fac.residual, rep, fac.near_threshold)


def j_complete_projector(V, Jdom, Jcod, rank_tol: float = RANK_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Completion through the J-orthogonal projection onto ``(Ran V)^{[perp]}``.

    Returns ``(Wt, Jt)`` with ``Wt`` an orthonormal basis of the range of
    ``I - V Jdom^{-1} V^* Jcod`` and ``Jt = Wt^* Jcod Wt`` (not a signature).
    """
    Jdom, Jcod = _as_metric(Jdom), _as_metric(Jcod)
    V = _mat(V).reshape(Jcod.dim, Jdom.dim)
    Q = np.eye(Jcod.dim) - V @ Jdom.inv() @ V.conj().T @ Jcod.G
    U, s, _ = np.linalg.svd(Q)
    r = int(np.sum(s > rank_tol * max(1.0, s[0] if s.size else 0.0)))
    Wt = U[:, :r]
    return Wt, _herm(Wt.conj().T @ Jcod.G @ Wt)


@dataclass(frozen=True)
class Colligation:
    """Block operator ``[[T, B], [C, D]]`` with its two metrics."""

    T: np.ndarray  # (d n) x n stacked
    B: np.ndarray  # (d n) x (f + q)
    C: np.ndarray  # (p + q) x n
    D: np.ndarray  # (p + q) x (f + q)
    P: np.ndarray
    J_FU: np.ndarray
    J_YU: np.ndarray
    d: int

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @property
    def U(self) -> np.ndarray:
        return np.block([[self.T, self.B], [self.C, self.D]])

    def T_tuple(self) -> list[np.ndarray]:
        n = self.n
        return [self.T[j * n:(j + 1) * n] for j in range(self.d)]

    def domain_metric(self) -> np.ndarray:
        n, m = self.n, self.J_FU.shape[0]
        G = np.zeros((n + m, n + m), dtype=complex)
        G[:n, :n] = self.P
        G[n:, n:] = self.J_FU
        return G

    def codomain_metric(self) -> np.ndarray:
        n, k = self.n, self.J_YU.shape[0]
        G = np.zeros((self.d * n + k, self.d * n + k), dtype=complex)
        G[:self.d * n, :self.d * n] = np.kron(np.eye(self.d), self.P)
        G[self.d * n:, self.d * n:] = self.J_YU
        return G

    def inverse_metrics(self) -> tuple[np.ndarray, np.ndarray]:
        """Domain and codomain inverses built from one factorization of ``P``."""
        _, Minv, _ = metric_factor(self.P)
        Pinv = Minv @ Minv.conj().T
        n, m, k = self.n, self.J_FU.shape[0], self.J_YU.shape[0]
        dom = np.zeros((n + m, n + m), dtype=complex)
        dom[:n, :n] = Pinv
        dom[n:, n:] = np.linalg.inv(self.J_FU) if m else self.J_FU
        cod = np.zeros((self.d * n + k,) * 2, dtype=complex)
        cod[:self.d * n, :self.d * n] = np.kron(np.eye(self.d), Pinv)
        cod[self.d * n:, self.d * n:] = np.linalg.inv(self.J_YU)
        return dom, cod

    def residuals(self) -> IsometryReport:
        dom_inv, cod_inv = self.inverse_metrics()
        return isometry_residuals(self.U, self.domain_metric(), self.codomain_metric(), dom_inv, cod_inv)

    @property
    def dims(self) -> dict:
        kp, km = inertia(self.J_FU)
        yp, ym = inertia(self.J_YU)
        return {"n": self.n, "d": self.d, "F": kp, "U_in": km, "Y": yp, "U_out": ym}


@dataclass(frozen=True)
class InertiaReport:
    kappa_minus: int
    dim_U: int
    dim_F: int
    expected_F: int

    @property
    def passed(self) -> bool:
        return self.kappa_minus == self.dim_U and self.dim_F == self.expected_F


def inertia_check(col: Colligation, strict: bool = False) -> InertiaReport:
    """Negative inertia of the input signature versus ``dim U``.

    With the state metric ``P`` positive definite the negative index of
    the completed input signature must equal that of ``J_YU`` and the
    positive part must have dimension ``(d - 1) n + dim Y``.
    """
    kp, km = inertia(col.J_FU)
    yp, ym = inertia(col.J_YU)
    rep = InertiaReport(km, ym, kp, (col.d - 1) * col.n + yp)
    if strict and not rep.passed:
        raise InertiaMismatch(
            f"input inertia {(kp, km)} versus output inertia {(yp, ym)}; "
            f"expected dim F {(col.d - 1) * col.n + yp}")
    return rep
