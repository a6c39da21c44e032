"""Lifted-norm spaces H(T), Douglas factorization and its constrained variants.

All square roots and inverses go through Hermitian eigendecompositions
with a relative cutoff, so range and kernel conditions become explicit
projections.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LiftedSpace",
    "Infeasible",
    "psd_sqrt",
    "psd_pinv_sqrt",
    "lifted_norm",
    "kappa_oracle",
    "douglas_exists",
    "DouglasParam",
    "douglas_param",
    "douglas_parametrize",
    "completion_check",
    "fc_adjoint",
    "dbr_douglas_solve",
    "vector_interp",
]

EIG_TOL = 1e-10


class Infeasible(ValueError):
    pass


def _mat(a) -> np.ndarray:
    return np.atleast_2d(np.asarray(a, dtype=complex))


def _herm(a):
    return 0.5 * (a + a.conj().T)


def _eig(H, tol=EIG_TOL):
    ev, V = np.linalg.eigh(_herm(H))
    cut = tol * max(1.0, float(np.max(np.abs(ev)))) if ev.size else 0.0
    keep = ev > cut
    return ev, V, keep


def psd_sqrt(H, tol=EIG_TOL) -> np.ndarray:
    ev, V, keep = _eig(H, tol)
    return (V[:, keep] * np.sqrt(ev[keep])) @ V[:, keep].conj().T


def psd_pinv_sqrt(H, tol=EIG_TOL) -> np.ndarray:
    ev, V, keep = _eig(H, tol)
    return (V[:, keep] / np.sqrt(ev[keep])) @ V[:, keep].conj().T


def psd_pinv(H, tol=EIG_TOL) -> np.ndarray:
    ev, V, keep = _eig(H, tol)
    return (V[:, keep] / ev[keep]) @ V[:, keep].conj().T


def range_basis(H, tol=EIG_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal eigenbasis of the numerical range and its eigenvalues."""
    ev, V, keep = _eig(H, tol)
    return V[:, keep], ev[keep]


def _opnorm(a) -> float:
    return float(np.linalg.norm(a, 2)) if np.size(a) else 0.0


@dataclass(frozen=True)
class LiftedSpace:
    """``H(T)``: the range of ``(I - T T^*)^{1/2}`` with the lifted norm."""

    T: np.ndarray

    def __post_init__(self):
        T = _mat(self.T)
        if _opnorm(T) > 1 + 1e-12:
            raise ValueError(f"T is not a contraction (norm {_opnorm(T):.6g})")
        object.__setattr__(self, "T", T)

    @property
    def dim(self) -> int:
        return self.T.shape[0]

    @property
    def defect(self) -> np.ndarray:
        return _herm(np.eye(self.dim) - self.T @ self.T.conj().T)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """``(U, s)`` with ``H(T) = Ran U`` and ``||U s^{1/2} v||_{H(T)} = ||v||``."""
        return range_basis(self.defect)

    def embed(self) -> np.ndarray:
        """Isometry from standard coordinates onto ``H(T)``: ``v -> U s^{1/2} v``."""
        U, s = self.coordinates()
        return U * np.sqrt(s)

    def inner(self, y1, y2) -> complex:
        return complex(np.vdot(np.asarray(y2).ravel(), psd_pinv(self.defect) @ np.asarray(y1).ravel()))

    def in_range(self, y, tol: float = 1e-9) -> bool:
        U, _ = self.coordinates()
        y = np.asarray(y, dtype=complex).ravel()
        return float(np.linalg.norm(y - U @ (U.conj().T @ y))) <= tol * max(1.0, float(np.linalg.norm(y)))


def lifted_norm(space: LiftedSpace, y, tol: float = 1e-9) -> float:
    """Squared lifted norm ``<(I - TT^*)^+ y, y>``; ``inf`` off the range."""
    y = np.asarray(y, dtype=complex).ravel()
    if not space.in_range(y, tol):
        return float("inf")
    return float(np.real(np.vdot(y, psd_pinv(space.defect) @ y)))


def kappa_oracle(space: LiftedSpace, y, tol: float = 1e-9) -> float:
    """``sup_u ||y + T u||^2 - ||u||^2`` via its stationarity equation."""
    y = np.asarray(y, dtype=complex).ravel()
    T = space.T
    G = _herm(np.eye(T.shape[1]) - T.conj().T @ T)
    rhs = T.conj().T @ y
    u = np.linalg.lstsq(G, rhs, rcond=None)[0]
    if np.linalg.norm(G @ u - rhs) > tol * max(1.0, float(np.linalg.norm(rhs))):
        return float("inf")
    return float(np.linalg.norm(y + T @ u) ** 2 - np.linalg.norm(u) ** 2)


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    Q: np.ndarray
    min_eig: float


def douglas_exists(A, B, tol: float = 1e-10) -> Feasibility:
    A, B = _mat(A), _mat(B)
    Q = _herm(A @ A.conj().T - B @ B.conj().T)
    mn = float(np.linalg.eigvalsh(Q).min()) if Q.size else 0.0
    scale = max(1.0, _opnorm(A) ** 2)
    return Feasibility(mn >= -tol * scale, Q, mn)


@dataclass(frozen=True)
class DouglasParam:
    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    X1: np.ndarray
    X2: np.ndarray
    D1: np.ndarray  # (I - X1^* X1)^{1/2}
    D2: np.ndarray  # (I - X2^* X2)^{1/2}

    @property
    def min_norm(self) -> np.ndarray:
        return self.X2.conj().T @ self.X1

    def unique(self, tol: float = 1e-10) -> bool:
        return _opnorm(self.D1) <= tol or _opnorm(self.D2) <= tol

    def solve_for_K(self, Y) -> np.ndarray:
        """Closed-form ``K`` with ``Y = X2^* X1 + D2 K D1`` (minimal on the complements)."""
        Y = _mat(Y)
        return psd_pinv(self.D2 @ self.D2) @ self.D2 @ (Y - self.min_norm) @ self.D1 @ psd_pinv(self.D1 @ self.D1)


def douglas_param(A, B, tol: float = 1e-10) -> DouglasParam:
    """Build ``X1``, ``X2`` with ``(AA^*)^{1/2} X1 = B`` and ``(AA^*)^{1/2} X2 = A``."""
    A, B = _mat(A), _mat(B)
    feas = douglas_exists(A, B, tol)
    if not feas.feasible:
        raise Infeasible(f"A A^* - B B^* has eigenvalue {feas.min_eig:.6g}")
    R = psd_pinv_sqrt(A @ A.conj().T)
    X1 = R @ B
    X2 = R @ A
    D1 = psd_sqrt(np.eye(B.shape[1]) - X1.conj().T @ X1)
    D2 = psd_sqrt(np.eye(A.shape[1]) - X2.conj().T @ X2)
    return DouglasParam(A, B, feas.Q, X1, X2, D1, D2)


@dataclass(frozen=True)
class DouglasSolution:
    Y: np.ndarray
    K: np.ndarray
    factor_residual: float
    norm: float
    split_residual: float
    param: DouglasParam


def douglas_parametrize(A, B, K=None, tol: float = 1e-10) -> DouglasSolution:
    """``Y = X2^* X1 + (I - X2^*X2)^{1/2} K (I - X1^*X1)^{1/2}``.

    ``K`` is projected onto the admissible domain and codomain before use;
    a ``K`` of norm above one is rejected.
    """
    par = douglas_param(A, B, tol)
    A, B = par.A, par.B
    if K is None:
        K = np.zeros((A.shape[1], B.shape[1]), dtype=complex)
    K = _mat(K).reshape(A.shape[1], B.shape[1])
    Pd = psd_pinv(par.D2 @ par.D2) @ (par.D2 @ par.D2)
    Pu = (par.D1 @ par.D1) @ psd_pinv(par.D1 @ par.D1)
    K = Pd @ K @ Pu
    if _opnorm(K) > 1 + 1e-10:
        raise ValueError(f"parameter is not a contraction (norm {_opnorm(K):.6g})")
    Y = par.min_norm + par.D2 @ K @ par.D1
    # vectorwise norm split on a basis
    split = 0.0
    for h in np.eye(B.shape[1]):
        a = np.linalg.norm(Y @ h) ** 2
        b = np.linalg.norm(par.min_norm @ h) ** 2 + np.linalg.norm(par.D2 @ K @ par.D1 @ h) ** 2
        split = max(split, abs(a - b))
    return DouglasSolution(Y, K, _opnorm(A @ Y - B), _opnorm(Y), split, par)


@dataclass(frozen=True)
class CompletionReport:
    block_min_eig: float
    pmat_min_eig: float
    block_psd: bool
    pmat_psd: bool
    norm_identity_residual: float
    norm_identity_holds: bool
    factor_holds: bool
    parametric_holds: bool

    @property
    def verdicts(self) -> tuple[bool, ...]:
        return (self.factor_holds, self.pmat_psd, self.norm_identity_holds,
                self.parametric_holds, self.block_psd)

    @property
    def agree(self) -> bool:
        return len(set(self.verdicts)) == 1


def completion_check(A, B, Y, tol: float = 1e-9) -> CompletionReport:
    """Evaluate every characterization of a solution ``Y`` of ``AY = B, ||Y|| <= 1``.

    (a) direct: factor and norm; (b) the operator ``[[Q, F_Y^*], [F_Y, I - YY^*]]``
    is PSD; (c) ``Y`` contractive and ``||F_Y x||_{H(Y)}^2 = x^* Q x``;
    (d) ``Y`` is reached by the parametrization with a contractive ``K``;
    (e) the 3x3 completion ``[[I, B^*, Y^*], [B, AA^*, A], [Y, A^*, I]]`` is PSD.
    """
    A, B, Y = _mat(A), _mat(B), _mat(Y)
    m, h2 = A.shape
    h1 = B.shape[1]
    scale = max(1.0, _opnorm(A) ** 2, _opnorm(B) ** 2)
    big = np.block([
        [np.eye(h1), B.conj().T, Y.conj().T],
        [B, A @ A.conj().T, A],
        [Y, A.conj().T, np.eye(h2)],
    ])
    bmin = float(np.linalg.eigvalsh(_herm(big)).min())
    Q = A @ A.conj().T - B @ B.conj().T
    FY = A.conj().T - Y @ B.conj().T
    Pm = np.block([[Q, FY.conj().T], [FY, np.eye(h2) - Y @ Y.conj().T]])
    pmin = float(np.linalg.eigvalsh(_herm(Pm)).min())
    ynorm = _opnorm(Y)
    factor = _opnorm(A @ Y - B) <= tol * scale and ynorm <= 1 + tol
    # (c) norm identity in H(Y), only meaningful for contractions
    nid_res = float("inf")
    if ynorm <= 1 + tol:
        Yc = Y / max(ynorm, 1.0)
        space = LiftedSpace(Yc)
        nid_res = 0.0
        for x in np.eye(m):
            val = lifted_norm(space, FY @ x, tol=1e-7)
            nid_res = max(nid_res, abs(val - float(np.real(x @ Q @ x))))
    nid = nid_res <= 1e-6 * scale
    # (d) parametrization
    param_ok = False
    try:
        par = douglas_param(A, B, tol)
        K = par.solve_for_K(Y)
        rec = par.min_norm + par.D2 @ K @ par.D1
        param_ok = _opnorm(rec - Y) <= 1e-8 * scale and _opnorm(K) <= 1 + 1e-8
    except Infeasible:
        param_ok = False
    return CompletionReport(bmin, pmin, bmin >= -tol * scale, pmin >= -tol * scale,
                            nid_res, nid, factor, param_ok)


@dataclass(frozen=True)
class FcReport:
    F: np.ndarray
    F_adj: np.ndarray
    adjoint_residual: float
    gram_residual: float


def fc_adjoint(C, T, rng: np.random.Generator | None = None, samples: int = 5) -> FcReport:
    """``F_C = (I - TT^*) C^*`` and its adjoint for the lifted inner product."""
    C, T = _mat(C), _mat(T)
    space = LiftedSpace(T)
    Dft = space.defect
    F = Dft @ C.conj().T
    # adjoint from the lifted Gram: <F x, g>_{H(T)} = g^* D^+ F x
    F_adj = F.conj().T @ psd_pinv(Dft)
    rng = np.random.default_rng(0) if rng is None else rng
    U, _ = space.coordinates()
    adj_res = 0.0
    for _ in range(samples):
        if U.shape[1] == 0:
            break
        g = U @ (rng.standard_normal(U.shape[1]) + 1j * rng.standard_normal(U.shape[1]))
        adj_res = max(adj_res, float(np.linalg.norm(F_adj @ g - C @ g)))
    gram = _opnorm(F_adj @ F - C @ Dft @ C.conj().T)
    return FcReport(F, F_adj, adj_res, gram)


@dataclass(frozen=True)
class DbrDouglasReport:
    feasible: bool
    Q_min_eig: float
    Y: np.ndarray | None
    Y_hat: np.ndarray | None
    min_norm: np.ndarray | None
    factor_residual: float
    lifted_norm: float
    unique: bool
    X1_isometric: bool
    X2_isometric: bool


def dbr_douglas_solve(A, B, T1, T2, K=None, tol: float = 1e-10) -> DbrDouglasReport:
    """Solve ``A Y = B`` on ``H(T1)`` with ``Y: H(T1) -> H(T2)`` contractive.

    In defect-root coordinates ``v -> U_i s_i^{1/2} v`` both spaces become
    standard, and the problem is the plain Douglas problem for
    ``A U_2 s_2^{1/2}`` and ``B U_1 s_1^{1/2}``.
    """
    A, B = _mat(A), _mat(B)
    S1, S2 = LiftedSpace(T1), LiftedSpace(T2)
    E1, E2 = S1.embed(), S2.embed()
    Ah, Bh = A @ E2, B @ E1
    Q = _herm(A @ S2.defect @ A.conj().T - B @ S1.defect @ B.conj().T)
    qmin = float(np.linalg.eigvalsh(Q).min()) if Q.size else 0.0
    scale = max(1.0, _opnorm(A) ** 2)
    if qmin < -tol * scale:
        return DbrDouglasReport(False, qmin, None, None, None, float("inf"), float("inf"),
                                False, False, False)
    if Bh.shape[1] == 0:
        Yh = np.zeros((Ah.shape[1], 0), dtype=complex)
        X1_iso, X2_iso = True, Ah.shape[1] == 0
        mn = Yh
    else:
        if Ah.shape[1] == 0:
            Ah_eff = np.zeros((A.shape[0], 0))
        else:
            Ah_eff = Ah
        Kh = None
        if K is not None:
            K = _mat(K)
            Kh = E2.conj().T @ psd_pinv(S2.defect) @ K @ E1 if K.size else None
        if Ah_eff.shape[1] == 0:
            Yh = np.zeros((0, Bh.shape[1]), dtype=complex)
            mn = Yh
            X1_iso, X2_iso = False, True
        else:
            sol = douglas_parametrize(Ah_eff, Bh, Kh, tol)
            Yh = sol.Y
            mn = sol.param.min_norm
            X1_iso = _opnorm(sol.param.D1) <= tol
            X2_iso = _opnorm(sol.param.D2) <= tol
    # back to ambient coordinates: Y g = E2 Yh E1^+ g for g in H(T1)
    E1p = np.linalg.pinv(E1) if E1.size else E1.conj().T
    Y = E2 @ Yh @ E1p if Yh.size else np.zeros((A.shape[1], B.shape[1]), dtype=complex)
    fres = 0.0
    for v in np.eye(E1.shape[1]):
        g = E1 @ v
        fres = max(fres, float(np.linalg.norm(A @ (Y @ g) - B @ g)))
    return DbrDouglasReport(True, qmin, Y, Yh, mn, fres, _opnorm(Yh),
                            X1_iso or X2_iso, X1_iso, X2_iso)


@dataclass(frozen=True)
class VectorInterpReport:
    feasible: bool
    P: np.ndarray
    min_eig: float
    x_tilde: np.ndarray | None
    particular: np.ndarray | None
    null_basis: np.ndarray | None
    budget: float
    unique: bool

    def solution(self, coeffs) -> np.ndarray:
        """``g = particular + h`` with ``h`` given in the orthonormal basis of the free subspace."""
        c = np.asarray(coeffs, dtype=complex).ravel()
        return self.particular + (self.null_basis @ c if c.size else 0)

    def contains(self, g, tol: float = 1e-9) -> bool:
        """Membership of ``g`` in the described set: free part in the span, coefficients within budget."""
        if not self.feasible:
            return False
        h = np.asarray(g, dtype=complex).ravel() - self.particular
        N = self.null_basis
        if N.shape[1] == 0:
            return float(np.linalg.norm(h)) <= tol
        c = np.linalg.lstsq(N, h, rcond=None)[0]
        if np.linalg.norm(N @ c - h) > tol:
            return False
        return float(np.linalg.norm(c)) <= self.budget + tol


def vector_interp(A, T2, x, tol: float = 1e-10) -> VectorInterpReport:
    """All ``g`` in ``H(T2)`` with ``A g = x`` and lifted norm at most one.

    ``P = A (I - T2 T2^*) A^*``; feasible iff ``P >= x x^*``. The
    particular solution is ``F_A P^+ x`` (lifted norm ``||P^{+1/2} x||``)
    and the free part ranges over the orthogonal complement of
    ``Ran F_A`` inside ``H(T2)``.
    """
    A = _mat(A)
    x = np.asarray(x, dtype=complex).ravel()
    space = LiftedSpace(T2)
    Dft = space.defect
    P = _herm(A @ Dft @ A.conj().T)
    M = P - np.outer(x, x.conj())
    mn = float(np.linalg.eigvalsh(_herm(M)).min())
    scale = max(1.0, _opnorm(P))
    if mn < -tol * scale:
        return VectorInterpReport(False, P, mn, None, None, None, 0.0, False)
    x_t = psd_pinv_sqrt(P) @ x
    FA = Dft @ A.conj().T
    g0 = FA @ psd_pinv(P) @ x
    # orthonormal basis (lifted metric) of H(T2) minus Ran F_A
    E = space.embed()  # columns orthonormal in H(T2)
    if E.shape[1] == 0:
        basis = np.zeros((A.shape[1], 0), dtype=complex)
    else:
        coords = np.linalg.pinv(E) @ FA  # Ran F_A in standard coordinates
        U, s, _ = np.linalg.svd(coords, full_matrices=True)
        r = int(np.sum(s > tol * max(1.0, s[0] if s.size else 0.0)))
        basis = E @ U[:, r:]
    budget = float(np.sqrt(max(0.0, 1.0 - float(np.linalg.norm(x_t) ** 2))))
    unique = abs(float(np.linalg.norm(x_t)) - 1.0) <= 1e-10 or basis.shape[1] == 0
    return VectorInterpReport(True, P, mn, x_t, g0, basis, budget, unique)
