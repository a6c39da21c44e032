"""Problem generation, solving and certificate assembly for every setting."""

from __future__ import annotations

import platform
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__, dainterp, douglas, jsonio, krein, ncinterp
from .ncalg import NcSeries, fock_norm, mult_matrix
from .sysops import (
    OutputPair,
    Realization,
    build_interpolation_data,
    InterpolationData,
    StabilityError,
    stacked,
)

__all__ = [
    "SETTINGS",
    "TOLERANCES",
    "CertItem",
    "Certificate",
    "Infeasible",
    "ProblemError",
    "generate",
    "solve",
    "verify",
    "certify",
    "witness_certificate",
    "order_cap",
]

SETTINGS = ("fock", "drury_arveson", "classical", "douglas", "vector_interp")
CERT_SCHEMA = "dbrinterp.certificate/1"
PROBLEM_SCHEMA = "dbrinterp.problem/1"

TOLERANCES = {
    "stein": 1e-10,
    "j_isometry": 1e-9,
    "j_coisometry": 1e-9,
    "kernel_identity": 1e-8,
    "kolmogorov": 1e-12,
    "interpolation": 1e-4,
    "tail_ratio": 0.1,
    "norm_identity": 1e-3,
    "lft_schur": 1e-8,
    "lft_recovery": 1e-8,
    "beurling_gram": 1e-8,
    "p_agreement": 1e-12,
    "lift_isometry": 1e-12,
    "classical_interpolation": 1e-12,
    "classical_iden": 1e-10,
    "factor": 1e-10,
    "contraction": 1e-10,
    "norm_split": 1e-10,
    "dbr_factor": 1e-9,
    "positivity": 1e-10,
}

MAX_N = 8
MAX_D = 3
GRAM_ORDER = 4
GENERATOR_ROW_BOUND = 0.5
GENERATOR_S0_NORM = 0.95


class ProblemError(ValueError):
    """Schema or cap violation in a problem document."""


class Infeasible(ValueError):
    def __init__(self, message: str, certificate: "Certificate"):
        super().__init__(message)
        self.certificate = certificate


def order_cap(d: int) -> int:
    return {1: 40, 2: 10, 3: 7}.get(d, 0)


# ---------------------------------------------------------- certificates


@dataclass
class CertItem:
    name: str
    residual: float
    tol: float
    passed: bool
    order: int | None = None
    notes: str = ""

    def to_json(self) -> dict:
        return {"name": self.name, "residual": _num(self.residual), "tol": self.tol,
                "pass": bool(self.passed), "order": self.order, "notes": self.notes}


@dataclass
class Certificate:
    setting: str
    items: list = field(default_factory=list)
    seed: int | None = None
    seconds: float = 0.0
    extra: dict = field(default_factory=dict)

    def add(self, name, residual, tol, order=None, notes="", passed=None):
        residual = float(residual)
        ok = (residual <= tol) if passed is None else bool(passed)
        self.items.append(CertItem(name, residual, tol, ok, order, notes))
        return ok

    @property
    def passed(self) -> bool:
        return bool(self.items) and all(i.passed for i in self.items)

    def to_json(self) -> dict:
        out = {
            "schema": CERT_SCHEMA,
            "setting": self.setting,
            "items": [i.to_json() for i in self.items],
            "verdict": "pass" if self.passed else "fail",
            "provenance": {
                "seed": self.seed,
                "versions": {"dbrinterp": __version__, "numpy": np.__version__,
                             "python": platform.python_version()},
                "timing": {"seconds": round(self.seconds, 3)},
            },
        }
        out.update(self.extra)
        return out


def _num(v: float):
    if v != v:
        return "nan"
    if v in (float("inf"), float("-inf")):
        return "inf" if v > 0 else "-inf"
    return v


def _tol(name: str, scale: float) -> float:
    return TOLERANCES[name] * scale


# ------------------------------------------------------------ generation


def _crandn(rng, *shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _random_state_tuple(rng, d: int, n: int, commuting: bool) -> list[np.ndarray]:
    if commuting:
        Q = np.linalg.qr(_crandn(rng, n, n))[0]
        T = [Q @ np.diag(_crandn(rng, n)) @ Q.conj().T for _ in range(d)]
    else:
        T = [_crandn(rng, n, n) for _ in range(d)]
    s = np.linalg.norm(np.vstack(T), 2)
    return [t * (GENERATOR_ROW_BOUND / s) for t in T]


def _random_schur_realization(rng, d: int, m: int, p: int, q: int,
                              norm: float = GENERATOR_S0_NORM) -> Realization:
    U = _crandn(rng, d * m + p, m + q)
    U *= norm / np.linalg.norm(U, 2)
    A = [U[j * m:(j + 1) * m, :m] for j in range(d)]
    return Realization(tuple(A), U[:d * m, m:], U[d * m:, :m], U[d * m:, m:])


def _check_caps(d: int, n: int, order: int):
    if not 1 <= d <= MAX_D:
        raise ProblemError(f"d={d} outside 1..{MAX_D}")
    if not 1 <= n <= MAX_N:
        raise ProblemError(f"n={n} outside 1..{MAX_N}")
    if not 1 <= order <= order_cap(d):
        raise ProblemError(f"order={order} outside 1..{order_cap(d)} for d={d}")


def generate(setting: str, seed: int, d: int = 2, n: int = 3, p: int = 1, q: int = 1,
             state_dim: int = 2, order: int | None = None, max_tries: int = 1000) -> dict:
    """A random well-posed problem, deterministic in ``seed``."""
    if setting not in SETTINGS:
        raise ProblemError(f"unknown setting {setting!r}")
    rng = np.random.default_rng(seed)
    if setting in ("fock", "drury_arveson"):
        order = order_cap(d) if order is None else order
        _check_caps(d, n, order)
        if min(p, q, state_dim) < 1:
            raise ProblemError("p, q and the S0 state dimension must be positive")
        for _ in range(max_tries):
            T = _random_state_tuple(rng, d, n, setting == "drury_arveson")
            E = _crandn(rng, p, n)
            S0 = _random_schur_realization(rng, d, state_dim, p, q)
            x = _crandn(rng, n)
            data = build_interpolation_data(OutputPair(E, tuple(T)), S0, x)
            if data.strict:
                return {"schema": PROBLEM_SCHEMA, "setting": setting, "seed": seed, "order": order,
                        "pair": jsonio.encode_pair(data.pair), "S0": jsonio.encode_realization(S0),
                        "x": jsonio.encode_array(x)}
        raise ProblemError(f"no strictly positive instance after {max_tries} draws")
    if setting == "classical":
        order = 20 if order is None else order
        _check_caps(1, n, order)
        for _ in range(max_tries):
            pts = np.sqrt(rng.uniform(0, 0.8 ** 2, n)) * np.exp(2j * np.pi * rng.uniform(size=n))
            S0 = _random_schur_realization(rng, 1, state_dim, 1, 1)
            vals = _crandn(rng, n)
            try:
                prob = dainterp.ClassicalNpProblem(pts, vals, S0)
                P = dainterp.classical_data(prob).P
            except ValueError:
                continue
            ev = np.linalg.eigvalsh(P)
            if ev.min() > 1e-8 * ev.max():
                return {"schema": PROBLEM_SCHEMA, "setting": setting, "seed": seed, "order": order,
                        "points": jsonio.encode_array(pts), "values": jsonio.encode_array(vals),
                        "S0": jsonio.encode_realization(S0)}
        raise ProblemError(f"no well-separated points after {max_tries} draws")
    if setting == "douglas":
        A = _crandn(rng, p, n)
        Y0 = _crandn(rng, n, q)
        Y0 *= rng.uniform(0.3, 1.0) / np.linalg.norm(Y0, 2)
        return {"schema": PROBLEM_SCHEMA, "setting": setting, "seed": seed,
                "A": jsonio.encode_array(A), "B": jsonio.encode_array(A @ Y0)}
    # vector_interp
    A = _crandn(rng, p, n)
    T2 = _crandn(rng, n, n)
    T2 *= 0.7 / np.linalg.norm(T2, 2)
    space = douglas.LiftedSpace(T2)
    v = _crandn(rng, n)
    v *= rng.uniform(0.2, 0.9) / np.linalg.norm(v)
    g = space.embed() @ v
    return {"schema": PROBLEM_SCHEMA, "setting": setting, "seed": seed,
            "A": jsonio.encode_array(A), "T2": jsonio.encode_array(T2),
            "x": jsonio.encode_array(A @ g)}


# -------------------------------------------------------------- parsing


def _require(spec: dict, *keys):
    missing = [k for k in keys if k not in spec]
    if missing:
        raise ProblemError(f"problem is missing {', '.join(missing)}")


def _order(spec: dict, d: int) -> int:
    try:
        order = int(spec.get("order", order_cap(d)))
    except (TypeError, ValueError) as exc:
        raise ProblemError(f"order is not an integer: {exc}") from exc
    if not 1 <= order <= order_cap(d):
        raise ProblemError(f"order={order} outside 1..{order_cap(d)} for d={d}")
    return order


def _interp_data(spec: dict) -> tuple[InterpolationData, int]:
    _require(spec, "pair", "S0", "x")
    try:
        pair = jsonio.decode_pair(spec["pair"])
        S0 = jsonio.decode_realization(spec["S0"], "S0")
        x = jsonio.decode_vector(spec["x"], "x")
    except jsonio.SchemaError as exc:
        raise ProblemError(str(exc)) from exc
    if pair.n > MAX_N or pair.d > MAX_D:
        raise ProblemError(f"dims exceed caps (n <= {MAX_N}, d <= {MAX_D})")
    if S0.d != pair.d or S0.D.shape[0] != pair.p:
        raise ProblemError("S0 does not match the output pair (alphabet or output dimension)")
    if x.size != pair.n:
        raise ProblemError(f"x has length {x.size}, expected {pair.n}")
    order = _order(spec, pair.d)
    return build_interpolation_data(pair, S0, x), order


def _setting(spec: dict, override: str | None) -> str:
    setting = override or spec.get("setting")
    if setting not in SETTINGS:
        raise ProblemError(f"unknown or missing setting {setting!r}")
    return setting


# ----------------------------------------------------------------- fock


def _colligation_items(cert: Certificate, data: InterpolationData, A: ncinterp.IndefMultiplier, s: float):
    res = A.colligation.residuals()
    cert.add("krein.j_isometry", res.isometry, _tol("j_isometry", s))
    cert.add("krein.j_coisometry", res.coisometry, _tol("j_coisometry", s))
    ic = krein.inertia_check(A.colligation)
    cert.add("krein.inertia", abs(ic.kappa_minus - ic.dim_U) + abs(ic.dim_F - ic.expected_F), 0.0,
             notes=f"kappa_minus={ic.kappa_minus} dim_U={ic.dim_U} dim_F={ic.dim_F}")
    if A.near_threshold:
        cert.items[-1].notes += f"; {A.near_threshold} eigenvalue(s) near the rank cutoff"


def _schur_params(rng, d: int, f: int, q: int, order: int, count: int) -> list[NcSeries]:
    out = []
    for _ in range(count):
        R = _random_schur_realization(rng, d, 2, f, q, norm=rng.uniform(0.2, 1.0))
        out.append(R.series(order))
    return out


def _tail_item(cert: Certificate, data: InterpolationData, order: int, s: float):
    if order < 5:
        cert.add("ncinterp.tail_decay", float("nan"), _tol("tail_ratio", s), order,
                 notes="order below 5; decay witness needs order-4 >= 1", passed=True)
        return
    lo = ncinterp.solve_oap(data, order - 4, recover=False)
    hi = ncinterp.solve_oap(data, order, recover=False)
    r_lo = ncinterp.interpolation_residual(data, lo.f0)
    r_hi = ncinterp.interpolation_residual(data, hi.f0)
    floor = 1e3 * np.finfo(float).eps * max(1.0, float(np.linalg.norm(data.x)))
    if r_hi <= floor:
        cert.add("ncinterp.tail_decay", r_hi, floor, order,
                 notes=f"residual at rounding level (order-4 residual {r_lo:.3e})")
    else:
        cert.add("ncinterp.tail_decay", r_hi / r_lo, _tol("tail_ratio", s), order,
                 notes=f"residual {r_lo:.3e} at order {order - 4}, {r_hi:.3e} at order {order}")


def _fock(spec: dict, s: float, seed: int | None) -> tuple[dict, Certificate]:
    data, order = _interp_data(spec)
    cert = Certificate("fock", seed=seed)
    cert.add("sysops.stein", data.stein_residual(), _tol("stein", s),
             notes=f"min eig of P {data.min_eig:.3e}")
    if not data.strict:
        cert.add("sysops.strict_positivity", -data.min_eig, 0.0, notes="P is not strictly positive")
        raise Infeasible("P is not strictly positive", cert)
    A = ncinterp.build_A(data, order)
    _colligation_items(cert, data, A, s)
    go = min(order, GRAM_ORDER)
    kr = ncinterp.verify_kernel_identity(A, go)
    cert.add("ncinterp.kernel_identity", kr.residual, _tol("kernel_identity", s), go,
             notes=f"dual check min eig {kr.dual_min_eig:.3e}")
    if data.pair.d >= 2:
        kol = ncinterp.kolmogorov_R(data.pair.d, go)
        cert.add("ncinterp.kolmogorov", kol.residual, _tol("kolmogorov", s), go)
    sol = ncinterp.solve_oap(data, order, A=A, recover=False)
    cert.add("ncinterp.interpolation", ncinterp.interpolation_residual(data, sol.f0),
             _tol("interpolation", s), order)
    _tail_item(cert, data, order, s)
    xPx = float(np.real(np.vdot(data.x, sol.Pinv_x)))
    nrm = ncinterp.dbr_norm(data.S0.series(order), sol.f0, order).value
    cert.add("ncinterp.norm_identity", abs(nrm - xPx) / max(xPx, 1e-300), _tol("norm_identity", s), order,
             notes=f"dbr norm {nrm:.12g}, x*P^-1 x {xPx:.12g}")
    rng = np.random.default_rng(0 if seed is None else seed)
    Ag = A.with_order(go)
    worst = 0.0
    for E in _schur_params(rng, data.pair.d, A.f, A.q, go, 5):
        worst = max(worst, float(np.linalg.norm(mult_matrix(ncinterp.lft_apply(Ag, E), go), 2)))
    cert.add("ncinterp.lft_schur", max(0.0, worst - 1.0), _tol("lft_schur", s), go,
             notes=f"largest truncated multiplier norm {worst:.12g}")
    try:
        rec = ncinterp.lft_recover(Ag, data.S0.series(go), tol=float("inf"))
        cert.add("ncinterp.lft_recovery", rec.forward_residual, _tol("lft_recovery", s), go,
                 notes="exact inverse" if rec.exact else "degreewise least squares")
    except ValueError as exc:
        cert.add("ncinterp.lft_recovery", float("inf"), _tol("lft_recovery", s), go, notes=str(exc))
    try:
        bl = ncinterp.beurling(data.pair, go)
        cert.add("ncinterp.beurling_gram", ncinterp.beurling_gram_residual(bl, go),
                 _tol("beurling_gram", s), go)
    except ncinterp.NotStrictlyPositive as exc:
        cert.add("ncinterp.beurling_gram", float("nan"), _tol("beurling_gram", s), go,
                 notes=f"skipped: {exc}", passed=True)
    col = A.colligation
    solution = {
        "f0": jsonio.encode_series(sol.f0),
        "u": jsonio.encode_series(sol.u),
        "Pinv_x": jsonio.encode_array(sol.Pinv_x),
        "P": jsonio.encode_array(data.P),
        "N": jsonio.encode_array(data.N),
        "colligation": {"B": jsonio.encode_array(col.B), "D": jsonio.encode_array(col.D),
                        "J_FU": jsonio.encode_array(col.J_FU)},
        "min_norm_squared": xPx,
    }
    return solution, cert


def _fock_verify(spec: dict, solution: dict, s: float, seed) -> Certificate:
    data, order = _interp_data(spec)
    cert = Certificate(spec.get("setting", "fock"), seed=seed)
    try:
        f = jsonio.decode_series(solution["f0"] if "f0" in solution else solution["f"], "f")
    except KeyError as exc:
        raise ProblemError("solution needs an 'f0' or 'f' series") from exc
    except jsonio.SchemaError as exc:
        raise ProblemError(str(exc)) from exc
    if f.d != data.pair.d or f.out_dim != data.p or f.in_dim != 1:
        raise ProblemError("solution series does not match the problem dimensions")
    cert.add("ncinterp.interpolation", ncinterp.interpolation_residual(data, f), _tol("interpolation", s), f.order)
    xPx = float(np.real(np.vdot(data.x, np.linalg.solve(data.P, data.x))))
    nrm = ncinterp.dbr_norm(data.S0.series(f.order), f, f.order).value
    # every interpolant has norm at least x*P^-1 x (up to truncation error)
    cert.add("ncinterp.norm_lower_bound", max(0.0, (xPx - nrm) / max(xPx, 1e-300)),
             _tol("norm_identity", s), f.order, notes=f"dbr norm {nrm:.12g}, x*P^-1 x {xPx:.12g}")
    if "colligation" in solution:
        c = solution["colligation"]
        B = jsonio.decode_matrix(c["B"], "B")
        D = jsonio.decode_matrix(c["D"], "D")
        J_FU = jsonio.decode_matrix(c["J_FU"], "J_FU")
        col = krein.Colligation(stacked(data.pair.T), B, data.C, D, data.P, J_FU, data.J_YU, data.pair.d)
        res = col.residuals()
        cert.add("krein.j_isometry", res.isometry, _tol("j_isometry", s))
        cert.add("krein.j_coisometry", res.coisometry, _tol("j_coisometry", s))
    return cert


# -------------------------------------------------------- Drury-Arveson


def _drury_arveson(spec: dict, s: float, seed) -> tuple[dict, Certificate]:
    data, order = _interp_data(spec)
    cert = Certificate("drury_arveson", seed=seed)
    try:
        Pc = dainterp.da_compute_P(data.pair, data.N)
    except dainterp.NonCommutingTuple as exc:
        raise ProblemError(str(exc)) from exc
    cert.add("dainterp.p_agreement", float(np.linalg.norm(Pc - data.P, 2)), _tol("p_agreement", s))
    cert.add("sysops.stein", data.stein_residual(), _tol("stein", s))
    if not data.strict:
        raise Infeasible("P is not strictly positive", cert)
    sol = dainterp.solve_oap_da(data, order, kernel_order=min(order, 3))
    _colligation_items(cert, data, sol.nc.A, s)
    cert.add("dainterp.interpolation", sol.interpolation_residual, _tol("interpolation", s), order)
    cert.add("dainterp.kernel_identity", sol.kernel_residual, _tol("kernel_identity", s), min(order, 3))
    lift = dainterp.symmetric_lift(sol.f0)
    cert.add("dainterp.lift_isometry", abs(fock_norm(lift) - dainterp.da_norm(sol.f0)),
             _tol("lift_isometry", s), order)
    solution = {"f0": jsonio.encode_da_series(sol.f0), "u": jsonio.encode_da_series(sol.u),
                "P": jsonio.encode_array(data.P)}
    return solution, cert


def _da_verify(spec: dict, solution: dict, s: float, seed) -> Certificate:
    data, order = _interp_data(spec)
    cert = Certificate("drury_arveson", seed=seed)
    try:
        f = jsonio.decode_da_series(solution["f0"] if "f0" in solution else solution["f"], "f")
    except KeyError as exc:
        raise ProblemError("solution needs an 'f0' or 'f' series") from exc
    res = float(np.linalg.norm(dainterp.da_tangential_eval(data.pair, f).ravel() - data.x))
    cert.add("dainterp.interpolation", res, _tol("interpolation", s), f.order)
    return cert


# ------------------------------------------------------------ classical


def _classical_problem(spec: dict) -> tuple[dainterp.ClassicalNpProblem, int]:
    _require(spec, "points", "values")
    try:
        pts = jsonio.decode_vector(spec["points"], "points")
        vals = jsonio.decode_vector(spec["values"], "values")
        S0 = spec.get("S0")
        S0 = None if S0 is None else jsonio.decode_realization(S0, "S0")
        prob = dainterp.ClassicalNpProblem(pts, vals, S0)
    except ValueError as exc:
        raise ProblemError(str(exc)) from exc
    if S0 is not None and (S0.d != 1 or S0.D.shape != (1, 1)):
        raise ProblemError("classical S0 must be a scalar one-variable realization")
    if pts.size > MAX_N:
        raise ProblemError(f"at most {MAX_N} points")
    return prob, _order(spec, 1)


def _classical(spec: dict, s: float, seed) -> tuple[dict, Certificate]:
    prob, order = _classical_problem(spec)
    cert = Certificate("classical", seed=seed)
    cd = dainterp.classical_data(prob)
    mn = float(np.linalg.eigvalsh(cd.P).min())
    if mn <= _tol("positivity", s) * max(1.0, float(np.linalg.norm(cd.P, 2))):
        cert.add("dainterp.pick_positivity", -mn, 0.0, notes=f"Pick matrix min eig {mn:.3e}")
        raise Infeasible("Pick matrix is not strictly positive", cert)
    cert.add("dainterp.pick_positivity", 0.0, 0.0, notes=f"Pick matrix min eig {mn:.6g}")
    sol = dainterp.classical_np_solve(prob)
    cert.add("dainterp.interpolation", sol.interpolation_residual(), _tol("classical_interpolation", s))
    cert.add("dainterp.iden", sol.theta.iden_residual(dainterp.polar_grid()), _tol("classical_iden", s),
             notes="10 x 10 polar grid, radius 0.9")
    rng = np.random.default_rng(0 if seed is None else seed)
    worst = 0.0
    for _ in range(5):
        a, b = rng.uniform(-0.5, 0.5, 2) + 1j * rng.uniform(-0.5, 0.5, 2)
        worst = max(worst, sol.interpolation_residual(lambda l, a=a, b=b: a + b * l))
    cert.add("dainterp.family_interpolation", worst, _tol("classical_interpolation", s),
             notes="5 random affine parameters")
    f0s = sol.f0_series(order)
    xPx = sol.norm_squared()
    nrm = ncinterp.dbr_norm(prob.s0_series(order), f0s, order).value
    cert.add("dainterp.norm_identity", abs(nrm - xPx) / max(xPx, 1e-300), _tol("norm_identity", s), order,
             notes=f"dbr norm {nrm:.12g}, x*P^-1 x {xPx:.12g}")
    solution = {"P": jsonio.encode_array(cd.P), "Pinv_x": jsonio.encode_array(sol.Pinv_x),
                "f0": jsonio.encode_series(f0s), "min_norm_squared": xPx}
    return solution, cert


def _classical_verify(spec: dict, solution: dict, s: float, seed) -> Certificate:
    prob, order = _classical_problem(spec)
    cert = Certificate("classical", seed=seed)
    f = jsonio.decode_series(solution["f0"] if "f0" in solution else solution["f"], "f")
    vals = []
    for lam in prob.points:
        vals.append(sum(c[0, 0] * lam ** len(w) for w, c in f.coeffs.items()))
    res = float(np.max(np.abs(np.array(vals) - prob.values)))
    cert.add("dainterp.interpolation", res, _tol("interpolation", s), f.order,
             notes="evaluated from the truncated series")
    return cert


# -------------------------------------------------------------- Douglas


def _douglas_inputs(spec: dict):
    _require(spec, "A", "B")
    try:
        A = jsonio.decode_matrix(spec["A"], "A")
        B = jsonio.decode_matrix(spec["B"], "B")
        T1 = None if spec.get("T1") is None else jsonio.decode_matrix(spec["T1"], "T1")
        T2 = None if spec.get("T2") is None else jsonio.decode_matrix(spec["T2"], "T2")
        K = None if spec.get("K") is None else jsonio.decode_matrix(spec["K"], "K")
    except jsonio.SchemaError as exc:
        raise ProblemError(str(exc)) from exc
    if A.shape[0] != B.shape[0]:
        raise ProblemError(f"A has {A.shape[0]} rows, B has {B.shape[0]}")
    if (T1 is None) != (T2 is None):
        raise ProblemError("give both T1 and T2 or neither")
    if T1 is not None and (T1.shape[0] != B.shape[1] or T2.shape[0] != A.shape[1]):
        raise ProblemError("T1 must act on the domain of B and T2 on the domain of A")
    return A, B, T1, T2, K


def _douglas(spec: dict, s: float, seed) -> tuple[dict, Certificate]:
    A, B, T1, T2, K = _douglas_inputs(spec)
    cert = Certificate("douglas", seed=seed)
    if T1 is not None:
        rep = douglas.dbr_douglas_solve(A, B, T1, T2, K)
        ok = cert.add("douglas.feasibility", max(0.0, -rep.Q_min_eig), _tol("positivity", s),
                      notes=f"min eig of A D2 A* - B D1 B* {rep.Q_min_eig:.6g}")
        if not ok:
            raise Infeasible("A D2 A* - B D1 B* is not positive semidefinite", cert)
        cert.add("douglas.factor", rep.factor_residual, _tol("dbr_factor", s))
        cert.add("douglas.contraction", max(0.0, rep.lifted_norm - 1.0), _tol("dbr_factor", s),
                 notes=f"lifted operator norm {rep.lifted_norm:.12g}")
        solution = {"Y": jsonio.encode_array(rep.Y), "unique": rep.unique,
                    "X1_isometric": rep.X1_isometric, "X2_isometric": rep.X2_isometric}
        return solution, cert
    feas = douglas.douglas_exists(A, B, _tol("positivity", s))
    ok = cert.add("douglas.feasibility", max(0.0, -feas.min_eig), _tol("positivity", s)
                  * max(1.0, float(np.linalg.norm(A, 2)) ** 2),
                  notes=f"min eig of AA* - BB* {feas.min_eig:.6g}")
    cert.extra["Q_eigenvalues"] = np.linalg.eigvalsh(feas.Q).tolist()
    if not ok:
        raise Infeasible("AA* - BB* is not positive semidefinite", cert)
    try:
        sol = douglas.douglas_parametrize(A, B, K)
    except ValueError as exc:
        raise ProblemError(str(exc)) from exc
    cert.add("douglas.factor", sol.factor_residual, _tol("factor", s))
    cert.add("douglas.contraction", max(0.0, sol.norm - 1.0), _tol("contraction", s),
             notes=f"norm {sol.norm:.12g}")
    cert.add("douglas.norm_split", sol.split_residual, _tol("norm_split", s))
    cc = douglas.completion_check(A, B, sol.Y)
    cert.add("douglas.completion", 0.0 if cc.agree and all(cc.verdicts) else 1.0, 0.0,
             notes=f"verdicts {list(cc.verdicts)}, 3x3 min eig {cc.block_min_eig:.3e}")
    solution = {"Y": jsonio.encode_array(sol.Y), "min_norm": jsonio.encode_array(sol.param.min_norm),
                "unique": sol.param.unique()}
    return solution, cert


def _douglas_verify(spec: dict, solution: dict, s: float, seed) -> Certificate:
    A, B, T1, T2, _ = _douglas_inputs(spec)
    cert = Certificate("douglas", seed=seed)
    Y = jsonio.decode_matrix(solution["Y"], "Y")
    if T1 is not None:
        S1, S2 = douglas.LiftedSpace(T1), douglas.LiftedSpace(T2)
        E1, E2 = S1.embed(), S2.embed()
        fres = float(np.linalg.norm(A @ Y @ E1 - B @ E1, 2)) if E1.size else 0.0
        cert.add("douglas.factor", fres, _tol("dbr_factor", s))
        Yh = np.linalg.pinv(E2) @ Y @ E1 if E1.size and E2.size else np.zeros((0, 0))
        ynorm = float(np.linalg.norm(Yh, 2)) if Yh.size else 0.0
        cert.add("douglas.contraction", max(0.0, ynorm - 1.0), _tol("contraction", s))
        return cert
    cc = douglas.completion_check(A, B, Y)
    cert.add("douglas.completion", max(0.0, -cc.block_min_eig), _tol("factor", s),
             notes=f"verdicts {list(cc.verdicts)}")
    cert.add("douglas.agreement", 0.0 if cc.agree else 1.0, 0.0)
    return cert


def _vector_inputs(spec: dict):
    _require(spec, "A", "T2", "x")
    try:
        A = jsonio.decode_matrix(spec["A"], "A")
        T2 = jsonio.decode_matrix(spec["T2"], "T2")
        x = jsonio.decode_vector(spec["x"], "x")
    except jsonio.SchemaError as exc:
        raise ProblemError(str(exc)) from exc
    if x.size != A.shape[0] or T2.shape != (A.shape[1], A.shape[1]):
        raise ProblemError("A, T2 and x have inconsistent dimensions")
    return A, T2, x


def _vector(spec: dict, s: float, seed) -> tuple[dict, Certificate]:
    A, T2, x = _vector_inputs(spec)
    cert = Certificate("vector_interp", seed=seed)
    rep = douglas.vector_interp(A, T2, x)
    ok = cert.add("douglas.feasibility", max(0.0, -rep.min_eig),
                  _tol("positivity", s) * max(1.0, float(np.linalg.norm(rep.P, 2))),
                  notes=f"min eig of P - xx* {rep.min_eig:.6g}")
    if not ok:
        raise Infeasible("P - xx* is not positive semidefinite", cert)
    space = douglas.LiftedSpace(T2)
    g = rep.particular
    cert.add("douglas.particular", float(np.linalg.norm(A @ g - x)), _tol("factor", s))
    xt2 = float(np.linalg.norm(rep.x_tilde) ** 2)
    cert.add("douglas.particular_norm", abs(douglas.lifted_norm(space, g) - xt2), _tol("factor", s),
             notes=f"||x~||^2 = {xt2:.12g}")
    Nb = rep.null_basis
    if Nb.shape[1]:
        G = np.array([[space.inner(Nb[:, j], Nb[:, i]) for j in range(Nb.shape[1])] for i in range(Nb.shape[1])])
        cert.add("douglas.free_basis", max(float(np.linalg.norm(G - np.eye(Nb.shape[1]), 2)),
                                           float(np.linalg.norm(A @ Nb, 2))), _tol("factor", s),
                 notes=f"dimension {Nb.shape[1]}")
    solution = {"particular": jsonio.encode_array(g), "free_basis": jsonio.encode_array(Nb),
                "budget": rep.budget, "unique": rep.unique, "x_tilde": jsonio.encode_array(rep.x_tilde)}
    return solution, cert


def _vector_verify(spec: dict, solution: dict, s: float, seed) -> Certificate:
    A, T2, x = _vector_inputs(spec)
    cert = Certificate("vector_interp", seed=seed)
    g = jsonio.decode_vector(solution["g"] if "g" in solution else solution["particular"], "g")
    cert.add("douglas.interpolation", float(np.linalg.norm(A @ g - x)), _tol("factor", s))
    ln = douglas.lifted_norm(douglas.LiftedSpace(T2), g)
    cert.add("douglas.ball", max(0.0, ln - 1.0), _tol("factor", s), notes=f"squared lifted norm {ln:.12g}")
    return cert


# ------------------------------------------------------------- dispatch

_SOLVERS = {"fock": _fock, "drury_arveson": _drury_arveson, "classical": _classical,
            "douglas": _douglas, "vector_interp": _vector}
_VERIFIERS = {"fock": _fock_verify, "drury_arveson": _da_verify, "classical": _classical_verify,
              "douglas": _douglas_verify, "vector_interp": _vector_verify}


def _with_order(spec: dict, order: int | None) -> dict:
    if order is None:
        return spec
    return {**spec, "order": order}


def solve(spec: dict, setting: str | None = None, order: int | None = None,
          tol_scale: float = 1.0) -> tuple[dict, Certificate]:
    """Solve and certify; raises :class:`Infeasible` with a partial certificate."""
    if not isinstance(spec, dict):
        raise ProblemError("problem must be a JSON object")
    setting = _setting(spec, setting)
    seed = spec.get("seed")
    t0 = time.perf_counter()
    try:
        solution, cert = _SOLVERS[setting](_with_order(spec, order), tol_scale, seed)
    except Infeasible as exc:
        exc.certificate.seconds = time.perf_counter() - t0
        raise
    except (StabilityError, ncinterp.NotStrictlyPositive, krein.InertiaMismatch) as exc:
        cert = Certificate(setting, seed=seed)
        cert.add("precondition", float("inf"), 0.0, notes=str(exc))
        cert.seconds = time.perf_counter() - t0
        raise Infeasible(str(exc), cert) from exc
    cert.seconds = time.perf_counter() - t0
    return solution, cert


def certify(spec: dict, **kw) -> Certificate:
    try:
        return solve(spec, **kw)[1]
    except Infeasible as exc:
        return exc.certificate


def verify(spec: dict, solution: dict, setting: str | None = None, tol_scale: float = 1.0,
           order: int | None = None) -> Certificate:
    if not isinstance(spec, dict) or not isinstance(solution, dict):
        raise ProblemError("problem and solution must be JSON objects")
    setting = _setting(spec, setting)
    solution = solution.get("solution", solution)
    t0 = time.perf_counter()
    try:
        cert = _VERIFIERS[setting](_with_order(spec, order), solution, tol_scale, spec.get("seed"))
    except (KeyError, jsonio.SchemaError) as exc:
        raise ProblemError(f"malformed solution: {exc}") from exc
    cert.seconds = time.perf_counter() - t0
    return cert


def witness_certificate() -> Certificate:
    """Two-point witness for the kernel of ``[l1; l2]`` at ``(1/2, 0)`` and ``(0, 1/2)``."""
    t0 = time.perf_counter()
    rep = dainterp.two_point_witness()
    ref = [[1, 0, 1, -0.25], [0, 4 / 3, 0, 1], [1, 0, 4 / 3, 0], [-0.25, 1, 0, 1]]
    ref_exact = [[Fraction(1), 0, 1, Fraction(-1, 4)], [0, Fraction(4, 3), 0, 1],
                 [1, 0, Fraction(4, 3), 0], [Fraction(-1, 4), 1, 0, 1]]
    cert = Certificate("appendix_b")
    mismatch = sum(1 for i in range(4) for j in range(4) if rep.matrix[i][j] != ref_exact[i][j])
    cert.add("dainterp.witness_exact_match", mismatch, 0.0, notes="entries differing from the stated matrix")
    cert.add("dainterp.witness_float_match", float(np.max(np.abs(np.array(ref) - witness_float()))), 0.0)
    cert.add("dainterp.witness_psd", 0.0 if rep.positive_semidefinite else 1.0, 0.0,
             notes="sign pattern of the exact characteristic polynomial")
    cert.add("dainterp.witness_positive_definite", float(rep.determinant), 0.0,
             passed=rep.positive_definite,
             notes=f"exact leading minors {[str(m) for m in rep.leading_minors]}; "
                   f"exact determinant {rep.determinant}")
    cert.extra["matrix"] = [[str(x) for x in row] for row in rep.matrix]
    cert.extra["charpoly"] = [str(c) for c in rep.charpoly]
    cert.extra["eigenvalues"] = [float(f"{e:.15g}") for e in rep.eigenvalues]
    cert.seconds = time.perf_counter() - t0
    return cert


def witness_float() -> np.ndarray:
    return np.real(dainterp.witness_matrix())
