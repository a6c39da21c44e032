"""JSON encoding for matrices, series and realizations.

Complex arrays are written as ``{"re": ..., "im": ...}``; plain nested
lists of reals are accepted on input.
"""

from __future__ import annotations

import numpy as np

from .dainterp import DaSeries
from .ncalg import NcSeries
from .sysops import OutputPair, Realization

__all__ = [
    "SchemaError",
    "encode_array",
    "decode_matrix",
    "decode_vector",
    "encode_series",
    "decode_series",
    "encode_realization",
    "decode_realization",
    "encode_pair",
    "decode_pair",
    "encode_da_series",
    "decode_da_series",
]


class SchemaError(ValueError):
    pass


def _clean(a: np.ndarray) -> list:
    # avoid "-0.0" so golden files are stable
    return (np.asarray(a, dtype=float) + 0.0).tolist()


def encode_array(a) -> dict:
    a = np.asarray(a, dtype=complex)
    return {"re": _clean(a.real), "im": _clean(a.imag)}


def _decode(obj, what: str) -> np.ndarray:
    try:
        if isinstance(obj, dict):
            if "re" not in obj:
                raise SchemaError(f"{what}: object needs a 're' field")
            re = np.asarray(obj["re"], dtype=float)
            im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
            if re.shape != im.shape:
                raise SchemaError(f"{what}: 're' shape {re.shape} differs from 'im' shape {im.shape}")
            return re + 1j * im
        return np.asarray(obj, dtype=complex)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"{what}: not a numeric array ({exc})") from exc


def decode_matrix(obj, what: str = "matrix") -> np.ndarray:
    a = _decode(obj, what)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise SchemaError(f"{what}: expected a 2-d array, got {a.ndim} dimensions")
    return a


def decode_vector(obj, what: str = "vector") -> np.ndarray:
    a = _decode(obj, what)
    return a.reshape(-1)


def encode_series(S: NcSeries) -> dict:
    coeffs = [{"word": list(w), **encode_array(S.coeffs[w])}
              for w in sorted(S.coeffs, key=lambda w: (len(w), w))]
    return {"d": S.d, "order": S.order, "out_dim": S.out_dim, "in_dim": S.in_dim, "coeffs": coeffs}


def decode_series(obj: dict, what: str = "series") -> NcSeries:
    if not isinstance(obj, dict):
        raise SchemaError(f"{what}: expected an object")
    try:
        d, order = int(obj["d"]), int(obj["order"])
        out_dim, in_dim = int(obj["out_dim"]), int(obj["in_dim"])
        entries = obj.get("coeffs", [])
    except KeyError as exc:
        raise SchemaError(f"{what}: missing field {exc}") from exc
    coeffs = {}
    for k, e in enumerate(entries):
        w = tuple(int(x) for x in e.get("word", []))
        if w in coeffs:
            raise SchemaError(f"{what}: word {list(w)} listed twice")
        c = decode_matrix(e, f"{what}.coeffs[{k}]")
        if c.shape != (out_dim, in_dim):
            raise SchemaError(f"{what}.coeffs[{k}]: shape {c.shape}, expected {(out_dim, in_dim)}")
        coeffs[w] = c
    try:
        return NcSeries(d, order, out_dim, in_dim, coeffs)
    except ValueError as exc:
        raise SchemaError(f"{what}: {exc}") from exc


def encode_realization(R: Realization) -> dict:
    return {"A": [encode_array(a) for a in R.A], "B": encode_array(R.B),
            "C": encode_array(R.C), "D": encode_array(R.D)}


def decode_realization(obj: dict, what: str = "realization") -> Realization:
    if not isinstance(obj, dict):
        raise SchemaError(f"{what}: expected an object")
    try:
        A = [decode_matrix(a, f"{what}.A[{i}]") for i, a in enumerate(obj["A"])]
        B = decode_matrix(obj["B"], f"{what}.B")
        C = decode_matrix(obj["C"], f"{what}.C")
        D = decode_matrix(obj["D"], f"{what}.D")
    except KeyError as exc:
        raise SchemaError(f"{what}: missing field {exc}") from exc
    if not A:
        raise SchemaError(f"{what}: empty state tuple")
    m = A[0].shape[0]
    if any(a.shape != (m, m) for a in A):
        raise SchemaError(f"{what}: state matrices must be square of equal size")
    if B.shape[0] == 1 and B.shape[1] == len(A) * m and D.shape[1] == 1:
        B = B.reshape(-1, 1)
    if B.shape != (len(A) * m, D.shape[1]):
        raise SchemaError(f"{what}.B: shape {B.shape}, expected {(len(A) * m, D.shape[1])}")
    if C.shape != (D.shape[0], m):
        raise SchemaError(f"{what}.C: shape {C.shape}, expected {(D.shape[0], m)}")
    return Realization(tuple(A), B, C, D)


def encode_pair(pair: OutputPair) -> dict:
    return {"E": encode_array(pair.E), "T": [encode_array(t) for t in pair.T]}


def decode_pair(obj: dict, what: str = "pair") -> OutputPair:
    try:
        E = decode_matrix(obj["E"], f"{what}.E")
        T = [decode_matrix(t, f"{what}.T[{i}]") for i, t in enumerate(obj["T"])]
    except KeyError as exc:
        raise SchemaError(f"{what}: missing field {exc}") from exc
    try:
        return OutputPair(E, tuple(T))
    except ValueError as exc:
        raise SchemaError(f"{what}: {exc}") from exc


def encode_da_series(S) -> dict:
    coeffs = [{"index": list(n), **encode_array(c)} for n, c in sorted(S.coeffs.items(), key=lambda kv: kv[0])]
    return {"d": S.d, "order": S.order, "out_dim": S.out_dim, "in_dim": S.in_dim, "coeffs": coeffs}


def decode_da_series(obj: dict, what: str = "series") -> DaSeries:
    try:
        d, order = int(obj["d"]), int(obj["order"])
        out_dim, in_dim = int(obj["out_dim"]), int(obj["in_dim"])
    except KeyError as exc:
        raise SchemaError(f"{what}: missing field {exc}") from exc
    coeffs = {}
    for k, e in enumerate(obj.get("coeffs", [])):
        n = tuple(int(x) for x in e["index"])
        coeffs[n] = decode_matrix(e, f"{what}.coeffs[{k}]").reshape(out_dim, in_dim)
    return DaSeries(d, order, out_dim, in_dim, coeffs)
