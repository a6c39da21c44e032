"""Free-monoid words and truncated noncommutative power series.

A word is stored as a tuple of letters in ``{1, ..., d}``, read left to
right exactly as the monomial ``z_{l1} z_{l2} ... z_{lk}`` is written.
Series coefficients are dense complex matrices keyed by such tuples;
absent words have zero coefficient.

The canonical basis for every Gram or multiplication matrix is the
graded-lexicographic enumeration returned by :func:`enumerate_words`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "Word",
    "NcSeries",
    "concat",
    "reversal",
    "abelianize",
    "multinomial",
    "enumerate_words",
    "word_index",
    "series_multiply",
    "sharp",
    "invert_fps",
    "mult_matrix",
    "mult_matrix_sparse",
    "shift",
    "shift_adjoint",
    "ev_empty",
    "realize_transfer",
    "fock_norm",
    "fock_inner",
    "SingularConstantTerm",
]

ZERO_CUTOFF = 0.0


class SingularConstantTerm(ValueError):
    """Raised when a series cannot be inverted as a formal power series."""

    def __init__(self, message: str, rcond: float):
        super().__init__(message)
        self.rcond = rcond


# ---------------------------------------------------------------- words


@dataclass(frozen=True)
class Word:
    """A word over the alphabet ``{1..d}``."""

    letters: tuple[int, ...]
    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("alphabet size must be positive")
        letters = tuple(int(x) for x in self.letters)
        for x in letters:
            if not 1 <= x <= self.d:
                raise ValueError(f"letter {x} outside 1..{self.d}")
        object.__setattr__(self, "letters", letters)

    def __len__(self) -> int:
        return len(self.letters)

    @classmethod
    def empty(cls, d: int) -> "Word":
        return cls((), d)


def concat(a: Word, b: Word) -> Word:
    if a.d != b.d:
        raise ValueError(f"alphabet mismatch: {a.d} vs {b.d}")
    return Word(a.letters + b.letters, a.d)


def reversal(w: Word | tuple) -> Word | tuple:
    if isinstance(w, Word):
        return Word(w.letters[::-1], w.d)
    return tuple(w)[::-1]


def abelianize(w: Word | tuple, d: int | None = None) -> tuple[int, ...]:
    """Letter counts of ``w`` as a ``d``-tuple."""
    if isinstance(w, Word):
        letters, d = w.letters, w.d
    else:
        letters = tuple(w)
        if d is None:
            raise ValueError("alphabet size required for a bare tuple")
    counts = [0] * d
    for x in letters:
        counts[x - 1] += 1
    return tuple(counts)


def multinomial(n: Sequence[int]) -> int:
    """``|n|! / n!`` in exact integer arithmetic."""
    if any(k < 0 for k in n):
        raise ValueError("multi-index entries must be nonnegative")
    out = math.factorial(sum(n))
    for k in n:
        out //= math.factorial(k)
    return out


@lru_cache(maxsize=64)
def _words(d: int, order: int) -> tuple[tuple[int, ...], ...]:
    out: list[tuple[int, ...]] = []
    for length in range(order + 1):
        out.extend(itertools.product(range(1, d + 1), repeat=length))
    return tuple(out)


def enumerate_words(d: int, order: int) -> list[tuple[int, ...]]:
    """All words of length at most ``order``, graded then lexicographic."""
    if d < 1 or order < 0:
        raise ValueError("need d >= 1 and order >= 0")
    return list(_words(d, order))


@lru_cache(maxsize=64)
def _index(d: int, order: int) -> dict:
    return {w: i for i, w in enumerate(_words(d, order))}


def word_index(d: int, order: int) -> dict[tuple[int, ...], int]:
    return _index(d, order)


def word_count(d: int, order: int) -> int:
    if d == 1:
        return order + 1
    return (d ** (order + 1) - 1) // (d - 1)


# --------------------------------------------------------------- series


@dataclass(frozen=True)
class NcSeries:
    """Truncated formal power series in ``d`` noncommuting variables.

    ``coeffs`` maps letter tuples (length <= ``order``) to
    ``out_dim x in_dim`` complex arrays. ``truncated`` records that some
    coefficients above ``order`` were dropped while producing the series.
    """

    d: int
    order: int
    out_dim: int
    in_dim: int
    coeffs: Mapping[tuple[int, ...], np.ndarray] = field(default_factory=dict)
    truncated: bool = False

    def __post_init__(self):
        clean = {}
        for w, c in self.coeffs.items():
            w = tuple(int(x) for x in w)
            if len(w) > self.order:
                raise ValueError(f"word {w} longer than order {self.order}")
            if any(not 1 <= x <= self.d for x in w):
                raise ValueError(f"word {w} has letters outside 1..{self.d}")
            c = np.asarray(c, dtype=complex).reshape(self.out_dim, self.in_dim)
            if np.any(np.abs(c) > ZERO_CUTOFF):
                c = c.copy()
                c.setflags(write=False)
                clean[w] = c
        object.__setattr__(self, "coeffs", clean)

    # construction helpers
    @classmethod
    def zero(cls, d, order, out_dim, in_dim):
        return cls(d, order, out_dim, in_dim, {})

    @classmethod
    def constant(cls, c, d, order):
        c = np.atleast_2d(np.asarray(c, dtype=complex))
        return cls(d, order, c.shape[0], c.shape[1], {(): c})

    @classmethod
    def identity(cls, dim, d, order):
        return cls.constant(np.eye(dim), d, order)

    @classmethod
    def monomial(cls, word, c, d, order):
        c = np.atleast_2d(np.asarray(c, dtype=complex))
        return cls(d, order, c.shape[0], c.shape[1], {tuple(word): c})

    def coef(self, word) -> np.ndarray:
        c = self.coeffs.get(tuple(word))
        if c is None:
            return np.zeros((self.out_dim, self.in_dim), dtype=complex)
        return c

    @property
    def shape(self) -> tuple[int, int]:
        return (self.out_dim, self.in_dim)

    def degree(self) -> int:
        return max((len(w) for w in self.coeffs), default=-1)

    def _check_same(self, other: "NcSeries"):
        if self.d != other.d or self.shape != other.shape:
            raise ValueError("series mismatch in alphabet or shape")

    def __add__(self, other: "NcSeries") -> "NcSeries":
        self._check_same(other)
        order = min(self.order, other.order)
        out = {w: c for w, c in self.coeffs.items() if len(w) <= order}
        for w, c in other.coeffs.items():
            if len(w) <= order:
                out[w] = out[w] + c if w in out else c
        flag = self.truncated or other.truncated or self.order != other.order
        return NcSeries(self.d, order, self.out_dim, self.in_dim, out, flag)

    def __neg__(self) -> "NcSeries":
        return self.scale(-1.0)

    def __sub__(self, other: "NcSeries") -> "NcSeries":
        return self + (-other)

    def scale(self, s: complex) -> "NcSeries":
        return NcSeries(self.d, self.order, self.out_dim, self.in_dim,
                        {w: s * c for w, c in self.coeffs.items()}, self.truncated)

    def __matmul__(self, other: "NcSeries") -> "NcSeries":
        return series_multiply(self, other)

    def truncate(self, order: int) -> "NcSeries":
        keep = {w: c for w, c in self.coeffs.items() if len(w) <= order}
        flag = self.truncated or len(keep) < len(self.coeffs)
        return NcSeries(self.d, order, self.out_dim, self.in_dim, keep, flag)

    def block(self, rows: slice, cols: slice) -> "NcSeries":
        probe = np.zeros(self.shape)[rows, cols]
        out = {w: c[rows, cols] for w, c in self.coeffs.items()}
        return NcSeries(self.d, self.order, probe.shape[0], probe.shape[1], out,
                        self.truncated)

    def left_apply(self, M) -> "NcSeries":
        M = np.atleast_2d(np.asarray(M, dtype=complex))
        return NcSeries(self.d, self.order, M.shape[0], self.in_dim,
                        {w: M @ c for w, c in self.coeffs.items()}, self.truncated)

    def right_apply(self, M) -> "NcSeries":
        M = np.atleast_2d(np.asarray(M, dtype=complex))
        return NcSeries(self.d, self.order, self.out_dim, M.shape[1],
                        {w: c @ M for w, c in self.coeffs.items()}, self.truncated)

    def to_dense(self, order: int | None = None) -> np.ndarray:
        """Stack coefficients over the word basis into ``(W*out) x in``."""
        order = self.order if order is None else order
        words = _words(self.d, order)
        out = np.zeros((len(words) * self.out_dim, self.in_dim), dtype=complex)
        idx = _index(self.d, order)
        for w, c in self.coeffs.items():
            if len(w) <= order:
                i = idx[w]
                out[i * self.out_dim:(i + 1) * self.out_dim] = c
        return out

    @classmethod
    def from_dense(cls, vec, d, order, out_dim) -> "NcSeries":
        vec = np.asarray(vec, dtype=complex)
        if vec.ndim == 1:
            vec = vec[:, None]
        words = _words(d, order)
        coeffs = {w: vec[i * out_dim:(i + 1) * out_dim] for i, w in enumerate(words)}
        return cls(d, order, out_dim, vec.shape[1], coeffs)

    def max_abs_diff(self, other: "NcSeries", order: int | None = None) -> float:
        self._check_same(other)
        order = min(self.order, other.order) if order is None else order
        worst = 0.0
        for w in set(self.coeffs) | set(other.coeffs):
            if len(w) <= order:
                worst = max(worst, float(np.max(np.abs(self.coef(w) - other.coef(w)))))
        return worst


def _check_alphabet(*series: NcSeries):
    ds = {s.d for s in series}
    if len(ds) != 1:
        raise ValueError(f"alphabet mismatch: {sorted(ds)}")


def series_multiply(S: NcSeries, U: NcSeries, order: int | None = None) -> NcSeries:
    """Cauchy product over word factorizations ``beta gamma = alpha``."""
    _check_alphabet(S, U)
    if S.in_dim != U.out_dim:
        raise ValueError(f"inner dimensions differ: {S.in_dim} vs {U.out_dim}")
    common = min(S.order, U.order)
    order = common if order is None else min(order, common)
    out: dict[tuple, np.ndarray] = {}
    dropped = False
    u_items = sorted(U.coeffs.items(), key=lambda kv: len(kv[0]))
    for b, sb in S.coeffs.items():
        room = order - len(b)
        if room < 0:
            dropped = True
            continue
        for g, ug in u_items:
            if len(g) > room:
                dropped = True
                break
            w = b + g
            term = sb @ ug
            if w in out:
                out[w] = out[w] + term
            else:
                out[w] = term
    flag = S.truncated or U.truncated or dropped
    return NcSeries(S.d, order, S.out_dim, U.in_dim, out, flag)


def sharp(S: NcSeries) -> NcSeries:
    """Coefficient ``S_alpha^*`` placed at the reversed word."""
    return NcSeries(S.d, S.order, S.in_dim, S.out_dim,
                    {w[::-1]: c.conj().T for w, c in S.coeffs.items()}, S.truncated)


def invert_fps(S: NcSeries, rcond_min: float = 1e-10) -> NcSeries:
    """Formal inverse of a square series with invertible constant term."""
    if S.out_dim != S.in_dim:
        raise ValueError("only square series can be inverted")
    c0 = S.coef(())
    if S.out_dim == 0:
        return NcSeries(S.d, S.order, 0, 0, {})
    rc = 1.0 / np.linalg.cond(c0) if np.all(np.isfinite(c0)) else 0.0
    if not np.isfinite(rc) or rc < rcond_min:
        raise SingularConstantTerm(
            f"constant term reciprocal condition {rc:.3e} below {rcond_min:.1e}", rc)
    inv0 = np.linalg.inv(c0)
    out: dict[tuple, np.ndarray] = {(): inv0}
    for w in _words(S.d, S.order)[1:]:
        acc = np.zeros_like(inv0)
        for k in range(1, len(w) + 1):
            su = S.coeffs.get(w[:k])
            if su is not None:
                v = out.get(w[k:])
                if v is not None:
                    acc = acc + su @ v
        if np.any(acc != 0):
            out[w] = -inv0 @ acc
    return NcSeries(S.d, S.order, S.out_dim, S.in_dim, out, S.truncated)


def mult_matrix(S: NcSeries, order: int | None = None) -> np.ndarray:
    """Compression of left multiplication by ``S`` to words of length <= order.

    Block ``(alpha, gamma)`` equals ``S_beta`` when ``alpha = beta gamma``.
    """
    order = S.order if order is None else order
    if order > S.order:
        raise ValueError("requested order exceeds the series order")
    words = _words(S.d, order)
    idx = _index(S.d, order)
    p, m = S.shape
    M = np.zeros((len(words) * p, len(words) * m), dtype=complex)
    items = sorted(S.coeffs.items(), key=lambda kv: len(kv[0]))
    for j, g in enumerate(words):
        room = order - len(g)
        for b, sb in items:
            if len(b) > room:
                break
            i = idx[b + g]
            M[i * p:(i + 1) * p, j * m:(j + 1) * m] = sb
    return M


def mult_matrix_sparse(S: NcSeries, order: int | None = None):
    """Sparse (CSR) version of :func:`mult_matrix`."""
    from scipy import sparse

    order = S.order if order is None else order
    if order > S.order:
        raise ValueError("requested order exceeds the series order")
    words = _words(S.d, order)
    idx = _index(S.d, order)
    p, m = S.shape
    rr, cc = np.meshgrid(np.arange(p), np.arange(m), indexing="ij")
    rows, cols, vals = [], [], []
    items = sorted(S.coeffs.items(), key=lambda kv: len(kv[0]))
    for j, g in enumerate(words):
        room = order - len(g)
        for b, sb in items:
            if len(b) > room:
                break
            i = idx[b + g]
            rows.append(i * p + rr.ravel())
            cols.append(j * m + cc.ravel())
            vals.append(sb.ravel())
    shape = (len(words) * p, len(words) * m)
    if not vals:
        return sparse.csr_matrix(shape, dtype=complex)
    return sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=shape)


# ------------------------------------------------------ Fock operations


def fock_inner(f: NcSeries, g: NcSeries) -> complex:
    """``<f, g>`` summed over both supports (column vectors)."""
    total = 0.0 + 0.0j
    for w, c in f.coeffs.items():
        h = g.coeffs.get(w)
        if h is not None:
            total += np.vdot(h, c)
    return complex(total)


def fock_norm(f: NcSeries) -> float:
    return float(np.sqrt(sum(np.sum(np.abs(c) ** 2) for c in f.coeffs.values())))


def shift(j: int, f: NcSeries) -> NcSeries:
    """Right multiplication by ``z_j``; the top-degree layer overflows."""
    if not 1 <= j <= f.d:
        raise ValueError("letter out of range")
    out, dropped = {}, False
    for w, c in f.coeffs.items():
        if len(w) + 1 > f.order:
            dropped = True
        else:
            out[w + (j,)] = c
    return NcSeries(f.d, f.order, f.out_dim, f.in_dim, out, f.truncated or dropped)


def shift_adjoint(j: int, f: NcSeries) -> NcSeries:
    if not 1 <= j <= f.d:
        raise ValueError("letter out of range")
    out = {w[:-1]: c for w, c in f.coeffs.items() if w and w[-1] == j}
    return NcSeries(f.d, f.order, f.out_dim, f.in_dim, out, f.truncated)


def ev_empty(f: NcSeries) -> np.ndarray:
    return f.coef(())


# ------------------------------------------------------- realizations


def _as_tuple(T) -> list[np.ndarray]:
    return [np.atleast_2d(np.asarray(t, dtype=complex)) for t in T]


def realize_transfer(T, B, C, D, order: int) -> NcSeries:
    """Expand ``D + C (I - Z(z)T)^{-1} Z(z) B`` up to word length ``order``.

    ``T`` is a sequence of ``n x n`` matrices, ``B`` is the stacked
    ``(d n) x m`` column ``[B_1; ...; B_d]``. The coefficient at the word
    ``(l_1, ..., l_k, j)`` is ``C T_{l_1} ... T_{l_k} B_j``.
    """
    Ts = _as_tuple(T)
    d = len(Ts)
    D = np.atleast_2d(np.asarray(D, dtype=complex))
    n = Ts[0].shape[0] if Ts else 0
    C = np.asarray(C, dtype=complex).reshape(D.shape[0], n)
    B = np.asarray(B, dtype=complex).reshape(d * n, D.shape[1])
    if any(t.shape != (n, n) for t in Ts):
        raise ValueError("state matrices must be n x n with n = columns of C")
    Bj = [B[j * n:(j + 1) * n] for j in range(d)]
    coeffs = {(): D}
    # state[w] = T^{alpha} B_j for w = alpha + (j,); grow by prepending letters
    layer = {(j + 1,): Bj[j] for j in range(d)} if order >= 1 else {}
    length = 1
    while layer:
        for w, X in layer.items():
            coeffs[w] = C @ X
        if length == order:
            break
        nxt = {}
        for w, X in layer.items():
            for i in range(d):
                nxt[(i + 1,) + w] = Ts[i] @ X
        layer = nxt
        length += 1
    return NcSeries(d, order, D.shape[0], D.shape[1], coeffs, truncated=True)
