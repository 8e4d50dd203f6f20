"""Finite instances, weighted families, simplex measures and the two basic aggregates.

Every compact probe space is a finite point set, so suprema over it are
maxima over an axis of a tensor.  Tensors may hold signed values; absolute
values are taken when aggregates are evaluated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ParameterError(ValueError):
    """An exponent, tolerance or size argument is outside its admissible range."""


class ShapeError(ValueError):
    """Tensor shapes disagree with the declared sizes."""


def abs_pow(x, p):
    """``|x|**p`` elementwise, through logarithms when ``p < 1``.

    Zeros map to zero for every ``p > 0``.
    """
    x = np.abs(np.asarray(x, dtype=float))
    if p >= 1:
        return x ** p
    out = np.zeros_like(x)
    nz = x > 0
    out[nz] = np.exp(p * np.log(x[nz]))
    return out


def power_mean_root(total, p):
    """``total**(1/p)`` for a nonnegative aggregate."""
    if total <= 0:
        return 0.0
    return float(math.exp(math.log(total) / p))


@dataclass(frozen=True)
class ExponentParams:
    """Exponents ``p, q, s`` and the derived conjugate index ``r`` with 1/r = 1/q - 1/s."""

    q: float
    s: float
    p: float | None = None

    def __post_init__(self):
        q, s = float(self.q), float(self.s)
        if not (q > 0 and math.isfinite(q)):
            raise ParameterError(f"q must be a positive finite real, got {self.q}")
        if not math.isfinite(s):
            raise ParameterError("s = inf is not supported")
        if s < q:
            raise ParameterError(f"need q <= s, got q={q}, s={s}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "s", s)
        if self.p is None:
            object.__setattr__(self, "p", q)
        else:
            p = float(self.p)
            if not p > 0:
                raise ParameterError(f"p must be positive, got {self.p}")
            if p > q:
                raise ParameterError(f"mixing constants need p <= q, got p={p}, q={q}")
            object.__setattr__(self, "p", p)

    @property
    def equal(self) -> bool:
        return self.q == self.s

    @property
    def r(self) -> float:
        if self.equal:
            return math.inf
        return 1.0 / (1.0 / self.q - 1.0 / self.s)

    @property
    def u(self) -> float:
        return self.r / self.q

    @property
    def v(self) -> float:
        return self.s / self.q


def _as_tensor(x, ndim, name):
    arr = np.array(x, dtype=float)
    if arr.ndim != ndim:
        raise ShapeError(f"{name} must have {ndim} axes, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ShapeError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Instance:
    """One map T folded into three kernel tensors.

    Q has shape (nA, nC, nG); H has shape (nA, nC, nG, nK) and M has shape
    (nA, nC, nG, nW).  The last axis of H and M indexes the discretized
    compact spaces K and W.
    """

    Q: np.ndarray
    H: np.ndarray
    M: np.ndarray

    def __post_init__(self):
        Q = _as_tensor(self.Q, 3, "Q")
        H = _as_tensor(self.H, 4, "H")
        M = _as_tensor(self.M, 4, "M")
        if H.shape[:3] != Q.shape or M.shape[:3] != Q.shape:
            raise ShapeError(
                f"probe axes disagree: Q {Q.shape}, H {H.shape[:3]}, M {M.shape[:3]}"
            )
        if min(Q.shape) < 1 or H.shape[3] < 1 or M.shape[3] < 1:
            raise ShapeError("all sizes must be positive")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "M", M)

    @classmethod
    def zeros(cls, nA, nC, nG, nK, nW):
        return cls(np.zeros((nA, nC, nG)), np.zeros((nA, nC, nG, nK)), np.zeros((nA, nC, nG, nW)))

    @property
    def sizes(self):
        nA, nC, nG = self.Q.shape
        return {"nA": nA, "nC": nC, "nG": nG, "nK": self.H.shape[3], "nW": self.M.shape[3]}

    @property
    def probe_shape(self):
        return self.Q.shape

    @property
    def n_probes(self) -> int:
        return int(np.prod(self.Q.shape))

    @property
    def nK(self) -> int:
        return self.H.shape[3]

    @property
    def nW(self) -> int:
        return self.M.shape[3]

    def probe_index(self, flat):
        return np.unravel_index(flat, self.Q.shape)

    def with_Q(self, Q):
        return Instance(Q, self.H, self.M)

    def kernel(self, side):
        if side in ("K", "k", "H"):
            return self.H
        if side in ("W", "w", "M"):
            return self.M
        raise ParameterError(f"side must be 'K' or 'W', got {side!r}")

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return all(
            a.shape == b.shape and np.array_equal(a, b)
            for a, b in ((self.Q, other.Q), (self.H, other.H), (self.M, other.M))
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class WeightedFamily:
    """Entries ``(sigma_j, a_j, c_j, g_j)`` with every ``sigma_j`` nonzero."""

    sigma: np.ndarray
    a: np.ndarray
    c: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        sigma = np.array(self.sigma, dtype=float).reshape(-1)
        idx = [np.array(v, dtype=np.int64).reshape(-1) for v in (self.a, self.c, self.g)]
        if sigma.size < 1:
            raise ParameterError("a family needs at least one entry")
        if any(v.size != sigma.size for v in idx):
            raise ShapeError("sigma and index arrays must have equal length")
        if not np.all(np.isfinite(sigma)) or np.any(sigma == 0):
            raise ParameterError("every sigma must be a nonzero finite real")
        for name, v in zip("acg", idx):
            if np.any(v < 0):
                raise IndexError(f"negative index in {name}")
        for arr in (sigma, *idx):
            arr.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "a", idx[0])
        object.__setattr__(self, "c", idx[1])
        object.__setattr__(self, "g", idx[2])

    @classmethod
    def from_items(cls, items):
        items = list(items)
        if not items:
            raise ParameterError("a family needs at least one entry")
        sigma, a, c, g = zip(*items)
        return cls(sigma, a, c, g)

    @classmethod
    def from_flat(cls, sigma, flat, probe_shape):
        a, c, g = np.unravel_index(np.asarray(flat, dtype=np.int64), probe_shape)
        return cls(sigma, a, c, g)

    def __len__(self):
        return self.sigma.size

    def items(self):
        return [
            (float(s), int(a), int(c), int(g))
            for s, a, c, g in zip(self.sigma, self.a, self.c, self.g)
        ]

    def check(self, inst: Instance):
        for name, v, n in zip("acg", (self.a, self.c, self.g), inst.Q.shape):
            if np.any(v >= n):
                raise IndexError(f"index {name}={int(v.max())} out of range (size {n})")

    def scaled(self, lam):
        return WeightedFamily(self.sigma * lam, self.a, self.c, self.g)

    def __eq__(self, other):
        if not isinstance(other, WeightedFamily):
            return NotImplemented
        return self.items() == other.items()

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SimplexMeasure:
    """A probability vector on a finite index set."""

    weights: np.ndarray
    side: str = field(default="W")

    TOL = 1e-12

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.size < 1:
            raise ParameterError("a measure needs at least one atom")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ParameterError("measure weights must be finite and nonnegative")
        if abs(math.fsum(w) - 1.0) > self.TOL:
            raise ParameterError(f"measure weights sum to {math.fsum(w)!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def dirac(cls, i, n, side="W"):
        w = np.zeros(n)
        w[i] = 1.0
        return cls(w, side)

    @classmethod
    def uniform(cls, n, side="W"):
        return cls(np.full(n, 1.0 / n), side)

    @classmethod
    def normalized(cls, w, side="W"):
        """Project a nonnegative vector onto the simplex by rescaling."""
        w = np.clip(np.asarray(w, dtype=float).reshape(-1), 0.0, None)
        total = math.fsum(w)
        if total <= 0:
            raise ParameterError("cannot normalize a zero vector")
        w = w / total
        # push the rounding residue onto the largest atom
        w[np.argmax(w)] += 1.0 - math.fsum(w)
        return cls(w, side)

    def __len__(self):
        return self.weights.size

    def __eq__(self, other):
        if not isinstance(other, SimplexMeasure):
            return NotImplemented
        return self.side == other.side and np.array_equal(self.weights, other.weights)

    __hash__ = None


def _check_p(p):
    if not (p > 0 and math.isfinite(p)):
        raise ParameterError(f"exponent must be a positive finite real, got {p}")


def family_values(inst: Instance, fam: WeightedFamily, side=None):
    """Kernel values along the family: Q entries, or rows of H / M over K / W."""
    fam.check(inst)
    if side is None:
        return inst.Q[fam.a, fam.c, fam.g]
    return inst.kernel(side)[fam.a, fam.c, fam.g, :]


def strong_sum(inst: Instance, fam: WeightedFamily, p: float) -> float:
    """``[sum_j |sigma_j|^p |Q(a_j, c_j, g_j)|^p]^(1/p)``."""
    _check_p(p)
    vals = family_values(inst, fam)
    return power_mean_root(float(np.sum(abs_pow(fam.sigma, p) * abs_pow(vals, p))), p)


def weak_sup_rows(sigma, rows, p) -> float:
    """Max over columns of ``[sum_j |sigma_j|^p |rows[j, col]|^p]^(1/p)``."""
    col = abs_pow(sigma, p) @ abs_pow(rows, p)
    return power_mean_root(float(np.max(col)), p)


def weak_sup(inst: Instance, fam: WeightedFamily, p: float, side="K") -> float:
    """Weak aggregate: max over the K (or W) points of the weighted p-sum of kernel values."""
    _check_p(p)
    rows = family_values(inst, fam, side)
    return weak_sup_rows(fam.sigma, rows, p)
