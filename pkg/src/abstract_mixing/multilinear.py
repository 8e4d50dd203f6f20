"""Mixing constants for maps on product domains with several test kernels.

Joint indices are flattened row-major (``np.ravel_multi_index``, last factor
fastest).  A family entry carries one weight sigma_j, one joint a-index, one
joint c-index and one g-index per test kernel H_k; the witness kernel M is
read at the joint g-index.  The denominator of every ratio is the product
over k of the weak p_k-aggregate of H_k over K_k, all with the same sigma.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_model import ExponentParams, Instance, ParameterError, ShapeError, WeightedFamily, abs_pow, \
    power_mean_root, weak_sup_rows
from .mixed_families import MixedFamilyValues, mixed_norm, mixed_norm_closed_qq
from .mixing import CharacterizationResult, ModelError, SeminormBallModel, sample_vectors, seminorm_lhs
from .summing import DegenerateInstanceError, sample_family


@dataclass(frozen=True, eq=False)
class MultiFamily:
    """Weights with joint a/c indices and one g-index column per test kernel."""

    sigma: np.ndarray
    a: np.ndarray
    c: np.ndarray
    g: np.ndarray  # shape (m, s_count)

    def __len__(self):
        return self.sigma.size


@dataclass(frozen=True, eq=False)
class MultilinearInstance:
    a_sizes: tuple
    c_sizes: tuple
    g_sizes: tuple
    H: tuple
    M: np.ndarray
    p: tuple
    e: ExponentParams

    def __post_init__(self):
        a_sizes = tuple(int(n) for n in self.a_sizes)
        c_sizes = tuple(int(n) for n in self.c_sizes)
        g_sizes = tuple(int(n) for n in self.g_sizes)
        if not a_sizes or not c_sizes or not g_sizes or min(a_sizes + c_sizes + g_sizes) < 1:
            raise ShapeError("every factor list must be nonempty with positive sizes")
        nA, nC, nG = math.prod(a_sizes), math.prod(c_sizes), math.prod(g_sizes)
        H = []
        if len(self.H) != len(g_sizes):
            raise ShapeError(f"{len(self.H)} test kernels for {len(g_sizes)} g-factors")
        for k, (h, ng) in enumerate(zip(self.H, g_sizes)):
            h = np.array(h, dtype=float)
            if h.ndim != 4 or h.shape[:3] != (nA, nC, ng) or h.shape[3] < 1 or not np.all(np.isfinite(h)):
                raise ShapeError(f"H[{k}] must have shape ({nA}, {nC}, {ng}, nK), got {h.shape}")
            h.setflags(write=False)
            H.append(h)
        M = np.array(self.M, dtype=float)
        if M.ndim != 4 or M.shape[:3] != (nA, nC, nG) or M.shape[3] < 1 or not np.all(np.isfinite(M)):
            raise ShapeError(f"M must have shape ({nA}, {nC}, {nG}, nW), got {M.shape}")
        M.setflags(write=False)
        p = tuple(float(x) for x in self.p)
        if len(p) != len(g_sizes):
            raise ParameterError(f"{len(p)} exponents for {len(g_sizes)} test kernels")
        if any(not (0 < x <= self.e.q) for x in p):
            raise ParameterError(f"every p_k must satisfy 0 < p_k <= q = {self.e.q}, got {p}")
        for name, val in (("a_sizes", a_sizes), ("c_sizes", c_sizes), ("g_sizes", g_sizes),
                          ("H", tuple(H)), ("M", M), ("p", p)):
            object.__setattr__(self, name, val)

    @property
    def t(self):
        return len(self.a_sizes)

    @property
    def r_count(self):
        return len(self.c_sizes)

    @property
    def s_count(self):
        return len(self.g_sizes)

    @property
    def sample_sizes(self):
        return (math.prod(self.a_sizes), math.prod(self.c_sizes)) + self.g_sizes

    def joint_g(self, g):
        return np.ravel_multi_index(tuple(np.asarray(g).T), self.g_sizes)

    def M_rows(self, fam: MultiFamily):
        return self.M[fam.a, fam.c, self.joint_g(fam.g), :]

    def denominator(self, fam: MultiFamily) -> float:
        """Product over k of the weak p_k-aggregate of H_k over K_k."""
        out = 1.0
        for k, (h, pk) in enumerate(zip(self.H, self.p)):
            out *= weak_sup_rows(fam.sigma, h[fam.a, fam.c, fam.g[:, k], :], pk)
        return out

    def as_family(self, fam: MultiFamily) -> WeightedFamily:
        """The family seen by M: joint g-index in the third slot."""
        return WeightedFamily(fam.sigma, fam.a, fam.c, self.joint_g(fam.g))


def iter_multi_families(mi: MultilinearInstance, n_samples, seed):
    """Families with nonzero denominator, from the same stream as the single-factor sampler."""
    rng = np.random.default_rng(seed)
    drawn = tries = 0
    while drawn < n_samples and tries < 50 * max(1, n_samples):
        tries += 1
        sigma, idx = sample_family(rng, mi.sample_sizes)
        fam = MultiFamily(sigma, idx[:, 0], idx[:, 1], idx[:, 2:])
        if mi.denominator(fam) > 0:
            drawn += 1
            yield fam


def multi_mixing_ratio(mi: MultilinearInstance, fam: MultiFamily) -> float:
    den = mi.denominator(fam)
    if den <= 0:
        return math.nan
    return mixed_norm(MixedFamilyValues(fam.sigma, mi.M_rows(fam)), mi.e) / den


def multi_mixing_lower_bound(mi: MultilinearInstance, n_samples=200, seed=0, extra_families=()):
    """Best sampled ratio; returns ``(value, witness)``."""
    best, best_fam = -1.0, None
    for fam in list(extra_families) + list(iter_multi_families(mi, n_samples, seed)):
        r = multi_mixing_ratio(mi, fam)
        if r == r and r > best:
            best, best_fam = r, fam
    if best_fam is None:
        raise DegenerateInstanceError("every sampled family has zero denominator")
    return best, best_fam


def _check_ball(mi: MultilinearInstance, ball: SeminormBallModel):
    if ball.m_coeff.shape[:3] != mi.M.shape[:3] or ball.vertices.shape[0] != mi.M.shape[3]:
        raise ModelError(f"ball model shape {ball.m_coeff.shape[:3]} / {ball.vertices.shape[0]} vertices "
                         f"does not match M {mi.M.shape}")
    ref = ball.M_tensor()
    err = float(np.max(np.abs(ref - mi.M)))
    if err > 1e-12 * max(1.0, float(np.max(np.abs(ref)))):
        raise ModelError(f"M differs from the linear model by {err:g}")


def characterization_lhs(ball, fam: WeightedFamily, vectors, q, s, path="auto"):
    """Left side of the ball inequality.

    ``path="equal"`` uses the flat double sum valid for q = s; ``"general"`` the
    nested (q, s) form; ``"auto"`` picks by comparing q and s.
    """
    if path == "auto":
        path = "equal" if q == s else "general"
    if path == "equal":
        if q != s:
            raise ParameterError("the flat form needs q = s")
        vals = ball.m_coeff[fam.a, fam.c, fam.g] @ np.asarray(vectors, dtype=float).T
        return power_mean_root(float(np.sum(abs_pow(fam.sigma, q)[:, None] * abs_pow(vals, q))), q)
    return seminorm_lhs(ball, fam, vectors, q, s)


def multi_characterization_check(mi: MultilinearInstance, ball: SeminormBallModel, delta=math.inf,
                                 n_samples=200, seed=0, candidates=(), path="auto"):
    """Largest sampled LHS / RHS of the multi-kernel ball inequality; see ``check_seminorm_characterization``."""
    _check_ball(mi, ball)
    q, s = mi.e.q, mi.e.s
    vrng = np.random.default_rng([seed, 1])
    best, pair, count = 0.0, (None, None), 0

    def ratio(fam, vecs):
        den = mi.denominator(fam)
        pv = np.array([ball.P(v) for v in vecs])
        scale = power_mean_root(float(np.sum(abs_pow(pv, s))), s)
        if den <= 0 or scale <= 0:
            return math.nan
        return characterization_lhs(ball, mi.as_family(fam), vecs, q, s, path) / (den * scale)

    pairs = [(f, np.asarray(v, dtype=float)) for f, v in candidates]
    for fam, vecs in pairs:
        r = ratio(fam, vecs)
        count += 1
        if r == r and r > best:
            best, pair = r, (fam, vecs)
    for fam in iter_multi_families(mi, n_samples, seed):
        vecs = sample_vectors(vrng, ball)
        r = ratio(fam, vecs)
        count += 1
        if r == r and r > best:
            best, pair = r, (fam, vecs)
    return CharacterizationResult(best, bool(best <= delta + 1e-9), pair[0], pair[1], count)


def from_instance(inst: Instance, e: ExponentParams) -> MultilinearInstance:
    """The one-factor multilinear instance carrying the kernels of ``inst``."""
    nA, nC, nG = inst.probe_shape
    return MultilinearInstance((nA,), (nC,), (nG,), (inst.H,), inst.M, (e.p,), e)


def reduce_t1(mi: MultilinearInstance) -> Instance:
    """Single-factor instance (Q = 0) whose mixing computations agree with ``mi``."""
    if mi.t != 1 or mi.s_count != 1:
        raise ParameterError(f"reduction needs t = 1 and one test kernel, got t={mi.t}, s_count={mi.s_count}")
    H = mi.H[0]
    if H.shape[:3] != mi.M.shape[:3]:
        raise ShapeError("H and M probe axes disagree")
    return Instance(np.zeros(H.shape[:3]), H, mi.M)


def reduced_exponents(mi: MultilinearInstance) -> ExponentParams:
    return ExponentParams(mi.e.q, mi.e.s, mi.p[0])


def random_multilinear(rng, a_sizes=(2, 2), c_sizes=(1,), g_sizes=(1, 2), nK=(2, 3), nW=2, e=None, p=None,
                       ball=None):
    """Random instance with positive test kernels; M comes from ``ball`` when given."""
    e = e or ExponentParams(1.0, 2.0)
    nA, nC = math.prod(a_sizes), math.prod(c_sizes)
    H = tuple(rng.uniform(0.05, 1.0, size=(nA, nC, ng, nk)) for ng, nk in zip(g_sizes, nK))
    if ball is not None:
        M = ball.M_tensor()
    else:
        M = rng.uniform(-1.0, 1.0, size=(nA, nC, math.prod(g_sizes), nW))
    p = p or tuple(e.q for _ in g_sizes)
    return MultilinearInstance(a_sizes, c_sizes, g_sizes, H, M, p, e)
