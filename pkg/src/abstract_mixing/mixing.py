"""Mixing constants and the inequalities that relate them.

``mixing_lower_bound`` evaluates the defining ratio (mixed norm over the
weak p-aggregate) on sampled families.  ``mixing_upper_domination`` computes
the same constant for p = q through measures: for each measure mu on W an LP
finds the best nu on K with

    (sum_w mu_w |M|^s)^(1/s) <= delta (sum_k nu_k |H|^q)^(1/q)

at every probe, and the constant is the largest such delta over mu.  The
outer maximization uses a simplex lattice, a halving pattern search, and a
monotone dual-ascent polish: the LP dual at mu is a family whose mixed-norm
measure problem is concave, and its maximizer never lowers the LP value.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import lp_solver
from .core_model import (
    ExponentParams,
    Instance,
    ParameterError,
    ShapeError,
    SimplexMeasure,
    WeightedFamily,
    abs_pow,
    family_values,
    power_mean_root,
    weak_sup,
    weak_sup_rows,
)
from .mixed_families import MixedFamilyValues, maximize_concave_on_simplex, mixed_norm
from .summing import (
    DegenerateInstanceError,
    DominationCertificate,
    NotSummableError,
    pietsch_norm_lp,
    sample_family,
    solve_domination,
    witness_from_dual,
)

MAX_NW = 6
_LATTICE = {1: 1, 2: 8, 3: 6, 4: 4, 5: 3, 6: 2}


class NotMixingError(NotSummableError):
    """Some probe has a nonzero M row and an identically zero H row; the constant is infinite."""


class PreconditionError(ValueError):
    def __init__(self, message, condition=None, index=None, violation=None):
        super().__init__(message)
        self.condition = condition
        self.index = index
        self.violation = violation


class ModelError(ValueError):
    pass


# ---------------------------------------------------------------- lower bound


def family_mixing_ratio(inst: Instance, fam: WeightedFamily, e: ExponentParams, p=None) -> float:
    """Mixed (s;q)-norm of the family's M rows over its weak p-aggregate on K; nan if that is 0."""
    p = e.p if p is None else p
    den = weak_sup(inst, fam, p, "K")
    if den <= 0:
        return math.nan
    rows = family_values(inst, fam, "W")
    return mixed_norm(MixedFamilyValues(fam.sigma, rows), e) / den


def iter_sampled_families(probe_shape, n_samples, seed, accept):
    """Yield ``n_samples`` accepted families drawn from ``default_rng(seed)``.

    ``accept(fam)`` decides whether a draw counts; rejected draws are resampled
    up to 50 times the sample budget.
    """
    rng = np.random.default_rng(seed)
    drawn = tries = 0
    while drawn < n_samples and tries < 50 * max(1, n_samples):
        tries += 1
        sigma, idx = sample_family(rng, probe_shape)
        fam = WeightedFamily(sigma, idx[:, 0], idx[:, 1], idx[:, 2])
        if accept(fam):
            drawn += 1
            yield fam


def mixing_lower_bound(inst: Instance, e: ExponentParams, p=None, n_samples=200, seed=0, extra_families=()):
    """Best sampled mixing ratio over random families; returns ``(value, witness)``."""
    p = e.p if p is None else float(p)
    if not (0 < p <= e.q):
        raise ParameterError(f"need 0 < p <= q, got p={p}, q={e.q}")
    best, best_fam = -1.0, None
    for fam in extra_families:
        r = family_mixing_ratio(inst, fam, e, p)
        if r == r and r > best:
            best, best_fam = r, fam

    def accept(fam):
        return weak_sup(inst, fam, p, "K") > 0

    for fam in iter_sampled_families(inst.probe_shape, n_samples, seed, accept):
        r = family_mixing_ratio(inst, fam, e, p)
        if r > best:
            best, best_fam = r, fam
    if best_fam is None:
        raise DegenerateInstanceError("every sampled family has zero weak aggregate")
    return best, best_fam


# ---------------------------------------------------------- domination route


def _flat(inst):
    n = inst.n_probes
    return abs_pow(inst.M, 1.0).reshape(n, inst.nW), abs_pow(inst.H, 1.0).reshape(n, inst.nK)


class _DominationProblem:
    """Inner LP for a measure on W, and its dual-ascent step."""

    def __init__(self, inst: Instance, e: ExponentParams):
        self.inst = inst
        self.e = e
        Mabs, Habs = _flat(inst)
        self.Ms = abs_pow(Mabs, e.s)
        self.Hq = abs_pow(Habs, e.q)
        live = np.any(self.Ms > 0, axis=1)
        dead = live & ~np.any(self.Hq > 0, axis=1)
        if np.any(dead):
            idx = tuple(int(i) for i in np.unravel_index(np.flatnonzero(dead)[0], inst.probe_shape))
            raise NotMixingError(f"probe {idx} has nonzero M row but zero H row", idx)
        self.calls = 0

    def rhs(self, mu):
        return abs_pow(self.Ms @ mu, self.e.q / self.e.s)

    def certificate(self, mu) -> DominationCertificate:
        self.calls += 1
        return solve_domination(self.rhs(mu), self.Hq, self.e.q, self.inst.probe_shape)

    def value(self, mu) -> float:
        return self.certificate(mu).delta

    def ascend(self, mu, cert):
        """Maximize sum_i y_i (Ms_i . mu)^(q/s) for the LP dual y at mu."""
        y = cert.dual
        live = y > 0
        if not np.any(live):
            return mu
        new, _, _, _ = maximize_concave_on_simplex(y[live], self.Ms[live], self.e.q / self.e.s, start=mu)
        return SimplexMeasure.normalized(new).weights


def simplex_lattice(n, k):
    """All points of the n-simplex with coordinates in multiples of 1/k."""
    pts = []
    for comb in itertools.combinations(range(k + n - 1), n - 1):
        prev, parts = -1, []
        for c in comb:
            parts.append(c - prev - 1)
            prev = c
        parts.append(k + n - 1 - prev - 1)
        pts.append(np.array(parts, dtype=float) / k)
    return pts


def maximize_over_simplex(fn, n, depth, polish=None, starts=3):
    """Maximize ``fn`` over the n-simplex.

    A coarse lattice picks the best ``starts`` points; from each, a pattern
    search moves mass between pairs of atoms with step sizes halved
    ``depth`` times, then ``polish(mu, value) -> (mu, value)`` refines.
    Returns ``(mu, value, evaluations)``.
    """
    if n == 1:
        mu = np.ones(1)
        val = fn(mu)
        if polish is not None:
            mu, val = polish(mu, val)
        return mu, val, 1
    k = _LATTICE.get(n, 2)
    evals = 0
    scored = []
    for pt in simplex_lattice(n, k):
        scored.append((fn(pt), tuple(pt)))
        evals += 1
    scored.sort(key=lambda t: (-t[0], t[1]))
    best_mu, best_val = None, -math.inf
    for val, pt in scored[:starts]:
        mu = np.array(pt)
        h = 1.0 / k
        for _ in range(depth):
            h *= 0.5
            for _move in range(4 * k):
                cand_best, cand_val = None, val
                for i in range(n):
                    for j in range(n):
                        if i == j or mu[j] <= 0:
                            continue
                        step = min(h, mu[j])
                        cand = mu.copy()
                        cand[i] += step
                        cand[j] -= step
                        v = fn(cand)
                        evals += 1
                        if v > cand_val * (1 + 1e-15):
                            cand_best, cand_val = cand, v
                if cand_best is None:
                    break
                mu, val = cand_best, cand_val
        if polish is not None:
            mu, val = polish(mu, val)
        if val > best_val:
            best_mu, best_val = mu, val
    return best_mu, best_val, evals


@dataclass(frozen=True, eq=False)
class DominationResult:
    value: float
    worst_mu: SimplexMeasure
    certificate: DominationCertificate
    witness: WeightedFamily | None
    lp_calls: int = 0

    def __iter__(self):
        # allows ``value, mu = mixing_upper_domination(...)``
        return iter((self.value, self.worst_mu))


def mixing_upper_domination(inst: Instance, e: ExponentParams, grid_depth: int = 10) -> DominationResult:
    """Mixing constant for p = q as the largest domination constant over measures on W."""
    if e.p != e.q:
        raise ParameterError("the domination route is stated for p = q")
    if inst.nW > MAX_NW:
        raise ParameterError(f"nW={inst.nW} exceeds the supported maximum {MAX_NW}")
    prob = _DominationProblem(inst, e)

    def polish(mu, val):
        for _ in range(50):
            cert = prob.certificate(mu)
            new = prob.ascend(mu, cert)
            nval = prob.value(new)
            if not nval > val * (1 + 1e-13):
                if nval > val:
                    mu, val = new, nval
                break
            mu, val = new, nval
        return mu, val

    mu, val, _ = maximize_over_simplex(prob.value, inst.nW, grid_depth, polish)
    worst = SimplexMeasure.normalized(mu)
    cert = prob.certificate(worst.weights)
    witness = None
    if cert.dual is not None and np.any(cert.dual > 0):
        witness = witness_from_dual(cert.dual, e.q, inst.probe_shape)
    return DominationResult(cert.delta, worst, cert, witness, prob.calls)


def domination_certificate_at(inst: Instance, e: ExponentParams, mu) -> DominationCertificate:
    mu = mu.weights if isinstance(mu, SimplexMeasure) else np.asarray(mu, dtype=float)
    return _DominationProblem(inst, e).certificate(mu)


def mixing_constant(inst: Instance, e: ExponentParams, grid_depth=10) -> float:
    return mixing_upper_domination(inst, e, grid_depth).value


# ------------------------------------------------------- seminorm-ball model


def gauge(vertices, v) -> float:
    """Minkowski functional of conv(vertices) at v, via an LP over convex weights."""
    V = np.asarray(vertices, dtype=float)
    v = np.asarray(v, dtype=float).reshape(-1)
    if not np.any(v):
        return 0.0
    sol = lp_solver.solve(lp_solver.LpProblem(np.ones(V.shape[0]), V.T, v, "="))
    if not sol.optimal:
        raise ModelError("vector lies outside the span of the ball vertices")
    return sol.objective


@dataclass(frozen=True, eq=False)
class SeminormBallModel:
    """Linear witness space: M(a, c, g, v) = <m_coeff[a, c, g], v> on R^d with a polytope ball.

    ``vertices`` is a symmetric list of points of norm one; P is the gauge of
    their convex hull unless ``functionals`` are given, in which case
    ``P(v) = max_i |<functionals[i], v>|``.
    """

    vertices: np.ndarray
    m_coeff: np.ndarray
    functionals: np.ndarray | None = None

    def __post_init__(self):
        V = np.array(self.vertices, dtype=float)
        C = np.array(self.m_coeff, dtype=float)
        if V.ndim != 2 or C.ndim != 4 or C.shape[3] != V.shape[1]:
            raise ShapeError(f"vertices {V.shape} and m_coeff {C.shape} disagree on d")
        F = None if self.functionals is None else np.array(self.functionals, dtype=float).reshape(-1, V.shape[1])
        object.__setattr__(self, "vertices", V)
        object.__setattr__(self, "m_coeff", C)
        object.__setattr__(self, "functionals", F)
        for v in V:
            if not np.any(np.all(np.abs(V + v) <= 1e-12, axis=1)):
                raise ModelError(f"vertex list is not symmetric: -{v.tolist()} missing")
        for v in V:
            pv = self.P(v)
            if abs(pv - 1.0) > 1e-12:
                raise ModelError(f"P({v.tolist()}) = {pv!r}, vertices must have P = 1")

    @classmethod
    def linf(cls, m_coeff):
        d = np.asarray(m_coeff).shape[-1]
        verts = np.array(list(itertools.product((1.0, -1.0), repeat=d)))
        return cls(verts, m_coeff, np.eye(d))

    @property
    def d(self):
        return self.vertices.shape[1]

    def P(self, v) -> float:
        if self.functionals is not None:
            return float(np.max(np.abs(self.functionals @ np.asarray(v, dtype=float))))
        return gauge(self.vertices, v)

    def M_tensor(self):
        return np.einsum("acgd,wd->acgw", self.m_coeff, self.vertices)

    def instance(self, Q, H):
        return Instance(Q, H, self.M_tensor())

    def check_instance(self, inst: Instance):
        if inst.nW != self.vertices.shape[0] or inst.probe_shape != self.m_coeff.shape[:3]:
            raise ModelError(
                f"instance W has {inst.nW} points / probes {inst.probe_shape}; "
                f"ball has {self.vertices.shape[0]} vertices / probes {self.m_coeff.shape[:3]}"
            )
        ref = self.M_tensor()
        err = np.max(np.abs(ref - inst.M))
        if err > 1e-12 * max(1.0, float(np.max(np.abs(ref)))):
            raise ModelError(f"instance M differs from the linear model by {err:g}")


@dataclass(frozen=True, eq=False)
class CharacterizationResult:
    max_ratio: float
    holds: bool
    family: WeightedFamily | None = None
    vectors: np.ndarray | None = None
    evaluated: int = 0


def seminorm_lhs(ball: SeminormBallModel, fam: WeightedFamily, vectors, q, s):
    """``[sum_j |sigma_j|^q (sum_k |<m_j, v_k>|^s)^(q/s)]^(1/q)``."""
    vals = np.abs(ball.m_coeff[fam.a, fam.c, fam.g] @ np.asarray(vectors, dtype=float).T)
    inner = np.sum(abs_pow(vals, s), axis=1)
    return power_mean_root(float(np.sum(abs_pow(fam.sigma, q) * abs_pow(inner, q / s))), q)


def seminorm_ratio(inst, ball, fam, vectors, e: ExponentParams, p):
    den = weak_sup(inst, fam, p, "K")
    pv = np.array([ball.P(v) for v in vectors])
    scale = power_mean_root(float(np.sum(abs_pow(pv, e.s))), e.s)
    if den <= 0 or scale <= 0:
        return math.nan
    return seminorm_lhs(ball, fam, vectors, e.q, e.s) / (den * scale)


def extremal_vectors(ball: SeminormBallModel, mu, s):
    """Vectors mu_k^(1/s) * vertex_k realizing the measure mu on the vertices."""
    w = mu.weights if isinstance(mu, SimplexMeasure) else np.asarray(mu, dtype=float)
    keep = w > 0
    return ball.vertices[keep] * abs_pow(w[keep], 1.0 / s)[:, None]


def sample_vectors(rng, ball: SeminormBallModel, max_n=4):
    n = int(rng.integers(1, max_n + 1))
    nv = ball.vertices.shape[0]
    weights = rng.dirichlet(np.ones(nv), size=n)
    scale = np.exp(rng.uniform(-1.0, 1.0, size=n))
    return (weights @ ball.vertices) * scale[:, None]


def check_seminorm_characterization(inst, ball, e: ExponentParams, p=None, delta=math.inf, n_samples=200, seed=0,
                                    candidates=()):
    """Largest sampled ratio LHS / RHS of the seminorm-ball characterization.

    Families are drawn from the same stream as ``mixing_lower_bound`` with the
    same seed; vector tuples from an independent stream.  ``candidates`` are
    extra ``(family, vectors)`` pairs.  ``holds`` is ``max_ratio <= delta + 1e-9``.
    """
    ball.check_instance(inst)
    p = e.p if p is None else float(p)
    vrng = np.random.default_rng([seed, 1])
    best, best_pair, count = 0.0, (None, None), 0
    for fam, vecs in candidates:
        r = seminorm_ratio(inst, ball, fam, vecs, e, p)
        count += 1
        if r == r and r > best:
            best, best_pair = r, (fam, np.asarray(vecs))

    def accept(fam):
        return weak_sup(inst, fam, p, "K") > 0

    for fam in iter_sampled_families(inst.probe_shape, n_samples, seed, accept):
        vecs = sample_vectors(vrng, ball)
        r = seminorm_ratio(inst, ball, fam, vecs, e, p)
        count += 1
        if r == r and r > best:
            best, best_pair = r, (fam, vecs)
    return CharacterizationResult(best, bool(best <= delta + 1e-9), best_pair[0], best_pair[1], count)


# ---------------------------------------------------------- two-layer models


@dataclass(frozen=True, eq=False)
class TwoLayerInstance:
    """A map T: A -> B (index table) followed by S on B.

    Probes of the A-layer are (a, c, g); B-layer probes are (b, c1, g) and a
    probe (a, c, g) is sent to (T_map[a], c_map[c], g).  W is shared by H1, M,
    M1 and M2.
    """

    T_map: np.ndarray
    Q1: np.ndarray
    H1: np.ndarray
    Q2: np.ndarray
    H: np.ndarray
    M: np.ndarray
    M1: np.ndarray
    M2: np.ndarray
    c_map: np.ndarray | None = None

    def __post_init__(self):
        arrs = {}
        for name, nd in (("Q1", 3), ("H1", 4), ("Q2", 3), ("H", 4), ("M", 4), ("M1", 4), ("M2", 4)):
            a = np.array(getattr(self, name), dtype=float)
            if a.ndim != nd or not np.all(np.isfinite(a)):
                raise ShapeError(f"{name} must be a finite {nd}-axis tensor, got shape {a.shape}")
            a.setflags(write=False)
            arrs[name] = a
        nA, nC, nG = arrs["Q2"].shape
        nB, nC1, nG1 = arrs["Q1"].shape
        nW = arrs["M"].shape[3]
        checks = [
            (arrs["H"].shape[:3] == (nA, nC, nG), "H"),
            (arrs["M"].shape[:3] == (nA, nC, nG), "M"),
            (arrs["M2"].shape == (nA, nC, nG, nW), "M2"),
            (arrs["H1"].shape == (nB, nC1, nG, nW), "H1"),
            (arrs["M1"].shape == (nB, nC1, nG, nW), "M1"),
            (nG1 == nG, "Q1"),
        ]
        for ok, name in checks:
            if not ok:
                raise ShapeError(f"{name} has an inconsistent shape")
        T = np.array(self.T_map, dtype=np.int64).reshape(-1)
        if T.size != nA or np.any(T < 0) or np.any(T >= nB):
            raise ShapeError("T_map must send every a in range(nA) into range(nB)")
        if self.c_map is None:
            if nC != nC1:
                raise ShapeError("c_map is required when nC != nC1")
            cm = np.arange(nC)
        else:
            cm = np.array(self.c_map, dtype=np.int64).reshape(-1)
            if cm.size != nC or np.any(cm < 0) or np.any(cm >= nC1):
                raise ShapeError("c_map must send range(nC) into range(nC1)")
        T.setflags(write=False)
        cm.setflags(write=False)
        object.__setattr__(self, "T_map", T)
        object.__setattr__(self, "c_map", cm)
        for k, v in arrs.items():
            object.__setattr__(self, k, v)

    @property
    def sizes(self):
        nA, nC, nG = self.Q2.shape
        nB, nC1, _ = self.Q1.shape
        return {"nA": nA, "nB": nB, "nC": nC, "nC1": nC1, "nG": nG, "nK": self.H.shape[3], "nW": self.M.shape[3]}

    def pull_back(self, tensor):
        """Compose a B-layer tensor with the probe map: X(T a, c_map c, g, ...)."""
        return tensor[self.T_map][:, self.c_map]

    def layer_T(self):
        """Instance of T itself: (Q2, H, M)."""
        return Instance(self.Q2, self.H, self.M)

    def layer_S_summing(self):
        """S as an H1-Q1 summing instance with probe space W."""
        return Instance(self.Q1, self.H1, self.M1)

    def layer_S_mixing(self):
        """S as an H1-M1 mixing instance: K-space W for H1, W for M1."""
        return Instance(self.Q1, self.H1, self.M1)

    def layer_ST(self):
        """S o T for the H-Q2 summing and H-M2 mixing questions."""
        return Instance(self.Q2, self.H, self.M2)


def check_conditions(two: TwoLayerInstance):
    """Worst signed violation and its index for each pointwise condition.

    II: |Q2(a,c,g)| <= |Q1(Ta,c,g)|;  V: |M2| <= |M1(Ta,...)|;  VI: |H1(Ta,...)| <= |M|.
    """
    pairs = {
        "II": (np.abs(two.Q2), np.abs(two.pull_back(two.Q1))),
        "V": (np.abs(two.M2), np.abs(two.pull_back(two.M1))),
        "VI": (np.abs(two.pull_back(two.H1)), np.abs(two.M)),
    }
    report = {}
    for name, (lhs, rhs) in pairs.items():
        diff = lhs - rhs
        flat = int(np.argmax(diff))
        report[name] = {
            "violation": float(diff.reshape(-1)[flat]),
            "index": tuple(int(i) for i in np.unravel_index(flat, diff.shape)),
        }
    return report


def _require(two, names, tol=1e-12):
    rep = check_conditions(two)
    for name in names:
        if rep[name]["violation"] > tol:
            raise PreconditionError(
                f"Condition ({name}) violated by {rep[name]['violation']:g} at index {rep[name]['index']}",
                condition=name, index=rep[name]["index"], violation=rep[name]["violation"],
            )


@dataclass(frozen=True)
class InequalityCheck:
    lhs: float
    rhs: float
    holds: bool
    details: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.holds))


def _le(lhs, rhs, rel):
    return bool(lhs <= rhs + rel * max(abs(rhs), 1e-300) or lhs <= rhs)


def check_composition_summing(two: TwoLayerInstance, e: ExponentParams, grid_depth=10, rel_tol=1e-6):
    """Summing norm of S o T at q against pi_s(S) times the ((s;q),q) mixing constant of T."""
    _require(two, ("II", "VI"))
    lhs = pietsch_norm_lp(Instance(two.Q2, two.H, two.M), e.q).delta
    try:
        pi_s = pietsch_norm_lp(two.layer_S_summing(), e.s).delta
    except NotSummableError:
        pi_s = math.inf
    try:
        hm = mixing_upper_domination(two.layer_T(), ExponentParams(e.q, e.s), grid_depth).value
    except NotSummableError:
        hm = math.inf
    rhs = pi_s * hm if not (pi_s == 0 or hm == 0) else 0.0
    return InequalityCheck(lhs, rhs, _le(lhs, rhs, rel_tol), {"pi_s_S": pi_s, "HM_T": hm})


def check_inclusion(inst: Instance, e1: ExponentParams, e2: ExponentParams, grid_depth=10, rel_tol=1e-5):
    """Constants at (s1;q1) and (s2;q2); holds when c2 <= c1 for q1 <= q2 <= s2 <= s1."""
    if not (e1.q <= e2.q <= e2.s <= e1.s):
        raise ParameterError(f"need q1 <= q2 <= s2 <= s1, got {e1.q}, {e2.q}, {e2.s}, {e1.s}")
    c1 = mixing_upper_domination(inst, ExponentParams(e1.q, e1.s), grid_depth).value
    c2 = mixing_upper_domination(inst, ExponentParams(e2.q, e2.s), grid_depth).value
    return InequalityCheck(c2, c1, _le(c2, c1, rel_tol), {"c1": c1, "c2": c2})


def check_composition_mixing(two: TwoLayerInstance, q, s, t, grid_depth=10, rel_tol=1e-5):
    """((t;q),q) constant of S o T against the product of the S and T constants."""
    if not (q <= s <= t) or not math.isfinite(t):
        raise ParameterError(f"need q <= s <= t < inf, got q={q}, s={s}, t={t}")
    _require(two, ("V", "VI"))

    def hm(inst, e):
        try:
            return mixing_upper_domination(inst, e, grid_depth).value
        except NotSummableError:
            return math.inf

    lhs = hm(two.layer_ST(), ExponentParams(q, t))
    c_S = hm(two.layer_S_mixing(), ExponentParams(s, t))
    c_T = hm(two.layer_T(), ExponentParams(q, s))
    rhs = c_S * c_T if not (c_S == 0 or c_T == 0) else 0.0
    return InequalityCheck(lhs, rhs, _le(lhs, rhs, rel_tol), {"HM_S": c_S, "HM_T": c_T})


def random_two_layer(rng, nA=3, nB=3, nC=1, nG=1, nK=3, nW=2):
    """Random instance satisfying Conditions II, V and VI by pointwise min/max construction."""
    T_map = rng.integers(0, nB, size=nA)
    Q1 = rng.uniform(0.1, 2.0, size=(nB, nC, nG))
    H1 = rng.uniform(0.0, 1.0, size=(nB, nC, nG, nW))
    M1 = rng.uniform(0.0, 1.0, size=(nB, nC, nG, nW))
    H = rng.uniform(0.05, 1.0, size=(nA, nC, nG, nK))
    two = TwoLayerInstance(T_map, Q1, H1, np.zeros((nA, nC, nG)), H, np.zeros((nA, nC, nG, nW)),
                           M1, np.zeros((nA, nC, nG, nW)))
    Q2 = np.minimum(two.pull_back(Q1), rng.uniform(0.0, 2.0, size=(nA, nC, nG)))
    M = np.maximum(two.pull_back(H1), rng.uniform(0.0, 1.0, size=(nA, nC, nG, nW)))
    M2 = np.minimum(two.pull_back(M1), rng.uniform(0.0, 1.0, size=(nA, nC, nG, nW)))
    return TwoLayerInstance(T_map, Q1, H1, Q2, H, M, M1, M2)


def random_instance(rng, nA=2, nC=1, nG=1, nK=3, nW=2, signed=True):
    """Random instance with H bounded away from zero, so every constant is finite."""
    sign = (lambda shape: rng.choice([-1.0, 1.0], size=shape)) if signed else (lambda shape: 1.0)
    Q = rng.uniform(0.0, 2.0, size=(nA, nC, nG)) * sign((nA, nC, nG))
    H = rng.uniform(0.05, 1.0, size=(nA, nC, nG, nK)) * sign((nA, nC, nG, nK))
    M = rng.uniform(0.0, 1.0, size=(nA, nC, nG, nW)) * sign((nA, nC, nG, nW))
    return Instance(Q, H, M)
