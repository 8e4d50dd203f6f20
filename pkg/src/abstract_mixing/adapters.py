"""Instances from linear operators and Lipschitz maps, and the L_s(mu) embedding layer.

Kernels store the undivided pairings <x, x*> and <Tx, b*>.  Formulations
that divide both sides by the weight sigma give the same ratios, since every
aggregate carries |sigma_j| on both sides.

The ``classical_*`` functions evaluate the measure criterion for mixing
directly from the matrix, the metrics and the nets, with scipy's LP and NLP
solvers in place of the package's own; they serve as an independent check of
the generic route on the same discretization.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog, minimize

from .core_model import ExponentParams, Instance, ParameterError, ShapeError, SimplexMeasure, abs_pow, \
    power_mean_root
from .mixing import TwoLayerInstance, maximize_over_simplex
from .summing import pietsch_norm_lp

NET_TOL = 1e-12
_DUAL_OF = {"max": "l1", "l1": "max", "l2": "l2"}


class ValidationError(ValueError):
    pass


def vector_norm(X, kind="max"):
    """Row norms for 'max', 'l1' or 'l2'."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if kind == "max":
        return np.max(np.abs(X), axis=1)
    if kind == "l1":
        return np.sum(np.abs(X), axis=1)
    if kind == "l2":
        return np.sqrt(np.sum(X * X, axis=1))
    raise ParameterError(f"unknown norm {kind!r}")


def coordinate_net(n):
    """The signed coordinate functionals +-e_i*, extreme points of the l1 ball."""
    eye = np.eye(n)
    return np.vstack([eye, -eye])


def default_probes(n):
    """Basis vectors e_i and the sums / differences e_i +- e_j for i < j."""
    rows = list(np.eye(n))
    for i, j in itertools.combinations(range(n), 2):
        for sgn in (1.0, -1.0):
            v = np.zeros(n)
            v[i], v[j] = 1.0, sgn
            rows.append(v)
    return np.array(rows)


@dataclass(frozen=True, eq=False)
class LinearOperatorSpec:
    """T maps E = R^nE into F = R^nF; nets are rows of functionals."""

    matrix: np.ndarray
    K_net: np.ndarray | None = None
    W_net: np.ndarray | None = None
    probes: np.ndarray | None = None
    domain_norm: str = "max"
    codomain_norm: str = "max"

    def __post_init__(self):
        T = np.atleast_2d(np.array(self.matrix, dtype=float))
        if T.ndim != 2 or not np.all(np.isfinite(T)):
            raise ShapeError("matrix must be a finite 2-D array")
        nF, nE = T.shape
        K = coordinate_net(nE) if self.K_net is None else np.atleast_2d(np.array(self.K_net, dtype=float))
        W = coordinate_net(nF) if self.W_net is None else np.atleast_2d(np.array(self.W_net, dtype=float))
        X = default_probes(nE) if self.probes is None else np.atleast_2d(np.array(self.probes, dtype=float))
        if K.shape[1] != nE or W.shape[1] != nF or X.shape[1] != nE:
            raise ShapeError(f"nets/probes {K.shape}, {W.shape}, {X.shape} do not match T of shape {T.shape}")
        if K.shape[0] == 0 or W.shape[0] == 0 or X.shape[0] == 0:
            raise ValidationError("nets and probes must be nonempty")
        for name, net, norm in (("K_net", K, self.domain_norm), ("W_net", W, self.codomain_norm)):
            if norm not in _DUAL_OF:
                raise ParameterError(f"unknown norm {norm!r}; expected one of {', '.join(_DUAL_OF)}")
            dn = vector_norm(net, _DUAL_OF[norm])
            if np.any(dn > 1 + NET_TOL):
                i = int(np.argmax(dn))
                raise ValidationError(f"{name}[{i}] has dual norm {dn[i]:.15g} > 1")
        for name, val in (("matrix", T), ("K_net", K), ("W_net", W), ("probes", X)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def nE(self):
        return self.matrix.shape[1]

    @property
    def nF(self):
        return self.matrix.shape[0]


def build_linear_instance(spec: LinearOperatorSpec) -> Instance:
    X = spec.probes
    TX = X @ spec.matrix.T
    H = X @ spec.K_net.T
    M = TX @ spec.W_net.T
    Q = np.max(np.abs(M), axis=1)
    n = X.shape[0]
    return Instance(Q.reshape(n, 1, 1), H.reshape(n, 1, 1, -1), M.reshape(n, 1, 1, -1))


def linear_codomain_rows(spec: LinearOperatorSpec):
    """Pairings <y, b*_w> for the default probe set of F, shaped (nB, 1, 1, nW)."""
    Y = default_probes(spec.nF)
    return (Y @ spec.W_net.T).reshape(Y.shape[0], 1, 1, -1)


# ------------------------------------------------------------------ Lipschitz


def check_metric(D, name="metric"):
    D = np.array(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1] or D.shape[0] < 1:
        raise ValidationError(f"{name} must be a square matrix")
    if not np.all(np.isfinite(D)) or np.any(D < 0):
        raise ValidationError(f"{name} must be finite and nonnegative")
    if np.max(np.abs(D - D.T)) > NET_TOL:
        i, j = np.unravel_index(int(np.argmax(np.abs(D - D.T))), D.shape)
        raise ValidationError(f"{name} is not symmetric at ({i}, {j})")
    if np.any(np.diag(D) != 0):
        raise ValidationError(f"{name} has a nonzero diagonal")
    # d(i, j) <= d(i, k) + d(k, j)
    viol = D[:, None, :] - D[:, :, None] - D.T[None, :, :]
    if np.max(viol) > NET_TOL:
        i, k, j = np.unravel_index(int(np.argmax(viol)), viol.shape)
        raise ValidationError(f"{name} violates the triangle inequality at ({i}, {k}, {j})")
    return D


def lipschitz_constant(f, D):
    f = np.asarray(f, dtype=float)
    diff = np.abs(f[:, None] - f[None, :])
    off = D > 0
    if np.any(diff[~off & ~np.eye(len(f), dtype=bool)] > 0):
        return np.inf
    return float(np.max(diff[off] / D[off], initial=0.0))


def distance_net(D):
    """Functions +-(d(., x) - d(0, x)) for every point x; each has Lip <= 1 and vanishes at 0."""
    D = np.asarray(D, dtype=float)
    F = D - D[0][None, :]
    F = F.T  # row x is d(., x) - d(0, x)
    return np.vstack([F, -F])


def check_net(net, D, name):
    for i, f in enumerate(np.atleast_2d(net)):
        if abs(f[0]) > NET_TOL:
            raise ValidationError(f"{name}[{i}] does not vanish at the base point")
        lip = lipschitz_constant(f, D)
        if lip > 1 + NET_TOL:
            raise ValidationError(f"{name}[{i}] has Lipschitz constant {lip:.15g} > 1")


@dataclass(frozen=True, eq=False)
class LipschitzMapSpec:
    """T sends point i of X to point T_map[i] of Y; base points are index 0."""

    d_X: np.ndarray
    d_Y: np.ndarray
    T_map: np.ndarray
    K_net: np.ndarray | None = None
    W_net: np.ndarray | None = None

    def __post_init__(self):
        DX = check_metric(self.d_X, "d_X")
        DY = check_metric(self.d_Y, "d_Y")
        T = np.array(self.T_map, dtype=np.int64).reshape(-1)
        if T.size != DX.shape[0] or np.any(T < 0) or np.any(T >= DY.shape[0]):
            raise ValidationError("T_map must send every point of X to a point of Y")
        K = distance_net(DX) if self.K_net is None else np.atleast_2d(np.array(self.K_net, dtype=float))
        W = distance_net(DY) if self.W_net is None else np.atleast_2d(np.array(self.W_net, dtype=float))
        if K.shape[1] != DX.shape[0] or W.shape[1] != DY.shape[0] or K.shape[0] == 0 or W.shape[0] == 0:
            raise ShapeError("nets must be nonempty lists of functions on the points")
        check_net(K, DX, "K_net")
        check_net(W, DY, "W_net")
        for name, val in (("d_X", DX), ("d_Y", DY), ("T_map", T), ("K_net", K), ("W_net", W)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    def pairs(self):
        n = self.d_X.shape[0]
        return [(i, j) for i in range(n) for j in range(n) if i != j]


def build_lipschitz_instance(spec: LipschitzMapSpec) -> Instance:
    pairs = spec.pairs()
    if not pairs:
        raise ValidationError("the domain needs at least two points")
    i, j = np.array(pairs).T
    Ti, Tj = spec.T_map[i], spec.T_map[j]
    H = spec.K_net[:, i].T - spec.K_net[:, j].T
    M = spec.W_net[:, Ti].T - spec.W_net[:, Tj].T
    Q = spec.d_Y[Ti, Tj]
    n = len(pairs)
    return Instance(Q.reshape(n, 1, 1), H.reshape(n, 1, 1, -1), M.reshape(n, 1, 1, -1))


def lipschitz_codomain_rows(spec: LipschitzMapSpec):
    """Differences g_w(y') - g_w(y'') over all ordered pairs of distinct points of Y."""
    n = spec.d_Y.shape[0]
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    if not pairs:
        return np.zeros((1, 1, 1, spec.W_net.shape[0]))
    i, j = np.array(pairs).T
    R = spec.W_net[:, i].T - spec.W_net[:, j].T
    return R.reshape(len(pairs), 1, 1, -1)


# ------------------------------------------------------ L_s(mu) embedding


def build_embedding_Jmu(inst: Instance, mu: SimplexMeasure, s: float, codomain_rows=None):
    """Two-layer instance with S the evaluation map into L_s(W, mu).

    B-layer probes are the image rows ``M(a, ., ., .)`` of ``inst`` (T maps a to
    its own row, so Condition (VI) holds with equality) followed by the
    optional ``codomain_rows`` (nB, 1, 1, nW), e.g. from ``linear_codomain_rows``.
    ``Q1(b) = (sum_w mu_w |H1(b, w)|^s)^(1/s)``.  Returns ``(layer, pi_check)``
    with ``pi_check`` the s-summing norm of S; it is at most 1 since nu = mu
    certifies it.
    """
    if not s >= 1:
        raise ParameterError(f"need s >= 1, got {s}")
    w = mu.weights if isinstance(mu, SimplexMeasure) else SimplexMeasure(mu).weights
    if w.size != inst.nW:
        raise ParameterError(f"measure has {w.size} atoms, W has {inst.nW} points")
    nA, nC, nG = inst.probe_shape
    image = inst.M
    if codomain_rows is None:
        H1 = image
    else:
        R = np.asarray(codomain_rows, dtype=float)
        if R.ndim != 4 or R.shape[3] != inst.nW:
            raise ShapeError(f"codomain rows must have shape (nB, nC, nG, {inst.nW}), got {R.shape}")
        if R.shape[1:3] != (nC, nG):
            R = np.broadcast_to(R[:, :1, :1, :], (R.shape[0], nC, nG, inst.nW))
        H1 = np.concatenate([image, R], axis=0)
    Q1 = np.array([[[power_mean_root(float(abs_pow(H1[b, c, g], s) @ w), s) for g in range(nG)]
                    for c in range(nC)] for b in range(H1.shape[0])])
    T_map = np.arange(nA)
    Q2 = Q1[:nA]
    layer = TwoLayerInstance(T_map, Q1, H1, Q2, inst.H, inst.M, H1, inst.M)
    pi = pietsch_norm_lp(Instance(Q1, H1, H1), s).delta
    return layer, pi


def embedding_domination_gap(layer: TwoLayerInstance, mu, s):
    """max over probes of (sum mu |M|^s)^(1/s) - Q2; nonpositive by construction."""
    w = mu.weights if isinstance(mu, SimplexMeasure) else np.asarray(mu, dtype=float)
    lhs = abs_pow(abs_pow(layer.M, s) @ w, 1.0 / s)
    return float(np.max(lhs - np.abs(layer.Q2)))


# -------------------------------------------------- direct classical criteria


class _ScipyDomination:
    """sup over mu of inf over nu: (mu . |m_x|^s)^(1/s) <= delta (nu . |h_x|^q)^(1/q) for all probes x."""

    def __init__(self, Mrows, Hrows, q, s):
        self.Ms = np.abs(Mrows) ** s
        self.Hq = np.abs(Hrows) ** q
        self.q, self.s = q, s

    def solve(self, mu):
        b = (self.Ms @ mu) ** (self.q / self.s)
        live = b > 0
        if not np.any(live):
            return 0.0, np.zeros(b.size)
        res = linprog(np.ones(self.Hq.shape[1]), A_ub=-self.Hq[live], b_ub=-b[live], bounds=(0, None),
                      method="highs")
        if res.status != 0:
            raise ArithmeticError(f"scipy linprog status {res.status}: {res.message}")
        y = np.zeros(b.size)
        y[live] = -res.ineqlin.marginals
        return max(res.fun, 0.0) ** (1.0 / self.q), np.clip(y, 0.0, None)

    def value(self, mu):
        return self.solve(np.asarray(mu, dtype=float))[0]

    def polish(self, mu, val):
        n = mu.size
        alpha = self.q / self.s
        for _ in range(50):
            _, y = self.solve(mu)

            def neg(m):
                return -float(y @ np.maximum(self.Ms @ m, 0.0) ** alpha)

            res = minimize(neg, mu, method="SLSQP", bounds=[(0.0, 1.0)] * n,
                           constraints=[{"type": "eq", "fun": lambda m: np.sum(m) - 1.0}],
                           options={"ftol": 1e-15, "maxiter": 500})
            new = np.clip(res.x, 0.0, None)
            new = new / new.sum()
            nval = self.value(new)
            if not nval > val * (1 + 1e-13):
                if nval > val:
                    mu, val = new, nval
                break
            mu, val = new, nval
        return mu, val


def classical_mixing_from_rows(Mrows, Hrows, q, s, grid_depth=10):
    prob = _ScipyDomination(Mrows, Hrows, q, s)
    _, val, _ = maximize_over_simplex(prob.value, Mrows.shape[1], grid_depth, prob.polish)
    return val


def classical_linear_mixing(spec: LinearOperatorSpec, q, s, grid_depth=10):
    """Measure criterion for (s;q)-mixing operators on the probe set and nets of ``spec``."""
    ExponentParams(q, s)
    X = spec.probes
    return classical_mixing_from_rows((X @ spec.matrix.T) @ spec.W_net.T, X @ spec.K_net.T, q, s, grid_depth)


def classical_lipschitz_mixing(spec: LipschitzMapSpec, q, s, grid_depth=10):
    """Measure criterion for Lipschitz (s;q)-mixing maps over ordered pairs of distinct points."""
    ExponentParams(q, s)
    G, F, T = spec.W_net, spec.K_net, spec.T_map
    n = spec.d_X.shape[0]
    Mrows, Hrows = [], []
    for x1 in range(n):
        for x2 in range(n):
            if x1 != x2:
                Mrows.append(G[:, T[x1]] - G[:, T[x2]])
                Hrows.append(F[:, x1] - F[:, x2])
    return classical_mixing_from_rows(np.array(Mrows), np.array(Hrows), q, s, grid_depth)


def random_linear_spec(rng, nE=2, nF=2):
    T = rng.uniform(-1.0, 1.0, size=(nF, nE))
    return LinearOperatorSpec(T)


def path_metric(n):
    x = np.arange(n, dtype=float)
    return np.abs(x[:, None] - x[None, :])


def random_metric(rng, n):
    """Shortest-path metric of a random complete weighted graph."""
    W = rng.uniform(0.5, 2.0, size=(n, n))
    D = np.triu(W, 1)
    D = D + D.T
    for k in range(n):
        D = np.minimum(D, D[:, k:k + 1] + D[k:k + 1, :])
    np.fill_diagonal(D, 0.0)
    return D


def random_lipschitz_spec(rng, nX=3, nY=3):
    return LipschitzMapSpec(random_metric(rng, nX), random_metric(rng, nY), rng.integers(0, nY, size=nX))
