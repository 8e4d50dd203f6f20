"""Mixed (s;q)-norms of finite families.

Three routes to the same number:

* ``mixed_norm_closed_qq``: the q = s closed form, a weak q-aggregate over W.
* ``mixed_norm_sup_measure``: maximize the concave function
  ``mu -> sum_j |sigma_j|^q (sum_w mu_w M_jw^s)^(q/s)`` over the W-simplex.
* ``mixed_norm_tau_search``: minimize the defining product
  ``||tau||_r * max_w [sum_j |sigma_j / tau_j|^s M_jw^s]^(1/s)`` over tau > 0.

The first is exact for q = s; the last two bracket the value from below and
above for q < s.  ``tau_from_measure`` turns a maximizing measure into an
explicit tau whose product matches the supremum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.special import logsumexp

from .core_model import ExponentParams, ParameterError, ShapeError, SimplexMeasure, abs_pow, power_mean_root

FW_MAX_ITER = 10_000
FW_GAP_TOL = 1e-10
EPS_LADDER = (1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9)


class OptimizationError(RuntimeError):
    def __init__(self, message, best=None, gap=None):
        super().__init__(message)
        self.best = best
        self.gap = gap


@dataclass(frozen=True, eq=False)
class MixedFamilyValues:
    """Weights sigma (length m) and the m x nW matrix of |M| along the family."""

    sigma: np.ndarray
    M_values: np.ndarray

    def __post_init__(self):
        sigma = np.array(self.sigma, dtype=float).reshape(-1)
        M = np.abs(np.array(self.M_values, dtype=float))
        if M.ndim == 1:
            M = M.reshape(sigma.size, -1)
        if M.ndim != 2 or M.shape[0] != sigma.size or M.shape[1] < 1 or sigma.size < 1:
            raise ShapeError(f"M_values must be {sigma.size} x nW, got {M.shape}")
        if np.any(sigma == 0) or not np.all(np.isfinite(sigma)) or not np.all(np.isfinite(M)):
            raise ParameterError("sigma must be nonzero and all values finite")
        sigma.setflags(write=False)
        M.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "M_values", M)

    @property
    def m(self):
        return self.sigma.size

    @property
    def nW(self):
        return self.M_values.shape[1]

    @property
    def nonzero_rows(self):
        return np.any(self.M_values > 0, axis=1)


@dataclass(frozen=True, eq=False)
class MixedNormResult:
    value: float
    mu_star: SimplexMeasure
    tau: np.ndarray
    gap: float
    iterations: int = 0


def mixed_norm_closed_qq(vals: MixedFamilyValues, q: float) -> float:
    """Exact mixed norm when s = q: ``max_w [sum_j |sigma_j|^q M_jw^q]^(1/q)``."""
    if not q > 0:
        raise ParameterError("q must be positive")
    col = abs_pow(vals.sigma, q) @ abs_pow(vals.M_values, q)
    return power_mean_root(float(np.max(col)), q)


def measure_objective(vals: MixedFamilyValues, e: ExponentParams, mu) -> float:
    """``[sum_j |sigma_j|^q (sum_w mu_w M_jw^s)^(q/s)]^(1/q)`` for a fixed measure."""
    mu = mu.weights if isinstance(mu, SimplexMeasure) else np.asarray(mu, dtype=float)
    t = abs_pow(vals.M_values, e.s) @ mu
    total = float(np.sum(abs_pow(vals.sigma, e.q) * abs_pow(t, e.q / e.s)))
    return power_mean_root(total, e.q)


class _ConcaveObjective:
    """F(mu) = sum_j c_j (a_j . mu)^alpha with alpha in (0, 1]."""

    def __init__(self, c, a, alpha):
        self.c = c
        self.a = a
        self.alpha = alpha

    def value(self, mu):
        t = self.a @ mu
        return float(np.sum(self.c * _pos_pow(t, self.alpha)))

    def grad(self, mu):
        t = self.a @ mu
        coef = np.zeros_like(t)
        pos = t > 0
        coef[pos] = self.c[pos] * self.alpha * np.exp((self.alpha - 1.0) * np.log(t[pos]))
        g = coef @ self.a
        if self.alpha < 1 and np.any(~pos):
            # rows with t_j = 0: infinite slope towards every column they touch
            touched = np.any(self.a[~pos] > 0, axis=0)
            g = np.where(touched, np.inf, g)
        return g

    def hess(self, mu, support):
        t = self.a @ mu
        pos = t > 0
        coef = np.zeros_like(t)
        coef[pos] = self.c[pos] * self.alpha * (self.alpha - 1.0) * np.exp((self.alpha - 2.0) * np.log(t[pos]))
        aS = self.a[:, support]
        return (aS * coef[:, None]).T @ aS


def _pos_pow(t, alpha):
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(alpha * np.log(t[pos]))
    return out


def _fw_gap(obj, mu):
    g = obj.grad(mu)
    w = int(np.argmax(g))
    if not np.isfinite(g[w]):
        return math.inf, w, g
    return float(g[w] - g @ mu), w, g


def _line_search(obj, mu, w):
    e = np.zeros_like(mu)
    e[w] = 1.0
    d = e - mu

    def neg(gam):
        return -obj.value(mu + gam * d)

    res = minimize_scalar(neg, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-13})
    best_g, best_v = float(res.x), -float(res.fun)
    v1 = obj.value(e)
    if v1 >= best_v:
        best_g, best_v = 1.0, v1
    if best_v < obj.value(mu):
        return mu, obj.value(mu)
    new = mu + best_g * d
    new = np.clip(new, 0.0, None)
    return new / new.sum(), best_v


def _newton_face(obj, mu, max_iter=60):
    """Newton ascent restricted to the face spanned by the support of mu."""
    f = obj.value(mu)
    for _ in range(max_iter):
        S = np.flatnonzero(mu > 0)
        if S.size < 2:
            return mu, f
        g = obj.grad(mu)
        if not np.all(np.isfinite(g[S])):
            return mu, f
        gS = g[S]
        pg = float(np.max(np.abs(gS - gS.mean())))
        H = obj.hess(mu, S)
        k = S.size
        kkt = np.zeros((k + 1, k + 1))
        kkt[:k, :k] = H
        kkt[:k, k] = -1.0
        kkt[k, :k] = 1.0
        rhs = np.concatenate([-gS, [0.0]])
        d = np.linalg.lstsq(kkt, rhs, rcond=1e-13)[0][:k]
        d -= d.mean()
        if not gS @ d > 0:
            d = gS - gS.mean()
            if not gS @ d > 0:
                return mu, f
        neg = d < 0
        step_max = float(np.min(-mu[S][neg] / d[neg])) if np.any(neg) else math.inf
        step = min(1.0, step_max)
        improved = False
        for _ in range(60):
            cand = mu.copy()
            cand[S] = mu[S] + step * d
            if step == step_max:
                cand[S[neg][np.argmin(-mu[S][neg] / d[neg])]] = 0.0
            cand = np.clip(cand, 0.0, None)
            cand /= cand.sum()
            fc = obj.value(cand)
            if fc > f or (fc >= f - 4e-16 * abs(f) and _face_residual(obj, cand) < pg):
                improved = True
                break
            step *= 0.5
        if not improved:
            return mu, f
        mu, f = cand, fc
        if _face_residual(obj, mu) <= 1e-14 * max(abs(f), 1e-300):
            return mu, f
    return mu, f


def _face_residual(obj, mu):
    S = np.flatnonzero(mu > 0)
    g = obj.grad(mu)[S]
    if not np.all(np.isfinite(g)):
        return math.inf
    return float(np.max(np.abs(g - g.mean())))


def maximize_concave_on_simplex(c, a, alpha, start=None, tol=FW_GAP_TOL, max_iter=FW_MAX_ITER):
    """Frank-Wolfe with exact line search plus Newton polishing on the active face.

    Maximizes ``sum_j c_j (a_j . mu)^alpha`` over the simplex.  Returns
    ``(mu, value, fw_gap, iterations)``; the gap bounds the distance to the
    optimum from above because the objective is concave.
    """
    c = np.asarray(c, dtype=float)
    a = np.asarray(a, dtype=float)
    n = a.shape[1]
    obj = _ConcaveObjective(c, a, alpha)
    mu = np.full(n, 1.0 / n) if start is None else np.asarray(start, dtype=float).copy()
    f = obj.value(mu)
    gap = math.inf
    it = 0
    while it < max_iter:
        gap, w, _ = _fw_gap(obj, mu)
        if gap <= tol * max(f, 1e-300):
            break
        mu, f = _line_search(obj, mu, w)
        it += 1
        if it % 3 == 0 or gap < 1e-4 * max(f, 1e-300):
            mu, f = _newton_face(obj, mu)
    else:
        gap, _, _ = _fw_gap(obj, mu)
        if gap > tol * max(f, 1e-300):
            raise OptimizationError(
                f"Frank-Wolfe did not reach gap {tol} in {max_iter} iterations",
                best=mu, gap=gap,
            )
    return mu, f, gap, it


def _check_strict(e: ExponentParams):
    if not e.q < e.s:
        raise ParameterError(f"this route needs q < s, got q={e.q}, s={e.s}")


def mixed_norm_sup_measure(vals: MixedFamilyValues, e: ExponentParams) -> MixedNormResult:
    """Mixed norm as the supremum over probability measures on W."""
    _check_strict(e)
    nz = vals.nonzero_rows
    if not np.any(nz):
        return MixedNormResult(0.0, SimplexMeasure.uniform(vals.nW), np.ones(vals.m), 0.0)
    c = abs_pow(vals.sigma[nz], e.q)
    a = abs_pow(vals.M_values[nz], e.s)
    mu, f, fw_gap, it = maximize_concave_on_simplex(c, a, e.q / e.s)
    mu_star = SimplexMeasure.normalized(mu)
    value = measure_objective(vals, e, mu_star)
    tau, product = tau_limit(vals, e, mu_star)
    return MixedNormResult(value, mu_star, tau, max(product - value, 0.0), it)


def tau_objective(vals: MixedFamilyValues, e: ExponentParams, tau) -> float:
    """The defining product ``||tau||_r * max_w [sum_j |sigma_j/tau_j|^s M_jw^s]^(1/s)``."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0):
        raise ParameterError("tau must be positive")
    if e.equal:
        norm = float(np.max(tau))
    else:
        norm = power_mean_root(float(np.sum(abs_pow(tau, e.r))), e.r)
    col = abs_pow(vals.sigma / tau, e.s) @ abs_pow(vals.M_values, e.s)
    return norm * power_mean_root(float(np.max(col)), e.s)


def _xi(vals, e, mu):
    w = mu.weights if isinstance(mu, SimplexMeasure) else np.asarray(mu, dtype=float)
    if w.size != vals.nW:
        raise ShapeError(f"measure has {w.size} atoms, family has nW={vals.nW}")
    inner = abs_pow(vals.sigma, e.s) * (abs_pow(vals.M_values, e.s) @ w)
    return _pos_pow(inner, 1.0 / (e.u * e.v))


def tau_from_measure(vals: MixedFamilyValues, e: ExponentParams, mu, eps: float):
    """Reconstruct tau_j = (xi_j + eps)^(1/q) from a measure and return it with its product.

    ``xi_j = (sum_w mu_w |sigma_j|^s M_jw^s)^(1/(u v))`` with u = r/q, v = s/q.
    """
    _check_strict(e)
    if not (eps > 0 and math.isfinite(eps)):
        raise ParameterError(f"eps must be a positive finite real, got {eps}")
    tau = _pos_pow(_xi(vals, e, mu) + eps, 1.0 / e.q)
    return tau, tau_objective(vals, e, tau)


def tau_limit(vals: MixedFamilyValues, e: ExponentParams, mu):
    """The eps -> 0 limit of ``tau_from_measure``.

    Rows with xi_j = 0 get tau_j = 1 in the returned vector; the product is
    evaluated in the tau_j -> 0 limit, where those rows contribute nothing.
    """
    _check_strict(e)
    xi = _xi(vals, e, mu)
    live = xi > 0
    tau = np.ones(vals.m)
    tau[live] = _pos_pow(xi[live], 1.0 / e.q)
    if not np.any(live):
        return tau, 0.0
    sub = MixedFamilyValues(vals.sigma[live], vals.M_values[live])
    return tau, tau_objective(sub, e, tau[live])


def tau_product_limit(vals: MixedFamilyValues, e: ExponentParams, mu, ladder=EPS_LADDER):
    """Product value along a decreasing eps ladder, Richardson-extrapolated to eps = 0."""
    prods = [tau_from_measure(vals, e, mu, eps)[1] for eps in ladder]
    if len(prods) < 2:
        return prods[-1], prods
    ratio = ladder[-2] / ladder[-1]
    extrap = (ratio * prods[-1] - prods[-2]) / (ratio - 1.0)
    return extrap, prods


def mixed_norm_tau_search(vals: MixedFamilyValues, e: ExponentParams, restarts: int = 4, seed: int = 0) -> float:
    """Direct minimization of the defining product over tau > 0.

    Works in z = log tau on the normalized problem
    ``min (1/r) logsumexp(r z)  s.t.  log sum_j C_jw exp(-s z_j) <= 0`` for all w,
    which is convex; each start is solved by SLSQP and the product is
    re-evaluated exactly at the returned tau.  Always returns a finite upper bound.
    """
    _check_strict(e)
    nz = vals.nonzero_rows
    if not np.any(nz):
        return 0.0
    sub = MixedFamilyValues(vals.sigma[nz], vals.M_values[nz])
    best = tau_objective(sub, e, np.ones(sub.m))
    if sub.m == 1:
        return best
    r, s = e.r, e.s
    logC = np.full(sub.M_values.shape, -np.inf)
    C = abs_pow(sub.sigma, s)[:, None] * abs_pow(sub.M_values, s)
    logC[C > 0] = np.log(C[C > 0])
    cols = np.flatnonzero(np.any(C > 0, axis=0))
    logC = logC[:, cols]

    def cons_val(z):
        return -logsumexp(logC - s * z[:, None], axis=0)

    def cons_jac(z):
        L = logC - s * z[:, None]
        P = np.exp(L - logsumexp(L, axis=0))
        return (s * P).T

    def obj(z):
        return logsumexp(r * z) / r

    def obj_jac(z):
        return np.exp(r * z - logsumexp(r * z))

    rng = np.random.default_rng(seed)
    for k in range(max(1, restarts)):
        z0 = np.zeros(sub.m) if k == 0 else rng.normal(scale=1.0, size=sub.m)
        z0 = z0 + np.max(-cons_val(z0)) / s
        res = minimize(
            obj, z0, jac=obj_jac, method="SLSQP",
            constraints=[{"type": "ineq", "fun": cons_val, "jac": cons_jac}],
            options={"ftol": 1e-16, "maxiter": 1000},
        )
        z = res.x
        if not np.all(np.isfinite(z)):
            continue
        val = tau_objective(sub, e, np.exp(z - z.max()))
        if val < best:
            best = val
    return best


def family_values_from_rows(sigma, rows) -> MixedFamilyValues:
    return MixedFamilyValues(sigma, rows)


def mixed_norm(vals: MixedFamilyValues, e: ExponentParams) -> float:
    """Mixed norm by the exact route for the exponent pair."""
    if e.equal:
        return mixed_norm_closed_qq(vals, e.q)
    return mixed_norm_sup_measure(vals, e).value
