"""Abstract p-summing norms on finite instances.

On a finite instance the best constant in the summing inequality is the
value of a small LP: find a measure ``lam >= 0`` on K with
``sum_k lam_k |H(probe, k)|^p >= |Q(probe)|^p`` for every probe while
minimizing ``sum_k lam_k``.  The optimum is ``delta**p`` and ``lam / delta**p``
is the dominating probability measure.  Dual multipliers are ``|sigma|^p``
weights of a family that attains the constant.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lp_solver
from .core_model import (
    Instance,
    ParameterError,
    SimplexMeasure,
    WeightedFamily,
    _check_p,
    abs_pow,
    power_mean_root,
    strong_sum,
    weak_sup,
)

CERT_TOL = 1e-9


class NotSummableError(ArithmeticError):
    """Some probe has |Q| > 0 while its whole H row vanishes; the norm is infinite."""

    def __init__(self, message, probe=None):
        super().__init__(message)
        self.probe = probe


class DegenerateInstanceError(ValueError):
    pass


class EmptyWitnessError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DominationCertificate:
    delta: float
    nu: SimplexMeasure
    max_violation: float
    dual: np.ndarray | None = None
    lp_value: float = 0.0

    @property
    def valid(self) -> bool:
        return self.max_violation <= CERT_TOL


def solve_domination(q_pow, h_pow, p, probe_shape=None):
    """Dominate the rows of ``q_pow`` by a measure on the columns of ``h_pow``.

    ``q_pow`` is a flat vector of p-th powers (one per probe) and ``h_pow`` the
    matching (probes x K) matrix of p-th powers.  Returns a certificate whose
    delta is the p-th root of the LP value.
    """
    q_pow = np.asarray(q_pow, dtype=float).reshape(-1)
    h_pow = np.asarray(h_pow, dtype=float).reshape(q_pow.size, -1)
    nK = h_pow.shape[1]
    bad = np.flatnonzero((q_pow > 0) & ~np.any(h_pow > 0, axis=1))
    if bad.size:
        probe = int(bad[0]) if probe_shape is None else tuple(int(i) for i in np.unravel_index(bad[0], probe_shape))
        raise NotSummableError(f"probe {probe} has nonzero Q but identically zero H row", probe)
    active = q_pow > 0
    if not np.any(active):
        nu = SimplexMeasure.uniform(nK, "K")
        return DominationCertificate(0.0, nu, float(np.max(q_pow - 0.0)), np.zeros(q_pow.size), 0.0)
    # probes with zero Q give the trivial row 0 >= 0 and are dropped
    rows = np.flatnonzero(active)
    prob = lp_solver.LpProblem(np.ones(nK), h_pow[rows], q_pow[rows], ">=")
    sol = lp_solver.solve(prob)
    if sol.status == "infeasible":
        raise NotSummableError("domination LP is infeasible")
    if not sol.optimal:
        raise lp_solver.SolverFailure(f"domination LP ended with status {sol.status}")
    lam = sol.x
    value = float(np.sum(lam))
    # the LP residual is ~1e-15; absorb it so the certificate is exactly valid
    slack = h_pow @ lam - q_pow
    short = np.max(-slack[rows] / np.maximum(q_pow[rows], 1e-300))
    if short > 0:
        lam = lam * (1.0 + short)
        value = float(np.sum(lam))
    nu = SimplexMeasure.normalized(lam, "K")
    dual = np.zeros(q_pow.size)
    dual[rows] = np.clip(sol.y, 0.0, None)
    viol = float(np.max(q_pow - value * (h_pow @ nu.weights)))
    return DominationCertificate(power_mean_root(value, p), nu, viol, dual, value)


def _flat_kernels(inst: Instance, p):
    q_pow = abs_pow(inst.Q, p).reshape(-1)
    h_pow = abs_pow(inst.H, p).reshape(inst.n_probes, inst.nK)
    return q_pow, h_pow


def pietsch_norm_lp(inst: Instance, p: float) -> DominationCertificate:
    """Smallest delta with ``|Q| <= delta (sum_k nu_k |H|^p)^(1/p)`` for one probability nu."""
    _check_p(p)
    q_pow, h_pow = _flat_kernels(inst, p)
    return solve_domination(q_pow, h_pow, p, inst.probe_shape)


def witness_from_dual(dual, p: float, probe_shape=None) -> WeightedFamily:
    """Family with one entry per probe carrying positive dual weight, sigma = dual**(1/p)."""
    _check_p(p)
    dual = np.asarray(dual, dtype=float).reshape(-1)
    if np.any(dual < 0):
        raise ParameterError("dual weights must be nonnegative")
    idx = np.flatnonzero(dual > 0)
    if idx.size == 0:
        raise EmptyWitnessError("dual vector is identically zero")
    sigma = np.exp(np.log(dual[idx]) / p)
    if probe_shape is None:
        probe_shape = (dual.size, 1, 1)
    return WeightedFamily.from_flat(sigma, idx, probe_shape)


def sample_family(rng, sizes, max_size=8):
    """Random family: size uniform on 1..max_size, indices uniform, log|sigma| uniform on [-2, 2].

    ``sizes`` lists the range of each index column.  Returns (sigma, index matrix).
    """
    m = int(rng.integers(1, max_size + 1))
    idx = np.column_stack([rng.integers(0, n, size=m) for n in sizes])
    mag = np.exp(rng.uniform(-2.0, 2.0, size=m))
    sign = np.where(rng.random(m) < 0.5, -1.0, 1.0)
    return mag * sign, idx


def summing_ratio(inst: Instance, fam: WeightedFamily, p: float) -> float:
    den = weak_sup(inst, fam, p, "K")
    if den <= 0:
        return float("nan")
    return strong_sum(inst, fam, p) / den


def ratio_lower_bound(inst: Instance, p: float, n_samples: int, seed: int, extra_families=()):
    """Best sampled ratio strong_sum / weak_sup; a lower bound for the summing norm.

    Families in ``extra_families`` are evaluated as well (e.g. the LP dual witness).
    Returns ``(value, witness)``.
    """
    _check_p(p)
    rng = np.random.default_rng(seed)
    best, best_fam = -1.0, None
    for fam in extra_families:
        r = summing_ratio(inst, fam, p)
        if r == r and r > best:
            best, best_fam = r, fam
    drawn = tries = 0
    max_tries = 50 * max(1, n_samples)
    while drawn < n_samples and tries < max_tries:
        tries += 1
        sigma, idx = sample_family(rng, inst.probe_shape)
        fam = WeightedFamily(sigma, idx[:, 0], idx[:, 1], idx[:, 2])
        r = summing_ratio(inst, fam, p)
        if r != r:
            continue
        drawn += 1
        if r > best:
            best, best_fam = r, fam
    if best_fam is None:
        raise DegenerateInstanceError("every sampled family has zero weak aggregate")
    return best, best_fam
