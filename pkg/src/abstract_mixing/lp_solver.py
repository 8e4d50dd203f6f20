"""Dense two-phase simplex with Bland's rule and primal/dual extraction.

Problems have the form::

    minimize    c @ x
    subject to  A[i] @ x  (>= | <= | =)  b[i]
                x >= lower

The tableau is only used to walk between bases.  Once a basis is optimal the
primal and dual vectors are recomputed from the original data by dense
solves, which keeps residuals near machine precision on the small problems
this package produces.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_model import ParameterError

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-11
COST_TOL = 1e-12

GE, LE, EQ = ">=", "<=", "="
_SENSES = {">=": GE, "ge": GE, "<=": LE, "le": LE, "=": EQ, "==": EQ, "eq": EQ}


class SolverFailure(RuntimeError):
    """The simplex iteration cap was hit or the final basis could not be verified."""

    def __init__(self, message, iterations=None, phase=None):
        super().__init__(message)
        self.iterations = iterations
        self.phase = phase


@dataclass(frozen=True, eq=False)
class LpProblem:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    sense: tuple
    lower: np.ndarray | None = None

    def __post_init__(self):
        c = np.array(self.c, dtype=float).reshape(-1)
        A = np.array(self.A, dtype=float)
        if A.ndim == 1:
            A = A.reshape(1, -1)
        if A.size == 0:
            A = A.reshape(0, c.size)
        b = np.array(self.b, dtype=float).reshape(-1)
        if isinstance(self.sense, str):
            sense = (self.sense,) * b.size
        else:
            sense = tuple(self.sense)
        try:
            sense = tuple(_SENSES[s] for s in sense)
        except KeyError as exc:
            raise ParameterError(f"unknown constraint sense {exc.args[0]!r}") from None
        lower = np.zeros(c.size) if self.lower is None else np.array(self.lower, dtype=float).reshape(-1)
        m, n = A.shape
        if n != c.size or b.size != m or len(sense) != m or lower.size != n:
            raise ParameterError(
                f"dimension mismatch: A {A.shape}, c {c.size}, b {b.size}, "
                f"sense {len(sense)}, lower {lower.size}"
            )
        for name, arr in (("c", c), ("A", A), ("b", b), ("lower", lower)):
            if not np.all(np.isfinite(arr)):
                raise ParameterError(f"{name} has non-finite entries")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "sense", sense)
        object.__setattr__(self, "lower", lower)

    @property
    def shape(self):
        return self.A.shape


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: str
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    objective: float = math.nan
    dual_objective: float = math.nan
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def primal_residual(self, prob: LpProblem) -> float:
        ax = prob.A @ self.x
        viol = [float(np.max(prob.lower - self.x, initial=0.0))]
        for i, s in enumerate(prob.sense):
            d = ax[i] - prob.b[i]
            viol.append(max(-d, 0.0) if s == GE else max(d, 0.0) if s == LE else abs(d))
        return max(viol)

    def dual_residual(self, prob: LpProblem) -> float:
        red = prob.c - prob.A.T @ self.y
        viol = [float(np.max(-red, initial=0.0))]
        for i, s in enumerate(prob.sense):
            if s == GE:
                viol.append(max(-self.y[i], 0.0))
            elif s == LE:
                viol.append(max(self.y[i], 0.0))
        return max(viol)

    def slackness_gap(self, prob: LpProblem) -> float:
        """Complementary slackness, relative to the objective scale."""
        red = prob.c - prob.A.T @ self.y
        gap = abs(float(red @ (self.x - prob.lower))) + abs(float(self.y @ (prob.A @ self.x - prob.b)))
        return gap / max(1.0, abs(self.objective))


def _standard_form(prob: LpProblem):
    m, n = prob.A.shape
    b = prob.b - prob.A @ prob.lower
    A = prob.A.copy()
    sense = list(prob.sense)
    flip = np.ones(m)
    for i in range(m):
        if b[i] < 0:
            A[i] *= -1.0
            b[i] *= -1.0
            flip[i] = -1.0
            sense[i] = {GE: LE, LE: GE, EQ: EQ}[sense[i]]
    cols = [A]
    basis = np.empty(m, dtype=np.int64)
    artificial = []
    ncol = n
    for i in range(m):
        e = np.zeros((m, 1))
        e[i] = 1.0
        if sense[i] == LE:
            cols.append(e)
            basis[i] = ncol
            ncol += 1
        else:
            if sense[i] == GE:
                cols.append(-e)
                ncol += 1
            cols.append(e)
            basis[i] = ncol
            artificial.append(ncol)
            ncol += 1
    Astd = np.hstack(cols) if m else np.zeros((0, n))
    return Astd, b, flip, basis, np.array(artificial, dtype=np.int64)


class _Tableau:
    def __init__(self, Astd, b, basis):
        self.A = Astd
        self.b = b
        self.basis = basis.copy()
        self.T = np.hstack([Astd, b[:, None]])
        self.iterations = 0

    def refactor(self):
        m = self.A.shape[0]
        if m == 0:
            return
        B = self.A[:, self.basis]
        self.T = np.linalg.solve(B, np.hstack([self.A, self.b[:, None]]))
        self.T[np.arange(m), self.basis] = 1.0

    def pivot(self, row, col):
        T = self.T
        T[row] /= T[row, col]
        colv = T[:, col].copy()
        colv[row] = 0.0
        T -= np.outer(colv, T[row])
        T[:, col] = 0.0
        T[row, col] = 1.0
        self.basis[row] = col
        self.iterations += 1

    def run(self, cost, allowed, cap, phase):
        """Bland's-rule simplex from the current basis; returns 'optimal' or 'unbounded'."""
        m, N = self.A.shape
        scale = max(1.0, float(np.max(np.abs(cost), initial=0.0)))
        while True:
            if self.iterations > cap:
                raise SolverFailure(
                    f"simplex iteration cap {cap} exceeded in {phase}",
                    iterations=self.iterations, phase=phase,
                )
            red = cost - cost[self.basis] @ self.T[:, :N] if m else cost.copy()
            cand = np.flatnonzero(allowed & (red < -COST_TOL * scale))
            if cand.size == 0:
                return "optimal"
            col = int(cand[0])
            colv = self.T[:, col]
            rows = np.flatnonzero(colv > PIVOT_TOL)
            if rows.size == 0:
                return "unbounded"
            ratios = self.T[rows, -1] / colv[rows]
            best = ratios.min()
            tied = rows[ratios <= best + 1e-14 * max(1.0, abs(best))]
            row = int(tied[np.argmin(self.basis[tied])])
            self.pivot(row, col)


def solve(prob: LpProblem, max_iter: int | None = None) -> LpSolution:
    """Solve ``prob``; status is 'optimal', 'infeasible' or 'unbounded'."""
    m, n = prob.A.shape
    Astd, b, flip, basis, art = _standard_form(prob)
    N = Astd.shape[1]
    cap = max_iter if max_iter is not None else 50 * (m + N)
    tab = _Tableau(Astd, b, basis)
    is_art = np.zeros(N, dtype=bool)
    is_art[art] = True
    bscale = max(1.0, float(np.max(np.abs(b), initial=0.0)))

    if art.size:
        cost1 = is_art.astype(float)
        tab.run(cost1, np.ones(N, dtype=bool), cap, "phase 1")
        tab.refactor()
        infeas = float(np.sum(tab.T[is_art[tab.basis], -1]))
        if infeas > FEAS_TOL * bscale:
            return LpSolution("infeasible", iterations=tab.iterations)
        for row in range(m):
            if is_art[tab.basis[row]]:
                nz = np.flatnonzero(~is_art & (np.abs(tab.T[row, :N]) > PIVOT_TOL))
                if nz.size:
                    tab.pivot(row, int(nz[0]))
        # artificials still basic sit on redundant rows and stay at level 0

    cost2 = np.zeros(N)
    cost2[:n] = prob.c
    allowed = ~is_art
    status = "optimal"
    for _ in range(4):
        status = tab.run(cost2, allowed, cap, "phase 2")
        if status != "optimal":
            return LpSolution("unbounded", iterations=tab.iterations)
        tab.refactor()
        if m:
            red = cost2 - cost2[tab.basis] @ tab.T[:, :N]
            if not np.any(allowed & (red < -COST_TOL * max(1.0, np.max(np.abs(cost2))))) and np.all(
                tab.T[:, -1] >= -FEAS_TOL * bscale
            ):
                break
        else:
            break
    else:
        raise SolverFailure("basis failed verification after refactorization",
                            iterations=tab.iterations, phase="phase 2")

    z = np.zeros(N)
    y = np.zeros(m)
    if m:
        B = Astd[:, tab.basis]
        xb = np.linalg.solve(B, b)
        xb[np.abs(xb) < 1e-15 * bscale] = 0.0
        z[tab.basis] = np.clip(xb, 0.0, None)
        y = np.linalg.solve(B.T, cost2[tab.basis]) * flip
    x = prob.lower + z[:n]
    obj = float(prob.c @ x)
    dual_obj = float(prob.b @ y + (prob.c - prob.A.T @ y) @ prob.lower)
    return LpSolution("optimal", x=x, y=y, objective=obj, dual_objective=dual_obj,
                      iterations=tab.iterations)
