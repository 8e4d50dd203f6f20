import numpy as np
import pytest

from abstract_mixing.core_model import ParameterError
from abstract_mixing.lp_solver import LpProblem, SolverFailure, solve


def test_hand_solved_lp():
    sol = solve(LpProblem([1, 1], [[2, 1]], [1], ">="))
    assert sol.optimal
    assert sol.objective == pytest.approx(0.5)
    np.testing.assert_allclose(sol.x, [0.5, 0.0], atol=1e-12)
    assert sol.y[0] == pytest.approx(0.5)


def test_infeasible():
    assert solve(LpProblem([1], [[0]], [1], ">=")).status == "infeasible"


def test_bound_attained():
    sol = solve(LpProblem([1], [[1]], [0], ">="))
    assert sol.optimal and sol.objective == 0.0


def test_unbounded():
    assert solve(LpProblem([-1], [[1]], [0], ">=")).status == "unbounded"


def test_dimension_mismatch():
    with pytest.raises(ParameterError):
        LpProblem([1, 1], [[1]], [1], ">=")
    with pytest.raises(ParameterError):
        LpProblem([1], [[np.inf]], [1], ">=")
    with pytest.raises(ParameterError):
        LpProblem([1], [[1]], [1], "~")


def test_iteration_cap():
    with pytest.raises(SolverFailure) as info:
        solve(LpProblem([1, 1, 1], np.eye(3), [1, 1, 1], ">="), max_iter=0)
    assert info.value.phase is not None


def test_equality_and_lower_bounds():
    sol = solve(LpProblem([1, 2], [[1, 1]], [3], "=", lower=[1, 0.5]))
    assert sol.objective == pytest.approx(3.5)
    np.testing.assert_allclose(sol.x, [2.5, 0.5])
    assert sol.dual_objective == pytest.approx(sol.objective)


def random_lp(rng):
    m, n = int(rng.integers(1, 7)), int(rng.integers(1, 7))
    A = rng.normal(size=(m, n))
    x0 = rng.uniform(0, 1, n)
    sense = rng.choice([">=", "<=", "="], size=m)
    b = A @ x0
    # keep the feasible point strictly inside inequality rows
    b = np.where(sense == ">=", b - 0.1, np.where(sense == "<=", b + 0.1, b))
    c = rng.uniform(0.1, 2.0, n)  # positive costs and x >= 0 keep it bounded
    return LpProblem(c, A, b, tuple(sense))


@pytest.mark.parametrize("seed", range(100))
def test_strong_duality(seed):
    prob = random_lp(np.random.default_rng(seed))
    sol = solve(prob)
    assert sol.optimal
    scale = max(1.0, abs(sol.objective))
    assert abs(sol.objective - sol.dual_objective) <= 1e-9 * scale
    assert sol.primal_residual(prob) <= 1e-9
    assert sol.dual_residual(prob) <= 1e-9
    assert sol.slackness_gap(prob) <= 1e-9


@pytest.mark.parametrize("seed", range(20))
def test_row_scaling(seed):
    rng = np.random.default_rng(seed)
    prob = random_lp(rng)
    i = int(rng.integers(prob.A.shape[0]))
    lam = float(rng.uniform(0.2, 5.0))
    A, b = prob.A.copy(), prob.b.copy()
    A[i] *= lam
    b[i] *= lam
    s0, s1 = solve(prob), solve(LpProblem(prob.c, A, b, prob.sense))
    assert s1.objective == pytest.approx(s0.objective, rel=1e-9, abs=1e-12)
    # the optimal dual can be non-unique; check that the scaled dual is still optimal
    y = s0.y.copy()
    y[i] /= lam
    red = prob.c - A.T @ y
    assert np.all(red >= -1e-9)
    assert float(b @ y) == pytest.approx(s1.objective, rel=1e-9, abs=1e-12)


def test_deterministic():
    prob = random_lp(np.random.default_rng(7))
    a, b = solve(prob), solve(prob)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y) and a.objective == b.objective
