import numpy as np
import pytest

from blockprice.simplex import LinearProgram, dual_objective, solve_lp, solve_milp

from lp_oracle import vertex_enum_min


def lp(c, A, senses, b, lo=None, hi=None):
    n = len(c)
    return LinearProgram(
        c,
        np.asarray(A, float).reshape(len(b), n),
        senses,
        b,
        np.zeros(n) if lo is None else lo,
        np.full(n, np.inf) if hi is None else hi,
    )


def test_min_x_geq_one():
    sol = solve_lp(lp([1.0], [[1.0]], [">="], [1.0]))
    assert sol.optimal
    assert abs(sol.x[0] - 1.0) < 1e-9
    assert abs(sol.duals[0] - 1.0) < 1e-9
    assert abs(sol.objective - 1.0) < 1e-9


def test_infeasible_pair():
    sol = solve_lp(lp([0.0], [[1.0], [1.0]], [">=", "<="], [1.0, 0.0]))
    assert sol.status == "infeasible"


def test_leq_row_dual_sign():
    sol = solve_lp(lp([-1.0], [[1.0]], ["<="], [4.0]))
    assert sol.optimal
    assert abs(sol.x[0] - 4.0) < 1e-9
    assert abs(sol.objective + 4.0) < 1e-9
    assert abs(sol.duals[0] + 1.0) < 1e-9


def test_unbounded():
    sol = solve_lp(lp([-1.0], np.zeros((0, 1)), [], []))
    assert sol.status == "unbounded"


def test_equality_row():
    sol = solve_lp(lp([1.0, 1.0], [[1.0, 1.0]], ["="], [2.0]))
    assert sol.optimal
    assert abs(sol.objective - 2.0) < 1e-9


def test_bounded_variables_and_flips():
    # min -x1 - 2 x2 s.t. x1 + x2 <= 1.5, x in [0,1]^2
    sol = solve_lp(
        lp([-1.0, -2.0], [[1.0, 1.0]], ["<="], [1.5], lo=np.zeros(2), hi=np.ones(2))
    )
    assert sol.optimal
    assert abs(sol.objective + 2.5) < 1e-9
    assert abs(sol.x[1] - 1.0) < 1e-9


def test_crossed_bounds_infeasible():
    sol = solve_lp(lp([1.0], np.zeros((0, 1)), [], [], lo=np.array([2.0]), hi=np.array([1.0])))
    assert sol.status == "infeasible"


@pytest.mark.parametrize("seed", range(20))
def test_random_lps_against_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    m = int(rng.integers(1, 5))
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    xhat = rng.uniform(0, 2, n)
    senses = []
    b = np.zeros(m)
    for i in range(m):
        if rng.random() < 0.5:
            senses.append(">=")
            b[i] = A[i] @ xhat - abs(rng.normal())
        else:
            senses.append("<=")
            b[i] = A[i] @ xhat + abs(rng.normal())
    c = rng.uniform(0, 3, n)  # nonnegative costs keep the LP bounded over x >= 0
    problem = lp(c, A, senses, b)
    sol = solve_lp(problem)
    assert sol.optimal
    oracle = vertex_enum_min(c, A, senses, b, problem.lo, problem.hi)
    assert oracle is not None
    assert abs(sol.objective - oracle) <= 1e-7 * (1 + abs(oracle))
    # dual sign convention
    for i, s in enumerate(senses):
        if s == ">=":
            assert sol.duals[i] >= -1e-9
        else:
            assert sol.duals[i] <= 1e-9
    # strong duality with bound terms
    assert abs(sol.objective - dual_objective(problem, sol)) <= 1e-8 * (1 + abs(sol.objective))


def test_milp_simple_rounding_down():
    sol = solve_milp(lp([-1.0], np.zeros((0, 1)), [], [], hi=np.array([2.5])), [True])
    assert sol.optimal
    assert abs(sol.x[0] - 2.0) < 1e-9
    assert abs(sol.objective + 2.0) < 1e-9


def test_milp_binary_knapsack():
    # max 3a + 2b s.t. a + b <= 1 -> min form objective -3
    problem = lp([-3.0, -2.0], [[1.0, 1.0]], ["<="], [1.0], hi=np.ones(2))
    sol = solve_milp(problem, [True, True])
    assert sol.optimal
    assert abs(sol.objective + 3.0) < 1e-9
    assert abs(sol.x[0] - 1.0) < 1e-9


def test_milp_empty_mask_reduces_to_lp():
    problem = lp([-1.0], [[2.0]], ["<="], [3.0])
    a = solve_lp(problem)
    b = solve_milp(problem, [False])
    assert abs(a.objective - b.objective) < 1e-12


def test_milp_infeasible_integrality():
    # 0.4 <= x <= 0.6 has no integer point
    problem = lp([1.0], np.zeros((0, 1)), [], [], lo=np.array([0.4]), hi=np.array([0.6]))
    sol = solve_milp(problem, [True])
    assert sol.status == "infeasible"


def test_milp_bound_vs_lp_relaxation():
    rng = np.random.default_rng(3)
    for _ in range(10):
        n = 3
        A = rng.integers(-2, 3, size=(2, n)).astype(float)
        xhat = rng.uniform(0, 2, n)
        b = A @ xhat - 0.5
        problem = lp(rng.uniform(0, 2, n), A, [">=", ">="], b, hi=np.full(n, 4.0))
        rel = solve_lp(problem)
        mil = solve_milp(problem, [True] * n)
        if rel.optimal and mil.optimal:
            assert mil.objective >= rel.objective - 1e-9
