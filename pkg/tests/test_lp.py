import numpy as np
import pytest
from scipy.optimize import linprog

from csgbench.lp import LinearProgram, dual_bound, fix_variable, set_partition_lp, simplex_solve
from vertex_enum import packings, vertex_optimum


def _highs(lp):
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for row, s, rhs in zip(lp.A, lp.senses, lp.b):
        if s == "=":
            A_eq.append(row)
            b_eq.append(rhs)
        elif s == "<=":
            A_ub.append(row)
            b_ub.append(rhs)
        else:
            A_ub.append(-row)
            b_ub.append(-rhs)
    return linprog(-lp.c, A_ub=A_ub or None, b_ub=b_ub or None, A_eq=A_eq or None,
                   b_eq=b_eq or None, bounds=list(zip(lp.lo, lp.hi)), method="highs")


def test_textbook_example():
    # max 3x + 5y; x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), value 36
    lp = LinearProgram([3, 5], [[1, 0], [0, 2], [3, 2]], ("<=",) * 3, [4, 12, 18],
                       [0, 0], [100, 100])
    sol = simplex_solve(lp)
    assert sol.status == "optimal"
    assert sol.objective_value == pytest.approx(36.0, abs=1e-9)
    assert np.allclose(sol.x, [2, 6])
    assert dual_bound(lp, sol) == pytest.approx(36.0, abs=1e-9)


def test_greater_equal_rows_need_phase_one():
    # min x + y s.t. x + 2y >= 4, 3x + y >= 6 -> (1.6, 1.2), value 2.8
    lp = LinearProgram([-1, -1], [[1, 2], [3, 1]], (">=", ">="), [4, 6], [0, 0], [10, 10])
    sol = simplex_solve(lp)
    assert sol.objective_value == pytest.approx(-2.8, abs=1e-9)
    assert np.allclose(sol.x, [1.6, 1.2])


def test_infeasible():
    lp = LinearProgram([1, 1], [[1, 1]], ("=",), [3], [0, 0], [1, 1])
    assert simplex_solve(lp).status == "infeasible"


def test_unbounded_needs_infinite_bounds_which_are_rejected():
    with pytest.raises(ValueError, match="finite"):
        LinearProgram([1], [[1]], ("<=",), [1], [0], [np.inf])


def test_iteration_limit():
    lp = LinearProgram([3, 5], [[1, 0], [0, 2], [3, 2]], ("<=",) * 3, [4, 12, 18],
                       [0, 0], [100, 100])
    assert simplex_solve(lp, max_pivots=1).status == "iteration_limit"


def test_dimension_checks():
    with pytest.raises(ValueError, match="dimension"):
        LinearProgram([1, 2], [[1, 1, 1]], ("<=",), [1], [0, 0], [1, 1])
    with pytest.raises(ValueError, match="sense"):
        LinearProgram([1], [[1]], ("<",), [1], [0], [1])
    with pytest.raises(ValueError, match="lower bound"):
        LinearProgram([1], [[1]], ("<=",), [1], [1], [0])


def test_set_partition_lp_shape():
    lp = set_partition_lp([0b011, 0b100, 0b111], [1.0, 2.0, 2.5], 3)
    assert lp.shape == (3, 3)
    assert lp.A.tolist() == [[1, 0, 1], [1, 0, 1], [0, 1, 1]]
    sol = simplex_solve(lp)
    assert sol.objective_value == pytest.approx(3.0)
    assert np.allclose(sol.x, [1, 1, 0])


def test_fractional_triangle():
    # pairs of a triangle each worth 1: LP optimum 1.5 at x = 1/2
    pool = [0b011, 0b101, 0b110, 0b001, 0b010, 0b100]
    lp = set_partition_lp(pool, [1, 1, 1, 0, 0, 0], 3)
    sol = simplex_solve(lp)
    assert sol.objective_value == pytest.approx(1.5, abs=1e-9)
    assert np.allclose(sol.x[:3], 0.5)


def test_packings_of_four_agents_are_bell_five():
    # packings of {0..3} correspond to partitions of a 5-element set
    assert len(packings(list(range(1, 16)))) == 52


@pytest.mark.parametrize("seed", range(20))
def test_set_partition_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = 4
    M = int(rng.integers(4, 9))
    pool = sorted(set(int(x) for x in rng.integers(1, 1 << n, size=M)) | {1, 2, 4, 8})
    values = rng.normal(size=len(pool)).round(3)
    sol = simplex_solve(set_partition_lp(pool, values, n))
    assert sol.status == "optimal"
    assert sol.objective_value == pytest.approx(vertex_optimum(pool, values, n), abs=1e-9)


def test_vertex_reference_sees_fractional_vertex():
    pool = [0b011, 0b101, 0b110, 0b001, 0b010, 0b100]
    assert vertex_optimum(pool, [1, 1, 1, 0, 0, 0], 3) == pytest.approx(1.5)


@pytest.mark.parametrize("seed", range(60))
def test_random_lps_match_highs(seed):
    rng = np.random.default_rng(1000 + seed)
    m, nv = int(rng.integers(1, 7)), int(rng.integers(1, 9))
    A = rng.integers(-3, 4, size=(m, nv)).astype(float)
    x0 = rng.uniform(0, 1, size=nv)
    senses = tuple(rng.choice(["<=", "=", ">="], size=m))
    b = A @ x0
    slack = rng.uniform(0, 1, size=m)
    b = np.where(np.array(senses) == "<=", b + slack, np.where(np.array(senses) == ">=", b - slack, b))
    c = rng.normal(size=nv)
    lp = LinearProgram(c, A, senses, b, np.zeros(nv), np.full(nv, 1.0 + rng.uniform()))
    sol = simplex_solve(lp)
    ref = _highs(lp)
    assert ref.status == 0
    assert sol.status == "optimal"
    assert sol.objective_value == pytest.approx(-ref.fun, abs=1e-7)
    assert dual_bound(lp, sol) == pytest.approx(sol.objective_value, abs=1e-7)


def test_duality_spot_check():
    pool = [0b0011, 0b1100, 0b0110, 0b1001, 0b0001, 0b0010, 0b0100, 0b1000]
    values = [2.0, 2.0, 1.5, 1.5, 0.1, 0.1, 0.1, 0.1]
    lp = set_partition_lp(pool, values, 4)
    sol = simplex_solve(lp)
    assert sol.objective_value == pytest.approx(4.0)
    assert dual_bound(lp, sol) == pytest.approx(4.0, abs=1e-9)
    # Any multipliers give a valid bound, never below the optimum.
    rng = np.random.default_rng(0)
    for _ in range(50):
        y = rng.normal(size=4)
        d = lp.c - y @ lp.A
        bound = y @ lp.b + np.maximum(d * lp.lo, d * lp.hi).sum()
        assert bound >= sol.objective_value - 1e-9


def test_fix_variable():
    lp = set_partition_lp([0b011, 0b100, 0b111], [1.0, 2.0, 2.5], 3)
    fixed = fix_variable(lp, 2, 1)
    assert fixed.lo[2] == fixed.hi[2] == 1.0
    assert lp.lo[2] == 0.0 and lp.hi[2] == 1.0
    assert np.array_equal(fixed.A, lp.A)
    sol = simplex_solve(fixed)
    assert sol.objective_value == pytest.approx(2.5)
    assert simplex_solve(fix_variable(fix_variable(lp, 2, 1), 1, 1)).status == "infeasible"
    with pytest.raises(IndexError):
        fix_variable(lp, 3, 0)
    with pytest.raises(ValueError):
        fix_variable(lp, 0, 2)


def test_fixing_never_raises_the_optimum():
    rng = np.random.default_rng(5)
    pool = list(range(1, 16))
    lp = set_partition_lp(pool, rng.normal(size=15), 4)
    base = simplex_solve(lp).objective_value
    for j in range(15):
        for v in (0, 1):
            sol = simplex_solve(fix_variable(lp, j, v))
            if sol.optimal:
                assert sol.objective_value <= base + 1e-9
                assert sol.x[j] == v


def test_deterministic():
    rng = np.random.default_rng(9)
    lp = set_partition_lp(list(range(1, 32)), rng.normal(size=31), 5)
    a, b = simplex_solve(lp), simplex_solve(lp)
    assert a.pivot_count == b.pivot_count
    assert np.array_equal(a.x, b.x)


def test_degenerate_problem_terminates():
    # Many tied columns covering the same agents: heavy degeneracy.
    pool = list(range(1, 64))
    lp = set_partition_lp(pool, [1.0] * 63, 6)
    sol = simplex_solve(lp)
    assert sol.status == "optimal"
    assert sol.objective_value == pytest.approx(6.0)
