"""QP solver unit tests: hand cases, KKT checks, invariances, oracle sanity."""

import numpy as np
import pytest

import oracles
from conftest import random_qp
from safectrl.cbf import ControlBounds, QpProblem
from safectrl.errors import InputError
from safectrl.qp import check_kkt, solve


WIDE = ControlBounds(-100.0, 100.0, 100.0)


def prob(u_ref, rows=(), bounds=WIDE):
    rows = [(np.asarray(a, dtype=float), float(b)) for a, b in rows]
    return QpProblem(u_ref=np.asarray(u_ref, dtype=float), rows=rows, bounds=bounds)


# ---------------------------------------------------------------------------
# hand-checked cases


def test_unconstrained_returns_reference():
    sol = solve(prob([0.7, -0.3]))
    assert sol.status == "optimal"
    assert np.allclose(sol.u, [0.7, -0.3])
    assert sol.objective == pytest.approx(0.0, abs=1e-18)
    assert sol.active_set == []


def test_single_row_projection():
    sol = solve(prob([1.0, 0.0], rows=[((1.0, 0.0), 0.0)]))
    assert np.allclose(sol.u, [0.0, 0.0], atol=1e-12)
    assert sol.objective == pytest.approx(1.0, abs=1e-12)
    assert sol.active_set == [0]
    assert sol.duals[0] == pytest.approx(2.0, abs=1e-12)


def test_row_conflicts_with_box():
    p = prob([0.5, 0.0], rows=[((1.0, 0.0), -5.0)],
             bounds=ControlBounds(0.0, 1.0, 1.0))
    sol = solve(p)
    assert sol.status == "infeasible"
    assert not sol.feasible


def test_box_clamp_without_rows():
    p = prob([5.0, -9.0], bounds=ControlBounds(0.0, 2.0, 1.5))
    sol = solve(p)
    assert np.allclose(sol.u, [2.0, -1.5])
    assert sol.objective == pytest.approx((5.0 - 2.0) ** 2 + (-9.0 + 1.5) ** 2)


def test_corner_solution_two_active():
    p = prob([3.0, 3.0], bounds=ControlBounds(-1.0, 1.0, 1.0))
    sol = solve(p)
    assert np.allclose(sol.u, [1.0, 1.0])
    assert len(sol.active_set) == 2


def test_oblique_row_projection():
    # Project (2, 0) onto u1 + u2 <= 1: optimum at (1.5, -0.5).
    sol = solve(prob([2.0, 0.0], rows=[((1.0, 1.0), 1.0)]))
    assert np.allclose(sol.u, [1.5, -0.5], atol=1e-12)


def test_zero_row_infeasible_when_b_negative():
    sol = solve(prob([0.0, 0.0], rows=[((0.0, 0.0), -1.0)]))
    assert sol.status == "infeasible"


def test_zero_row_ignored_when_b_nonnegative():
    sol = solve(prob([0.3, 0.4], rows=[((0.0, 0.0), 0.0)]))
    assert sol.status == "optimal"
    assert np.allclose(sol.u, [0.3, 0.4])


def test_nan_input_rejected():
    with pytest.raises(InputError):
        solve(prob([np.nan, 0.0]))
    with pytest.raises(InputError):
        solve(prob([0.0, 0.0], rows=[((np.nan, 1.0), 0.0)]))
    with pytest.raises(InputError):
        solve(prob([0.0, 0.0], rows=[((1.0, 1.0), np.nan)]))


# ---------------------------------------------------------------------------
# check_kkt


def test_kkt_zero_at_unconstrained_optimum():
    p = prob([0.1, 0.2])
    assert check_kkt(p, solve(p)) == pytest.approx(0.0, abs=1e-15)


def test_kkt_projection_example():
    p = prob([1.0, 0.0], rows=[((1.0, 0.0), 0.0)])
    assert check_kkt(p, solve(p)) <= 1e-12


def test_kkt_flags_non_optimal_point():
    p = prob([1.0, 0.0], rows=[((1.0, 0.0), 0.0)])
    sol = solve(p)
    fake = type(sol)(u=p.u_ref.copy(), active_set=[], objective=0.0,
                     status="optimal", duals=np.zeros_like(sol.duals))
    assert check_kkt(p, fake) > 1e-3


# ---------------------------------------------------------------------------
# invariances


def test_row_duplication_invariance():
    rng = np.random.default_rng(11)
    for _ in range(50):
        p = random_qp(rng)
        if not p.rows:
            continue
        sol = solve(p)
        doubled = QpProblem(u_ref=p.u_ref, rows=p.rows + [p.rows[0]],
                            bounds=p.bounds)
        sol2 = solve(doubled)
        assert sol.status == sol2.status
        if sol.feasible:
            assert np.allclose(sol.u, sol2.u, atol=1e-9)


def test_row_scaling_invariance():
    rng = np.random.default_rng(12)
    for _ in range(50):
        p = random_qp(rng)
        sol = solve(p)
        scaled = QpProblem(
            u_ref=p.u_ref,
            rows=[(3.7 * a, 3.7 * b) for a, b in p.rows],
            bounds=p.bounds,
        )
        sol2 = solve(scaled)
        assert sol.status == sol2.status
        if sol.feasible:
            assert np.allclose(sol.u, sol2.u, atol=1e-9)


def test_solver_is_deterministic():
    rng = np.random.default_rng(13)
    problems = [random_qp(rng) for _ in range(20)]
    first = [solve(p) for p in problems]
    second = [solve(p) for p in problems]
    for a, b in zip(first, second):
        assert a.status == b.status
        assert a.active_set == b.active_set
        if a.feasible:
            assert np.array_equal(a.u, b.u)


def test_degenerate_tie_prefers_lowest_indices():
    # Two coincident constraints both active at the optimum.
    p = prob([1.0, 0.0], rows=[((1.0, 0.0), 0.0), ((1.0, 0.0), 0.0)])
    sol = solve(p)
    assert np.allclose(sol.u, [0.0, 0.0], atol=1e-12)
    assert sol.active_set in ([0], [0, 1])
    assert sol.active_set[0] == 0


# ---------------------------------------------------------------------------
# randomized sanity vs oracles (the full 1000-problem sweep runs in the
# acceptance suite; this is a fast smoke version)


def test_random_problems_match_oracles():
    rng = np.random.default_rng(14)
    for _ in range(200):
        p = random_qp(rng)
        sol = solve(p)
        feas = oracles.feasible_by_vertices(p)
        assert sol.feasible == feas
        if not feas:
            continue
        assert check_kkt(p, sol) <= 1e-8
        # every constraint satisfied at tolerance
        for a, b in p.rows:
            assert float(a @ sol.u) <= b + 1e-9
        assert p.bounds.v_min - 1e-9 <= sol.u[0] <= p.bounds.v_max + 1e-9
        assert abs(sol.u[1]) <= p.bounds.omega_max + 1e-9


def test_random_problems_match_grid_refine():
    rng = np.random.default_rng(15)
    checked = 0
    for _ in range(40):
        p = random_qp(rng)
        sol = solve(p)
        ref = oracles.grid_refine_solve(p)
        if ref is None:
            assert not sol.feasible
            continue
        assert sol.feasible
        assert sol.objective <= ref[1] + 1e-5
        checked += 1
    assert checked >= 20
