"""Exact solver for 2-variable inequality quadratic programs.

The safety filter produces
    min |u - u_ref|^2   s.t.   a_j . u <= b_j,  u in a box,
with only two decision variables, so every optimal active set has at most
two elements.  The solver enumerates all candidate stationary points (the
unconstrained optimum, the projection onto each constraint line, and each
pairwise intersection), keeps the feasible ones and returns the best by
objective with deterministic lowest-index tie-breaking.  For a non-empty
feasible set the optimum is always among these candidates, so the result is
exact up to floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cbf import QpProblem
from .errors import InputError

FEAS_TOL = 1e-9
ACTIVE_TOL = 1e-9


@dataclass
class QpSolution:
    u: np.ndarray
    active_set: list[int]
    objective: float
    status: str  # "optimal" or "infeasible"
    duals: np.ndarray

    @property
    def feasible(self) -> bool:
        return self.status == "optimal"


def _constraint_list(problem: QpProblem) -> tuple[list[tuple[float, float, float]], int]:
    """All constraints as (a0, a1, b) triples: user rows first, then the four
    box faces in the order v_min, v_max, omega lower, omega upper."""
    cons: list[tuple[float, float, float]] = []
    for a, b in problem.rows:
        a = np.asarray(a, dtype=float).ravel()
        if a.shape != (2,):
            raise InputError("constraint row must be a 2-vector")
        if not (np.all(np.isfinite(a)) and math.isfinite(float(b))):
            raise InputError("constraint coefficients must be finite")
        cons.append((float(a[0]), float(a[1]), float(b)))
    n_rows = len(cons)
    bx = problem.bounds
    cons.append((-1.0, 0.0, -bx.v_min))
    cons.append((1.0, 0.0, bx.v_max))
    cons.append((0.0, -1.0, bx.omega_max))
    cons.append((0.0, 1.0, bx.omega_max))
    return cons, n_rows


def _infeasible(m: int) -> QpSolution:
    return QpSolution(
        u=np.array([math.nan, math.nan]),
        active_set=[],
        objective=math.inf,
        status="infeasible",
        duals=np.zeros(m),
    )


def solve(problem: QpProblem) -> QpSolution:
    """Solve the QP exactly; never raises on an empty feasible set."""
    u_ref = np.asarray(problem.u_ref, dtype=float).ravel()
    if u_ref.shape != (2,):
        raise InputError("u_ref must be a 2-vector")
    if not np.all(np.isfinite(u_ref)):
        raise InputError("u_ref must be finite")
    cons, _ = _constraint_list(problem)
    m = len(cons)
    rx, ry = float(u_ref[0]), float(u_ref[1])

    # A zero row is either vacuous (b >= 0) or makes the problem infeasible.
    for a0, a1, b in cons:
        if a0 == 0.0 and a1 == 0.0 and b < -FEAS_TOL:
            return _infeasible(m)

    def is_feasible(ux: float, uy: float) -> bool:
        for a0, a1, b in cons:
            if a0 * ux + a1 * uy - b > FEAS_TOL:
                return False
        return True

    # (objective, defining active set, point, multipliers for the set)
    candidates: list[tuple[float, tuple[int, ...], tuple[float, float], tuple[float, ...]]] = []
    if is_feasible(rx, ry):
        candidates.append((0.0, (), (rx, ry), ()))
    for j, (a0, a1, b) in enumerate(cons):
        nn = a0 * a0 + a1 * a1
        if nn == 0.0:
            continue
        viol = a0 * rx + a1 * ry - b
        ux = rx - a0 * viol / nn
        uy = ry - a1 * viol / nn
        if is_feasible(ux, uy):
            lam = 2.0 * viol / nn
            obj = (ux - rx) ** 2 + (uy - ry) ** 2
            candidates.append((obj, (j,), (ux, uy), (lam,)))
    for j in range(m):
        aj0, aj1, bj = cons[j]
        for k in range(j + 1, m):
            ak0, ak1, bk = cons[k]
            det = aj0 * ak1 - aj1 * ak0
            scale = max(abs(aj0), abs(aj1), 1e-300) * max(abs(ak0), abs(ak1), 1e-300)
            if abs(det) <= 1e-12 * scale:
                continue
            ux = (bj * ak1 - bk * aj1) / det
            uy = (aj0 * bk - ak0 * bj) / det
            if is_feasible(ux, uy):
                gx = 2.0 * (ux - rx)
                gy = 2.0 * (uy - ry)
                lam_j = (-gx * ak1 + ak0 * gy) / det
                lam_k = (gx * aj1 - aj0 * gy) / det
                obj = (ux - rx) ** 2 + (uy - ry) ** 2
                candidates.append((obj, (j, k), (ux, uy), (lam_j, lam_k)))

    if not candidates:
        return _infeasible(m)

    best_obj = min(c[0] for c in candidates)
    tol = 1e-12 * (1.0 + best_obj)
    pool = [c for c in candidates if c[0] <= best_obj + tol]
    # Among numerically tied optima prefer a dual-feasible defining set, then
    # the lexicographically smallest one, so results are deterministic.
    pool.sort(key=lambda c: (0 if all(l >= -1e-9 for l in c[3]) else 1, c[1]))
    obj, defining, (ux, uy), lams = pool[0]

    duals = np.zeros(m)
    for idx, lam in zip(defining, lams):
        duals[idx] = lam
    active = [
        j for j, (a0, a1, b) in enumerate(cons)
        if (a0 != 0.0 or a1 != 0.0) and abs(a0 * ux + a1 * uy - b) <= ACTIVE_TOL
    ]
    return QpSolution(
        u=np.array([ux, uy]),
        active_set=active,
        objective=obj,
        status="optimal",
        duals=duals,
    )


def check_kkt(problem: QpProblem, solution: QpSolution) -> float:
    """Worst KKT residual of a claimed optimum.

    Returns the max over stationarity |2 (u - u_ref) + sum_j lambda_j a_j|_inf,
    primal feasibility (positive part of a . u - b), dual feasibility
    (positive part of -lambda) and complementary slackness |lambda_j (a_j . u
    - b_j)|.
    """
    if solution.status != "optimal":
        raise InputError("check_kkt expects an optimal solution")
    cons, _ = _constraint_list(problem)
    if solution.duals.shape[0] != len(cons):
        raise InputError("dual vector length does not match constraint count")
    ux, uy = float(solution.u[0]), float(solution.u[1])
    rx, ry = float(problem.u_ref[0]), float(problem.u_ref[1])
    gx = 2.0 * (ux - rx)
    gy = 2.0 * (uy - ry)
    primal = 0.0
    comp = 0.0
    for (a0, a1, b), lam in zip(cons, solution.duals):
        slack = a0 * ux + a1 * uy - b
        primal = max(primal, slack)
        comp = max(comp, abs(lam * slack))
        gx += lam * a0
        gy += lam * a1
    stationarity = max(abs(gx), abs(gy))
    dual = max(0.0, float(-np.min(solution.duals))) if len(cons) else 0.0
    return max(stationarity, max(0.0, primal), dual, comp)
