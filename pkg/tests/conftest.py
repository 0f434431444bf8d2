"""Shared fixtures: the case-study scenario, its dataset and trained estimators.

Collection and offline training are session-scoped because several test
modules (and the acceptance suite) reuse the same networks; training takes
well under a second but collection sweeps three reference trajectories.
"""

import os

import numpy as np
import pytest

from safectrl import persistence
from safectrl.cbf import ControlBounds, QpProblem
from safectrl.sim import collect_offline, train_from_datasets

CASE_STUDY_PATH = os.path.abspath(
    os.path.join(os.path.dirname(__file__), os.pardir, "configs", "case_study.json")
)


@pytest.fixture(scope="session")
def case_config():
    return persistence.load_config(CASE_STUDY_PATH)


@pytest.fixture(scope="session")
def offline_datasets(case_config):
    return collect_offline(case_config)


@pytest.fixture(scope="session")
def trained_nets(case_config, offline_datasets):
    nets, _ = train_from_datasets(case_config, offline_datasets)
    return nets


# Criterion verdicts collected by the acceptance suite; echoed after the
# pytest summary so the pass/fail lines stay visible under output capture.
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, ok in sorted(ACCEPTANCE_RESULTS):
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[criterion {num:2d}] {verdict}  {name}")


def random_qp(rng):
    """Random 2-variable QP with up to 4 rows; roughly 30% are infeasible.

    Feasible-biased draws anchor the rows on a point inside the control box
    so the feasible set keeps some area; the rest use fully random offsets.
    An occasional all-zero row exercises the vacuous/contradictory handling.
    """
    v_lo = float(rng.uniform(-2.0, 0.5))
    v_hi = v_lo + float(rng.uniform(0.5, 3.0))
    omega = float(rng.uniform(0.3, 2.5))
    bounds = ControlBounds(v_lo, v_hi, omega)
    u_ref = rng.uniform(-3.0, 3.0, size=2)
    k = int(rng.integers(0, 5))
    rows = []
    if rng.random() < 0.7:
        anchor = rng.uniform([v_lo, -omega], [v_hi, omega])
        for _ in range(k):
            a = rng.normal(size=2)
            rows.append((a, float(a @ anchor) + 0.5 * abs(float(rng.normal()))))
    else:
        for _ in range(k):
            rows.append((rng.normal(size=2), 1.5 * float(rng.normal())))
    if rng.random() < 0.05:
        rows.append((np.zeros(2), 0.1 * float(rng.normal())))
    return QpProblem(u_ref=u_ref, rows=rows, bounds=bounds)
