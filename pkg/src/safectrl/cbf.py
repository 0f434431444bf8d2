"""Sampled-data control-barrier-function filter for a look-ahead unicycle.

Per agent i the barrier is the squared clearance of a look-ahead point,

    h_i = |pbar - x_i|^2 - d_safe^2,    pbar = p + lookahead * (cos th, sin th),

which has relative degree one in both control channels of the unicycle.
Safety under zero-order-hold control with inferred agent dynamics is
enforced through one linear row per agent,

    Lf h + Lg h * u + M_i >= -kappa * h + phi_i,

where M_i is the worst case of dh/dx_i * xdot_i over the inflated
prediction box for the agent velocity, phi_i is a Lipschitz margin for
inter-sample drift, and the box inflation eta_i accounts for the dynamics
changing while the box was calibrated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .conformal import PredictionBox
from .errors import InputError


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = math.remainder(theta, math.tau)
    if w <= -math.pi:
        w += math.tau
    return w


@dataclass
class EgoState:
    """Unicycle pose; the heading is always stored wrapped to (-pi, pi]."""

    px: float
    py: float
    theta: float

    def __post_init__(self):
        self.px = float(self.px)
        self.py = float(self.py)
        self.theta = wrap_angle(float(self.theta))

    def position(self) -> np.ndarray:
        return np.array([self.px, self.py])

    def as_array(self) -> np.ndarray:
        return np.array([self.px, self.py, self.theta])


@dataclass(frozen=True)
class ControlBounds:
    """Control box v in [v_min, v_max], |omega| <= omega_max."""

    v_min: float
    v_max: float
    omega_max: float

    def __post_init__(self):
        if self.v_min > self.v_max:
            raise InputError("v_min must not exceed v_max")
        if self.omega_max < 0.0:
            raise InputError("omega_max must be non-negative")

    def clamp_v(self, v: float) -> float:
        return min(max(v, self.v_min), self.v_max)

    def clamp_omega(self, omega: float) -> float:
        return min(max(omega, -self.omega_max), self.omega_max)

    def clamp(self, u: np.ndarray) -> np.ndarray:
        return np.array([self.clamp_v(float(u[0])), self.clamp_omega(float(u[1]))])

    def corners(self) -> np.ndarray:
        return np.array([
            [self.v_min, -self.omega_max],
            [self.v_min, self.omega_max],
            [self.v_max, -self.omega_max],
            [self.v_max, self.omega_max],
        ])

    def max_corner_norm(self) -> float:
        """Largest Euclidean norm over the box corners."""
        return math.hypot(max(abs(self.v_min), abs(self.v_max)), self.omega_max)


@dataclass
class CbfConfig:
    """Barrier geometry, class-K gain and sampled-data margin constants.

    c_f, c_g and c_beta are Lipschitz constants (over the operating region)
    of Lf h, Lg h and beta(h) = kappa * h as functions of the stacked state;
    c_dyn[i] bounds how fast agent i's velocity field varies with the state.
    delta_e and delta_agents[i] bound how far the ego and agent states can
    travel within one sampling interval.
    """

    d_safe: float
    lookahead: float
    kappa: float
    c_f: float
    c_g: float
    c_beta: float
    c_dyn: list[float]
    delta_e: float
    delta_agents: list[float]
    dt: float
    u_bounds: ControlBounds

    def __post_init__(self):
        if self.d_safe <= 0.0:
            raise InputError("d_safe must be positive")
        if self.lookahead < 0.0:
            raise InputError("lookahead must be non-negative")
        if self.kappa <= 0.0:
            raise InputError("kappa must be positive")
        if min(self.c_f, self.c_g, self.c_beta) < 0.0:
            raise InputError("Lipschitz constants must be non-negative")
        if len(self.c_dyn) != len(self.delta_agents):
            raise InputError("c_dyn and delta_agents must have one entry per agent")
        if any(c < 0.0 for c in self.c_dyn) or any(d < 0.0 for d in self.delta_agents):
            raise InputError("per-agent constants must be non-negative")
        if self.delta_e < 0.0:
            raise InputError("delta_e must be non-negative")
        if self.dt <= 0.0:
            raise InputError("dt must be positive")

    @property
    def num_agents(self) -> int:
        return len(self.c_dyn)


class Margin(NamedTuple):
    phi: float
    eta: float


@dataclass
class CbfRow:
    """Barrier row data for one agent: Lf h + Lg h * u + m_worst >= -kappa h + phi."""

    lf: float
    lg: np.ndarray
    dh_dxi: np.ndarray
    h: float
    m_worst: float = 0.0
    phi: float = 0.0


@dataclass
class QpProblem:
    """min |u - u_ref|^2  s.t.  a_j . u <= b_j for each row, u in bounds."""

    u_ref: np.ndarray
    rows: list[tuple[np.ndarray, float]]
    bounds: ControlBounds
    cbf_rows: list[CbfRow] = field(default_factory=list)


def lookahead_point(ego: EgoState, lookahead: float) -> np.ndarray:
    return np.array([
        ego.px + lookahead * math.cos(ego.theta),
        ego.py + lookahead * math.sin(ego.theta),
    ])


def cbf_value(ego: EgoState, agent_pos: np.ndarray, cfg: CbfConfig) -> float:
    """Barrier h = |pbar - x_i|^2 - d_safe^2."""
    r = lookahead_point(ego, cfg.lookahead) - np.asarray(agent_pos, dtype=float).ravel()
    return float(r @ r) - cfg.d_safe**2


def lie_derivatives(ego: EgoState, agent_pos: np.ndarray, cfg: CbfConfig) -> CbfRow:
    """Barrier value and its derivatives along the ego and agent dynamics.

    The unicycle is driftless so lf = 0.  The control directions are

        lg = [2 r . (cos th, sin th),  2 * lookahead * r . (-sin th, cos th)]

    with r = pbar - x_i, and dh_dxi = -2 r.
    """
    agent_pos = np.asarray(agent_pos, dtype=float).ravel()
    if agent_pos.shape != (2,):
        raise InputError("agent position must be a 2-vector")
    c = math.cos(ego.theta)
    s = math.sin(ego.theta)
    r = np.array([ego.px + cfg.lookahead * c, ego.py + cfg.lookahead * s]) - agent_pos
    lg = np.array([
        2.0 * (r[0] * c + r[1] * s),
        2.0 * cfg.lookahead * (-r[0] * s + r[1] * c),
    ])
    dh_dxi = -2.0 * r
    h = float(r @ r) - cfg.d_safe**2
    return CbfRow(lf=0.0, lg=lg, dh_dxi=dh_dxi, h=h)


def worst_case_term(dh_dxi: np.ndarray, box: PredictionBox, eta: float) -> float:
    """Minimum of dh_dxi . xdot over the box inflated by eta.

    Separable per coordinate: each term is the smaller of mu_r (c_r - w) and
    mu_r (c_r + w) with w = radius + eta.
    """
    mu = np.asarray(dh_dxi, dtype=float).ravel()
    if mu.shape != box.center.shape:
        raise InputError(
            f"gradient has shape {mu.shape}, box center has {box.center.shape}"
        )
    if eta < 0.0:
        raise InputError("eta must be non-negative")
    w = box.radius + eta
    lo = mu * (box.center - w)
    hi = mu * (box.center + w)
    return float(np.sum(np.minimum(lo, hi)))


def margin(cfg: CbfConfig, agent_index: int) -> Margin:
    """Sampled-data margin phi and box inflation eta for one agent.

    phi = (c_f + c_g * u_max + c_beta) * (delta_e + delta_i) covers
    inter-sample drift of the row coefficients; eta = c_dyn_i * (sum_j
    delta_j + delta_e) covers the agent velocity field moving between the
    calibration state and the current one.
    """
    if not 0 <= agent_index < cfg.num_agents:
        raise InputError(f"agent_index {agent_index} out of range")
    u_max = cfg.u_bounds.max_corner_norm()
    phi = (cfg.c_f + cfg.c_g * u_max + cfg.c_beta) * (
        cfg.delta_e + cfg.delta_agents[agent_index]
    )
    eta = cfg.c_dyn[agent_index] * (sum(cfg.delta_agents) + cfg.delta_e)
    return Margin(phi=phi, eta=eta)


def assemble_qp(world, boxes: Sequence[PredictionBox], cfg: CbfConfig,
                u_ref: np.ndarray) -> QpProblem:
    """Build the safety QP for the current world snapshot.

    `world` is anything with an `ego` EgoState and an `agents` list of
    positions.  Each agent contributes one row -lg . u <= lf + m_worst +
    kappa * h - phi, so a feasible u keeps every barrier row satisfied for
    the whole hold interval.
    """
    agents = list(world.agents)
    if len(boxes) != len(agents):
        raise InputError(f"{len(boxes)} boxes for {len(agents)} agents")
    if len(agents) != cfg.num_agents:
        raise InputError(f"config expects {cfg.num_agents} agents, world has {len(agents)}")
    u_ref = np.asarray(u_ref, dtype=float).ravel()
    if u_ref.shape != (2,):
        raise InputError("u_ref must be a 2-vector")
    rows = []
    cbf_rows = []
    for i, (pos, box) in enumerate(zip(agents, boxes)):
        row = lie_derivatives(world.ego, pos, cfg)
        phi, eta = margin(cfg, i)
        row.m_worst = worst_case_term(row.dh_dxi, box, eta)
        row.phi = phi
        b = row.lf + row.m_worst + cfg.kappa * row.h - phi
        rows.append((-row.lg, b))
        cbf_rows.append(row)
    return QpProblem(u_ref=u_ref, rows=rows, bounds=cfg.u_bounds, cbf_rows=cbf_rows)


def estimate_lipschitz_constants(cfg: CbfConfig, ego_box: np.ndarray,
                                 agent_box: np.ndarray, samples: int = 2000,
                                 seed: int = 0, step: float = 1e-6) -> tuple[float, float, float]:
    """Sampled estimates of (c_f, c_g, c_beta) over a state box.

    Draws ego poses uniformly from ego_box (rows: px, py, theta bounds) and
    agent positions from agent_box (rows: x, y bounds), then takes the max
    norm of central-difference gradients of Lf h, Lg h and kappa * h with
    respect to the stacked (ego, agent) coordinates.  These are empirical
    estimates over the sampled box, not certified bounds; pad them before
    use in a config.
    """
    ego_box = np.asarray(ego_box, dtype=float)
    agent_box = np.asarray(agent_box, dtype=float)
    if ego_box.shape != (3, 2) or agent_box.shape != (2, 2):
        raise InputError("ego_box must be (3, 2) and agent_box (2, 2)")
    rng = np.random.default_rng(seed)
    c_g = 0.0
    c_beta = 0.0

    def row_at(z: np.ndarray) -> CbfRow:
        return lie_derivatives(EgoState(z[0], z[1], z[2]), z[3:5], cfg)

    for _ in range(samples):
        z = np.concatenate([
            rng.uniform(ego_box[:, 0], ego_box[:, 1]),
            rng.uniform(agent_box[:, 0], agent_box[:, 1]),
        ])
        jac_lg = np.empty((2, 5))
        grad_h = np.empty(5)
        for d in range(5):
            zp = z.copy()
            zm = z.copy()
            zp[d] += step
            zm[d] -= step
            rp = row_at(zp)
            rm = row_at(zm)
            jac_lg[:, d] = (rp.lg - rm.lg) / (2.0 * step)
            grad_h[d] = (rp.h - rm.h) / (2.0 * step)
        c_g = max(c_g, float(np.linalg.norm(jac_lg, 2)))
        c_beta = max(c_beta, cfg.kappa * float(np.linalg.norm(grad_h)))
    # Lf h is identically zero for the driftless unicycle.
    return 0.0, c_g, c_beta
