"""Deterministic world simulator and the closed-loop safety pipeline.

The world holds one unicycle ego and N single-integrator agents.  The ego
integrates with RK4 under zero-order-hold control; agents apply their
policy velocity exactly (position + F * dt), so a finite difference of an
agent track recovers the held velocity to machine precision.

`run_episode` wires everything together.  At each step the loop observes
the world, finite-differences the previous agent motion, feeds it to the
online estimator update and the conformal calibration window, scores the
previous prediction box, recomputes boxes at the current state, tracks the
reference, filters the command through the safety QP and steps the world.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import conformal
from .cbf import (
    CbfConfig,
    ControlBounds,
    EgoState,
    assemble_qp,
    wrap_angle,
)
from .conformal import AcpState, CalibrationWindow, PredictionBox
from .errors import InputError
from .qp import QpSolution, solve
from .rbf import (
    RbfNetwork,
    RecordedDataStore,
    TrainingSample,
    predict,
    train_offline,
    training_residual_rms,
    try_admit,
    update_online,
)

# Integrator substep cap; small enough that one control step of RK4 tracks
# the exact unicycle arc to well below 1e-8 for the supported control boxes.
_MAX_SUBSTEP = 0.025

INFERENCE_MODES = ("combined", "offline-only", "online-only")


@dataclass
class WorldState:
    """Snapshot at one sampling instant: time, ego pose, agent positions."""

    t: float
    ego: EgoState
    agents: list[np.ndarray]

    def __post_init__(self):
        self.agents = [np.asarray(a, dtype=float).ravel() for a in self.agents]
        for a in self.agents:
            if a.shape != (2,):
                raise InputError("agent positions must be 2-vectors")

    def stacked(self) -> np.ndarray:
        """Stacked state [ego px, py, theta, agent positions...]."""
        return np.concatenate([self.ego.as_array()] + self.agents)


@dataclass
class AgentPolicy:
    """Velocity policy of one agent; emitted speed never exceeds speed_cap.

    Kinds: pursue_ego, approach_ego_avoid_other, waypoint, parametric.
    """

    kind: str
    speed_cap: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("pursue_ego", "approach_ego_avoid_other",
                             "waypoint", "parametric"):
            raise InputError(f"unknown policy kind {self.kind!r}")
        if self.speed_cap < 0.0:
            raise InputError("speed_cap must be non-negative")


def _clamp_norm(v: np.ndarray, cap: float) -> np.ndarray:
    n = float(np.linalg.norm(v))
    if n <= cap or n == 0.0:
        return v
    return v * (cap / n)


def policy_velocity(policy: AgentPolicy, world: WorldState, index: int) -> np.ndarray:
    """Velocity emitted by agent `index` for the current snapshot."""
    pos = world.agents[index]
    p = policy.params
    if policy.kind == "pursue_ego":
        d = world.ego.position() - pos
        v = p.get("gain", 1.0) * d
    elif policy.kind == "approach_ego_avoid_other":
        other = world.agents[int(p["avoid_index"])]
        v = p.get("attract_gain", 1.0) * (world.ego.position() - pos)
        away = pos - other
        dist2 = float(away @ away)
        soft = p.get("softening", 0.25)
        if dist2 > 0.0:
            v = v + p.get("repulse_gain", 1.0) * away / (dist2 + soft)
    elif policy.kind == "waypoint":
        points = np.atleast_2d(np.asarray(p["points"], dtype=float))
        dwell = float(p.get("dwell", 10.0))
        target = points[min(int(world.t // dwell), points.shape[0] - 1)]
        v = p.get("gain", 1.0) * (target - pos)
    else:  # parametric: open-loop sinusoid velocity field
        t = world.t
        v = np.array([
            p.get("amp_x", 1.0) * math.cos(p.get("freq_x", 1.0) * t + p.get("phase_x", 0.0)),
            p.get("amp_y", 1.0) * math.sin(p.get("freq_y", 1.0) * t + p.get("phase_y", 0.0)),
        ])
    return _clamp_norm(v, policy.speed_cap)


def step_ego(ego: EgoState, u: np.ndarray, dt: float) -> EgoState:
    """RK4 integration of the unicycle over [0, dt] with u held constant."""
    if dt <= 0.0:
        raise InputError("dt must be positive")
    v = float(u[0])
    omega = float(u[1])
    n_sub = max(1, math.ceil(dt / _MAX_SUBSTEP))
    h = dt / n_sub
    x, y, th = ego.px, ego.py, ego.theta
    for _ in range(n_sub):
        k1x, k1y = v * math.cos(th), v * math.sin(th)
        th2 = th + 0.5 * h * omega
        k2x, k2y = v * math.cos(th2), v * math.sin(th2)
        k3x, k3y = k2x, k2y  # theta-rate is constant, so k3 equals k2
        th4 = th + h * omega
        k4x, k4y = v * math.cos(th4), v * math.sin(th4)
        x += h * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) / 6.0
        y += h * (k1y + 2.0 * k2y + 2.0 * k3y + k4y) / 6.0
        th += h * omega
    return EgoState(x, y, wrap_angle(th))


def step_agent(policy: AgentPolicy, world: WorldState, index: int, dt: float) -> np.ndarray:
    """Exact Euler step: new position with the policy velocity held over dt."""
    if dt <= 0.0:
        raise InputError("dt must be positive")
    return world.agents[index] + policy_velocity(policy, world, index) * dt


def finite_difference(x_prev: np.ndarray, x_now: np.ndarray, dt: float) -> np.ndarray:
    """Backward difference (x_now - x_prev) / dt."""
    if dt <= 0.0:
        raise InputError("dt must be positive")
    return (np.asarray(x_now, dtype=float) - np.asarray(x_prev, dtype=float)) / dt


@dataclass
class ReferenceSpec:
    """Reference trajectory: circle, sine, spiral or waypoint_list."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("circle", "sine", "spiral", "waypoint_list"):
            raise InputError(f"unknown reference kind {self.kind!r}")


def reference_state(ref: ReferenceSpec, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Reference point and velocity at time t."""
    p = ref.params
    if ref.kind == "circle":
        c = np.asarray(p["center"], dtype=float)
        rad = float(p["radius"])
        w = float(p["angular_rate"])
        a = w * t + float(p.get("phase", 0.0))
        point = c + rad * np.array([math.cos(a), math.sin(a)])
        vel = rad * w * np.array([-math.sin(a), math.cos(a)])
    elif ref.kind == "sine":
        start = np.asarray(p["start"], dtype=float)
        s = float(p["speed"])
        amp = float(p["amplitude"])
        freq = float(p["frequency"])
        ph = float(p.get("phase", 0.0))
        point = start + np.array([s * t, amp * math.sin(freq * t + ph) - amp * math.sin(ph)])
        vel = np.array([s, amp * freq * math.cos(freq * t + ph)])
    elif ref.kind == "spiral":
        c = np.asarray(p["center"], dtype=float)
        r0 = float(p["radius0"])
        g = float(p["growth"])
        w = float(p["angular_rate"])
        a = w * t + float(p.get("phase", 0.0))
        rad = r0 + g * t
        point = c + rad * np.array([math.cos(a), math.sin(a)])
        vel = np.array([
            g * math.cos(a) - rad * w * math.sin(a),
            g * math.sin(a) + rad * w * math.cos(a),
        ])
    else:  # waypoint_list: hold each point for `dwell`, stay on the last one
        points = np.atleast_2d(np.asarray(p["points"], dtype=float))
        dwell = float(p.get("dwell", 10.0))
        point = points[min(int(t // dwell), points.shape[0] - 1)].copy()
        vel = np.zeros(2)
    return point, vel


@dataclass(frozen=True)
class TrackerConfig:
    k_v: float = 1.0
    k_omega: float = 2.0


def reference_tracker(ego: EgoState, ref_point: np.ndarray, ref_velocity: np.ndarray,
                      tracker: TrackerConfig, bounds: ControlBounds) -> np.ndarray:
    """Proportional pose tracker with speed feedforward.

    v_ref = clamp(k_v * |e| * cos(angle_err) + |ref_velocity|) and
    omega_ref = clamp(k_omega * angle_err) with e the position error.  A
    target directly behind gives angle_err = +pi (wrap convention), so the
    turn direction tie breaks positive.
    """
    ref_point = np.asarray(ref_point, dtype=float).ravel()
    ref_velocity = np.asarray(ref_velocity, dtype=float).ravel()
    e = ref_point - ego.position()
    dist = float(np.linalg.norm(e))
    feed = float(np.linalg.norm(ref_velocity))
    if dist > 1e-9:
        desired = math.atan2(e[1], e[0])
    elif feed > 1e-9:
        desired = math.atan2(ref_velocity[1], ref_velocity[0])
    else:
        desired = ego.theta
    ang = wrap_angle(desired - ego.theta)
    v = bounds.clamp_v(tracker.k_v * dist * math.cos(ang) + feed)
    omega = bounds.clamp_omega(tracker.k_omega * ang)
    return np.array([v, omega])


def fallback_control(world: WorldState, bounds: ControlBounds) -> np.ndarray:
    """Stop-and-turn command used when the safety QP is infeasible.

    Commands zero forward speed (clamped into the box) and full turn rate
    away from the nearest agent; an agent dead ahead breaks the tie by
    turning left.
    """
    v = bounds.clamp_v(0.0)
    if not world.agents:
        return np.array([v, 0.0])
    rel = min(world.agents, key=lambda a: float(np.linalg.norm(a - world.ego.position())))
    d = rel - world.ego.position()
    bearing = wrap_angle(math.atan2(d[1], d[0]) - world.ego.theta)
    omega = -bounds.omega_max if bearing > 0.0 else bounds.omega_max
    return np.array([v, omega])


# ---------------------------------------------------------------------------
# Episode configuration


@dataclass
class RbfSettings:
    neurons: int = 8
    width: float = 0.85
    ridge: float = 1e-6
    gamma1: float = 4.0
    gamma2: float = 0.4


@dataclass
class AcpSettings:
    alpha_target: float = 0.01
    alpha0: float = 0.01
    learning_rate: float = 0.002
    window: int = 30


@dataclass
class CbfSettings:
    d_safe: float = 1.0
    lookahead: float = 0.2
    kappa: float = 1.0
    c_f: float = 0.0
    c_g: float = 10.0
    c_beta: float = 10.0


@dataclass
class AgentSpec:
    policy: AgentPolicy
    start: np.ndarray
    c_dyn: float = 1.0
    r_max: Optional[float] = None  # defaults to the policy speed cap
    start_box: Optional[np.ndarray] = None  # rows (x, y), columns (lo, hi)

    def __post_init__(self):
        self.start = np.asarray(self.start, dtype=float).ravel()
        if self.start.shape != (2,):
            raise InputError("agent start must be a 2-vector")
        if self.start_box is not None:
            self.start_box = np.asarray(self.start_box, dtype=float)
            if self.start_box.shape != (2, 2):
                raise InputError("start_box must be a (2, 2) array of bounds")

    def r_max_value(self) -> float:
        return self.policy.speed_cap if self.r_max is None else self.r_max


@dataclass
class CollectionEpisode:
    reference: ReferenceSpec
    horizon: int  # number of observation instants; yields horizon - 1 samples


@dataclass
class EpisodeConfig:
    dt: float
    horizon: int
    seed: int
    ego_start: np.ndarray
    bounds: ControlBounds
    reference: ReferenceSpec
    tracker: TrackerConfig
    agents: list[AgentSpec]
    rbf: RbfSettings = field(default_factory=RbfSettings)
    acp: AcpSettings = field(default_factory=AcpSettings)
    cbf: CbfSettings = field(default_factory=CbfSettings)
    collection: list[CollectionEpisode] = field(default_factory=list)

    def __post_init__(self):
        if self.dt <= 0.0:
            raise InputError("dt must be positive")
        if self.horizon < 1:
            raise InputError("horizon must be at least 1")
        self.ego_start = np.asarray(self.ego_start, dtype=float).ravel()
        if self.ego_start.shape != (3,):
            raise InputError("ego_start must be (px, py, theta)")

    @property
    def num_agents(self) -> int:
        return len(self.agents)

    @property
    def state_dim(self) -> int:
        return 3 + 2 * self.num_agents


def build_cbf_config(cfg: EpisodeConfig) -> CbfConfig:
    """Assemble the filter config; deltas default to speed cap times dt."""
    u_max = cfg.bounds.max_corner_norm()
    return CbfConfig(
        d_safe=cfg.cbf.d_safe,
        lookahead=cfg.cbf.lookahead,
        kappa=cfg.cbf.kappa,
        c_f=cfg.cbf.c_f,
        c_g=cfg.cbf.c_g,
        c_beta=cfg.cbf.c_beta,
        c_dyn=[a.c_dyn for a in cfg.agents],
        delta_e=u_max * cfg.dt,
        delta_agents=[a.policy.speed_cap * cfg.dt for a in cfg.agents],
        dt=cfg.dt,
        u_bounds=cfg.bounds,
    )


def initial_world(cfg: EpisodeConfig) -> WorldState:
    return WorldState(
        t=0.0,
        ego=EgoState(*cfg.ego_start),
        agents=[a.start.copy() for a in cfg.agents],
    )


# ---------------------------------------------------------------------------
# Trace records


@dataclass
class AgentStepRecord:
    """Per-agent slice of one trace step.

    err_prev and est_err_prev describe the box issued one step earlier,
    resolved when this step's observation arrived; both are None at step 0.
    """

    position: np.ndarray
    distance: float
    est_deriv: np.ndarray
    q: float
    eta: float
    alpha: float
    err_prev: Optional[int]
    coverage_so_far: Optional[float]
    est_err_prev: Optional[float]
    h: float
    phi: float
    m_worst: float
    row_residual: float


@dataclass
class TraceRecord:
    step: int
    t: float
    ego: EgoState
    u: np.ndarray
    qp_status: str
    fallback: bool
    active_set: tuple[int, ...]
    agents: list[AgentStepRecord]


@dataclass
class EpisodeSummary:
    steps: int
    min_distance: float
    min_distance_per_agent: list[float]
    collision: bool
    coverage_per_agent: list[float]
    mean_est_err_per_agent: list[float]
    infeasible_steps: int
    final_alpha_per_agent: list[float]


@dataclass
class EpisodeResult:
    config: EpisodeConfig
    trace: list[TraceRecord]
    final_world: WorldState
    summary: EpisodeSummary
    networks: list[RbfNetwork]


# ---------------------------------------------------------------------------
# Closed-loop episode


def run_episode(cfg: EpisodeConfig, nets: Sequence[RbfNetwork],
                inference_mode: str = "combined") -> EpisodeResult:
    """Run the full pipeline for cfg.horizon control steps.

    nets are per-agent estimators (typically offline-trained).  Modes:
    combined updates the given weights online, offline-only freezes them,
    online-only zeroes them first and then updates online.  The box issued
    at each step is scored one step later when the realised agent motion is
    known; after the final world step the last box is scored as well, so a
    horizon-K episode produces exactly K miscoverage updates per agent.
    """
    if inference_mode not in INFERENCE_MODES:
        raise InputError(f"inference_mode must be one of {INFERENCE_MODES}")
    n = cfg.num_agents
    nets = list(nets)
    if len(nets) != n:
        raise InputError(f"{len(nets)} networks for {n} agents")
    for net in nets:
        if net.input_dim != cfg.state_dim or net.output_dim != 2:
            raise InputError(
                f"network dims ({net.input_dim} -> {net.output_dim}) do not match "
                f"the scenario ({cfg.state_dim} -> 2)"
            )
    if inference_mode == "online-only":
        nets = [replace(net, weights=np.zeros_like(net.weights)) for net in nets]
    update_enabled = inference_mode != "offline-only"

    cbf_cfg = build_cbf_config(cfg)
    stores = [RecordedDataStore(capacity=net.num_neurons + 1) for net in nets]
    windows = [CalibrationWindow(cfg.acp.window) for _ in range(n)]
    acp = [
        AcpState(
            alpha_t=cfg.acp.alpha0,
            alpha_target=cfg.acp.alpha_target,
            gamma=cfg.acp.learning_rate,
            r_max=spec.r_max_value(),
        )
        for spec in cfg.agents
    ]

    world = initial_world(cfg)
    prev_world: Optional[WorldState] = None
    prev_boxes: Optional[list[PredictionBox]] = None
    trace: list[TraceRecord] = []
    infeasible_steps = 0
    est_err_sums = [0.0] * n
    est_err_counts = [0] * n
    miss_counts = [0] * n
    min_dist = [math.inf] * n

    def resolve_previous(now: WorldState):
        """Score the boxes issued at the previous instant against the
        realised motion; feeds the estimator, window and alpha updates."""
        errs: list[int] = []
        est_errs: list[float] = []
        x_prev = prev_world.stacked()
        for i in range(n):
            d_i = finite_difference(prev_world.agents[i], now.agents[i], cfg.dt)
            sample = TrainingSample(x_prev, d_i, timestamp=prev_world.t)
            if update_enabled:
                try_admit(stores[i], nets[i], sample)
                nets[i] = update_online(
                    nets[i], stores[i], sample, cfg.rbf.gamma1, cfg.rbf.gamma2, cfg.dt
                )
            windows[i].push(x_prev, d_i)
            e = conformal.covered(prev_boxes[i], d_i)
            acp[i] = conformal.update_alpha(acp[i], e)
            errs.append(e)
            miss_counts[i] += e
            gap = float(np.max(np.abs(d_i - prev_boxes[i].center)))
            est_errs.append(gap)
            est_err_sums[i] += gap
            est_err_counts[i] += 1
        return errs, est_errs

    for k in range(cfg.horizon):
        err_prev: list[Optional[int]] = [None] * n
        est_err_prev: list[Optional[float]] = [None] * n
        if k > 0:
            errs, est_errs = resolve_previous(world)
            err_prev = list(errs)
            est_err_prev = list(est_errs)

        x_now = world.stacked()
        boxes = []
        for i in range(n):
            center = predict(nets[i], x_now)
            if len(windows[i]) == 0:
                # No calibration data yet: fall back to the conservative cap.
                q = acp[i].r_max
            else:
                q = conformal.quantile_width(
                    acp[i].alpha_t, conformal.scores(nets[i], windows[i]), acp[i].r_max
                )
            boxes.append(PredictionBox(center=center, radius=q))

        t = k * cfg.dt
        ref_p, ref_v = reference_state(cfg.reference, t)
        u_ref = reference_tracker(world.ego, ref_p, ref_v, cfg.tracker, cfg.bounds)
        problem = assemble_qp(world, boxes, cbf_cfg, u_ref)
        sol: QpSolution = solve(problem)
        if sol.feasible:
            u = sol.u
            used_fallback = False
        else:
            u = fallback_control(world, cfg.bounds)
            used_fallback = True
            infeasible_steps += 1

        agent_records = []
        for i in range(n):
            dist = float(np.linalg.norm(world.ego.position() - world.agents[i]))
            min_dist[i] = min(min_dist[i], dist)
            row = problem.cbf_rows[i]
            a_i, b_i = problem.rows[i]
            cov = None
            if est_err_counts[i]:
                cov = 1.0 - miss_counts[i] / est_err_counts[i]
            agent_records.append(AgentStepRecord(
                position=world.agents[i].copy(),
                distance=dist,
                est_deriv=boxes[i].center.copy(),
                q=boxes[i].radius,
                eta=_eta_of(cbf_cfg, i),
                alpha=acp[i].alpha_t,
                err_prev=err_prev[i],
                coverage_so_far=cov,
                est_err_prev=est_err_prev[i],
                h=row.h,
                phi=row.phi,
                m_worst=row.m_worst,
                row_residual=float(a_i @ u) - b_i,
            ))
        trace.append(TraceRecord(
            step=k,
            t=t,
            ego=EgoState(world.ego.px, world.ego.py, world.ego.theta),
            u=np.asarray(u, dtype=float).copy(),
            qp_status=sol.status,
            fallback=used_fallback,
            active_set=tuple(sol.active_set),
            agents=agent_records,
        ))

        new_agents = [step_agent(cfg.agents[i].policy, world, i, cfg.dt) for i in range(n)]
        new_ego = step_ego(world.ego, u, cfg.dt)
        prev_world = world
        prev_boxes = boxes
        world = WorldState(t=(k + 1) * cfg.dt, ego=new_ego, agents=new_agents)

    # Score the last boxes now that the final motion is known.
    resolve_previous(world)
    for i in range(n):
        min_dist[i] = min(min_dist[i], float(np.linalg.norm(world.ego.position() - world.agents[i])))

    overall_min = min(min_dist, default=math.inf)
    summary = EpisodeSummary(
        steps=cfg.horizon,
        min_distance=overall_min,
        min_distance_per_agent=list(min_dist),
        collision=overall_min < cfg.cbf.d_safe,
        coverage_per_agent=[conformal.coverage_rate(a.err_history) for a in acp],
        mean_est_err_per_agent=[
            est_err_sums[i] / est_err_counts[i] if est_err_counts[i] else math.nan
            for i in range(n)
        ],
        infeasible_steps=infeasible_steps,
        final_alpha_per_agent=[a.alpha_t for a in acp],
    )
    return EpisodeResult(
        config=cfg, trace=trace, final_world=world, summary=summary, networks=nets
    )


def _eta_of(cbf_cfg: CbfConfig, i: int) -> float:
    return cbf_cfg.c_dyn[i] * (sum(cbf_cfg.delta_agents) + cbf_cfg.delta_e)


# ---------------------------------------------------------------------------
# Offline data collection and training


def collect_offline(cfg: EpisodeConfig,
                    references: Optional[Sequence[CollectionEpisode]] = None
                    ) -> list[list[TrainingSample]]:
    """Drive the ego along collection references and record agent motion.

    Control runs through the same safety QP with conservative constant
    velocity boxes (center zero, radius r_max) instead of inference.  Each
    episode with `horizon` observation instants yields horizon - 1 labelled
    samples per agent; differencing loses one row.
    """
    episodes = list(references) if references is not None else list(cfg.collection)
    if not episodes:
        raise InputError("no collection episodes configured")
    n = cfg.num_agents
    cbf_cfg = build_cbf_config(cfg)
    datasets: list[list[TrainingSample]] = [[] for _ in range(n)]
    boxes = [
        PredictionBox(center=np.zeros(2), radius=spec.r_max_value())
        for spec in cfg.agents
    ]
    for ep in episodes:
        if ep.horizon < 2:
            raise InputError("collection episodes need at least 2 observations")
        world = initial_world(cfg)
        observed: list[WorldState] = [world]
        for k in range(ep.horizon - 1):
            t = k * cfg.dt
            ref_p, ref_v = reference_state(ep.reference, t)
            u_ref = reference_tracker(world.ego, ref_p, ref_v, cfg.tracker, cfg.bounds)
            sol = solve(assemble_qp(world, boxes, cbf_cfg, u_ref))
            u = sol.u if sol.feasible else fallback_control(world, cfg.bounds)
            new_agents = [step_agent(cfg.agents[i].policy, world, i, cfg.dt) for i in range(n)]
            new_ego = step_ego(world.ego, u, cfg.dt)
            world = WorldState(t=(k + 1) * cfg.dt, ego=new_ego, agents=new_agents)
            observed.append(world)
        for k in range(len(observed) - 1):
            x_k = observed[k].stacked()
            for i in range(n):
                d_i = finite_difference(observed[k].agents[i], observed[k + 1].agents[i], cfg.dt)
                datasets[i].append(TrainingSample(x_k, d_i, timestamp=observed[k].t))
    return datasets


def train_from_datasets(cfg: EpisodeConfig, datasets: Sequence[Sequence[TrainingSample]]
                        ) -> tuple[list[RbfNetwork], list[float]]:
    """Train one network per agent; returns networks and residual RMS values."""
    if len(datasets) != cfg.num_agents:
        raise InputError(f"{len(datasets)} datasets for {cfg.num_agents} agents")
    nets = []
    residuals = []
    for i, data in enumerate(datasets):
        net = train_offline(
            data, cfg.rbf.neurons, cfg.rbf.width, ridge=cfg.rbf.ridge, seed=cfg.seed + i
        )
        nets.append(net)
        residuals.append(training_residual_rms(net, data))
    return nets, residuals


# ---------------------------------------------------------------------------
# Batch runs


def randomize_starts(cfg: EpisodeConfig, rng: np.random.Generator) -> EpisodeConfig:
    """Replace agent starts with uniform draws from their start boxes."""
    agents = []
    for spec in cfg.agents:
        if spec.start_box is None:
            agents.append(spec)
            continue
        start = rng.uniform(spec.start_box[:, 0], spec.start_box[:, 1])
        agents.append(replace(spec, start=start))
    return replace(cfg, agents=agents)


def run_batch(cfg: EpisodeConfig, nets: Sequence[RbfNetwork], trials: int,
              base_seed: int, inference_mode: str = "combined") -> list[EpisodeResult]:
    """Run seeded trials with randomized agent starts."""
    if trials < 1:
        raise InputError("trials must be at least 1")
    results = []
    for trial in range(trials):
        rng = np.random.default_rng((base_seed, trial))
        trial_cfg = replace(randomize_starts(cfg, rng), seed=base_seed + trial)
        results.append(run_episode(trial_cfg, nets, inference_mode=inference_mode))
    return results
