"""Serialization for networks, configs, datasets, traces and run manifests.

JSON documents carry a format_version field and print every float with 17
significant digits so that load(save(x)) is bit-identical.  Time series go
to CSV with the same float formatting and a leading `# format:` comment
line.  A run manifest records the SHA-256 digest of every artifact a run
produced, plus the digest of the config that produced it.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from .cbf import ControlBounds, EgoState
from .conformal import AcpState
from .errors import IntegrityError, InputError, ParseError, SchemaError
from .rbf import RbfNetwork, TrainingSample
from .sim import (
    AcpSettings,
    AgentPolicy,
    AgentSpec,
    AgentStepRecord,
    CbfSettings,
    CollectionEpisode,
    EpisodeConfig,
    EpisodeResult,
    RbfSettings,
    ReferenceSpec,
    TraceRecord,
    TrackerConfig,
)

NETWORK_FORMAT = 1
CONFIG_FORMAT = 1
ACP_FORMAT = 1
DATASET_FORMAT = 1
TRACE_FORMAT = 1
MANIFEST_FORMAT = 1


def format_float(x: float) -> str:
    """Decimal with 17 significant digits; round-trips IEEE-754 doubles."""
    x = float(x)
    if not math.isfinite(x):
        raise InputError("cannot serialize a non-finite number")
    return format(x, ".17g")


def _emit(obj: Any, out: list[str], indent: int) -> None:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (key, val) in enumerate(obj.items()):
            if not isinstance(key, str):
                raise InputError("JSON object keys must be strings")
            out.append(pad + "  " + json.dumps(key) + ": ")
            _emit(val, out, indent + 1)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        items = list(obj)
        if not items:
            out.append("[]")
            return
        out.append("[\n")
        for i, val in enumerate(items):
            out.append(pad + "  ")
            _emit(val, out, indent + 1)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(pad + "]")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif obj is None:
        out.append("null")
    elif isinstance(obj, np.ndarray):
        _emit(obj.tolist(), out, indent)
    else:
        raise InputError(f"cannot serialize object of type {type(obj).__name__}")


def dumps_json(obj: Any) -> str:
    out: list[str] = []
    _emit(obj, out, 0)
    out.append("\n")
    return "".join(out)


def write_json(obj: Any, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_json(obj))


def read_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}") from exc


def _require(doc: dict, key: str, kinds, where: str) -> Any:
    if key not in doc:
        raise SchemaError(f"{where}: missing field {key!r}")
    val = doc[key]
    if kinds is not None and not isinstance(val, kinds):
        raise SchemaError(f"{where}: field {key!r} has type {type(val).__name__}")
    return val


def _check_version(doc: dict, expected: int, where: str) -> None:
    version = _require(doc, "format_version", int, where)
    if version > expected:
        raise SchemaError(
            f"{where}: format_version {version} is newer than supported {expected}"
        )


def _float_grid(val: Any, key: str, where: str) -> np.ndarray:
    try:
        arr = np.asarray(val, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: field {key!r} is not numeric") from exc
    return arr


# ---------------------------------------------------------------------------
# Networks


def network_to_dict(net: RbfNetwork) -> dict:
    return {
        "format_version": NETWORK_FORMAT,
        "kind": "rbf_network",
        "input_dim": net.input_dim,
        "output_dim": net.output_dim,
        "centers": net.centers.tolist(),
        "widths": net.widths.tolist(),
        "weights": net.weights.tolist(),
    }


def network_from_dict(doc: dict, where: str = "network") -> RbfNetwork:
    _check_version(doc, NETWORK_FORMAT, where)
    input_dim = _require(doc, "input_dim", int, where)
    output_dim = _require(doc, "output_dim", int, where)
    centers = _float_grid(_require(doc, "centers", list, where), "centers", where)
    widths = _float_grid(_require(doc, "widths", list, where), "widths", where)
    weights = _float_grid(_require(doc, "weights", list, where), "weights", where)
    if centers.ndim != 2 or centers.shape[0] != input_dim:
        raise SchemaError(f"{where}: field 'centers' must be {input_dim} rows")
    if weights.ndim != 2 or weights.shape != (centers.shape[1] + 1, output_dim):
        raise SchemaError(
            f"{where}: field 'weights' must have shape "
            f"({centers.shape[1] + 1}, {output_dim})"
        )
    try:
        return RbfNetwork(centers=centers, widths=widths, weights=weights)
    except InputError as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def save_network(net: RbfNetwork, path: str) -> None:
    write_json(network_to_dict(net), path)


def load_network(path: str) -> RbfNetwork:
    doc = read_json(path)
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: expected a JSON object")
    return network_from_dict(doc, where=path)


# ---------------------------------------------------------------------------
# ACP state


def acp_state_to_dict(state: AcpState) -> dict:
    return {
        "format_version": ACP_FORMAT,
        "kind": "acp_state",
        "alpha_t": state.alpha_t,
        "alpha_target": state.alpha_target,
        "gamma": state.gamma,
        "r_max": state.r_max,
        "err_history": list(state.err_history),
    }


def acp_state_from_dict(doc: dict, where: str = "acp_state") -> AcpState:
    _check_version(doc, ACP_FORMAT, where)
    errs = _require(doc, "err_history", list, where)
    if any(e not in (0, 1) for e in errs):
        raise SchemaError(f"{where}: field 'err_history' must be binary")
    return AcpState(
        alpha_t=float(_require(doc, "alpha_t", (int, float), where)),
        alpha_target=float(_require(doc, "alpha_target", (int, float), where)),
        gamma=float(_require(doc, "gamma", (int, float), where)),
        r_max=float(_require(doc, "r_max", (int, float), where)),
        err_history=[int(e) for e in errs],
    )


def save_acp_state(state: AcpState, path: str) -> None:
    write_json(acp_state_to_dict(state), path)


def load_acp_state(path: str) -> AcpState:
    doc = read_json(path)
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: expected a JSON object")
    return acp_state_from_dict(doc, where=path)


# ---------------------------------------------------------------------------
# Episode config


def config_to_dict(cfg: EpisodeConfig) -> dict:
    doc = {
        "format_version": CONFIG_FORMAT,
        "kind": "episode_config",
        "dt": cfg.dt,
        "horizon": cfg.horizon,
        "seed": cfg.seed,
        "ego_start": cfg.ego_start.tolist(),
        "u_bounds": {
            "v_min": cfg.bounds.v_min,
            "v_max": cfg.bounds.v_max,
            "omega_max": cfg.bounds.omega_max,
        },
        "reference": {"kind": cfg.reference.kind, "params": cfg.reference.params},
        "tracker": {"k_v": cfg.tracker.k_v, "k_omega": cfg.tracker.k_omega},
        "agents": [
            {
                "policy": spec.policy.kind,
                "speed_cap": spec.policy.speed_cap,
                "params": spec.policy.params,
                "start": spec.start.tolist(),
                "c_dyn": spec.c_dyn,
                **({"r_max": spec.r_max} if spec.r_max is not None else {}),
                **({"start_box": spec.start_box.tolist()} if spec.start_box is not None else {}),
            }
            for spec in cfg.agents
        ],
        "rbf": {
            "neurons": cfg.rbf.neurons,
            "width": cfg.rbf.width,
            "ridge": cfg.rbf.ridge,
            "gamma1": cfg.rbf.gamma1,
            "gamma2": cfg.rbf.gamma2,
        },
        "acp": {
            "alpha_target": cfg.acp.alpha_target,
            "alpha0": cfg.acp.alpha0,
            "learning_rate": cfg.acp.learning_rate,
            "window": cfg.acp.window,
        },
        "cbf": {
            "d_safe": cfg.cbf.d_safe,
            "lookahead": cfg.cbf.lookahead,
            "kappa": cfg.cbf.kappa,
            "c_f": cfg.cbf.c_f,
            "c_g": cfg.cbf.c_g,
            "c_beta": cfg.cbf.c_beta,
        },
    }
    if cfg.collection:
        doc["collection"] = {
            "episodes": [
                {
                    "reference": {"kind": ep.reference.kind, "params": ep.reference.params},
                    "horizon": ep.horizon,
                }
                for ep in cfg.collection
            ]
        }
    return doc


def _reference_from_dict(doc: dict, where: str) -> ReferenceSpec:
    kind = _require(doc, "kind", str, where)
    params = _require(doc, "params", dict, where)
    try:
        return ReferenceSpec(kind=kind, params=params)
    except InputError as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def config_from_dict(doc: dict, where: str = "config") -> EpisodeConfig:
    _check_version(doc, CONFIG_FORMAT, where)
    bounds_doc = _require(doc, "u_bounds", dict, where)
    tracker_doc = _require(doc, "tracker", dict, where)
    agents_doc = _require(doc, "agents", list, where)
    rbf_doc = doc.get("rbf", {})
    acp_doc = doc.get("acp", {})
    cbf_doc = doc.get("cbf", {})
    agents = []
    for i, a in enumerate(agents_doc):
        agent_where = f"{where}: agents[{i}]"
        if not isinstance(a, dict):
            raise SchemaError(f"{agent_where} must be an object")
        try:
            policy = AgentPolicy(
                kind=_require(a, "policy", str, agent_where),
                speed_cap=float(_require(a, "speed_cap", (int, float), agent_where)),
                params=a.get("params", {}),
            )
            spec = AgentSpec(
                policy=policy,
                start=_float_grid(_require(a, "start", list, agent_where), "start", agent_where),
                c_dyn=float(a.get("c_dyn", 1.0)),
                r_max=float(a["r_max"]) if "r_max" in a else None,
                start_box=_float_grid(a["start_box"], "start_box", agent_where)
                if "start_box" in a else None,
            )
        except InputError as exc:
            raise SchemaError(f"{agent_where}: {exc}") from exc
        agents.append(spec)
    collection = []
    if "collection" in doc:
        coll_doc = _require(doc, "collection", dict, where)
        for i, ep in enumerate(_require(coll_doc, "episodes", list, f"{where}: collection")):
            ep_where = f"{where}: collection.episodes[{i}]"
            collection.append(CollectionEpisode(
                reference=_reference_from_dict(
                    _require(ep, "reference", dict, ep_where), ep_where
                ),
                horizon=int(_require(ep, "horizon", int, ep_where)),
            ))
    try:
        return EpisodeConfig(
            dt=float(_require(doc, "dt", (int, float), where)),
            horizon=int(_require(doc, "horizon", int, where)),
            seed=int(_require(doc, "seed", int, where)),
            ego_start=_float_grid(
                _require(doc, "ego_start", list, where), "ego_start", where
            ),
            bounds=ControlBounds(
                v_min=float(_require(bounds_doc, "v_min", (int, float), where)),
                v_max=float(_require(bounds_doc, "v_max", (int, float), where)),
                omega_max=float(_require(bounds_doc, "omega_max", (int, float), where)),
            ),
            reference=_reference_from_dict(_require(doc, "reference", dict, where), where),
            tracker=TrackerConfig(
                k_v=float(tracker_doc.get("k_v", 1.0)),
                k_omega=float(tracker_doc.get("k_omega", 2.0)),
            ),
            agents=agents,
            rbf=RbfSettings(
                neurons=int(rbf_doc.get("neurons", 8)),
                width=float(rbf_doc.get("width", 0.85)),
                ridge=float(rbf_doc.get("ridge", 1e-6)),
                gamma1=float(rbf_doc.get("gamma1", 4.0)),
                gamma2=float(rbf_doc.get("gamma2", 0.4)),
            ),
            acp=AcpSettings(
                alpha_target=float(acp_doc.get("alpha_target", 0.01)),
                alpha0=float(acp_doc.get("alpha0", 0.01)),
                learning_rate=float(acp_doc.get("learning_rate", 0.002)),
                window=int(acp_doc.get("window", 30)),
            ),
            cbf=CbfSettings(
                d_safe=float(cbf_doc.get("d_safe", 1.0)),
                lookahead=float(cbf_doc.get("lookahead", 0.2)),
                kappa=float(cbf_doc.get("kappa", 1.0)),
                c_f=float(cbf_doc.get("c_f", 0.0)),
                c_g=float(cbf_doc.get("c_g", 10.0)),
                c_beta=float(cbf_doc.get("c_beta", 10.0)),
            ),
            collection=collection,
        )
    except InputError as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def save_config(cfg: EpisodeConfig, path: str) -> None:
    write_json(config_to_dict(cfg), path)


def load_config(path: str) -> EpisodeConfig:
    doc = read_json(path)
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: expected a JSON object")
    return config_from_dict(doc, where=path)


# ---------------------------------------------------------------------------
# Dataset CSV


def save_dataset(samples: Sequence[TrainingSample], path: str) -> None:
    """One CSV per agent dataset: time, stacked state, derivative label."""
    if not samples:
        raise InputError("refusing to write an empty dataset")
    state_dim = samples[0].state.shape[0]
    out_dim = samples[0].derivative.shape[0]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# format: safectrl-dataset v{DATASET_FORMAT}\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["t"]
            + [f"x{i}" for i in range(state_dim)]
            + [f"dxdt{i}" for i in range(out_dim)]
        )
        for s in samples:
            if s.state.shape[0] != state_dim or s.derivative.shape[0] != out_dim:
                raise InputError("inconsistent sample dimensions in dataset")
            writer.writerow(
                [format_float(s.timestamp)]
                + [format_float(v) for v in s.state]
                + [format_float(v) for v in s.derivative]
            )


def _read_csv(path: str, tag: str, version: int) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            first = fh.readline()
            if not first.startswith("# format: "):
                raise ParseError(f"{path}: missing '# format:' header line")
            stamp = first[len("# format: "):].strip()
            expected_tag, _, ver = stamp.partition(" v")
            if expected_tag != tag:
                raise SchemaError(f"{path}: document is {stamp!r}, expected {tag!r}")
            try:
                ver_num = int(ver)
            except ValueError as exc:
                raise ParseError(f"{path}: malformed format version {ver!r}") from exc
            if ver_num > version:
                raise SchemaError(
                    f"{path}: format version {ver} is newer than supported {version}"
                )
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not rows:
        raise SchemaError(f"{path}: missing header row")
    return rows[0], rows[1:]


def load_dataset(path: str) -> list[TrainingSample]:
    header, rows = _read_csv(path, "safectrl-dataset", DATASET_FORMAT)
    if not header or header[0] != "t":
        raise SchemaError(f"{path}: first column must be 't'")
    state_cols = [i for i, name in enumerate(header) if name.startswith("x")]
    deriv_cols = [i for i, name in enumerate(header) if name.startswith("dxdt")]
    if not state_cols or not deriv_cols:
        raise SchemaError(f"{path}: header must contain x* and dxdt* columns")
    samples = []
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise SchemaError(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
        try:
            samples.append(TrainingSample(
                state=np.array([float(row[i]) for i in state_cols]),
                derivative=np.array([float(row[i]) for i in deriv_cols]),
                timestamp=float(row[0]),
            ))
        except ValueError as exc:
            raise ParseError(f"{path}: row {r}: {exc}") from exc
    return samples


# ---------------------------------------------------------------------------
# Trace CSV

_EGO_COLS = ["step", "t", "ego_px", "ego_py", "ego_theta", "u_v", "u_omega",
             "qp_status", "fallback", "active_set"]
_AGENT_COLS = ["px", "py", "dist", "est_dx", "est_dy", "q", "eta", "alpha",
               "err_prev", "coverage", "est_err_prev", "h", "phi", "m_worst",
               "row_residual"]


def trace_columns(num_agents: int) -> list[str]:
    cols = list(_EGO_COLS)
    for i in range(num_agents):
        cols.extend(f"a{i}_{name}" for name in _AGENT_COLS)
    return cols


def _agent_cells(rec: AgentStepRecord) -> list[str]:
    return [
        format_float(rec.position[0]),
        format_float(rec.position[1]),
        format_float(rec.distance),
        format_float(rec.est_deriv[0]),
        format_float(rec.est_deriv[1]),
        format_float(rec.q),
        format_float(rec.eta),
        format_float(rec.alpha),
        "" if rec.err_prev is None else str(int(rec.err_prev)),
        "" if rec.coverage_so_far is None else format_float(rec.coverage_so_far),
        "" if rec.est_err_prev is None else format_float(rec.est_err_prev),
        format_float(rec.h),
        format_float(rec.phi),
        format_float(rec.m_worst),
        format_float(rec.row_residual),
    ]


def trace_to_csv_bytes(trace: Sequence[TraceRecord]) -> bytes:
    if not trace:
        raise InputError("refusing to write an empty trace")
    num_agents = len(trace[0].agents)
    buf = io.StringIO(newline="")
    buf.write(f"# format: safectrl-trace v{TRACE_FORMAT}\n")
    writer = csv.writer(buf)
    writer.writerow(trace_columns(num_agents))
    for rec in trace:
        if len(rec.agents) != num_agents:
            raise InputError("inconsistent agent count in trace")
        cells = [
            str(rec.step),
            format_float(rec.t),
            format_float(rec.ego.px),
            format_float(rec.ego.py),
            format_float(rec.ego.theta),
            format_float(rec.u[0]),
            format_float(rec.u[1]),
            rec.qp_status,
            str(int(rec.fallback)),
            ";".join(str(j) for j in rec.active_set),
        ]
        for agent in rec.agents:
            cells.extend(_agent_cells(agent))
        writer.writerow(cells)
    return buf.getvalue().encode("utf-8")


def save_trace(trace: Sequence[TraceRecord], path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(trace_to_csv_bytes(trace))


def load_trace(path: str) -> list[TraceRecord]:
    header, rows = _read_csv(path, "safectrl-trace", TRACE_FORMAT)
    base = len(_EGO_COLS)
    per_agent = len(_AGENT_COLS)
    if len(header) < base or (len(header) - base) % per_agent != 0:
        raise SchemaError(f"{path}: unexpected column count {len(header)}")
    num_agents = (len(header) - base) // per_agent
    if header != trace_columns(num_agents):
        raise SchemaError(f"{path}: header does not match the trace schema")
    out = []
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise SchemaError(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
        try:
            agents = []
            for i in range(num_agents):
                cells = row[base + i * per_agent: base + (i + 1) * per_agent]
                agents.append(AgentStepRecord(
                    position=np.array([float(cells[0]), float(cells[1])]),
                    distance=float(cells[2]),
                    est_deriv=np.array([float(cells[3]), float(cells[4])]),
                    q=float(cells[5]),
                    eta=float(cells[6]),
                    alpha=float(cells[7]),
                    err_prev=None if cells[8] == "" else int(cells[8]),
                    coverage_so_far=None if cells[9] == "" else float(cells[9]),
                    est_err_prev=None if cells[10] == "" else float(cells[10]),
                    h=float(cells[11]),
                    phi=float(cells[12]),
                    m_worst=float(cells[13]),
                    row_residual=float(cells[14]),
                ))
            out.append(TraceRecord(
                step=int(row[0]),
                t=float(row[1]),
                ego=EgoState(float(row[2]), float(row[3]), float(row[4])),
                u=np.array([float(row[5]), float(row[6])]),
                qp_status=row[7],
                fallback=bool(int(row[8])),
                active_set=tuple(int(j) for j in row[9].split(";")) if row[9] else (),
                agents=agents,
            ))
        except ValueError as exc:
            raise ParseError(f"{path}: row {r}: {exc}") from exc
    return out


def summary_to_dict(result: EpisodeResult) -> dict:
    s = result.summary
    return {
        "format_version": 1,
        "kind": "episode_summary",
        "steps": s.steps,
        # A run without agents has no distances; use null rather than inf.
        "min_distance": s.min_distance if math.isfinite(s.min_distance) else None,
        "min_distance_per_agent": list(s.min_distance_per_agent),
        "collision": s.collision,
        "coverage_per_agent": list(s.coverage_per_agent),
        "mean_est_err_per_agent": list(s.mean_est_err_per_agent),
        "infeasible_steps": s.infeasible_steps,
        "final_alpha_per_agent": list(s.final_alpha_per_agent),
    }


# ---------------------------------------------------------------------------
# Manifests


@dataclass
class RunManifest:
    """Digest record for one run: config digest, seeds and artifact digests."""

    config_digest: str
    seeds: list[int]
    versions: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)  # relative path -> sha256 hex


def bytes_digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def file_digest(path: str) -> str:
    with open(path, "rb") as fh:
        return bytes_digest(fh.read())


def _package_versions() -> dict:
    from . import __version__
    return {
        "safectrl": __version__,
        "network_format": NETWORK_FORMAT,
        "config_format": CONFIG_FORMAT,
        "dataset_format": DATASET_FORMAT,
        "trace_format": TRACE_FORMAT,
    }


def build_manifest(run_dir: str, config_digest: str, seeds: Sequence[int],
                   artifact_names: Sequence[str]) -> RunManifest:
    """Digest the named files (relative to run_dir) into a manifest."""
    artifacts = {}
    for name in artifact_names:
        artifacts[name] = file_digest(os.path.join(run_dir, name))
    return RunManifest(
        config_digest=config_digest,
        seeds=[int(s) for s in seeds],
        versions=_package_versions(),
        artifacts=artifacts,
    )


def manifest_to_dict(manifest: RunManifest) -> dict:
    return {
        "format_version": MANIFEST_FORMAT,
        "kind": "run_manifest",
        "config_digest": manifest.config_digest,
        "seeds": list(manifest.seeds),
        "versions": manifest.versions,
        "artifacts": manifest.artifacts,
    }


def save_manifest(manifest: RunManifest, path: str) -> None:
    write_json(manifest_to_dict(manifest), path)


def load_manifest(path: str) -> RunManifest:
    doc = read_json(path)
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: expected a JSON object")
    _check_version(doc, MANIFEST_FORMAT, path)
    artifacts = _require(doc, "artifacts", dict, path)
    for name, digest in artifacts.items():
        if not isinstance(digest, str):
            raise SchemaError(f"{path}: artifact digest for {name!r} must be a string")
    return RunManifest(
        config_digest=_require(doc, "config_digest", str, path),
        seeds=[int(s) for s in _require(doc, "seeds", list, path)],
        versions=_require(doc, "versions", dict, path),
        artifacts=dict(artifacts),
    )


def verify_manifest(manifest: RunManifest, run_dir: str) -> None:
    """Raise IntegrityError unless every artifact exists with its digest."""
    for name, digest in manifest.artifacts.items():
        path = os.path.join(run_dir, name)
        if not os.path.exists(path):
            raise IntegrityError(f"manifest artifact missing: {name}")
        actual = file_digest(path)
        if actual != digest:
            raise IntegrityError(
                f"digest mismatch for {name}: recorded {digest[:12]}..., "
                f"found {actual[:12]}..."
            )
