"""Command-line front end: collect, train, simulate, batch, report.

Exit codes: 0 success, 2 usage or config problems, 3 data/model mismatch,
4 unexpected runtime fault.  Every run writes a manifest with SHA-256
digests of its artifacts; `report` refuses inputs whose digests no longer
match.
"""

from __future__ import annotations

import argparse
import os
import sys
import traceback

import numpy as np

from . import persistence, sim
from .errors import (
    DegenerateDataError,
    InputError,
    InsufficientDataError,
    IntegrityError,
    ParseError,
    SafectrlError,
    SchemaError,
)
from .rbf import train_offline, training_residual_rms

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA_MISMATCH = 3
EXIT_RUNTIME = 4


class _CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _fail(code: int, message: str) -> "_CliError":
    return _CliError(code, message)


def _load_config(path: str) -> sim.EpisodeConfig:
    if not os.path.exists(path):
        raise _fail(EXIT_USAGE, f"config not found: {path}")
    try:
        return persistence.load_config(path)
    except (ParseError, SchemaError) as exc:
        raise _fail(EXIT_USAGE, f"bad config: {exc}") from exc


def _prepare_out_dir(out_dir: str, force: bool) -> None:
    manifest_path = os.path.join(out_dir, "manifest.json")
    if os.path.exists(manifest_path) and not force:
        raise _fail(EXIT_USAGE,
                    f"{out_dir} already holds a run (manifest.json); use --force to overwrite")
    os.makedirs(out_dir, exist_ok=True)


def _write_manifest(out_dir: str, config_digest: str, seeds, names) -> None:
    manifest = persistence.build_manifest(out_dir, config_digest, seeds, names)
    persistence.save_manifest(manifest, os.path.join(out_dir, "manifest.json"))


def _load_models(models_dir: str, cfg: sim.EpisodeConfig):
    if not os.path.isdir(models_dir):
        raise _fail(EXIT_USAGE, f"models directory not found: {models_dir}")
    nets = []
    for i in range(cfg.num_agents):
        path = os.path.join(models_dir, f"agent_{i}.rbf.json")
        if not os.path.exists(path):
            raise _fail(EXIT_DATA_MISMATCH,
                        f"missing model for agent {i}: {path}")
        try:
            nets.append(persistence.load_network(path))
        except (ParseError, SchemaError) as exc:
            raise _fail(EXIT_DATA_MISMATCH, f"bad model: {exc}") from exc
    for i, net in enumerate(nets):
        if net.input_dim != cfg.state_dim or net.output_dim != 2:
            raise _fail(EXIT_DATA_MISMATCH,
                        f"agent {i} model dims ({net.input_dim} -> {net.output_dim}) do not "
                        f"match the scenario ({cfg.state_dim} -> 2)")
    return nets


def _train_nets(cfg: sim.EpisodeConfig, datasets):
    try:
        return sim.train_from_datasets(cfg, datasets)
    except InsufficientDataError as exc:
        raise _fail(EXIT_DATA_MISMATCH, str(exc)) from exc
    except DegenerateDataError as exc:
        raise _fail(EXIT_DATA_MISMATCH, str(exc)) from exc


def _cmd_collect(args) -> int:
    cfg = _load_config(args.config)
    if not cfg.collection:
        raise _fail(EXIT_USAGE, "config has no collection episodes")
    _prepare_out_dir(args.out, args.force)
    datasets = sim.collect_offline(cfg)
    names = []
    for i, data in enumerate(datasets):
        name = f"agent_{i}_dataset.csv"
        persistence.save_dataset(data, os.path.join(args.out, name))
        names.append(name)
        print(f"agent {i}: {len(data)} samples -> {name}")
    digest = persistence.bytes_digest(
        persistence.dumps_json(persistence.config_to_dict(cfg)).encode()
    )
    _write_manifest(args.out, digest, [cfg.seed], names)
    return EXIT_OK


def _cmd_train(args) -> int:
    data_dir = args.data
    if not os.path.isdir(data_dir):
        raise _fail(EXIT_USAGE, f"data directory not found: {data_dir}")
    paths = sorted(
        p for p in os.listdir(data_dir)
        if p.startswith("agent_") and p.endswith("_dataset.csv")
    )
    if not paths:
        raise _fail(EXIT_USAGE, f"no agent_*_dataset.csv files in {data_dir}")
    try:
        datasets = [persistence.load_dataset(os.path.join(data_dir, p)) for p in paths]
    except (ParseError, SchemaError) as exc:
        raise _fail(EXIT_USAGE, f"bad dataset: {exc}") from exc
    _prepare_out_dir(args.out, args.force)
    names = []
    summary = []
    for i, data in enumerate(datasets):
        try:
            net = train_offline(data, args.neurons, args.width,
                                ridge=args.ridge, seed=args.seed + i)
        except (InsufficientDataError, DegenerateDataError) as exc:
            raise _fail(EXIT_DATA_MISMATCH, f"agent {i}: {exc}") from exc
        rms = training_residual_rms(net, data)
        name = f"agent_{i}.rbf.json"
        persistence.save_network(net, os.path.join(args.out, name))
        names.append(name)
        summary.append({"agent": i, "samples": len(data), "residual_rms": rms})
        print(f"agent {i}: {len(data)} samples, residual rms {rms:.6g} -> {name}")
    persistence.write_json(
        {"format_version": 1, "kind": "training_summary", "per_agent": summary},
        os.path.join(args.out, "training_summary.json"),
    )
    names.append("training_summary.json")
    _write_manifest(args.out, "", [args.seed], names)
    return EXIT_OK


def _run_to_files(result, out_dir: str, prefix: str = "") -> list[str]:
    trace_name = f"{prefix}trace.csv"
    summary_name = f"{prefix}summary.json"
    persistence.save_trace(result.trace, os.path.join(out_dir, trace_name))
    persistence.write_json(persistence.summary_to_dict(result),
                           os.path.join(out_dir, summary_name))
    return [trace_name, summary_name]


def _cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    nets = _load_models(args.models, cfg)
    _prepare_out_dir(args.out, args.force)
    result = sim.run_episode(cfg, nets, inference_mode=args.inference)
    names = _run_to_files(result, args.out)
    digest = persistence.bytes_digest(
        persistence.dumps_json(persistence.config_to_dict(cfg)).encode()
    )
    _write_manifest(args.out, digest, [cfg.seed], names)
    s = result.summary
    print(f"steps {s.steps}  min distance {s.min_distance:.3f}  "
          f"collision {s.collision}  infeasible {s.infeasible_steps}")
    for i, cov in enumerate(s.coverage_per_agent):
        print(f"agent {i}: coverage {cov:.4f}  "
              f"mean est err {s.mean_est_err_per_agent[i]:.4f}")
    return EXIT_OK


def _cmd_batch(args) -> int:
    cfg = _load_config(args.config)
    if args.models is not None:
        nets = _load_models(args.models, cfg)
    else:
        if not cfg.collection:
            raise _fail(EXIT_USAGE,
                        "config has no collection episodes and no --models given")
        datasets = sim.collect_offline(cfg)
        nets, _ = _train_nets(cfg, datasets)
    _prepare_out_dir(args.out, args.force)
    results = sim.run_batch(cfg, nets, args.trials, args.seed)
    names = []
    collisions = 0
    for trial, result in enumerate(results):
        names.extend(_run_to_files(result, args.out, prefix=f"trial_{trial:03d}_"))
        if result.summary.collision:
            collisions += 1
    batch_doc = {
        "format_version": 1,
        "kind": "batch_summary",
        "trials": args.trials,
        "base_seed": args.seed,
        "collision_episodes": collisions,
        "per_trial": [persistence.summary_to_dict(r) for r in results],
    }
    persistence.write_json(batch_doc, os.path.join(args.out, "batch_summary.json"))
    names.append("batch_summary.json")
    digest = persistence.bytes_digest(
        persistence.dumps_json(persistence.config_to_dict(cfg)).encode()
    )
    _write_manifest(args.out, digest, [args.seed], names)
    print(f"{args.trials} trials, {collisions} with a collision")
    return EXIT_OK


def _cmd_report(args) -> int:
    manifest_path = os.path.join(args.run_dir, "manifest.json")
    if not os.path.exists(manifest_path):
        raise _fail(EXIT_USAGE, f"no manifest.json in {args.run_dir}")
    try:
        manifest = persistence.load_manifest(manifest_path)
        persistence.verify_manifest(manifest, args.run_dir)
    except (ParseError, SchemaError, IntegrityError) as exc:
        raise _fail(EXIT_USAGE, f"refusing to report: {exc}") from exc
    batch_path = os.path.join(args.run_dir, "batch_summary.json")
    summaries = []
    if os.path.exists(batch_path):
        doc = persistence.read_json(batch_path)
        summaries = doc.get("per_trial", [])
    else:
        single = os.path.join(args.run_dir, "summary.json")
        if os.path.exists(single):
            summaries = [persistence.read_json(single)]
    if not summaries:
        raise _fail(EXIT_USAGE, f"no summaries found in {args.run_dir}")
    # Zero-agent runs record null distances; skip them in the aggregates.
    min_dists = [s["min_distance"] for s in summaries if s["min_distance"] is not None]
    collisions = sum(1 for s in summaries if s["collision"])
    infeasible = sum(s["infeasible_steps"] for s in summaries)
    coverages = np.array([s["coverage_per_agent"] for s in summaries])
    est_errs = np.array([s["mean_est_err_per_agent"] for s in summaries])
    report = {
        "format_version": 1,
        "kind": "report",
        "episodes": len(summaries),
        "collision_episodes": collisions,
        "min_distance": min(min_dists) if min_dists else None,
        "mean_min_distance": float(np.mean(min_dists)) if min_dists else None,
        "infeasible_steps_total": infeasible,
        "coverage_min_per_agent": coverages.min(axis=0).tolist(),
        "coverage_mean_per_agent": coverages.mean(axis=0).tolist(),
        "est_err_mean_per_agent": est_errs.mean(axis=0).tolist(),
        "est_err_p90_per_agent": np.quantile(est_errs, 0.9, axis=0).tolist(),
    }
    persistence.write_json(report, os.path.join(args.run_dir, "report.json"))
    print(f"episodes            {report['episodes']}")
    print(f"collision episodes  {report['collision_episodes']}")
    dist_text = "n/a" if report["min_distance"] is None else f"{report['min_distance']:.3f}"
    print(f"min distance        {dist_text}")
    print(f"infeasible steps    {report['infeasible_steps_total']}")
    for i in range(coverages.shape[1]):
        print(f"agent {i}: coverage min {report['coverage_min_per_agent'][i]:.4f} "
              f"mean {report['coverage_mean_per_agent'][i]:.4f}  "
              f"est err mean {report['est_err_mean_per_agent'][i]:.4f}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="safectrl",
        description="Safe multi-agent control: collect data, train estimators, simulate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("collect", help="record offline training data")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_collect)

    p = sub.add_parser("train", help="fit per-agent networks to recorded data")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--neurons", type=int, default=8)
    p.add_argument("--width", type=float, default=0.85)
    p.add_argument("--ridge", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("simulate", help="run one closed-loop episode")
    p.add_argument("--config", required=True)
    p.add_argument("--models", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--inference", choices=sim.INFERENCE_MODES, default="combined")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("batch", help="run seeded trials with randomized starts")
    p.add_argument("--config", required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--models", default=None,
                   help="models directory; omitted means collect+train from the config")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_batch)

    p = sub.add_parser("report", help="aggregate a run directory")
    p.add_argument("--in", dest="run_dir", required=True)
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ParseError, SchemaError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InsufficientDataError, DegenerateDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA_MISMATCH
    except SafectrlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception:
        traceback.print_exc()
        return EXIT_RUNTIME


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
