"""End-to-end CLI tests driving main() in process against a small scenario."""

import math
import os

import numpy as np
import pytest

from safectrl import persistence as ps
from safectrl.cbf import ControlBounds
from safectrl.cli import main
from safectrl.rbf import TrainingSample
from safectrl.sim import (
    AgentPolicy,
    AgentSpec,
    CollectionEpisode,
    EpisodeConfig,
    ReferenceSpec,
    TrackerConfig,
)


def small_config():
    circle = ReferenceSpec("circle", {"center": [0.0, 0.0], "radius": 2.0,
                                      "angular_rate": 0.4,
                                      "phase": -math.pi / 2.0})
    sine = ReferenceSpec("sine", {"start": [-2.0, -1.0], "speed": 1.0,
                                  "amplitude": 1.0, "frequency": 0.8})
    agent = AgentSpec(
        policy=AgentPolicy("pursue_ego", 0.5, {"gain": 0.8}),
        start=np.array([3.0, 2.0]),
        c_dyn=1.0,
        start_box=np.array([[2.5, 3.5], [1.5, 2.5]]),
    )
    cfg = EpisodeConfig(
        dt=0.05, horizon=40, seed=3,
        ego_start=np.array([0.0, -2.0, 0.0]),
        bounds=ControlBounds(0.0, 2.0, 2.0),
        reference=circle,
        tracker=TrackerConfig(k_v=1.0, k_omega=2.5),
        agents=[agent],
        collection=[CollectionEpisode(circle, 30), CollectionEpisode(sine, 30)],
    )
    cfg.rbf.neurons = 4
    return cfg


@pytest.fixture()
def env(tmp_path):
    cfg = small_config()
    config_path = str(tmp_path / "scenario.json")
    ps.save_config(cfg, config_path)
    return tmp_path, config_path, cfg


def run_pipeline(tmp_path, config_path):
    data_dir = str(tmp_path / "data")
    models_dir = str(tmp_path / "models")
    assert main(["collect", "--config", config_path, "--out", data_dir]) == 0
    assert main(["train", "--data", data_dir, "--out", models_dir,
                 "--neurons", "4"]) == 0
    return data_dir, models_dir


# ---------------------------------------------------------------------------
# collect


def test_collect_writes_expected_rows(env, capsys):
    tmp_path, config_path, cfg = env
    out = str(tmp_path / "data")
    assert main(["collect", "--config", config_path, "--out", out]) == 0
    expected = sum(ep.horizon - 1 for ep in cfg.collection)
    data = ps.load_dataset(os.path.join(out, "agent_0_dataset.csv"))
    assert len(data) == expected
    assert f"{expected} samples" in capsys.readouterr().out
    manifest = ps.load_manifest(os.path.join(out, "manifest.json"))
    assert "agent_0_dataset.csv" in manifest.artifacts
    ps.verify_manifest(manifest, out)


def test_collect_refuses_overwrite_without_force(env):
    tmp_path, config_path, _ = env
    out = str(tmp_path / "data")
    assert main(["collect", "--config", config_path, "--out", out]) == 0
    assert main(["collect", "--config", config_path, "--out", out]) == 2
    assert main(["collect", "--config", config_path, "--out", out, "--force"]) == 0


def test_collect_missing_config(tmp_path):
    assert main(["collect", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "d")]) == 2


def test_collect_config_without_episodes(env):
    tmp_path, _, cfg = env
    cfg.collection = []
    path = str(tmp_path / "bare.json")
    ps.save_config(cfg, path)
    assert main(["collect", "--config", path, "--out", str(tmp_path / "d")]) == 2


# ---------------------------------------------------------------------------
# train


def test_train_writes_models_and_summary(env):
    tmp_path, config_path, cfg = env
    data_dir, models_dir = run_pipeline(tmp_path, config_path)
    net = ps.load_network(os.path.join(models_dir, "agent_0.rbf.json"))
    assert net.input_dim == cfg.state_dim
    assert net.output_dim == 2
    doc = ps.read_json(os.path.join(models_dir, "training_summary.json"))
    assert doc["per_agent"][0]["samples"] == 58


def test_train_fits_constant_labels_exactly(tmp_path):
    # Constant derivative labels live in the bias feature's span, so a
    # ridge-free fit drives the residual to numerical zero.
    rng = np.random.default_rng(6)
    samples = [
        TrainingSample(state=rng.normal(size=5), derivative=np.array([0.3, -0.9]),
                       timestamp=0.05 * k)
        for k in range(50)
    ]
    data_dir = tmp_path / "data"
    data_dir.mkdir()
    ps.save_dataset(samples, str(data_dir / "agent_0_dataset.csv"))
    out = str(tmp_path / "models")
    assert main(["train", "--data", str(data_dir), "--out", out,
                 "--neurons", "3", "--ridge", "0"]) == 0
    doc = ps.read_json(os.path.join(out, "training_summary.json"))
    assert doc["per_agent"][0]["residual_rms"] <= 1e-6


def test_train_missing_data_dir(tmp_path):
    assert main(["train", "--data", str(tmp_path / "nope"),
                 "--out", str(tmp_path / "m")]) == 2


def test_train_empty_data_dir(tmp_path):
    empty = tmp_path / "data"
    empty.mkdir()
    assert main(["train", "--data", str(empty), "--out", str(tmp_path / "m")]) == 2


def test_train_too_few_samples_is_data_mismatch(tmp_path):
    samples = [
        TrainingSample(state=np.zeros(5), derivative=np.zeros(2), timestamp=0.0),
        TrainingSample(state=np.ones(5), derivative=np.zeros(2), timestamp=0.05),
    ]
    data_dir = tmp_path / "data"
    data_dir.mkdir()
    ps.save_dataset(samples, str(data_dir / "agent_0_dataset.csv"))
    assert main(["train", "--data", str(data_dir), "--out", str(tmp_path / "m"),
                 "--neurons", "8"]) == 3


# ---------------------------------------------------------------------------
# simulate


def test_simulate_end_to_end(env, capsys):
    tmp_path, config_path, cfg = env
    _, models_dir = run_pipeline(tmp_path, config_path)
    run_dir = str(tmp_path / "run")
    assert main(["simulate", "--config", config_path, "--models", models_dir,
                 "--out", run_dir]) == 0
    out = capsys.readouterr().out
    assert "min distance" in out
    summary = ps.read_json(os.path.join(run_dir, "summary.json"))
    assert summary["steps"] == cfg.horizon
    assert len(summary["coverage_per_agent"]) == 1
    trace = ps.load_trace(os.path.join(run_dir, "trace.csv"))
    assert len(trace) == cfg.horizon
    manifest = ps.load_manifest(os.path.join(run_dir, "manifest.json"))
    ps.verify_manifest(manifest, run_dir)


def test_simulate_inference_flag(env):
    tmp_path, config_path, _ = env
    _, models_dir = run_pipeline(tmp_path, config_path)
    run_dir = str(tmp_path / "run_offline")
    assert main(["simulate", "--config", config_path, "--models", models_dir,
                 "--out", run_dir, "--inference", "offline-only"]) == 0


def test_simulate_missing_model_file(env):
    tmp_path, config_path, _ = env
    models_dir = tmp_path / "models"
    models_dir.mkdir()
    assert main(["simulate", "--config", config_path, "--models", str(models_dir),
                 "--out", str(tmp_path / "run")]) == 3


def test_simulate_model_dimension_mismatch(env):
    tmp_path, config_path, _ = env
    models_dir = tmp_path / "models"
    models_dir.mkdir()
    rng = np.random.default_rng(0)
    from safectrl.rbf import RbfNetwork
    wrong = RbfNetwork(centers=rng.normal(size=(9, 4)),
                       widths=np.ones(4), weights=rng.normal(size=(5, 2)))
    ps.save_network(wrong, str(models_dir / "agent_0.rbf.json"))
    assert main(["simulate", "--config", config_path, "--models", str(models_dir),
                 "--out", str(tmp_path / "run")]) == 3


def test_simulate_zero_agent_config(tmp_path):
    cfg = small_config()
    cfg.agents = []
    config_path = str(tmp_path / "empty.json")
    ps.save_config(cfg, config_path)
    models_dir = tmp_path / "models"
    models_dir.mkdir()
    run_dir = str(tmp_path / "run")
    assert main(["simulate", "--config", config_path, "--models", str(models_dir),
                 "--out", run_dir]) == 0
    summary = ps.read_json(os.path.join(run_dir, "summary.json"))
    assert summary["min_distance"] is None
    assert summary["coverage_per_agent"] == []
    assert summary["collision"] is False


# ---------------------------------------------------------------------------
# batch


def test_batch_trains_when_no_models_given(env, capsys):
    tmp_path, config_path, _ = env
    out = str(tmp_path / "batch")
    assert main(["batch", "--config", config_path, "--trials", "3",
                 "--seed", "11", "--out", out]) == 0
    assert "3 trials" in capsys.readouterr().out
    doc = ps.read_json(os.path.join(out, "batch_summary.json"))
    assert doc["trials"] == 3
    assert len(doc["per_trial"]) == 3
    for trial in range(3):
        assert os.path.exists(os.path.join(out, f"trial_{trial:03d}_trace.csv"))
        assert os.path.exists(os.path.join(out, f"trial_{trial:03d}_summary.json"))
    manifest = ps.load_manifest(os.path.join(out, "manifest.json"))
    ps.verify_manifest(manifest, out)


def test_batch_accepts_pretrained_models(env):
    tmp_path, config_path, _ = env
    _, models_dir = run_pipeline(tmp_path, config_path)
    out = str(tmp_path / "batch")
    assert main(["batch", "--config", config_path, "--trials", "2",
                 "--seed", "5", "--out", out, "--models", models_dir]) == 0


def test_batch_without_models_or_collection(env):
    tmp_path, _, cfg = env
    cfg.collection = []
    path = str(tmp_path / "bare.json")
    ps.save_config(cfg, path)
    assert main(["batch", "--config", path, "--trials", "2", "--seed", "5",
                 "--out", str(tmp_path / "batch")]) == 2


# ---------------------------------------------------------------------------
# report


def test_report_over_batch(env, capsys):
    tmp_path, config_path, _ = env
    out = str(tmp_path / "batch")
    assert main(["batch", "--config", config_path, "--trials", "2",
                 "--seed", "11", "--out", out]) == 0
    capsys.readouterr()
    assert main(["report", "--in", out]) == 0
    text = capsys.readouterr().out
    assert "episodes            2" in text
    assert "agent 0" in text
    report = ps.read_json(os.path.join(out, "report.json"))
    assert report["episodes"] == 2
    assert len(report["coverage_mean_per_agent"]) == 1


def test_report_refuses_tampered_run(env, capsys):
    tmp_path, config_path, _ = env
    _, models_dir = run_pipeline(tmp_path, config_path)
    run_dir = str(tmp_path / "run")
    assert main(["simulate", "--config", config_path, "--models", models_dir,
                 "--out", run_dir]) == 0
    # Tamper with the trace after the manifest was sealed.
    trace_path = os.path.join(run_dir, "trace.csv")
    with open(trace_path, "a") as fh:
        fh.write("# tampered\n")
    assert main(["report", "--in", run_dir]) == 2
    assert "refusing" in capsys.readouterr().err


def test_report_requires_manifest(tmp_path):
    empty = tmp_path / "nothing"
    empty.mkdir()
    assert main(["report", "--in", str(empty)]) == 2


def test_report_single_run(env, capsys):
    tmp_path, config_path, _ = env
    _, models_dir = run_pipeline(tmp_path, config_path)
    run_dir = str(tmp_path / "run")
    assert main(["simulate", "--config", config_path, "--models", models_dir,
                 "--out", run_dir]) == 0
    capsys.readouterr()
    assert main(["report", "--in", run_dir]) == 0
    assert "episodes            1" in capsys.readouterr().out
