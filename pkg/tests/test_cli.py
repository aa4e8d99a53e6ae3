import csv
import json

import numpy as np
import pytest

from lindpinn import cli
from lindpinn.errors import ConfigConflict, NonFiniteLoss
from lindpinn.model import PinnModel
from lindpinn.oracle import Dataset
from lindpinn.train import TrainReport


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.mark.parametrize("preset, shape", [("case1", (30, 3)), ("case2", (25, 4)), ("case3", (30, 4))])
def test_generate_shapes(tmp_path, preset, shape):
    assert cli.main(["-q", "generate", "--preset", preset, "--sigma", "0", "--out", str(tmp_path)]) == 0
    table = rows(tmp_path / "dataset.csv")
    assert len(table) - 1 == shape[0]
    assert all(len(r) - 1 == shape[1] for r in table)


def test_generate_is_idempotent(tmp_path):
    for d in ("a", "b"):
        argv = ["-q", "generate", "--preset", "case2", "--sigma", "0.1", "--seed", "7"]
        assert cli.main(argv + ["--out", str(tmp_path / d)]) == 0
    for name in ("dataset.csv", "dataset.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_dataset_roundtrip(tmp_path):
    preset = cli.resolve_preset("case2", sigma=0.05, seed=3)
    ds = cli.generate(preset, tmp_path)
    back = Dataset.load(tmp_path / "dataset.csv")
    np.testing.assert_array_equal(back.times, ds.times)
    np.testing.assert_array_equal(back.values, ds.values)
    np.testing.assert_array_equal(back.initial_state, ds.initial_state)
    assert back.metadata() == ds.metadata()


def test_train_evaluate_roundtrip(tmp_path):
    out = tmp_path / "run"
    assert cli.main(["-q", "train", "--preset", "case2", "--epochs", "20", "--out", str(out)]) == 0
    report = TrainReport.load(out / "report.json")
    assert report.epochs == 20
    assert all(np.isfinite(v) and v > 0 for v in report.inferred_rates.values())
    assert TrainReport.from_dict(json.loads(json.dumps(report.to_dict()))) == report
    model, preset, _ = cli.load_checkpoint(out / "checkpoint.json")
    assert preset.name == "case2" and preset.optimizer.epochs == 20
    again = PinnModel.from_dict(model.to_dict())
    np.testing.assert_array_equal(again.flat(), model.flat())

    assert cli.main(["-q", "evaluate", "--out", str(out)]) == 0
    metrics = json.loads((out / "metrics.json").read_text())
    assert set(metrics["rmse"]) == {"X1", "Z1", "X2", "Z2"}
    assert all(np.isfinite(v) and v >= 0 for v in metrics["rmse"].values())
    for name in ("trajectories.svg", "concurrence.svg", "curves.csv"):
        assert (out / name).exists()
    log = rows(out / "train_log.csv")
    assert log[0] == ["epoch", "L_data", "L_phys", "L_ic", "L_constr", "total", "lr"]
    assert len(log) == 21


def test_case1_report_has_rate_curves(tmp_path):
    assert cli.main(["-q", "train", "--preset", "case1", "--epochs", "5", "--out", str(tmp_path)]) == 0
    report = TrainReport.load(tmp_path / "report.json")
    assert report.inferred_rates is None
    assert set(report.gamma_curves) == {"t", "AD", "PD"}
    assert all(len(v) == 501 for v in report.gamma_curves.values())
    assert cli.main(["-q", "evaluate", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "rates.svg").exists()


@pytest.mark.parametrize("preset", ["case1", "case2", "case3"])
def test_oracle_self_evaluation(tmp_path, preset):
    assert cli.main(["-q", "evaluate", "--oracle", "--preset", preset, "--out", str(tmp_path)]) == 0
    metrics = json.loads((tmp_path / "metrics.json").read_text())
    assert max(metrics["rmse"].values()) <= 1e-9
    if preset == "case1":
        assert max(metrics["gamma_rmse"].values()) <= 1e-9
    if preset == "case3":
        assert metrics["max_oracle_concurrence"] > 0.8


def test_config_file_merges_and_is_echoed(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"name": "case2", "optimizer": {"lr": 0.002}, "n_collocation": 50}))
    out = tmp_path / "run"
    argv = ["-q", "train", "--config", str(cfg), "--epochs", "3", "--out", str(out)]
    assert cli.main(argv) == 0
    config = TrainReport.load(out / "report.json").config
    assert config["optimizer"]["lr"] == 0.002
    assert config["optimizer"]["epochs"] == 3
    assert config["n_collocation"] == 50


def test_flags_override_config():
    preset = cli.resolve_preset(None, "desk", {"name": "case2", "seed": 4}, seed=9)
    assert preset.seed == 9 and preset.network.seed == 9
    assert cli.resolve_preset("case3", "paper").lbfgs.max_iters == 500


def test_exit_codes(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert cli.main(["-q", "generate", "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"name": "case2", "optimizer": {"kind": "sgd"}}))
    assert cli.main(["-q", "generate", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert cli.main(["-q", "generate", "--preset", "case1", "--config", str(tmp_path / "none.json")]) == 4

    data = tmp_path / "d"
    assert cli.main(["-q", "generate", "--preset", "case1", "--out", str(data)]) == 0
    csv_path = str(data / "dataset.csv")
    assert cli.main(["-q", "train", "--preset", "case2", "--data", csv_path, "--epochs", "20"]) == 2
    assert cli.main(["-q", "train", "--data", csv_path, "--sigma", "0.1", "--epochs", "20"]) == 2

    corrupt = tmp_path / "ck.json"
    corrupt.write_text("{")
    assert cli.main(["-q", "evaluate", "--checkpoint", str(corrupt)]) == 4

    def explode(*args, **kwargs):
        raise NonFiniteLoss(12)

    monkeypatch.setattr(cli, "train", explode)
    assert cli.main(["-q", "train", "--preset", "case1", "--out", str(tmp_path / "nan")]) == 3


def test_train_uses_given_dataset(tmp_path):
    data = tmp_path / "d"
    assert cli.main(["-q", "generate", "--preset", "case2", "--sigma", "0.05", "--out", str(data)]) == 0
    out = tmp_path / "run"
    argv = ["-q", "train", "--data", str(data / "dataset.csv"), "--epochs", "3", "--out", str(out)]
    assert cli.main(argv) == 0
    report = TrainReport.load(out / "report.json")
    assert report.preset == "case2" and report.sigma == 0.05


def test_sweep_bookkeeping(tmp_path):
    preset = cli.resolve_preset("case2", epochs=3)
    reports = cli.sweep(preset, [0.01, 0.2], [0, 1, 2], tmp_path, workers=2)
    assert len(reports) == 6
    assert len(list(tmp_path.glob("*/report.json"))) == 6
    summary = cli.read_summary(tmp_path / "summary.csv")
    assert len(summary) == 2 * 4
    for row in summary:
        assert int(row["n_seeds"]) == 3
        assert float(row["abs_err_mean"]) >= 0 and float(row["std"]) >= 0


def test_sweep_matches_train(tmp_path):
    preset = cli.resolve_preset("case2", epochs=15, seed=2)
    _, single = cli.run_training(cli.resolve_preset("case2", epochs=15, seed=2), tmp_path / "train")
    reports = cli.sweep(preset, [0.0], [2], tmp_path / "sweep", workers=1)
    assert reports[(0.0, 2)].comparable() == single.comparable()


def test_sweep_rejects_time_varying(tmp_path):
    with pytest.raises(ConfigConflict):
        cli.sweep(cli.resolve_preset("case1", epochs=1), [0.0], [0], tmp_path)
