"""Command line entry point: ``lindpinn generate|train|evaluate|sweep``.

Every verb takes ``--preset``, ``--sigma``, ``--seed``, ``--epochs``,
``--out`` and ``--profile``. ``--config`` names a JSON file mirroring
:class:`~lindpinn.presets.ExperimentPreset` (partial files are merged over
the named preset); explicit flags win over the file.

Exit codes: 0 success, 2 bad configuration, 3 numeric failure, 4 I/O.
"""

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    CheckpointCorrupt,
    ConfigConflict,
    LabelUnknown,
    LineSearchFailed,
    NonFiniteLoss,
    StepTooLarge,
    UnknownPreset,
)
from .model import PinnModel
from .oracle import Dataset, generate_dataset
from .plots import plot_concurrence, plot_rates, plot_trajectories
from .presets import PRESET_NAMES, ExperimentPreset, apply_overrides, case1_rates, get_preset
from .quantum import coefficients, concurrence_batch, pauli_basis, reconstruct_density
from .train import compare_to_oracle, oracle_on_grid, train

log = logging.getLogger("lindpinn")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
DATASET_FILE = "dataset.csv"
REPORT_FILE = "report.json"
CHECKPOINT_FILE = "checkpoint.json"
LOG_FILE = "train_log.csv"
METRICS_FILE = "metrics.json"
SUMMARY_FILE = "summary.csv"


# presets and configuration


def _merge(base, update):
    out = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def resolve_preset(name=None, profile="desk", config=None, **overrides):
    """Preset ``name`` under ``profile``, merged with a config dict, then flag overrides."""
    config = dict(config or {})
    cfg_name = config.get("name")
    if name and cfg_name and name != cfg_name:
        raise ConfigConflict(f"--preset {name} conflicts with config name {cfg_name}")
    name = name or cfg_name
    if not name:
        raise ConfigConflict("no preset given; use --preset or a config with 'name'")
    preset = get_preset(name, profile)
    if config:
        try:
            preset = ExperimentPreset.from_dict(_merge(preset.to_dict(), config))
        except (TypeError, ValueError) as exc:
            raise ConfigConflict(f"invalid config: {exc}") from exc
        if "seed" in config and "network" not in config:
            preset.network.seed = preset.seed
    return apply_overrides(preset, overrides)


def _preset_from_args(args):
    config = None
    if getattr(args, "config", None):
        with open(args.config) as fh:
            config = json.load(fh)
    return resolve_preset(
        args.preset,
        args.profile,
        config,
        sigma=args.sigma,
        seed=args.seed,
        epochs=args.epochs,
        lbfgs_iters=getattr(args, "lbfgs_iters", None),
    )


def default_out(preset):
    return Path("runs") / f"{preset.name}-sigma{preset.sigma:g}-seed{preset.seed}"


# verbs as library calls


def generate(preset, out_dir):
    """Write the preset's dataset to ``out_dir/dataset.csv`` (+ sidecar); return the Dataset."""
    ds = generate_dataset(
        preset.lindblad_model(),
        preset.initial_state(),
        preset.n_points,
        preset.t_end,
        preset.labels,
        preset.sigma,
        preset.seed,
        dt=preset.dt,
        preset=preset.name,
    )
    ds.save(Path(out_dir) / DATASET_FILE)
    return ds


def check_dataset(preset, ds):
    if ds.preset and ds.preset != preset.name:
        raise ConfigConflict(f"dataset was generated for {ds.preset}, not {preset.name}")
    if ds.n_qubits != preset.n_qubits:
        raise ConfigConflict(f"dataset has {ds.n_qubits} qubit(s), preset {preset.n_qubits}")
    if abs(ds.t_end - preset.t_end) > 1e-12:
        raise ConfigConflict(f"dataset spans [0, {ds.t_end}], preset [0, {preset.t_end}]")
    basis = pauli_basis(preset.n_qubits)
    for lab in ds.labels:
        basis.index(lab)
    rho0 = preset.initial_state()
    if np.max(np.abs(ds.initial_state - rho0)) > 1e-9:
        raise ConfigConflict("dataset initial state differs from the preset's")


def run_training(preset, out_dir, dataset=None, progress=None):
    """Train on ``dataset`` (generated when None); write report, checkpoint and log."""
    out_dir = Path(out_dir)
    if dataset is None:
        dataset = generate(preset, out_dir)
        data_path = out_dir / DATASET_FILE
    else:
        dataset, data_path = dataset
        check_dataset(preset, dataset)
        preset.sigma = float(dataset.sigma)
    out_dir.mkdir(parents=True, exist_ok=True)
    model, report = train(preset, dataset, log_path=out_dir / LOG_FILE, progress=progress)
    report.save(out_dir / REPORT_FILE)
    model.save(
        out_dir / CHECKPOINT_FILE,
        extra={"preset": preset.to_dict(), "dataset": str(Path(data_path).resolve())},
    )
    return model, report


def load_checkpoint(path):
    model, extra = PinnModel.load(path)
    if "preset" not in extra:
        raise CheckpointCorrupt(f"{path}: checkpoint carries no preset config")
    try:
        preset = ExperimentPreset.from_dict(extra["preset"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointCorrupt(f"{path}: bad preset config: {exc}") from exc
    return model, preset, extra


def evaluate(preset, out_dir, model=None, dataset=None):
    """Dense-grid comparison against the oracle; ``model=None`` evaluates the oracle itself.

    Writes ``metrics.json``, ``curves.csv`` and SVG plots; returns the metrics dict.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    basis = pauli_basis(preset.n_qubits)
    grid, states = oracle_on_grid(preset)
    truth = coefficients(states, basis)
    pred = truth.copy() if model is None else model.predict(grid)
    rmse, conc_rmse = compare_to_oracle(preset, pred, states)
    cols = [basis.index(lab) for lab in preset.labels]
    metrics = {
        "preset": preset.name,
        "seed": preset.seed,
        "sigma": preset.sigma,
        "source": "oracle" if model is None else "checkpoint",
        "rmse": rmse,
        "concurrence_rmse": conc_rmse,
    }
    curves = {"t": grid}
    for lab, j in zip(preset.labels, cols):
        curves[f"{lab}_pred"] = pred[:, j]
        curves[f"{lab}_oracle"] = truth[:, j]

    data_t = data_v = None
    if dataset is not None:
        data_t = dataset.times
        data_v = np.full((len(data_t), len(cols)), np.nan)
        for k, lab in enumerate(preset.labels):
            if lab in dataset.labels:
                data_v[:, k] = dataset.values[:, dataset.labels.index(lab)]
    plot_trajectories(
        grid, pred[:, cols], truth[:, cols], preset.labels, out_dir / "trajectories.svg", data_t, data_v
    )

    channels = preset.gamma.channels
    true_rates = case1_rates(grid) if preset.gamma.kind == "time_varying" else None
    if model is None:
        rates = true_rates if true_rates is not None else np.tile(preset.true_rates(), (len(grid), 1))
    else:
        rates = model.rates(grid)
        if rates.shape[0] == 1:
            rates = np.tile(rates, (len(grid), 1))
    for k, ch in enumerate(channels):
        curves[f"gamma_{ch}"] = rates[:, k]
    if true_rates is not None:
        metrics["gamma_rmse"] = {
            ch: float(np.sqrt(np.mean((rates[:, k] - true_rates[:, k]) ** 2)))
            for k, ch in enumerate(channels)
        }
        plot_rates(grid, rates, true_rates, channels, out_dir / "rates.svg")
    else:
        metrics["inferred_rates"] = {ch: float(rates[0, k]) for k, ch in enumerate(channels)}
        metrics["rate_errors"] = {
            ch: abs(float(rates[0, k]) - t) for k, (ch, t) in enumerate(zip(channels, preset.true_rates()))
        }

    if preset.n_qubits == 2:
        c_pred = concurrence_batch(reconstruct_density(pred, basis))
        c_true = concurrence_batch(states)
        curves["concurrence_pred"] = c_pred
        curves["concurrence_oracle"] = c_true
        metrics["max_oracle_concurrence"] = float(c_true.max())
        plot_concurrence(grid, c_pred, c_true, out_dir / "concurrence.svg")

    _write_columns(out_dir / "curves.csv", curves)
    with open(out_dir / METRICS_FILE, "w") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return metrics


def _write_columns(path, columns):
    names = list(columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*(columns[n] for n in names)):
            w.writerow([repr(float(v)) for v in row])


def sweep(preset, sigmas, seeds, out_dir, workers=None, progress=None):
    """Train every (sigma, seed) pair in a bounded thread pool; write ``summary.csv``.

    Returns the reports keyed by (sigma, seed).
    """
    if preset.gamma.kind != "constant":
        raise ConfigConflict("sweep summarises constant rates; use a constant-rate preset")
    if not sigmas or not seeds:
        raise ConfigConflict("sweep needs at least one sigma and one seed")
    out_dir = Path(out_dir)
    base = preset.to_dict()
    jobs = {}
    for sigma in sigmas:
        for seed in seeds:
            p = apply_overrides(ExperimentPreset.from_dict(base), {"sigma": sigma, "seed": seed})
            jobs[(float(sigma), int(seed))] = (p, out_dir / f"sigma{sigma:g}-seed{seed}")
    workers = max(1, min(workers or os.cpu_count() or 1, len(jobs)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {key: pool.submit(run_training, p, d, None, progress) for key, (p, d) in jobs.items()}
        reports = {key: f.result()[1] for key, f in futures.items()}
    write_summary(out_dir / SUMMARY_FILE, reports, preset.gamma.channels, preset.true_rates())
    return reports


def write_summary(path, reports, channels, true_rates):
    """One row per (sigma, channel): mean and std of the rate and of |error| over seeds."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sigmas = sorted({s for s, _ in reports})
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sigma", "channel", "true", "mean", "std", "abs_err_mean", "abs_err_std", "n_seeds"])
        for sigma in sigmas:
            runs = [r for (s, _), r in sorted(reports.items()) if s == sigma]
            for ch, truth in zip(channels, true_rates):
                vals = np.array([r.inferred_rates[ch] for r in runs])
                err = np.abs(vals - truth)
                w.writerow(
                    [sigma, ch, truth, vals.mean(), vals.std(), err.mean(), err.std(), len(vals)]
                )
    return path


def read_summary(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# argument handling


def _common(p):
    p.add_argument("--preset", choices=PRESET_NAMES, help="experiment preset")
    p.add_argument("--sigma", type=float, help="noise standard deviation")
    p.add_argument("--seed", type=int, help="seed for data, initialisation and collocation")
    p.add_argument("--epochs", type=int, help="Adam epochs (overrides the profile)")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--profile", choices=("desk", "paper"), default="desk")
    p.add_argument("--config", type=Path, help="JSON file mirroring a preset")


def build_parser():
    parser = argparse.ArgumentParser(prog="lindpinn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-q", "--quiet", action="store_true", help="only report errors")
    sub = parser.add_subparsers(dest="verb", required=True)

    g = sub.add_parser("generate", help="write a synthetic dataset")
    _common(g)

    t = sub.add_parser("train", help="train on a dataset and write report + checkpoint")
    _common(t)
    t.add_argument("--data", type=Path, help="dataset CSV (generated when omitted)")
    t.add_argument("--lbfgs-iters", type=int, help="L-BFGS iterations for presets that use it")

    e = sub.add_parser("evaluate", help="compare a checkpoint with the oracle on a dense grid")
    _common(e)
    e.add_argument("--checkpoint", type=Path, help="checkpoint JSON (default: OUT/checkpoint.json)")
    e.add_argument("--oracle", action="store_true", help="evaluate the oracle itself (needs --preset)")
    e.add_argument("--data", type=Path, help="dataset CSV to mark on the trajectory plot")

    s = sub.add_parser("sweep", help="train over noise levels and seeds; write a summary table")
    _common(s)
    s.add_argument("--sigmas", help="comma-separated noise levels (default: the preset's list)")
    s.add_argument("--seeds", default="0,1,2", help="comma-separated seeds")
    s.add_argument("--workers", type=int, help="worker threads (default: CPU count)")
    s.add_argument("--lbfgs-iters", type=int, help="L-BFGS iterations for presets that use it")
    return parser


def _csv_list(text, kind):
    try:
        return [kind(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigConflict(f"bad list {text!r}: {exc}") from exc


def _progress(epoch, total, terms):
    if epoch % 2000 == 0:
        log.info(
            "epoch %d/%d  data %.3e  phys %.3e  ic %.3e  constr %.3e",
            epoch, total, terms["data"], terms["phys"], terms["ic"], terms["constr"],
        )


def cmd_generate(args):
    preset = _preset_from_args(args)
    out = args.out or default_out(preset)
    ds = generate(preset, out)
    log.info("wrote %s (%d x %d)", Path(out) / DATASET_FILE, len(ds.times), len(ds.labels))


def cmd_train(args):
    dataset = None
    if args.data:
        ds = Dataset.load(args.data)
        if args.sigma is not None and args.sigma != ds.sigma:
            raise ConfigConflict(f"--sigma {args.sigma} but dataset has sigma {ds.sigma}")
        dataset = (ds, args.data)
        if args.preset is None and not args.config:
            args.preset = ds.preset
    preset = _preset_from_args(args)
    out = args.out or default_out(preset)
    _, report = run_training(preset, out, dataset, progress=_progress)
    _log_report(report, out)


def _log_report(report, out):
    if report.inferred_rates:
        log.info("inferred rates: %s", {k: round(v, 4) for k, v in report.inferred_rates.items()})
    log.info("observable RMSE: %s", {k: round(v, 5) for k, v in report.rmse.items()})
    log.info("wrote %s", Path(out) / REPORT_FILE)


def cmd_evaluate(args):
    dataset = Dataset.load(args.data) if args.data else None
    if args.oracle:
        preset = _preset_from_args(args)
        out = args.out or default_out(preset) / "oracle-eval"
        metrics = evaluate(preset, out, None, dataset)
    else:
        ck = args.checkpoint or ((args.out or Path(".")) / CHECKPOINT_FILE)
        model, preset, extra = load_checkpoint(ck)
        if args.preset and args.preset != preset.name:
            raise ConfigConflict(f"--preset {args.preset} but checkpoint is {preset.name}")
        if dataset is None and extra.get("dataset") and Path(extra["dataset"]).exists():
            dataset = Dataset.load(extra["dataset"])
        out = args.out or Path(ck).parent
        metrics = evaluate(preset, out, model, dataset)
    log.info("observable RMSE: %s", {k: round(v, 5) for k, v in metrics["rmse"].items()})
    log.info("wrote %s", Path(out) / METRICS_FILE)


def cmd_sweep(args):
    preset = _preset_from_args(args)
    sigmas = _csv_list(args.sigmas, float) if args.sigmas else list(preset.sigmas)
    if args.sigma is not None and not args.sigmas:
        sigmas = [args.sigma]
    seeds = _csv_list(args.seeds, int)
    out = args.out or Path("runs") / f"{preset.name}-sweep"
    sweep(preset, sigmas, seeds, out, args.workers, progress=None)
    log.info("wrote %s", Path(out) / SUMMARY_FILE)


COMMANDS = {"generate": cmd_generate, "train": cmd_train, "evaluate": cmd_evaluate, "sweep": cmd_sweep}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        COMMANDS[args.verb](args)
    # CheckpointCorrupt is a ValueError, so I/O is matched before configuration
    except (OSError, CheckpointCorrupt) as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except (NonFiniteLoss, StepTooLarge, LineSearchFailed, FloatingPointError) as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC
    except (ConfigConflict, UnknownPreset, LabelUnknown, KeyError, ValueError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
