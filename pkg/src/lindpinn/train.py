"""Training loop and the report it produces."""

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import kernels
from .errors import NonFiniteLoss
from .loss import (
    CollocationPlan,
    LossWeights,
    data_loss,
    ic_loss,
    label_columns,
    physics_loss,
    positivity_loss,
    total_loss,
)
from .model import PinnModel
from .optim import AdamState, adam_step, lbfgs_refine, lr_at
from .oracle import integrate
from .quantum import bloch_generator, coefficients, concurrence_batch, pauli_basis, reconstruct_density

REPORT_FORMAT = "lindpinn-report/1"
GRID_POINTS = 501
LOG_HEADER = "epoch,L_data,L_phys,L_ic,L_constr,total,lr\n"
TERMS = ("data", "phys", "ic", "constr")


class Objective:
    """Total loss and its parameter gradients for one model, dataset and physics."""

    def __init__(self, model, dataset, generator, weights=None):
        self.model = model
        self.dataset = dataset
        self.generator = generator
        self.weights = weights or LossWeights()
        self.basis = pauli_basis(dataset.n_qubits)
        self.columns = label_columns(dataset.labels, self.basis)
        self.rho0 = dataset.initial_coeffs

    def evaluate(self, t_colloc, params=None):
        """Return (terms as floats, total, gradients by parameter name)."""
        params = self.model.params if params is None else params
        nc = len(t_colloc)
        nd = len(self.dataset.times)
        t_all = np.concatenate([t_colloc, self.dataset.times, [0.0]])[:, None]
        with ad.Tape() as tape:
            leaves = {k: tape.variable(v) for k, v in params.items()}
            t = ad.Tensor(t_all, tangent=np.ones_like(t_all))
            out = self.model.forward(leaves, t)
            c_col = ad.take(out, slice(0, nc))
            rates = self.model.gamma(leaves, ad.Tensor(t_all[:nc]))
            terms = {
                "data": data_loss(ad.take(out, slice(nc, nc + nd)), self.dataset.values, self.columns),
                "phys": physics_loss(c_col, rates, self.generator),
                "ic": ic_loss(ad.take(out, slice(nc + nd, nc + nd + 1)), self.rho0),
                "constr": positivity_loss(c_col, self.basis),
            }
            total = total_loss(terms, self.weights)
            grads = tape.gradients(total, list(leaves.values()))
        return (
            {k: v.item() for k, v in terms.items()},
            total.item(),
            dict(zip(leaves, grads)),
        )


@dataclass
class TrainReport:
    preset: str
    seed: int
    sigma: float
    channels: tuple
    inferred_rates: dict | None
    gamma_curves: dict | None
    rmse: dict
    concurrence_rmse: float | None
    final_losses: dict
    epochs: int
    lbfgs_iterations: int
    config: dict
    runtime: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "format": REPORT_FORMAT,
            "preset": self.preset,
            "seed": self.seed,
            "sigma": self.sigma,
            "channels": list(self.channels),
            "inferred_rates": self.inferred_rates,
            "gamma_curves": self.gamma_curves,
            "rmse": self.rmse,
            "concurrence_rmse": self.concurrence_rmse,
            "final_losses": self.final_losses,
            "epochs": self.epochs,
            "lbfgs_iterations": self.lbfgs_iterations,
            "config": self.config,
            "runtime": self.runtime,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.pop("format", None) != REPORT_FORMAT:
            raise ValueError("not a training report")
        d["channels"] = tuple(d["channels"])
        return cls(**d)

    def save(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def comparable(self):
        """Everything except wall-clock runtime metadata."""
        d = self.to_dict()
        d.pop("runtime")
        return d


def build_model(preset):
    net = preset.network
    net.seed = preset.seed
    net.t_end = preset.t_end
    preset.gamma.t_end = preset.t_end
    return PinnModel(net, preset.gamma)


def _check_finite(value, epoch):
    if not math.isfinite(value):
        raise NonFiniteLoss(epoch)


def train(preset, dataset, model=None, log_path=None, progress=None):
    """Run the optimiser schedule of ``preset`` on ``dataset``.

    Returns ``(model, report)``. ``progress(epoch, total, terms)`` is called
    every 500 epochs when given.
    """
    started = time.perf_counter()
    model = model or build_model(preset)
    lindblad = preset.lindblad_model()
    basis = pauli_basis(preset.n_qubits)
    generator = bloch_generator(lindblad.hamiltonian, lindblad.jumps, basis)
    objective = Objective(model, dataset, generator)
    plan = CollocationPlan(preset.n_collocation, "resampled-uniform", preset.seed, preset.t_end)
    cfg = preset.optimizer
    decay_mask = {name: not model.is_gamma_param(name) for name in model.params}
    state = AdamState()

    log = open(log_path, "w") if log_path else None
    try:
        if log:
            log.write(LOG_HEADER)
        terms, total = {}, float("nan")
        for epoch in range(cfg.epochs):
            terms, total, grads = objective.evaluate(plan.points(epoch))
            _check_finite(total, epoch)
            lr = lr_at(epoch, cfg)
            if log:
                log.write(_log_row(epoch, terms, total, lr))
            adam_step(model.params, grads, state, cfg, epoch, decay_mask)
            if progress and epoch % 500 == 0:
                progress(epoch, cfg.epochs, terms)

        lbfgs_iters = 0
        if preset.lbfgs is not None and preset.lbfgs.max_iters > 0:
            fixed = CollocationPlan(preset.n_collocation, "fixed-grid", preset.seed, preset.t_end)
            t_fixed = fixed.points()
            names = model.names
            shapes = [model.params[n].shape for n in names]
            sizes = [int(np.prod(s)) for s in shapes]

            def unflat(x):
                out, i = {}, 0
                for n, s, k in zip(names, shapes, sizes):
                    out[n] = x[i : i + k].reshape(s)
                    i += k
                return out

            def fun(x):
                _, f, g = objective.evaluate(t_fixed, unflat(x))
                return f, np.concatenate([np.ravel(g[n]) for n in names])

            def on_step(it, x, f, step):
                if log:
                    log.write(f"{cfg.epochs + it},,,,,{f!r},{step!r}\n")

            res = lbfgs_refine(model.flat(), fun, preset.lbfgs, callback=on_step)
            model.set_flat(res.x)
            lbfgs_iters = res.iterations
            terms, total, _ = objective.evaluate(t_fixed)
            _check_finite(total, cfg.epochs + lbfgs_iters)
        else:
            terms, total, _ = objective.evaluate(plan.points(cfg.epochs))
    finally:
        if log:
            log.close()

    report = make_report(preset, dataset, model, terms, total, lbfgs_iters)
    report.runtime = {
        "wall_clock_s": time.perf_counter() - started,
        "kernel_backend": kernels.BACKEND,
    }
    return model, report


def _log_row(epoch, terms, total, lr):
    return (
        f"{epoch},{terms['data']!r},{terms['phys']!r},{terms['ic']!r},"
        f"{terms['constr']!r},{total!r},{lr!r}\n"
    )


def dense_grid(t_end):
    return np.linspace(0.0, t_end, GRID_POINTS)


def oracle_on_grid(preset):
    """Oracle states on the dense evaluation grid."""
    traj = integrate(preset.lindblad_model(), preset.initial_state(), preset.t_end, preset.dt)
    grid = dense_grid(preset.t_end)
    idx = np.rint(grid / preset.dt).astype(int)
    return grid, traj.states[idx]


def compare_to_oracle(preset, coeffs, grid_states, labels=None):
    """Per-observable RMSE of predicted coefficients against oracle states."""
    basis = pauli_basis(preset.n_qubits)
    labels = labels or preset.labels

    truth = coefficients(grid_states, basis)
    rmse = {}
    for lab in labels:
        j = basis.index(lab)
        rmse[lab] = float(np.sqrt(np.mean((coeffs[:, j] - truth[:, j]) ** 2)))
    conc = None
    if preset.n_qubits == 2:
        pred_c = concurrence_batch(reconstruct_density(coeffs, basis))
        true_c = concurrence_batch(grid_states)
        conc = float(np.sqrt(np.mean((pred_c - true_c) ** 2)))
    return rmse, conc


def make_report(preset, dataset, model, terms, total, lbfgs_iters):
    grid, states = oracle_on_grid(preset)
    coeffs = model.predict(grid)
    rmse, conc = compare_to_oracle(preset, coeffs, states)
    rates = model.rates(grid)
    if preset.gamma.kind == "constant":
        inferred = {ch: float(r) for ch, r in zip(model.channels, rates[0])}
        curves = None
    else:
        inferred = None
        curves = {"t": grid.tolist()}
        curves.update({ch: rates[:, k].tolist() for k, ch in enumerate(model.channels)})
    return TrainReport(
        preset=preset.name,
        seed=preset.seed,
        sigma=float(dataset.sigma),
        channels=tuple(model.channels),
        inferred_rates=inferred,
        gamma_curves=curves,
        rmse=rmse,
        concurrence_rmse=conc,
        final_losses={**terms, "total": total},
        epochs=preset.optimizer.epochs,
        lbfgs_iterations=lbfgs_iters,
        config=preset.to_dict(),
    )
