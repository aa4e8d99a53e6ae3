"""Helpers shared by the unit and acceptance suites."""

import numpy as np
from scipy.interpolate import CubicSpline

from lindpinn import autodiff as ad
from lindpinn.loss import physics_loss
from lindpinn.model import NetworkConfig, PinnModel
from lindpinn.oracle import generate_dataset, integrate
from lindpinn.presets import get_preset
from lindpinn.quantum import bloch_generator, coefficients, pauli_basis
from lindpinn.train import Objective

TINY = {"n_blocks": 1, "hidden": 8}


def tiny_objective(name, seed=0, n_colloc=12):
    """Objective on a 1-block, 8-wide network plus fixed collocation times."""
    preset = get_preset(name, seed=seed)
    net = preset.network
    preset.network = NetworkConfig(
        n_blocks=TINY["n_blocks"],
        hidden=TINY["hidden"],
        out_dim=net.out_dim,
        fourier=net.fourier,
        seed=seed,
        t_end=preset.t_end,
    )
    preset.gamma.hidden = TINY["hidden"]
    model = PinnModel(preset.network, preset.gamma)
    ds = generate_dataset(
        preset.lindblad_model(), preset.initial_state(), 8, preset.t_end, preset.labels, 0.0, seed
    )
    lind = preset.lindblad_model()
    gen = bloch_generator(lind.hamiltonian, lind.jumps, pauli_basis(preset.n_qubits))
    objective = Objective(model, ds, gen)
    t_colloc = np.random.default_rng(seed).uniform(0.0, preset.t_end, n_colloc)
    return objective, t_colloc


def gradient_errors(objective, t_colloc, h=1e-6, floor=1e-4):
    """Per-parameter relative error of taped gradients against central differences.

    The relative error of an entry is |g - fd| / max(|fd|, floor); the floor
    keeps entries that are zero up to round-off from dominating.
    """
    model = objective.model
    _, _, grads = objective.evaluate(t_colloc)
    worst = {}
    for name in model.names:
        base = model.params[name]
        errs = []
        for idx in np.ndindex(base.shape):
            p_plus = dict(model.params)
            p_minus = dict(model.params)
            p_plus[name] = base.copy()
            p_minus[name] = base.copy()
            p_plus[name][idx] += h
            p_minus[name][idx] -= h
            f_plus = objective.evaluate(t_colloc, p_plus)[1]
            f_minus = objective.evaluate(t_colloc, p_minus)[1]
            fd = (f_plus - f_minus) / (2 * h)
            errs.append(abs(grads[name][idx] - fd) / max(abs(fd), floor))
        worst[name] = max(errs)
    return worst


def oracle_spline(name, dt):
    """Cubic spline through the oracle's basis coefficients for preset ``name``."""
    preset = get_preset(name)
    lind = preset.lindblad_model()
    traj = integrate(lind, preset.initial_state(), preset.t_end, dt)
    basis = pauli_basis(preset.n_qubits)
    return preset, lind, basis, CubicSpline(traj.times, coefficients(traj.states, basis), axis=0)


def spline_physics_loss(spline, t, rates, generator):
    c = ad.Tensor(spline(t), tangent=spline(t, 1))
    return physics_loss(c, rates, generator).item()
