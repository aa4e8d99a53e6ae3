"""Exact Lindblad integration, synthetic datasets and closed-form references.

Datasets draw time stamps and per-cell noise from the substreams listed in
:mod:`lindpinn.seeding`. PCG64, SeedSequence and ``standard_normal`` are
bit-stable across platforms, so datasets reproduce byte for byte.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .errors import NegativeRate, StepTooLarge
from .linalg import eigh_stack, hermiticity_defect
from .quantum import coefficients, pauli_basis
from .seeding import NOISE, TIMES, stream

DATASET_FORMAT = "lindpinn-dataset/1"
VALUE_DECIMALS = 9


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray = field(repr=False)

    def coefficients(self, basis):
        return coefficients(self.states, basis)

    def expectations(self, labels, basis):
        idx = [basis.index(lab) for lab in labels]
        return self.coefficients(basis)[:, idx]

    def index_of(self, t):
        dt = self.times[1] - self.times[0]
        i = int(round(float(t) / dt))
        if not 0 <= i < len(self.times) or abs(self.times[i] - t) > 1e-9:
            raise ValueError(f"t={t} is not on the integration grid")
        return i

    def check(self, trace_tol=1e-8, herm_tol=1e-10, eig_tol=1e-8):
        """Largest violations of trace, Hermiticity and positivity over all states."""
        traces = np.abs(np.trace(self.states, axis1=1, axis2=2) - 1.0).max()
        herm = hermiticity_defect(self.states)
        sym = 0.5 * (self.states + np.conj(np.swapaxes(self.states, 1, 2)))
        w, _ = eigh_stack(sym)
        min_eig = w.min()
        ok = traces < trace_tol and herm < herm_tol and min_eig >= -eig_tol
        return ok, {"trace": float(traces), "hermiticity": float(herm), "min_eig": float(min_eig)}


def integrate(model, rho0, t_end, dt):
    """Fixed-step classical RK4 on the Lindblad equation; every step is stored."""
    if dt <= 0 or t_end <= 0:
        raise ValueError("dt and t_end must be positive")
    nsteps = int(round(t_end / dt))
    if abs(nsteps * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ValueError(f"t_end={t_end} is not a multiple of dt={dt}")
    half = np.arange(2 * nsteps + 1) * (0.5 * dt)
    rates = model.rates_at(half)
    if np.any(rates < 0):
        raise NegativeRate("rate function went negative on the integration grid")
    jumps = np.array(model.jumps).reshape(len(model.jumps), model.dim, model.dim)
    states = kernels.rk4_lindblad(
        model.hamiltonian, jumps, rates, np.asarray(rho0, dtype=np.complex128), dt, nsteps
    )
    drift = np.abs(np.trace(states, axis1=1, axis2=2) - 1.0).max()
    if drift > 1e-6:
        raise StepTooLarge(f"trace drift {drift:.2e} with dt={dt}")
    return Trajectory(np.arange(nsteps + 1) * dt, states)


def cell_noise(seed, sigma, shape):
    """Additive N(0, sigma^2) draw for each cell, one substream per cell."""
    out = np.empty(shape)
    for i, j in np.ndindex(*shape):
        out[i, j] = stream(seed, NOISE, i, j).standard_normal()
    return sigma * out


@dataclass
class Dataset:
    times: np.ndarray
    labels: tuple
    values: np.ndarray
    sigma: float
    seed: int
    initial_state: np.ndarray = field(repr=False)
    n_qubits: int = 1
    preset: str = ""
    t_end: float = 5.0
    dt: float = 1e-3

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        self.labels = tuple(self.labels)
        self.initial_state = np.asarray(self.initial_state, dtype=np.complex128)
        if self.values.shape != (len(self.times), len(self.labels)):
            raise ValueError(
                f"values shape {self.values.shape} != ({len(self.times)}, {len(self.labels)})"
            )

    @property
    def basis(self):
        return pauli_basis(self.n_qubits)

    @property
    def initial_coeffs(self):
        return coefficients(self.initial_state, self.basis)

    def metadata(self):
        return {
            "format": DATASET_FORMAT,
            "preset": self.preset,
            "sigma": float(self.sigma),
            "seed": int(self.seed),
            "labels": list(self.labels),
            "n_qubits": int(self.n_qubits),
            "t_end": float(self.t_end),
            "dt": float(self.dt),
            "initial_state_coeffs": [float(c) for c in self.initial_coeffs],
            "initial_state_real": self.initial_state.real.tolist(),
            "initial_state_imag": self.initial_state.imag.tolist(),
        }

    def save(self, path):
        """Write ``path`` (CSV) and its sidecar ``path.with_suffix('.json')``."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", *self.labels])
            for t, row in zip(self.times, self.values):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in row])
        with open(sidecar_path(path), "w") as fh:
            json.dump(self.metadata(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path

    @classmethod
    def load(cls, path):
        path = Path(path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if not header or header[0] != "t":
            raise ValueError(f"{path}: first column must be 't'")
        data = np.array([[float(x) for x in r] for r in body]).reshape(len(body), len(header))
        with open(sidecar_path(path)) as fh:
            meta = json.load(fh)
        if meta.get("format") != DATASET_FORMAT:
            raise ValueError(f"{path}: unsupported dataset format {meta.get('format')!r}")
        if list(meta["labels"]) != header[1:]:
            raise ValueError(f"{path}: CSV header and sidecar labels disagree")
        rho0 = np.array(meta["initial_state_real"]) + 1j * np.array(meta["initial_state_imag"])
        return cls(
            times=data[:, 0],
            labels=tuple(header[1:]),
            values=data[:, 1:],
            sigma=meta["sigma"],
            seed=meta["seed"],
            initial_state=rho0,
            n_qubits=meta["n_qubits"],
            preset=meta["preset"],
            t_end=meta["t_end"],
            dt=meta["dt"],
        )


def sidecar_path(path):
    return Path(path).with_suffix(".json")


def generate_dataset(
    model, rho0, n_points, t_end, labels, sigma, seed, dt=1e-3, preset="", trajectory=None
):
    """Sample ``n_points`` random time stamps (t=0 always included) and noisy expectations.

    Time stamps are distinct points of the integration grid chosen uniformly
    at random, so the noiseless values are RK4 states, rounded to
    ``VALUE_DECIMALS`` decimal places.
    """
    if n_points < 2 or t_end <= 0:
        raise ValueError("need n_points >= 2 and t_end > 0")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    n_qubits = int(np.log2(model.dim))
    basis = pauli_basis(n_qubits)
    traj = trajectory if trajectory is not None else integrate(model, rho0, t_end, dt)
    nsteps = len(traj.times) - 1
    picks = stream(seed, TIMES).choice(np.arange(1, nsteps + 1), n_points - 1, replace=False)
    idx = np.concatenate([[0], np.sort(picks)])
    exact = traj.expectations(labels, basis)[idx]
    values = exact + cell_noise(seed, sigma, exact.shape) if sigma > 0 else exact
    # quantised so both kernel backends (and BLAS builds) serialise identical bytes
    values = np.round(values, VALUE_DECIMALS)
    return Dataset(
        times=traj.times[idx],
        labels=tuple(labels),
        values=values,
        sigma=float(sigma),
        seed=int(seed),
        initial_state=rho0,
        n_qubits=n_qubits,
        preset=preset,
        t_end=float(t_end),
        dt=float(dt),
    )


# closed-form single-qubit references


def larmor_x(t):
    """<X>(t) for H = Z/2 from |+>, no dissipation."""
    return np.cos(t)


def dephasing_x(t, gamma):
    """<X>(t) under sigma_z dephasing at rate gamma from |+>, H = 0."""
    return np.exp(-2.0 * gamma * np.asarray(t))


def damping_z(t, gamma):
    """<Z>(t) under amplitude damping at rate gamma from |1>."""
    return 1.0 - 2.0 * np.exp(-gamma * np.asarray(t))
