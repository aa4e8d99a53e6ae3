"""Experiment presets for the three simulated scenarios.

The Hamiltonians, initial states and the case-1 rate curves are choices of
this package (qualitatively matching a sinusoidal and an exponentially
decaying rate), not measured systems.
"""

import copy
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import UnknownPreset
from .model import FourierConfig, GammaConfig, NetworkConfig
from .optim import LbfgsConfig, OptimizerConfig
from .quantum import I2, SM, SX, SY, SZ, LindbladModel, embed_local, kron, pure_state

T_END = 5.0
DT = 1e-3
TRUE_RATES_2Q = (0.25, 0.15, 0.10, 0.30)
CHANNELS_2Q = ("AD1", "PD1", "AD2", "PD2")
CASE3_COUPLING = 1.5

SINGLE_QUBIT_STATES = {
    "0": np.array([1.0, 0.0]),
    "1": np.array([0.0, 1.0]),
    "+": np.array([1.0, 1.0]) / np.sqrt(2.0),
    "-": np.array([1.0, -1.0]) / np.sqrt(2.0),
}

PROFILES = {
    "desk": {"epochs": 20_000, "lbfgs_iters": 200},
    "paper": {"epochs": 100_000, "lbfgs_iters": 500},
}


def case1_rates(t):
    """Ground-truth case-1 rates (gamma_AD, gamma_PD) at time(s) t."""
    t = np.asarray(t, dtype=np.float64)
    ad = 0.15 * (1.0 + 0.8 * np.sin(2.0 * np.pi * t / T_END))
    pd = 0.25 * np.exp(-0.5 * t)
    return np.stack([ad, pd], axis=-1)


def _local_2q(omega1=1.0, omega2=1.3):
    return 0.5 * omega1 * kron(SZ, I2) + 0.5 * omega2 * kron(I2, SZ)


def _jumps_2q():
    return [embed_local(SM, 0), embed_local(SZ, 0), embed_local(SM, 1), embed_local(SZ, 1)]


@dataclass
class ExperimentPreset:
    name: str
    n_qubits: int
    labels: tuple
    n_points: int
    network: NetworkConfig
    gamma: GammaConfig
    optimizer: OptimizerConfig
    lbfgs: LbfgsConfig | None = None
    t_end: float = T_END
    dt: float = DT
    sigma: float = 0.0
    seed: int = 0
    sigmas: tuple = (0.0,)
    n_collocation: int = 200
    initial: str = ""
    description: str = ""
    extra: dict = field(default_factory=dict)

    def lindblad_model(self):
        if self.name == "case1":
            return LindbladModel(0.5 * SX, [SM, SZ], case1_rates, ("AD", "PD"))
        if self.name == "case2":
            return LindbladModel(_local_2q(), _jumps_2q(), TRUE_RATES_2Q, CHANNELS_2Q)
        if self.name == "case3":
            g = self.extra.get("coupling", CASE3_COUPLING)
            h = _local_2q() + g * (kron(SX, SX) + kron(SY, SY))
            return LindbladModel(h, _jumps_2q(), TRUE_RATES_2Q, CHANNELS_2Q)
        raise UnknownPreset(self.name)

    def initial_state(self):
        """Pure product state named by ``initial``, one character per qubit."""
        if len(self.initial) != self.n_qubits:
            raise ValueError(f"initial state {self.initial!r} does not match {self.n_qubits} qubit(s)")
        psi = np.ones(1)
        for ch in self.initial:
            try:
                psi = np.kron(psi, SINGLE_QUBIT_STATES[ch])
            except KeyError:
                raise ValueError(f"unknown single-qubit state {ch!r}") from None
        return pure_state(psi)

    def true_rates(self):
        """Constant true rates, or None for time-varying presets."""
        return None if self.gamma.kind == "time_varying" else TRUE_RATES_2Q

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = copy.deepcopy(d)
        d["network"] = NetworkConfig.from_dict(d["network"])
        d["gamma"] = GammaConfig(**d["gamma"])
        d["optimizer"] = OptimizerConfig(**d["optimizer"])
        d["lbfgs"] = LbfgsConfig(**d["lbfgs"]) if d.get("lbfgs") else None
        d["labels"] = tuple(d["labels"])
        d["sigmas"] = tuple(d.get("sigmas", (0.0,)))
        return cls(**d)


def _case1():
    return ExperimentPreset(
        name="case1",
        n_qubits=1,
        labels=("X", "Y", "Z"),
        n_points=30,
        initial="+",
        network=NetworkConfig(n_blocks=2, hidden=64, out_dim=3),
        gamma=GammaConfig(channels=("AD", "PD"), kind="time_varying"),
        optimizer=OptimizerConfig(kind="adam", lr=1e-3, epochs=PROFILES["desk"]["epochs"]),
        description="single qubit, time-varying amplitude damping and dephasing",
    )


def _case2():
    return ExperimentPreset(
        name="case2",
        n_qubits=2,
        labels=("X1", "Z1", "X2", "Z2"),
        n_points=25,
        initial="++",
        network=NetworkConfig(n_blocks=2, hidden=64, out_dim=15),
        gamma=GammaConfig(channels=CHANNELS_2Q, kind="constant"),
        optimizer=OptimizerConfig(kind="adam", lr=1e-3, epochs=PROFILES["desk"]["epochs"]),
        sigmas=(0.0, 0.01, 0.025, 0.05, 0.1, 0.2),
        description="two qubits, four local constant noise channels",
    )


def _case3():
    return ExperimentPreset(
        name="case3",
        n_qubits=2,
        labels=("X1", "Z1", "X2", "Z2"),
        n_points=30,
        initial="10",
        # tanh saturates at the +-1 coefficients of |10> and spoils the fit for t < 0.5
        network=NetworkConfig(
            n_blocks=3,
            hidden=64,
            out_dim=15,
            fourier=FourierConfig(n_features=16, scale=1.0),
            output_tanh=False,
        ),
        gamma=GammaConfig(channels=CHANNELS_2Q, kind="constant"),
        optimizer=OptimizerConfig(
            kind="adamw",
            lr=1e-3,
            weight_decay=1e-4,
            scheduler_gamma=0.999,
            epochs=PROFILES["desk"]["epochs"],
        ),
        lbfgs=LbfgsConfig(max_iters=PROFILES["desk"]["lbfgs_iters"]),
        description="two qubits with an exchange coupling that builds entanglement",
        extra={"coupling": CASE3_COUPLING},
    )


_FACTORIES = {"case1": _case1, "case2": _case2, "case3": _case3}
PRESET_NAMES = tuple(_FACTORIES)


def get_preset(name, profile="desk", **overrides):
    """Fresh preset; ``overrides`` may set ``sigma``, ``seed``, ``epochs`` or ``lbfgs_iters``."""
    try:
        preset = _FACTORIES[name]()
    except KeyError:
        raise UnknownPreset(f"unknown preset {name!r}; choose from {PRESET_NAMES}") from None
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}")
    prof = PROFILES[profile]
    preset.optimizer.epochs = prof["epochs"]
    if preset.lbfgs is not None:
        preset.lbfgs.max_iters = prof["lbfgs_iters"]
    return apply_overrides(preset, overrides)


def apply_overrides(preset, overrides):
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "epochs":
            preset.optimizer.epochs = int(value)
        elif key == "lbfgs_iters":
            if preset.lbfgs is not None:
                preset.lbfgs.max_iters = int(value)
        elif key == "seed":
            preset.seed = int(value)
            preset.network.seed = int(value)
        elif key == "sigma":
            preset.sigma = float(value)
        elif hasattr(preset, key):
            setattr(preset, key, value)
        else:
            raise KeyError(key)
    return preset
