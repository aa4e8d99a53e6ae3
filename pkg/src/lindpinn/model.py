"""The physics-informed network and its learnable dissipation rates."""

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .errors import CheckpointCorrupt
from .seeding import FOURIER, INIT, stream

CHECKPOINT_FORMAT = "lindpinn-checkpoint/1"


def softplus_inv(y):
    return float(np.log(np.expm1(y)))


@dataclass
class FourierConfig:
    n_features: int = 16
    scale: float = 1.0


@dataclass
class NetworkConfig:
    n_blocks: int = 2
    hidden: int = 64
    out_dim: int = 3
    fourier: FourierConfig | None = None
    seed: int = 0
    output_tanh: bool = True
    # without Fourier features, t is mapped affinely from [0, t_end] onto [-1, 1]
    t_end: float = 5.0

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("fourier") is not None:
            d["fourier"] = FourierConfig(**d["fourier"])
        return cls(**d)


@dataclass
class GammaConfig:
    channels: tuple = ("AD", "PD")
    kind: str = "constant"  # or "time_varying"
    hidden: int = 32
    n_blocks: int = 1
    init_rate: float = 0.1
    t_end: float = 5.0

    def __post_init__(self):
        self.channels = tuple(self.channels)
        if self.kind not in ("constant", "time_varying"):
            raise ValueError(f"unknown gamma kind {self.kind!r}")


def _uniform(rng, fan_in, shape):
    bound = math.sqrt(1.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def _mlp_params(rng, prefix, n_in, hidden, n_blocks, n_out):
    p = {
        f"{prefix}in.w": _uniform(rng, n_in, (n_in, hidden)),
        f"{prefix}in.b": np.zeros(hidden),
    }
    for k in range(n_blocks):
        p[f"{prefix}block{k}.w1"] = _uniform(rng, hidden, (hidden, hidden))
        p[f"{prefix}block{k}.b1"] = np.zeros(hidden)
        p[f"{prefix}block{k}.w2"] = _uniform(rng, hidden, (hidden, hidden))
        p[f"{prefix}block{k}.b2"] = np.zeros(hidden)
    p[f"{prefix}out.w"] = _uniform(rng, hidden, (hidden, n_out))
    p[f"{prefix}out.b"] = np.zeros(n_out)
    return p


def _mlp(p, prefix, x, n_blocks):
    h = ad.matmul(x, p[f"{prefix}in.w"]) + p[f"{prefix}in.b"]
    for k in range(n_blocks):
        z = ad.silu(ad.matmul(h, p[f"{prefix}block{k}.w1"]) + p[f"{prefix}block{k}.b1"])
        h = h + (ad.matmul(z, p[f"{prefix}block{k}.w2"]) + p[f"{prefix}block{k}.b2"])
    return ad.matmul(h, p[f"{prefix}out.w"]) + p[f"{prefix}out.b"]


def fourier_frequencies(n_features, scale, seed):
    return stream(seed, FOURIER).normal(0.0, scale, size=(1, n_features))


def fourier_embed(t, frequencies):
    """[sin(2 pi b t), cos(2 pi b t)] for a column of times ``t`` (N, 1)."""
    z = ad.matmul(ad.as_tensor(t), 2.0 * np.pi * np.asarray(frequencies))
    return ad.concat([ad.sin(z), ad.cos(z)], axis=1)


class PinnModel:
    """State network plus rate model, with parameters kept as named arrays.

    ``forward`` and ``gamma`` take a mapping of parameter tensors, so the same
    code runs on tape leaves during training and on plain arrays for
    evaluation.
    """

    def __init__(self, net: NetworkConfig, gamma: GammaConfig, params=None):
        self.net = net
        self.gamma_cfg = gamma
        self.frequencies = (
            fourier_frequencies(net.fourier.n_features, net.fourier.scale, net.seed)
            if net.fourier
            else None
        )
        self.params = params if params is not None else self.init_params()

    @property
    def channels(self):
        return self.gamma_cfg.channels

    def init_params(self):
        rng = stream(self.net.seed, INIT)
        n_in = 2 * self.net.fourier.n_features if self.net.fourier else 1
        p = _mlp_params(rng, "", n_in, self.net.hidden, self.net.n_blocks, self.net.out_dim)
        g = self.gamma_cfg
        raw0 = softplus_inv(g.init_rate)
        if g.kind == "constant":
            p["gamma.raw"] = np.full(len(g.channels), raw0)
        else:
            gp = _mlp_params(rng, "gamma.", 1, g.hidden, g.n_blocks, len(g.channels))
            # zero read-out so every channel starts at exactly init_rate
            gp["gamma.out.w"] = np.zeros_like(gp["gamma.out.w"])
            gp["gamma.out.b"] = np.full(len(g.channels), raw0)
            p.update(gp)
        return p

    def is_gamma_param(self, name):
        return name.startswith("gamma.")

    # -- evaluation ---------------------------------------------------------

    def _embed(self, t):
        if self.frequencies is not None:
            return fourier_embed(t, self.frequencies)
        return t * (2.0 / self.net.t_end) - 1.0

    def forward(self, p, t):
        """Basis coefficients at times ``t`` (N, 1); tangents follow ``t``'s tangent."""
        out = _mlp(p, "", self._embed(ad.as_tensor(t)), self.net.n_blocks)
        return ad.tanh(out) if self.net.output_tanh else out

    def gamma(self, p, t):
        """Rates, shape (1, K) for constant models or (N, K) at times ``t``."""
        if self.gamma_cfg.kind == "constant":
            return ad.reshape(ad.softplus(p["gamma.raw"]), (1, -1))
        x = ad.as_tensor(t) * (2.0 / self.gamma_cfg.t_end) - 1.0
        return ad.softplus(_mlp(p, "gamma.", x, self.gamma_cfg.n_blocks))

    def predict(self, t, with_tangent=False):
        t = np.asarray(t, dtype=np.float64).reshape(-1, 1)
        tt = ad.Tensor(t, tangent=np.ones_like(t) if with_tangent else None)
        out = self.forward(self.params, tt)
        if with_tangent:
            return out.value, out.tangent.value
        return out.value

    def rates(self, t):
        """Rates at times ``t`` as a plain array of shape (N, K)."""
        t = np.asarray(t, dtype=np.float64).reshape(-1, 1)
        r = self.gamma(self.params, ad.Tensor(t)).value
        return np.broadcast_to(r, (t.shape[0], len(self.channels))).copy()

    # -- flat parameter vector ------------------------------------------------

    @property
    def names(self):
        return list(self.params)

    def flat(self):
        return np.concatenate([np.ravel(v) for v in self.params.values()])

    def set_flat(self, x):
        x = np.asarray(x, dtype=np.float64)
        i = 0
        for name, v in self.params.items():
            n = v.size
            self.params[name] = x[i : i + n].reshape(v.shape).copy()
            i += n
        if i != x.size:
            raise ValueError(f"flat vector has {x.size} entries, model needs {i}")

    def n_params(self):
        return int(sum(v.size for v in self.params.values()))

    # -- checkpoint -----------------------------------------------------------

    def to_dict(self, extra=None):
        return {
            "format": CHECKPOINT_FORMAT,
            "network": asdict(self.net),
            "gamma": asdict(self.gamma_cfg),
            "seed": self.net.seed,
            "names": self.names,
            "shapes": [list(v.shape) for v in self.params.values()],
            "params": [float(x) for x in self.flat()],
            "extra": extra or {},
        }

    def save(self, path, extra=None):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            json.dump(self.to_dict(extra), fh)
        return path

    @classmethod
    def from_dict(cls, d):
        try:
            if d["format"] != CHECKPOINT_FORMAT:
                raise CheckpointCorrupt(f"unsupported checkpoint format {d['format']!r}")
            model = cls(NetworkConfig.from_dict(d["network"]), GammaConfig(**d["gamma"]))
            if model.names != list(d["names"]) or [list(v.shape) for v in model.params.values()] != [
                list(s) for s in d["shapes"]
            ]:
                raise CheckpointCorrupt("parameter layout does not match the stored config")
            model.set_flat(np.array(d["params"], dtype=np.float64))
        except CheckpointCorrupt:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise CheckpointCorrupt(f"cannot rebuild model: {exc}") from exc
        return model

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CheckpointCorrupt(f"cannot read checkpoint {path}: {exc}") from exc
        return cls.from_dict(d), d.get("extra", {})
