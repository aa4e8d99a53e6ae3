"""Adam / AdamW with exponential decay, and an L-BFGS refinement stage."""

from dataclasses import dataclass

import numpy as np

from .errors import LineSearchFailed


@dataclass
class OptimizerConfig:
    kind: str = "adam"  # or "adamw"
    lr: float = 1e-3
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 1e-4
    scheduler_gamma: float = 1.0
    epochs: int = 100_000

    def __post_init__(self):
        self.betas = tuple(self.betas)
        if self.kind not in ("adam", "adamw"):
            raise ValueError(f"unknown optimizer {self.kind!r}")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not all(0 <= b < 1 for b in self.betas):
            raise ValueError("betas must lie in [0, 1)")
        if not 0 < self.scheduler_gamma <= 1:
            raise ValueError("scheduler_gamma must lie in (0, 1]")


@dataclass
class LbfgsConfig:
    history: int = 10
    max_iters: int = 500
    c1: float = 1e-4
    shrink: float = 0.5
    max_backtracks: int = 40
    grad_tol: float = 1e-8

    def __post_init__(self):
        if self.history < 1:
            raise ValueError("history must be >= 1")


def lr_at(epoch, config):
    return config.lr * config.scheduler_gamma**epoch


class AdamState:
    def __init__(self):
        self.m = {}
        self.v = {}
        self.step = 0


def adam_step(params, grads, state, config, epoch, decay_mask=None):
    """One bias-corrected Adam (or AdamW) update, in place on ``params``.

    ``decay_mask`` maps parameter names to whether AdamW decay applies
    (default: all).
    """
    lr = lr_at(epoch, config)
    b1, b2 = config.betas
    state.step += 1
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    for name, g in grads.items():
        p = params[name]
        if config.kind == "adamw" and config.weight_decay and (
            decay_mask is None or decay_mask.get(name, True)
        ):
            p *= 1.0 - lr * config.weight_decay
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + config.eps)
    return params, state


@dataclass
class LbfgsResult:
    x: np.ndarray
    f: float
    grad_norm: float
    iterations: int
    history: list
    stopped: str


def lbfgs_refine(x0, loss_fn, config=None, callback=None):
    """Minimise ``loss_fn(x) -> (f, grad)`` from ``x0``.

    Search direction from the two-loop recursion, step by Armijo backtracking.
    A curvature pair with s.y <= 1e-10 is dropped and the memory restarts.
    If the line search fails,
    the last accepted point is kept and ``stopped`` is ``"line_search"``.
    """
    config = config or LbfgsConfig()
    x = np.array(x0, dtype=np.float64)
    f, g = loss_fn(x)
    pairs = []
    history = [f]
    stopped = "max_iters"
    it = 0
    for it in range(config.max_iters):
        gnorm = float(np.linalg.norm(g))
        if gnorm < config.grad_tol:
            stopped = "grad_tol"
            break
        d = _two_loop(g, pairs)
        slope = float(g @ d)
        if slope >= 0:
            # not a descent direction; restart from steepest descent
            pairs.clear()
            d = -g
            slope = -gnorm**2
        try:
            step, f_new, g_new = _armijo(loss_fn, x, f, d, slope, config)
        except LineSearchFailed:
            stopped = "line_search"
            break
        s = step * d
        y = g_new - g
        if s @ y > 1e-10:
            pairs.append((s, y, 1.0 / (s @ y)))
            if len(pairs) > config.history:
                pairs.pop(0)
        else:
            pairs.clear()
        x = x + s
        f, g = f_new, g_new
        history.append(f)
        if callback is not None:
            callback(it, x, f, step)
    else:
        it = config.max_iters
    return LbfgsResult(x, f, float(np.linalg.norm(g)), it, history, stopped)


def _two_loop(g, pairs):
    q = -g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    if pairs:
        s, y, _ = pairs[-1]
        q *= (s @ y) / (y @ y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return q


def _armijo(loss_fn, x, f, d, slope, config):
    step = 1.0
    for _ in range(config.max_backtracks):
        f_new, g_new = loss_fn(x + step * d)
        if np.isfinite(f_new) and f_new <= f + config.c1 * step * slope:
            return step, f_new, g_new
        step *= config.shrink
    raise LineSearchFailed(f"no Armijo step after {config.max_backtracks} backtracks")
