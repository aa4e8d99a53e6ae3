"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from lindpinn import _fallback
from lindpinn.presets import get_preset


def hermitian_batch(n_batch, dim, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n_batch, dim, dim)) + 1j * rng.normal(size=(n_batch, dim, dim))
    return (a + np.conj(np.swapaxes(a, 1, 2))) / 2


def rk4_case(name, t_end=5.0, dt=1e-3):
    preset = get_preset(name)
    lind = preset.lindblad_model()
    n = int(round(t_end / dt))
    half = np.arange(2 * n + 1) * (dt / 2)
    rates = np.array([lind.rates_at(t) for t in half])
    return (lind.hamiltonian, np.array(lind.jumps), rates, preset.initial_state(), dt, n)


def cases():
    return {
        "eigh_batch 200x2x2": (lambda k, a: k.eigh_batch(a), hermitian_batch(200, 2)),
        "eigh_batch 200x4x4": (lambda k, a: k.eigh_batch(a), hermitian_batch(200, 4)),
        "rk4 case1 (time-varying)": (lambda k, a: k.rk4_lindblad(*a), rk4_case("case1")),
        "rk4 case3 (constant)": (lambda k, a: k.rk4_lindblad(*a), rk4_case("case3")),
    }


def best_of(fn, backend, arg, repeat):
    timer = timeit.Timer(lambda: fn(backend, arg))
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    try:
        from lindpinn import _kernels
    except ImportError:
        _kernels = None
        print("compiled extension not built; timing the fallback only")
    print(f"{'kernel':28} {'python':>12} {'cython':>12} {'speed-up':>9}")
    for name, (fn, arg) in cases().items():
        slow = best_of(fn, _fallback, arg, args.repeat)
        if _kernels is None:
            print(f"{name:28} {slow * 1e3:10.3f}ms")
            continue
        fast = best_of(fn, _kernels, arg, args.repeat)
        print(f"{name:28} {slow * 1e3:10.3f}ms {fast * 1e3:10.3f}ms {slow / fast:8.1f}x")


if __name__ == "__main__":
    main()
