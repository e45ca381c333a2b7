"""Compare the compiled and pure-numpy kernel backends.

Usage::

    python benchmarks/bench_kernels.py [--n 1024] [--rows 64] [--repeat 5]

Prints one line per kernel with the best-of-``repeat`` time for each backend
and the speedup of the compiled one. Inputs match the shapes produced by a
sweep on an ``n``-point lattice with ``rows`` retained outcomes.
"""
import argparse
import timeit

import numpy as np

from seqmeas import kernels


def make_inputs(n, rows, seed=0):
    rng = np.random.default_rng(seed)
    dens = rng.random((rows, n))
    dens /= dens.sum(axis=1, keepdims=True)
    taps = np.exp(-0.5 * (np.arange(-20, 21) / 6.0) ** 2)
    taps /= taps.sum()
    positions = np.linspace(0.0, n, n // 4 + 1)
    rho = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    c = np.exp(-0.5 * (np.arange(-(n - 1), n) / 30.0) ** 2).astype(np.complex128)
    orders = np.array([1.0, 0.8, 1.25, 2.0, 4.0])
    return {
        "row_functionals": lambda impl: impl.row_functionals(dens, orders),
        "convolve_rows": lambda impl: impl.convolve_rows(dens, taps),
        "bin_rows": lambda impl: impl.bin_rows(dens, positions),
        "toeplitz_scale": lambda impl: impl.toeplitz_scale(rho, c),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=1024, help="lattice points")
    parser.add_argument("--rows", type=int, default=64, help="rows per batch")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    impls = kernels.backends()
    cases = make_inputs(args.n, args.rows)
    names = sorted(impls)
    print(f"n={args.n} rows={args.rows} best of {args.repeat}; default backend: {kernels.BACKEND}")
    print(f"{'kernel':<18}" + "".join(f"{name + ' [ms]':>16}" for name in names) + f"{'speedup':>10}")
    for label, call in cases.items():
        times = {}
        for name in names:
            call(impls[name])  # warm-up
            t = timeit.repeat(lambda: call(impls[name]), number=1, repeat=args.repeat)
            times[name] = 1e3 * min(t)
        ratio = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:<18}" + "".join(f"{times[name]:>16.3f}" for name in names) + f"{ratio:>10.2f}")


if __name__ == "__main__":
    main()
