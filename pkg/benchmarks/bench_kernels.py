"""Timing comparison of the compiled assembly kernels against the numpy
fallback, on the shapes that dominate a production run (128 x 128 mesh,
P2/P3 element pairs).

Run from the repository root:

    python3 benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from qrfem import FormKind, Lagrange, assemble_form, build_space, build_structured_mesh
from qrfem import _kernels
from qrfem._kernels import _numpy

try:
    from qrfem._kernels import _speedups
except ImportError:
    _speedups = None


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def micro_cases(rng):
    """Kernel-call shapes as they occur while assembling on 128 x 128."""
    n_cells, n_facets = 32768, 49024
    for label, nq, na, nb, grad in (
        ("stiffness P2xP3 cells", 12, 6, 10, True),
        ("stiffness P2xP2 cells", 12, 6, 6, True),
        ("jump P2xP2 facets", 3, 6, 6, False),
    ):
        n = n_cells if "cells" in label else n_facets
        w = rng.uniform(0.1, 1.0, nq)
        scale = rng.uniform(0.5, 2.0, n)
        if grad:
            U = rng.standard_normal((n, nq, na, 2))
            V = rng.standard_normal((n, nq, nb, 2))
            yield label, "pairs_grad", (w, scale, U, V)
        else:
            U = rng.standard_normal((n, nq, na))
            V = rng.standard_normal((n, nq, nb))
            yield label, "pairs_scalar", (w, scale, U, V)


def swap_backend(module):
    _kernels.pairs_scalar = module.pairs_scalar
    _kernels.pairs_grad = module.pairs_grad


def macro_case(repeats):
    mesh = build_structured_mesh(128, 128)
    v = build_space(mesh, Lagrange(2))
    w = build_space(mesh, Lagrange(3))

    def run():
        assemble_form(FormKind.BROKEN_STIFFNESS, v, w)
        assemble_form(FormKind.JUMP_PENALTY, v, v)

    out = {}
    for name, module in backends():
        swap_backend(module)
        out[name] = best_of(run, repeats)
    return out


def backends():
    yield "numpy", _numpy
    if _speedups is not None:
        yield "cython", _speedups


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if _speedups is None:
        print("compiled kernels unavailable; timing the fallback only")

    rng = np.random.default_rng(0)
    print(f"{'case':28s} " + "".join(f"{n:>10s}" for n, _ in backends()))
    for label, kernel, arrays in micro_cases(rng):
        row = f"{label:28s} "
        times = []
        for _, module in backends():
            fn = getattr(module, kernel)
            times.append(best_of(lambda: fn(*arrays), args.repeats))
        row += "".join(f"{t * 1e3:9.1f}ms" for t in times)
        if len(times) == 2:
            row += f"   x{times[0] / times[1]:.2f}"
        print(row)

    macro = macro_case(args.repeats)
    swap_backend(_speedups if _speedups is not None else _numpy)
    row = f"{'assemble B + J (128x128)':28s} "
    row += "".join(f"{macro[n] * 1e3:9.1f}ms" for n, _ in backends())
    if len(macro) == 2:
        row += f"   x{macro['numpy'] / macro['cython']:.2f}"
    print(row)


if __name__ == "__main__":
    main()
