"""Compare the compiled kernel backend against the pure-numpy fallback.

Micro-benchmarks time each dispatched kernel on a few matrix shapes; the
macro benchmark times a short full training run per backend. Run from the
repository root after installing the package:

    python3 benchmarks/bench_kernels.py [--repeats 7] [--quick]

Results are wall-clock medians; expect the compiled backend to win on the
elementwise kernels (soft_threshold, forward_step, combine_momentum) and to
roughly tie on the reduction-style ones, where numpy is already a single C
call.
"""

import argparse
import timeit

import numpy as np

from paddle import HyperParams, kernels
from paddle.trainer import train

SHAPES = [(50, 200), (100, 2000), (300, 5000)]


def micro_cases(rng, shape):
    a = rng.standard_normal(shape)
    b = rng.standard_normal(shape)
    return {
        "soft_threshold": lambda: kernels.soft_threshold(a, 0.1),
        "forward_step": lambda: kernels.forward_step(a, b, 0.05),
        "combine_momentum": lambda: kernels.combine_momentum(a, b, 0.6),
        "project_columns": lambda: kernels.project_columns(a),
        "project_rows": lambda: kernels.project_rows(a),
        "abs_sum": lambda: kernels.abs_sum(a),
    }


def best_of(fn, repeats):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeats, number)) / number


def run_micro(repeats):
    rng = np.random.default_rng(0)
    rows = []
    for shape in SHAPES:
        cases = micro_cases(rng, shape)
        for name, fn in cases.items():
            per_backend = {}
            for backend in kernels.available_backends():
                kernels.set_backend(backend)
                per_backend[backend] = best_of(fn, repeats)
            rows.append((name, shape, per_backend))
    return rows


def run_macro():
    rng = np.random.default_rng(7)
    x = rng.standard_normal((64, 1500))
    # vanishing tolerances pin the work: always 12 outer x 60 inner iterations
    hp = HyperParams(tau=0.3, eta=1.0, rtol=1e-15, t_max=12, history_h=2,
                     inner_max_iter=60, inner_rtol=1e-15, seed=1)
    out = {}
    for backend in kernels.available_backends():
        kernels.set_backend(backend)
        train(x, hp, 80)  # warm-up: page in code paths and caches
        start = timeit.default_timer()
        train(x, hp, 80)
        out[backend] = timeit.default_timer() - start
    return out


def fmt_seconds(s):
    if s < 1e-3:
        return f"{s * 1e6:8.1f} us"
    if s < 1.0:
        return f"{s * 1e3:8.2f} ms"
    return f"{s:8.3f} s "


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=7,
                        help="timing repeats per measurement (default 7)")
    parser.add_argument("--quick", action="store_true",
                        help="fewer repeats and the smallest shape only")
    args = parser.parse_args(argv)

    if args.quick:
        del SHAPES[1:]
        args.repeats = 3

    backends = kernels.available_backends()
    print(f"backends available: {', '.join(backends)}")
    if "c" not in backends:
        print("compiled extension not built; timing the numpy fallback only")

    print("\n== kernel micro-benchmarks (best of repeats) ==")
    header = f"{'kernel':18} {'shape':>12}"
    for backend in backends:
        header += f" {backend:>12}"
    if len(backends) == 2:
        header += f" {'python/c':>10}"
    print(header)
    for name, shape, per_backend in run_micro(args.repeats):
        line = f"{name:18} {str(shape):>12}"
        for backend in backends:
            line += f" {fmt_seconds(per_backend[backend])}"
        if len(backends) == 2:
            line += f" {per_backend['python'] / per_backend['c']:9.2f}x"
        print(line)

    print("\n== full training run (64x1500, K=80, 12 iterations) ==")
    for backend, seconds in run_macro().items():
        print(f"{backend:>8}: {seconds:.3f} s")


if __name__ == "__main__":
    main()
