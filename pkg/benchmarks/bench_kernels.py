"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from ratefix import _pykernels
from ratefix.leslie_gower import LGModel
from ratefix.rating import RatingProblem

try:
    from ratefix import _kernels
except ImportError:
    _kernels = None


def rating_case(dims, seed=0):
    rng = np.random.default_rng(seed)
    e = 1.0 + 4.0 * rng.random(dims)
    p = RatingProblem(e * rng.uniform(0.5, 2.0, dims), e)
    return p.kernel_args, np.ones(sum(dims))


def lg_case(d, seed=0):
    rng = np.random.default_rng(seed)
    b = rng.uniform(1.05, 1.5, d)
    C = rng.random((d, d)) * 0.01 / d
    np.fill_diagonal(C, rng.uniform(0.5, 2.0, d))
    m = LGModel(b, C)
    return m.b, m.C, np.full(d, 0.01)


def bench(label, fn, repeat):
    best = min(timeit.repeat(fn, number=1, repeat=repeat))
    return label, best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = [("python", _pykernels)] + ([("compiled", _kernels)] if _kernels else [])
    if _kernels is None:
        print("compiled extension not built; timing the fallback only")

    rows = []
    for dims in [(3, 3, 3), (8, 6, 5), (20, 15, 10)]:
        kargs, f0 = rating_case(dims)
        for name, k in backends:
            rows.append(bench(f"rating_iterate {dims} {name}",
                              lambda k=k: k.rating_iterate(*kargs, f0, 1e-12, 10_000, True),
                              args.repeat))
    for d in (3, 8, 30):
        b, C, x0 = lg_case(d)
        for name, k in backends:
            rows.append(bench(f"lg_iterate d={d} {name}",
                              lambda k=k: k.lg_iterate(b, C, x0, 1e-12, 100_000, True),
                              args.repeat))

    width = max(len(r[0]) for r in rows)
    for i, (label, t) in enumerate(rows):
        line = f"{label:<{width}}  {t * 1e3:9.3f} ms"
        if len(backends) == 2 and i % 2 == 1:
            line += f"  ({rows[i - 1][1] / t:6.1f}x)"
        print(line)


if __name__ == "__main__":
    main()
