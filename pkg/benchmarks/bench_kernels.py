"""Time the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import math
import timeit

import numpy as np

from cleobs import kernels
from cleobs.radial_loewner import default_length_scale
from cleobs.radii_laws import build_series


def cases(rng):
    s = build_series(6.0, "wtd")
    x = np.linspace(s.s_min, 20.0, 20_000)
    counts = rng.geometric(0.5, 200_000) - 1
    inc = rng.exponential(1.0, counts.sum())
    levels = np.log(1 / np.geomspace(0.1, 1e-3, 7))
    n, block = 20_000, 64
    psi0 = rng.uniform(0.1, 2 * math.pi - 0.1, n)
    normals = rng.standard_normal((n, block))
    ls = default_length_scale(6.0, 1e-3)

    def passage(k):
        psi, tau, status = psi0.copy(), np.zeros(n), np.zeros(n, dtype=np.int8)
        k.passage_block(psi, tau, status, normals, 6.0, 1e-3, ls, 1e-5, 60)

    return {
        "series_eval (20k points)": lambda k: k.series_eval(s.poles, s.coefficients, x),
        "cascade_counts (200k samples)": lambda k: k.cascade_counts(inc, counts, levels),
        "passage_block (20k paths x 64)": passage,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = {"python": kernels.backend("python")}
    try:
        backends["cython"] = kernels.backend("cython")
    except ImportError:
        print("compiled kernels not built; timing the numpy backend only")
    print(f"{'kernel':34s}" + "".join(f"{b:>12s}" for b in backends) + "   speedup")
    for name, fn in cases(np.random.default_rng(0)).items():
        times = {b: min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat)) for b, k in backends.items()}
        row = f"{name:34s}" + "".join(f"{t * 1e3:10.1f}ms" for t in times.values())
        if "cython" in times:
            row += f"   {times['python'] / times['cython']:6.1f}x"
        print(row)


if __name__ == "__main__":
    main()
