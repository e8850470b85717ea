"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel runs once per backend before timing so numba compilation is
excluded.  Outputs of the two backends are compared as a side check.
"""
import argparse
import math
import time

import numpy as np

from ladderexit import _jit
from ladderexit.increments import PRESETS, build_law
from ladderexit.kernels import Sampler, draw_many, renewal, run_paths
from ladderexit.ladder import wiener_hopf_iterate


def _best(fn, repeat):
    fn()
    best = math.inf
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def cases():
    law = build_law(PRESETS["c4"])
    smp = Sampler(law)
    f = wiener_hopf_iterate(law, 4000).zhat_pmf
    U = np.random.default_rng(1).random((500_000, 3))

    def paths():
        rng = np.random.default_rng(2)
        return run_paths(smp, rng, 500, 10_000, 0, 1000, 10 ** 6)[0]

    return [
        ("renewal direct N=4000", lambda: renewal(f, 4000, method="direct")),
        ("draw_many 5e5", lambda: draw_many(smp, U)),
        ("run_paths 1e4 exits R=1000", paths),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'kernel':28s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}  agree")
    for name, fn in cases():
        _jit.set_backend("numba")
        t_nb, a = _best(fn, args.repeat)
        _jit.set_backend("numpy")
        t_np, b = _best(fn, args.repeat)
        same = np.allclose(a, b, rtol=1e-12, atol=0)
        print(f"{name:28s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f}  {same}")
    _jit.set_backend("numba")


if __name__ == "__main__":
    main()
