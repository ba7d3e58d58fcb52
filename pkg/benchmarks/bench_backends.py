"""Time the pure-Python and compiled shooting kernels on the shipped models.

    python benchmarks/bench_backends.py [--repeat N]

Prints one row per (model, c) with the median wall time of each backend, the
speed-up, and whether both produced the same trajectory.
"""

import argparse
import pathlib
import statistics
import time

import numpy as np

from frontspeed import available_backends
from frontspeed.bvp_solver import SolveOptions, shoot_raw
from frontspeed.coefficients import load_model

MODELS = pathlib.Path(__file__).resolve().parent.parent / "models"
CASES = [
    ("fisher", (1.5, 2.0, 3.0)),
    ("degenerate_fisher", (0.5, 0.7071067811865476, 1.0)),
    ("fisher_step_convection", (2.0, 2.5)),
    ("three_jumps", (2.0, 3.0)),
    ("p3_degenerate", (0.5, 1.0)),
]


def median_time(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if "compiled" not in available_backends():
        raise SystemExit("compiled kernel not built; run `pip install -e . --no-build-isolation`")

    print(f"{'model':<24}{'c':>8}{'steps':>8}{'python ms':>12}{'compiled ms':>13}{'speedup':>9}  same")
    total = {"python": 0.0, "compiled": 0.0}
    for name, speeds in CASES:
        m = load_model(MODELS / f"{name}.toml")
        for c in speeds:
            res = {}
            for b in ("python", "compiled"):
                opts = SolveOptions(backend=b)
                shoot_raw(m, c, opts)  # warm caches
                res[b] = median_time(lambda: shoot_raw(m, c, opts), args.repeat)
                total[b] += res[b][0]
            (tp, rp), (tc, rc) = res["python"], res["compiled"]
            same = rp[0].shape == rc[0].shape and np.array_equal(rp[1], rc[1])
            print(f"{name:<24}{c:>8.4f}{rp[5]:>8d}{1e3 * tp:>12.2f}{1e3 * tc:>13.3f}"
                  f"{tp / tc:>8.1f}x  {'yes' if same else 'NO'}")
    print(f"{'total':<40}{1e3 * total['python']:>12.2f}{1e3 * total['compiled']:>13.3f}"
          f"{total['python'] / total['compiled']:>8.1f}x")


if __name__ == "__main__":
    main()
