"""Time the numba and numpy backends of each kernel on identical inputs.

Usage: python benchmarks/bench_kernels.py [--repeat N]

The first numba call compiles; it is timed separately and excluded from the
steady-state figure.
"""

import argparse
import time

import numpy as np

from bcclab import kernels
from bcclab._accel import NUMBA_AVAILABLE
from bcclab.hashing import HashFamily


def _cases(rng):
    n = 20000
    qu = rng.dirichlet(np.ones(2), size=n)
    qvu = rng.dirichlet(np.ones(3), size=(n, 2))
    xi = rng.dirichlet(np.ones(2), size=(n, 3))
    wy = np.array([[0.9, 0.1], [0.1, 0.9]])
    wz = np.array([[0.8, 0.2], [0.2, 0.8]])
    cw = rng.integers(0, 2, size=(256, 10))
    ys = rng.integers(0, 2, size=(512, 10))
    fam = HashFamily(4, 2)
    joint = rng.dirichlet(np.ones(16 * 8)).reshape(16, 8)
    return {
        "region_batch": lambda b: kernels.region_batch(qu, qvu, xi, wy, wz, backend=b),
        "likelihood_table": lambda b: kernels.likelihood_table(wz, cw, backend=b),
        "mmi_scores": lambda b: kernels.mmi_scores(cw, ys, 2, 2, backend=b),
        "family_info": lambda b: kernels.family_info(fam.value_table(), joint, 4, backend=b),
    }


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    cases = _cases(np.random.default_rng(args.seed))
    backends = ["numpy"] + (["numba"] if NUMBA_AVAILABLE else [])
    print(f"{'kernel':<18}{'numpy s':>12}{'numba s':>12}{'compile s':>12}{'speedup':>10}  max|diff|")
    for name, fn in cases.items():
        t_np = _best(lambda: fn("numpy"), args.repeat)
        if "numba" not in backends:
            print(f"{name:<18}{t_np:>12.4f}{'n/a':>12}")
            continue
        t0 = time.perf_counter()
        fn("numba")
        compile_s = time.perf_counter() - t0
        t_nb = _best(lambda: fn("numba"), args.repeat)
        diff = float(np.max(np.abs(fn("numpy") - fn("numba"))))
        print(f"{name:<18}{t_np:>12.4f}{t_nb:>12.4f}{compile_s:>12.3f}{t_np / t_nb:>10.1f}  {diff:.1e}")


if __name__ == "__main__":
    main()
