"""Timing comparison of the compiled and pure-numpy simulation backends.

Both backends consume the same pre-drawn uniforms, so outputs must agree
bitwise; this script checks that too. Run from the repo root:

    python3 benchmarks/bench_kernels.py

NOTE: the numba rows need numba (pip install numba). Without it the
script still runs and prints the numpy timings.
"""
import time

import numpy as np

from regen_bernstein import (
    make_singular_mod1,
    make_two_state,
    mc_tail,
    sample_path,
    simulate_split,
)
from regen_bernstein._kernels import HAVE_NUMBA, warm_up
from regen_bernstein._rng import substream

REPEATS = 5
SEED = 7


def bench(fn, repeats=REPEATS):
    """Best wall-clock time over repeats, in seconds."""
    best = float("inf")
    out = None
    for _ in range(repeats):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def main():
    two_state = make_two_state(0.3, 0.6)
    mod1 = make_singular_mod1()
    grid = np.linspace(1.0, 60.0, 12)

    workloads = {
        "finite path (2e6 steps)": lambda b: sample_path(
            two_state, 0, 2_000_000, substream(SEED, 1, 0), backend=b),
        "finite split (1e6 steps)": lambda b: simulate_split(
            two_state, "nu", 1_000_000, substream(SEED, 2, 0),
            backend=b).states,
        "mod-1 path (5e5 steps)": lambda b: sample_path(
            mod1, 0.0, 500_000, substream(SEED, 1, 1), backend=b),
        "mc tail (n=1000 x 2e4 replicas)": lambda b: mc_tail(
            two_state, "indicator_centered", "pi", 1000, grid, 20_000,
            seed=SEED, backend=b).estimate,
    }

    backends = ["numpy"]
    if HAVE_NUMBA:
        print("warming up numba kernels...")
        start = time.perf_counter()
        warm_up("numba")
        print(f"compile time: {time.perf_counter() - start:.2f} s\n")
        backends.append("numba")
    else:
        print("numba not installed, timing the numpy backend only\n")

    width = max(len(k) for k in workloads)
    for name, fn in workloads.items():
        times = {}
        outputs = {}
        for b in backends:
            times[b], outputs[b] = bench(lambda: fn(b))
        line = f"{name:<{width}}"
        for b in backends:
            line += f"  {b} {times[b] * 1000:9.2f} ms"
        if len(backends) == 2:
            line += f"  speedup x{times['numpy'] / times['numba']:.1f}"
            same = np.array_equal(np.asarray(outputs["numpy"]),
                                  np.asarray(outputs["numba"]))
            line += "  outputs equal" if same else "  OUTPUTS DIFFER"
        print(line)


if __name__ == "__main__":
    main()
