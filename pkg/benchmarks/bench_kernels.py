"""Compare the numba kernels with the interpreted / numpy fallbacks.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Kernel timings call the compiled function and its ``py_func`` (whose inner
helpers stay compiled) in the same process. The end-to-end timing runs a 20 s closed-loop scenario in child
processes with ``QUADSIM_NUMBA`` set to 1 and 0.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from quadsim import _accel, _kernels
from quadsim.params import QuadParams

END_TO_END = (
    "import time\n"
    "from quadsim import experiments as ex\n"
    "cfg = ex.ScenarioConfig.from_case('case1')\n"
    "ex.run_closed_loop(cfg)\n"
    "t0 = time.perf_counter()\n"
    "ex.run_closed_loop(cfg)\n"
    "print(time.perf_counter() - t0)\n"
)


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_rows(repeat):
    prm = QuadParams().as_array()
    s0 = np.zeros(12)
    s0[6:9] = (0.1, -0.1, 0.2)
    w = np.array([7000.0, 6400.0, 6800.0, 6600.0])
    steps = 2000
    traj = np.empty((steps + 1, 12))

    rng = np.random.default_rng(0)
    n_mf, n = 5, 20000
    mf = np.empty((2, n_mf, 3))
    mf[:, :, 0] = 0.5
    mf[:, :, 1] = 2.0
    mf[:, :, 2] = np.linspace(-1, 1, n_mf)
    coef = rng.normal(size=(n_mf * n_mf, 3))
    x1, x2 = rng.uniform(-1, 1, n), rng.uniform(-1, 1, n)
    out, ws = np.empty(n), np.empty(n)

    rows = []
    rk4 = _kernels.rk4_many
    rk4(s0, w, 0.01, steps, prm, traj)
    rows.append((f"rk4_many {steps} steps", "compiled" if _accel.USE_NUMBA else "interpreted",
                 best(lambda: rk4(s0, w, 0.01, steps, prm, traj), repeat)))
    if hasattr(rk4, "py_func"):
        rows.append((f"rk4_many {steps} steps", "outer py_func", best(lambda: rk4.py_func(s0, w, 0.01, steps, prm, traj), 1)))

    loop = _kernels.fis_batch_loop
    loop(x1, x2, mf, coef, out, ws)
    rows.append((f"fis batch {n} points", "loop compiled" if _accel.USE_NUMBA else "loop interpreted",
                 best(lambda: loop(x1, x2, mf, coef, out, ws), repeat)))
    rows.append((f"fis batch {n} points", "numpy", best(lambda: _kernels.fis_batch_numpy(x1, x2, mf, coef, out, ws), repeat)))
    return rows


def end_to_end(flag):
    env = dict(os.environ, QUADSIM_NUMBA=flag)
    res = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
    return float(res.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rows = kernel_rows(args.repeat)
    rows.append(("closed loop 20 s", "QUADSIM_NUMBA=1", end_to_end("1")))
    rows.append(("closed loop 20 s", "QUADSIM_NUMBA=0", end_to_end("0")))
    width = max(len(r[0]) for r in rows)
    for name, path, sec in rows:
        print(f"{name:<{width}}  {path:<20} {sec * 1e3:10.3f} ms")


if __name__ == "__main__":
    main()
