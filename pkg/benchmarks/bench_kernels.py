"""Time the hot kernels with and without numba.

Each path runs in its own interpreter, since the switch is read at import:

    python3 benchmarks/bench_kernels.py [--repeat 5] [--cells 16]

The compiled path is warmed up once before timing, so JIT compilation is
not counted (it is cached on disk after the first run anyway).
"""
import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
from bddc import _jit, build_constraints, pcg, poisson_problem, setup_bddc
from bddc.preconditioner import setup_subdomain
from bddc.sparse import amd_order, block_saddle, lu_factor, lu_solve, spmv, transpose

repeat, cells = int(sys.argv[1]), int(sys.argv[2])
p = poisson_problem(2, cells)
dec = p.decomposition
cons = build_constraints(dec)
K = block_saddle(p.local_matrices[0], cons.C[0])
x = np.random.default_rng(0).standard_normal(p.A.ncols)
F = lu_factor(K)
b = np.ones(K.nrows)

cases = {
    "spmv": lambda: spmv(p.A, x),
    "transpose": lambda: transpose(p.A),
    "amd": lambda: amd_order(p.A),
    "lu_factor": lambda: lu_factor(K),
    "lu_solve": lambda: lu_solve(F, b),
    "bddc_setup": lambda: setup_bddc(p.A, p.local_matrices, dec, cons),
}
M = setup_bddc(p.A, p.local_matrices, dec, cons)
cases["bddc_apply"] = lambda: M.apply(x)
cases["pcg_solve"] = lambda: pcg(p.A, p.rhs, M)

out = {"numba": _jit.USE_NUMBA, "n": p.A.nrows, "saddle": K.nrows}
for name, fn in cases.items():
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    out[name] = best
json.dump(out, sys.stdout)
"""

KERNELS = ("spmv", "transpose", "amd", "lu_factor", "lu_solve", "bddc_setup", "bddc_apply",
           "pcg_solve")


def run(disable, repeat, cells):
    env = dict(os.environ)
    env.pop("BDDC_DISABLE_NUMBA", None)
    if disable:
        env["BDDC_DISABLE_NUMBA"] = "1"
    proc = subprocess.run([sys.executable, "-c", WORKER, str(repeat), str(cells)], env=env,
                          capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--cells", type=int, default=16, help="cells per subdomain side (k=2)")
    args = ap.parse_args(argv)
    t0 = time.perf_counter()
    fast = run(False, args.repeat, args.cells)
    slow = run(True, args.repeat, args.cells)
    print(f"2x2 subdomains, {args.cells}x{args.cells} cells each: {fast['n']} global dofs, "
          f"saddle size {fast['saddle']}; best of {args.repeat}")
    print(f"{'kernel':<12} {'numba [ms]':>12} {'numpy [ms]':>12} {'speedup':>9}")
    for name in KERNELS:
        f, s = fast[name] * 1e3, slow[name] * 1e3
        print(f"{name:<12} {f:12.3f} {s:12.3f} {s / f:9.1f}x")
    if not fast["numba"]:
        print("note: numba unavailable, both columns used the fallback")
    print(f"total wall time {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
