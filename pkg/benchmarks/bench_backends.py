"""Time the compiled and pure-Python kernels on the same workloads.

    python benchmarks/bench_backends.py [--cycles 2000] [--full]

``--full`` also times 10**5 compiled cycles at N=10, L=40 (the desk-scale
target is under 60 s) and a 1024 x 1024 Jacobi diagonalization.
"""

import argparse
import time

import numpy as np

from stabsse import kernels
from stabsse.ed import build_dense, symmetric_eigenvalues
from stabsse.engine import Configuration, mc_cycle
from stabsse.models import build_cnot_chain, build_tfi_chain


def time_cycles(cat, L, beta, cycles, backend):
    config = Configuration.initial(cat, L)
    rng = np.random.default_rng(1)
    kernels.run_cycles(config, cat, beta, max(cycles // 10, 1), rng, backend=backend)
    t0 = time.perf_counter()
    kernels.run_cycles(config, cat, beta, cycles, rng, backend=backend)
    return (time.perf_counter() - t0) / cycles


def time_reference(cat, L, beta, cycles):
    config = Configuration.initial(cat, L)
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    for _ in range(cycles):
        mc_cycle(config, cat, beta, rng)
    return (time.perf_counter() - t0) / cycles


def time_jacobi(n, backend):
    h = build_dense(build_cnot_chain(n, 4.0, 1.0))
    t0 = time.perf_counter()
    sp = symmetric_eigenvalues(h, backend=backend)
    return time.perf_counter() - t0, sp.sweeps


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cycles", type=int, default=2000)
    ap.add_argument("--full", action="store_true")
    args = ap.parse_args()
    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)}")

    cases = [("cnot_chain", build_cnot_chain(10, 4.0, 1.0)), ("tfi_chain", build_tfi_chain(10, 3.0, 1.0))]
    for name, cat in cases:
        for L in (10, 40):
            times = {}
            for b in backends:
                n = args.cycles if b == "compiled" else max(args.cycles // 50, 20)
                times[b] = time_cycles(cat, L, 1.0, n, b)
            line = "  ".join(f"{b} {1e6 * t:9.1f} us/cycle" for b, t in times.items())
            if len(times) == 2:
                line += f"  speedup {times['python'] / times['compiled']:6.1f}x"
            print(f"{name:10s} N=10 L={L:2d}  {line}")
    ref = time_reference(build_cnot_chain(10, 4.0, 1.0), 40, 1.0, 5)
    print(f"reference mc_cycle N=10 L=40  {1e6 * ref:9.1f} us/cycle")

    for b in backends:
        secs, sweeps = time_jacobi(6, b)
        print(f"jacobi 64x64    {b:8s} {secs:8.3f} s  ({sweeps} sweeps)")

    if args.full and "compiled" in backends:
        cat = build_cnot_chain(10, 4.0, 1.0)
        per = time_cycles(cat, 40, 2.5, 100_000, "compiled")
        total = per * 100_000
        print(f"1e5 cycles N=10 L=40 beta=2.5: {total:.1f} s ({'within' if total < 60 else 'over'} 60 s)")
        secs, sweeps = time_jacobi(10, "compiled")
        print(f"jacobi 1024x1024 compiled {secs:.1f} s ({sweeps} sweeps)")


if __name__ == "__main__":
    main()
