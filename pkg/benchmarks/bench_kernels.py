"""Compare the compiled and pure-Python kernels.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``.
"""
import argparse
import random
import timeit

import numpy as np

from pacqe import kernels
from pacqe.oracle import GenConfig, gen_qf

NAMES = ("y", "x", "z")


def workloads(seed: int):
    rng = random.Random(seed)
    cfg = GenConfig(vars=3, max_atoms=8)
    progs = [kernels.compile_qf(gen_qf(cfg, rng, NAMES), NAMES) for _ in range(20)]
    pts = np.array([[rng.randint(-30, 30) for _ in NAMES] for _ in range(2000)], dtype=np.int64)
    m = 24
    pats = [[rng.random() < 0.4 for _ in range(m)] for _ in range(9)]
    vals = [[rng.randrange(m) for _ in range(4)] for _ in range(5000)]

    def points(backend):
        for p in progs:
            kernels.eval_points(p, pts, backend)

    def line(backend):
        for p in progs:
            kernels.eval_line(p, {"x": 3, "z": -4}, "y", -4096, 4096, backend)

    def table(backend):
        kernels.segment_table(pats, vals, m, backend)

    return {"eval_points": points, "eval_line": line, "segment_table": table}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{'kernel':<15}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name, fn in workloads(args.seed).items():
        times = [min(timeit.repeat(lambda: fn(b), number=1, repeat=args.repeat)) for b in backends]
        row = f"{name:<15}" + "".join(f"{t * 1000:>10.1f}ms" for t in times)
        if len(times) > 1:
            row += f"{times[1] / times[0]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
