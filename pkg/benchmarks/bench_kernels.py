"""Compiled kernels vs the interpreted fallback on fixed workloads.

Usage: python3 benchmarks/bench_kernels.py [--trials N] [--repeat R]

Each backend runs in its own interpreter (NTS_JIT=1 / NTS_JIT=0).  The
compiled timing excludes the first call, which pays for compilation or
cache loading.  Results of both backends are checked for equality.
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from noisytree.harness import ExperimentSpec, run
from noisytree.noise import NoiseModel
from noisytree.oracle import beating_leaves_batch
from noisytree.treekit import generate

trials, repeat = int(sys.argv[1]), int(sys.argv[2])
cases = {
    "a_walk Δ=9 d=8": lambda: run(ExperimentSpec("regular:delta=9,depth=8,implicit=1", "a_walk",
                                                 q_rule="star:0.8:0.05", trials=trials), keep_samples=True).samples,
    "a_natural b=3 d=6": lambda: run(ExperimentSpec("complete:branching=3,depth=6", "a_natural", q=0.2,
                                                    trials=trials), keep_samples=True).samples,
    "pf Δ=5 d=6": lambda: run(ExperimentSpec("regular:delta=5,depth=6,implicit=1", "pf", q_rule="invdeg:0.09",
                                             lam=0.75, trials=trials), keep_samples=True).samples,
    "a_loop b=2 d=8": lambda: run(ExperimentSpec("complete:branching=2,depth=8", "a_loop", q=0.1,
                                                 trials=trials), keep_samples=True).samples,
    "beating Δ=6 D=4": lambda: {"count": beating_leaves_batch(generate("regular:delta=6,depth=4"),
                                                              NoiseModel(q=0.5), 0, trials)},
}
out = {}
for name, fn in cases.items():
    res = fn()  # warm-up (compilation / cache load)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        res = fn()
        best = min(best, time.perf_counter() - t0)
    out[name] = {"seconds": best, "digest": {k: int(np.asarray(v).sum()) for k, v in res.items()}}
print(json.dumps(out))
"""


def measure(jit: bool, trials: int, repeat: int) -> dict:
    env = dict(os.environ, NTS_JIT="1" if jit else "0")
    res = subprocess.run([sys.executable, "-c", WORKER, str(trials), str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args()
    fast = measure(True, a.trials, a.repeat)
    slow = measure(False, a.trials, 1)
    print(f"{'workload':<22}{'compiled s':>12}{'python s':>12}{'speedup':>10}  same")
    ok = True
    for name in fast:
        f, s = fast[name]["seconds"], slow[name]["seconds"]
        same = fast[name]["digest"] == slow[name]["digest"]
        ok &= same
        print(f"{name:<22}{f:>12.4f}{s:>12.4f}{s / max(f, 1e-9):>10.1f}  {'yes' if same else 'NO'}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
