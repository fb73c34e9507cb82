"""Compiled kernel vs the pure-numpy fallback on one propagation workload.

Each backend runs in its own interpreter because the choice is made at
import time from ``LMSZ_SPIN_NO_NUMBA``.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--system qubits]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from lmsz_spin import _jit
from lmsz_spin.operators import CouplingParams
from lmsz_spin.propagator import PropagationConfig, run_sweep
from lmsz_spin.sweep import SweepProtocol

system, repeat = sys.argv[1], int(sys.argv[2])
params = CouplingParams(0.8, 0.2, 0.0, 0.3, 0.1)
start = "--" if system == "qubits" else "-10"
cfg = PropagationConfig(tol=1e-8, n_samples=2001)
sweep = SweepProtocol(2.0)
t0 = time.perf_counter()
first = run_sweep(system, params, sweep, start, cfg)  # includes JIT compilation or cache load
warm = time.perf_counter() - t0
times = []
for _ in range(repeat):
    t0 = time.perf_counter()
    out = run_sweep(system, params, sweep, start, cfg)
    times.append(time.perf_counter() - t0)
print(json.dumps({"numba": _jit.USE_NUMBA, "first": warm, "best": min(times), "steps": out.n_steps,
                  "final": out.populations[-1].tolist()}))
"""


def run(no_numba: bool, system: str, repeat: int) -> dict:
    env = dict(os.environ)
    env.pop("LMSZ_SPIN_NO_NUMBA", None)
    if no_numba:
        env["LMSZ_SPIN_NO_NUMBA"] = "1"
    res = subprocess.run([sys.executable, "-c", WORKER, system, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--system", choices=("qubits", "qutrits"), default="qubits")
    args = ap.parse_args()
    jit = run(False, args.system, args.repeat)
    py = run(True, args.system, args.repeat)
    diff = max(abs(a - b) for a, b in zip(jit["final"], py["final"]))
    print(f"{args.system}: {jit['steps']} steps per sweep")
    for name, r in (("numba", jit), ("numpy", py)):
        print(f"  {name:6s} active={r['numba']!s:5s} first {r['first']:.3f} s, best of {args.repeat} {r['best']:.3f} s")
    print(f"  speedup {py['best'] / jit['best']:.1f}x, max population difference {diff:.1e}")


if __name__ == "__main__":
    main()
