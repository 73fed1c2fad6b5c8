"""Time the sampler kernels with numba and with the plain-Python fallback.

    python3 benchmarks/bench_kernels.py            # both backends, side by side
    python3 benchmarks/bench_kernels.py --single   # current backend only

The fallback is selected by SBBETA_DISABLE_NUMBA=1, so each backend runs in
its own interpreter.
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def workload(seed=0, K=20, N=100, D=16, steps=200):
    rng = np.random.default_rng(seed)
    return {
        "Y": rng.standard_normal((D, N)), "Theta": rng.standard_normal((D, K)),
        "W": rng.standard_normal((K, N)), "Z": (rng.random((K, N)) < 0.3).astype(np.int8),
        "log_odds": rng.normal(-1.0, 1.0, K), "uniforms": rng.random((K, N)),
        "normals": rng.standard_normal((K, N)), "theta_normals": rng.standard_normal((K, N, D)),
        "pi": rng.uniform(0.05, 0.5, 200), "m1": rng.integers(1, 50, 200),
        "mh_normals": rng.standard_normal((200, steps)), "mh_uniforms": rng.random((200, steps)),
    }


def time_call(fn, repeat):
    fn()  # warm-up (includes compilation)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_single(repeat: int) -> dict:
    from sbbeta import _kernels
    from sbbeta._accel import backend

    w = workload()

    def zblock():
        Theta, W, Z = w["Theta"].copy(), w["W"].copy(), w["Z"].copy()
        _kernels.z_block_kernel(w["Y"], Theta, W, Z, w["log_odds"], 0.1, w["uniforms"], w["normals"], True,
                                w["theta_normals"])

    def wcol():
        _kernels.w_column_kernel(w["Y"], w["Theta"], w["W"].copy(), w["Z"], 0.1, w["normals"])

    def mhpi():
        pi = w["pi"].copy()
        _kernels.mh_pi_kernel(pi, np.ones(pi.size), np.ones(pi.size, dtype=np.int64), w["m1"], 100 - w["m1"],
                              1.5, 0.03, w["mh_normals"], w["mh_uniforms"])

    return {"backend": backend(),
            "z_block_kernel": time_call(zblock, repeat),
            "w_column_kernel": time_call(wcol, repeat),
            "mh_pi_kernel": time_call(mhpi, repeat)}


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--single", action="store_true", help="benchmark the current backend and print JSON")
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    if args.single:
        print(json.dumps(run_single(args.repeat)))
        return 0
    rows = []
    for disable in ("0", "1"):
        env = dict(os.environ, SBBETA_DISABLE_NUMBA=disable)
        out = subprocess.run([sys.executable, __file__, "--single", "--repeat", str(args.repeat)],
                             env=env, check=True, capture_output=True, text=True).stdout
        rows.append(json.loads(out.strip().splitlines()[-1]))
    jit, py = rows
    print(f"{'kernel':<18}{'numba [s]':>12}{'python [s]':>12}{'speed-up':>10}")
    for name in ("z_block_kernel", "w_column_kernel", "mh_pi_kernel"):
        print(f"{name:<18}{jit[name]:>12.5f}{py[name]:>12.5f}{py[name] / jit[name]:>10.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
