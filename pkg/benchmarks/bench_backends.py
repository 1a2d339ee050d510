"""Time the compiled and interpreted kernel backends on the same workload.

    python3 benchmarks/bench_backends.py [--n-u 300] [--horizon 100] [--repeat 3]

Each backend runs in a fresh interpreter (the backend is fixed at import).
The numba timing excludes compilation: one warm-up trial runs first.
Prints wall time per trial and a hash of the outputs, which must match.
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import hashlib, json, sys, time
import numpy as np
from gwtw._jit import BACKEND
from gwtw.config import SimConfig
from gwtw.metrics import balls_in_bins_max_load, run_trial
from gwtw.distributions import RngStream
args = json.loads(sys.argv[1])
cfg = SimConfig(n_u=args["n_u"], n_s=args["n_u"], n_c=args["n_u"], kappa=2, sigma=2,
                tau=20, horizon=args["horizon"], seed=42)
run_trial(cfg.replace(n_u=20, n_s=20, n_c=20, horizon=5.0), 0)  # warm-up / compile
h = hashlib.sha256()
t0 = time.perf_counter()
for i in range(args["repeat"]):
    out = run_trial(cfg, i, stop_at_convergence=False)
    h.update(out.trace.tobytes())
web_s = (time.perf_counter() - t0) / args["repeat"]
t0 = time.perf_counter()
loads = balls_in_bins_max_load(461, 100, 2, 20, RngStream(0))
bins_s = time.perf_counter() - t0
h.update(loads.tobytes())
print(json.dumps({"backend": BACKEND, "web_trial_s": web_s, "balls_in_bins_s": bins_s,
                  "hash": h.hexdigest()[:16]}))
"""


def run_backend(disable, params):
    env = dict(os.environ, GWTW_DISABLE_NUMBA="1" if disable else "0")
    res = subprocess.run([sys.executable, "-c", WORKER, json.dumps(params)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n-u", type=int, default=300)
    ap.add_argument("--horizon", type=float, default=100.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    params = {"n_u": args.n_u, "horizon": args.horizon, "repeat": args.repeat}

    results = [run_backend(False, params), run_backend(True, params)]
    print(f"workload: web n_u={args.n_u} horizon={args.horizon} x{args.repeat}, balls-in-bins 461/100 sigma=2 x20")
    print(f"{'backend':<8} {'web trial [s]':>14} {'bins [s]':>10}  hash")
    for r in results:
        print(f"{r['backend']:<8} {r['web_trial_s']:>14.4f} {r['balls_in_bins_s']:>10.4f}  {r['hash']}")
    nb, py = results
    print(f"speedup: web x{py['web_trial_s'] / nb['web_trial_s']:.1f}, "
          f"bins x{py['balls_in_bins_s'] / nb['balls_in_bins_s']:.1f}")
    if nb["hash"] != py["hash"]:
        print("outputs differ between backends", file=sys.stderr)
        return 1
    print("outputs identical")
    return 0


if __name__ == "__main__":
    sys.exit(main())
