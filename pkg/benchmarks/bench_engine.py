#!/usr/bin/env python3
"""Throughput benchmark for the engine's two execution paths.

Times the case-study scenario in the current mode (compiled unless
RCS_SIM_NO_NUMBA is set), and with --compare re-runs itself in a subprocess
with the fallback forced, verifying both paths produce identical traces
before reporting the speedup.

    python benchmarks/bench_engine.py --compare
"""

import argparse
import json
import os
import pathlib
import subprocess
import sys
import time

REPO = pathlib.Path(__file__).resolve().parent.parent
SCENARIO = REPO / "scenarios" / "case-study.toml"


def measure(runs: int) -> dict:
    from dataclasses import replace

    from rcs_sim import run
    from rcs_sim._dispatch import NUMBA_ENABLED
    from rcs_sim.config import load_scenario

    cfg = load_scenario(str(SCENARIO))
    t0 = time.perf_counter()
    run(cfg)  # first call pays any compilation
    first = time.perf_counter() - t0

    t0 = time.perf_counter()
    for i in range(runs):
        result = run(replace(cfg, seed=i + 1))
    elapsed = time.perf_counter() - t0
    return {
        "jit": NUMBA_ENABLED,
        "runs": runs,
        "T": cfg.T,
        "first_call_s": first,
        "elapsed_s": elapsed,
        "slots_per_s": runs * cfg.T / elapsed,
        "digest": run(replace(cfg, seed=1)).digest(),
        "safety_rate": result.summary.safety_rate,
    }


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--runs", type=int, default=None,
                        help="timed runs (default 200 compiled, 3 interpreted)")
    parser.add_argument("--compare", action="store_true",
                        help="also measure the interpreted fallback and compare")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    args = parser.parse_args()

    from rcs_sim._dispatch import NUMBA_ENABLED

    runs = args.runs if args.runs is not None else (200 if NUMBA_ENABLED else 3)
    here = measure(runs)
    if args.json:
        print(json.dumps(here))
        return 0

    mode = "numba-compiled" if here["jit"] else "interpreted fallback"
    print(f"{mode}: {here['runs']} runs x T={here['T']} slots")
    print(f"  first call (incl. compile): {here['first_call_s']:.2f} s")
    print(f"  steady state: {here['slots_per_s']:,.0f} slots/s "
          f"({here['elapsed_s'] / here['runs'] * 1e3:.2f} ms per run)")

    if args.compare:
        if not here["jit"]:
            print("already in fallback mode; unset RCS_SIM_NO_NUMBA to compare")
            return 2
        env = dict(os.environ)
        env["RCS_SIM_NO_NUMBA"] = "1"
        proc = subprocess.run(
            [sys.executable, __file__, "--runs", "3", "--json"],
            capture_output=True, text=True, env=env, check=True,
        )
        other = json.loads(proc.stdout.strip().splitlines()[-1])
        print(f"interpreted fallback: {other['slots_per_s']:,.0f} slots/s "
              f"({other['elapsed_s'] / other['runs'] * 1e3:.2f} ms per run)")
        match = other["digest"] == here["digest"]
        print(f"paths bit-identical: {match}")
        print(f"speedup: {here['slots_per_s'] / other['slots_per_s']:,.0f}x")
        if not match:
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
