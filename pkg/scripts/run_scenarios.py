"""Run both scenario presets in both control modes and print a summary table.

Each run writes its full artifact set (CSVs, config.ini, manifest.json) under
``--out/<scenario>-<mode>``.

    python scripts/run_scenarios.py --out runs --paths 1000 --sweep-paths 200
"""

import argparse
import time
from pathlib import Path

import numpy as np

from preypred.cli import parse_config, run_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--out", default="runs")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--paths", type=int, default=1000, help="objective ensemble size")
    ap.add_argument("--sweep-paths", type=int, default=200)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--modes", nargs="+", default=["quality", "quantity"])
    args = ap.parse_args()

    print(f"{'scenario':13s} {'mode':9s} {'J':>7s} {'se':>6s} {'cens':>5s} {'iters':>5s} "
          f"{'mean u':>7s} {'x(T)':>8s} {'y(T)':>8s} {'secs':>5s}")
    for name in ("conservation", "pest"):
        cfg = parse_config(preset=name, overrides={
            "run": {"seed": str(args.seed), "paths": str(args.paths)},
            "sweep": {"paths": str(args.sweep_paths)},
        })
        for mode in args.modes:
            out = Path(args.out) / f"{name}-{mode}"
            out.mkdir(parents=True, exist_ok=True)
            t0 = time.perf_counter()
            code, res = run_scenario(name, cfg, out, mode, args.workers)
            x, y = res.stats.mean[-1]
            print(f"{name:13s} {mode:9s} {res.objective:7.3f} {res.objective_se:6.3f} "
                  f"{res.censored_fraction:5.2f} {len(res.history):5d} "
                  f"{np.mean(res.schedule.values):7.3f} {x:8.3f} {y:8.3f} "
                  f"{time.perf_counter() - t0:5.0f}" + ("" if code == 0 else f"  exit {code}"))


if __name__ == "__main__":
    main()
