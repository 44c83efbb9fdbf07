"""Objective of constant controls on a grid, next to the sweep optimum.

    python scripts/constant_control_grid.py --mode quantity --paths 500
"""

import argparse

import numpy as np

from preypred.cli import parse_config, run_sweep
from preypred.montecarlo import estimate_objective, run_ensemble
from preypred.sim import ControlSchedule


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", help="INI file (defaults to the built-in configuration)")
    ap.add_argument("--preset", choices=["conservation", "pest"])
    ap.add_argument("--mode", choices=["quality", "quantity"], default="quality")
    ap.add_argument("--points", type=int, default=21)
    ap.add_argument("--paths", type=int, default=1, help="1 is enough for noise-free configs")
    ap.add_argument("--dt", type=float, default=0.01)
    args = ap.parse_args()

    cfg = parse_config(args.config, preset=args.preset,
                       overrides={"sim": {"dt": repr(args.dt)}, "run": {"paths": str(args.paths)},
                                  "sweep": {"paths": str(min(args.paths, 200))}})
    lo, hi = cfg.bounds(args.mode)
    n = cfg.sim.n_steps + 1
    for u in np.linspace(lo, hi, args.points):
        sched = ControlSchedule.constant(float(u), n, args.mode, (lo, hi))
        stats = run_ensemble(args.paths, cfg.x0, cfg.y0, sched, cfg.model, cfg.noise, cfg.sim,
                             cfg.seed, cfg.target)
        J, se = estimate_objective(stats)
        print(f"u={u:6.3f}  J={J:8.4f}  se={se:6.3f}  censored={stats.censored_fraction:.2f}")
    res = run_sweep(cfg, args.mode)
    print(f"sweep: J={res.objective:.4f} mean u={np.mean(res.schedule.values):.4f} "
          f"iterations={len(res.history)} converged={res.converged}")


if __name__ == "__main__":
    main()
