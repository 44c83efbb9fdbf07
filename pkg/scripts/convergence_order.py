"""Strong-error study of the Euler-Maruyama scheme.

Coarse paths reuse summed fine Brownian increments, so every resolution sees
the same noise.  Prints the mean terminal error per step size and the slope
of log error against log dt.  Jumps are switched off because the grid-level
Poisson counts cannot be refined consistently.
"""

import argparse
import math

import numpy as np

from preypred.model import ModelParams
from preypred.noise import NoiseParams
from preypred.sim import SimConfig, simulate_with_noise


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=200)
    ap.add_argument("--sigma", type=float, default=0.3)
    ap.add_argument("--fine-exp", type=int, default=12, help="finest dt is 2**-fine_exp")
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    mp = ModelParams(alpha=1.0, xi=1.0)
    nz = NoiseParams(sigma1=args.sigma, sigma2=args.sigma, lam=0.0)
    n_fine = 2 ** args.fine_exp
    fine_dt = 1.0 / n_fine
    factors = [2 ** k for k in range(1, 7)]
    errs = {m: [] for m in factors}
    rng = np.random.default_rng(args.seed)
    for _ in range(args.paths):
        dW = rng.normal(0.0, math.sqrt(fine_dt), size=(n_fine, 2))

        def run(m):
            inc = dW.reshape(-1, m, 2).sum(axis=1)
            rec = np.column_stack([inc, np.zeros((len(inc), 2))])
            return simulate_with_noise(2.0, 8.0, None, mp, nz, SimConfig(m * fine_dt, 1.0),
                                       rec).states[-1]

        ref = run(1)
        for m in factors:
            errs[m].append(np.abs(run(m) - ref).max())

    dts = np.array([m * fine_dt for m in factors])
    means = np.array([np.mean(errs[m]) for m in factors])
    for dt, e in zip(dts, means):
        print(f"dt={dt:.2e}  mean terminal error={e:.3e}")
    slope = np.polyfit(np.log(dts), np.log(means), 1)[0]
    print(f"observed order {slope:.2f}")


if __name__ == "__main__":
    main()
