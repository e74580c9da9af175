"""Time averages and the running integral of 4 y3 - 3 in the rescaled RPS game.

Prints, per start, the closest approach of the time average to the Shapley
vertex qbar and the start times of record episodes of the running integral.
Longer horizons show how slowly new records arrive (dwell times grow by
roughly (1/eps)^3 per cycle).

Usage: python3 scripts/rps_time_average.py --T 5000 --count 20 --eps 1/5
"""

import argparse
from fractions import Fraction

import numpy as np

from gamedyn.analysis import record_episodes, running_integral, time_average_sweep
from gamedyn.experiments import uniform_simplex
from gamedyn.game import RPSSpec, build_rps
from gamedyn.replicator import integrate_rep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--T", type=float, default=5000.0)
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--eps", type=Fraction, default=Fraction(1, 5))
    ap.add_argument("--grid", type=float, default=1.0, help="sampling step for the sweep")
    args = ap.parse_args()

    e = float(args.eps)
    g = build_rps(RPSSpec.epsilon(args.eps))
    qbar = np.array([e * e, e, 1.0]) / (1 + e + e * e)
    rng = np.random.default_rng(args.seed)
    grid = np.arange(0.0, args.T + args.grid / 2, args.grid)
    for k in range(args.count):
        x0 = uniform_simplex(rng, 3)
        while np.abs(x0 - 1 / 3).max() < 1e-6:
            x0 = uniform_simplex(rng, 3)
        tr = integrate_rep(g, x0, args.T)
        d = time_average_sweep(tr, qbar, grid[1:])
        episodes = record_episodes(running_integral(tr, [0, 0, 4], -3.0, grid), grid)
        low = tr.log_sample(args.T)[0].min()
        print(f"run {k:2d}: min log share {low:9.1f}  sweep {d:.4f}  record episodes {episodes}")


if __name__ == "__main__":
    main()
