"""CSV exports for plotting: one 7x7 replicator run, one 6x6 best-reply run.

Usage: python3 scripts/export_plots_data.py --out plots
"""

import argparse
from fractions import Fraction
from pathlib import Path

import numpy as np

from gamedyn.analysis import claim_integrals
from gamedyn.best_reply import integrate_br
from gamedyn.experiments import exact_fraction_point, uniform_simplex, valid_start_77
from gamedyn.game import build_game_66, build_game_77
from gamedyn.replicator import integrate_rep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="plots")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    g77 = build_game_77(Fraction(1, 50))
    tr = integrate_rep(g77, valid_start_77(rng), 3000.0)
    ts = np.linspace(0.0, 3000.0, 3001)
    tr.to_csv(out / "rep77.csv", ts)
    c = claim_integrals(tr, ts)
    keys = ["t", "I", "ln_x4_over_lambda", "ln_mu_over_lambda", "tau_bar", "tau_hat"]
    np.savetxt(out / "rep77_claims.csv", np.column_stack([c[k] for k in keys]), delimiter=",", header=",".join(keys), comments="")

    g66 = build_game_66()
    sol = integrate_br(g66, exact_fraction_point(uniform_simplex(rng, 6)), 60.0)
    sol.to_csv(out / "br66.csv", np.linspace(0.0, 60.0, 6001))
    print(f"wrote {sorted(p.name for p in out.iterdir())}")


if __name__ == "__main__":
    main()
