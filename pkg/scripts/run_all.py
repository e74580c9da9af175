"""Run every named experiment at its full batch size and write results/.

Usage: python3 scripts/run_all.py [--out results] [--only br66 rep77 ...]
Set GAMEDYN_THREADS to run batches in parallel.
"""

import argparse
import json
import time

from gamedyn.experiments import ExperimentConfig, run_experiment

BATCHES = [
    ExperimentConfig("br66", count=100, T=60.0),
    ExperimentConfig("br77", count=100, eps="1/10"),
    ExperimentConfig("rps-br", count=50, alpha="3", beta="1"),
    ExperimentConfig("rps-br", count=50, alpha="1", beta="3"),
    ExperimentConfig("perturb66", count=100, delta="1/100"),
    ExperimentConfig("rescale-check", count=10),
    ExperimentConfig("rep77", count=20, eps="1/50", T=3000.0),
    ExperimentConfig("rps-rep", count=20, eps="1/5", T=5000.0),
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results")
    ap.add_argument("--only", nargs="*")
    args = ap.parse_args()
    for cfg in BATCHES:
        if args.only and cfg.experiment not in args.only:
            continue
        cfg.out_dir = f"{args.out}/{cfg.experiment}-{cfg.alpha}-{cfg.beta}" if cfg.experiment == "rps-br" else args.out
        t0 = time.perf_counter()
        res = run_experiment(cfg)
        print(f"{cfg.experiment}: {json.dumps(res.summary())} failures={len(res.failures)} ({time.perf_counter() - t0:.1f}s)")


if __name__ == "__main__":
    main()
