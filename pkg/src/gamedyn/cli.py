"""Command-line entry point: ``gamedyn {nash,run,shapley,decompose-check}``."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .best_reply import shapley_triangle
from .equilibria import enumerate_nash
from .exact import as_fraction
from .experiments import DEFAULTS, ExperimentConfig, run_experiment, uniform_simplex
from .game import BUILDERS, SymmetricGame, build_game_77
from .replicator import verify_rescale_lemma

FACES = {"game66": (3, 4, 5), "game77": (4, 5, 6)}


def _frac(s: str) -> Fraction:
    try:
        return as_fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational p/q: {s!r}") from exc


def _fmt(v: Fraction) -> str:
    return str(v)


def _point(x) -> str:
    return "(" + ", ".join(_fmt(v) for v in x) + ")"


def _load_game(args) -> SymmetricGame:
    if args.game:
        return SymmetricGame.from_json(json.loads(Path(args.game).read_text()))
    kw = {k: getattr(args, k) for k in ("eps", "alpha", "beta") if getattr(args, k, None) is not None}
    return BUILDERS[args.builder](**kw)


def _add_game_args(p: argparse.ArgumentParser):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--builder", choices=sorted(BUILDERS))
    src.add_argument("--game", help="game JSON file")
    p.add_argument("--eps", type=_frac)
    p.add_argument("--alpha", type=_frac)
    p.add_argument("--beta", type=_frac)


def cmd_nash(args) -> int:
    g = _load_game(args)
    certs = enumerate_nash(g)
    for k, c in enumerate(certs):
        sx = "{" + ",".join(str(i + 1) for i in c.support_x) + "}"
        print(f"[{k}] x={_point(c.x)} y={_point(c.y)} support={sx} quasi_strict={c.quasi_strict} strict={c.strict}")
    if certs and certs[0].degenerate:
        print("game is degenerate: certificates are extreme equilibria")
    print("unique" if len(certs) == 1 else f"{len(certs)} extreme equilibria")
    if args.json:
        Path(args.json).write_text(json.dumps([c.to_json() for c in certs], indent=2) + "\n")
    return 0


def cmd_shapley(args) -> int:
    g = _load_game(args)
    face = tuple(i - 1 for i in args.face) if args.face else FACES.get(args.builder, (0, 1, 2))
    geom = shapley_triangle(None, face, g)
    print("face {" + ",".join(str(i + 1) for i in face) + "}")
    for v in geom.vertices:
        print(_point(v))
    return 0


def cmd_run(args) -> int:
    doc = json.loads(Path(args.config).read_text()) if args.config else {}
    if args.experiment:
        doc["experiment"] = args.experiment
    if "experiment" not in doc:
        print("error: experiment name required", file=sys.stderr)
        return 2
    for key in ("count", "seed", "T", "runs_per_game", "rtol", "atol", "policy", "out_dir"):
        v = getattr(args, key)
        if v is not None:
            doc[key] = v
    for key in ("eps", "delta", "alpha", "beta"):
        v = getattr(args, key)
        if v is not None:
            doc[key] = str(v)
    cfg = ExperimentConfig.from_json(doc)
    result = run_experiment(cfg)
    print(json.dumps(result.config.to_json()))
    for label, n in sorted(result.summary().items()):
        print(f"{label}: {n}/{len(result.records)}")
    flagged = sum(r.flagged for r in result.records)
    if flagged:
        print(f"flagged: {flagged}")
    for r in result.failures:
        print(f"FAIL run {r.index}: {r.report.label}", file=sys.stderr)
    return 0 if result.ok else 1


def cmd_decompose_check(args) -> int:
    g = build_game_77(args.eps)
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for k in range(args.count):
        r = verify_rescale_lemma(g, uniform_simplex(rng, 7), args.T)
        worst = max(worst, r.bar_discrepancy, r.hat_discrepancy)
        print(f"run {k}: bar={r.bar_discrepancy:.3e} hat={r.hat_discrepancy:.3e}")
    ok = worst < args.tol
    print(f"max discrepancy {worst:.3e} ({'ok' if ok else 'FAIL'})")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gamedyn")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("nash", help="enumerate Nash equilibria exactly")
    _add_game_args(p)
    p.add_argument("--json", help="write certificates here")
    p.set_defaults(func=cmd_nash)

    p = sub.add_parser("shapley", help="print Shapley triangle vertices")
    _add_game_args(p)
    p.add_argument("--face", type=int, nargs=3, help="1-based strategy indices")
    p.set_defaults(func=cmd_shapley)

    p = sub.add_parser("run", help="run a named experiment batch")
    p.add_argument("experiment", nargs="?", choices=sorted(DEFAULTS))
    p.add_argument("--config", help="JSON config; flags override it")
    p.add_argument("--count", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--T", type=float)
    p.add_argument("--eps", type=_frac)
    p.add_argument("--delta", type=_frac)
    p.add_argument("--alpha", type=_frac)
    p.add_argument("--beta", type=_frac)
    p.add_argument("--runs-per-game", dest="runs_per_game", type=int)
    p.add_argument("--rtol", type=float)
    p.add_argument("--atol", type=float)
    p.add_argument("--policy", choices=["dominance", "fail"])
    p.add_argument("--out", dest="out_dir")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("decompose-check", help="rescaled-time face flow check for game77")
    p.add_argument("--eps", type=_frac, default=Fraction(1, 50))
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--T", type=float, default=50.0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_decompose_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
