"""Named, seeded experiment batches."""

from __future__ import annotations

import dataclasses
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from .analysis import ConvergenceReport, RunTarget, classify_run, summarize, write_reports
from .best_reply import br_decomposition_check, integrate_br
from .equilibria import enumerate_nash
from .exact import as_fraction
from .game import RPSSpec, build_game_66, build_game_77, build_rps, is_outward_cycling, random_perturbation
from .replicator import FACE_123, FACE_567, integrate_rep, verify_rescale_lemma

THREADS_ENV = "GAMEDYN_THREADS"
BARYCENTER_EXCLUSION = 1e-6
CSV_SAMPLES = 2001

DEFAULTS = {
    "br66": {"T": 60.0},
    "rep77": {"T": 3000.0, "eps": "1/50"},
    "br77": {"T": 200.0, "eps": "1/10"},
    "rps-br": {"T": 40.0, "alpha": "3", "beta": "1"},
    "rps-rep": {"T": 5000.0, "eps": "1/5"},
    "rescale-check": {"T": 50.0, "eps": "1/50", "count": 10},
    "perturb66": {"T": 60.0, "delta": "1/100", "runs_per_game": 20},
}


@dataclass
class ExperimentConfig:
    experiment: str
    count: int = 20
    seed: int = 7
    T: float | None = None
    eps: str | None = None
    delta: str | None = None
    alpha: str | None = None
    beta: str | None = None
    runs_per_game: int = 20
    rtol: float = 1e-9
    atol: float = 1e-12
    policy: str = "dominance"
    out_dir: str | None = None

    def resolved(self) -> "ExperimentConfig":
        if self.experiment not in DEFAULTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {sorted(DEFAULTS)}")
        base = DEFAULTS[self.experiment]
        updates = {k: v for k, v in base.items() if getattr(self, k) is None}
        return dataclasses.replace(self, **updates)

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_json(cls, doc: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)


@dataclass
class RunRecord:
    index: int
    passed: bool
    flagged: bool
    report: ConvergenceReport
    x0: list = field(default_factory=list)


@dataclass
class BatchResult:
    config: ExperimentConfig
    records: list[RunRecord]

    @property
    def failures(self) -> list[RunRecord]:
        return [r for r in self.records if not r.flagged and not r.passed]

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> dict[str, int]:
        return summarize([r.report for r in self.records])


# ---------------------------------------------------------------------------
# initial conditions


def uniform_simplex(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform point on the simplex from normalised exponential spacings."""
    e = rng.exponential(size=n)
    return e / e.sum()


def _near_face_barycenter(x: np.ndarray, face) -> bool:
    w = x[list(face)]
    return bool(np.abs(w / w.sum() - 1 / 3).max() < BARYCENTER_EXCLUSION)


def valid_start_77(rng: np.random.Generator) -> np.ndarray:
    """Uniform interior start of the 7x7 game with both face shares off their barycenters."""
    while True:
        x = uniform_simplex(rng, 7)
        if not (_near_face_barycenter(x, FACE_123) or _near_face_barycenter(x, FACE_567)):
            return x


def exact_fraction_point(x: np.ndarray) -> tuple[Fraction, ...]:
    """The float point as exact binary rationals, renormalised to sum exactly to 1."""
    fr = [Fraction(float(v)) for v in x]
    s = sum(fr)
    return tuple(v / s for v in fr)


# ---------------------------------------------------------------------------
# single runs (module level so they pickle)


def _br_run(args) -> RunRecord:
    k, g, x0, T, policy, target, extra, out = args
    sol = integrate_br(g, x0, T, policy=policy)
    if out:
        Path(out, f"run_{k:03d}.json").write_text(json.dumps(sol.to_json()) + "\n")
    rep = classify_run(g, sol, target, {"run": k})
    flagged = sol.termination == "non_unique_continuation"
    if extra == "br77":
        dec = br_decomposition_check(g, sol)
        rep.metrics["decomposition_violations"] = len(dec.violations)
        touched = [t for t, old, new in sol.events if set(new) & set(FACE_123)]
        rep.metrics["exit_time"] = max(touched, default=0.0)
        if dec.violations:
            rep.verdict = "inconclusive"
    passed = rep.verdict == ("converged_to_equilibrium" if target.kind == "equilibrium" else "converged_to_ST")
    return RunRecord(k, passed, flagged, rep, [float(v) for v in x0])


def _rep_run(args) -> RunRecord:
    k, g, x0, T, rtol, atol, target, out = args
    try:
        traj = integrate_rep(g, x0, T, rtol=rtol, atol=atol)
    except Exception as exc:  # recorded, not raised
        rep = ConvergenceReport("inconclusive", target.label, (), {"error": str(exc)}, {"run": k})
        return RunRecord(k, False, False, rep, [float(v) for v in x0])
    if out:
        traj.to_csv(Path(out, f"run_{k:03d}.csv"), np.linspace(0.0, T, CSV_SAMPLES))
    rep = classify_run(g, traj, target, {"run": k})
    return RunRecord(k, rep.verdict == "converged_to_cycle", False, rep, [float(v) for v in x0])


def _rescale_run(args) -> RunRecord:
    k, g, x0, T, rtol, atol = args
    r = verify_rescale_lemma(g, x0, T, rtol=min(rtol, 1e-10), atol=atol)
    ok = r.bar_discrepancy < 1e-6 and r.hat_discrepancy < 1e-6
    rep = ConvergenceReport(
        "consistent" if ok else "inconclusive",
        "rescaled-face-flow",
        (),
        {"bar_discrepancy": r.bar_discrepancy, "hat_discrepancy": r.hat_discrepancy},
        {"run": k},
    )
    return RunRecord(k, ok, False, rep, [float(v) for v in x0])


def _perturb_run(args) -> RunRecord:
    k, g, starts, T, policy = args
    certs = enumerate_nash(g)
    unique = len(certs) == 1
    support_ok = unique and set(certs[0].support_x) <= set(FACE_123)
    target = RunTarget((3, 4, 5), "shapley", (0, 1, 2))
    converged = 0
    for x0 in starts:
        sol = integrate_br(g, x0, T, policy=policy)
        converged += classify_run(g, sol, target).verdict == "converged_to_ST"
    ok = unique and support_ok and converged == len(starts)
    metrics = {
        "equilibria": len(certs),
        "support": list(certs[0].support_x) if unique else None,
        "br_converged": converged,
        "br_runs": len(starts),
    }
    rep = ConvergenceReport("converged_to_ST" if ok else "inconclusive", target.label, (), metrics, {"run": k})
    return RunRecord(k, ok, False, rep)


def _map(fn: Callable, jobs: list):
    threads = int(os.environ.get(THREADS_ENV, "1"))
    if threads <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs))


# ---------------------------------------------------------------------------
# batches


def run_experiment(cfg: ExperimentConfig) -> BatchResult:
    cfg = cfg.resolved()
    rng = np.random.default_rng(cfg.seed)
    name, T = cfg.experiment, float(cfg.T)
    out = None
    if cfg.out_dir:
        out = str(Path(cfg.out_dir) / name)
        Path(out).mkdir(parents=True, exist_ok=True)
    if name == "br66":
        g = build_game_66()
        target = RunTarget((3, 4, 5), "shapley", (0, 1, 2))
        jobs = [(k, g, exact_fraction_point(uniform_simplex(rng, 6)), T, cfg.policy, target, None, out) for k in range(cfg.count)]
        records = _map(_br_run, jobs)
    elif name == "br77":
        g = build_game_77(as_fraction(cfg.eps))
        target = RunTarget((4, 5, 6), "shapley", (0, 1, 2, 3))
        jobs = [(k, g, exact_fraction_point(valid_start_77(rng)), T, cfg.policy, target, "br77", out) for k in range(cfg.count)]
        records = _map(_br_run, jobs)
    elif name == "rps-br":
        spec = RPSSpec.cyclic(as_fraction(cfg.alpha), as_fraction(cfg.beta))
        g = build_rps(spec)
        kind = "shapley" if is_outward_cycling(spec) else "equilibrium"
        target = RunTarget((0, 1, 2), kind)
        jobs = [(k, g, exact_fraction_point(uniform_simplex(rng, 3)), T, cfg.policy, target, None, out) for k in range(cfg.count)]
        records = _map(_br_run, jobs)
    elif name == "rep77":
        g = build_game_77(as_fraction(cfg.eps))
        target = RunTarget((4, 5, 6), "cycle", (0, 1, 2, 3), elimination_threshold=1e-3, window=200.0)
        jobs = [(k, g, valid_start_77(rng), T, cfg.rtol, cfg.atol, target, out) for k in range(cfg.count)]
        records = _map(_rep_run, jobs)
    elif name == "rps-rep":
        g = build_rps(RPSSpec.epsilon(as_fraction(cfg.eps)))
        target = RunTarget((0, 1, 2), "cycle", window=min(200.0, T), cycle_tol=1e-6)
        jobs = []
        while len(jobs) < cfg.count:
            x = uniform_simplex(rng, 3)
            if np.abs(x - 1 / 3).max() >= BARYCENTER_EXCLUSION:
                jobs.append((len(jobs), g, x, T, cfg.rtol, cfg.atol, target, out))
        records = _map(_rep_run, jobs)
    elif name == "rescale-check":
        g = build_game_77(as_fraction(cfg.eps))
        jobs = [(k, g, uniform_simplex(rng, 7), T, cfg.rtol, cfg.atol) for k in range(cfg.count)]
        records = _map(_rescale_run, jobs)
    elif name == "perturb66":
        base = build_game_66()
        delta = as_fraction(cfg.delta)
        jobs = []
        for k in range(cfg.count):
            gp = random_perturbation(base, delta, rng)
            starts = [exact_fraction_point(uniform_simplex(rng, 6)) for _ in range(cfg.runs_per_game)]
            jobs.append((k, gp, starts, T, cfg.policy))
        records = _map(_perturb_run, jobs)
    else:  # pragma: no cover - resolved() rejects unknown names
        raise ValueError(name)
    for r in records:
        r.report.metadata["config"] = cfg.to_json()
    result = BatchResult(cfg, records)
    if cfg.out_dir:
        export(result)
    return result


def export(result: BatchResult):
    out = Path(result.config.out_dir) / result.config.experiment
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(result.config.to_json(), indent=2) + "\n")
    write_reports(out / "reports.jsonl", [r.report for r in result.records])
    (out / "summary.json").write_text(json.dumps(result.summary(), indent=2) + "\n")
    (out / "starts.json").write_text(json.dumps([{"run": r.index, "x0": r.x0} for r in result.records]) + "\n")
