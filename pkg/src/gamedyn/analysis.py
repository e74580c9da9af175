"""Convergence verdicts and observables for replicator and best-reply runs."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .best_reply import BRSolution, ShapleyTriangleGeom, shapley_triangle
from .game import SymmetricGame, as_exact_point, is_exact, payoff_vector
from .replicator import FACE_123, FACE_567, Trajectory, _logsumexp, log_ratio_rates

GEOMETRIC_TOL = 1e-8
ELIMINATION_THRESHOLD = 1e-12
ELIMINATION_WINDOW = 20.0
CYCLE_TOL = 1e-3
DENSE_NODES = 4  # interior dense-output samples per step for window checks

VERDICTS = ("converged_to_ST", "converged_to_cycle", "converged_to_equilibrium", "eliminated", "consistent", "inconclusive")


def distance_to_shapley(g: SymmetricGame, geom: ShapleyTriangleGeom, x):
    """``max(mass off the face, |max_face (Ux)_i - sum_face a_k x_k|)``; zero on the triangle."""
    f = geom.face
    p = payoff_vector(g, x)
    if is_exact(x):
        x = as_exact_point(x)
        off = 1 - sum(x[k] for k in f)
        level = sum(a * x[k] for a, k in zip(geom.coeffs, f))
        return max(off, abs(max(p[i] for i in f) - level))
    x = np.asarray(x, dtype=float)
    off = 1.0 - float(sum(x[k] for k in f))
    level = sum(float(a) * x[k] for a, k in zip(geom.coeffs, f))
    return max(off, abs(float(max(p[i] for i in f)) - level))


def cycle_proximity(x, face: Sequence[int]) -> float:
    """Zero exactly on the heteroclinic cycle bounding ``face``."""
    if len(face) != 3:
        raise ValueError("face must have three strategies")
    x = np.asarray([float(v) for v in x])
    mass = float(sum(x[k] for k in face))
    if mass <= 0:
        return 1.0
    return max(1.0 - mass, min(x[k] for k in face) / mass)


def _window_log_shares(traj: Trajectory, start: float) -> np.ndarray:
    """Log shares at step nodes and dense interior nodes inside ``[start, end]``."""
    t = traj.times
    k0 = max(0, int(np.searchsorted(t, start, side="right")) - 1)
    nodes = [np.array([start])]
    for k in range(k0, len(t) - 1):
        lo, hi = max(t[k], start), t[k + 1]
        nodes.append(np.linspace(lo, hi, DENSE_NODES + 2))
    return traj.log_sample(np.clip(np.concatenate(nodes), 0.0, traj.end_time))


def _br_window_values(sol: BRSolution, start: float) -> np.ndarray:
    """States at segment endpoints inside the window; shares are monotone along chords."""
    end = sol.end_time
    times = [start, end] + [s.t_start for s in sol.segments if start < s.t_start < end]
    return sol.sample(sorted(times))


def elimination_check(run, strategies: Iterable[int], threshold: float, window: float) -> bool:
    """Each strategy stays below ``threshold`` over the last ``window`` and ends below ``threshold/10``."""
    strategies = list(strategies)
    end = run.end_time
    if end < window:
        raise ValueError("run is shorter than the window")
    start = end - window
    if isinstance(run, Trajectory):
        logs = _window_log_shares(run, start)[:, strategies]
        log_final = run.log_sample(end)[0, strategies]
        return bool(np.all(logs < math.log(threshold)) and np.all(log_final < math.log(threshold / 10)))
    xs = _br_window_values(run, start)[:, strategies]
    final = run.state_at(end)[strategies]
    return bool(np.all(xs < threshold) and np.all(final < threshold / 10))


def claim_integrals(traj: Trajectory, times=None) -> dict:
    """Series behind the elimination argument for the 7x7 replicator.

    ``I`` is the integral of ``4 x3 - 3 lambda``; ``rate_*_closed`` are the
    closed-form derivatives of the two log ratios.
    """
    if traj.game.n != 7:
        raise ValueError("claim_integrals expects a 7-strategy trajectory")
    ts = traj.times if times is None else np.asarray(times, dtype=float)
    ints = np.array([traj.integral(t) for t in ts])
    lam_int = ints[:, list(FACE_123)].sum(axis=1)
    mu_int = ints[:, list(FACE_567)].sum(axis=1)
    logs = traj.log_sample(ts)
    log_lam = _logsumexp(logs[:, list(FACE_123)])
    log_mu = _logsumexp(logs[:, list(FACE_567)])
    xs = np.exp(logs)
    rates = np.array([log_ratio_rates(traj.game, x) for x in xs])
    return {
        "t": ts,
        "I": 4 * ints[:, 2] - 3 * lam_int,
        "ln_x4_over_lambda": logs[:, 3] - log_lam,
        "ln_mu_over_lambda": log_mu - log_lam,
        "tau_bar": lam_int,
        "tau_hat": mu_int,
        "rate_x4_lambda_closed": rates[:, 0],
        "rate_mu_lambda_closed": rates[:, 1],
    }


@dataclass(frozen=True)
class RunTarget:
    """What a run is expected to do: settle on ``face`` and drop ``eliminate``."""

    face: tuple[int, ...]
    kind: str = "shapley"  # shapley | cycle | equilibrium
    eliminate: tuple[int, ...] = ()
    geometric_tol: float = GEOMETRIC_TOL
    elimination_threshold: float = ELIMINATION_THRESHOLD
    window: float = ELIMINATION_WINDOW
    cycle_tol: float = CYCLE_TOL

    @property
    def label(self) -> str:
        tag = "".join(str(i + 1) for i in self.face)
        return {"shapley": f"ST{tag}", "cycle": f"Gamma{tag}", "equilibrium": "equilibrium"}[self.kind]


@dataclass
class ConvergenceReport:
    verdict: str
    target: str
    eliminated: tuple[int, ...] = ()
    metrics: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        if self.verdict in ("converged_to_ST", "converged_to_cycle"):
            return f"{self.verdict}({self.target})"
        if self.verdict == "eliminated":
            return f"eliminated({','.join(str(i + 1) for i in self.eliminated)})"
        return self.verdict

    def to_json(self) -> dict:
        return asdict(self) | {"label": self.label}


def write_reports(path, reports: Sequence[ConvergenceReport]):
    with open(path, "w") as fh:
        for r in reports:
            fh.write(json.dumps(r.to_json(), default=_json_default) + "\n")


def _json_default(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    raise TypeError(type(v))


def lock_in_time(sol: BRSolution, face: Sequence[int]) -> float:
    """Start of the last stretch of segments all aimed at ``face``."""
    face = set(face)
    t = math.nan
    for seg in reversed(sol.segments):
        if seg.target not in face:
            break
        t = seg.t_start
    return t


def _classify_br(g, sol: BRSolution, target: RunTarget) -> ConvergenceReport:
    m = {"termination": sol.termination, "events": len(sol.events), "end_time": sol.end_time}
    if target.kind == "equilibrium":
        verdict = "converged_to_equilibrium" if sol.termination == "equilibrium" else "inconclusive"
        return ConvergenceReport(verdict, target.label, (), m)
    geom = shapley_triangle(None, target.face, g)
    states = sol.event_states()[-3:]
    if len(states) == 3:
        d = max(
            min(max(abs(float(a - b)) for a, b in zip(x, v)) for v in geom.vertices)
            for x in states
        )
        m["event_vertex_distance"] = d
        m["distance_to_shapley"] = float(distance_to_shapley(g, geom, states[-1]))
    else:
        d = math.inf
        m["event_vertex_distance"] = d
    m["lock_in_time"] = lock_in_time(sol, target.face)
    elim = ()
    if target.eliminate and sol.end_time >= target.window:
        if elimination_check(sol, target.eliminate, target.elimination_threshold, target.window):
            elim = target.eliminate
    m["eliminated_ok"] = elim == target.eliminate
    if sol.termination == "horizon" and d < target.geometric_tol and m["eliminated_ok"]:
        verdict = "converged_to_ST"
    elif target.eliminate and elim:
        verdict = "eliminated"
    else:
        verdict = "inconclusive"
    return ConvergenceReport(verdict, target.label, elim, m)


def _classify_rep(g, traj: Trajectory, target: RunTarget) -> ConvergenceReport:
    x = traj.final_state
    m = {"end_time": traj.end_time, "steps": len(traj.times) - 1}
    m["cycle_proximity"] = cycle_proximity(x, target.face)
    if g.n == 7:
        m["final_lambda"] = float(x[list(FACE_123)].sum())
        m["final_mu"] = float(x[list(FACE_567)].sum())
        m["final_x4"] = float(x[3])
    m["final_max_face_payoff"] = float(max((g.U @ x)[list(target.face)]))
    m["final_min_log_share"] = float(traj.log_sample(traj.end_time)[0].min())
    elim = ()
    if target.eliminate and traj.end_time >= target.window:
        if elimination_check(traj, target.eliminate, target.elimination_threshold, target.window):
            elim = target.eliminate
    m["eliminated_ok"] = elim == target.eliminate
    if m["cycle_proximity"] < target.cycle_tol and m["eliminated_ok"]:
        verdict = "converged_to_cycle"
    elif target.eliminate and elim:
        verdict = "eliminated"
    else:
        verdict = "inconclusive"
    return ConvergenceReport(verdict, target.label, elim, m)


def classify_run(g: SymmetricGame, run, target: RunTarget, metadata: dict | None = None) -> ConvergenceReport:
    """Apply the threshold battery to a finished run; deterministic in the run data."""
    if isinstance(run, BRSolution):
        rep = _classify_br(g, run, target)
    elif isinstance(run, Trajectory):
        rep = _classify_rep(g, run, target)
    else:
        raise TypeError("run must be a Trajectory or a BRSolution")
    rep.metadata = dict(metadata or {}) | {
        "geometric_tol": target.geometric_tol,
        "elimination_threshold": target.elimination_threshold,
        "window": target.window,
        "cycle_tol": target.cycle_tol,
    }
    return rep


def summarize(reports: Sequence[ConvergenceReport]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for r in reports:
        counts[r.label] = counts.get(r.label, 0) + 1
    return counts


def time_average_sweep(traj: Trajectory, point, times) -> float:
    """Smallest sup-norm distance from the time average to ``point`` over ``times``."""
    point = np.asarray([float(v) for v in point])
    return float(min(np.abs(traj.time_average(t) - point).max() for t in times if t > 0))


def record_episodes(values: np.ndarray, times: np.ndarray) -> list[float]:
    """Start times of the stretches during which ``values`` sets new running maxima.

    A record is a sample strictly above every earlier sample; consecutive
    record samples form one episode.
    """
    starts = []
    best = values[0]
    prev_record = False
    for t, v in zip(times[1:], values[1:]):
        is_record = v > best
        if is_record:
            best = v
            if not prev_record:
                starts.append(float(t))
        prev_record = is_record
    return starts


def running_integral(traj: Trajectory, weights, const: float, times) -> np.ndarray:
    """``int_0^t (weights . x + const) ds`` at ``times``."""
    w = np.asarray(weights, dtype=float)
    return np.array([traj.integral(t) @ w + const * t for t in times])
