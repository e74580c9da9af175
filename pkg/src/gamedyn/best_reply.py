"""Best-reply dynamics as an exact event-driven flow.

While strategy ``i`` is the unique best reply the solution is the chord
``x(t) = e_i + (x0 - e_i) w`` with ``w = exp(-(t - t0))``. Payoff gaps are
affine in ``w``, so the weight at which another strategy ties is rational
and event states are computed exactly. Elapsed time is the float sum of
``-ln w`` over segments.

Internally states are integer numerator vectors over a common denominator
and payoffs are scaled to integers, so event finding is pure integer
arithmetic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

import numpy as np

from .exact import as_fraction, integer_matrix, solve_unique
from .game import (
    RPSSpec,
    SymmetricGame,
    as_exact_point,
    build_rps,
    is_exact,
    is_outward_cycling,
    normalize_to_epsilon,
    payoff_vector,
    rps_spec_from_matrix,
)

NON_UNIQUE = "non_unique"
FLOAT_TIE_TOL = 1e-12

ACCUMULATION_GAP = 1e-12
EQUILIBRIUM_TOL = 1e-9


class ImprovementPrincipleViolation(AssertionError):
    pass


class BRPreconditionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# best replies


def pure_best_replies(g: SymmetricGame, x, tol: float = FLOAT_TIE_TOL) -> tuple[int, ...]:
    """Pure best replies to ``x``; exact ties for rational points.

    Float points use a tie tolerance of ``tol`` times the payoff scale.
    """
    p = payoff_vector(g, x)
    if is_exact(x):
        m = max(p)
        return tuple(i for i, v in enumerate(p) if v == m)
    scale = max(1.0, float(np.abs(g.U).max()))
    m = p.max()
    return tuple(int(i) for i in np.flatnonzero(p >= m - tol * scale))


def strictly_dominates_pair(g: SymmetricGame, j: int, i: int) -> bool:
    """In the 2x2 game on ``{i, j}``, ``j`` strictly dominates ``i``."""
    U = g.payoff
    return U[j][i] > U[i][i] and U[j][j] > U[i][j]


def resolve_tie(g: SymmetricGame, x, tied: Iterable[int], policy: str = "dominance"):
    """Pick the continuation target at a tie, or return ``NON_UNIQUE``.

    ``dominance``: a pairwise tie where one strategy strictly dominates the
    other in the restricted 2x2 game resolves to the dominant strategy (the
    dominated one drops out immediately whichever is aimed at). Anything
    else is ``NON_UNIQUE``. ``fail``: every tie is ``NON_UNIQUE``.
    """
    tied = tuple(sorted(set(tied)))
    if len(tied) == 1:
        return tied[0]
    if policy == "fail" or len(tied) != 2:
        return NON_UNIQUE
    if policy != "dominance":
        raise ValueError(f"unknown tie policy {policy!r}")
    a, b = tied
    if strictly_dominates_pair(g, b, a):
        return b
    if strictly_dominates_pair(g, a, b):
        return a
    return NON_UNIQUE


# ---------------------------------------------------------------------------
# integer kernels


class _IntGame:
    """Payoffs scaled to integers, with the column differences used by events."""

    def __init__(self, g: SymmetricGame):
        self.n = g.n
        self.M, self.L = integer_matrix(g.payoff)
        self.rows = [list(r) for r in self.M]

    def payoffs(self, p: Sequence[int]) -> list[int]:
        return [sum(m * v for m, v in zip(row, p) if v) for row in self.rows]


def _to_int_state(x: Sequence[Fraction]) -> tuple[list[int], int]:
    d = 1
    for v in x:
        d = d * v.denominator // gcd(d, v.denominator)
    return [int(v * d) for v in x], d


def _reduce(p: list[int], d: int) -> tuple[list[int], int]:
    g = d
    for v in p:
        g = gcd(g, v)
        if g == 1:
            return p, d
    return [v // g for v in p], d // g


def _next_event_int(ig: _IntGame, p: list[int], d: int, i: int):
    """Earliest tie along the chord towards ``e_i`` from ``p/d``.

    Returns ``None`` or ``(n, m, tied)``: the tie happens at weight
    ``w = n/m`` and ``tied`` lists every strategy reaching the tie then.
    """
    Mp = ig.payoffs(p)
    Mi = ig.M
    best = None
    tied: list[int] = []
    for j in range(ig.n):
        if j == i:
            continue
        a = Mp[j] - Mp[i]
        b = Mi[j][i] - Mi[i][i]
        if a > 0:
            raise BRPreconditionError(f"strategy {i} is not a best reply at the segment start")
        if a == 0 and b >= 0:
            raise BRPreconditionError(f"strategy {j} stays a best reply along the chord to {i}")
        if b <= 0:
            continue
        num, den = b * d, b * d - a
        if best is None or num * best[1] > best[0] * den:
            best = (num, den)
            tied = [j]
        elif num * best[1] == best[0] * den:
            tied.append(j)
    if best is None:
        return None
    return best[0], best[1], tied


# ---------------------------------------------------------------------------
# solution objects


@dataclass(frozen=True)
class BRSegment:
    t_start: float
    duration: float
    start_state: tuple[Fraction, ...]
    target: int
    end_reason: str  # tie_event | horizon | equilibrium_reached | non_unique
    tied: tuple[int, ...] = ()
    end_weight: Fraction | None = None

    def state_at(self, t: float) -> np.ndarray:
        """Float state at absolute time ``t`` within this segment."""
        w = math.exp(-(t - self.t_start))
        x = np.array([float(v) for v in self.start_state]) * w
        x[self.target] += 1.0 - w
        return x

    def exact_state_at_weight(self, w: Fraction) -> tuple[Fraction, ...]:
        one_minus = 1 - w
        return tuple(v * w + (one_minus if k == self.target else 0) for k, v in enumerate(self.start_state))


@dataclass
class BRSolution:
    game: SymmetricGame
    segments: list[BRSegment]
    events: list[tuple[float, tuple[int, ...], tuple[int, ...]]]
    termination: str  # horizon | non_unique_continuation | equilibrium
    horizon: float
    final_state: tuple[Fraction, ...] | None = None
    final_tie: tuple[int, ...] = ()
    policy: str = "dominance"

    @property
    def targets(self) -> list[int]:
        return [s.target for s in self.segments]

    @property
    def end_time(self) -> float:
        last = self.segments[-1] if self.segments else None
        if last is None:
            return 0.0
        return min(self.horizon, last.t_start + last.duration)

    @property
    def event_times(self) -> list[float]:
        return [e[0] for e in self.events]

    def event_states(self) -> list[tuple[Fraction, ...]]:
        """Exact states at tie events, in order."""
        return [s.start_state for s in self.segments[1:]]

    def state_at(self, t: float) -> np.ndarray:
        if not self.segments:
            return np.array([float(v) for v in self.final_state])
        if t < 0 or t > self.end_time * (1 + 1e-12):
            raise ValueError("time outside the solution")
        starts = [s.t_start for s in self.segments]
        k = max(0, np.searchsorted(starts, t, side="right") - 1)
        return self.segments[k].state_at(t)

    def sample(self, times) -> np.ndarray:
        return np.array([self.state_at(t) for t in times])

    def to_json(self) -> dict:
        def frac(v):
            return [v.numerator, v.denominator]

        return {
            "segments": [
                {
                    "t_start": s.t_start,
                    "duration": s.duration if math.isfinite(s.duration) else "inf",
                    "target": s.target,
                    "state": [frac(v) for v in s.start_state],
                    "end_reason": s.end_reason,
                    "tied": list(s.tied),
                }
                for s in self.segments
            ],
            "events": [{"t": t, "old": list(a), "new": list(b)} for t, a, b in self.events],
            "termination": self.termination,
            "horizon": self.horizon,
            "final_tie": list(self.final_tie),
        }

    def to_csv(self, path, times: Sequence[float]):
        xs = self.sample(times)
        with open(path, "w") as fh:
            fh.write(",".join(["t"] + [f"x{i + 1}" for i in range(self.game.n)]) + "\n")
            for t, x in zip(times, xs):
                fh.write(",".join([repr(float(t))] + [repr(float(v)) for v in x]) + "\n")


def next_event(g: SymmetricGame, seg: BRSegment):
    """Earliest tie along ``seg``: ``(duration, weight, tied)`` or ``None``.

    Only strategies ``j`` with ``u_ji > u_ii`` can tie (improvement principle);
    the tie weight ``exp(-duration)`` is exact.
    """
    ig = _IntGame(g)
    p, d = _to_int_state(as_exact_point(seg.start_state))
    ev = _next_event_int(ig, p, d, seg.target)
    if ev is None:
        return None
    num, den, tied = ev
    w = Fraction(num, den)
    return _duration(num, den), w, tuple(tied)


def _duration(num: int, den: int) -> float:
    # -ln(num/den) = log1p((den - num)/num)
    return math.log1p(Fraction(den - num, num))


def _symmetric_equilibria(g: SymmetricGame):
    from .equilibria import enumerate_nash

    return [np.array([float(v) for v in c.x]) for c in enumerate_nash(g) if c.symmetric]


def exact_start(x0) -> tuple[Fraction, ...]:
    """Exact version of ``x0``; floats are converted exactly and renormalised."""
    x = as_exact_point(x0)
    if any(v < 0 for v in x):
        raise ValueError("negative share in x0")
    s = sum(x)
    if s != 1:
        if not isinstance(x0, np.ndarray) and all(isinstance(v, Fraction) for v in x0):
            raise ValueError("exact x0 must sum to 1")
        x = tuple(v / s for v in x)
    return x


def integrate_br(
    g: SymmetricGame,
    x0,
    T: float,
    policy: str = "dominance",
    accumulation_gap: float = ACCUMULATION_GAP,
    equilibrium_tol: float = EQUILIBRIUM_TOL,
    max_events: int = 100_000,
) -> BRSolution:
    """Event-driven best-reply solution from ``x0`` up to time ``T``."""
    if T <= 0:
        raise ValueError("T must be positive")
    x = exact_start(x0)
    if len(x) != g.n:
        raise ValueError("dimension mismatch")
    ig = _IntGame(g)
    U = g.payoff
    p, d = _reduce(*_to_int_state(x))
    br = pure_best_replies(g, x)
    target = resolve_tie(g, x, br, policy)
    segments: list[BRSegment] = []
    events = []
    if target == NON_UNIQUE:
        return BRSolution(g, segments, events, "non_unique_continuation", T, x, br, policy)
    t = 0.0
    equilibria = None
    while True:
        if len(segments) >= max_events:
            raise RuntimeError(f"more than {max_events} events before t={t}")
        state = tuple(Fraction(v, d) for v in p)
        ev = _next_event_int(ig, p, d, target)
        if ev is None:
            segments.append(BRSegment(t, math.inf, state, target, "horizon"))
            return BRSolution(g, segments, events, "horizon", T, None, (), policy)
        num, den, tied = ev
        dt = _duration(num, den)
        if t + dt >= T:
            segments.append(BRSegment(t, T - t, state, target, "horizon"))
            return BRSolution(g, segments, events, "horizon", T, None, (), policy)
        w = Fraction(num, den)
        segments.append(BRSegment(t, dt, state, target, "tie_event", tuple(tied), w))
        # chord end at w = num/den: x w + (1 - w) e_i
        new_p = [v * num for v in p]
        new_p[target] += (den - num) * d
        p, d = _reduce(new_p, den * d)
        t += dt
        new_set = tuple(sorted(set(tied) | {target}))
        events.append((t, (target,), new_set))
        for j in tied:
            if not U[j][target] > U[target][target]:
                raise ImprovementPrincipleViolation(f"transition {target}->{j} without u_ji > u_ii")
        state = tuple(Fraction(v, d) for v in p)
        nxt = resolve_tie(g, state, new_set, policy)
        if nxt == NON_UNIQUE:
            return BRSolution(g, segments, events, "non_unique_continuation", T, state, new_set, policy)
        if nxt != target and not U[nxt][target] > U[target][target]:
            raise ImprovementPrincipleViolation(f"transition {target}->{nxt} without u_ji > u_ii")
        if dt < accumulation_gap:
            if equilibria is None:
                equilibria = _symmetric_equilibria(g)
            xf = np.array([float(v) for v in state])
            if any(np.abs(xf - e).max() < equilibrium_tol for e in equilibria):
                segments.append(BRSegment(t, 0.0, state, nxt, "equilibrium_reached"))
                return BRSolution(g, segments, events, "equilibrium", T, state, (), policy)
        target = nxt


# ---------------------------------------------------------------------------
# Shapley triangles


@dataclass(frozen=True)
class ShapleyTriangleGeom:
    face: tuple[int, ...]
    vertices: tuple[tuple[Fraction, ...], ...]
    coeffs: tuple[Fraction, ...]
    n: int

    def to_json(self) -> dict:
        return {
            "face": list(self.face),
            "vertices": [[[v.numerator, v.denominator] for v in x] for x in self.vertices],
            "coeffs": [[v.numerator, v.denominator] for v in self.coeffs],
        }


def _embed(n: int, face: Sequence[int], local: Sequence[Fraction]) -> tuple[Fraction, ...]:
    x = [Fraction(0)] * n
    for k, v in zip(face, local):
        x[k] = v
    return tuple(x)


def _triangle_vertices_general(block: Sequence[Sequence[Fraction]]) -> list[tuple[Fraction, ...]]:
    a = [block[k][k] for k in range(3)]
    out = []
    for i, j in ((0, 1), (1, 2), (2, 0)):
        eq1 = [block[i][m] - block[j][m] for m in range(3)]
        eq2 = [block[i][m] - a[m] for m in range(3)]
        sol = solve_unique([eq1, eq2, [1, 1, 1]], [0, 0, 1])
        if sol is None:
            raise ValueError("degenerate Shapley triangle")
        k = 3 - i - j
        pay = [sum(block[r][m] * sol[m] for m in range(3)) for r in range(3)]
        if any(v < 0 for v in sol) or pay[k] > pay[i]:
            raise ValueError("Shapley triangle vertex outside the face")
        out.append(sol)
    return out


def shapley_triangle(spec: RPSSpec | None, face: Sequence[int] = (0, 1, 2), g_host: SymmetricGame | None = None) -> ShapleyTriangleGeom:
    """Vertices of the Shapley triangle of an outward RPS face.

    With ``spec=None`` the RPS parameters are read from the host's face
    block. Epsilon and cyclic forms use the closed-form vertex
    ``(eps^2, eps, 1) / (1 + eps + eps^2)`` and its cyclic shifts; general
    forms solve the two-tie linear systems exactly. When a host game is
    given, its face block must be a positive multiple of ``build_rps(spec)``.
    """
    face = tuple(face)
    if len(face) != 3:
        raise ValueError("a Shapley triangle lives on a 3-strategy face")
    n = g_host.n if g_host is not None else max(max(face) + 1, 3)
    if spec is None:
        if g_host is None:
            raise ValueError("need a spec or a host game")
        spec = rps_spec_from_matrix(g_host.restrict(face).payoff)
    if not is_outward_cycling(spec):
        raise ValueError("Shapley triangle is degenerate or empty for this RPS game")
    ref = build_rps(spec).payoff
    if g_host is not None:
        block = g_host.restrict(face).payoff
        scale = block[1][0] / ref[1][0]
        if scale <= 0 or any(block[r][c] != scale * ref[r][c] for r in range(3) for c in range(3)):
            raise ValueError("host face block does not match the RPS spec")
    if spec.form in ("cyclic", "epsilon"):
        (eps,) = normalize_to_epsilon(spec).params
        z = 1 + eps + eps * eps
        q = (eps * eps / z, eps / z, 1 / z)
        local = [(q[1], q[2], q[0]), (q[2], q[0], q[1]), q]
    else:
        local = _triangle_vertices_general(ref)
    a = tuple(ref[k][k] for k in range(3))
    if g_host is not None:
        a = tuple(g_host.payoff[k][k] for k in face)
    return ShapleyTriangleGeom(face, tuple(_embed(n, face, v) for v in local), a, n)


def v_value(g: SymmetricGame, geom: ShapleyTriangleGeom, x):
    """``max_{i in face} (Ux)_i - sum_{k in face} a_k x_k``."""
    p = payoff_vector(g, x)
    f = geom.face
    if is_exact(x):
        x = as_exact_point(x)
        return max(p[i] for i in f) - sum(geom.coeffs[m] * x[k] for m, k in enumerate(f))
    return float(max(p[i] for i in f) - sum(float(geom.coeffs[m]) * x[k] for m, k in enumerate(f)))


def gap_function_w(g: SymmetricGame, face: Sequence[int], x):
    """Largest payoff difference between two face strategies against ``x``."""
    if len(face) != 3:
        raise ValueError("face must have three strategies")
    p = payoff_vector(g, x)
    vals = [p[i] for i in face]
    return max(vals) - min(vals)


# ---------------------------------------------------------------------------
# 7x7 decomposition check


@dataclass
class DecompositionReport:
    checked: int = 0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _face_derivative(seg: BRSegment, face: Sequence[int], w: Fraction):
    """Exact ``(xbar, d xbar/dt, mass, d mass/dt)`` on ``face`` at chord weight ``w``."""
    x0 = [seg.start_state[k] for k in face]
    hit = [Fraction(int(k == seg.target)) for k in face]
    in_face = 1 if seg.target in face else 0
    N = [(1 - w) * h + w * v for h, v in zip(hit, x0)]
    dN = [v - h for h, v in zip(hit, x0)]
    lam = (1 - w) * in_face + w * sum(x0)
    dlam = sum(x0) - in_face
    xbar = [v / lam for v in N]
    # d/dt = -w d/dw
    dxbar = [-w * (dv * lam - v * dlam) / (lam * lam) for v, dv in zip(N, dN)]
    return xbar, dxbar, lam, -w * dlam


def br_decomposition_check(g77: SymmetricGame, sol: BRSolution, samples_per_segment: int = 3) -> DecompositionReport:
    """Check that face shares follow rescaled best-reply dynamics of the face games."""
    report = DecompositionReport()
    faces = ((0, 1, 2), (4, 5, 6))
    for seg in sol.segments:
        if seg.end_reason == "equilibrium_reached":
            continue
        w_end = seg.end_weight if seg.end_weight is not None else Fraction(1, 2)
        for k in range(1, samples_per_segment + 1):
            w = w_end + (1 - w_end) * Fraction(k, samples_per_segment + 1)
            t = seg.t_start - math.log(w)
            for face in faces:
                if sum(seg.start_state[i] for i in face) == 0:
                    continue
                xbar, dxbar, lam, dlam = _face_derivative(seg, face, w)
                mult = 1 + dlam / lam
                if seg.target in face:
                    local = face.index(seg.target)
                    bbar = [Fraction(int(m == local)) for m in range(3)]
                    expected = [mult * (b - v) for b, v in zip(bbar, xbar)]
                    sub = g77.restrict(face)
                    if local not in pure_best_replies(sub, tuple(xbar)):
                        report.violations.append((t, face, "target not a best reply of the face game"))
                    if mult < 0:
                        report.violations.append((t, face, "negative time change"))
                else:
                    expected = [Fraction(0)] * 3
                if dxbar != expected:
                    report.violations.append((t, face, "face shares leave the rescaled best-reply flow"))
                report.checked += 1
    return report
