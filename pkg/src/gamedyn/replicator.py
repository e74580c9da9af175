"""Replicator dynamics: vector fields, log-coordinate integration, observables.

Continuous-time runs are integrated in log coordinates ``l_i = ln x_i``
where ``dl_i/dt = (Ux)_i - x.Ux`` and ``x = softmax(l)``. Near heteroclinic
cycles shares reach ``exp(-500)`` and beyond; in log form they stay
representable and the interior stays interior. Log weights are shifted so
their maximum is zero after every accepted step.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .exact import as_fraction
from .game import SymmetricGame, as_exact_point, check_simplex, is_exact, payoff_vector
from .ode import IntegrationError, Solution, dopri5

SIMPSON_PANELS = 10
_SIMPSON_W = np.array([1] + [4, 2] * (SIMPSON_PANELS // 2 - 1) + [4, 1], dtype=float) / (3 * SIMPSON_PANELS)
_SIMPSON_S = np.linspace(0.0, 1.0, SIMPSON_PANELS + 1)

DEFAULT_MAX_STEP = 1.0

FACE_123 = (0, 1, 2)
FACE_567 = (4, 5, 6)


def _softmax(logw: np.ndarray, axis=-1) -> np.ndarray:
    z = np.exp(logw - logw.max(axis=axis, keepdims=True))
    return z / z.sum(axis=axis, keepdims=True)


def _logsumexp(logw: np.ndarray, axis=-1) -> np.ndarray:
    m = np.max(logw, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        return (np.log(np.exp(logw - m).sum(axis=axis, keepdims=True)) + m).squeeze(axis)


# ---------------------------------------------------------------------------
# vector fields and maps


def rep_rhs(g: SymmetricGame, x):
    """Replicator vector field ``x_i [(Ux)_i - x.Ux]``."""
    p = payoff_vector(g, x)
    if is_exact(x):
        x = as_exact_point(x)
        avg = sum((a * b for a, b in zip(x, p)), Fraction(0))
        return tuple(a * (b - avg) for a, b in zip(x, p))
    return x * (p - x @ p)


def functional_rhs(g: SymmetricGame, x, f: Callable):
    """Payoff-functional dynamics ``x_i [f((Ux)_i) - sum_j x_j f((Ux)_j)]``.

    ``f`` is applied elementwise; for the float flavour it should accept
    arrays (numpy ufuncs and arithmetic lambdas do).
    """
    p = payoff_vector(g, x)
    if is_exact(x):
        x = as_exact_point(x)
        fp = [f(v) for v in p]
        avg = sum((a * b for a, b in zip(x, fp)), Fraction(0))
        return tuple(a * (b - avg) for a, b in zip(x, fp))
    fp = np.asarray(f(p), dtype=float)
    if not np.all(np.isfinite(fp)):
        raise ValueError("f produced non-finite values")
    return x * (fp - x @ fp)


def min_discrete_constant(g: SymmetricGame) -> Fraction:
    """``-min_ij u_ij``; any ``C`` strictly above this is admissible."""
    return -min(min(row) for row in g.payoff)


def discrete_rep_step(g: SymmetricGame, x, C):
    """One step of ``x_i <- x_i (C + (Ux)_i) / (C + x.Ux)``."""
    if as_fraction(C) <= min_discrete_constant(g):
        raise ValueError("C must exceed -min_ij u_ij")
    p = payoff_vector(g, x)
    if is_exact(x):
        x = as_exact_point(x)
        C = as_fraction(C)
        avg = sum((a * b for a, b in zip(x, p)), Fraction(0))
        return tuple(a * (C + b) / (C + avg) for a, b in zip(x, p))
    C = float(C)
    return x * (C + p) / (C + x @ p)


# ---------------------------------------------------------------------------
# decomposition of the 7x7 state


@dataclass(frozen=True)
class Decomposition:
    lam: float
    mu: float
    x4: float
    xbar: tuple | None
    xhat: tuple | None

    @property
    def xbar_defined(self) -> bool:
        return self.xbar is not None

    @property
    def xhat_defined(self) -> bool:
        return self.xhat is not None


def decompose(x) -> Decomposition:
    """Split a 7-strategy state into ``lambda, mu, x4`` and the normalised face shares."""
    if len(x) != 7:
        raise ValueError("decompose expects a 7-strategy state")
    exact = is_exact(x)
    xs = as_exact_point(x) if exact else [float(v) for v in x]
    lam = sum(xs[i] for i in FACE_123)
    mu = sum(xs[i] for i in FACE_567)
    xbar = tuple(xs[i] / lam for i in FACE_123) if lam > 0 else None
    xhat = tuple(xs[i] / mu for i in FACE_567) if mu > 0 else None
    return Decomposition(lam, mu, xs[3], xbar, xhat)


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class Trajectory:
    """A replicator run in log coordinates with dense output.

    ``log_states[k]`` holds log weights over the support (max shifted to 0),
    ``states[k]`` the corresponding simplex points; ``cum_integral[k]`` is
    the integral of ``x`` from 0 to ``times[k]`` (Simpson on the dense
    output, ``SIMPSON_PANELS`` panels per step).
    """

    game: SymmetricGame
    support: tuple[int, ...]
    sol: Solution
    states: np.ndarray
    cum_integral: np.ndarray
    rtol: float
    atol: float

    @property
    def times(self) -> np.ndarray:
        return self.sol.t

    @property
    def log_states(self) -> np.ndarray:
        out = np.full((len(self.sol.t), self.game.n), -np.inf)
        out[:, self.support] = self.sol.y
        return out

    @property
    def end_time(self) -> float:
        return float(self.sol.t[-1])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def _check_range(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.end_time * (1 + 1e-14)):
            raise ValueError(f"time outside [0, {self.end_time}]")
        return np.minimum(t, self.end_time)

    def log_sample(self, times) -> np.ndarray:
        """Normalised log shares ``ln x_i`` at ``times``; ``-inf`` off the support."""
        times = self._check_range(np.atleast_1d(times))
        lw = self.sol.evaluate(times)
        lw = lw - _logsumexp(lw)[:, None]
        out = np.full((len(times), self.game.n), -np.inf)
        out[:, self.support] = lw
        return out

    def sample(self, times) -> np.ndarray:
        times = self._check_range(np.atleast_1d(times))
        out = np.zeros((len(times), self.game.n))
        out[:, self.support] = _softmax(self.sol.evaluate(times))
        return out

    def integral(self, t: float) -> np.ndarray:
        """``int_0^t x(s) ds``."""
        t = float(self._check_range(t))
        if t <= 0:
            return np.zeros(self.game.n)
        k, s = self.sol.locate(np.array([t]))
        k, s = int(k[0]), float(s[0])
        partial = np.zeros(self.game.n)
        if s > 0:
            nodes = s * _SIMPSON_S
            powers = np.stack([nodes, nodes ** 2, nodes ** 3, nodes ** 4])
            lw = self.sol.y[k][:, None] + self.sol.h[k] * (self.sol.Q[k] @ powers)
            xs = _softmax(lw, axis=0)
            partial[list(self.support)] = self.sol.h[k] * s * (xs @ _SIMPSON_W)
        return self.cum_integral[k] + partial

    def time_average(self, t: float) -> np.ndarray:
        if not 0 < t <= self.end_time * (1 + 1e-14):
            raise ValueError("time_average needs 0 < t <= end time")
        return self.integral(t) / t

    def to_csv(self, path, sample_times: Sequence[float] | None = None):
        ts = self.times if sample_times is None else np.asarray(sample_times, dtype=float)
        xs = self.sample(ts)
        n = self.game.n
        header = ["t"] + [f"x{i + 1}" for i in range(n)] + ["lambda", "mu", "avg_payoff"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for t, x in zip(ts, xs):
                lam = x[list(FACE_123)].sum() if n == 7 else float("nan")
                mu = x[list(FACE_567)].sum() if n == 7 else float("nan")
                w.writerow([repr(float(t))] + [repr(float(v)) for v in x] + [repr(float(lam)), repr(float(mu)), repr(float(x @ self.game.U @ x))])


def _log_field(U: np.ndarray):
    def f(lw):
        z = np.exp(lw - lw.max())
        x = z / z.sum()
        p = U @ x
        return p - x @ p

    return f


def _shift(lw):
    return lw - lw.max()


def integrate_rep(
    g: SymmetricGame,
    x0,
    T: float,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    allow_faces: bool = False,
    max_step: float = DEFAULT_MAX_STEP,
) -> Trajectory:
    """Integrate the replicator dynamics from ``x0`` over ``[0, T]``.

    Local error control is on log weights: ``rtol`` bounds the absolute
    error of ``ln x_i``, which is the relative error of each share however
    small it is; ``atol`` adds a bound proportional to ``|ln x_i|``.
    ``max_step`` keeps long dwells near vertices from being crossed in one
    step, where the embedded error estimate can miss a transition.

    Zero coordinates of ``x0`` stay exactly zero (faces are invariant);
    they are only accepted with ``allow_faces=True``.
    """
    x0 = np.asarray([float(v) for v in x0])
    check_simplex(x0, g.n)
    if T <= 0:
        raise ValueError("T must be positive")
    supp = tuple(int(i) for i in np.flatnonzero(x0 > 0))
    if len(supp) < g.n and not allow_faces:
        raise ValueError("x0 is not interior; pass allow_faces=True to integrate on a face")
    U = g.U[np.ix_(supp, supp)]
    if not np.all(np.isfinite(U)):
        raise IntegrationError("non-finite payoffs")
    sol = dopri5(_log_field(U), np.log(x0[list(supp)]), T, rtol=atol, atol=rtol, max_step=max_step, shift=_shift)
    states = np.zeros((len(sol.t), g.n))
    states[:, supp] = _softmax(sol.y)
    # Simpson integral of x over each step
    powers = np.stack([_SIMPSON_S, _SIMPSON_S ** 2, _SIMPSON_S ** 3, _SIMPSON_S ** 4])
    lw = sol.y[:-1, :, None] + sol.h[:, None, None] * (sol.Q @ powers)
    xs = _softmax(lw, axis=1)
    per_step = sol.h[:, None] * (xs @ _SIMPSON_W)
    cum = np.zeros((len(sol.t), g.n))
    cum[1:, supp] = np.cumsum(per_step, axis=0)
    return Trajectory(g, supp, sol, states, cum, rtol, atol)


def time_average(traj: Trajectory, t: float) -> np.ndarray:
    return traj.time_average(t)


def rescaled_time(traj: Trajectory, t: float, which: str = "bar") -> float:
    """``int_0^t lambda`` (``which="bar"``) or ``int_0^t mu`` (``"hat"``)."""
    face = {"bar": FACE_123, "hat": FACE_567}[which]
    return float(traj.integral(t)[list(face)].sum())


def face_shares(traj: Trajectory, times, face: Sequence[int]) -> np.ndarray:
    """Normalised shares on ``face`` computed from log weights (no underflow)."""
    lw = traj.log_sample(times)[:, list(face)]
    return _softmax(lw)


# ---------------------------------------------------------------------------
# rescale lemma


@dataclass
class RescaleReport:
    bar_discrepancy: float
    hat_discrepancy: float
    samples: int
    T: float


def verify_rescale_lemma(
    g77: SymmetricGame,
    x0,
    T: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    samples: int = 2001,
) -> RescaleReport:
    """Compare face shares of a 7x7 run with separate 3x3 runs in rescaled time.

    The top-left and bottom-right 3x3 blocks of ``g77`` are integrated from
    ``xbar(0)`` and ``xhat(0)``; the report holds the sup-norm gaps
    ``|xbar(t) - y(taubar(t))|`` and ``|xhat(t) - z(tauhat(t))|`` over
    ``samples`` uniform times in ``[0, T]``.
    """
    x0 = np.asarray([float(v) for v in x0])
    if x0.size != 7 or np.any(x0 <= 0):
        raise ValueError("verify_rescale_lemma needs an interior 7-strategy start")
    full = integrate_rep(g77, x0, T, rtol=rtol, atol=atol)
    ts = np.linspace(0.0, T, samples)
    gaps = []
    for face, which in ((FACE_123, "bar"), (FACE_567, "hat")):
        sub = g77.restrict(face)
        shares = face_shares(full, ts, face)
        tau = np.array([rescaled_time(full, t, which) for t in ts])
        face_run = integrate_rep(sub, shares[0], max(tau[-1], 1e-12), rtol=rtol, atol=atol)
        ys = face_run.sample(np.minimum(tau, face_run.end_time))
        gaps.append(float(np.max(np.abs(shares - ys))))
    return RescaleReport(gaps[0], gaps[1], samples, T)


# ---------------------------------------------------------------------------
# closed forms used by the elimination argument


def _quad(M, v) -> float:
    v = np.asarray(v, dtype=float)
    return float(v @ M @ v)


def log_ratio_rates(g77: SymmetricGame, x: np.ndarray) -> tuple[float, float]:
    """Closed-form ``d/dt ln(x4/lambda)`` and ``d/dt ln(mu/lambda)`` for game77.

    Uses the block structure: ``eps`` is read from the payoff ``u_21``.
    """
    eps = float(g77.payoff[1][0])
    d = decompose(x)
    Ub = g77.U[:3, :3]
    Uh = g77.U[4:, 4:]
    # an empty face contributes nothing; its average is multiplied by zero mass
    bar_avg = _quad(Ub, d.xbar) if d.xbar_defined else 0.0
    hat_avg = _quad(Uh, d.xhat) if d.xhat_defined else 0.0
    x3 = x[2]
    rate_x4 = 4 * x3 + 10 * d.x4 - 2 * d.lam - d.lam * bar_avg - eps * d.mu
    rate_mu = d.mu * (hat_avg + 1 / 3 - eps) - d.lam * (1 / 3 + bar_avg) + 20 * d.x4
    return float(rate_x4), float(rate_mu)
