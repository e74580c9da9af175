"""Dormand-Prince 5(4) with step-size control and continuous extension.

Minimal by design: fixed-dimension autonomous systems, an optional hook to
shift the state after each accepted step, and per-step interpolation data
(``Q`` matrices, same free interpolant as Hairer/Shampine) kept so callers
can evaluate or integrate the solution anywhere inside a step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0


class IntegrationError(RuntimeError):
    pass


@dataclass
class Solution:
    """Accepted steps of an integration.

    ``y[k]`` is the state at ``t[k]`` as used to start step ``k`` (after the
    shift hook); within step ``k`` the state is
    ``y[k] + h[k] * Q[k] @ [s, s^2, s^3, s^4]`` with ``s`` in ``[0, 1]``.
    """

    t: np.ndarray
    y: np.ndarray
    h: np.ndarray
    Q: np.ndarray
    nfev: int

    def locate(self, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Step index and local coordinate ``s`` for each time."""
        times = np.asarray(times, dtype=float)
        k = np.searchsorted(self.t, times, side="right") - 1
        k = np.clip(k, 0, len(self.h) - 1)
        s = (times - self.t[k]) / self.h[k]
        return k, s

    def evaluate(self, times) -> np.ndarray:
        """Dense output at ``times``; shape ``(len(times), dim)``."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if len(self.h) == 0:
            return np.repeat(self.y[:1], len(times), axis=0)
        k, s = self.locate(times)
        powers = np.stack([s, s ** 2, s ** 3, s ** 4], axis=1)
        return self.y[k] + self.h[k, None] * np.einsum("nij,nj->ni", self.Q[k], powers)


def _initial_step(f, y0, f0, rtol, atol):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    d2 = np.sqrt(np.mean(((f(y1) - f0) / scale) ** 2)) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def dopri5(
    f: Callable[[np.ndarray], np.ndarray],
    y0,
    t_end: float,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    max_step: float = np.inf,
    max_steps: int = 10_000_000,
    shift: Callable[[np.ndarray], np.ndarray] | None = None,
) -> Solution:
    """Integrate ``y' = f(y)`` from ``t = 0`` to ``t_end``."""
    y = np.array(y0, dtype=float)
    if shift is not None:
        y = shift(y)
    dim = y.size
    fy = f(y)
    nfev = 1
    if not np.all(np.isfinite(fy)):
        raise IntegrationError("non-finite right-hand side at the initial state")
    ts, ys, hs, Qs = [0.0], [y.copy()], [], []
    t = 0.0
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    h = min(_initial_step(f, y, fy, rtol, atol), max_step, t_end)
    nfev += 1
    K = np.empty((7, dim))
    while t < t_end:
        if len(hs) >= max_steps:
            raise IntegrationError(f"exceeded {max_steps} steps at t={t}")
        min_h = 10 * np.spacing(t)
        h = min(h, max_step)
        last = False
        if t + h >= t_end - min_h:  # never leave a sliver below min_h
            h = t_end - t
            last = True
        while True:
            if h < min_h:
                raise IntegrationError(f"step size underflow at t={t}")
            K[0] = fy
            for s in range(1, 6):
                K[s] = f(y + h * (A[s] @ K[:s]))
            y_new = y + h * (B @ K[:6])
            K[6] = f(y_new)
            nfev += 6
            if not np.all(np.isfinite(K[6])):
                raise IntegrationError(f"non-finite right-hand side near t={t}")
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = np.sqrt(np.mean((h * (E @ K) / scale) ** 2))
            if err <= 1.0:
                break
            h *= max(MIN_FACTOR, SAFETY * err ** -0.2)
            last = False
        Qs.append(K.T @ P)
        hs.append(h)
        t = t_end if last else t + h
        y = y_new if shift is None else shift(y_new)
        fy = K[6].copy()  # K is reused; a view would change on rejected attempts
        ts.append(t)
        ys.append(y.copy())
        factor = MAX_FACTOR if err == 0 else min(MAX_FACTOR, SAFETY * err ** -0.2)
        h *= factor
    return Solution(
        t=np.array(ts),
        y=np.array(ys),
        h=np.array(hs),
        Q=np.array(Qs).reshape(len(hs), dim, 4),
        nfev=nfev,
    )
