"""Symmetric games, the RPS families and the 6x6 / 7x7 elimination games.

Payoffs are held as exact ``Fraction`` matrices; ``SymmetricGame.U`` is a
derived float view. Strategy indices are 0-based throughout the library,
so strategy ``k`` in 1-based numbering is index ``k - 1``.

Mixed strategies come in two flavours: tuples of ``Fraction`` (exact) and
1-d float ``numpy`` arrays. Functions that accept a point dispatch on the
flavour and return a result of the same flavour.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .exact import as_fraction

SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class SymmetricGame:
    """Two-player symmetric game; ``payoff[i][j]`` is the payoff of i against j."""

    payoff: tuple[tuple[Fraction, ...], ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        rows = tuple(tuple(as_fraction(v) for v in row) for row in self.payoff)
        n = len(rows)
        if n < 2 or any(len(r) != n for r in rows):
            raise ValueError("payoff matrix must be square with n >= 2")
        object.__setattr__(self, "payoff", rows)

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable], name: str = "") -> "SymmetricGame":
        return cls(tuple(tuple(r) for r in rows), name=name)

    @property
    def n(self) -> int:
        return len(self.payoff)

    @cached_property
    def U(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.payoff])

    def __getitem__(self, ij: tuple[int, int]) -> Fraction:
        i, j = ij
        return self.payoff[i][j]

    def column(self, j: int) -> tuple[Fraction, ...]:
        return tuple(row[j] for row in self.payoff)

    def restrict(self, indices: Sequence[int]) -> "SymmetricGame":
        """Sub-game where both players are restricted to ``indices``."""
        idx = list(indices)
        return SymmetricGame(tuple(tuple(self.payoff[i][j] for j in idx) for i in idx))

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "payoff": [[v.numerator, v.denominator] for row in self.payoff for v in row],
        }

    @classmethod
    def from_json(cls, doc: dict | str) -> "SymmetricGame":
        if isinstance(doc, str):
            doc = json.loads(doc)
        n = int(doc["n"])
        entries = doc["payoff"]
        if len(entries) == n * n:
            flat = entries
        else:
            # also accept nested rows
            flat = [v for row in entries for v in row]
        if len(flat) != n * n:
            raise ValueError(f"expected {n * n} payoff entries, got {len(flat)}")
        vals = [as_fraction(v) for v in flat]
        return cls(tuple(tuple(vals[i * n:(i + 1) * n]) for i in range(n)))


# ---------------------------------------------------------------------------
# mixed strategies


def is_exact(x) -> bool:
    return not isinstance(x, np.ndarray)


def as_exact_point(x) -> tuple[Fraction, ...]:
    return tuple(as_fraction(v) for v in x)


def check_simplex(x, n: int | None = None):
    """Validate a mixed strategy; returns it unchanged."""
    if n is not None and len(x) != n:
        raise ValueError(f"dimension mismatch: expected {n}, got {len(x)}")
    if is_exact(x):
        if any(v < 0 for v in x) or sum(x) != 1:
            raise ValueError("not a point of the simplex (exact check)")
    else:
        if np.any(x < -SIMPLEX_TOL) or abs(x.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError("not a point of the simplex")
    return x


def vertex(n: int, i: int) -> tuple[Fraction, ...]:
    return tuple(Fraction(int(k == i)) for k in range(n))


def face_barycenter(n: int, face: Iterable[int]) -> tuple[Fraction, ...]:
    face = set(face)
    w = Fraction(1, len(face))
    return tuple(w if k in face else Fraction(0) for k in range(n))


def support(x) -> tuple[int, ...]:
    return tuple(i for i, v in enumerate(x) if v > 0)


# ---------------------------------------------------------------------------
# payoffs


def _check_dim(g: SymmetricGame, x):
    if len(x) != g.n:
        raise ValueError(f"dimension mismatch: game has {g.n} strategies, point has {len(x)}")


def payoff_vector(g: SymmetricGame, x):
    """Payoff of every pure strategy against ``x`` (the vector ``Ux``)."""
    _check_dim(g, x)
    if not is_exact(x):
        return g.U @ x
    x = as_exact_point(x)
    nz = [(j, v) for j, v in enumerate(x) if v]
    return tuple(sum((row[j] * v for j, v in nz), Fraction(0)) for row in g.payoff)


def average_payoff(g: SymmetricGame, x):
    """Mean payoff ``x . Ux``."""
    p = payoff_vector(g, x)
    if not is_exact(x):
        return float(x @ p)
    return sum((a * b for a, b in zip(as_exact_point(x), p)), Fraction(0))


def mixed_payoff(g: SymmetricGame, x, y):
    """Payoff ``x . Uy`` of mixed strategy x against y."""
    p = payoff_vector(g, y)
    if not is_exact(y):
        return float(np.asarray(x, dtype=float) @ p)
    return sum((as_fraction(a) * b for a, b in zip(x, p)), Fraction(0))


# ---------------------------------------------------------------------------
# better replies


def better_reply_edges(g: SymmetricGame) -> set[tuple[int, int]]:
    """Transitions ``(i, j)`` with ``u_ji > u_ii``.

    After a best-reply segment aimed at ``i``, only such ``j`` can become a
    best reply (improvement principle).
    """
    U = g.payoff
    return {(i, j) for i in range(g.n) for j in range(g.n) if i != j and U[j][i] > U[i][i]}


def better_reply_edges_row(g: SymmetricGame) -> set[tuple[int, int]]:
    """The transposed convention ``u_ij > u_ii``, kept for comparison only."""
    U = g.payoff
    return {(i, j) for i in range(g.n) for j in range(g.n) if i != j and U[i][j] > U[i][i]}


# ---------------------------------------------------------------------------
# Rock-Paper-Scissors families


@dataclass(frozen=True)
class RPSSpec:
    """Parameters of a Rock-Paper-Scissors game in one of three forms.

    ``general``: ``a, b, c`` triples with ``b_i < a_i < c_i``;
    ``cyclic``: ``(alpha, beta)``, both positive;
    ``epsilon``: ``(eps,)`` with ``0 < eps < 1``.
    """

    form: str
    params: tuple

    def __post_init__(self):
        if self.form == "general":
            a, b, c = (tuple(as_fraction(v) for v in t) for t in self.params)
            if not all(len(t) == 3 for t in (a, b, c)):
                raise ValueError("general RPS needs three triples a, b, c")
            if not all(b[i] < a[i] < c[i] for i in range(3)):
                raise ValueError("general RPS requires b_i < a_i < c_i")
            params = (a, b, c)
        elif self.form == "cyclic":
            alpha, beta = (as_fraction(v) for v in self.params)
            if not (alpha > 0 and beta > 0):
                raise ValueError("cyclic RPS requires alpha > 0 and beta > 0")
            params = (alpha, beta)
        elif self.form == "epsilon":
            (eps,) = (as_fraction(v) for v in self.params)
            if not 0 < eps < 1:
                raise ValueError("epsilon RPS requires 0 < eps < 1")
            params = (eps,)
        else:
            raise ValueError(f"unknown RPS form {self.form!r}")
        object.__setattr__(self, "params", params)

    @classmethod
    def general(cls, a, b, c) -> "RPSSpec":
        return cls("general", (tuple(a), tuple(b), tuple(c)))

    @classmethod
    def cyclic(cls, alpha, beta) -> "RPSSpec":
        return cls("cyclic", (alpha, beta))

    @classmethod
    def epsilon(cls, eps) -> "RPSSpec":
        return cls("epsilon", (eps,))

    def abc(self) -> tuple[tuple[Fraction, ...], ...]:
        """The ``(a, b, c)`` triples of the equivalent general form."""
        if self.form == "general":
            return self.params
        if self.form == "cyclic":
            alpha, beta = self.params
        else:
            alpha, beta = Fraction(1), self.params[0]
        return (Fraction(0),) * 3, (-alpha,) * 3, (beta,) * 3


def build_rps(spec: RPSSpec) -> SymmetricGame:
    a, b, c = spec.abc()
    rows = (
        (a[0], b[1], c[2]),
        (c[0], a[1], b[2]),
        (b[0], c[1], a[2]),
    )
    return SymmetricGame(rows, name=f"rps-{spec.form}")


def rps_spec_from_matrix(block) -> RPSSpec:
    """Read a 3x3 payoff block back into general RPS form (raises if not RPS)."""
    if isinstance(block, SymmetricGame):
        block = block.payoff
    m = [[as_fraction(v) for v in row] for row in block]
    a = tuple(m[i][i] for i in range(3))
    c = (m[1][0], m[2][1], m[0][2])
    b = (m[2][0], m[0][1], m[1][2])
    return RPSSpec.general(a, b, c)


def is_outward_cycling(spec: RPSSpec) -> bool:
    if spec.form == "cyclic":
        alpha, beta = spec.params
        return alpha > beta
    if spec.form == "epsilon":
        return True
    a, b, c = spec.params
    lhs = (a[0] - b[0]) * (a[1] - b[1]) * (a[2] - b[2])
    rhs = (c[0] - a[0]) * (c[1] - a[1]) * (c[2] - a[2])
    return lhs > rhs


def normalize_to_epsilon(spec: RPSSpec) -> RPSSpec:
    """Rescale an outward cyclic game to the epsilon form (``eps = beta/alpha``)."""
    if spec.form == "epsilon":
        return spec
    if spec.form != "cyclic" or not is_outward_cycling(spec):
        raise ValueError("only outward cycling cyclic games have an epsilon form")
    alpha, beta = spec.params
    return RPSSpec.epsilon(beta / alpha)


# ---------------------------------------------------------------------------
# the elimination games


def build_game_66() -> SymmetricGame:
    rows = [
        [0, -3, 1, -1, -1, -1],
        [1, 0, -3, -1, -1, -1],
        [-3, 1, 0, -1, -1, -1],
        [-4, -4, 3, 0, -5, 1],
        [-1, -1, -3, 1, 0, -5],
        [-1, -1, -3, -5, 1, 0],
    ]
    return SymmetricGame.from_rows(rows, name="game66")


def build_game_77(eps) -> SymmetricGame:
    e = as_fraction(eps)
    if not 0 < e < Fraction(1, 6):
        raise ValueError("game77 requires 0 < eps < 1/6")
    t = Fraction(-1, 3)
    rows = [
        [0, -1, e, -10, t + e, t + e, t + e],
        [e, 0, -1, -10, t + e, t + e, t + e],
        [-1, e, 0, -10, t + e, t + e, t + e],
        [-2, -2, 2, 0, t, t, t],
        [t, t, t, 10, 0, -1, e],
        [t, t, t, 10, e, 0, -1],
        [t, t, t, 10, -1, e, 0],
    ]
    return SymmetricGame.from_rows(rows, name=f"game77(eps={e})")


def random_perturbation(g: SymmetricGame, delta, rng: np.random.Generator, max_den: int = 1000) -> SymmetricGame:
    """Add an independent rational perturbation in ``[-delta, delta]`` to every entry.

    Perturbations are ``k / max_den * delta`` with integer ``k``, so the game
    stays exact.
    """
    delta = as_fraction(delta)
    ks = rng.integers(-max_den, max_den + 1, size=(g.n, g.n))
    rows = tuple(
        tuple(g.payoff[i][j] + Fraction(int(ks[i, j]), max_den) * delta for j in range(g.n))
        for i in range(g.n)
    )
    return SymmetricGame(rows, name=f"{g.name}+perturbation")


BUILDERS = {
    "game66": lambda **kw: build_game_66(),
    "game77": lambda eps=Fraction(1, 50), **kw: build_game_77(eps),
    "rps-cyclic": lambda alpha=3, beta=1, **kw: build_rps(RPSSpec.cyclic(alpha, beta)),
    "rps-eps": lambda eps=Fraction(1, 5), **kw: build_rps(RPSSpec.epsilon(eps)),
}
