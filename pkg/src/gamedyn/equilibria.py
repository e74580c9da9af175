"""Exact Nash equilibria of the symmetric bimatrix game ``(U, U^T)``.

Enumeration works per player on (support, best-reply set) pairs: for every
support ``J`` and candidate indifference set ``K`` with ``|K| >= |J|`` the
indifference-and-normalisation system is solved exactly, and solutions that
are nonnegative, have support exactly ``J`` and best replies exactly ``K``
are the vertices of the best-response polytope. Because the game is
symmetric, both players share that vertex set. Extreme equilibria are the
pairs of vertices whose supports sit inside each other's best-reply sets.
In a nondegenerate game these are all equilibria; in a degenerate game they
are the vertices of the equilibrium components and the game is flagged.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from .exact import integer_matrix, solve_unique_int
from .game import SymmetricGame, as_exact_point, check_simplex, payoff_vector, support

MAX_STRATEGIES = 12


class RestrictionHypothesisError(ValueError):
    """The payoff-independence hypothesis of the restriction lemma fails."""


@dataclass(frozen=True)
class EquilibriumCertificate:
    x: tuple[Fraction, ...]
    y: tuple[Fraction, ...]
    support_x: tuple[int, ...]
    support_y: tuple[int, ...]
    quasi_strict: bool
    strict: bool
    degenerate: bool = False

    @property
    def symmetric(self) -> bool:
        return self.x == self.y

    def to_json(self) -> dict:
        return {
            "x": [[v.numerator, v.denominator] for v in self.x],
            "y": [[v.numerator, v.denominator] for v in self.y],
            "support_x": list(self.support_x),
            "support_y": list(self.support_y),
            "quasi_strict": self.quasi_strict,
            "strict": self.strict,
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "EquilibriumCertificate":
        return cls(
            x=tuple(Fraction(p, q) for p, q in doc["x"]),
            y=tuple(Fraction(p, q) for p, q in doc["y"]),
            support_x=tuple(doc["support_x"]),
            support_y=tuple(doc["support_y"]),
            quasi_strict=doc["quasi_strict"],
            strict=doc["strict"],
            degenerate=doc.get("degenerate", False),
        )


def best_reply_set(g: SymmetricGame, x) -> tuple[int, ...]:
    """Exact argmax of ``Ux``."""
    p = payoff_vector(g, as_exact_point(x))
    m = max(p)
    return tuple(i for i, v in enumerate(p) if v == m)


def is_nash(g: SymmetricGame, x, y) -> bool:
    """``(x, y)`` is a Nash equilibrium of ``(U, U^T)``; exact comparisons."""
    x, y = as_exact_point(x), as_exact_point(y)
    check_simplex(x, g.n)
    check_simplex(y, g.n)
    row_br = set(best_reply_set(g, y))
    col_br = set(best_reply_set(g, x))  # column payoff against x is (Ux)_j
    return set(support(x)) <= row_br and set(support(y)) <= col_br


def is_quasi_strict(g: SymmetricGame, cert: EquilibriumCertificate) -> bool:
    return (
        set(cert.support_x) == set(best_reply_set(g, cert.y))
        and set(cert.support_y) == set(best_reply_set(g, cert.x))
    )


def make_certificate(g: SymmetricGame, x, y, degenerate: bool = False) -> EquilibriumCertificate:
    x, y = as_exact_point(x), as_exact_point(y)
    if not is_nash(g, x, y):
        raise ValueError("not a Nash equilibrium")
    sx, sy = support(x), support(y)
    qs = set(sx) == set(best_reply_set(g, y)) and set(sy) == set(best_reply_set(g, x))
    return EquilibriumCertificate(x, y, sx, sy, qs, qs and len(sx) == 1 and len(sy) == 1, degenerate)


@dataclass(frozen=True)
class _Vertex:
    point: tuple[Fraction, ...]
    support: frozenset
    replies: frozenset


def best_response_vertices(g: SymmetricGame) -> list[_Vertex]:
    """Vertices of ``{(y, v): y in simplex, Uy <= v}``, one per (support, reply set)."""
    n = g.n
    if n > MAX_STRATEGIES:
        raise ValueError(f"enumeration is limited to n <= {MAX_STRATEGIES}")
    M, _ = integer_matrix(g.payoff)
    subsets = [c for s in range(1, n + 1) for c in combinations(range(n), s)]
    out = []
    for J in subsets:
        k = len(J)
        for K in subsets:
            if len(K) < k:
                continue
            # unknowns: y_J then the scaled value v; rows: (My)_i - v = 0 for i in K, sum y = 1
            rows = [[M[i][j] for j in J] + [-1, 0] for i in K]
            rows.append([1] * k + [0, 1])
            sol = solve_unique_int(rows, k + 1)
            if sol is None:
                continue
            yJ, v = sol[:k], sol[k]
            if any(w <= 0 for w in yJ):
                continue
            payoffs = [sum(M[i][j] * w for j, w in zip(J, yJ)) for i in range(n)]
            if max(payoffs) != v:
                continue
            replies = frozenset(i for i, p in enumerate(payoffs) if p == v)
            if replies != frozenset(K):
                continue
            y = [Fraction(0)] * n
            for j, w in zip(J, yJ):
                y[j] = w
            out.append(_Vertex(tuple(y), frozenset(J), replies))
    return out


def is_degenerate(g: SymmetricGame, vertices: Sequence[_Vertex] | None = None) -> bool:
    """Some mixed strategy has more pure best replies than its support size."""
    vs = best_response_vertices(g) if vertices is None else vertices
    return any(len(v.replies) > len(v.support) for v in vs)


def enumerate_nash(g: SymmetricGame) -> list[EquilibriumCertificate]:
    """All extreme Nash equilibria, ordered by (support_x, support_y)."""
    vs = best_response_vertices(g)
    degenerate = is_degenerate(g, vs)
    certs = []
    for vx in vs:
        for vy in vs:
            if vx.support <= vy.replies and vy.support <= vx.replies:
                certs.append(make_certificate(g, vx.point, vy.point, degenerate))
    certs.sort(key=lambda c: (len(c.support_x), c.support_x, len(c.support_y), c.support_y, c.x, c.y))
    return certs


def restriction_check(g: SymmetricGame, x, y, subset: Iterable[int]) -> bool:
    """Check the restriction lemma for the equilibrium ``(x, y)`` and index set ``subset``.

    Raises :class:`RestrictionHypothesisError` when its hypothesis fails and
    returns whether the induced unnormalised equilibrium condition holds.
    """
    x, y = as_exact_point(x), as_exact_point(y)
    if not is_nash(g, x, y):
        raise ValueError("(x, y) is not a Nash equilibrium")
    sub = sorted(set(subset))
    inside = set(sub)
    if sum(x[i] for i in sub) <= 0 or sum(y[i] for i in sub) <= 0:
        raise RestrictionHypothesisError("x and y must both put positive mass on the subset")
    zero = Fraction(0)
    x_in = tuple(v if i in inside else zero for i, v in enumerate(x))
    y_in = tuple(v if i in inside else zero for i, v in enumerate(y))
    x_out = tuple(a - b for a, b in zip(x, x_in))
    y_out = tuple(a - b for a, b in zip(y, y_in))
    for vec in (y_out, x_out):
        p = payoff_vector(g, vec)
        if len({p[i] for i in sub}) > 1:
            raise RestrictionHypothesisError("payoffs against the outside part differ within the subset")
    py, px = payoff_vector(g, y_in), payoff_vector(g, x_in)
    for i in sub:
        if x_in[i] > 0 and any(py[i] < py[j] for j in sub):
            return False
        if y_in[i] > 0 and any(px[i] < px[j] for j in sub):
            return False
    return True


def strictly_dominates(g: SymmetricGame, p, q) -> bool:
    """``p`` earns strictly more than ``q`` against every pure strategy."""
    p, q = as_exact_point(p), as_exact_point(q)
    if len(p) != g.n or len(q) != g.n:
        raise ValueError("dimension mismatch")
    for j in range(g.n):
        col = g.column(j)
        if sum(a * c for a, c in zip(p, col)) <= sum(b * c for b, c in zip(q, col)):
            return False
    return True


def unique_equilibrium(g: SymmetricGame) -> EquilibriumCertificate | None:
    certs = enumerate_nash(g)
    return certs[0] if len(certs) == 1 else None
