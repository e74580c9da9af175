"""Exact linear algebra over the rationals.

Systems are scaled row-wise to integers and reduced by fraction-free
(Bareiss) elimination, so intermediate values stay integral and no
``Fraction`` normalisation happens until back substitution.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Sequence

Rational = Fraction | int


def as_fraction(value) -> Fraction:
    """Convert ints, Fractions, floats (exactly) and ``"p/q"`` strings."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return Fraction(int(value[0]), int(value[1]))
    return Fraction(value)


def _integer_row(row: Sequence[Fraction]) -> list[int]:
    den = 1
    for v in row:
        den = lcm(den, v.denominator)
    return [v.numerator * (den // v.denominator) for v in row]


def _echelon(rows: list[list[int]], ncols: int) -> tuple[list[list[int]], list[int]]:
    """Bareiss elimination in place; returns the rows and pivot columns."""
    m = len(rows)
    r = 0
    prev = 1
    pivots = []
    for c in range(ncols):
        p = next((i for i in range(r, m) if rows[i][c] != 0), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        piv = rows[r][c]
        prow = rows[r]
        for i in range(r + 1, m):
            row = rows[i]
            f = row[c]
            for j in range(c + 1, len(row)):
                row[j] = (piv * row[j] - f * prow[j]) // prev
            row[c] = 0
        prev = piv
        pivots.append(c)
        r += 1
        if r == m:
            break
    return rows, pivots


def solve_unique_int(rows: list[list[int]], k: int) -> tuple[Fraction, ...] | None:
    """Like :func:`solve_unique` for an integer augmented matrix ``[A | b]``.

    ``rows`` is consumed.
    """
    m = len(rows)
    rows, pivots = _echelon(rows, k)
    r = len(pivots)
    for i in range(r, m):
        if rows[i][k] != 0:
            return None
    if r < k:
        return None
    x = [Fraction(0)] * k
    for i in range(k - 1, -1, -1):
        row = rows[i]
        acc = Fraction(row[k])
        for j in range(i + 1, k):
            if row[j]:
                acc -= row[j] * x[j]
        x[i] = acc / row[i]
    return tuple(x)


def solve_unique(a: Sequence[Sequence[Rational]], b: Sequence[Rational]) -> tuple[Fraction, ...] | None:
    """Solve ``a @ x = b`` exactly.

    Returns the solution when it exists and is unique, ``None`` when the
    system is inconsistent or underdetermined. ``a`` may be non-square.
    """
    m = len(a)
    if m != len(b):
        raise ValueError("row count mismatch between matrix and right-hand side")
    k = len(a[0]) if m else 0
    rows = [_integer_row([as_fraction(v) for v in row] + [as_fraction(bi)]) for row, bi in zip(a, b)]
    return solve_unique_int(rows, k)


def rank(a: Sequence[Sequence[Rational]]) -> int:
    if not a:
        return 0
    k = len(a[0])
    rows = [_integer_row([as_fraction(v) for v in row]) for row in a]
    _, pivots = _echelon(rows, k)
    return len(pivots)


def integer_matrix(rows: Sequence[Sequence[Rational]]) -> tuple[list[list[int]], int]:
    """Return ``(M, L)`` with ``M = L * rows`` integral and ``L`` the common denominator."""
    den = 1
    for row in rows:
        for v in row:
            den = lcm(den, as_fraction(v).denominator)
    M = [[int(as_fraction(v) * den) for v in row] for row in rows]
    return M, den
