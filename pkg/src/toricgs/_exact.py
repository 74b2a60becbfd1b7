"""Exact rational linear algebra on `fractions.Fraction` matrices.

Small dense routines (n <= 4 throughout the package) used for vertex
enumeration, facet recovery, and the rational solve paths.  Matrices are
lists of lists of Fractions; vectors are lists of Fractions.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Vec = Sequence[Fraction]


def frac(x) -> Fraction:
    """Coerce ints, Fractions, and numeric strings ("p/q" or decimal) exactly."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**12)
    raise TypeError(f"cannot coerce {type(x).__name__} to Fraction")


def dot(a: Vec, b: Vec) -> Fraction:
    return sum((x * y for x, y in zip(a, b, strict=True)), Fraction(0))


def solve(rows: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction] | None:
    """Solve a square rational system by Gaussian elimination.

    Returns None when the matrix is singular.
    """
    n = len(rows)
    a = [list(r) + [rhs[i]] for i, r in enumerate(rows)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        inv = Fraction(1) / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[i][n] for i in range(n)]


def rank(rows: list[list[Fraction]]) -> int:
    if not rows:
        return 0
    m, n = len(rows), len(rows[0])
    a = [list(r) for r in rows]
    rk = 0
    for col in range(n):
        piv = next((r for r in range(rk, m) if a[r][col] != 0), None)
        if piv is None:
            continue
        a[rk], a[piv] = a[piv], a[rk]
        inv = Fraction(1) / a[rk][col]
        a[rk] = [x * inv for x in a[rk]]
        for r in range(m):
            if r != rk and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[rk])]
        rk += 1
        if rk == m:
            break
    return rk


def nullspace(rows: list[list[Fraction]], n: int) -> list[list[Fraction]]:
    """Basis of the nullspace of an m x n rational matrix (m may be 0)."""
    if not rows:
        return [[Fraction(i == j) for j in range(n)] for i in range(n)]
    m = len(rows)
    a = [list(r) for r in rows]
    pivots: list[int] = []
    rk = 0
    for col in range(n):
        piv = next((r for r in range(rk, m) if a[r][col] != 0), None)
        if piv is None:
            continue
        a[rk], a[piv] = a[piv], a[rk]
        inv = Fraction(1) / a[rk][col]
        a[rk] = [x * inv for x in a[rk]]
        for r in range(m):
            if r != rk and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[rk])]
        pivots.append(col)
        rk += 1
        if rk == m:
            break
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * n
        v[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -a[i][fc]
        basis.append(v)
    return basis


def det(rows: list[list[Fraction]]) -> Fraction:
    n = len(rows)
    a = [list(r) for r in rows]
    d = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            d = -d
        d *= a[col][col]
        inv = Fraction(1) / a[col][col]
        for r in range(col + 1, n):
            if a[r][col] != 0:
                f = a[r][col] * inv
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return d


def primitive(v: Vec) -> tuple[Fraction, ...]:
    """Scale a nonzero rational vector to a primitive integer vector.

    Keeps orientation (multiplies by a positive rational only).
    """
    from math import gcd, lcm

    dens = [x.denominator for x in v]
    scale = lcm(*dens) if dens else 1
    ints = [int(x * scale) for x in v]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    if g == 0:
        raise ValueError("zero vector has no primitive form")
    return tuple(Fraction(x, g) for x in ints)
