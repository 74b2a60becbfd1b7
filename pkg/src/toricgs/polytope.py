"""Monotone labelled lattice polytopes with exact rational geometry.

A labelled polytope here is always written in the monotone normalization

    P = { x in R^n : <nu_i, x> <= 1 for every facet normal nu_i },

with the origin strictly interior.  Construction, vertex enumeration, facet
recovery, triangulation combinatorics, and lattice-point tests all run in
exact rational arithmetic; floating point enters only downstream (quadrature,
solvers).
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import cached_property
from math import lcm

import numpy as np

from . import _exact
from .errors import (
    DegenerateFacet,
    LowerDimensional,
    OriginNotInterior,
    OverflowGuard,
    PolytopeError,
    Unbounded,
)

Point = tuple[Fraction, ...]

#: default cap on |mP ∩ Z^n| enumeration size
LATTICE_CAP = 10**7


def _as_point(p) -> Point:
    return tuple(_exact.frac(x) for x in p)


def _affine_rank(points: list[Point]) -> int:
    if len(points) < 2:
        return 0
    base = points[0]
    rows = [[x - b for x, b in zip(p, base)] for p in points[1:]]
    return _exact.rank(rows)


def _hull_facets(points: list[Point], dim: int):
    """Facets of conv(points) in R^dim by exhaustive hyperplane search.

    Returns a list of (normal, offset, vertex_index_set) with the normal a
    primitive integer vector oriented so that <normal, p> <= offset for all
    points.  Points must affinely span R^dim.
    """
    facets: dict[tuple, tuple] = {}
    for combo in itertools.combinations(range(len(points)), dim):
        base = points[combo[0]]
        rows = [[x - b for x, b in zip(points[i], base)] for i in combo[1:]]
        ns = _exact.nullspace(rows, dim)
        if len(ns) != 1:
            continue  # the dim points do not span a unique hyperplane
        normal = ns[0]
        offset = _exact.dot(normal, base)
        side = [(_exact.dot(normal, p) - offset) for p in points]
        if all(s <= 0 for s in side):
            pass
        elif all(s >= 0 for s in side):
            normal = [-x for x in normal]
            offset = -offset
            side = [-s for s in side]
        else:
            continue
        prim = _exact.primitive(normal)
        scale = prim[next(j for j in range(dim) if normal[j] != 0)] / normal[
            next(j for j in range(dim) if normal[j] != 0)
        ]
        key = (prim, offset * scale)
        if key not in facets:
            on = frozenset(i for i, s in enumerate(side) if s == 0)
            facets[key] = (prim, offset * scale, on)
    return [facets[k] for k in sorted(facets)]


def _project_out(points: list[Point], normal) -> list[Point]:
    """Drop one coordinate (the first with a nonzero normal entry).

    On the hyperplane <normal, x> = const this is an affine bijection, so
    convex-position combinatorics are preserved exactly.
    """
    j = next(i for i, x in enumerate(normal) if x != 0)
    return [tuple(x for i, x in enumerate(p) if i != j) for p in points]


def _triangulate_hull(points: list[Point], dim: int) -> list[tuple[int, ...]]:
    """Index simplices of a fan triangulation of conv(points) in R^dim.

    Deterministic given the point order: the apex is the lexicographically
    smallest point, coned over recursively triangulated facets that miss it.
    """
    if dim == 0:
        return [(0,)]
    if dim == 1:
        vals = [p[0] for p in points]
        i_min = min(range(len(points)), key=lambda i: vals[i])
        i_max = max(range(len(points)), key=lambda i: vals[i])
        return [(i_min, i_max)]
    apex = min(range(len(points)), key=lambda i: points[i])
    simplices: list[tuple[int, ...]] = []
    for normal, offset, on in _hull_facets(points, dim):
        if apex in on:
            continue
        sub = sorted(on)
        sub_points = _project_out([points[i] for i in sub], normal)
        for tri in _triangulate_hull(sub_points, dim - 1):
            simplices.append((apex,) + tuple(sub[i] for i in tri))
    return simplices


class LabelledPolytope:
    """A monotone labelled polytope with exact facet and vertex data.

    Use :func:`from_facets`, :func:`from_vertices`, or :func:`builtin` to
    construct one; the constructor assumes pre-validated data.
    """

    def __init__(self, dim: int, normals: tuple[Point, ...], vertices: tuple[Point, ...]):
        self.dim = dim
        self.normals = normals
        self.vertices = vertices

    # -- basic queries ------------------------------------------------------

    def support_min(self, a):
        """min_P <a, x>, attained at a vertex; exact for rational ``a``."""
        if all(isinstance(x, (int, Fraction)) for x in a):
            av = tuple(_exact.frac(x) for x in a)
            return min(_exact.dot(av, v) for v in self.vertices)
        af = np.asarray([float(x) for x in a])
        return float(np.min(self.vertices_f @ af))

    def support_max(self, a):
        """max_P <a, x>, attained at a vertex; exact for rational ``a``."""
        return -self.support_min([-x for x in a])

    def interval(self) -> tuple[Fraction, Fraction]:
        """The polytope as an interval (1D only)."""
        if self.dim != 1:
            raise PolytopeError("interval() requires a 1-dimensional polytope")
        xs = [v[0] for v in self.vertices]
        return min(xs), max(xs)

    def facet_vertices(self, i: int) -> tuple[Point, ...]:
        nu = self.normals[i]
        return tuple(v for v in self.vertices if _exact.dot(nu, v) == 1)

    # -- cached derived data ------------------------------------------------

    @cached_property
    def vertices_f(self) -> np.ndarray:
        return np.array([[float(x) for x in v] for v in self.vertices], dtype=float)

    @cached_property
    def normals_f(self) -> np.ndarray:
        return np.array([[float(x) for x in nu] for nu in self.normals], dtype=float)

    @cached_property
    def triangulation(self) -> tuple[tuple[Point, ...], ...]:
        """Star triangulation from the origin.

        Each simplex is a tuple of n+1 rational points whose first entry is
        the origin; the remaining points lie on one facet.  Simplex volumes
        sum to vol(P) exactly.
        """
        origin = tuple(Fraction(0) for _ in range(self.dim))
        if self.dim == 1:
            return tuple((origin, v) for v in self.vertices)
        simplices: list[tuple[Point, ...]] = []
        for i, nu in enumerate(self.normals):
            pts = sorted(self.facet_vertices(i))
            sub = _project_out(pts, nu)
            for tri in _triangulate_hull(sub, self.dim - 1):
                simplices.append((origin,) + tuple(pts[j] for j in tri))
        return tuple(simplices)

    @cached_property
    def volume(self) -> Fraction:
        """Euclidean volume of P (exact)."""
        total = Fraction(0)
        fact = 1
        for k in range(2, self.dim + 1):
            fact *= k
        for s in self.triangulation:
            rows = [[x - b for x, b in zip(p, s[0])] for p in s[1:]]
            total += abs(_exact.det(rows)) / fact
        return total

    @cached_property
    def _int_facets(self) -> tuple[np.ndarray, np.ndarray]:
        """Facet system scaled to integers: A u <= m*d componentwise."""
        rows = []
        rhs = []
        for nu in self.normals:
            d = lcm(*(x.denominator for x in nu))
            rows.append([int(x * d) for x in nu])
            rhs.append(d)
        return np.array(rows, dtype=np.int64), np.array(rhs, dtype=np.int64)

    # -- lattice enumeration ------------------------------------------------

    def contains_lattice(self, u, m: int = 1) -> bool:
        """Exact membership test of an integer point in m*P."""
        A, d = self._int_facets
        u = np.asarray(u, dtype=np.int64)
        return bool(np.all(A @ u <= m * d))

    def lattice_points(self, m: int, cap: int = LATTICE_CAP) -> np.ndarray:
        """All integer points of m*P, lexicographically sorted, as an array.

        Raises :class:`OverflowGuard` when the bounding-box candidate count
        exceeds ``cap``.
        """
        if m < 1:
            raise PolytopeError("lattice scale m must be >= 1")
        lo, hi = [], []
        for j in range(self.dim):
            coords = [v[j] for v in self.vertices]
            lo_j = min(coords) * m
            hi_j = max(coords) * m
            lo.append(int(np.ceil(float(lo_j))) if lo_j.denominator != 1 else int(lo_j))
            hi.append(int(np.floor(float(hi_j))) if hi_j.denominator != 1 else int(hi_j))
        count = 1
        for a, b in zip(lo, hi):
            count *= max(0, b - a + 1)
        if count > cap:
            raise OverflowGuard(
                f"lattice enumeration of {count} candidates exceeds cap {cap}"
            )
        if count == 0:
            return np.empty((0, self.dim), dtype=np.int64)
        axes = [np.arange(a, b + 1, dtype=np.int64) for a, b in zip(lo, hi)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        A, d = self._int_facets
        mask = np.all(grid @ A.T <= m * d[None, :], axis=1)
        pts = grid[mask]
        order = np.lexsort(tuple(pts[:, j] for j in range(self.dim - 1, -1, -1)))
        return pts[order]

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "facets": [
                {"normal": [str(x) for x in nu], "label": "1"} for nu in self.normals
            ],
        }

    def __repr__(self) -> str:
        return (
            f"LabelledPolytope(dim={self.dim}, facets={len(self.normals)}, "
            f"vertices={len(self.vertices)})"
        )


def from_facets(normals, labels) -> LabelledPolytope:
    """Build a polytope from facet normals and positive labels.

    Inputs are rescaled so every label becomes 1 (each normal is divided by
    its label).  The system must be bounded, full-dimensional, and every
    facet tight; the origin is then automatically strictly interior.
    """
    if len(normals) != len(labels):
        raise PolytopeError("normals and labels must have equal length")
    if not normals:
        raise PolytopeError("at least one facet is required")
    n = len(normals[0])
    if not 1 <= n <= 4:
        raise PolytopeError("dimension must be between 1 and 4")
    nus: list[Point] = []
    for i, (nu, lab) in enumerate(zip(normals, labels)):
        lab = _exact.frac(lab)
        if lab <= 0:
            raise DegenerateFacet(f"facet {i} has non-positive label {lab}", index=i)
        p = _as_point(nu)
        if len(p) != n:
            raise PolytopeError(f"facet {i} has wrong dimension")
        if all(x == 0 for x in p):
            raise DegenerateFacet(f"facet {i} has zero normal", index=i)
        nus.append(tuple(x / lab for x in p))

    rows = [list(nu) for nu in nus]
    if _exact.rank(rows) < n:
        raise Unbounded("facet normals do not span the ambient space")
    # A nontrivial recession direction would lie on n-1 linearly independent
    # active constraints, so scanning those subsets is an exact boundedness test.
    for combo in itertools.combinations(range(len(nus)), n - 1):
        sub = [list(nus[i]) for i in combo]
        ns = _exact.nullspace(sub, n)
        if len(ns) != 1:
            continue
        d = ns[0]
        for cand in (d, [-x for x in d]):
            if all(_exact.dot(nu, cand) <= 0 for nu in nus):
                raise Unbounded("facet system has a recession direction")

    verts: set[Point] = set()
    one = [Fraction(1)] * n
    for combo in itertools.combinations(range(len(nus)), n):
        sol = _exact.solve([list(nus[i]) for i in combo], one)
        if sol is None:
            continue
        if all(_exact.dot(nu, sol) <= 1 for nu in nus):
            verts.add(tuple(sol))
    vertices = tuple(sorted(verts))
    if len(vertices) < n + 1 or _affine_rank(list(vertices)) < n:
        raise LowerDimensional("vertex set does not span the ambient space")
    for i, nu in enumerate(nus):
        tight = [v for v in vertices if _exact.dot(nu, v) == 1]
        # a genuine facet carries n affinely independent tight vertices; fewer
        # means the constraint is loose or touches only a lower-dimensional face
        if len(tight) < n or _affine_rank(tight) < n - 1:
            raise DegenerateFacet(f"facet {i} is redundant or loose", index=i)
    return LabelledPolytope(n, tuple(nus), vertices)


def from_vertices(points) -> LabelledPolytope:
    """Build a polytope as the convex hull of rational points.

    The origin must be strictly interior; recovered facet normals are scaled
    so every label is 1.  Round-trips with :func:`from_facets` up to facet
    reordering.
    """
    pts = sorted({_as_point(p) for p in points})
    if not pts:
        raise PolytopeError("at least one point is required")
    n = len(pts[0])
    if not 1 <= n <= 4:
        raise PolytopeError("dimension must be between 1 and 4")
    if any(len(p) != n for p in pts):
        raise PolytopeError("points have inconsistent dimensions")
    if _affine_rank(pts) < n:
        raise LowerDimensional("points do not affinely span the ambient space")
    normals = []
    for normal, offset, _on in _hull_facets(pts, n):
        if offset <= 0:
            raise OriginNotInterior(
                "origin is not strictly interior to the hull"
            )
        normals.append(tuple(x / offset for x in normal))
    return from_facets(normals, [1] * len(normals))


#: vertex data for the builtin library of monotone polytopes; every entry is
#: re-derived and reflexivity-checked at first load rather than trusted.
_BUILTIN_VERTICES: dict[str, tuple[tuple[int, ...], ...]] = {
    "p1": ((-1,), (1,)),
    "p2": ((-1, -1), (2, -1), (-1, 2)),
    "p1xp1": ((-1, -1), (-1, 1), (1, -1), (1, 1)),
    "bl1p2": ((-1, 0), (0, -1), (2, -1), (-1, 2)),
    "bl2p2": ((-1, 0), (0, -1), (1, -1), (1, 0), (-1, 2)),
    "bl3p2": ((-1, 0), (0, -1), (1, -1), (1, 0), (0, 1), (-1, 1)),
}

_builtin_cache: dict[str, LabelledPolytope] = {}


def builtin_names() -> tuple[str, ...]:
    return tuple(sorted(_BUILTIN_VERTICES))


def builtin(name: str) -> LabelledPolytope:
    """Fetch a builtin polytope by key, validating reflexivity at load.

    The check: all vertices integral, every facet label 1 with an integral
    normal (so the dual polytope is again a lattice polytope), every facet
    tight.  Hardcoded data is never trusted unverified.
    """
    if name not in _BUILTIN_VERTICES:
        raise PolytopeError(
            f"unknown builtin polytope {name!r}; available: {', '.join(builtin_names())}"
        )
    if name not in _builtin_cache:
        P = from_vertices(_BUILTIN_VERTICES[name])
        for v in P.vertices:
            if any(x.denominator != 1 for x in v):
                raise PolytopeError(f"builtin {name!r} failed reflexivity: vertex {v}")
        for nu in P.normals:
            if any(x.denominator != 1 for x in nu):
                raise PolytopeError(
                    f"builtin {name!r} failed reflexivity: non-integral normal {nu}"
                )
        _builtin_cache[name] = P
    return _builtin_cache[name]
