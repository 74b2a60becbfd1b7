"""Polytope construction, builtins, supports, triangulation, lattice scans."""

from fractions import Fraction

import numpy as np
import pytest

import toricgs as t
from toricgs import errors

from oracles import cyclic_ccw, polygon_monomial_integral, triangle_monomial_integral


EXPECTED_VOLUMES = {
    "p1": Fraction(2),
    "p2": Fraction(9, 2),
    "p1xp1": Fraction(4),
    "bl1p2": Fraction(4),
    "bl2p2": Fraction(7, 2),
    "bl3p2": Fraction(3),
}


def test_builtin_names_and_volumes():
    assert set(t.builtin_names()) == set(EXPECTED_VOLUMES)
    for name, vol in EXPECTED_VOLUMES.items():
        P = t.builtin(name)
        assert P.volume == vol, name
        # monotone normalization: every facet is stored with label one
        assert all(f["label"] == "1" for f in P.to_dict()["facets"]), name


def test_builtin_unknown_name_raises():
    with pytest.raises(errors.PolytopeError):
        t.builtin("nope")


def test_builtin_volumes_match_shoelace_oracle():
    for name in ("p2", "p1xp1", "bl1p2", "bl2p2", "bl3p2"):
        P = t.builtin(name)
        oracle = polygon_monomial_integral(P.vertices, 0, 0)
        assert P.volume == oracle, name


def test_interval_from_facets():
    P = t.from_facets([(1,), (-1,)], [1, 1])
    assert set(P.vertices) == {(Fraction(-1),), (Fraction(1),)}
    assert P.interval() == (Fraction(-1), Fraction(1))


def test_from_facets_rescales_labels_to_one():
    P = t.from_facets([(2,), (-1,)], [2, 1])
    assert set(P.vertices) == {(Fraction(-1),), (Fraction(1),)}
    assert P.normals == ((Fraction(1),), (Fraction(-1),))


def test_from_facets_negative_label_rejected():
    with pytest.raises(errors.DegenerateFacet):
        t.from_facets([(1,), (-1,)], [1, -1])


def test_from_facets_unbounded_rejected():
    with pytest.raises(errors.PolytopeError):
        t.from_facets([(1, 0), (0, 1)], [1, 1])


def test_from_facets_empty_or_origin_excluded_rejected():
    # x <= -1 together with -x <= -1 has no interior around the origin
    with pytest.raises(errors.PolytopeError):
        t.from_facets([(1,), (-1,)], [Fraction(1, 2), Fraction(-1, 2)])


def test_p2_normals_recovered_from_vertices():
    verts = [(-1, -1), (2, -1), (-1, 2)]
    P = t.from_vertices(verts)
    assert set(P.normals) == {
        (Fraction(-1), Fraction(0)),
        (Fraction(0), Fraction(-1)),
        (Fraction(1), Fraction(1)),
    }
    assert set(P.vertices) == {tuple(Fraction(x) for x in v) for v in verts}


def test_square_from_vertices():
    P = t.from_vertices([(1, 1), (-1, 1), (1, -1), (-1, -1)])
    assert len(P.normals) == 4
    assert P.volume == 4


def test_from_vertices_requires_interior_origin():
    with pytest.raises(errors.OriginNotInterior):
        t.from_vertices([(0, 0), (1, 0), (0, 1)])


def test_support_values(p1, p2):
    assert p1.support_min((2,)) == -2
    assert p1.support_max((2,)) == 2
    assert p2.support_min((1, 0)) == -1
    assert p1.support_min((0,)) == 0


def test_triangulation_counts(p1, p2, p1xp1):
    assert len(p1.triangulation) == 2
    assert len(p2.triangulation) == 3
    assert len(p1xp1.triangulation) == 4


def test_triangulation_tiles_the_polytope():
    for name in ("p2", "p1xp1", "bl1p2", "bl2p2", "bl3p2"):
        P = t.builtin(name)
        total = Fraction(0)
        for tri in P.triangulation:
            piece = triangle_monomial_integral(tri[0], tri[1], tri[2], 0, 0)
            assert piece != 0
            total += abs(piece)
        assert total == P.volume, name


def test_lattice_point_counts(p1, p2, p1xp1, bl1p2):
    assert sorted(x[0] for x in p1.lattice_points(2).tolist()) == [-2, -1, 0, 1, 2]
    assert len(p1xp1.lattice_points(1)) == 9
    assert len(p2.lattice_points(1)) == 10
    assert len(bl1p2.lattice_points(1)) == 9


def test_lattice_scaling_count_is_ehrhart_like(p1):
    # interval: 2m + 1 points at every scale
    for m in (1, 3, 10, 17):
        assert len(p1.lattice_points(m)) == 2 * m + 1


def test_contains_lattice(p1, p2):
    assert p1.contains_lattice((2,), 2)
    assert not p1.contains_lattice((3,), 2)
    assert p2.contains_lattice((0, 0), 1)
    assert not p2.contains_lattice((2, 2), 1)


def test_lattice_cap_guard(p1):
    with pytest.raises(errors.OverflowGuard):
        p1.lattice_points(10**9)


def test_vertices_saturate_their_facets():
    for name in t.builtin_names():
        P = t.builtin(name)
        for v in P.vertices:
            tight = sum(
                1 for nu in P.normals if sum(a * b for a, b in zip(nu, v)) == 1
            )
            assert tight >= P.dim, (name, v)


def test_vertices_are_ccw_orderable_around_origin(bl1p2):
    vs = cyclic_ccw(bl1p2.vertices)
    # consecutive cross products positive: convex, counterclockwise, origin inside
    m = len(vs)
    for i in range(m):
        a, b = vs[i], vs[(i + 1) % m]
        assert a[0] * b[1] - a[1] * b[0] > 0


def test_to_dict_roundtrip():
    from toricgs.cli import polytope_from_dict

    for name in t.builtin_names():
        P = t.builtin(name)
        Q = polytope_from_dict(P.to_dict())
        assert Q.normals == P.normals
        assert Q.vertices == P.vertices


def test_facet_vertices_lie_on_facet(p2):
    for i, nu in enumerate(p2.normals):
        for v in p2.facet_vertices(i):
            assert sum(a * b for a, b in zip(nu, v)) == 1


def test_normals_f_and_vertices_f_are_floats(p2):
    assert p2.normals_f.dtype == np.float64
    assert p2.vertices_f.dtype == np.float64
    assert p2.vertices_f.shape == (3, 2)
