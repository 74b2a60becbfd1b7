"""Acceptance gate: nine numbered pass/fail criteria with pinned tolerances.

Each test covers exactly one criterion; the terminal summary prints one
PASS/FAIL line per criterion (see conftest.pytest_terminal_summary).
"""

import math
from fractions import Fraction

import numpy as np

import toricgs as t
import oracles
from conftest import run_cli


def _l2(v) -> float:
    return float(np.linalg.norm(np.asarray(v, dtype=float)))


def test_criterion_1_barycenter_futaki(p1, p2, p1xp1, bl1p2, g_one):
    # symmetric builtins: weighted barycenter vanishes and the Futaki
    # pairing is zero on a basis of directions
    for P in (p1, p2, p1xp1):
        assert _l2(t.weighted_barycenter(P, g_one)) < 1e-12, P
        for i in range(P.dim):
            xi = tuple(1 if k == i else 0 for k in range(P.dim))
            assert abs(t.futaki(P, g_one, xi)) < 1e-12, (P, xi)
    # the blown-up triangle is destabilized: nonzero barycenter whose signs
    # match an independent membership-grid integration
    b = np.asarray(t.weighted_barycenter(bl1p2, g_one), dtype=float)
    assert _l2(b) > 0.05
    area = oracles.grid_integral(bl1p2, lambda x: np.ones(len(x)), 400)
    gx = oracles.grid_integral(bl1p2, lambda x: x[:, 0], 400) / area
    gy = oracles.grid_integral(bl1p2, lambda x: x[:, 1], 400) / area
    assert math.copysign(1, b[0]) == math.copysign(1, gx)
    assert math.copysign(1, b[1]) == math.copysign(1, gy)


def test_criterion_2_kr_soliton_vs_grid(bl1p2, solved_kr_bl1p2):
    sol = solved_kr_bl1p2
    assert sol.iterations <= 30
    assert sol.residual < 1e-12  # sup norm of grad W / W
    xi = [float(x) for x in sol.xi]
    assert abs(xi[0] - xi[1]) <= 1e-10
    (grid_x, grid_y), _ = oracles.exp_energy_grid_argmin(
        bl1p2, lo=-2.0, hi=2.0, n=4001
    )
    assert abs(xi[0] - grid_x) <= 1e-3
    assert abs(xi[1] - grid_y) <= 1e-3
    g_star = t.WeightFunction.exp_affine(0, tuple(xi))
    assert _l2(t.weighted_barycenter(bl1p2, g_star)) < 1e-10


def test_criterion_3_mabuchi_soliton_exact(p1, p1xp1, bl1p2):
    for P in (p1, p1xp1):
        sol = t.solve_mabuchi_soliton(P)
        assert sol.b is not None
        assert all(x == 0 for x in sol.b), sol.b  # exact rational zero
    sol = t.solve_mabuchi_soliton(bl1p2)
    bx, by = (Fraction(x) for x in sol.b)
    verts = bl1p2.vertices
    mom = lambda i, j: oracles.polygon_monomial_integral(verts, i, j)
    # the affine-weight moment system int (1 + <b,x>) x dx = 0, exactly
    assert mom(1, 0) + bx * mom(2, 0) + by * mom(1, 1) == 0
    assert mom(0, 1) + bx * mom(1, 1) + by * mom(0, 2) == 0
    feasible_exact = min(1 + bx * v[0] + by * v[1] for v in verts) > 0
    assert sol.feasible == feasible_exact


def test_criterion_4_sg_lattice_and_anchors(p1, p2, g_one, g_exp_x):
    cases = [
        (p1, g_one, (1,)),
        (p1, g_exp_x, (1,)),
        (p2, g_one, (1, 0)),
    ]
    for P, g, a in cases:
        s_cont = t.s_g(P, g, a)
        for m in (10, 20, 40, 80):
            assert abs(t.s_g_lattice(P, g, a, m) - s_cont) <= 5.0 / m, (a, m)
    assert abs(t.s_g(p1, g_one, (1,)) - 1.0) <= 1e-9
    assert abs(t.s_g(p1, g_exp_x, (1,)) - 1.0 / math.tanh(1.0)) <= 1e-9


def test_criterion_5_delta_values_and_kr_direction_grid(
    p1, bl1p2, g_one, g_exp_x, solved_kr_bl1p2
):
    assert abs(t.delta_toric(p1, g_one) - 1.0) <= 1e-6
    # independent midpoint-sum oracle for delta(p1, e^x): the dual vertex
    # directions are +-1 and delta = min_a A(a)/S_g(a)
    m = 200_000
    h = 2.0 / m
    xs = -1.0 + h * (np.arange(m) + 0.5)
    w = np.exp(xs)
    den = float(np.sum(w))
    s_plus = float(np.sum((xs + 1.0) * w)) / den
    s_minus = float(np.sum((1.0 - xs) * w)) / den
    oracle = min(1.0 / s_plus, 1.0 / s_minus)
    d = t.delta_toric(p1, g_exp_x)
    assert abs(d - oracle) <= 1e-4
    assert abs(d - math.tanh(1.0)) <= 1e-4
    # solved soliton weight: A - S_g >= 0 up to tolerance over the angle grid
    g_star = solved_kr_bl1p2.weight
    worst = math.inf
    for theta in np.arange(0.0, 2.0 * math.pi, 0.01):
        a = (math.cos(theta), math.sin(theta))
        worst = min(worst, t.log_discrepancy(bl1p2, a) - t.s_g(bl1p2, g_star, a))
    assert worst >= -1e-6


def test_criterion_6_filtration_mass_and_abs_energy(p1, g_one, abs_x):
    for name in t.builtin_names():
        P = t.builtin(name)
        a = (1,) if P.dim == 1 else (1, 0)
        f = t.PLConvexFunction(P, ((a, 0),))
        V_g = t.weighted_volume(P, g_one)
        for m in (10, 20, 40, 80):
            sample = t.dh_g_filtration(P, g_one, f, m)
            assert abs(sample.total_mass - V_g) / V_g < 3.0 / m, (name, m)
    e_cont = t.e_g_na(p1, g_one, abs_x)
    assert abs(e_cont - 0.5) <= 1e-9
    lattice = t.dh_g_filtration(p1, g_one, abs_x, 200)
    assert abs(lattice.mean - e_cont) < 0.02


def test_criterion_7_ma_residual_symmetry_pushforward(p1, ma_solution_p1, g_one):
    g_skew = t.WeightFunction.exp_affine(0, (0.3,))
    solved = {id(g_one): ma_solution_p1, id(g_skew): t.solve_ma(p1, g_skew)}
    for g in (g_one, g_skew):
        out = solved[id(g)]
        assert out.residual < 1e-8
        report = t.pushforward_moments(out, g)
        for k in (0, 1, 2):
            assert report[k]["abs_diff"] < 1e-5, (g.kind, k)
    sym = ma_solution_p1.values
    assert float(np.max(np.abs(sym - sym[::-1]))) < 1e-8


def test_criterion_8_functional_suite(p1, ma_solution_p1, g_one, g_exp_x):
    u = t.random_potential(p1, seed=42)
    for g in (g_one, g_exp_x):
        D0 = t.functionals(u, g).D
        for kappa in (1.0, -1.0, 5.0, -5.0):
            assert abs(t.functionals(u.shifted(kappa), g).D - D0) < 1e-10
    u1 = t.random_potential(p1, seed=1)
    u2 = t.random_potential(p1, seed=2)
    for g in (g_one, g_exp_x):
        E01 = t.functionals(u1, g).E_g
        E02 = t.functionals(u2, g).E_g
        E12 = t.functionals(u2, g, u0_values=u1.values).E_g
        assert abs((E02 - E01) - E12) < 1e-8
    for g in (g_one, g_exp_x):
        for i in range(100):
            sample = t.random_potential(p1, seed=[8, i])
            F = t.functionals(sample, g)
            assert F.M >= F.D, (g.kind, i)
    F_star = t.functionals(ma_solution_p1, g_one)
    assert abs(F_star.M - F_star.D) < 1e-6
    report = t.inequality_suite(p1, g_exp_x, samples=100, seed=42)
    assert report["violations"] == {"a": 0, "b": 0, "c": 0, "d": 0}


def test_criterion_9_cli_determinism(golden_commands, golden_runs):
    for gid, argv in golden_commands:
        rerun = run_cli(argv, threads=1)
        assert rerun.returncode == 0, gid
        assert rerun.stdout == golden_runs[gid], f"{gid}: second run differs"
        threaded = run_cli(argv, threads=4)
        assert threaded.returncode == 0, gid
        assert threaded.stdout == golden_runs[gid], f"{gid}: thread count changed bytes"
