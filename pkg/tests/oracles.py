"""Self-contained reference computations used to cross-check the package.

Everything here is implemented from first principles (shoelace/fan moment
formulas, rational series, midpoint grids) so the tests compare the library
against independent arithmetic rather than against itself.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import product

import numpy as np


def frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    return Fraction(x).limit_denominator(10**12)


# ---------------------------------------------------------------------------
# exact polygon moments (2D) via fan decomposition from the origin
# ---------------------------------------------------------------------------

# integral over the unit triangle {s,t >= 0, s+t <= 1} of s^p t^q
def _unit_triangle_power(p: int, q: int) -> Fraction:
    return Fraction(math.factorial(p) * math.factorial(q), math.factorial(p + q + 2))


def triangle_monomial_integral(a, b, c, i: int, j: int) -> Fraction:
    """Integral of x^i y^j over the triangle (a, b, c), exact.

    Parameterize x = a + s(b-a) + t(c-a) over the unit triangle and expand
    the monomial with the binomial theorem; each s^p t^q term integrates to
    p! q! / (p+q+2)!.
    """
    ax, ay = frac(a[0]), frac(a[1])
    ux, uy = frac(b[0]) - ax, frac(b[1]) - ay
    vx, vy = frac(c[0]) - ax, frac(c[1]) - ay
    det = ux * vy - uy * vx
    total = Fraction(0)
    for p1 in range(i + 1):
        for p2 in range(i - p1 + 1):
            p3 = i - p1 - p2
            cx = (
                Fraction(math.factorial(i), math.factorial(p1) * math.factorial(p2) * math.factorial(p3))
                * ax**p1
                * ux**p2
                * vx**p3
            )
            for q1 in range(j + 1):
                for q2 in range(j - q1 + 1):
                    q3 = j - q1 - q2
                    cy = (
                        Fraction(
                            math.factorial(j),
                            math.factorial(q1) * math.factorial(q2) * math.factorial(q3),
                        )
                        * ay**q1
                        * uy**q2
                        * vy**q3
                    )
                    total += cx * cy * _unit_triangle_power(p2 + q2, p3 + q3)
    return det * total  # signed


def cyclic_ccw(vertices):
    """Vertices sorted counterclockwise by angle around the origin."""
    vs = [tuple(frac(x) for x in v) for v in vertices]
    return sorted(vs, key=lambda v: math.atan2(float(v[1]), float(v[0])))


def polygon_monomial_integral(vertices, i: int, j: int) -> Fraction:
    """Integral of x^i y^j over the convex polygon spanned by ``vertices``.

    The polygon is fanned from its first counterclockwise vertex; signed
    triangle contributions make the decomposition exact for any convex hull
    containing the origin or not.
    """
    vs = cyclic_ccw(vertices)
    total = Fraction(0)
    for k in range(1, len(vs) - 1):
        total += triangle_monomial_integral(vs[0], vs[k], vs[k + 1], i, j)
    return total


def interval_monomial_integral(lo, hi, i: int) -> Fraction:
    lo, hi = frac(lo), frac(hi)
    return (hi ** (i + 1) - lo ** (i + 1)) / (i + 1)


# ---------------------------------------------------------------------------
# divided differences of exp, exact rational series
# ---------------------------------------------------------------------------


def dd_exp_series(nodes, rel_tol: Fraction = Fraction(1, 10**28)):
    """Divided difference of exp at the given rational nodes.

    Hermite-Genocchi series: dd[x_0..x_k] = sum_j h_j(x) / (k + j)!, where
    h_j is the complete homogeneous symmetric polynomial, computed by the
    standard one-variable-at-a-time DP in exact arithmetic.  Exact rational
    partial sums mean there is no cancellation; the only approximation is
    the final truncation, bounded by the tolerance.
    """
    xs = [frac(x) for x in nodes]
    k = len(xs) - 1
    total = Fraction(0)
    h_prev = None  # h_{j-1} over prefixes
    fact = Fraction(math.factorial(k))
    j = 0
    small = 0
    while True:
        if j == 0:
            h_cur = [Fraction(1)] * (k + 1)
        else:
            h_cur = []
            for i, x in enumerate(xs):
                prev_prefix = h_cur[i - 1] if i > 0 else Fraction(0)
                h_cur.append(prev_prefix + x * h_prev[i])
        term = h_cur[k] / fact
        total += term
        if total != 0 and abs(term) < rel_tol * abs(total):
            small += 1
            if small >= 3:
                return total
        else:
            small = 0
        if j > 400:
            raise RuntimeError("series did not settle")
        h_prev = h_cur
        fact *= k + j + 1
        j += 1


# ---------------------------------------------------------------------------
# brute-force membership grids
# ---------------------------------------------------------------------------


def grid_points(P, m: int):
    """Midpoint grid over the bounding box, filtered to the polytope."""
    verts = np.array([[float(x) for x in v] for v in P.vertices])
    lo, hi = verts.min(axis=0), verts.max(axis=0)
    axes = [lo[d] + (hi[d] - lo[d]) * (np.arange(m) + 0.5) / m for d in range(P.dim)]
    pts = np.array(list(product(*axes)))
    normals = np.array([[float(x) for x in nu] for nu in P.normals])
    inside = np.all(pts @ normals.T <= 1.0 + 1e-12, axis=1)
    cell = float(np.prod((hi - lo) / m))
    return pts[inside], cell


def grid_integral(P, fn, m: int) -> float:
    pts, cell = grid_points(P, m)
    return float(np.sum(fn(pts)) * cell)


# ---------------------------------------------------------------------------
# brute-force minimization of the exponential energy W(xi) = int_P e^<xi,x>
# ---------------------------------------------------------------------------


def _dd1_exp_vec(a, b):
    """(e^a - e^b)/(a - b) elementwise, stable through coincident entries."""
    d = a - b
    safe = np.where(d != 0.0, d, 1.0)
    ratio = np.where(d != 0.0, np.expm1(d) / safe, 1.0)
    return np.exp(b) * ratio


def _dd2_exp_vec(a, b, c):
    """Second divided difference of exp on three value arrays.

    Sorted triples with a noticeable spread use the Newton quotient of two
    first divided differences; nearly coincident triples switch to the
    mean-centered series 1/2 - e2/4! + e3/5! + e2^2/6! (elementary-symmetric
    e_k of the centered values), whose truncation error is far below 1e-15
    at the 1e-3 crossover.
    """
    v = np.sort(np.stack([a, b, c]), axis=0)
    lo, mid, hi = v[0], v[1], v[2]
    wide = (hi - lo) > 1e-3
    den = np.where(wide, hi - lo, 1.0)
    out_wide = (_dd1_exp_vec(hi, mid) - _dd1_exp_vec(lo, mid)) / den
    mu = (lo + mid + hi) / 3.0
    x0, x1, x2 = lo - mu, mid - mu, hi - mu
    e2 = x0 * x1 + x0 * x2 + x1 * x2
    e3 = x0 * x1 * x2
    out_narrow = np.exp(mu) * (0.5 - e2 / 24.0 + e3 / 120.0 + e2 * e2 / 720.0)
    return np.where(wide, out_wide, out_narrow)


def exp_energy_on_grid(P, xi) -> float:
    """W(xi) = integral of e^<xi, x> over a 2D polytope, per-triangle exact."""
    total = 0.0
    for tri in P.triangulation:
        V = np.array([[float(c) for c in v] for v in tri])
        area = 0.5 * abs(
            (V[1, 0] - V[0, 0]) * (V[2, 1] - V[0, 1])
            - (V[2, 0] - V[0, 0]) * (V[1, 1] - V[0, 1])
        )
        vals = [np.array([xi[0] * V[k, 0] + xi[1] * V[k, 1]]) for k in range(3)]
        total += 2.0 * area * float(_dd2_exp_vec(*vals)[0])
    return total


def exp_energy_grid_argmin(P, lo=-2.0, hi=2.0, n=4001, block=64):
    """Argmin of W over the n x n grid on [lo, hi]^2, evaluated in row blocks."""
    tri_data = []
    for tri in P.triangulation:
        V = np.array([[float(c) for c in v] for v in tri])
        area = 0.5 * abs(
            (V[1, 0] - V[0, 0]) * (V[2, 1] - V[0, 1])
            - (V[2, 0] - V[0, 0]) * (V[1, 1] - V[0, 1])
        )
        tri_data.append((V, area))
    xs = np.linspace(lo, hi, n)
    best_val = math.inf
    best_xy = (math.nan, math.nan)
    for start in range(0, n, block):
        X = xs[start : start + block][:, None]
        Y = xs[None, :]
        W = np.zeros((X.shape[0], n))
        for V, area in tri_data:
            A = [X * V[k, 0] + Y * V[k, 1] for k in range(3)]
            W += (2.0 * area) * _dd2_exp_vec(A[0], A[1], A[2])
        k = int(np.argmin(W))
        i, j = divmod(k, n)
        if W[i, j] < best_val:
            best_val = float(W[i, j])
            best_xy = (float(X[i, 0]), float(xs[j]))
    return best_xy, best_val
