"""Weighted volumes, barycenters, Futaki invariants, and soliton solvers.

The weighted volume convention is V_g = n! * integral_P g dx, so that for
g = 1 it matches the degree-style normalization rather than the bare
Euclidean volume.  The generalized Futaki invariant on the torus directions
reduces to minus the weighted barycenter pairing, so "Futaki vanishes"
and "weighted barycenter = 0" are the same criterion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _exact, quadrature
from .errors import MaxIterations, SingularMomentMatrix
from .polytope import LabelledPolytope
from .quadrature import WeightFunction, encode_number

# ---------------------------------------------------------------------------
# volumes, marginals, barycenters, Futaki
# ---------------------------------------------------------------------------


def weighted_volume(P: LabelledPolytope, g: WeightFunction) -> float:
    """V_g = n! * integral_P g dx."""
    g.check_positive(P)
    return math.factorial(P.dim) * quadrature.integrate(P, g)[0]


def weighted_volume_exact(P: LabelledPolytope, g: WeightFunction) -> Fraction:
    """Exact rational V_g for polynomial-kind weights with rational data."""
    poly = g.as_poly(P.dim)
    return math.factorial(P.dim) * quadrature.integrate_exact_poly(P, poly)


def dh_marginal(P: LabelledPolytope, a, t: float) -> float:
    """Density at t of the pushforward of Lebesgue measure under <a, .>.

    Piecewise polynomial of degree <= n-1 in t, supported on
    [support_min, support_max] of the direction, integrating to vol(P).
    For a unit direction this is the (n-1)-volume of the slice
    P intersect {<a,x> = t}.  Computed as a sum of normalized B-splines,
    one per triangulation simplex, with exact tie detection at the knots.
    """
    a = tuple(_coerce_direction(a))
    if all(x == 0 for x in a):
        raise ValueError("direction must be nonzero")
    n = P.dim
    t = float(t)
    total = 0.0
    for simplex in P.triangulation:
        nodes = sorted(_exact.dot(a, v) for v in simplex)
        edges = [tuple(x - y for x, y in zip(p, simplex[0])) for p in simplex[1:]]
        vol = abs(_exact.det([list(e) for e in edges])) / Fraction(math.factorial(n))
        if vol == 0:
            continue
        total += float(vol) * _mspline(nodes, t, n)
    return total


def _coerce_direction(a):
    if np.isscalar(a):
        a = (a,)
    out = []
    for x in a:
        if isinstance(x, (int, Fraction)):
            out.append(Fraction(x))
        elif isinstance(x, str):
            out.append(Fraction(x))
        else:
            out.append(Fraction(float(x)).limit_denominator(10**12))
    return out


def _plus_power(x: float, e: int) -> float:
    if e == 0:
        return 1.0 if x >= 0 else 0.0
    return x**e if x > 0 else 0.0


def _mspline(nodes, t: float, n: int) -> float:
    """Normalized B-spline M(t | nodes) = n * dd[(x - t)_+^{n-1}].

    ``nodes`` are sorted exact rationals so ties are grouped exactly; the
    confluent entries use the derivative values of the truncated power.
    """
    zf = [float(z) for z in nodes]
    col = [_plus_power(z - t, n - 1) for z in zf]
    m = len(nodes)
    for j in range(1, m):
        nxt = []
        for i in range(m - j):
            if nodes[i + j] == nodes[i]:
                # j-th derivative of (x-t)_+^{n-1} at the tied node, over j!
                if j <= n - 1:
                    coeff = math.comb(n - 1, j)
                    nxt.append(coeff * _plus_power(zf[i] - t, n - 1 - j))
                else:
                    nxt.append(0.0)
            else:
                nxt.append((col[i + 1] - col[i]) / (zf[i + j] - zf[i]))
        col = nxt
    return n * col[0]


def weighted_barycenter(P: LabelledPolytope, g: WeightFunction) -> np.ndarray:
    """b_g with components integral(x_i g) / integral(g) over P."""
    g.check_positive(P)
    mass, _ = quadrature.integrate(P, g)
    out = np.empty(P.dim)
    for i in range(P.dim):
        alpha = tuple(int(i == j) for j in range(P.dim))
        out[i] = quadrature.integrate(P, g, alpha)[0] / mass
    return out


def weighted_barycenter_exact(P: LabelledPolytope, g: WeightFunction):
    """Exact rational weighted barycenter for polynomial-kind weights."""
    poly = g.as_poly(P.dim)
    mass = quadrature.integrate_exact_poly(P, poly)
    out = []
    for i in range(P.dim):
        alpha = tuple(int(i == j) for j in range(P.dim))
        num = quadrature.integrate_exact_poly(
            P, quadrature._poly_mul(poly, quadrature._monomial(alpha))
        )
        out.append(num / mass)
    return tuple(out)


def futaki(P: LabelledPolytope, g: WeightFunction, xi) -> float:
    """Generalized Futaki invariant of the torus direction xi.

    Fut_g(xi) = -(n!/V_g) * integral_P <xi,x> g dx, which equals
    -<xi, weighted_barycenter(P, g)>; it vanishes for all xi exactly when
    the weighted barycenter does.
    """
    g.check_positive(P)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    mass, _ = quadrature.integrate(P, g)
    acc = 0.0
    for i in range(P.dim):
        if xi[i] == 0:
            continue
        alpha = tuple(int(i == j) for j in range(P.dim))
        acc += xi[i] * quadrature.integrate(P, g, alpha)[0]
    return -acc / mass


# ---------------------------------------------------------------------------
# soliton solvers
# ---------------------------------------------------------------------------


@dataclass
class SolitonSolution:
    """Result of a soliton solve.

    ``xi`` is the vector field parameter (Kähler–Ricci case), ``b`` the
    affine slope (Mabuchi case); ``weight`` is the induced weight function,
    ``residual`` the sup-norm of its weighted barycenter, and ``feasible``
    records positivity of the weight on the polytope (exact at vertices).
    """

    kind: str
    weight: WeightFunction
    residual: float
    feasible: bool
    xi: np.ndarray | None = None
    b: tuple | None = None
    iterations: int = 0
    history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d: dict = {
            "kind": self.kind,
            "residual": self.residual,
            "feasible": self.feasible,
            "iterations": self.iterations,
            "weight": self.weight.to_dict(),
        }
        if self.xi is not None:
            d["xi"] = [float(x) for x in self.xi]
        if self.b is not None:
            d["b"] = [encode_number(x) for x in self.b]
        return d


def _exp_moments(P: LabelledPolytope, xi: np.ndarray):
    """W, grad W, Hess W for W(xi) = integral_P e^{<xi,x>} dx."""
    n = P.dim
    g = WeightFunction.exp_affine(0.0, tuple(float(x) for x in xi))
    W = quadrature.integrate(P, g)[0]
    grad = np.empty(n)
    hess = np.empty((n, n))
    for i in range(n):
        ei = tuple(int(i == j) for j in range(n))
        grad[i] = quadrature.integrate(P, g, ei)[0]
    for i in range(n):
        for j in range(i, n):
            a = tuple(int(i == k) + int(j == k) for k in range(n))
            hess[i, j] = hess[j, i] = quadrature.integrate(P, g, a)[0]
    return W, grad, hess


def solve_kr_soliton(
    P: LabelledPolytope, tol: float = 1e-12, max_iter: int = 200
) -> SolitonSolution:
    """Minimize W(xi) = integral_P e^{<xi,x>} dx by damped Newton.

    W is smooth, strictly convex, and proper because 0 is interior to P, so
    the minimizer exists and is unique; at it the weighted barycenter of
    e^{<xi,x>} vanishes.  Convergence criterion: |grad W| / W < tol.
    """
    n = P.dim
    xi = np.zeros(n)
    W, grad, hess = _exp_moments(P, xi)
    history = [float(np.linalg.norm(grad) / W)]
    for it in range(1, max_iter + 1):
        if history[-1] < tol:
            break
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            raise SingularMomentMatrix("exponential moment Hessian is singular")
        slope = float(grad @ step)
        t = 1.0
        for _ in range(60):
            W_new = quadrature.integrate(
                P, WeightFunction.exp_affine(0.0, tuple(xi + t * step))
            )[0]
            if W_new <= W + 1e-4 * t * slope or t < 1e-18:
                break
            t *= 0.5
        xi = xi + t * step
        W, grad, hess = _exp_moments(P, xi)
        history.append(float(np.linalg.norm(grad) / W))
    else:
        raise MaxIterations(
            f"Newton did not reach |grad W|/W < {tol} in {max_iter} iterations"
        )
    weight = WeightFunction.exp_affine(0.0, tuple(float(x) for x in xi))
    residual = float(np.max(np.abs(weighted_barycenter(P, weight))))
    return SolitonSolution(
        kind="kr",
        weight=weight,
        residual=residual,
        feasible=True,
        xi=xi,
        iterations=len(history) - 1,
        history=history,
    )


def solve_mabuchi_soliton(P: LabelledPolytope) -> SolitonSolution:
    """Solve the affine moment system for the Mabuchi weight g = 1 + <b,x>.

    The linear system M b = -beta (M the second moment matrix, beta the
    first moments) is solved in exact rational arithmetic, so the defining
    equations integral_P x_i (1 + <b,x>) dx = 0 hold identically and the
    reported residual is exactly zero.  Feasibility (g > 0 on P) is decided
    exactly at the vertices.
    """
    n = P.dim
    basis = [tuple(int(i == j) for j in range(n)) for i in range(n)]
    beta = [quadrature.moment_exact(P, e) for e in basis]
    M = [
        [
            quadrature.moment_exact(
                P, tuple(ei[k] + ej[k] for k in range(n))
            )
            for ej in basis
        ]
        for ei in basis
    ]
    b = _exact.solve(M, [-x for x in beta])
    if b is None:
        raise SingularMomentMatrix("second moment matrix is singular")
    weight = WeightFunction.affine(Fraction(1), b)
    margins = [1 + _exact.dot(b, v) for v in P.vertices]
    feasible = min(margins) > 0
    # defining equations hold identically in rational arithmetic
    residual_terms = [
        beta[i] + sum(M[i][j] * b[j] for j in range(n)) for i in range(n)
    ]
    residual = float(max(abs(r) for r in residual_terms)) if n else 0.0
    return SolitonSolution(
        kind="mabuchi",
        weight=weight,
        residual=residual,
        feasible=bool(feasible),
        b=tuple(b),
        iterations=0,
    )
