"""Weight functions on a polytope and their exact/adaptive integration.

Supported weight kinds: constant, affine a0 + <b,x>, exponential-affine
exp(a0 + <b,x>), and polynomial.  Polynomial integrands are integrated
exactly per triangulation simplex through the Dirichlet moment formula in
barycentric coordinates; exponential-affine integrands use the closed-form
divided-difference representation of the simplex exponential integral, with
a Grundmann-Moller quadrature fallback when the exponent geometry makes the
closed form cancellation-prone.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from . import _exact
from .errors import PositivityViolated, QuadratureNotConverged, SchemaViolation
from .polytope import LabelledPolytope

# ---------------------------------------------------------------------------
# number <-> JSON helpers shared by the serialization layer
# ---------------------------------------------------------------------------


def encode_number(x):
    """Encode a number for JSON: rationals as "p/q" strings, floats as-is."""
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, (int, float)):
        return x
    raise TypeError(f"cannot encode {type(x).__name__}")


def decode_number(x, pointer: str = ""):
    """Decode a JSON number: ints and "p/q"/decimal strings become exact."""
    if isinstance(x, bool):
        raise SchemaViolation("expected a number, got a boolean", pointer)
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return x
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError) as exc:
            raise SchemaViolation(f"invalid number string {x!r}: {exc}", pointer)
    raise SchemaViolation(f"expected a number, got {type(x).__name__}", pointer)


# ---------------------------------------------------------------------------
# weight functions
# ---------------------------------------------------------------------------

_KINDS = ("constant", "affine", "exp_affine", "polynomial")


@dataclass(frozen=True, eq=False)
class WeightFunction:
    """A positive weight g on a polytope.

    ``a0``/``b`` hold the constant and linear parts for the affine and
    exponential-affine kinds; ``coeffs`` holds (powers, coefficient) pairs
    for the polynomial kind.  Parameters may be exact rationals, in which
    case the polynomial-kind integration paths stay exact end to end.
    """

    kind: str
    a0: Fraction | float = Fraction(0)
    b: tuple = ()
    coeffs: tuple = ()

    # -- constructors -------------------------------------------------------

    @staticmethod
    def constant(c) -> "WeightFunction":
        return WeightFunction("constant", a0=_num(c))

    @staticmethod
    def affine(a0, b) -> "WeightFunction":
        return WeightFunction("affine", a0=_num(a0), b=tuple(_num(x) for x in b))

    @staticmethod
    def exp_affine(a0, b) -> "WeightFunction":
        return WeightFunction("exp_affine", a0=_num(a0), b=tuple(_num(x) for x in b))

    @staticmethod
    def polynomial(coeffs) -> "WeightFunction":
        cc = tuple(
            (tuple(int(p) for p in powers), _num(c)) for powers, c in coeffs
        )
        if not cc:
            raise SchemaViolation("polynomial weight needs at least one term")
        return WeightFunction("polynomial", coeffs=cc)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise SchemaViolation(f"unknown weight kind {self.kind!r}")

    # -- structure ----------------------------------------------------------

    @property
    def dim(self) -> int | None:
        """Ambient dimension implied by the parameters (None = any)."""
        if self.kind in ("affine", "exp_affine"):
            return len(self.b)
        if self.kind == "polynomial":
            return len(self.coeffs[0][0])
        return None

    @property
    def is_polynomial_kind(self) -> bool:
        return self.kind in ("constant", "affine", "polynomial")

    def as_poly(self, n: int) -> dict[tuple[int, ...], Fraction | float]:
        """The weight as a sparse monomial dict (polynomial kinds only)."""
        zero = (0,) * n
        if self.kind == "constant":
            return {zero: self.a0}
        if self.kind == "affine":
            poly = {zero: self.a0}
            for i, bi in enumerate(self.b):
                if bi != 0:
                    key = tuple(int(i == j) for j in range(n))
                    poly[key] = poly.get(key, 0) + bi
            return poly
        if self.kind == "polynomial":
            poly: dict = {}
            for powers, c in self.coeffs:
                poly[powers] = poly.get(powers, 0) + c
            return poly
        raise ValueError("exponential-affine weight has no polynomial form")

    # -- evaluation ---------------------------------------------------------

    @cached_property
    def _bf(self) -> np.ndarray:
        return np.array([float(x) for x in self.b], dtype=float)

    def value(self, x) -> np.ndarray:
        """Evaluate on points of shape (..., n)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full(x.shape[:-1], float(self.a0))
        if self.kind == "affine":
            return float(self.a0) + x @ self._bf
        if self.kind == "exp_affine":
            return np.exp(float(self.a0) + x @ self._bf)
        out = np.zeros(x.shape[:-1])
        for powers, c in self.coeffs:
            term = np.full(x.shape[:-1], float(c))
            for j, p in enumerate(powers):
                if p:
                    term = term * x[..., j] ** p
            out += term
        return out

    def grad(self, x) -> np.ndarray:
        """Gradient on points of shape (..., n), returned with shape (..., n)."""
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        if self.kind == "constant":
            return np.zeros(x.shape)
        if self.kind == "affine":
            return np.broadcast_to(self._bf, x.shape).copy()
        if self.kind == "exp_affine":
            return self.value(x)[..., None] * self._bf
        out = np.zeros(x.shape)
        for powers, c in self.coeffs:
            for j, p in enumerate(powers):
                if not p:
                    continue
                term = np.full(x.shape[:-1], float(c) * p)
                for k, q in enumerate(powers):
                    e = q - 1 if k == j else q
                    if e:
                        term = term * x[..., k] ** e
                out[..., j] += term
        return out

    # -- bounds and positivity ---------------------------------------------

    def range_on(self, P: LabelledPolytope) -> tuple[float, float]:
        """(min_P g, max_P g); exact at vertices for the affine-based kinds."""
        if self.kind == "constant":
            c = float(self.a0)
            return c, c
        if self.kind in ("affine", "exp_affine"):
            vals = [self.a0 + _exact.dot(self.b, v) for v in self.vertex_args(P)]
            lo, hi = min(vals), max(vals)
            if self.kind == "exp_affine":
                return math.exp(float(lo)), math.exp(float(hi))
            return float(lo), float(hi)
        samples = _positivity_samples(P)
        vals = self.value(samples)
        return float(np.min(vals)), float(np.max(vals))

    def vertex_args(self, P: LabelledPolytope):
        """Exact affine arguments <b, v> at the polytope vertices."""
        return [tuple(x for x in v) for v in P.vertices]

    def check_positive(self, P: LabelledPolytope) -> None:
        """Certify g > 0 on P; exact for affine-based kinds.

        Polynomial weights get a dense-sample certificate: the sampled
        minimum must clear a small relative margin, otherwise the weight is
        rejected rather than silently trusted.
        """
        if self.kind == "constant":
            if self.a0 <= 0:
                raise PositivityViolated(f"constant weight {self.a0} is not positive")
            return
        if self.kind in ("affine", "exp_affine"):
            vals = [self.a0 + _exact.dot(self.b, v) for v in P.vertices]
            if self.kind == "affine" and min(vals) <= 0:
                raise PositivityViolated(
                    "affine weight is non-positive at a vertex (exact check)"
                )
            return
        samples = _positivity_samples(P)
        vals = self.value(samples)
        lo = float(np.min(vals))
        hi = float(np.max(vals))
        if lo <= 1e-9 * max(1.0, abs(hi)):
            raise PositivityViolated(
                f"polynomial weight fails the dense positivity certificate "
                f"(sampled min {lo:.3e})"
            )

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind in ("constant", "affine", "exp_affine"):
            d["a0"] = encode_number(self.a0)
        if self.kind in ("affine", "exp_affine"):
            d["b"] = [encode_number(x) for x in self.b]
        if self.kind == "polynomial":
            d["coeffs"] = [
                {"powers": list(p), "c": encode_number(c)} for p, c in self.coeffs
            ]
        return d

    @staticmethod
    def from_dict(d: dict, pointer: str = "/g") -> "WeightFunction":
        if not isinstance(d, dict):
            raise SchemaViolation("weight must be an object", pointer)
        kind = d.get("kind")
        if kind not in _KINDS:
            raise SchemaViolation(
                f"weight kind must be one of {_KINDS}, got {kind!r}", f"{pointer}/kind"
            )
        if kind == "constant":
            return WeightFunction.constant(decode_number(d.get("a0", 1), f"{pointer}/a0"))
        if kind in ("affine", "exp_affine"):
            if "b" not in d or not isinstance(d["b"], list):
                raise SchemaViolation("affine weight needs a list 'b'", f"{pointer}/b")
            a0 = decode_number(d.get("a0", 0), f"{pointer}/a0")
            b = [decode_number(x, f"{pointer}/b/{i}") for i, x in enumerate(d["b"])]
            ctor = WeightFunction.affine if kind == "affine" else WeightFunction.exp_affine
            return ctor(a0, b)
        terms = d.get("coeffs")
        if not isinstance(terms, list) or not terms:
            raise SchemaViolation(
                "polynomial weight needs a non-empty list 'coeffs'", f"{pointer}/coeffs"
            )
        coeffs = []
        for i, t in enumerate(terms):
            if not isinstance(t, dict) or "powers" not in t or "c" not in t:
                raise SchemaViolation(
                    "each coefficient needs 'powers' and 'c'", f"{pointer}/coeffs/{i}"
                )
            coeffs.append(
                (t["powers"], decode_number(t["c"], f"{pointer}/coeffs/{i}/c"))
            )
        return WeightFunction.polynomial(coeffs)


def _num(x):
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, float):
        return x
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot use {type(x).__name__} as a weight parameter")


def _positivity_samples(P: LabelledPolytope) -> np.ndarray:
    """Vertices plus a dense interior grid used by sampling certificates."""
    pieces = [P.vertices_f]
    m = 24
    try:
        pieces.append(P.lattice_points(m).astype(float) / m)
    except Exception:
        pass
    return np.concatenate(pieces, axis=0)


# ---------------------------------------------------------------------------
# sparse polynomial helpers (multi-index dicts)
# ---------------------------------------------------------------------------


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for a, ca in p.items():
        for b, cb in q.items():
            key = tuple(x + y for x, y in zip(a, b))
            out[key] = out.get(key, 0) + ca * cb
    return {k: v for k, v in out.items() if v != 0}


def _poly_pow(p: dict, k: int, n: int) -> dict:
    out = {(0,) * n: 1}
    for _ in range(k):
        out = _poly_mul(out, p)
    return out


def _monomial(alpha: tuple[int, ...]) -> dict:
    return {tuple(int(a) for a in alpha): 1}


def _substitute_barycentric(poly_x: dict, s0, edges, n: int) -> dict:
    """Rewrite an x-polynomial in simplex coordinates x = s0 + sum_i t_i e_i."""
    lines = []
    for j in range(n):
        line = {(0,) * n: s0[j]}
        for i in range(n):
            if edges[i][j] != 0:
                key = tuple(int(i == k) for k in range(n))
                line[key] = edges[i][j]
        lines.append(line)
    out: dict = {}
    for beta, c in poly_x.items():
        term = {(0,) * n: c}
        for j, bj in enumerate(beta):
            if bj:
                term = _poly_mul(term, _poly_pow(lines[j], bj, n))
        for k, v in term.items():
            out[k] = out.get(k, 0) + v
    return out


def _dirichlet_value(tpoly: dict, n: int):
    """Integrate a t-polynomial over the standard simplex exactly.

    Uses the Dirichlet formula: the integral of t^kappa over the standard
    simplex is (prod kappa_i!) / (n + |kappa|)!.
    """
    total = 0
    for kappa, c in tpoly.items():
        num = 1
        for k in kappa:
            num *= math.factorial(k)
        total = total + c * Fraction(num, math.factorial(n + sum(kappa)))
    return total


def _simplex_edges(simplex):
    s0 = simplex[0]
    return s0, [tuple(x - y for x, y in zip(p, s0)) for p in simplex[1:]]


def _simplex_det(edges) -> Fraction:
    return _exact.det([list(e) for e in edges])


def simplex_poly_integral(simplex, poly_x: dict):
    """Exact integral of a polynomial over a rational simplex.

    Stays in rational arithmetic whenever the polynomial coefficients are
    rational; mixed float coefficients degrade gracefully to floats.
    """
    n = len(simplex) - 1
    s0, edges = _simplex_edges(simplex)
    detE = abs(_simplex_det(edges))
    if detE == 0:
        return Fraction(0)
    tpoly = _substitute_barycentric(poly_x, s0, edges, n)
    return detE * _dirichlet_value(tpoly, n)


# ---------------------------------------------------------------------------
# divided differences of exp (confluent-capable, numerically stable)
# ---------------------------------------------------------------------------

_SERIES_SPREAD = 3.0
_SERIES_TERMS = 120


def exp_divided_difference(nodes) -> float:
    """Divided difference of exp over a node multiset (repeats allowed).

    Equals the integral of exp(<y, t>) over the standard simplex with the
    nodes (minus the first) as exponent coefficients, which is how the
    simplex exponential integrals below consume it.  Centered power-series
    evaluation keeps clustered nodes exact (no cancellation); well-spread
    nodes use the confluent Newton table.
    """
    nodes = [float(x) for x in nodes]
    N = len(nodes) - 1
    if N < 0:
        raise ValueError("need at least one node")
    if N == 0:
        return math.exp(nodes[0])
    m = math.fsum(nodes) / (N + 1)
    y = [x - m for x in nodes]
    sigma = max(abs(v) for v in y)
    if sigma <= _SERIES_SPREAD:
        return math.exp(m) * _exp_dd_series(y, N)
    return _exp_dd_table(sorted(nodes))


def _exp_dd_series(y, N: int) -> float:
    # sum_j h_j(y) / (N+j)! with h_j the complete homogeneous symmetric
    # polynomials; h recursion is cancellation-free in absolute scale sigma^j
    h = [1.0] + [0.0] * _SERIES_TERMS
    for v in y:
        if v == 0.0:
            continue
        for j in range(1, _SERIES_TERMS + 1):
            h[j] += v * h[j - 1]
    total = 0.0
    fact = math.factorial(N)
    small = 0
    for j in range(_SERIES_TERMS + 1):
        term = h[j] / fact
        total += term
        fact *= N + j + 1
        # centered node sets can zero out isolated (e.g. odd-degree) terms,
        # so stop only after two consecutive negligible terms
        if j > 4 and abs(term) < 1e-22 * abs(total):
            small += 1
            if small >= 2:
                break
        else:
            small = 0
    return total

def _exp_dd_table(z) -> float:
    # confluent Newton table; ties (exact equality) use the derivative value
    col = [math.exp(v) for v in z]
    n1 = len(z)
    for j in range(1, n1):
        fj = math.factorial(j)
        nxt = []
        for i in range(n1 - j):
            if z[i + j] == z[i]:
                nxt.append(math.exp(z[i]) / fj)
            else:
                nxt.append((col[i + 1] - col[i]) / (z[i + j] - z[i]))
        col = nxt
    return col[0]


def _simplex_exp_nodes(simplex, b):
    s0, edges = _simplex_edges(simplex)
    c = [float(_exact_or_float_dot(b, e)) for e in edges]
    return s0, edges, c


def _exact_or_float_dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def simplex_exp_integral(simplex, a0, b, alpha=None, tol_simplex: float = 1e-10):
    """Integral of x^alpha * exp(a0 + <b,x>) over a rational simplex.

    Closed form: after mapping to the standard simplex the integral becomes
    a sum of confluent divided differences of exp (one node per simplex
    vertex, repeated once more per monomial power).  When the exponent
    geometry is genuinely cancellation-prone -- some edge pairing nearly
    degenerate while the overall spread is large -- the routine falls back
    to Grundmann-Moller quadrature with one refinement.

    Returns (value, error_estimate).
    """
    n = len(simplex) - 1
    s0, edges, c = _simplex_exp_nodes(simplex, b)
    detE = abs(_simplex_det(edges))
    if detE == 0:
        return 0.0, 0.0
    base_nodes = [0.0] + c
    gaps = [
        abs(u - v) for u, v in itertools.combinations(base_nodes, 2)
    ]
    min_gap = min(gaps) if gaps else math.inf
    mean = math.fsum(base_nodes) / len(base_nodes)
    sigma = max(abs(v - mean) for v in base_nodes)
    if min_gap < 1e-8 and sigma > _SERIES_SPREAD:
        f = _exp_monomial_evaluator(a0, b, alpha)
        return gm_integrate(simplex, f, tol_simplex=tol_simplex)

    pref = float(detE) * math.exp(float(a0) + float(_exact_or_float_dot(b, s0)))
    if alpha is None or not any(alpha):
        val = pref * exp_divided_difference(base_nodes)
        return val, abs(val) * 1e-14
    tpoly = _substitute_barycentric(_monomial(alpha), s0, edges, n)
    total = 0.0
    for kappa, coeff in tpoly.items():
        if coeff == 0:
            continue
        nodes = [0.0]
        kfact = 1
        for i, k in enumerate(kappa):
            nodes.extend([c[i]] * (k + 1))
            kfact *= math.factorial(k)
        total += float(coeff) * kfact * exp_divided_difference(nodes)
    val = pref * total
    return val, abs(val) * 1e-13


def _exp_monomial_evaluator(a0, b, alpha):
    a0f = float(a0)
    bf = np.array([float(x) for x in b], dtype=float)

    def f(x: np.ndarray) -> np.ndarray:
        out = np.exp(a0f + x @ bf)
        if alpha is not None:
            for j, p in enumerate(alpha):
                if p:
                    out = out * x[:, j] ** p
        return out

    return f


# ---------------------------------------------------------------------------
# Grundmann-Moller quadrature on simplices
# ---------------------------------------------------------------------------

GM_ORDER = 3  # polynomial degree 2s+1 = 7


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


@lru_cache(maxsize=None)
def _gm_rule(n: int, s: int):
    """Grundmann-Moller rule of degree 2s+1 on the standard n-simplex.

    Returns (barycentric point matrix, weight vector); the weighted sum of
    f at the barycentric points approximates the integral over a unit-volume
    reference scaled so that sum(weights) = 1/n!.
    """
    d = 2 * s + 1
    pts = []
    wts = []
    for i in range(s + 1):
        denom = d + n - 2 * i
        w = Fraction((-1) ** i * denom**d, 4**s * math.factorial(i) * math.factorial(d + n - i))
        for part in _compositions(s - i, n + 1):
            pts.append([Fraction(2 * k + 1, denom) for k in part])
            wts.append(w)
    P = np.array([[float(x) for x in row] for row in pts], dtype=float)
    W = np.array([float(w) for w in wts], dtype=float)
    return P, W


def _split_simplex(verts: np.ndarray) -> list[np.ndarray]:
    """Partition a simplex for the refinement pass.

    1D: halves; 2D: the four midpoint triangles; higher dimensions cone the
    centroid over the facets (a valid partition, used only for error
    estimation).
    """
    n = verts.shape[1]
    if n == 1:
        m = (verts[0] + verts[1]) / 2
        return [np.array([verts[0], m]), np.array([m, verts[1]])]
    if n == 2:
        v0, v1, v2 = verts
        m01, m02, m12 = (v0 + v1) / 2, (v0 + v2) / 2, (v1 + v2) / 2
        return [
            np.array([v0, m01, m02]),
            np.array([v1, m01, m12]),
            np.array([v2, m02, m12]),
            np.array([m01, m12, m02]),
        ]
    c = verts.mean(axis=0)
    out = []
    for i in range(len(verts)):
        child = np.vstack([c[None, :], np.delete(verts, i, axis=0)])
        out.append(child)
    return out


def _gm_apply(verts: np.ndarray, f, s: int) -> float:
    n = verts.shape[1]
    bary, w = _gm_rule(n, s)
    pts = bary @ verts
    detE = abs(np.linalg.det((verts[1:] - verts[0]).T))
    return float(detE * np.dot(w, f(pts)))


def gm_integrate(simplex, f, s: int = GM_ORDER, tol_simplex: float = 1e-10):
    """Grundmann-Moller integral of f over a simplex with one refinement.

    Returns (value, error_estimate); the estimate is Richardson-style for
    the regularly refined dimensions (n <= 2) and the conservative
    coarse/fine difference otherwise.  Raises QuadratureNotConverged when
    the estimate exceeds ``tol_simplex`` (pass a larger tolerance for
    integrands that are only piecewise smooth).
    """
    verts = np.array([[float(x) for x in p] for p in simplex], dtype=float)
    n = verts.shape[1]
    coarse = _gm_apply(verts, f, s)
    fine = sum(_gm_apply(child, f, s) for child in _split_simplex(verts))
    diff = abs(fine - coarse)
    if n <= 2:
        est = diff / (2 ** (2 * s + 2) - 1)
    else:
        est = diff
    est = max(est, abs(fine) * 1e-15)
    if tol_simplex is not None and est > tol_simplex:
        raise QuadratureNotConverged(
            f"simplex quadrature error estimate {est:.3e} exceeds {tol_simplex:.3e}"
        )
    return fine, est


# ---------------------------------------------------------------------------
# public integration API
# ---------------------------------------------------------------------------


def integrate(
    P: LabelledPolytope,
    g: WeightFunction,
    alpha: tuple[int, ...] | None = None,
    tol: float | None = None,
    gm_tol_simplex: float = 1e-10,
):
    """Integral of x^alpha * g(x) over P with an error estimate.

    Polynomial-kind weights (constant/affine/polynomial) integrate exactly
    (zero reported error when all data is rational); the exponential-affine
    kind uses the closed form per simplex with the quadrature fallback.
    Returns (value, error_estimate).
    """
    _check_dims(P, g, alpha)
    if g.is_polynomial_kind:
        poly = g.as_poly(P.dim)
        if alpha is not None and any(alpha):
            poly = _poly_mul(poly, _monomial(alpha))
        total = 0
        for simplex in P.triangulation:
            total = total + simplex_poly_integral(simplex, poly)
        exact = isinstance(total, Fraction)
        value = float(total)
        err = 0.0 if exact else abs(value) * 1e-15
    else:
        value = 0.0
        err = 0.0
        for simplex in P.triangulation:
            v, e = simplex_exp_integral(
                simplex, g.a0, g.b, alpha, tol_simplex=gm_tol_simplex
            )
            value += v
            err += e
    if tol is not None and err > tol:
        raise QuadratureNotConverged(
            f"integration error estimate {err:.3e} exceeds tolerance {tol:.3e}"
        )
    return value, err


def moment(P: LabelledPolytope, g: WeightFunction, alpha) -> float:
    """The moment integral of x^alpha against g over P."""
    alpha = tuple(int(a) for a in alpha)
    return integrate(P, g, alpha)[0]


def moment_exact(P: LabelledPolytope, alpha) -> Fraction:
    """Exact rational moment of a monomial over P (weight 1)."""
    alpha = tuple(int(a) for a in alpha)
    total = Fraction(0)
    for simplex in P.triangulation:
        total += simplex_poly_integral(simplex, _monomial(alpha))
    return total


def integrate_exact_poly(P: LabelledPolytope, poly: dict) -> Fraction:
    """Exact rational integral of a sparse rational polynomial over P."""
    total = Fraction(0)
    for simplex in P.triangulation:
        total += simplex_poly_integral(simplex, poly)
    return total


def _check_dims(P: LabelledPolytope, g: WeightFunction, alpha) -> None:
    if g.dim is not None and g.dim != P.dim:
        raise SchemaViolation(
            f"weight dimension {g.dim} does not match polytope dimension {P.dim}"
        )
    if alpha is not None and len(alpha) != P.dim:
        raise SchemaViolation(
            f"moment multi-index length {len(alpha)} does not match dimension {P.dim}"
        )
