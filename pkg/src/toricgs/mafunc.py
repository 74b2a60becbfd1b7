"""1D real Monge-Ampère solver and the Archimedean functional suite.

The potential u lives on a uniform grid over [-R, R] in the log-toric
coordinate, extended by affine tails whose slopes are exactly the endpoint
values of the 1D polytope.  The discrete Monge-Ampère operator is in flux
form: with one-sided slopes s_{k+1/2} = (u_{k+1} - u_k)/h and G an
antiderivative of the weight g, the cell mass is

    MA_k(u) = G(s_{k+1/2}) - G(s_{k-1/2}),

with the ghost slopes s_{-1/2} = p_min and s_{N-1/2} = p_max held fixed.
This discretization is second-order equivalent to g(u')u'' dx and has two
structural properties the functional suite leans on: the total mass
telescopes to the constant integral of g over P for every potential, and
the energy 1-form sum(phi_k MA_k(u_t)) is exactly closed, so energy path
integrals are path-independent at the discrete level (cocycle, translation
invariance, and the monotonicity inequalities hold to quadrature rounding,
not to grid resolution).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from . import quadrature
from .errors import (
    NewtonDiverged,
    NonConvexInput,
    ValidationError,
    WindowTooSmall,
)
from .polytope import LabelledPolytope
from .quadrature import WeightFunction

# ---------------------------------------------------------------------------
# grid and potentials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid1D:
    """Uniform nodes on [-R, R]."""

    R: float = 12.0
    N: int = 2001

    def __post_init__(self):
        if self.N < 9:
            raise ValidationError("grid needs at least 9 nodes")
        if self.R <= 0:
            raise ValidationError("window radius must be positive")

    @property
    def h(self) -> float:
        return 2.0 * self.R / (self.N - 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.linspace(-self.R, self.R, self.N)

    @property
    def mid_index(self) -> int:
        return (self.N - 1) // 2

    def to_dict(self) -> dict:
        return {"R": self.R, "N": self.N}


def _endpoint_slopes(P: LabelledPolytope) -> tuple[float, float]:
    if P.dim != 1:
        raise ValidationError("the Monge-Ampère machinery is one-dimensional")
    lo, hi = P.interval()
    return float(lo), float(hi)


@dataclass
class DiscretePotential:
    """Grid potential with affine tails at the exact polytope slopes.

    ``values`` holds u at the grid nodes; the tails extend affinely with
    slopes p_min (left) and p_max (right), so the gradient image is the
    closed polytope interval.  ``ref_values`` samples the reference
    potential u0 on the same grid; ``c`` is the Monge-Ampère normalization
    constant when the potential came out of the solver.
    """

    grid: Grid1D
    P: LabelledPolytope
    values: np.ndarray
    ref_values: np.ndarray
    c: float | None = None
    residual: float | None = None
    iterations: int = 0
    tail_gap: float = math.nan
    history: list = field(default_factory=list)

    @property
    def slopes(self) -> tuple[float, float]:
        return _endpoint_slopes(self.P)

    def half_slopes(self, values: np.ndarray | None = None) -> np.ndarray:
        """One-sided slopes s_{-1/2}, ..., s_{N-1/2} with pinned ghosts."""
        u = self.values if values is None else values
        pmin, pmax = self.slopes
        h = self.grid.h
        s = np.empty(self.grid.N + 1)
        s[1:-1] = np.diff(u) / h
        s[0] = pmin
        s[-1] = pmax
        return s

    def validate(self, slope_tol: float = 1e-9, convex_tol: float = 1e-12) -> None:
        s = self.half_slopes()
        if np.any(np.diff(s) < -convex_tol):
            raise NonConvexInput(
                f"second differences reach {float(np.min(np.diff(s))):.3e}"
            )
        pmin, pmax = self.slopes
        if np.min(s) < pmin - slope_tol or np.max(s) > pmax + slope_tol:
            raise NonConvexInput("gradient leaves the closure of the polytope")

    def shifted(self, kappa: float) -> "DiscretePotential":
        return DiscretePotential(
            grid=self.grid,
            P=self.P,
            values=self.values + kappa,
            ref_values=self.ref_values,
            c=self.c,
        )

    def along(self, t: float) -> "DiscretePotential":
        """The segment potential u0 + t (u - u0)."""
        return DiscretePotential(
            grid=self.grid,
            P=self.P,
            values=self.ref_values + t * (self.values - self.ref_values),
            ref_values=self.ref_values,
        )

    def to_dict(self) -> dict:
        d = {
            "grid": self.grid.to_dict(),
            "values": [float(v) for v in self.values],
        }
        if self.c is not None:
            d["c"] = self.c
        return d

    @staticmethod
    def from_dict(d: dict, P: LabelledPolytope) -> "DiscretePotential":
        from .errors import SchemaViolation

        if not isinstance(d, dict) or "grid" not in d or "values" not in d:
            raise SchemaViolation("potential needs 'grid' and 'values'", "/potential")
        gd = d["grid"]
        if not isinstance(gd, dict) or "R" not in gd or "N" not in gd:
            raise SchemaViolation("grid needs 'R' and 'N'", "/potential/grid")
        grid = Grid1D(R=float(gd["R"]), N=int(gd["N"]))
        values = np.asarray([float(v) for v in d["values"]], dtype=float)
        if values.shape != (grid.N,):
            raise SchemaViolation(
                f"expected {grid.N} values, got {len(values)}", "/potential/values"
            )
        ref = reference_potential(P, grid)
        return DiscretePotential(
            grid=grid,
            P=P,
            values=values,
            ref_values=ref.values,
            c=float(d["c"]) if "c" in d else None,
        )


def reference_potential(P: LabelledPolytope, grid: Grid1D | None = None) -> DiscretePotential:
    """u0(x) = log(e^{p_min x} + e^{p_max x}) sampled on the grid.

    Strictly convex, with gradient filling the open polytope interval and
    the exact endpoint slopes at infinity; u0(0) = log 2.
    """
    grid = grid or Grid1D()
    pmin, pmax = _endpoint_slopes(P)
    x = grid.nodes
    vals = np.logaddexp(pmin * x, pmax * x)
    return DiscretePotential(grid=grid, P=P, values=vals, ref_values=vals.copy())


def random_potential(
    P: LabelledPolytope, grid: Grid1D | None = None, seed=0
) -> DiscretePotential:
    """A random convex potential with gradient strictly inside P.

    Construction: (1 - tau) u0 plus at most five softplus bumps whose total
    slope budget is capped at tau times the endpoint slopes, plus a random
    constant.  Convexity and the gradient constraint hold by construction.
    """
    grid = grid or Grid1D()
    pmin, pmax = _endpoint_slopes(P)
    ref = reference_potential(P, grid)
    rng = np.random.default_rng(seed)
    tau = 0.3
    vals = (1.0 - tau) * ref.values.copy()
    x = grid.nodes
    nb = int(rng.integers(1, 6))
    raw = rng.uniform(0.2, 1.0, size=nb)
    signs = rng.choice([-1.0, 1.0], size=nb)
    centers = rng.uniform(-4.0, 4.0, size=nb)
    rates = rng.uniform(0.5, 3.0, size=nb)
    pos_total = float(np.sum(raw[signs > 0])) or 1.0
    neg_total = float(np.sum(raw[signs < 0])) or 1.0
    pos_budget = 0.9 * tau * pmax
    neg_budget = 0.9 * tau * (-pmin)
    for i in range(nb):
        if signs[i] > 0:
            s = raw[i] / pos_total * pos_budget
            vals += s * _softplus(rates[i] * (x - centers[i])) / rates[i]
        else:
            s = raw[i] / neg_total * neg_budget
            vals += s * _softplus(-rates[i] * (x - centers[i])) / rates[i]
    vals += rng.uniform(-1.0, 1.0)
    out = DiscretePotential(grid=grid, P=P, values=vals, ref_values=ref.values)
    out.validate()
    return out


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


# ---------------------------------------------------------------------------
# weight antiderivative (G' = g) for the flux-form operator
# ---------------------------------------------------------------------------


def _antiderivative(g: WeightFunction):
    """Closed-form antiderivative of a 1D weight, vectorized."""
    if g.dim not in (None, 1):
        raise ValidationError("weight must be one-dimensional")
    if g.kind == "constant":
        c = float(g.a0)
        return lambda p: c * np.asarray(p, dtype=float)
    if g.kind == "affine":
        a0, b = float(g.a0), float(g.b[0])
        return lambda p: a0 * np.asarray(p, float) + 0.5 * b * np.asarray(p, float) ** 2
    if g.kind == "exp_affine":
        a0, b = float(g.a0), float(g.b[0])
        if b == 0.0:
            return lambda p: math.exp(a0) * np.asarray(p, float)
        return lambda p: np.exp(a0 + b * np.asarray(p, float)) / b
    terms = [(int(p[0]), float(c)) for p, c in g.coeffs]

    def G(p):
        p = np.asarray(p, dtype=float)
        out = np.zeros_like(p)
        for k, c in terms:
            out += c * p ** (k + 1) / (k + 1)
        return out

    return G


def _antiderivative_inverse(g: WeightFunction, pmin: float, pmax: float):
    """Scalar inverse of the antiderivative, monotone-extended past [pmin, pmax].

    Trial profiles during the shooting bracket may overshoot the slope range;
    the extension keeps the inverse defined there, while converged solutions
    only ever evaluate it strictly inside the range.
    """
    if g.kind == "constant":
        c = float(g.a0)
        return lambda y: y / c
    if g.kind == "affine":
        a0, b = float(g.a0), float(g.b[0])
        if b == 0.0:
            return lambda y: y / a0

        def inv_affine(y: float) -> float:
            disc = a0 * a0 + 2.0 * b * y
            return (-a0 + math.sqrt(max(disc, 0.0))) / b

        return inv_affine
    if g.kind == "exp_affine":
        a0, b = float(g.a0), float(g.b[0])
        if b == 0.0:
            scale = math.exp(-a0)
            return lambda y: y * scale

        def inv_exp(y: float) -> float:
            t = b * y
            if t <= 0.0:
                # only reachable on bracket overshoot; answer far past range
                return pmin - 64.0 if b > 0 else pmax + 64.0
            return (math.log(t) - a0) / b

        return inv_exp
    Gfun = _antiderivative(g)
    glo = float(g.value(np.array([[pmin]], dtype=float)))
    ghi = float(g.value(np.array([[pmax]], dtype=float)))
    Glo = float(Gfun(pmin))
    Ghi = float(Gfun(pmax))

    def inv_poly(y: float) -> float:
        if y <= Glo:
            return pmin + (y - Glo) / glo
        if y >= Ghi:
            return pmax + (y - Ghi) / ghi
        return float(brentq(lambda p: float(Gfun(p)) - y, pmin, pmax, xtol=1e-15))

    return inv_poly


def _ma_flux(pot: DiscretePotential, g: WeightFunction, values=None) -> np.ndarray:
    """Flux-form Monge-Ampère cell masses MA_k = G(s_{k+1/2}) - G(s_{k-1/2})."""
    G = _antiderivative(g)
    Gs = G(pot.half_slopes(values))
    return np.diff(Gs)


def weight_mass(P: LabelledPolytope, g: WeightFunction) -> float:
    """integral of g over the 1D polytope = total flux mass (exact telescope)."""
    G = _antiderivative(g)
    pmin, pmax = _endpoint_slopes(P)
    return float(G(pmax) - G(pmin))


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------


def solve_ma(
    P: LabelledPolytope,
    g: WeightFunction,
    grid: Grid1D | None = None,
    tol: float = 1e-10,
    tail_tol: float = 1e-4,
    max_iter: int = 80,
) -> DiscretePotential:
    """Damped Newton for g(u')u'' = c e^{-u} on the grid window.

    The translation family (u + kappa, c e^kappa) lets the c = 1 system be
    solved first, after which the shift kappa that pins the center value to
    the reference determines c = e^{-kappa}.  The c = 1 system collapses to
    one unknown: given the base value w_0, each flux equation determines the
    next half-slope from the running mass, and the closing defect is
    h * sum(e^{-w_k}) minus the integral of g -- a bracketed scalar root
    problem.  A short tridiagonal Newton polish then drives the residual to
    the tolerance.  Summing the flux-form equations shows c * sum(e^{-u_k}) h
    equals the integral of g over P automatically, so c carries the mass
    normalization.  Raises WindowTooSmall if the boundary slopes end up
    farther than ``tail_tol`` from the polytope endpoints (enlarge R for
    tighter tails: the gap decays like e^{-R}).
    """
    grid = grid or Grid1D()
    g.check_positive(P)
    pmin, pmax = _endpoint_slopes(P)
    ref = reference_potential(P, grid)
    h = grid.h
    mid = grid.mid_index
    gval = g.value  # vectorized on (..., 1)
    G = _antiderivative(g)

    Ginv = _antiderivative_inverse(g, pmin, pmax)
    y_lo = float(G(pmin))
    y_hi = float(G(pmax))
    N = grid.N

    def _shoot(w0: float):
        prof = np.empty(N)
        prof[0] = wk = w0
        y = y_lo
        for k in range(N - 1):
            ex = -wk
            if ex > 500.0:
                return prof, 1e300  # mass already far past target: sign only
            y += h * math.exp(ex)
            wk += h * Ginv(y)
            prof[k + 1] = wk
        return prof, (y + h * math.exp(-wk)) - y_hi

    def _psi(w0: float) -> float:
        return _shoot(w0)[1]

    base = float(ref.values[0])
    span = 8.0
    lo, hi = base - span, base + span
    flo, fhi = _psi(lo), _psi(hi)
    while flo * fhi > 0.0 and span < 300.0:
        span *= 2.0
        lo, hi = base - span, base + span
        flo, fhi = _psi(lo), _psi(hi)
    if flo * fhi > 0.0:
        raise NewtonDiverged("shooting bracket failed for the base value")
    w0 = float(brentq(_psi, lo, hi, xtol=1e-13))
    w = _shoot(w0)[0]
    scratch = DiscretePotential(grid=grid, P=P, values=w, ref_values=ref.values)

    def residual_vec(w):
        s = scratch.half_slopes(w)
        with np.errstate(over="ignore", invalid="ignore"):
            F = np.diff(G(s)) / h - np.exp(-w)
        return F, s

    F, s = residual_vec(w)
    best2 = float(np.dot(F, F))
    history = [float(np.max(np.abs(F)))]
    it = 0
    while history[-1] > tol and it < max_iter:
        it += 1
        gs = gval(s[:, None])  # g at half-slopes, length N+1
        ew = np.exp(-w)
        N = grid.N
        ab = np.zeros((3, N))
        ab[0, 1:] = gs[1:-1] / h**2  # super: dF_k/dw_{k+1}, k=0..N-2
        ab[2, :-1] = gs[1:-1] / h**2  # sub: dF_k/dw_{k-1}, k=1..N-1
        ab[1, :] = -(gs[:-1] + gs[1:]) / h**2 + ew
        # the ghost half-slopes are pinned constants, so the first and last
        # rows carry no derivative through them
        ab[1, 0] += gs[0] / h**2
        ab[1, -1] += gs[-1] / h**2
        try:
            du = solve_banded((1, 1), ab, -F)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NewtonDiverged(f"linear solve failed: {exc}", history=history)
        cap = float(np.max(np.abs(du)))
        step = min(1.0, 4.0 / cap)  # keep single moves of the potential modest
        while True:
            w_try = w + step * du
            F_try, s_try = residual_vec(w_try)
            if np.all(np.isfinite(F_try)):
                val2 = float(np.dot(F_try, F_try))
            else:
                val2 = math.inf
            ok = val2 <= (1 - 1e-4 * step) * best2
            if ok and g.kind in ("affine", "polynomial"):
                ok = bool(np.min(gval(s_try[:, None])) > 0)
            if ok:
                break
            step *= 0.5
            if step < 1e-14:
                raise NewtonDiverged(
                    f"damping exhausted at residual {history[-1]:.3e}",
                    history=history,
                )
        w, F, s, best2 = w_try, F_try, s_try, val2
        history.append(float(np.max(np.abs(F))))
    if history[-1] > tol:
        raise NewtonDiverged(
            f"residual {history[-1]:.3e} after {max_iter} iterations",
            history=history,
        )
    # shift back to the gauged representative; residuals are shift-invariant
    kappa = float(w[mid] - ref.values[mid])
    u = w - kappa
    c = math.exp(-kappa)
    best = history[-1]
    # Boundary diagnostic.  The window solution pins u' to the endpoint
    # slopes of P at the boundary, and a nonzero weighted first moment
    # B = int_P p g dp forces boundary cell masses approaching max(0, +-B),
    # i.e. an intrinsic O(h) first-slope layer that no window enlargement
    # removes.  Only the excess beyond that layer measures truncation error.
    B = float(quadrature.moment(P, g, (1,)))
    p_layer_lo = Ginv(y_lo + h * max(0.0, B))
    p_layer_hi = Ginv(y_hi - h * max(0.0, -B))
    gap = max(float(s[1]) - p_layer_lo, p_layer_hi - float(s[-2]), 0.0)
    if gap > tail_tol:
        raise WindowTooSmall(
            f"boundary slope gap {gap:.3e} exceeds {tail_tol:.1e}; "
            f"increase the window radius R or the node count N"
        )
    out = DiscretePotential(
        grid=grid,
        P=P,
        values=u,
        ref_values=ref.values,
        c=float(c),
        residual=best,
        iterations=it,
        tail_gap=float(gap),
        history=history,
    )
    out.validate()
    return out


# ---------------------------------------------------------------------------
# functional suite
# ---------------------------------------------------------------------------

_GL_NODES = 16


def _gauss_legendre01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass
class FunctionalValues:
    """The Archimedean functionals of a potential relative to its reference."""

    E_g: float
    Lambda_g: float
    I_g: float
    J_g: float
    L: float
    D: float
    H_g: float
    M: float
    mass_g: float
    underflow_count: int = 0

    def to_dict(self) -> dict:
        return {
            "E_g": self.E_g,
            "Lambda_g": self.Lambda_g,
            "I_g": self.I_g,
            "J_g": self.J_g,
            "L": self.L,
            "D": self.D,
            "H_g": self.H_g,
            "M": self.M,
            "mass_g": self.mass_g,
            "underflow_count": self.underflow_count,
        }


def functionals(
    u: DiscretePotential,
    g: WeightFunction,
    P: LabelledPolytope | None = None,
    u0_values: np.ndarray | None = None,
) -> FunctionalValues:
    """E_g, Lambda_g, I_g, J_g, L, D, H_g, M of u relative to its reference.

    All measures are the discrete flux-form Monge-Ampère masses normalized
    by their (exactly constant) total, and the reference measure is
    c0 e^{-u0} dx restricted to the window and normalized discretely.  With
    these conventions D is translation-invariant and M >= D (Jensen /
    Gibbs) hold exactly in the discrete model, with equality at the solved
    soliton.  ``u0_values`` overrides the base potential of the energy path
    (used by the cocycle identity E_{g,u0}(u2) - E_{g,u0}(u1) = E_{g,u1}(u2)).
    """
    P = P or u.P
    u.validate()
    base = u.ref_values if u0_values is None else np.asarray(u0_values, float)
    phi = u.values - base
    Vg = weight_mass(P, g)
    base_pot = DiscretePotential(grid=u.grid, P=P, values=base, ref_values=base)

    # E_g: Gauss-Legendre along the affine path from base to u; the 1-form
    # is exactly closed for the flux operator, so this is path-independent.
    tq, wq = _gauss_legendre01(_GL_NODES)
    E = 0.0
    for t, w in zip(tq, wq):
        ma_t = _ma_flux(base_pot, g, base + t * phi)
        E += w * float(np.dot(phi, ma_t)) / Vg

    ma0 = _ma_flux(base_pot, g, base)
    ma1 = _ma_flux(base_pot, g, u.values)
    Lam = float(np.dot(phi, ma0)) / Vg
    Ival = float(np.dot(phi, ma0 - ma1)) / Vg
    J = Lam - E

    # reference probability measure on the window: e^{-u0} h / normalizer
    w0 = np.exp(-base)
    mass0 = float(np.sum(w0))
    m_hat = w0 / mass0
    # L = -log integral e^{-phi} d(mu0-hat), computed in log space
    L = -float(_log_mean_exp(-phi, m_hat))
    D = -E + L

    nu = ma1 / Vg
    underflow = int(np.sum((nu > 0) & (nu < 1e-300)))
    pos = nu > 0
    H = float(np.sum(nu[pos] * (np.log(np.maximum(nu[pos], 1e-300)) - np.log(m_hat[pos]))))
    M = H + J - Ival
    return FunctionalValues(
        E_g=E,
        Lambda_g=Lam,
        I_g=Ival,
        J_g=J,
        L=L,
        D=D,
        H_g=H,
        M=M,
        mass_g=Vg,
        underflow_count=underflow,
    )


def _log_mean_exp(a: np.ndarray, weights: np.ndarray) -> float:
    m = float(np.max(a))
    return m + math.log(float(np.sum(weights * np.exp(a - m))))


# ---------------------------------------------------------------------------
# pushforward moment check
# ---------------------------------------------------------------------------


def pushforward_moments(
    u: DiscretePotential, g: WeightFunction, orders=(0, 1, 2)
) -> dict:
    """Moments of the pushforward of c e^{-u} dx under u' versus g dx on P.

    The discrete measure places mass c e^{-u_k} h at the midpoint slope of
    each cell plus the exact analytic tail atoms at the polytope endpoints;
    a third-order midpoint correction in the slope variable keeps the
    comparison well inside 1e-5 of the exact moments of g.
    """
    if u.c is None:
        raise ValidationError("pushforward check needs a solver potential (c set)")
    P = u.P
    h = u.grid.h
    s = u.half_slopes()
    mids = 0.5 * (s[:-1] + s[1:])
    widths = s[1:] - s[:-1]
    # each cell pushes mass c e^{-u_k} h onto the slope interval
    # [s_{k-1/2}, s_{k+1/2}]; the ghost closure pins the union of those
    # intervals to exactly [p_min, p_max], tails included
    cell_mass = u.c * np.exp(-u.values) * h
    gm = g.value(mids[:, None])
    dgm = g.grad(mids[:, None])[:, 0]
    out = {}
    for j in orders:
        disc = float(np.sum(mids**j * cell_mass))
        # placing the cell mass at the midpoint slope underestimates
        # integral p^j g over the slope interval by
        # [j m^{j-1} g'(m) + j(j-1)/2 m^{j-2} g(m)] width^3 / 12 + O(width^5)
        if j >= 1:
            term = j * mids ** (j - 1) * dgm
            if j >= 2:
                term = term + (j * (j - 1) / 2.0) * mids ** (j - 2) * gm
            disc += float(np.sum(term * widths**3 / 12.0))
        cont = quadrature.moment(P, g, (j,))
        out[j] = {"discrete": disc, "continuous": cont, "abs_diff": abs(disc - cont)}
    return out


# ---------------------------------------------------------------------------
# inequality harness
# ---------------------------------------------------------------------------


def inequality_suite(
    P: LabelledPolytope,
    g: WeightFunction,
    samples: int = 100,
    seed: int = 0,
    grid: Grid1D | None = None,
) -> dict:
    """Random-potential inequality report.

    Per sample u the harness checks, with rho = min_P g, Rg = max_P g,
    V1 the unweighted and Vg the weighted volume:
      (a) (rho V1/Vg)(I - J) <= I_g - J_g <= (Rg V1/Vg)(I - J),
      (b) I_g - J_g >= 0 and J_g >= 0,
      (c) M >= D (Jensen),
      (d) J_g(u_t) <= t J_g(u) for t in (0, 1]; the sharper exponent
          t^(1+1/C) with C = (Rg/rho)(n+1) is measured and reported only.
    Violations are counted, never raised; the first violating sample (if
    any) is serialized into the report.
    """
    grid = grid or Grid1D()
    g.check_positive(P)
    g1 = WeightFunction.constant(1)
    rho, Rg = g.range_on(P)
    V1 = weight_mass(P, g1)
    Vg = weight_mass(P, g)
    Cexp = Rg / rho * 2.0  # (n+1) with n = 1
    t_grid = [0.1 * k for k in range(1, 11)]
    slack = 1e-10

    counts = {"a": 0, "b": 0, "c": 0, "d": 0}
    worst = {
        "a_lower_margin": math.inf,
        "a_upper_margin": math.inf,
        "b_margin": math.inf,
        "c_margin": math.inf,
        "d_margin": math.inf,
        "sharper_margin": math.inf,
    }
    first_violation = None
    sharper_holds = True

    for i in range(samples):
        u = random_potential(P, grid, seed=[seed, i])
        Fg = functionals(u, g, P)
        F1 = functionals(u, g1, P)
        IJg = Fg.I_g - Fg.J_g
        IJ1 = F1.I_g - F1.J_g
        lo = rho * V1 / Vg * IJ1
        hi = Rg * V1 / Vg * IJ1
        a_low = IJg - lo
        a_up = hi - IJg
        worst["a_lower_margin"] = min(worst["a_lower_margin"], a_low)
        worst["a_upper_margin"] = min(worst["a_upper_margin"], a_up)
        ok_a = a_low >= -slack and a_up >= -slack
        b_m = min(IJg, Fg.J_g)
        worst["b_margin"] = min(worst["b_margin"], b_m)
        ok_b = b_m >= -slack
        c_m = Fg.M - Fg.D
        worst["c_margin"] = min(worst["c_margin"], c_m)
        ok_c = c_m >= -slack
        ok_d = True
        for t in t_grid:
            Jt = functionals(u.along(t), g, P).J_g
            d_m = t * Fg.J_g - Jt
            worst["d_margin"] = min(worst["d_margin"], d_m)
            if d_m < -slack:
                ok_d = False
            sharper_bound = t ** (1.0 + 1.0 / Cexp) * Fg.J_g
            s_m = sharper_bound - Jt
            worst["sharper_margin"] = min(worst["sharper_margin"], s_m)
            if s_m < -slack:
                sharper_holds = False
        for key, ok in zip("abcd", (ok_a, ok_b, ok_c, ok_d)):
            if not ok:
                counts[key] += 1
                if first_violation is None:
                    first_violation = {
                        "sample_index": i,
                        "band": key,
                        "potential": u.to_dict(),
                    }
    return {
        "samples": samples,
        "seed": seed,
        "constants": {"rho": rho, "Rg": Rg, "V1": V1, "Vg": Vg, "C": Cexp},
        "violations": counts,
        "worst_margins": worst,
        "sharper_exponent": {
            "exponent": 1.0 + 1.0 / Cexp,
            "holds_on_samples": sharper_holds,
        },
        "first_violation": first_violation,
    }


# ---------------------------------------------------------------------------
# destabilizing ray diagnostic
# ---------------------------------------------------------------------------


def ding_ray_diagnostic(
    P: LabelledPolytope,
    g: WeightFunction,
    s_values=(0.0, 2.0, 4.0, 8.0),
    grid: Grid1D | None = None,
    p_samples: int = 4001,
) -> dict:
    """Ding energy along the dual-twisted ray of the worst toric direction.

    The reference potential's Legendre transform is shifted by s times the
    support gap max_P <a, .> - <a, .> of the destabilizing direction and
    transformed back, which keeps every ray potential convex with slopes in
    P.  (For linear shifts this ray is the translation
    u_s(x) = u_0(x + s a) - s max_P <a, .>, whose Ding slope is exactly
    -<a, b_g>.)  The large-s slope of D along the ray matches the
    non-Archimedean invariant A(a) - S_g(a); a decreasing ray flags
    instability (nonzero weighted barycenter).
    """
    from .invariants import weighted_barycenter
    from .stability import ding_na_valuation

    grid = grid or Grid1D()
    pmin, pmax = _endpoint_slopes(P)
    b = float(weighted_barycenter(P, g)[0])
    a = 1.0 if b > 0 else -1.0
    ref = reference_potential(P, grid)
    x = grid.nodes
    p = np.linspace(pmin, pmax, p_samples)
    # discrete Legendre transform of u0 on the slope grid
    phi_star = np.max(x[None, :] * p[:, None] - ref.values[None, :], axis=1)
    fa = max(a * pmin, a * pmax) - a * p
    Ds = []
    for s in s_values:
        dual = phi_star + s * fa
        u_s = np.max(x[:, None] * p[None, :] - dual[None, :], axis=1)
        pot = DiscretePotential(
            grid=grid, P=P, values=u_s, ref_values=ref.values
        )
        Ds.append(functionals(pot, g, P).D)
    slope = (Ds[-1] - Ds[0]) / (s_values[-1] - s_values[0]) if len(Ds) > 1 else 0.0
    na = ding_na_valuation(P, g, (a,))
    return {
        "direction": a,
        "s_values": list(s_values),
        "D_values": Ds,
        "ray_slope": slope,
        "na_slope": na,
        "ding_ray_decreasing": bool(slope < -1e-8),
    }
