"""Sphere quadrature, asymptotic-invariant integrands, extrapolation to
infinity, and the calibrated constants of the invariant family.

All stars, wedges, and exterior derivatives in the flux integrands are
Euclidean; only the curvature form R = R^g carries the metric.  Calibration
constants are measured once against the generalized Schwarzschild family and
frozen in CALIBRATION below.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import roots_jacobi

from .dforms import DoubleForm, coform, hodge, wedge, wedge_power
from .curvature import d_right_comps, riemann
from .fields import MetricField
from .gbc import GBCContext

__all__ = [
    "SphereRule",
    "InvariantResult",
    "sphere_volume",
    "sphere_rule",
    "mass_integrand",
    "mass_integrand_alt",
    "adm_integrand_coordinate",
    "center_integrand",
    "center_integrand_alt",
    "curvature_center_integrand",
    "integrate_sphere",
    "extrapolate",
    "gbc_mass",
    "adm_mass_coordinate",
    "gbc_center",
    "curvature_center",
    "CALIBRATION",
    "calibration_constants",
    "measure_calibration",
]


# ---------------------------------------------------------------------------
# sphere quadrature
# ---------------------------------------------------------------------------

def sphere_volume(n: int) -> float:
    """Volume of the unit sphere S^{n-1} in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@dataclass
class SphereRule:
    """Product Gauss rule on the coordinate sphere of radius r in R^n."""

    n: int
    r: float
    points: np.ndarray   # (N, n)
    weights: np.ndarray  # (N,), includes the surface element
    normals: np.ndarray  # (N, n), outward Euclidean unit normals


@lru_cache(maxsize=64)
def sphere_rule(n: int, r: float, level: int) -> SphereRule:
    """Tensor-product rule: Gauss-Jacobi in each polar cosine, uniform azimuth.

    `level` is the number of nodes per polar angle; the azimuthal circle gets
    2*level equispaced nodes (exact for trigonometric degree < 2*level).
    """
    if not 3 <= n <= 8:
        raise ValueError(f"sphere_rule supports 3 <= n <= 8, got {n}")
    if level < 2:
        raise ValueError("level must be >= 2")
    # embedding: x_1 = cos t_1, x_2 = sin t_1 cos t_2, ...,
    # x_{n-1} = sin t_1 ... cos phi, x_n = sin t_1 ... sin phi
    # surface measure: prod_j sin(t_j)^{n-1-j} dt_j dphi
    ts = []
    ws = []
    for j in range(1, n - 1):
        a = (n - 1 - j - 1) / 2.0  # weight (1-u^2)^a du with u = cos t_j
        u, w = roots_jacobi(level, a, a)
        ts.append(u)
        ws.append(w)
    phi = (2.0 * math.pi / (2 * level)) * np.arange(2 * level)
    wphi = np.full(2 * level, 2.0 * math.pi / (2 * level))

    grids = np.meshgrid(*ts, phi, indexing="ij")
    wgrids = np.meshgrid(*ws, wphi, indexing="ij")
    shape = grids[0].shape
    x = np.empty(shape + (n,))
    sin_prod = np.ones(shape)
    for j in range(n - 2):
        u = grids[j]
        x[..., j] = sin_prod * u
        sin_prod = sin_prod * np.sqrt(np.maximum(1.0 - u * u, 0.0))
    x[..., n - 2] = sin_prod * np.cos(grids[n - 2])
    x[..., n - 1] = sin_prod * np.sin(grids[n - 2])
    w = np.ones(shape)
    for j in range(n - 1):
        w = w * wgrids[j]
    normals = x.reshape(-1, n)
    points = r * normals
    weights = (r ** (n - 1)) * w.reshape(-1)
    return SphereRule(n, float(r), points, weights, normals)


def integrate_sphere(rule: SphereRule, f, chunk: int = 2048) -> float:
    """Deterministic chunked quadrature with compensated final summation."""
    partials = []
    N = rule.points.shape[0]
    for s in range(0, N, chunk):
        xs = rule.points[s:s + chunk]
        nus = rule.normals[s:s + chunk]
        vals = np.asarray(f(xs, nus), dtype=float)
        partials.extend((rule.weights[s:s + chunk] * vals).tolist())
    return math.fsum(partials)


# ---------------------------------------------------------------------------
# flux integrands
# ---------------------------------------------------------------------------

def _flux_form(g: MetricField, x: np.ndarray, ctx: GBCContext) -> DoubleForm:
    """The (n-1, n) double form D~e owedge R^{k-1} owedge b^{n-2k} at x."""
    n, k = ctx.n, ctx.k
    x = np.asarray(x, dtype=float)
    g.check_chart(x)
    out = d_right_comps(n, 1, 1, g.d1(x))
    if k >= 2:
        out = wedge(out, wedge_power(riemann(g, x), k - 1))
    if n - 2 * k > 0:
        out = wedge(out, ctx.b_power)
    return out


def _pair_normal(form_1_0: DoubleForm, nu: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...i->...", form_1_0.comps[..., 0], nu)


def mass_integrand(g: MetricField, x: np.ndarray, nu: np.ndarray,
                   ctx: GBCContext) -> np.ndarray:
    """Flux scalar <*(D~e owedge R^{k-1} owedge b^{n-2k}), nu> (all flat)."""
    omega = _flux_form(g, x, ctx)
    star = hodge(omega)
    return _pair_normal(star, np.asarray(nu, dtype=float))


def mass_integrand_alt(g: MetricField, x: np.ndarray, nu: np.ndarray,
                       ctx: GBCContext) -> np.ndarray:
    """Same flux via the pairing of the right block against the volume coform.

    The (n-1, n) flux form factors as phi tensor dvol~; pairing with dvol~
    leaves the (n-1)-form phi whose sphere integral is the flux integral.
    Pointwise this equals <*phi, nu> with the Euclidean star on forms.
    """
    n = ctx.n
    omega = _flux_form(g, x, ctx)
    phi = DoubleForm(n, n - 1, 0, omega.comps)  # right block is 1-dimensional
    star_phi = hodge(phi)
    return _pair_normal(star_phi, np.asarray(nu, dtype=float))


def adm_integrand_coordinate(g: MetricField, x: np.ndarray,
                             nu: np.ndarray) -> np.ndarray:
    """Coordinate ADM integrand (d_i g_ij - d_j g_ii) nu^j."""
    x = np.asarray(x, dtype=float)
    g.check_chart(x)
    d1 = g.d1(x)
    t1 = np.einsum("...iij->...j", d1)
    t2 = np.einsum("...jii->...j", d1)
    return np.einsum("...j,...j->...", t1 - t2, np.asarray(nu, dtype=float))


def _center_form(g: MetricField, x: np.ndarray, ctx: GBCContext,
                 axis: int) -> np.ndarray:
    """Components of x^i D~e owedge W - D~x^i owedge e owedge W at x."""
    n, k = ctx.n, ctx.k
    omega = _flux_form(g, x, ctx)
    first = x[..., axis, None, None] * omega.comps
    # D~ x^i = -e~_i as a (0,1) form
    dV = np.zeros(x.shape[:-1] + (n,))
    dV[..., axis] = -1.0
    second = wedge(coform(n, dV), DoubleForm(n, 1, 1, g.deviation(x)))
    if k >= 2:
        second = wedge(second, wedge_power(riemann(g, x), k - 1))
    if n - 2 * k > 0:
        second = wedge(second, ctx.b_power)
    return first - second.comps


def center_integrand(g: MetricField, x: np.ndarray, nu: np.ndarray,
                     ctx: GBCContext, axis: int) -> np.ndarray:
    """Two-term flux *(x^i D~e owedge W - D~x^i owedge e owedge W)(nu), W = R^{k-1} owedge b^{n-2k}."""
    x = np.asarray(x, dtype=float)
    total = DoubleForm(ctx.n, ctx.n - 1, ctx.n, _center_form(g, x, ctx, axis))
    return _pair_normal(hodge(total), np.asarray(nu, dtype=float))


def center_integrand_alt(g: MetricField, x: np.ndarray, nu: np.ndarray,
                         ctx: GBCContext, axis: int) -> np.ndarray:
    """Alternative pairing of the center flux against the volume coform."""
    x = np.asarray(x, dtype=float)
    phi = DoubleForm(ctx.n, ctx.n - 1, 0, _center_form(g, x, ctx, axis))
    return _pair_normal(hodge(phi), np.asarray(nu, dtype=float))


def curvature_center_integrand(g: MetricField, x: np.ndarray, nu: np.ndarray,
                               ctx: GBCContext, axis: int) -> np.ndarray:
    """T_k(X^{(alpha)}, nu) with X^{(alpha)} = r^2 d_alpha - 2 x^alpha r d_r."""
    from .gbc import lovelock
    x = np.asarray(x, dtype=float)
    g.check_chart(x)
    T = lovelock(g, x, ctx)
    r2 = np.sum(x * x, axis=-1)
    X = r2[..., None] * np.eye(ctx.n)[axis] - 2.0 * x[..., axis, None] * x
    return np.einsum("...i,...ij,...j->...", X, T.comps, np.asarray(nu, dtype=float))


# ---------------------------------------------------------------------------
# extrapolation and results
# ---------------------------------------------------------------------------

def extrapolate(samples: list[tuple[float, float]], s: float | None = None,
                step: float | None = None,
                terms: int | None = None) -> tuple[float, float, float]:
    """Extrapolate value(r) -> c0 as r -> infinity; returns (c0, s, max residual).

    The model is value(r) = c0 + sum_j c_j r^{-s j} with a single ladder
    spacing.  When `step` is given the spacing is known exactly (Richardson
    fit on the ladder step, 2 step, ...); otherwise the spacing s > 0 is
    profiled out by a bounded scalar minimization with one ladder rung
    withheld to keep the fit conditioned.  `terms` caps the ladder depth
    (default: all but two samples).  A constant sequence returns
    (constant, nan, 0).
    """
    if len(samples) < 3:
        raise ValueError("extrapolation needs at least 3 samples")
    rs = np.array([float(r) for r, _ in samples])
    vals = np.array([float(v) for _, v in samples])
    if np.any(np.diff(rs) <= 0):
        raise ValueError("radii must be strictly increasing")
    spread = vals.max() - vals.min()
    scale = max(np.abs(vals).max(), 1.0)
    if spread <= 1e-15 * scale:
        return float(vals[0]), float("nan"), 0.0
    nterms = max(1, min(terms if terms is not None else len(rs) - 2,
                        len(rs) - 2))

    def resid(sv: float, nt: int):
        cols = [np.ones_like(rs)]
        cols += [rs ** (-sv * (j + 1)) for j in range(nt)]
        A = np.stack(cols, axis=1)
        coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
        return coef, np.abs(A @ coef - vals).max()

    if step is not None:
        s = float(step)
    elif s is None:
        res = minimize_scalar(lambda sv: resid(sv, max(1, nterms - 1))[1],
                              bounds=(0.05, 20.0), method="bounded",
                              options={"xatol": 1e-10})
        s = float(res.x)
    coef, rmax = resid(s, nterms)
    return float(coef[0]), float(s), float(rmax)


@dataclass
class InvariantResult:
    """Per-radius values, the extrapolated limit, and fit diagnostics."""

    per_radius: list
    limit: float
    exponent: float
    residual: float
    constant_used: float = 1.0
    converged: bool = True
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "per_radius": [[float(r), float(v)] for r, v in self.per_radius],
            "limit": float(self.limit),
            "exponent": float(self.exponent),
            "residual": float(self.residual),
            "constant_used": float(self.constant_used),
            "converged": bool(self.converged),
            **self.extra,
        }


def _adaptive_integral(n: int, r: float, level: int, f,
                       rtol: float = 1e-8, max_refinements: int = 3) -> float:
    """Sphere integral refined (1.5x nodes per angle) until stable or capped."""
    val = integrate_sphere(sphere_rule(n, r, level), f)
    for _ in range(max_refinements):
        level += max(2, level // 2)
        new = integrate_sphere(sphere_rule(n, r, level), f)
        if abs(new - val) <= rtol * max(abs(new), 1.0):
            return new
        val = new
    return val


def _flag_convergence(limit: float, residual: float, per_radius: list) -> bool:
    scale = max(abs(limit), max(abs(v) for _, v in per_radius), 1e-30)
    return residual <= 0.1 * scale + 1e-9


# ---------------------------------------------------------------------------
# calibration table
# ---------------------------------------------------------------------------

# Measured against the generalized Schwarzschild family g_{S,k,m=1} with
# dyadic radii 20 * 2^j, j = 0..7 (see measure_calibration for the
# regeneration procedure) and frozen here.  "a" multiplies the mass after
# the (-1)^n / (2 (n-1)! omega_{n-1}) prefactor; "c" normalizes the center;
# "b" is the curvature-center ratio constant (reported, not applied).
CALIBRATION: dict[tuple[int, int], dict[str, float]] = {
    (3, 1): {"a": 1.0000000000, "c": 3.0000000035, "b": -100.5309649149},
    (4, 1): {"a": 1.0000000000, "c": 2.0000003318, "b": -473.7410112523},
    (5, 1): {"a": 1.0000000000, "c": 1.6663618420, "b": -1263.3093633393},
    (5, 2): {"a": 0.9999998189, "c": 1.6666670430, "b": -5053.2174650384},
}


def calibration_constants(n: int, k: int) -> dict[str, float]:
    """Calibration constants (a, c, b) for the invariants at (n, k).

    The measured table above identifies the closed forms a = 1,
    c = n / (n - 2), and b = -2^(k+1) (n-1)! omega_{n-1} / (n-2k-1)! to the
    accuracy of the measurement (see the tests); the closed forms are
    returned so that every admissible (n, k) is covered.
    """
    if k < 1 or n < 2 * k + 1:
        raise ValueError(f"no calibration constants for (n, k) = ({n}, {k})")
    return {
        "a": 1.0,
        "c": n / (n - 2.0),
        "b": -(2.0 ** (k + 1)) * math.factorial(n - 1) * sphere_volume(n)
             / math.factorial(n - 2 * k - 1),
    }


def mass_prefactor(n: int) -> float:
    return (-1.0) ** n / (2.0 * math.factorial(n - 1) * sphere_volume(n))


def _raw_mass_curve(g: MetricField, ctx: GBCContext, radii, level: int) -> list:
    pref = mass_prefactor(ctx.n)
    out = []
    for r in radii:
        val = _adaptive_integral(
            ctx.n, r, level,
            lambda xs, nus: mass_integrand(g, xs, nus, ctx))
        out.append((float(r), pref * val))
    return out


def gbc_mass(g: MetricField, ctx: GBCContext, radii, level: int = 8,
             calibrated: bool = True,
             step: float | None = None) -> InvariantResult:
    """Gauss-Bonnet-Chern mass m_k as an extrapolated, calibrated limit.

    `step` fixes the decay-ladder spacing of the extrapolation when the
    asymptotic expansion of the metric is known (for example 1/k for the
    generalized Schwarzschild family); by default the spacing is profiled.
    """
    if ctx.n < 2 * ctx.k + 1:
        raise ValueError("mass needs n >= 2k + 1")
    threshold = (ctx.n - 2 * ctx.k) / (ctx.k + 1.0)
    if g.tau <= threshold:
        warnings.warn(
            f"decay order tau={g.tau} at or below the mass threshold "
            f"(n-2k)/(k+1)={threshold:.4g}; the limit may not exist",
            stacklevel=2)
    per_radius = _raw_mass_curve(g, ctx, radii, level)
    limit, s, resid = extrapolate(per_radius, step=step)
    a = calibration_constants(ctx.n, ctx.k)["a"] if calibrated else 1.0
    return InvariantResult(per_radius, a * limit, s, abs(a) * resid,
                           constant_used=a,
                           converged=_flag_convergence(limit, resid, per_radius))


def adm_mass_coordinate(g: MetricField, radii, level: int = 8) -> InvariantResult:
    """ADM mass from the coordinate integrand; an independent k=1 oracle."""
    n = g.n
    pref = 1.0 / (2.0 * (n - 1) * sphere_volume(n))
    per_radius = []
    for r in radii:
        val = _adaptive_integral(
            n, r, level, lambda xs, nus: adm_integrand_coordinate(g, xs, nus))
        per_radius.append((float(r), pref * val))
    limit, s, resid = extrapolate(per_radius)
    return InvariantResult(per_radius, limit, s, resid,
                           converged=_flag_convergence(limit, resid, per_radius))


def _raw_center_curve(g: MetricField, ctx: GBCContext, radii, level: int,
                      axis: int) -> list:
    pref = mass_prefactor(ctx.n)
    out = []
    for r in radii:
        val = _adaptive_integral(
            ctx.n, r, level,
            lambda xs, nus: center_integrand(g, xs, nus, ctx, axis))
        out.append((float(r), pref * val))
    return out


def gbc_center(g: MetricField, ctx: GBCContext, radii, level: int = 8,
               mass: InvariantResult | None = None,
               step: float | None = None) -> list[InvariantResult]:
    """Per-axis center of mass C^i = c_{n,k} (raw limit)_i / (m_k)^k."""
    if mass is None:
        mass = gbc_mass(g, ctx, radii, level, step=step)
    mk = mass.limit
    if abs(mk) < 1e-12:
        raise ValueError("center of mass undefined: vanishing mass")
    c = calibration_constants(ctx.n, ctx.k)["c"]
    results = []
    for axis in range(ctx.n):
        per_radius = _raw_center_curve(g, ctx, radii, level, axis)
        limit, s, resid = extrapolate(per_radius, step=step)
        denom = mk ** ctx.k
        results.append(InvariantResult(
            per_radius, c * limit / denom, s, abs(c) * resid / abs(denom),
            constant_used=c,
            converged=_flag_convergence(limit, resid, per_radius)))
    return results


def curvature_center(g: MetricField, ctx: GBCContext, radii, level: int = 8,
                     step: float | None = None) -> list[InvariantResult]:
    """Per-axis limits of the Lovelock flux against the conformal Killing fields."""
    results = []
    for axis in range(ctx.n):
        per_radius = _curv_curve(g, ctx, radii, level, axis)
        limit, s, resid = extrapolate(per_radius, step=step)
        results.append(InvariantResult(
            per_radius, limit, s, resid,
            converged=_flag_convergence(limit, resid, per_radius)))
    return results


# ---------------------------------------------------------------------------
# calibration measurement
# ---------------------------------------------------------------------------

def measure_calibration(n: int, k: int, radii=None, level: int = 8) -> dict[str, float]:
    """Measure (a, c, b) for (n, k) against the Schwarzschild family.

    a: makes the prefactored mass of g_{S,k,m=1} equal 1.
    c: makes the first coordinate of the center of a Schwarzschild field
       translated by (1, 0, ..., 0) equal 1.
    b: ratio of the curvature-center flux to (m_k)^k * C^alpha.
    """
    from .fields import make_schwarzschild
    if radii is None:
        radii = [20.0 * 2 ** j for j in range(8)]
    step = 1.0 / k  # the model family expands in integer powers of r^{-1/k}
    g = make_schwarzschild(n, k, 1.0)
    ctx = GBCContext(n, k)
    raw = _raw_mass_curve(g, ctx, radii, level)
    limit, _, _ = extrapolate(raw, step=step)
    a = 1.0 / limit

    shift = np.zeros(n)
    shift[0] = 1.0
    gt = make_schwarzschild(n, k, 1.0, center=shift)
    mass_t = extrapolate(_raw_mass_curve(gt, ctx, radii, level), step=step)[0] * a
    raw_center = extrapolate(_raw_center_curve(gt, ctx, radii, level, 0),
                             step=step)[0]
    c = mass_t ** k / raw_center

    cc = extrapolate(_curv_curve(gt, ctx, radii, level, 0), step=step)[0]
    b = cc / (mass_t ** k * 1.0)
    return {"a": float(a), "c": float(c), "b": float(b)}


def _curv_curve(g: MetricField, ctx: GBCContext, radii, level: int, axis: int):
    out = []
    for r in radii:
        val = _adaptive_integral(
            ctx.n, r, level,
            lambda xs, nus: curvature_center_integrand(g, xs, nus, ctx, axis))
        out.append((float(r), val))
    return out
