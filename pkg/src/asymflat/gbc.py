"""Gauss-Bonnet-Chern curvatures, P_k and Lovelock tensors, and the
second-order curvature variation residual.

All stars and metric powers here are taken with the pointwise metric g
itself; the mixed flat/curved expressions of the asymptotic invariants live
in the invariants module.
"""

from __future__ import annotations

from math import factorial

import numpy as np

from .dforms import (
    DoubleForm,
    PointMetric,
    contract,
    hodge,
    metric_form,
    wedge,
    wedge_power,
)
from .curvature import (
    DoubleFormField,
    Jet,
    christoffel,
    christoffel_d1,
    jet_add,
    jet_d_left,
    jet_d_right,
    jet_from_partials,
    riemann,
)
from .fields import MetricField

__all__ = [
    "GBCContext",
    "l_k",
    "p_k",
    "lovelock",
    "scal",
    "ricci",
    "variation_residual",
]


class GBCContext:
    """Dimension/order bookkeeping plus cached flat metric powers.

    Requires n >= 2k; the Lovelock tensor additionally needs n >= 2k + 1.
    The cached powers of the flat metric b are what the asymptotic-invariant
    integrands consume at every quadrature node.
    """

    def __init__(self, n: int, k: int):
        if k < 1:
            raise ValueError("curvature order k must be >= 1")
        if n < 2 * k:
            raise ValueError(f"need n >= 2k, got n={n}, k={k}")
        self.n = n
        self.k = k
        # the 2^k converts determinant-convention curvature powers to the
        # classical complete contractions, making L_1 the scalar curvature
        self.power_norm = 2.0 ** k
        self.norm_factorial = factorial(n - 2 * k)
        self.b_power = wedge_power(metric_form(n), n - 2 * k)
        if n >= 2 * k + 1:
            self.b_power_lovelock = wedge_power(metric_form(n), n - 2 * k - 1)
        else:
            self.b_power_lovelock = None


def _point_data(g: MetricField, x: np.ndarray):
    x = np.asarray(x, dtype=float)
    G = PointMetric(g.eval(x))
    R = riemann(g, x)
    return G, R


def l_k(g: MetricField, x: np.ndarray, ctx: GBCContext) -> np.ndarray:
    """Gauss-Bonnet-Chern curvature L_k, normalized so L_1 = Scal.

    L_k = (2^k / (n-2k)!) * (R^owedge-k owedge g^owedge-(n-2k)); the 2^k
    matches the classical complete contractions of curvature powers.
    """
    G, R = _point_data(g, x)
    gform = DoubleForm(ctx.n, 1, 1, G.G)
    full = wedge(wedge_power(R, ctx.k), wedge_power(gform, ctx.n - 2 * ctx.k))
    val = hodge(full, G)
    return val.comps[..., 0, 0] * ctx.power_norm / ctx.norm_factorial


def p_k(g: MetricField, x: np.ndarray, ctx: GBCContext) -> DoubleForm:
    """The (n-2, n-2) form P_k with *P_k = R^owedge-(k-1) owedge g^owedge-(n-2k) / (n-2k)!.

    The double star on bidegree (2,2) is the identity, so P_k is the g-star
    of the right-hand side.
    """
    G, R = _point_data(g, x)
    gform = DoubleForm(ctx.n, 1, 1, G.G)
    star_p = wedge(wedge_power(R, ctx.k - 1),
                   wedge_power(gform, ctx.n - 2 * ctx.k))
    return (ctx.power_norm / ctx.norm_factorial) * hodge(star_p, G)


def lovelock(g: MetricField, x: np.ndarray, ctx: GBCContext) -> DoubleForm:
    """Lovelock tensor T_k as a (1,1) form.

    T_k = (2^k / (n-2k-1)!) * (R^owedge-k owedge g^owedge-(n-2k-1)), the
    normalization under which the metric trace satisfies c(T_k) = (n-2k) L_k.
    """
    if ctx.n < 2 * ctx.k + 1:
        raise ValueError("Lovelock tensor needs n >= 2k + 1")
    G, R = _point_data(g, x)
    gform = DoubleForm(ctx.n, 1, 1, G.G)
    full = wedge(wedge_power(R, ctx.k), wedge_power(gform, ctx.n - 2 * ctx.k - 1))
    norm = ctx.power_norm / factorial(ctx.n - 2 * ctx.k - 1)
    return norm * hodge(full, G)


def ricci(g: MetricField, x: np.ndarray) -> DoubleForm:
    """Ricci tensor as the metric contraction of the curvature form."""
    G, R = _point_data(g, x)
    return contract(R, G)


def scal(g: MetricField, x: np.ndarray) -> np.ndarray:
    """Scalar curvature as the double metric contraction of the curvature."""
    G, R = _point_data(g, x)
    return contract(contract(R, G), G).comps[..., 0, 0]


class _PerturbedMetric(MetricField):
    """g + eps * h for a symmetric (1,1) field h with two derivatives."""

    def __init__(self, g: MetricField, h: DoubleFormField, eps: float):
        self.n = g.n
        self.tau = g.tau
        self.r_min = g.r_min
        self.regularity = 2
        self.g, self.h, self.eps = g, h, eps

    def eval(self, x):
        G = self.g.eval(x) + self.eps * self.h.eval(x).comps
        eig = np.linalg.eigvalsh(G)
        if np.any(eig <= 0):
            raise ValueError("perturbed metric not positive-definite")
        return G

    def d1(self, x):
        return self.g.d1(x) + self.eps * self.h.d1(x)

    def d2(self, x):
        return self.g.d2(x) + self.eps * self.h.d2(x)


def variation_residual(g: MetricField, h: DoubleFormField, x: np.ndarray,
                       eps: float) -> DoubleForm:
    """R^{g+eps h} - R^g - (1/4)(D Dt + Dt D)(eps h), derivatives in the g-connection.

    The subtracted term is the principal part of the curvature variation in
    this sign convention (validated against centered differences of the
    curvature), so the residual is O(eps) with curved g and O(eps^2) when g
    is flat.
    """
    x = np.asarray(x, dtype=float)
    R_pert = riemann(_PerturbedMetric(g, h, eps), x)
    R_base = riemann(g, x)
    gamma = christoffel(g, x)
    dgamma = christoffel_d1(g, x)
    jh = jet_from_partials(g.n, 1, 1, eps * h.eval(x).comps,
                           eps * h.d1(x), eps * h.d2(x),
                           gamma=gamma, dgamma=dgamma)
    box = jet_add(jet_d_left(jet_d_right(jh)), jet_d_right(jet_d_left(jh)))
    return R_pert - R_base - 0.25 * box.form()
