"""Connection, curvature, and field-level double-form operators.

Field-level objects are handled as covariant jets: a list [F, DF, DDF] whose
m-th entry carries m leading covariant-derivative axes in front of the
compressed component axes.  The exterior derivatives insert a derivative
index into a block by antisymmetrization, which is a natural operation on
covariant tensors, so jets push through all operators without extra
correction terms.
"""

from __future__ import annotations

from math import comb

import numpy as np

from .dforms import (
    DoubleForm,
    PointMetric,
    coform,
    derivation_action,
    form,
    hodge,
    metric_form,
    wedge,
)
from .fields import MetricField, RadialPoly, TensorRadialPoly
from .multiindex import multi_indices

__all__ = [
    "Connection",
    "christoffel",
    "christoffel_d1",
    "riemann",
    "riemann_partial_d1",
    "riemann_cov_d1",
    "pack_22",
    "DoubleFormField",
    "PolynomialDoubleFormField",
    "deviation_field",
    "lie_flat",
    "hess_flat",
    "ext_deriv",
    "codiff",
    "d_left_comps",
    "d_right_comps",
    "codiff_sign",
    "jet_wedge",
    "jet_d_left",
    "jet_d_right",
    "jet_hodge",
    "jet_scale",
    "metric_jet",
    "riemann_jet",
]


# ---------------------------------------------------------------------------
# connection and curvature
# ---------------------------------------------------------------------------

def christoffel(g: MetricField, x: np.ndarray) -> np.ndarray:
    """Levi-Civita symbols Gamma^a_ij, shape (..., a, i, j)."""
    G = g.eval(x)
    d1 = g.d1(x)
    Ginv = np.linalg.inv(G)
    # d1[..., k, i, j] = d_k g_ij
    lower = 0.5 * (np.einsum("...ijl->...lij", d1)
                   + np.einsum("...jil->...lij", d1)
                   - np.einsum("...lij->...lij", d1))
    return np.einsum("...al,...lij->...aij", Ginv, lower)


def christoffel_d1(g: MetricField, x: np.ndarray) -> np.ndarray:
    """Partial derivatives d_k Gamma^a_ij, shape (..., k, a, i, j)."""
    G = g.eval(x)
    d1 = g.d1(x)
    d2 = g.d2(x)
    Ginv = np.linalg.inv(G)
    dGinv = -np.einsum("...am,...kmn,...nl->...kal", Ginv, d1, Ginv)
    lower = 0.5 * (np.einsum("...ijl->...lij", d1)
                   + np.einsum("...jil->...lij", d1)
                   - d1)
    dlower = 0.5 * (np.einsum("...kijl->...klij", d2)
                    + np.einsum("...kjil->...klij", d2)
                    - d2)
    return (np.einsum("...kal,...lij->...kaij", dGinv, lower)
            + np.einsum("...al,...klij->...kaij", Ginv, dlower))


_RIEMANN_SIGN = 1.0


def _riemann_array(g: MetricField, x: np.ndarray) -> np.ndarray:
    """Lowered curvature R[i,j,k,l] matching the double-form convention.

    The overall sign is fixed so that the round sphere has positive values on
    (e_i, e_j; e_i, e_j), i.e. R = (lambda/2) g owedge g with lambda > 0.
    """
    G = g.eval(x)
    d2 = g.d2(x)
    gam = christoffel(g, x)
    # second-derivative part: 1/2 (d_i d_l g_jk + d_j d_k g_il - d_i d_k g_jl - d_j d_l g_ik)
    dd = 0.5 * (np.einsum("...iljk->...ijkl", d2) + np.einsum("...jkil->...ijkl", d2)
                - np.einsum("...ikjl->...ijkl", d2) - np.einsum("...jlik->...ijkl", d2))
    quad = np.einsum("...ab,...ail,...bjk->...ijkl", G, gam, gam, optimize=True) \
        - np.einsum("...ab,...aik,...bjl->...ijkl", G, gam, gam, optimize=True)
    return _RIEMANN_SIGN * (dd + quad)


def pack_22(arr: np.ndarray, n: int) -> DoubleForm:
    """Pack a 4-index array antisymmetric in (0,1) and (2,3) into a (2,2) form."""
    idx = multi_indices(n, 2)
    C = comb(n, 2)
    comps = np.empty(arr.shape[:-4] + (C, C))
    for a, (i, j) in enumerate(idx):
        for b, (k, l) in enumerate(idx):
            comps[..., a, b] = arr[..., i, j, k, l]
    return DoubleForm(n, 2, 2, comps)


def riemann(g: MetricField, x: np.ndarray) -> DoubleForm:
    """Riemann curvature of g at x as a symmetric (2,2) double form."""
    return pack_22(_riemann_array(g, x), g.n)


def riemann_partial_d1(g: MetricField, x: np.ndarray) -> np.ndarray:
    """Plain partial derivatives d_m R[i,j,k,l], shape (..., m, n, n, n, n)."""
    G = g.eval(x)
    d1 = g.d1(x)
    d3 = g.d3(x)
    gam = christoffel(g, x)
    dgam = christoffel_d1(g, x)
    ddd = 0.5 * (np.einsum("...miljk->...mijkl", d3) + np.einsum("...mjkil->...mijkl", d3)
                 - np.einsum("...mikjl->...mijkl", d3) - np.einsum("...mjlik->...mijkl", d3))
    quad = (np.einsum("...mab,...ail,...bjk->...mijkl", d1, gam, gam)
            - np.einsum("...mab,...aik,...bjl->...mijkl", d1, gam, gam)
            + np.einsum("...ab,...mail,...bjk->...mijkl", G, dgam, gam)
            + np.einsum("...ab,...ail,...mbjk->...mijkl", G, gam, dgam)
            - np.einsum("...ab,...maik,...bjl->...mijkl", G, dgam, gam)
            - np.einsum("...ab,...aik,...mbjl->...mijkl", G, gam, dgam))
    return _RIEMANN_SIGN * (ddd + quad)


def riemann_cov_d1(g: MetricField, x: np.ndarray) -> np.ndarray:
    """Covariant derivative (nabla_m R)[i,j,k,l], shape (..., m, n, n, n, n)."""
    dR = riemann_partial_d1(g, x)
    R = _riemann_array(g, x)
    gam = christoffel(g, x)
    corr = (np.einsum("...ami,...ajkl->...mijkl", gam, R)
            + np.einsum("...amj,...iakl->...mijkl", gam, R)
            + np.einsum("...amk,...ijal->...mijkl", gam, R)
            + np.einsum("...aml,...ijka->...mijkl", gam, R))
    return dR - corr


class Connection:
    """Flat background connection or the Levi-Civita connection of a metric."""

    def __init__(self, g: MetricField | None = None):
        self.g = g
        self.kind = "flat" if g is None else "levi-civita"

    def christoffel(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.g is None:
            n = x.shape[-1]
            return np.zeros(x.shape[:-1] + (n,) * 3)
        return christoffel(self.g, x)

    def christoffel_d1(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.g is None:
            n = x.shape[-1]
            return np.zeros(x.shape[:-1] + (n,) * 4)
        return christoffel_d1(self.g, x)


# ---------------------------------------------------------------------------
# double-form fields
# ---------------------------------------------------------------------------

class DoubleFormField:
    """A chart-point-to-DoubleForm map with optional partial derivatives.

    `d1(x)` returns plain partials with one leading derivative axis; `d2(x)`
    adds a second.  Fields built from closed forms provide these exactly.
    """

    def __init__(self, n: int, p: int, q: int, eval_fn, d1_fn=None, d2_fn=None):
        self.n, self.p, self.q = n, p, q
        self._eval = eval_fn
        self._d1 = d1_fn
        self._d2 = d2_fn

    def eval(self, x: np.ndarray) -> DoubleForm:
        return DoubleForm(self.n, self.p, self.q, self._eval(np.asarray(x, dtype=float)))

    def d1(self, x: np.ndarray) -> np.ndarray:
        if self._d1 is None:
            raise ValueError("field has no derivative evaluator")
        return self._d1(np.asarray(x, dtype=float))

    def d2(self, x: np.ndarray) -> np.ndarray:
        if self._d2 is None:
            raise ValueError("field has no second-derivative evaluator")
        return self._d2(np.asarray(x, dtype=float))


class PolynomialDoubleFormField(DoubleFormField):
    """Component-wise polynomial double-form field with exact derivatives."""

    def __init__(self, n: int, p: int, q: int, trp: TensorRadialPoly):
        if trp.shape != (comb(n, p), comb(n, q)):
            raise ValueError("component polynomial array has wrong shape")
        trp1 = trp.deriv()
        trp2 = trp1.deriv()
        super().__init__(n, p, q, trp, trp1, trp2)
        self.trp = trp

    @classmethod
    def random(cls, n: int, p: int, q: int, seed: int = 0, degree: int = 2
               ) -> "PolynomialDoubleFormField":
        rng = np.random.default_rng(seed)
        Cp, Cq = comb(n, p), comb(n, q)
        arr = np.empty((Cp, Cq), dtype=object)
        monos = [(0,) * n]
        for d in range(1, degree + 1):
            for i in range(n):
                alpha = [0] * n
                alpha[i] = d
                monos.append(tuple(alpha))
            if d >= 2:
                for i in range(n - 1):
                    alpha = [0] * n
                    alpha[i], alpha[i + 1] = 1, d - 1
                    monos.append(tuple(alpha))
        for a in range(Cp):
            for b in range(Cq):
                poly = RadialPoly.zero(n)
                for alpha in monos:
                    poly = poly + RadialPoly.monomial(n, alpha, 0.0, rng.standard_normal())
                arr[a, b] = poly
        return cls(n, p, q, TensorRadialPoly(n, arr))


def deviation_field(g: MetricField) -> DoubleFormField:
    """e = g - b as a (1,1) double-form field with exact derivatives."""
    n = g.n
    return DoubleFormField(
        n, 1, 1,
        lambda x: g.eval(x) - np.eye(n),
        lambda x: g.d1(x),
        lambda x: g.d2(x),
    )


def lie_flat(zeta_d1: np.ndarray, n: int) -> DoubleForm:
    """Lie derivative of the flat metric: (L_zeta b)_ij = d_i zeta_j + d_j zeta_i."""
    arr = zeta_d1 + np.swapaxes(zeta_d1, -1, -2)
    return DoubleForm(n, 1, 1, arr)


def hess_flat(V_d2: np.ndarray, n: int) -> DoubleForm:
    """Euclidean Hessian of a scalar as a (1,1) double form."""
    return DoubleForm(n, 1, 1, np.asarray(V_d2, dtype=float))


# ---------------------------------------------------------------------------
# exterior derivatives on component arrays
# ---------------------------------------------------------------------------

def d_left_comps(n: int, p: int, q: int, covd: np.ndarray) -> DoubleForm:
    """Left exterior derivative from the covariant derivative array.

    `covd` has shape (..., n, Cp, Cq) with the derivative axis first;
    the result is -sum_k dx^k owedge covd[k].
    """
    out = None
    eye = np.eye(n)
    for k in range(n):
        term = wedge(form(n, eye[k]), DoubleForm(n, p, q, covd[..., k, :, :]))
        out = term if out is None else out + term
    return -1.0 * out


def d_right_comps(n: int, p: int, q: int, covd: np.ndarray) -> DoubleForm:
    """Right exterior derivative: -sum_k covd[k] owedge dx~^k."""
    out = None
    eye = np.eye(n)
    for k in range(n):
        term = wedge(DoubleForm(n, p, q, covd[..., k, :, :]), coform(n, eye[k]))
        out = term if out is None else out + term
    return -1.0 * out


def _cov_d1_comps(comps: np.ndarray, partial: np.ndarray, gamma: np.ndarray | None,
                  n: int, p: int, q: int) -> np.ndarray:
    """nabla_k of compressed components from plain partials and Christoffels."""
    if gamma is None:
        return partial
    corr = np.empty_like(partial)
    for k in range(n):
        A = gamma[..., :, k, :]  # A[m, i] = Gamma^m_{k i}
        corr[..., k, :, :] = derivation_action(A, DoubleForm(n, p, q, comps)).comps
    return partial - corr


def ext_deriv(omega: DoubleFormField, x: np.ndarray, side: str = "left",
              conn: Connection | None = None) -> DoubleForm:
    """Exterior derivative of a double-form field at x (left or right)."""
    conn = conn or Connection()
    x = np.asarray(x, dtype=float)
    comps = omega.eval(x).comps
    partial = omega.d1(x)
    gamma = None if conn.kind == "flat" else conn.christoffel(x)
    covd = _cov_d1_comps(comps, partial, gamma, omega.n, omega.p, omega.q)
    if side == "left":
        return d_left_comps(omega.n, omega.p, omega.q, covd)
    if side == "right":
        return d_right_comps(omega.n, omega.p, omega.q, covd)
    raise ValueError("side must be 'left' or 'right'")


def codiff_sign(n: int, p: int, q: int, side: str) -> float:
    """Sign of the adjoint exterior derivative in delta = -(sign) * star D star."""
    if side == "left":
        return float((-1) ** (n * (p + 1) + q * (n - q)))
    return float((-1) ** (n * (q + 1) + p * (n - p)))


def codiff(omega: DoubleFormField, x: np.ndarray, side: str = "left",
           conn: Connection | None = None, G: PointMetric | None = None) -> DoubleForm:
    """Divergence delta = -D^* with D^* the signed star-D-star composition.

    With the flat connection the stars are Euclidean; with a Levi-Civita
    connection pass the pointwise metric G so the stars match the connection.
    """
    conn = conn or Connection()
    x = np.asarray(x, dtype=float)
    n, p, q = omega.n, omega.p, omega.q

    star = DoubleFormField(
        n, n - p, n - q,
        lambda y: hodge(omega.eval(y), _metric_at(G, conn, y)).comps,
        lambda y: _hodge_of_derivatives(omega, y, conn, G),
    )
    d_star = ext_deriv(star, x, side=side, conn=conn)
    out = hodge(d_star, _metric_at(G, conn, x))
    return -codiff_sign(n, p, q, side) * out


def _metric_at(G: PointMetric | None, conn: Connection, x: np.ndarray) -> PointMetric | None:
    if G is not None:
        return G
    if conn.kind == "flat":
        return None
    return PointMetric(conn.g.eval(x))


def _hodge_of_derivatives(omega: DoubleFormField, x: np.ndarray, conn: Connection,
                          G: PointMetric | None) -> np.ndarray:
    """Covariant derivative of star(omega): star commutes with nabla.

    Returned as the equivalent *partial*-derivative array so that ext_deriv
    can re-apply its own connection correction and recover nabla(star omega).
    """
    n, p, q = omega.n, omega.p, omega.q
    comps = omega.eval(x).comps
    partial = omega.d1(x)
    gamma = None if conn.kind == "flat" else conn.christoffel(x)
    covd = _cov_d1_comps(comps, partial, gamma, n, p, q)
    met = _metric_at(G, conn, x)
    star_cov = np.stack(
        [hodge(DoubleForm(n, p, q, covd[..., k, :, :]), met).comps for k in range(n)],
        axis=-3,
    )
    if gamma is None:
        return star_cov
    # invert the correction that ext_deriv will apply to the starred field
    star_comps = hodge(DoubleForm(n, p, q, comps), met).comps
    corr = np.empty_like(star_cov)
    for k in range(n):
        A = gamma[..., :, k, :]
        corr[..., k, :, :] = derivation_action(
            A, DoubleForm(n, n - p, n - q, star_comps)).comps
    return star_cov + corr


# ---------------------------------------------------------------------------
# covariant jets
# ---------------------------------------------------------------------------

class Jet:
    """A double form together with covariant derivatives to some depth.

    levels[m] has shape (..., n^m derivative axes, Cp, Cq), fully covariant.
    """

    def __init__(self, n: int, p: int, q: int, levels: list[np.ndarray]):
        self.n, self.p, self.q = n, p, q
        self.levels = levels

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def form(self) -> DoubleForm:
        return DoubleForm(self.n, self.p, self.q, self.levels[0])


def jet_from_partials(n: int, p: int, q: int, comps: np.ndarray,
                      partial1: np.ndarray | None = None,
                      partial2: np.ndarray | None = None,
                      gamma: np.ndarray | None = None,
                      dgamma: np.ndarray | None = None) -> Jet:
    """Build covariant jets from plain partial derivatives and Christoffels."""
    levels = [comps]
    if partial1 is not None:
        cov1 = _cov_d1_comps(comps, partial1, gamma, n, p, q)
        levels.append(cov1)
        if partial2 is not None:
            if gamma is None:
                levels.append(partial2)
            else:
                cov2 = np.empty_like(partial2)
                for a in range(n):
                    A_a = gamma[..., :, a, :]
                    for b in range(n):
                        # d_a (nabla_b omega) = dd omega - D(d_a Gamma_b) omega - D(Gamma_b) d_a omega
                        Ab = gamma[..., :, b, :]
                        dAb = dgamma[..., a, :, b, :]
                        t = partial2[..., a, b, :, :]
                        t = t - derivation_action(dAb, DoubleForm(n, p, q, comps)).comps
                        t = t - derivation_action(
                            Ab, DoubleForm(n, p, q, partial1[..., a, :, :])).comps
                        # - Gamma^m_{ab} nabla_m omega
                        t = t - np.einsum("...m,...mIJ->...IJ",
                                          gamma[..., :, a, b], cov1)
                        # - D(Gamma_a) nabla_b omega
                        t = t - derivation_action(
                            A_a, DoubleForm(n, p, q, cov1[..., b, :, :])).comps
                        cov2[..., a, b, :, :] = t
                levels.append(cov2)
    return Jet(n, p, q, levels)


def jet_scale(a: Jet, c: float) -> Jet:
    return Jet(a.n, a.p, a.q, [c * lv for lv in a.levels])


def jet_add(a: Jet, b: Jet) -> Jet:
    depth = min(a.depth, b.depth)
    return Jet(a.n, a.p, a.q, [a.levels[m] + b.levels[m] for m in range(depth + 1)])


def jet_wedge(a: Jet, b: Jet) -> Jet:
    """Kulkarni-Nomizu product of jets with the Leibniz rule on derivatives."""
    n = a.n
    p, q = a.p + b.p, a.q + b.q
    depth = min(a.depth, b.depth)

    def w(ca, pa, qa, cb, pb, qb):
        return wedge(DoubleForm(n, pa, qa, ca), DoubleForm(n, pb, qb, cb)).comps

    levels = [w(a.levels[0], a.p, a.q, b.levels[0], b.p, b.q)]
    if depth >= 1:
        lv1 = (w(a.levels[1], a.p, a.q, b.levels[0][..., None, :, :], b.p, b.q)
               + w(a.levels[0][..., None, :, :], a.p, a.q, b.levels[1], b.p, b.q))
        levels.append(lv1)
    if depth >= 2:
        a0 = a.levels[0][..., None, None, :, :]
        b0 = b.levels[0][..., None, None, :, :]
        a1a = a.levels[1][..., :, None, :, :]
        a1b = a.levels[1][..., None, :, :, :]
        b1a = b.levels[1][..., :, None, :, :]
        b1b = b.levels[1][..., None, :, :, :]
        lv2 = (w(a.levels[2], a.p, a.q, b0, b.p, b.q)
               + w(a1a, a.p, a.q, b1b, b.p, b.q)
               + w(a1b, a.p, a.q, b1a, b.p, b.q)
               + w(a0, a.p, a.q, b.levels[2], b.p, b.q))
        levels.append(lv2)
    return Jet(n, p, q, levels)


def jet_d_left(a: Jet) -> Jet:
    """Left exterior derivative of a jet (loses one derivative level)."""
    n = a.n
    levels = []
    for m in range(a.depth):
        lv = a.levels[m + 1]
        # the exterior-derivative index is the last derivative axis
        levels.append(d_left_comps(n, a.p, a.q, lv).comps)
    if not levels:
        raise ValueError("jet depth too small for an exterior derivative")
    return Jet(n, a.p + 1, a.q, levels)


def jet_d_right(a: Jet) -> Jet:
    n = a.n
    levels = []
    for m in range(a.depth):
        lv = a.levels[m + 1]
        out = d_right_comps(n, a.p, a.q, lv)
        levels.append(out.comps)
    if not levels:
        raise ValueError("jet depth too small for an exterior derivative")
    return Jet(n, a.p, a.q + 1, levels)


def jet_hodge(a: Jet, G: PointMetric | None = None) -> Jet:
    """Hodge star of a jet: the star commutes with the covariant derivative."""
    n = a.n
    levels = []
    for m, lv in enumerate(a.levels):
        Gm = G
        if G is not None and m > 0:
            # broadcast the pointwise metric over the m derivative axes
            expand = G.G[(Ellipsis,) + (None,) * m + (slice(None), slice(None))]
            Gm = PointMetric(np.broadcast_to(
                expand, lv.shape[:-2] + (n, n)).copy(), G.orientation)
        levels.append(hodge(DoubleForm(n, a.p, a.q, lv), Gm).comps)
    return Jet(n, n - a.p, n - a.q, levels)


def metric_jet(n: int, G: np.ndarray | None = None, depth: int = 1,
               batch_shape: tuple[int, ...] = ()) -> Jet:
    """The metric as a covariantly constant (1,1) jet."""
    comps = metric_form(n, G).comps
    comps = np.broadcast_to(comps, batch_shape + comps.shape[-2:]).copy()
    levels = [comps]
    for m in range(1, depth + 1):
        levels.append(np.zeros(batch_shape + (n,) * m + comps.shape[-2:]))
    return Jet(n, 1, 1, levels)


def riemann_jet(g: MetricField, x: np.ndarray, depth: int = 1) -> Jet:
    """Curvature of g at x as a jet (depth 0 or 1)."""
    R = riemann(g, x)
    levels = [R.comps]
    if depth >= 1:
        covd = riemann_cov_d1(g, x)
        levels.append(np.stack(
            [pack_22(covd[..., m, :, :, :, :], g.n).comps for m in range(g.n)],
            axis=-3))
    if depth >= 2:
        raise ValueError("riemann_jet supports depth <= 1")
    return Jet(g.n, 2, 2, levels)
