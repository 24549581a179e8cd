"""Pointwise double forms: bidegree-(p,q) antisymmetric tensors and their algebra.

A double form of bidegree (p, q) in dimension n is stored densely over pairs
of strictly increasing multi-indices, with component array shape
``batch + (C(n,p), C(n,q))``; all operations broadcast over leading batch
axes.  Products use the determinant convention (shuffle sums, no factorial
division), which is pinned by the identity ``star(g^k) = k!/(n-k)! g^(n-k)``.

Metric-dependent operations accept a :class:`PointMetric`; components are
transformed to an orthonormal frame (Cholesky), the identity-metric operation
is applied there, and the result is transformed back.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .multiindex import (
    compound_matrix,
    derivation_tensor,
    eval_cache,
    hodge_matrix,
    interior_tensor,
    wedge_matrix,
)

__all__ = [
    "DoubleForm",
    "PointMetric",
    "wedge",
    "wedge_power",
    "contract",
    "inner",
    "hodge",
    "bianchi",
    "transpose",
    "interior",
    "form",
    "coform",
    "metric_form",
    "zero_form",
    "scalar_form",
    "volume_form",
    "evaluate",
]


class DegreeError(ValueError):
    """Raised on bidegree mismatches or degree overflow."""


@dataclass(frozen=True)
class DoubleForm:
    """Element(s) of the (p, q) double-form space in dimension n.

    `comps` has shape ``batch + (C(n,p), C(n,q))``; entry [I, J] is the value
    on the basis vectors indexed by the increasing multi-indices I and J.
    """

    n: int
    p: int
    q: int
    comps: np.ndarray

    def __post_init__(self):
        expected = (comb(self.n, self.p), comb(self.n, self.q))
        if self.comps.shape[-2:] != expected:
            raise ValueError(
                f"component shape {self.comps.shape[-2:]} does not match "
                f"(n,p,q)=({self.n},{self.p},{self.q}), expected {expected}"
            )

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.comps.shape[:-2]

    def __add__(self, other: "DoubleForm") -> "DoubleForm":
        _same_degree(self, other)
        return DoubleForm(self.n, self.p, self.q, self.comps + other.comps)

    def __sub__(self, other: "DoubleForm") -> "DoubleForm":
        _same_degree(self, other)
        return DoubleForm(self.n, self.p, self.q, self.comps - other.comps)

    def __mul__(self, scalar) -> "DoubleForm":
        return DoubleForm(self.n, self.p, self.q, self.comps * np.asarray(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "DoubleForm":
        return DoubleForm(self.n, self.p, self.q, -self.comps)

    def norm(self) -> np.ndarray:
        """Euclidean (identity-metric) norm over the component axes."""
        return np.sqrt(np.sum(self.comps**2, axis=(-2, -1)))

    def item(self) -> float:
        """Scalar value of an unbatched (0,0) form."""
        if (self.p, self.q) != (0, 0):
            raise DegreeError("item() is only defined for (0,0) forms")
        return float(self.comps.reshape(-1)[0]) if self.comps.size == 1 else self.comps[..., 0, 0]


@dataclass(frozen=True)
class PointMetric:
    """Inner product at a point: symmetric positive-definite matrix G.

    Batched over leading axes.  `orientation` flips the Hodge star sign.
    """

    G: np.ndarray
    orientation: int = 1
    _chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        G = np.asarray(self.G, dtype=float)
        if G.shape[-1] != G.shape[-2]:
            raise ValueError("metric matrix must be square")
        if not np.allclose(G, np.swapaxes(G, -1, -2), atol=1e-12):
            raise ValueError("metric matrix must be symmetric")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        try:
            chol = np.linalg.cholesky(G)
        except np.linalg.LinAlgError as exc:
            raise ValueError("metric matrix must be positive-definite") from exc
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "_chol", chol)

    @property
    def n(self) -> int:
        return self.G.shape[-1]

    def frame(self) -> np.ndarray:
        """Columns form a G-orthonormal frame (inverse transpose Cholesky)."""
        ident = np.eye(self.n)
        return np.swapaxes(np.linalg.solve(self._chol, ident), -1, -2)

    def frame_inverse(self) -> np.ndarray:
        return np.swapaxes(self._chol, -1, -2)


def _same_degree(a: DoubleForm, b: DoubleForm) -> None:
    if a.n != b.n:
        raise DegreeError(f"dimension mismatch: {a.n} vs {b.n}")
    if (a.p, a.q) != (b.p, b.q):
        raise DegreeError(f"bidegree mismatch: ({a.p},{a.q}) vs ({b.p},{b.q})")


def _is_identity(G: PointMetric | None) -> bool:
    if G is None:
        return True
    n = G.n
    return G.G.shape == (n, n) and np.array_equal(G.G, np.eye(n)) and G.orientation == 1


def _basis_change(omega: DoubleForm, F: np.ndarray) -> DoubleForm:
    """Components of `omega` in the frame given by the columns of F."""
    Cp = compound_matrix(F, omega.p)
    Cq = compound_matrix(F, omega.q)
    comps = np.einsum("...ab,...ax,...by->...xy", omega.comps, Cp, Cq,
                      optimize=True)
    return DoubleForm(omega.n, omega.p, omega.q, comps)


def _with_frame(op, omega: DoubleForm, G: PointMetric | None, *args):
    """Run an identity-metric operation in a G-orthonormal frame."""
    if _is_identity(G):
        return op(omega, *args)
    out = op(_basis_change(omega, G.frame()), *args)
    return _basis_change(out, G.frame_inverse())


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def zero_form(n: int, p: int, q: int, batch_shape: tuple[int, ...] = ()) -> DoubleForm:
    return DoubleForm(n, p, q, np.zeros(batch_shape + (comb(n, p), comb(n, q))))


def scalar_form(n: int, value) -> DoubleForm:
    value = np.asarray(value, dtype=float)
    return DoubleForm(n, 0, 0, value[..., None, None])


def form(n: int, comps) -> DoubleForm:
    """A (1,0) form from its n coefficients."""
    comps = np.asarray(comps, dtype=float)
    return DoubleForm(n, 1, 0, comps[..., :, None])


def coform(n: int, comps) -> DoubleForm:
    """A (0,1) form (tilded variant) from its n coefficients."""
    comps = np.asarray(comps, dtype=float)
    return DoubleForm(n, 0, 1, comps[..., None, :])


def metric_form(n: int, G: np.ndarray | None = None) -> DoubleForm:
    """A symmetric bilinear form (the metric, by default the identity) in (1,1)."""
    if G is None:
        G = np.eye(n)
    return DoubleForm(n, 1, 1, np.asarray(G, dtype=float))


def volume_form(n: int) -> DoubleForm:
    """The double volume form dvol (x) dvol in bidegree (n, n)."""
    return DoubleForm(n, n, n, np.ones((1, 1)))


# ---------------------------------------------------------------------------
# algebra
# ---------------------------------------------------------------------------

def wedge(a: DoubleForm, b: DoubleForm) -> DoubleForm:
    """Kulkarni-Nomizu product: blockwise determinant-convention wedge."""
    if a.n != b.n:
        raise DegreeError(f"dimension mismatch: {a.n} vs {b.n}")
    n, p, q = a.n, a.p + b.p, a.q + b.q
    if p > n or q > n:
        raise DegreeError(
            f"degree overflow: ({a.p}+{b.p}, {a.q}+{b.q}) exceeds n={n}"
        )
    WL = wedge_matrix(n, a.p, b.p)
    WR = wedge_matrix(n, a.q, b.q)
    kron = np.einsum("...ij,...kl->...ikjl", a.comps, b.comps)
    kron = kron.reshape(kron.shape[:-4] + (WL.shape[1], WR.shape[1]))
    comps = np.einsum("ai,...ij,bj->...ab", WL, kron, WR, optimize=True)
    return DoubleForm(n, p, q, comps)


def wedge_power(a: DoubleForm, k: int) -> DoubleForm:
    """k-th Kulkarni-Nomizu power; k = 0 gives the unit scalar form."""
    if k < 0:
        raise ValueError("wedge power must be nonnegative")
    out = scalar_form(a.n, np.ones(a.batch_shape))
    for _ in range(k):
        out = wedge(out, a)
    return out


def transpose(a: DoubleForm) -> DoubleForm:
    return DoubleForm(a.n, a.q, a.p, np.swapaxes(a.comps, -1, -2))


def _hodge_identity(a: DoubleForm, orientation: int = 1) -> DoubleForm:
    HL = hodge_matrix(a.n, a.p)
    HR = hodge_matrix(a.n, a.q)
    comps = orientation * np.einsum("ai,...ij,bj->...ab", HL, a.comps, HR,
                                    optimize=True)
    return DoubleForm(a.n, a.n - a.p, a.n - a.q, comps)


def hodge(a: DoubleForm, G: PointMetric | None = None) -> DoubleForm:
    """Blockwise Hodge star; satisfies *^2 = (-1)^((p+q)(n-p-q)) id."""
    if _is_identity(G):
        return _hodge_identity(a)
    return _with_frame(_hodge_identity, a, G, G.orientation)


def _contract_identity(a: DoubleForm) -> DoubleForm:
    if a.p < 1 or a.q < 1:
        raise DegreeError("contraction needs p >= 1 and q >= 1")
    TL = interior_tensor(a.n, a.p)
    TR = interior_tensor(a.n, a.q)
    comps = np.einsum("kaA,kbB,...AB->...ab", TL, TR, a.comps, optimize=True)
    return DoubleForm(a.n, a.p - 1, a.q - 1, comps)


def contract(a: DoubleForm, G: PointMetric | None = None) -> DoubleForm:
    """Metric trace pairing one left with one right slot (adjoint of g-wedge)."""
    return _with_frame(_contract_identity, a, G)


def _inner_identity(a: DoubleForm, b: DoubleForm) -> np.ndarray:
    return np.einsum("...ij,...ij->...", a.comps, b.comps)


def inner(a: DoubleForm, b: DoubleForm, G: PointMetric | None = None) -> np.ndarray:
    """Tensor-product scalar product of two double forms of equal bidegree."""
    _same_degree(a, b)
    if _is_identity(G):
        return _inner_identity(a, b)
    F = G.frame()
    return _inner_identity(_basis_change(a, F), _basis_change(b, F))


def _interior_identity(X: np.ndarray, a: DoubleForm, side: str) -> DoubleForm:
    X = np.asarray(X, dtype=float)
    if side == "left":
        if a.p < 1:
            raise DegreeError("left interior product needs p >= 1")
        T = interior_tensor(a.n, a.p)
        comps = np.einsum("...k,kaA,...Aj->...aj", X, T, a.comps)
        return DoubleForm(a.n, a.p - 1, a.q, comps)
    if side == "right":
        if a.q < 1:
            raise DegreeError("right interior product needs q >= 1")
        T = interior_tensor(a.n, a.q)
        comps = np.einsum("...k,kbB,...iB->...ib", X, T, a.comps)
        return DoubleForm(a.n, a.p, a.q - 1, comps)
    raise ValueError("side must be 'left' or 'right'")


def interior(X: np.ndarray, a: DoubleForm, side: str = "left",
             G: PointMetric | None = None) -> DoubleForm:
    """Insert the vector X into the first slot of the chosen block."""
    if _is_identity(G):
        return _interior_identity(X, a, side)
    # In the orthonormal frame the vector components are (L^T X).
    Xf = np.einsum("...ij,...j->...i", G.frame_inverse(), X)
    out = _interior_identity(Xf, _basis_change(a, G.frame()), side)
    return _basis_change(out, G.frame_inverse())


def _bianchi_identity_metric(a: DoubleForm, side: str) -> DoubleForm:
    n = a.n
    if side == "left":
        out = zero_form(n, a.p + 1, a.q - 1, a.batch_shape)
        for k in range(n):
            ek = form(n, np.eye(n)[k])
            out = out + wedge(ek, _interior_identity(np.eye(n)[k], a, "right"))
        return -1.0 * out
    if side == "right":
        if a.p < 1:
            return zero_form(n, 0, a.q, a.batch_shape)
        out = zero_form(n, a.p - 1, a.q + 1, a.batch_shape)
        for k in range(n):
            ek = coform(n, np.eye(n)[k])
            out = out + wedge(_interior_identity(np.eye(n)[k], a, "left"), ek)
        return -1.0 * out
    raise ValueError("side must be 'left' or 'right'")


def bianchi(a: DoubleForm, side: str = "left", G: PointMetric | None = None) -> DoubleForm:
    """Bianchi alternation map; zero on (p,0) (left) and (0,q) (right) by convention."""
    if side == "left" and a.q == 0:
        return zero_form(a.n, a.p, 0, a.batch_shape)
    if side == "right" and a.p == 0:
        return zero_form(a.n, 0, a.q, a.batch_shape)
    return _with_frame(_bianchi_identity_metric, a, G, side)


def derivation_action(A: np.ndarray, a: DoubleForm) -> DoubleForm:
    """Extend the matrix A as a derivation over both blocks of `a`.

    Replaces each argument slot e_i by A e_i and sums; this is the component
    form of connection corrections and Lie-algebra actions.
    """
    parts = []
    if a.p >= 1:
        WL = derivation_tensor(a.n, a.p)
        parts.append(np.einsum("IJmi,...mi,...Jq->...Iq", WL, A, a.comps))
    if a.q >= 1:
        WR = derivation_tensor(a.n, a.q)
        parts.append(np.einsum("IJmi,...mi,...pJ->...pI", WR, A, a.comps))
    if not parts:
        return zero_form(a.n, 0, 0, a.batch_shape)
    return DoubleForm(a.n, a.p, a.q, sum(parts))


def evaluate(a: DoubleForm, xs, ys) -> np.ndarray:
    """Evaluate on tuples of vectors (multilinear antisymmetric extension).

    `xs` is a sequence of p vectors, `ys` of q vectors (each of length n, or
    batched).  Uses the determinant convention on each block.
    """
    def block_dets(vectors, p):
        if p == 0:
            return np.ones(1)
        V = np.stack([np.asarray(v, dtype=float) for v in vectors], axis=-2)
        idx = eval_cache(a.n, p)
        cols = V[..., :, idx]            # (..., p, C, p)
        cols = np.moveaxis(cols, -2, -3)  # (..., C, p, p)
        return np.linalg.det(cols)

    dL = block_dets(xs, a.p)
    dR = block_dets(ys, a.q)
    return np.einsum("...i,...ij,...j->...", dL, a.comps, dR)
