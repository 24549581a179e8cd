import numpy as np
import pytest

from asymflat.dforms import (
    DoubleForm,
    PointMetric,
    bianchi,
    coform,
    contract,
    evaluate,
    form,
    hodge,
    inner,
    interior,
    metric_form,
    scalar_form,
    transpose,
    volume_form,
    wedge,
    wedge_power,
    zero_form,
)


def random_form(rng, n, p, q, batch=()):
    from math import comb
    return DoubleForm(n, p, q, rng.standard_normal(batch + (comb(n, p), comb(n, q))))


def random_metric(rng, n):
    A = rng.standard_normal((n, n)) * 0.3
    return PointMetric(np.eye(n) + A @ A.T)


def test_shape_validation():
    with pytest.raises(ValueError):
        DoubleForm(4, 2, 1, np.zeros((5, 5)))


def test_degree_mismatch_raises():
    a = zero_form(4, 1, 1)
    b = zero_form(4, 2, 1)
    with pytest.raises(ValueError):
        a + b


def test_wedge_overflow_raises():
    a = zero_form(3, 2, 0)
    with pytest.raises(ValueError):
        wedge(a, a)


def test_metric_power_determinant_convention():
    # g^n = n! vol (x) vol pins the determinant (no-division) convention
    import math
    for n in (3, 4, 5):
        gn = wedge_power(metric_form(n), n)
        assert np.allclose(gn.comps, math.factorial(n) * volume_form(n).comps)


def test_wedge_of_one_forms_is_determinant():
    rng = np.random.default_rng(3)
    n = 5
    u, v, w = rng.standard_normal((3, n))
    omega = wedge(wedge(form(n, u), form(n, v)), form(n, w))
    x, y, z = rng.standard_normal((3, n))
    val = evaluate(omega, [x, y, z], [])
    det = np.linalg.det(np.array([[a @ b for b in (x, y, z)] for a in (u, v, w)]))
    assert np.isclose(val, det)


def test_evaluate_antisymmetry():
    rng = np.random.default_rng(4)
    a = random_form(rng, 4, 2, 1)
    x, y, z = rng.standard_normal((3, 4))
    assert np.isclose(evaluate(a, [x, y], [z]), -evaluate(a, [y, x], [z]))


def test_transpose_involution_and_evaluate():
    rng = np.random.default_rng(5)
    a = random_form(rng, 4, 2, 1)
    at = transpose(a)
    assert (at.p, at.q) == (1, 2)
    assert np.allclose(transpose(at).comps, a.comps)
    x, y, z = rng.standard_normal((3, 4))
    assert np.isclose(evaluate(a, [x, y], [z]), evaluate(at, [z], [x, y]))


def test_hodge_involution_flat():
    rng = np.random.default_rng(6)
    n = 4
    for p in range(n + 1):
        for q in range(n + 1):
            a = random_form(rng, n, p, q)
            sign = (-1) ** ((p + q) * (n - p - q))
            assert np.allclose(hodge(hodge(a)).comps, sign * a.comps, atol=1e-13)


def test_hodge_involution_curved():
    rng = np.random.default_rng(7)
    n = 4
    G = random_metric(rng, n)
    a = random_form(rng, n, 2, 1)
    sign = (-1) ** (3 * (n - 3))
    assert np.allclose(hodge(hodge(a, G), G).comps, sign * a.comps, atol=1e-12)


def test_contract_traces_metric():
    n = 5
    c = contract(metric_form(n))
    assert np.isclose(c.item(), n)


def test_contract_adjoint_to_metric_wedge():
    rng = np.random.default_rng(8)
    n = 4
    G = random_metric(rng, n)
    a = random_form(rng, n, 1, 1)
    b = random_form(rng, n, 2, 2)
    gform = DoubleForm(n, 1, 1, G.G)
    lhs = inner(wedge(gform, a), b, G)
    rhs = inner(a, contract(b, G), G)
    assert np.isclose(lhs, rhs, rtol=1e-11)


def test_interior_first_slot():
    rng = np.random.default_rng(9)
    n = 4
    a = random_form(rng, n, 2, 1)
    X = rng.standard_normal(n)
    y, z = rng.standard_normal((2, n))
    assert np.isclose(
        evaluate(interior(X, a, "left"), [y], [z]), evaluate(a, [X, y], [z]))
    assert np.isclose(
        evaluate(interior(z, a, "right"), [X, y], []), evaluate(a, [X, y], [z]))


def test_bianchi_kills_metric_powers():
    # g^k satisfies the first Bianchi identity for every k
    n = 5
    for k in range(1, n):
        b = bianchi(wedge_power(metric_form(n), k), "left")
        assert np.abs(b.comps).max() < 1e-13


def test_bianchi_nonzero_on_generic_form():
    rng = np.random.default_rng(10)
    a = random_form(rng, 4, 1, 1)
    a = DoubleForm(4, 1, 1, a.comps - np.swapaxes(a.comps, -1, -2))  # antisymmetric part
    assert bianchi(a, "left").norm() > 0.1


def test_batched_broadcasting():
    rng = np.random.default_rng(11)
    a = random_form(rng, 3, 1, 1, batch=(7,))
    b = random_form(rng, 3, 1, 0, batch=(7,))
    out = wedge(a, b)
    assert out.batch_shape == (7,)
    for i in range(7):
        single = wedge(DoubleForm(3, 1, 1, a.comps[i]), DoubleForm(3, 1, 0, b.comps[i]))
        assert np.allclose(out.comps[i], single.comps)


def test_coform_and_scalar_constructors():
    n = 3
    s = scalar_form(n, 2.5)
    assert s.item() == 2.5
    c = coform(n, [1.0, 0.0, 0.0])
    assert (c.p, c.q) == (0, 1)
    assert np.allclose(wedge(s, c).comps, 2.5 * c.comps)


def test_inner_is_positive_definite_flat():
    rng = np.random.default_rng(12)
    a = random_form(rng, 4, 2, 2)
    assert inner(a, a) > 0
