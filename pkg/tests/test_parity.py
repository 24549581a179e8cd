import numpy as np
import pytest

from asymflat.curvature import deviation_field
from asymflat.fields import make_rt_perturbation, make_schwarzschild
from asymflat.parity import (
    antipodal_pullback,
    decay_rate,
    parity_split,
    rt_check,
    sphere_sample,
)

RADII = [10.0, 20.0, 40.0, 80.0, 160.0]


def test_sphere_sample_deterministic_unit():
    d1 = sphere_sample(4, count=32)
    d2 = sphere_sample(4, count=32)
    assert np.array_equal(d1, d2)
    assert np.allclose(np.linalg.norm(d1, axis=-1), 1.0)


def test_antipodal_pullback_sign():
    g = make_rt_perturbation(3, 1.0, seed=4, parity="odd")
    e = deviation_field(g)
    x = np.array([5.0, -2.0, 3.0])
    pulled = antipodal_pullback(e, x)
    # (p+q) = 2 for the deviation: pullback is plain evaluation at -x
    assert np.allclose(pulled.comps, e.eval(-x).comps)


def test_parity_split_reconstructs_and_projects():
    g = make_rt_perturbation(3, 1.0, seed=6, parity="mixed")
    e = deviation_field(g)
    x = np.array([6.0, 1.0, -2.0])
    even, odd = parity_split(e, x)
    assert np.allclose((even + odd).comps, e.eval(x).comps)
    # even part of an even field: odd projection vanishes
    ge = make_rt_perturbation(3, 1.0, seed=6, parity="even")
    ee = deviation_field(ge)
    _, odd_of_even = parity_split(ee, x)
    assert np.abs(odd_of_even.comps).max() < 1e-15


def test_decay_rate_powers():
    for power in (1.0, 2.5):
        slope = decay_rate(
            lambda x, p=power: np.linalg.norm(x, axis=-1) ** (-p),
            RADII, n=3)
        assert abs(slope + power) < 1e-10


def test_decay_rate_zero_field():
    slope = decay_rate(lambda x: np.zeros(x.shape[0]), RADII, n=3)
    assert slope == float("-inf")


def test_decay_rate_needs_radii():
    with pytest.raises(ValueError):
        decay_rate(lambda x: np.ones(x.shape[0]), [10.0, 20.0], n=3)


def test_rt_check_even_passes():
    g = make_rt_perturbation(3, 1.0, seed=1, parity="even")
    reports = rt_check(g, 1.0, 2, RADII)
    assert all(r.passed for r in reports)
    assert reports[0].odd_slope == float("-inf")


def test_rt_check_mixed_passes():
    g = make_rt_perturbation(3, 1.0, seed=2, parity="mixed")
    reports = rt_check(g, 1.0, 2, RADII)
    assert all(r.passed for r in reports)
    # odd part present but decaying one order faster
    assert reports[0].odd_slope < reports[0].required_odd + 0.1


def test_rt_check_odd_fails():
    g = make_rt_perturbation(3, 1.0, seed=3, parity="odd")
    reports = rt_check(g, 1.0, 1, RADII)
    assert not reports[0].passed


def test_rt_check_schwarzschild_exactly_even():
    g = make_schwarzschild(3, 1, 1.0)
    reports = rt_check(g, 1.0, 2, RADII)
    assert all(r.passed for r in reports)
    for r in reports:
        assert r.odd_slope == float("-inf")


def test_rt_check_regularity_guard():
    g = make_schwarzschild(3, 1, 1.0)
    with pytest.raises(ValueError):
        rt_check(g, 1.0, 4, RADII)


def test_report_serialization():
    g = make_schwarzschild(3, 1, 1.0)
    d = rt_check(g, 1.0, 0, RADII)[0].to_dict()
    assert {"component", "slope", "even_slope", "odd_slope",
            "required", "required_odd", "radii", "passed"} == set(d)
