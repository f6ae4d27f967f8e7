"""Regularized oscillatory moments against their closed forms.

The closed values are exact on the principal branch: with K = (2 pi i D
eps)^(1/2), the n-th moment is K times {1, 0, i D eps, -3 (D eps)^2} for
n = {0, 1, 2, 4}.  The quadrature must recover them through the regulator
ladder without being told the answer.
"""

import numpy as np
import pytest

from gaussprop import (
    FieldSpec,
    MOMENT_ORDERS,
    PropagatorSpec,
    RegularizedQuadrature,
    cancellation_check,
    closed_moment,
    fresnel_moment,
    unit_mass_check,
)


def test_moment_orders_exposed():
    assert tuple(MOMENT_ORDERS) == (0, 1, 2, 4)


def test_closed_moment_zero_is_principal_root():
    c = closed_moment(0, 1.0, 0.5)
    assert c == pytest.approx(np.sqrt(2.0 * np.pi * 0.5) * np.exp(1j * np.pi / 4.0))


def test_closed_moment_ratios():
    d, eps = 0.7, 0.3
    k = closed_moment(0, d, eps)
    assert closed_moment(1, d, eps) == 0.0
    assert closed_moment(2, d, eps) / k == pytest.approx(1j * d * eps)
    assert closed_moment(4, d, eps) / k == pytest.approx(-3.0 * (d * eps) ** 2)


@pytest.mark.parametrize("d", [1.0, 0.5])
@pytest.mark.parametrize("eps", [1.0, 0.1])
def test_quadrature_matches_closed_forms(d, eps):
    quad = RegularizedQuadrature.for_params(d, eps)
    for n in MOMENT_ORDERS:
        q = fresnel_moment(n, d, eps, quad)
        c = closed_moment(n, d, eps)
        if n == 1:
            assert abs(q) <= 1e-6 * abs(closed_moment(0, d, eps))
        else:
            assert abs(q - c) <= 1e-6 * abs(c)


def test_unit_mass():
    for d, eps in ((1.0, 1.0), (1.0, 0.1), (0.5, 1.0), (0.5, 0.1)):
        m = unit_mass_check(d, eps)
        assert abs(m - 1.0) <= 1e-6


def test_moment_rejects_bad_order_and_params():
    with pytest.raises(ValueError):
        fresnel_moment(3, 1.0, 0.1)
    with pytest.raises(ValueError):
        fresnel_moment(2, -1.0, 0.1)
    with pytest.raises(ValueError):
        fresnel_moment(2, 1.0, 0.0)
    with pytest.raises(ValueError):
        closed_moment(5, 1.0, 0.1)


def test_quadrature_validation():
    with pytest.raises(ValueError):
        RegularizedQuadrature(delta0=-0.1, half_width=10.0, samples=100_000)
    with pytest.raises(ValueError):
        RegularizedQuadrature(delta0=0.1, half_width=10.0, samples=1000)
    # window too short to close the smallest regulator's tail
    with pytest.raises(ValueError):
        RegularizedQuadrature(delta0=0.1, half_width=5.0, samples=100_000)


def test_coarse_regulator_degrades_accuracy():
    # a deliberately large delta0 leaves a visible regulator error
    d, eps = 1.0, 0.1
    coarse = RegularizedQuadrature(delta0=0.25, half_width=51.0, samples=100_000)
    q = fresnel_moment(2, d, eps, coarse)
    c = closed_moment(2, d, eps)
    assert abs(q - c) / abs(c) > 1e-6


def test_cancellation_constant_drift_is_exact_zero():
    spec = PropagatorSpec(d=1.0, u=FieldSpec.constant(0.7))
    res = cancellation_check(spec, 0.3, 0.2)
    assert res.closed_form == pytest.approx(0.0)
    assert abs(res.quadrature) < 1e-7


def test_cancellation_residual_matches_u_prime_squared():
    spec = PropagatorSpec(d=1.0, u=FieldSpec.linear(0.4))
    for eps in (0.4, 0.1):
        res = cancellation_check(spec, 0.5, eps)
        assert res.closed_form == pytest.approx((0.4 * eps) ** 2)
        assert res.abs_error <= 1e-6 * max(abs(res.closed_form), 1.0)


def test_cancellation_residual_order_two():
    spec = PropagatorSpec(d=1.0, u=FieldSpec.linear(0.4))
    ladder = (0.4, 0.2, 0.1, 0.05)
    vals = [abs(cancellation_check(spec, 0.5, eps).quadrature) for eps in ladder]
    slope = np.polyfit(np.log(ladder), np.log(vals), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.05)


def test_cancellation_spatial_dependence():
    # sine drift: residual tracks (u'(x) eps)^2 point by point
    spec = PropagatorSpec(d=1.0, u=FieldSpec.sine(1.0, 1.0))
    eps = 0.1
    for x in (0.0, 0.5, 1.2):
        res = cancellation_check(spec, x, eps)
        assert res.closed_form == pytest.approx((np.cos(x) * eps) ** 2)
        assert res.abs_error <= 1e-6


def test_cancellation_refuses_variants():
    spec = PropagatorSpec(d=1.0, u=FieldSpec.linear(0.4), variant="no_t")
    with pytest.raises(ValueError):
        cancellation_check(spec, 0.0, 0.1)
