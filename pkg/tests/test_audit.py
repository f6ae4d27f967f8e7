import numpy as np
import pytest

from gaussprop import (
    AuditReport,
    FieldSpec,
    PropagatorSpec,
    analytic_drift_rate,
    boundary_flux_check,
    empirical_a_scan,
    gaussian_packet,
    make_grid,
    phase_freedom_check,
    predicted_drift_rate,
    required_a,
    triple_product_check,
    variant_audit,
)

GRID = make_grid(-8.0, 8.0, 1024)
LINEAR_DRIFT = PropagatorSpec(d=1.0, u=FieldSpec.linear(0.4))
LADDER = (0.32, 0.16, 0.08, 0.04)


def test_analytic_rate_for_the_three_a_choices():
    """u' = 0.4: rate is +0.4 without a, 0 at a = u'/2, -0.4 at a = u'."""
    state = gaussian_packet(GRID, x0=0.0, sigma0=0.8)
    spec = LINEAR_DRIFT
    assert analytic_drift_rate(state, spec, FieldSpec.constant(0.0)) == \
        pytest.approx(0.4, abs=1e-9)
    assert analytic_drift_rate(state, spec, required_a(spec)) == \
        pytest.approx(0.0, abs=1e-12)
    assert analytic_drift_rate(state, spec, spec.u.derivative_field()) == \
        pytest.approx(-0.4, abs=1e-9)


def test_required_a_presets():
    assert required_a(LINEAR_DRIFT)(np.zeros(3))[0] == pytest.approx(0.2)
    spec = PropagatorSpec(d=1.0, u=FieldSpec.sine(0.3, 2.0))
    x = GRID.x
    assert np.allclose(required_a(spec)(x), 0.3 * np.cos(2.0 * x), atol=1e-12)


def test_predicted_rate_admissible_is_zero():
    state = gaussian_packet(GRID, x0=0.0, sigma0=0.8)
    assert predicted_drift_rate(state, LINEAR_DRIFT) == 0.0


def test_predicted_rate_t_factor_variants():
    state = gaussian_packet(GRID, x0=0.0, sigma0=0.8)
    no_t = PropagatorSpec(d=1.0, u=FieldSpec.linear(0.4), variant="no_t")
    endpoint = PropagatorSpec(d=1.0, u=FieldSpec.linear(0.4), variant="endpoint_t")
    assert predicted_drift_rate(state, no_t) == pytest.approx(0.4, abs=1e-9)
    assert predicted_drift_rate(state, endpoint) == pytest.approx(-0.4, abs=1e-9)


def test_predicted_rate_complex_diffusivity():
    """Rate Im(D) int |psi'|^2; the Gaussian gives 1/(4 sigma^2) + k0^2."""
    state = gaussian_packet(GRID, x0=0.0, sigma0=0.8, k0=0.5)
    spec = PropagatorSpec(d=1.0, u=FieldSpec.linear(0.1),
                          variant="complex_d", im_d=0.1)
    expected = 0.1 * (1.0 / (4.0 * 0.64) + 0.25)
    assert predicted_drift_rate(state, spec) == pytest.approx(expected, rel=1e-3)


def test_predicted_rate_complex_drift():
    """Rate -2 Im(u) k0 for a momentum-k0 packet."""
    state = gaussian_packet(GRID, x0=0.0, sigma0=0.8, k0=0.7)
    spec = PropagatorSpec(d=1.0, u=FieldSpec.linear(0.4),
                          variant="complex_u", im_u=0.25)
    assert predicted_drift_rate(state, spec) == pytest.approx(-0.35, rel=1e-3)


def test_predicted_rate_varying_diffusivity():
    """Rate -int D'(x) Im(psi* psi'); closed form for Gaussian times cosine."""
    state = gaussian_packet(GRID, x0=0.0, sigma0=0.8, k0=0.7)
    spec = PropagatorSpec(d=1.0, u=FieldSpec.linear(0.1), variant="x_dependent_d",
                          d_field=FieldSpec.tabulated(GRID.x, 1.0 + 0.2 * np.sin(GRID.x)))
    expected = -0.2 * 0.7 * np.exp(-0.5 * 0.64)
    assert predicted_drift_rate(state, spec) == pytest.approx(expected, rel=5e-3)


def test_a_scan_recovers_half_the_slope():
    state = gaussian_packet(GRID, x0=0.0, sigma0=0.8)
    candidates = [0.12, 0.14, 0.16, 0.18, 0.2, 0.22, 0.24, 0.26, 0.28]
    result = empirical_a_scan(state, 0.04, LINEAR_DRIFT, candidates)
    assert result.best == 0.2
    assert len(result.drifts) == len(candidates)
    assert min(result.drifts) == result.drifts[candidates.index(0.2)]


def test_a_scan_rejects_unbracketed_minimum():
    state = gaussian_packet(GRID, x0=0.0, sigma0=0.8)
    with pytest.raises(ValueError, match="bracket"):
        empirical_a_scan(state, 0.04, LINEAR_DRIFT, [0.0, 0.02, 0.04])


def test_a_scan_needs_three_candidates():
    state = gaussian_packet(GRID, x0=0.0, sigma0=0.8)
    with pytest.raises(ValueError):
        empirical_a_scan(state, 0.04, LINEAR_DRIFT, [0.1, 0.2])


def test_audit_admissible_conserves_at_second_order():
    state = gaussian_packet(GRID, x0=0.0, sigma0=0.8)
    report = variant_audit(state, LINEAR_DRIFT, LADDER)
    assert report.verdict == "conserves"
    assert report.fitted_order == pytest.approx(2.04, abs=0.1)
    assert report.predicted_rate == 0.0


def test_audit_missing_t_drifts_linearly():
    state = gaussian_packet(GRID, x0=0.0, sigma0=0.8)
    spec = PropagatorSpec(d=1.0, u=FieldSpec.linear(0.4), variant="no_t")
    report = variant_audit(state, spec, LADDER)
    assert report.verdict == "drifts"
    assert report.fitted_order == pytest.approx(1.06, abs=0.1)
    assert report.drifts[0] > 0.0  # leaks outward, matching the +0.4 rate


def test_audit_endpoint_t_drifts_linearly():
    state = gaussian_packet(GRID, x0=0.0, sigma0=0.8)
    spec = PropagatorSpec(d=1.0, u=FieldSpec.linear(0.4), variant="endpoint_t")
    report = variant_audit(state, spec, LADDER)
    assert report.verdict == "drifts"
    assert report.fitted_order == pytest.approx(0.95, abs=0.1)
    assert report.drifts[0] < 0.0


def test_audit_complex_drift_needs_momentum():
    state = gaussian_packet(GRID, x0=1.0, sigma0=0.8, k0=0.7)
    spec = PropagatorSpec(d=1.0, u=FieldSpec.linear(0.4),
                          variant="complex_u", im_u=0.25)
    report = variant_audit(state, spec, LADDER)
    assert report.verdict == "drifts"
    assert report.fitted_order == pytest.approx(1.0, abs=0.3)


def test_audit_needs_four_rungs():
    state = gaussian_packet(GRID, x0=0.0, sigma0=0.8)
    with pytest.raises(ValueError):
        variant_audit(state, LINEAR_DRIFT, (0.2, 0.1, 0.05))


def test_audit_report_rejects_inconsistent_verdict():
    with pytest.raises(ValueError):
        AuditReport(variant="no_t", eps_ladder=LADDER,
                    drifts=(0.1, 0.05, 0.025, 0.0125),
                    fitted_order=1.0, predicted_rate=0.4, verdict="conserves")


def test_phase_shift_dense():
    """Adding a constant to b rotates the global phase by -c per unit time."""
    state = gaussian_packet(GRID, x0=0.0, sigma0=0.8)
    spec = PropagatorSpec(d=1.0, u=FieldSpec.linear(0.4), b=FieldSpec.constant(0.3))
    report = phase_freedom_check(state, 0.05, spec, c=0.7, n_steps=10)
    assert report.density_max_diff < 1e-12
    assert report.phase_error < 1e-9
    assert report.phase_expected == pytest.approx(
        np.angle(np.exp(-1j * 0.7 * 0.5)), abs=1e-12)


def test_phase_shift_spectral():
    grid = make_grid(-10.0, 10.0, 1024)
    state = gaussian_packet(grid, x0=0.0, sigma0=0.5)
    spec = PropagatorSpec(d=1.0, u=FieldSpec.linear(0.4), b=FieldSpec.constant(0.3))
    report = phase_freedom_check(state, 0.01, spec, c=1.0, n_steps=20,
                                 method="spectral")
    assert report.density_max_diff < 1e-12
    assert report.phase_error < 1e-9


def test_integration_identities_vanish():
    state = gaussian_packet(GRID, x0=0.0, sigma0=0.8, k0=0.7)
    spec = PropagatorSpec(d=1.0, u=FieldSpec.sine(0.3, 1.0))
    assert boundary_flux_check(state) < 1e-10
    # total derivative of u |psi|^2; vanishes to the stencil's O(dx^2)
    assert triple_product_check(state, spec) < 1e-3
