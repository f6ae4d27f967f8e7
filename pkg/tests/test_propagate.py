import numpy as np
import pytest

from gaussprop import (
    BoundaryDecayError,
    FieldSpec,
    PropagatorSpec,
    RealState,
    ValidityError,
    evolve,
    evolve_density,
    gaussian_packet,
    make_grid,
    moments,
    norm,
    step_dense,
    step_density,
    step_spectral,
    total_mass,
    validity_check,
)

FREE = PropagatorSpec(d=1.0)
DRIFTED = PropagatorSpec(d=1.0, u=FieldSpec.linear(0.2), b=FieldSpec.sine(0.3, 1.0))


def test_free_dispersion_law():
    """Spectral free evolution reproduces sigma^2(t) = sigma0^2 + (D t / 2 sigma0)^2."""
    grid = make_grid(-12.0, 12.0, 1024)
    state = gaussian_packet(grid, x0=0.0, sigma0=1.0, k0=0.0)
    traj = evolve(state, 0.01, 200, FREE, method="spectral")
    _, var = moments(traj.final)
    assert var == pytest.approx(2.0, rel=1e-6)
    assert np.max(np.abs(traj.norms - 1.0)) < 1e-12


def test_spectral_free_step_is_exactly_unimodular():
    grid = make_grid(-10.0, 10.0, 512)
    state = gaussian_packet(grid, x0=0.0, sigma0=0.9, k0=0.6)
    out = step_spectral(state, 0.05, FREE)
    assert norm(out) == pytest.approx(norm(state), abs=1e-14)


def test_spectral_first_order_preserves_norm_with_fields():
    grid = make_grid(-10.0, 10.0, 1024)
    state = gaussian_packet(grid, x0=0.0, sigma0=0.8, k0=0.5)
    traj = evolve(state, 0.01, 50, DRIFTED, method="spectral")
    assert np.max(np.abs(traj.norms - 1.0)) < 1e-12


def test_spectral_zero_order_leaks_at_the_drift_rate():
    """Dropping the T correction leaks norm at rate int u' |psi|^2 = u'."""
    grid = make_grid(-10.0, 10.0, 1024)
    state = gaussian_packet(grid, x0=0.0, sigma0=0.8, k0=0.0)
    spec = PropagatorSpec(d=1.0, u=FieldSpec.linear(0.4), order="zero")
    traj = evolve(state, 0.01, 20, spec, method="spectral")
    slope = np.polyfit(traj.times, np.log(traj.norms), 1)[0]
    assert slope == pytest.approx(0.4, abs=1e-6)


def test_dense_and_spectral_agree_at_second_order():
    """Single-step gap shrinks like eps^2: both sides share the O(eps) kernel."""
    grid = make_grid(-6.0, 6.0, 1024)
    state = gaussian_packet(grid, x0=0.0, sigma0=0.7, k0=0.5)
    ladder = (0.16, 0.08, 0.04, 0.02)
    gaps = []
    for eps in ladder:
        dense = step_dense(state, eps, DRIFTED)
        spectral = step_spectral(state, eps, DRIFTED)
        gaps.append(np.sqrt(np.sum(np.abs(dense.psi - spectral.psi) ** 2)
                            * grid.dx))
    slope = np.polyfit(np.log(ladder), np.log(gaps), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.3)


def test_dense_step_conserves_norm_to_first_order():
    grid = make_grid(-8.0, 8.0, 1024)
    state = gaussian_packet(grid, x0=0.0, sigma0=0.8, k0=0.0)
    spec = PropagatorSpec(d=1.0, u=FieldSpec.linear(0.4))
    out = step_dense(state, 0.1, spec)
    assert norm(out) == pytest.approx(1.0, abs=5e-3)


def test_validity_check_report():
    grid = make_grid(-8.0, 8.0, 1024)
    state = gaussian_packet(grid, x0=0.0, sigma0=0.8)
    good = validity_check(grid, 0.1, FREE, state)
    assert good.passes
    bad = validity_check(grid, 0.001, FREE, state)
    assert not bad.passes
    assert bad.recommended_min_eps > 0.001


def test_dense_step_raises_below_phase_resolution():
    grid = make_grid(-12.0, 12.0, 1024)
    state = gaussian_packet(grid, x0=0.0, sigma0=1.0)
    with pytest.raises(ValidityError):
        step_dense(state, 0.001, FREE)


def test_evolve_aborts_when_packet_reaches_edge():
    grid = make_grid(-4.0, 4.0, 256)
    state = gaussian_packet(grid, x0=0.0, sigma0=0.45)
    with pytest.raises(BoundaryDecayError):
        evolve(state, 0.05, 200, FREE, method="spectral")


def test_spectral_requires_power_of_two_grid():
    grid = make_grid(-8.0, 8.0, 1000)
    state = gaussian_packet(grid, x0=0.0, sigma0=0.8)
    with pytest.raises(ValueError):
        step_spectral(state, 0.05, FREE)


def test_spectral_rejects_variants():
    grid = make_grid(-8.0, 8.0, 512)
    state = gaussian_packet(grid, x0=0.0, sigma0=0.8)
    spec = PropagatorSpec(d=1.0, u=FieldSpec.linear(0.4), variant="no_t")
    with pytest.raises(ValueError):
        step_spectral(state, 0.05, spec)


def test_trajectory_bookkeeping():
    grid = make_grid(-10.0, 10.0, 512)
    state = gaussian_packet(grid, x0=0.0, sigma0=0.9)
    traj = evolve(state, 0.05, 4, FREE, method="spectral")
    assert len(traj.states) == 5
    assert np.allclose(traj.times, [0.0, 0.05, 0.1, 0.15, 0.2])
    assert traj.final is traj.states[-1]
    assert traj.norms.shape == (5,)


def _gaussian_density(grid, sigma):
    p = np.exp(-grid.x ** 2 / (2.0 * sigma ** 2))
    return p / (np.sum(p) * grid.dx)


def test_density_step_mass_positivity_and_spread():
    grid = make_grid(-10.0, 10.0, 512)
    state = RealState(grid=grid, density=_gaussian_density(grid, 0.8), time=0.0)
    eps = 0.05
    out = step_density(state, eps, FREE)
    assert total_mass(out) == pytest.approx(1.0, abs=1e-9)
    assert np.all(out.density >= 0.0)
    _, v0 = moments(state)
    _, v1 = moments(out)
    # one step adds variance D eps
    assert v1 - v0 == pytest.approx(eps, rel=1e-3)


def test_density_step_drift_moves_the_mean():
    grid = make_grid(-10.0, 10.0, 512)
    state = RealState(grid=grid, density=_gaussian_density(grid, 0.8), time=0.0)
    spec = PropagatorSpec(d=1.0, u=FieldSpec.constant(0.5))
    eps = 0.05
    out = step_density(state, eps, spec)
    m0, _ = moments(state)
    m1, _ = moments(out)
    assert m1 - m0 == pytest.approx(0.5 * eps, rel=1e-6)


def test_density_step_requires_resolved_kernel():
    grid = make_grid(-10.0, 10.0, 256)
    state = RealState(grid=grid, density=_gaussian_density(grid, 0.8), time=0.0)
    # sqrt(D eps) below two grid spacings: the sampled Gaussian is unreliable
    with pytest.raises(ValidityError):
        step_density(state, 0.002, FREE)


def test_evolve_density_matches_free_spreading():
    grid = make_grid(-12.0, 12.0, 512)
    state = RealState(grid=grid, density=_gaussian_density(grid, 0.8), time=0.0)
    traj = evolve_density(state, 0.02, 50, FREE)
    _, var = moments(traj.final)
    assert var == pytest.approx(0.64 + 1.0, rel=1e-3)
    assert np.max(np.abs(traj.norms - 1.0)) < 1e-8
