"""Numerical laboratory for a single-step complex Gaussian propagator.

The package builds the short-time kernel for drifted diffusion with an
imaginary diffusivity, steps wave packets with it, and checks the result
three independent ways: closed-form regularized kernel moments, a
Crank-Nicolson integrator for the equivalent Hamiltonian, and direct
norm-drift audits of deliberately broken propagator variants.  A real
diffusive twin (density stepping plus random-walk sampling) shares the
same drift and diffusivity fields.
"""

from .audit import (
    AScanResult,
    AuditReport,
    PhaseShiftReport,
    analytic_drift_rate,
    boundary_flux_check,
    empirical_a_scan,
    phase_freedom_check,
    predicted_drift_rate,
    required_a,
    triple_product_check,
    variant_audit,
)
from .fields import (
    FIELD_KINDS,
    VARIANTS,
    BoundaryDecayError,
    FieldSpec,
    Grid,
    PropagatorSpec,
    RealState,
    WaveState,
    check_boundary_decay,
    gaussian_packet,
    make_grid,
    mean_momentum,
    moments,
    norm,
    total_mass,
)
from .fresnel import (
    CancellationResult,
    MOMENT_ORDERS,
    RegularizedQuadrature,
    cancellation_check,
    closed_moment,
    fresnel_moment,
    unit_mass_check,
)
from .kernel import (
    KernelEvaluation,
    complex_kernel,
    normalization_constant,
    real_kernel,
    t_correction,
)
from .propagate import (
    Trajectory,
    ValidityError,
    ValidityReport,
    evolve,
    evolve_density,
    step_dense,
    step_density,
    step_spectral,
    validity_check,
)
from .reference import (
    HamiltonianSpec,
    cn_step,
    diffusion_step,
    evolve_cn,
    evolve_diffusion,
    hamiltonian_diagonals,
    hermiticity_check,
    rhs_apply,
    to_hamiltonian,
    to_propagator,
)
from .scenario import (
    PacketSpec,
    Scenario,
    ScenarioError,
    load_scenario,
    parse_field,
    parse_scenario,
)
from .walk import (
    STEP_LAWS,
    HistogramComparison,
    WalkEnsemble,
    histogram_compare,
    sample_paths,
)

__version__ = "0.1.0"

__all__ = [
    "AScanResult",
    "AuditReport",
    "BoundaryDecayError",
    "CancellationResult",
    "FIELD_KINDS",
    "FieldSpec",
    "Grid",
    "HamiltonianSpec",
    "HistogramComparison",
    "KernelEvaluation",
    "MOMENT_ORDERS",
    "PacketSpec",
    "PhaseShiftReport",
    "PropagatorSpec",
    "RealState",
    "RegularizedQuadrature",
    "STEP_LAWS",
    "Scenario",
    "ScenarioError",
    "Trajectory",
    "VARIANTS",
    "ValidityError",
    "ValidityReport",
    "WalkEnsemble",
    "WaveState",
    "analytic_drift_rate",
    "boundary_flux_check",
    "cancellation_check",
    "check_boundary_decay",
    "closed_moment",
    "cn_step",
    "complex_kernel",
    "diffusion_step",
    "empirical_a_scan",
    "evolve",
    "evolve_cn",
    "evolve_density",
    "evolve_diffusion",
    "fresnel_moment",
    "gaussian_packet",
    "hamiltonian_diagonals",
    "hermiticity_check",
    "histogram_compare",
    "load_scenario",
    "make_grid",
    "mean_momentum",
    "moments",
    "norm",
    "normalization_constant",
    "parse_field",
    "parse_scenario",
    "phase_freedom_check",
    "predicted_drift_rate",
    "real_kernel",
    "required_a",
    "rhs_apply",
    "sample_paths",
    "step_dense",
    "step_density",
    "step_spectral",
    "t_correction",
    "to_hamiltonian",
    "to_propagator",
    "total_mass",
    "triple_product_check",
    "unit_mass_check",
    "validity_check",
    "variant_audit",
    "__version__",
]
