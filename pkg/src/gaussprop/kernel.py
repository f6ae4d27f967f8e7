"""Single-step propagator kernels.

Real (diffusive) kernel for one step of duration eps at the point (x, t):

    Pi(eta) = (2 pi D eps)^(-1/2) exp(-(eta - u eps)^2 / (2 D eps)),

a Gaussian step-length law with mean u(x,t) eps and variance D eps.  Its
complex twin replaces the negative exponent by a positive imaginary one,

    Pi(eta) = K^(-1) exp(+i (eta - u eps)^2 / (2 D eps)),

with K = (2 pi i D eps)^(1/2) on the principal branch (i^(1/2) = e^(i pi/4)).
At first order the normalization acquires the correction T = u'/2 + i b:
K -> (2 pi i D eps)^(1/2) (1 + eps T), applied here in the exponential form
exp(-eps T) (the two agree to O(eps^2); the audit module measures both).
The a = u'/2 in Re T is forced by norm conservation; the falsification
variants spoil it (a = u' or a = 0) or make D or u complex, and the audit
module watches the norm drift that results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import FieldSpec, PropagatorSpec


def _check_eps(eps: float) -> None:
    if not (np.isfinite(eps) and eps > 0.0):
        raise ValueError(f"step duration eps must be finite and > 0, got {eps}")


def real_kernel(eta, eps: float, x, t: float, spec: PropagatorSpec):
    """Gaussian step-length density at (x, t), evaluated at displacement eta."""
    _check_eps(eps)
    if spec.variant != "admissible":
        raise ValueError("the real kernel is defined for the admissible variant only")
    eta = np.asarray(eta, dtype=float)
    u = spec.u(x, t)
    var = spec.d * eps
    return np.exp(-((eta - u * eps) ** 2) / (2.0 * var)) / np.sqrt(2.0 * np.pi * var)


def t_correction(spec: PropagatorSpec, x, t: float = 0.0):
    """T(x, t) = a + i b with a fixed by the variant (u'/2, u', or 0)."""
    if spec.order == "zero":
        raise ValueError("the zero-order kernel carries no T correction")
    a = _a_value(spec, x, t)
    return a + 1j * spec.b(x, t)


def _a_value(spec: PropagatorSpec, x, t: float, a_override: FieldSpec | None = None):
    if a_override is not None:
        return a_override(x, t).astype(complex)
    if spec.variant == "endpoint_t":
        return spec.du_dx(x, t)
    if spec.variant == "no_t":
        return np.zeros_like(np.asarray(x, dtype=float), dtype=complex)
    return 0.5 * spec.du_dx(x, t)


def normalization_constant(spec: PropagatorSpec, eps: float, x, t: float = 0.0):
    """K(x, t): (2 pi i D eps)^(1/2), times (1 + eps T) at first order."""
    _check_eps(eps)
    d = spec.d_value(x, t)
    k0 = np.sqrt(2.0j * np.pi * d * eps)
    if spec.order == "zero":
        return k0
    return k0 * (1.0 + eps * t_correction(spec, x, t))


@dataclass(frozen=True)
class KernelEvaluation:
    """Complex kernel value and the retained factors it is built from.

    value == normalization * phase_quadratic * t_factor identically; the
    factors are exposed so tests can check each against its closed form.
    """

    value: np.ndarray
    normalization: np.ndarray
    phase_quadratic: np.ndarray
    t_factor: np.ndarray


def complex_kernel(eta, eps: float, x, t: float, spec: PropagatorSpec,
                   a_override: FieldSpec | None = None) -> KernelEvaluation:
    """Evaluate the complex kernel at displacement eta with fields taken at (x, t).

    eta and x broadcast against each other.  a_override substitutes an
    arbitrary correction field for the variant's a (used by the empirical
    a scan); the quadratic phase and normalization are untouched by it.
    """
    _check_eps(eps)
    eta = np.asarray(eta, dtype=float)
    d = spec.d_value(x, t)
    u = spec.u_value(x, t)
    norm_factor = 1.0 / np.sqrt(2.0j * np.pi * d * eps)
    phase = np.exp(1j * (eta - u * eps) ** 2 / (2.0 * d * eps))
    if spec.order == "zero":
        t_factor = np.ones_like(phase)
    else:
        a = _a_value(spec, x, t, a_override)
        t_factor = np.exp(-eps * (a + 1j * spec.b(x, t)))
    t_factor = np.broadcast_to(t_factor, phase.shape)
    norm_factor = np.broadcast_to(norm_factor, phase.shape)
    return KernelEvaluation(value=norm_factor * phase * t_factor,
                            normalization=norm_factor,
                            phase_quadratic=phase,
                            t_factor=t_factor)
