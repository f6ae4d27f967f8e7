"""Single-step propagation of wave and density states.

The dense path applies the complex kernel as written: one step of duration
eps maps

    psi(x_j, t+eps) = sum_k dx * Pi(x_k - x_j, eps; x_k, t) * psi(x_k, t),

with the kernel, its drift, and the first-order T factors all evaluated at
the displaced point x_k = x_j + eta (an alternative placement evaluating the
T factors at x_j is kept for comparison; the two agree below the scheme's
order).  The eta integral is truncated at the grid extent: the kernel itself
never decays, the integrand does because psi does, which is why every state
fed to a step must satisfy the boundary-decay invariant.

The quadrature can only resolve the kernel's quadratic phase when adjacent
grid samples advance it by at most pi: max |eta| * dx / (D eps) <= pi.
validity_check reports this number for the full grid window and for the
window the state actually occupies; step_dense refuses to run when the
occupied window fails.  Equivalently, the sampled chirp's aliasing images
(spaced 2 pi D eps / dx apart) must fall outside the occupied window.

The spectral path uses the kernel's factorized form on a periodic grid:
position factors for the drift and phase fields applied to O(eps), and the
free quadratic-phase convolution applied exactly as the Fourier multiplier
exp(-i D eps k^2 / 2).  It exists for admissible parameter sets only; the
falsification variants must go through the dense quadrature.

The real kernel composes as a Chapman-Kolmogorov step: a particle at the
source y moves by eta drawn from Normal(u(y) eps, D eps), so

    P(x_j, t+eps) = sum_k dx * Pi_real(x_j - x_k, eps; x_k, t) * P(x_k, t),

which keeps mass exact to quadrature precision and drifts forward (mean u t).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import solve_banded

from .fields import (BOUNDARY_DECAY_RATIO, FieldSpec, Grid, PropagatorSpec,
                     RealState, WaveState, check_boundary_decay, norm, total_mass)
from .kernel import complex_kernel, real_kernel, t_correction

T_EVALUATIONS = ("displaced", "origin")


class ValidityError(RuntimeError):
    """The grid cannot resolve the kernel's phase for this step size."""


@dataclass(frozen=True)
class ValidityReport:
    """Phase-resolution diagnostics for a dense quadrature step."""

    max_phase_step: float           # over the full grid half-window
    state_phase_step: float | None  # over the window the state occupies
    passes: bool                    # governed by the state window when given
    passes_full: bool
    recommended_min_eps: float      # smallest eps the governing window resolves

    def __str__(self):
        gov = self.max_phase_step if self.state_phase_step is None else self.state_phase_step
        return (f"phase step {gov:.3f} rad vs pi "
                f"({'ok' if self.passes else 'unresolved'}; "
                f"eps >= {self.recommended_min_eps:.4g} recommended)")


def _d_scale(grid: Grid, spec: PropagatorSpec) -> float:
    """Conservative diffusivity magnitude for phase-resolution estimates."""
    return float(np.min(np.abs(spec.d_value(grid.x))))


def _support_half_width(state: WaveState, ratio: float = BOUNDARY_DECAY_RATIO) -> float:
    amp = np.abs(state.psi)
    idx = np.nonzero(amp >= ratio * amp.max())[0]
    return 0.5 * (state.grid.x[idx[-1]] - state.grid.x[idx[0]])


def validity_check(grid: Grid, eps: float, spec: PropagatorSpec,
                   state: WaveState | None = None) -> ValidityReport:
    """Can the dense quadrature resolve the kernel phase at this step size?"""
    if not eps > 0.0:
        raise ValueError(f"eps must be > 0, got {eps}")
    d = _d_scale(grid, spec)
    full = grid.half_width * grid.dx / (d * eps)
    window = grid.half_width
    state_step = None
    if state is not None:
        state_step = _support_half_width(state) * grid.dx / (d * eps)
        window = _support_half_width(state)
    governing = full if state_step is None else state_step
    return ValidityReport(
        max_phase_step=full,
        state_phase_step=state_step,
        passes=bool(governing <= np.pi),
        passes_full=bool(full <= np.pi),
        recommended_min_eps=float(window * grid.dx / (np.pi * d)))


def _dense_matrix(grid: Grid, eps: float, spec: PropagatorSpec, t: float,
                  order: str | None = None, t_eval: str = "displaced",
                  a_override: FieldSpec | None = None,
                  periodic: bool = False) -> np.ndarray:
    if t_eval not in T_EVALUATIONS:
        raise ValueError(f"t_eval must be one of {T_EVALUATIONS}, got {t_eval!r}")
    if order is not None and order != spec.order:
        spec = PropagatorSpec(spec.d, spec.u, spec.b, order, spec.variant,
                              spec.im_d, spec.im_u, spec.d_field)
    x = grid.x
    eta = x[None, :] - x[:, None]
    if periodic:
        span = grid.x_max - grid.x_min
        eta = (eta + 0.5 * span) % span - 0.5 * span
    if t_eval == "origin" and spec.order == "first":
        # quadratic phase and normalization at the source, T factors at x_j
        bare = PropagatorSpec(spec.d, spec.u, spec.b, "zero",
                              spec.variant if spec.variant in
                              ("admissible", "complex_d", "complex_u", "x_dependent_d")
                              else "admissible",
                              spec.im_d, spec.im_u, spec.d_field)
        ev = complex_kernel(eta, eps, x[None, :], t, bare)
        if a_override is None:
            tf = np.exp(-eps * t_correction(spec, x, t))
        else:
            tf = np.exp(-eps * (a_override(x, t) + 1j * spec.b(x, t)))
        return grid.dx * tf[:, None] * ev.value
    ev = complex_kernel(eta, eps, x[None, :], t, spec, a_override=a_override)
    return grid.dx * ev.value


def step_dense(state: WaveState, eps: float, spec: PropagatorSpec,
               order: str | None = None, t_eval: str = "displaced",
               a_override: FieldSpec | None = None,
               periodic: bool = False) -> WaveState:
    """One complex-kernel step by direct quadrature over the whole grid."""
    check_boundary_decay(state)
    report = validity_check(state.grid, eps, spec, state)
    if not report.passes:
        raise ValidityError(f"dense step cannot resolve the kernel phase: {report}")
    mat = _dense_matrix(state.grid, eps, spec, state.time, order, t_eval,
                        a_override, periodic)
    return state.replace_psi(mat @ state.psi, time=state.time + eps)


def _drift_cayley(psi: np.ndarray, u: np.ndarray, eps: float,
                  dx: float) -> np.ndarray:
    # Cayley step of the antisymmetric drift u d/dx + (1/2) du/dx, written in
    # the symmetrized product form so only u samples enter; unconditionally
    # stable and exactly norm-preserving, unlike an explicit update, which
    # amplifies round-off near the edges once eps*|u|*k_max exceeds 1.
    face = (u[:-1] + u[1:]) / (4.0 * dx)
    half = 0.5 * eps
    rhs = psi.astype(complex, copy=True)
    rhs[:-1] += half * face * psi[1:]
    rhs[1:] -= half * face * psi[:-1]
    ab = np.zeros((3, len(psi)), dtype=complex)
    ab[0, 1:] = -half * face
    ab[1, :] = 1.0
    ab[2, :-1] = half * face
    return solve_banded((1, 1), ab, rhs)


def step_spectral(state: WaveState, eps: float, spec: PropagatorSpec) -> WaveState:
    """One step via the factorized kernel on the periodic grid.

    Drift and phase fields act in position space to O(eps); the free
    quadratic-phase convolution is the exact multiplier exp(-i D eps k^2/2).
    For zero drift and zero b the step is exactly unimodular.
    """
    if not eps > 0.0:
        raise ValueError(f"eps must be > 0, got {eps}")
    if spec.variant != "admissible":
        raise ValueError("the spectral path assumes an admissible parameter set; "
                         f"variant {spec.variant!r} must use the dense path")
    n = state.grid.n
    if n & (n - 1):
        raise ValueError(f"spectral stepping needs a power-of-two grid, got n={n}")
    check_boundary_decay(state)
    x, k = state.grid.x, state.grid.k
    psi = state.psi
    u = spec.u(x, state.time)
    if np.any(u != 0.0):
        psi = _drift_cayley(psi, u, eps, state.grid.dx)
        if spec.order == "zero":
            # the zero-order kernel carries the full du/dx weight, half of
            # which is the non-unitary surplus the T correction removes
            psi = psi * np.exp(0.5 * eps * spec.du_dx(x, state.time).real)
    if spec.order == "first":
        psi = np.exp(-1j * eps * spec.b(x, state.time)) * psi
    return state.replace_psi(
        np.fft.ifft(np.exp(-0.5j * spec.d * eps * k ** 2) * np.fft.fft(psi)),
        time=state.time + eps)


def step_density(state: RealState, eps: float, spec: PropagatorSpec) -> RealState:
    """One real-kernel step (Chapman-Kolmogorov quadrature over sources)."""
    if spec.variant != "admissible":
        raise ValueError("the real kernel is defined for the admissible variant only")
    check_boundary_decay(state)
    grid = state.grid
    width = np.sqrt(spec.d * eps)
    if width < 2.0 * grid.dx:
        raise ValidityError(
            f"real kernel width {width:.3g} under-resolved by dx={grid.dx:.3g} "
            "(need sqrt(D eps) >= 2 dx)")
    mat = _real_matrix(grid, eps, spec, state.time)
    return state.replace_density(mat @ state.density, time=state.time + eps)


def _real_matrix(grid: Grid, eps: float, spec: PropagatorSpec, t: float) -> np.ndarray:
    x = grid.x
    eta = x[:, None] - x[None, :]  # destination minus source
    return grid.dx * real_kernel(eta, eps, x[None, :], t, spec)


@dataclass(frozen=True)
class Trajectory:
    """States visited by repeated stepping, initial state included."""

    states: tuple
    eps: float

    @cached_property
    def norms(self) -> np.ndarray:
        if isinstance(self.states[0], RealState):
            return np.array([total_mass(s) for s in self.states])
        return np.array([norm(s) for s in self.states])

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.states])

    @property
    def final(self):
        return self.states[-1]


def evolve(state: WaveState, eps: float, n_steps: int, spec: PropagatorSpec,
           method: str = "dense", **step_kwargs) -> Trajectory:
    """Repeatedly step a wave state, aborting if its tails reach the grid edge."""
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    if method not in ("dense", "spectral"):
        raise ValueError(f"method must be 'dense' or 'spectral', got {method!r}")
    states = [state]
    if method == "dense":
        # static fields: one matrix serves every step
        mat = _dense_matrix(state.grid, eps, spec, state.time, **step_kwargs)
        for i in range(n_steps):
            cur = states[-1]
            _recheck(cur, i)
            report = validity_check(cur.grid, eps, spec, cur)
            if not report.passes:
                raise ValidityError(
                    f"dense step cannot resolve the kernel phase at step {i}: {report}")
            states.append(cur.replace_psi(mat @ cur.psi, time=cur.time + eps))
    else:
        for i in range(n_steps):
            cur = states[-1]
            _recheck(cur, i)
            states.append(step_spectral(cur, eps, spec))
    return Trajectory(states=tuple(states), eps=eps)


def _recheck(state: WaveState, step: int) -> None:
    try:
        check_boundary_decay(state)
    except ValueError as exc:
        raise type(exc)(f"aborted before step {step}: {exc}") from None


def evolve_density(state: RealState, eps: float, n_steps: int,
                   spec: PropagatorSpec) -> Trajectory:
    """Repeatedly step a density with the real kernel."""
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    check_boundary_decay(state)
    mat = _real_matrix(state.grid, eps, spec, state.time)
    states = [state]
    for _ in range(n_steps):
        cur = states[-1]
        states.append(cur.replace_density(mat @ cur.density, time=cur.time + eps))
    return Trajectory(states=tuple(states), eps=eps)
