"""Method-independent oracles: Crank-Nicolson Schrodinger and drift-diffusion.

The admissible propagator parameters (D, u, b) map onto a minimally coupled
Hamiltonian H = (p - A)^2/(2m) + phi with hbar = 1 and unit charge:

    m = 1/D,        A = u m,        phi = b - A^2/(2m),

and back.  The right-hand side of the Schrodinger equation expands to

    dpsi/dt = (i/2m) psi'' + (A/m) psi' + (1/2m) A' psi
              - i (A^2/(2m)) psi - i phi psi,

discretized here with the compact second difference and the symmetrized
drift (1/2m)(A psi' + (A psi)'), which makes the discrete generator exactly
anti-Hermitian for real fields.  The same H is assembled independently as a
tridiagonal operator from p = -i * central difference, so the expansion can
be checked against -i H psi term by term.  Crank-Nicolson (the Cayley form
of exp(-i eps H)) then conserves the norm to solver round-off and serves as
the time-evolution oracle the kernel methods are compared against.

The real kernel's oracle is the drift-diffusion equation

    dP/dt = (D/2) P'' - (u P)',

the continuum limit of the Gaussian step-length law, discretized in flux
form with Scharfetter-Gummel faces and no-flux ends: mass is conserved to
round-off and the implicit default keeps P nonnegative (M-matrix), with no
step-size stability bound.  An explicit mode exists but enforces
D eps/dx^2 <= 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .fields import FieldSpec, Grid, PropagatorSpec, RealState, WaveState
from .propagate import Trajectory


@dataclass(frozen=True)
class HamiltonianSpec:
    """Minimally coupled 1D Hamiltonian (p - A)^2/(2m) + phi, hbar = 1.

    im_a adds a constant imaginary part to A.  It exists to demonstrate that
    a complex vector potential breaks Hermiticity; every oracle use keeps it 0.
    """

    m: float
    a_field: FieldSpec = field(default_factory=lambda: FieldSpec.constant(0.0))
    phi: FieldSpec = field(default_factory=lambda: FieldSpec.constant(0.0))
    im_a: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.m) and self.m > 0.0):
            raise ValueError(f"mass must be finite and > 0, got {self.m}")

    def a_values(self, x, t: float = 0.0):
        a = self.a_field(x, t).astype(complex)
        return a + 1j * self.im_a if self.im_a else a


def to_hamiltonian(spec: PropagatorSpec, grid: Grid) -> HamiltonianSpec:
    """Map admissible propagator parameters to (m, A, phi)."""
    if not spec.is_admissible():
        raise ValueError("only the admissible variant maps to a Hamiltonian")
    m = 1.0 / spec.d
    a_field = spec.u.scaled(m)
    if a_field.is_constant() and float(a_field(np.zeros(1))[0]) == 0.0:
        phi = spec.b
    else:
        x = grid.x
        phi = FieldSpec.tabulated(x, spec.b(x) - a_field(x) ** 2 / (2.0 * m))
    return HamiltonianSpec(m=m, a_field=a_field, phi=phi)


def to_propagator(ham: HamiltonianSpec, grid: Grid) -> PropagatorSpec:
    """Inverse map; with to_hamiltonian it round-trips to 1e-12 on the grid."""
    if ham.im_a:
        raise ValueError("complex A has no admissible propagator image")
    d = 1.0 / ham.m
    u = ham.a_field.scaled(d)
    if ham.a_field.is_constant() and float(ham.a_field(np.zeros(1))[0]) == 0.0:
        b = ham.phi
    else:
        x = grid.x
        b = FieldSpec.tabulated(x, ham.phi(x) + ham.a_field(x) ** 2 / (2.0 * ham.m))
    return PropagatorSpec(d=d, u=u, b=b, order="first")


def rhs_apply(state: WaveState, ham: HamiltonianSpec) -> np.ndarray:
    """dpsi/dt from the expanded Schrodinger form, zero beyond the grid edges."""
    grid, dx, m = state.grid, state.grid.dx, ham.m
    t = state.time
    psi = np.zeros(grid.n + 2, dtype=complex)
    psi[1:-1] = state.psi
    a = np.zeros(grid.n + 2, dtype=complex)
    a[1:-1] = ham.a_values(grid.x, t)
    lap = (psi[2:] - 2.0 * psi[1:-1] + psi[:-2]) / dx ** 2
    dpsi = (psi[2:] - psi[:-2]) / (2.0 * dx)
    dapsi = (a[2:] * psi[2:] - a[:-2] * psi[:-2]) / (2.0 * dx)
    aj = a[1:-1]
    pj = psi[1:-1]
    return (0.5j / m * lap
            + 0.5 / m * (aj * dpsi + dapsi)
            - 1j * (aj ** 2 / (2.0 * m) + ham.phi(grid.x, t)) * pj)


def hamiltonian_diagonals(ham: HamiltonianSpec, grid: Grid, t: float = 0.0):
    """(lower, diag, upper) of H = (p^2 - pA - Ap + A^2)/(2m) + phi.

    p is the central difference times -i and p^2 the compact second
    difference; assembled by operator composition, independently of
    rhs_apply's expanded stencils.
    """
    n, dx, m = grid.n, grid.dx, ham.m
    a = ham.a_values(grid.x, t)
    diag = np.full(n, 1.0 / (m * dx ** 2), dtype=complex)
    diag += a ** 2 / (2.0 * m) + ham.phi(grid.x, t)
    upper = np.full(n - 1, -0.5 / (m * dx ** 2), dtype=complex)
    lower = np.full(n - 1, -0.5 / (m * dx ** 2), dtype=complex)
    face = (a[:-1] + a[1:]) / (4.0 * m * dx)
    upper = upper + 1j * face
    lower = lower - 1j * face
    return lower, diag, upper


def hermiticity_check(ham: HamiltonianSpec, grid: Grid, t: float = 0.0) -> float:
    """max |H - H^dagger| entry; zero to round-off for real fields."""
    lower, diag, upper = hamiltonian_diagonals(ham, grid, t)
    return float(max(np.max(np.abs(upper - np.conj(lower))),
                     np.max(np.abs(diag.imag))))


def _apply_tridiag(lower, diag, upper, v):
    out = diag * v
    out[:-1] += upper * v[1:]
    out[1:] += lower * v[:-1]
    return out


def cn_step(state: WaveState, eps: float, ham: HamiltonianSpec) -> WaveState:
    """One Cayley step (1 + i eps H/2)^-1 (1 - i eps H/2); unitary to round-off."""
    if not eps > 0.0:
        raise ValueError(f"eps must be > 0, got {eps}")
    lower, diag, upper = hamiltonian_diagonals(ham, state.grid, state.time)
    half = 0.5j * eps
    rhs = _apply_tridiag(-half * lower, 1.0 - half * diag, -half * upper, state.psi)
    ab = np.zeros((3, state.grid.n), dtype=complex)
    ab[0, 1:] = half * upper
    ab[1, :] = 1.0 + half * diag
    ab[2, :-1] = half * lower
    out = solve_banded((1, 1), ab, rhs)
    return state.replace_psi(out, time=state.time + eps)


def evolve_cn(state: WaveState, eps: float, n_steps: int,
              ham: HamiltonianSpec) -> Trajectory:
    """Crank-Nicolson trajectory with the banded operator built once."""
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    lower, diag, upper = hamiltonian_diagonals(ham, state.grid, state.time)
    half = 0.5j * eps
    ab = np.zeros((3, state.grid.n), dtype=complex)
    ab[0, 1:] = half * upper
    ab[1, :] = 1.0 + half * diag
    ab[2, :-1] = half * lower
    states = [state]
    for _ in range(n_steps):
        cur = states[-1]
        rhs = _apply_tridiag(-half * lower, 1.0 - half * diag, -half * upper, cur.psi)
        states.append(cur.replace_psi(solve_banded((1, 1), ab, rhs),
                                      time=cur.time + eps))
    return Trajectory(states=tuple(states), eps=eps)


def _bernoulli(w: np.ndarray) -> np.ndarray:
    # B(w) = w/(e^w - 1), smooth through w = 0
    out = np.ones_like(w)
    big = np.abs(w) > 1e-8
    out[big] = w[big] / np.expm1(w[big])
    out[~big] = 1.0 - 0.5 * w[~big]
    return out


def _diffusion_diagonals(grid: Grid, spec: PropagatorSpec, t: float):
    """Flux-divergence generator A with dP/dt = -A P; columns sum to zero."""
    n, dx = grid.n, grid.dx
    dh = 0.5 * spec.d
    x_face = grid.x[:-1] + 0.5 * dx
    w = spec.u(x_face, t) * dx / dh
    bp = _bernoulli(w)
    bm = _bernoulli(-w)
    coef = dh / dx ** 2
    diag = np.zeros(n)
    diag[:-1] += coef * bm
    diag[1:] += coef * bp
    upper = -coef * bp
    lower = -coef * bm
    return lower, diag, upper


def diffusion_step(state: RealState, eps: float, spec: PropagatorSpec,
                   method: str = "implicit") -> RealState:
    """One step of dP/dt = (D/2) P'' - (u P)' with no-flux ends.

    The implicit default has no stability bound and keeps P nonnegative;
    the explicit mode enforces D eps/dx^2 <= 1/2.
    """
    if not eps > 0.0:
        raise ValueError(f"eps must be > 0, got {eps}")
    if spec.variant != "admissible":
        raise ValueError("the diffusion oracle is defined for the admissible variant")
    grid = state.grid
    lower, diag, upper = _diffusion_diagonals(grid, spec, state.time)
    if method == "explicit":
        number = spec.d * eps / grid.dx ** 2
        if number > 0.5:
            raise ValueError(f"explicit diffusion unstable: D eps/dx^2 = "
                             f"{number:.3f} > 0.5")
        out = state.density - eps * _apply_tridiag(lower, diag, upper, state.density)
    elif method == "implicit":
        ab = np.zeros((3, grid.n))
        ab[0, 1:] = eps * upper
        ab[1, :] = 1.0 + eps * diag
        ab[2, :-1] = eps * lower
        out = solve_banded((1, 1), ab, state.density)
    else:
        raise ValueError(f"method must be 'implicit' or 'explicit', got {method!r}")
    out = np.where(np.abs(out) < 1e-300, 0.0, out)  # flush denormals
    return state.replace_density(out, time=state.time + eps)


def evolve_diffusion(state: RealState, eps: float, n_steps: int,
                     spec: PropagatorSpec, method: str = "implicit") -> Trajectory:
    states = [state]
    for _ in range(n_steps):
        states.append(diffusion_step(states[-1], eps, spec, method))
    return Trajectory(states=tuple(states), eps=eps)
