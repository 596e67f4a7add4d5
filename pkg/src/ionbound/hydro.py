"""Time-dependent Thomas-Fermi hydrodynamics in radial symmetry.

The unknowns are the density rho and a velocity potential phi with the
flow u = -d_r phi.  Per unit time

    phi_t = 1/2 (d_r phi)^2 + (gamma/2) rho^(2/3) - Z/r + V_MF,
    rho_t + r^-2 d_r (r^2 rho u) = 0.

phi lives at the nodes and is advanced with a Godunov Hamilton-Jacobi flux
for the gradient term; rho is advanced in flux form with MUSCL upwinding,
so mass only moves between cells or out through r_max.  Both use SSP-RK3.

As in the kinetic solver an optional frozen core r < r_in keeps its
density and sits behind a wall; it contributes to the field and to all
integrals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .constants import PhysicalConstants
from .field import FieldSnapshot, RadialDensity, RadialGrid, coulomb_energy, shell_potential, solve_field

RHO23_FLOOR = 1e-30
VACUUM = 1e-14


class CFLError(ValueError):
    def __init__(self, dt, bound):
        super().__init__(f"dt={dt:.3g} exceeds the CFL bound {bound:.3g}")
        self.dt = dt
        self.bound = bound


@dataclass(frozen=True)
class HydroOptions:
    pressure: bool = True
    self_field: bool = True
    viscosity: float = 0.0
    cfl: float = 0.4


@dataclass(frozen=True)
class FluidState:
    grid: RadialGrid
    rho: np.ndarray          # all cells, core first
    phi: np.ndarray
    Z: float
    n_core: int = 0
    constants: PhysicalConstants = PhysicalConstants()
    options: HydroOptions = HydroOptions()
    t: float = 0.0
    escaped: float = 0.0

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        if rho.shape != self.grid.r.shape or phi.shape != rho.shape:
            raise ValueError("rho and phi must match the grid")
        if np.any(rho < 0):
            raise ValueError("density must be non-negative")
        if not (0 <= self.n_core < self.grid.size - 2):
            raise ValueError("core leaves fewer than three dynamic cells")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "phi", phi)

    @property
    def density(self) -> RadialDensity:
        return RadialDensity(self.grid, self.rho)

    @property
    def mass(self):
        return float(np.dot(self.grid.vol, self.rho))

    def velocity_faces(self):
        """u = -d_r phi on the faces between dynamic cells; walls and the
        core side carry u = 0, the outer face copies its neighbour."""
        r = self.grid.r[self.n_core:]
        p = np.diff(self.phi[self.n_core:]) / np.diff(r)
        return np.concatenate(([0.0], -p, [-p[-1]]))

    def gauged(self):
        """phi shifted so that phi(r_max) = 0."""
        return replace(self, phi=self.phi - self.phi[-1])


def pressure(rho_value, constants=PhysicalConstants()):
    rho_value = np.asarray(rho_value, dtype=float)
    if np.any(rho_value < 0):
        raise ValueError("density must be non-negative")
    out = constants.gamma_tf / 5 * rho_value ** (5 / 3)
    return out[()] if out.ndim == 0 else out


def enthalpy(rho_value, constants=PhysicalConstants()):
    """int dp/rho = (gamma/2) rho^(2/3)."""
    rho_value = np.asarray(rho_value, dtype=float)
    if np.any(rho_value < 0):
        raise ValueError("density must be non-negative")
    out = 0.5 * constants.gamma_tf * np.maximum(rho_value, 0.0) ** (2 / 3)
    return out[()] if out.ndim == 0 else out


def sound_speed(rho_value, constants=PhysicalConstants()):
    """sqrt(p'(rho)) = sqrt(gamma/3 rho^(2/3))."""
    r23 = np.maximum(np.asarray(rho_value, float) ** (2 / 3), RHO23_FLOOR)
    return np.sqrt(constants.gamma_tf / 3 * r23)


def _minmod(a, b):
    return np.where(a * b > 0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def state_field(state: FluidState) -> FieldSnapshot:
    return solve_field(state.density, state.Z)


def admissible_dt(state: FluidState):
    """cfl * dr / (|u| + c) minimised over dynamic cells."""
    nc = state.n_core
    dr = state.grid.dr[nc:]
    uf = state.velocity_faces()
    u = np.maximum(np.abs(uf[:-1]), np.abs(uf[1:]))
    c = sound_speed(state.rho[nc:], state.constants) if state.options.pressure else 0.0
    speed = u + c
    if np.all(speed == 0):
        return math.inf
    return float(state.options.cfl * np.min(dr / np.maximum(speed, 1e-300)))


def _rates(state: FluidState, field: FieldSnapshot | None):
    """(dphi/dt, dm/dt, outflow rate) on the dynamic cells."""
    grid, nc, opt = state.grid, state.n_core, state.options
    r = grid.r[nc:]
    e = grid.edges[nc:]
    rho = state.rho[nc:]
    phi = state.phi[nc:]
    vol = grid.vol[nc:]
    n = r.size

    # Hamilton-Jacobi part, phi_t = 1/2 p^2 + source (Godunov, concave Hamiltonian)
    dphi = np.diff(phi) / np.diff(r)
    back = np.concatenate(([0.0], dphi))       # wall: no gradient through r_in
    fwd = np.concatenate((dphi, [0.0]))        # outflow: nothing enters from outside
    ham = 0.5 * np.maximum(np.minimum(back, 0.0) ** 2, np.maximum(fwd, 0.0) ** 2)
    # first node: its backward difference would straddle the wall.  Take the
    # gradient linear between the wall (zero) and the first difference, and
    # read it where a geometric ghost node's backward difference would sit,
    # so node 0 carries the same half-cell offset as every other node.
    wall = 0.0 if (nc == 0 and grid.inner_cap) else e[0]
    ghost_mid = 0.5 * (r[0] ** 2 / r[1] + r[0])
    centre = 0.5 * (r[0] + r[1])
    ham[0] = 0.5 * (dphi[0] * max(ghost_mid - wall, 0.0) / (centre - wall)) ** 2
    src = -state.Z / r
    if opt.pressure:
        src = src + 0.5 * state.constants.gamma_tf * np.maximum(rho ** (2 / 3), RHO23_FLOOR)
    if opt.self_field:
        V = field.potential if field is not None else shell_potential(grid, grid.vol * state.rho)
        src = src + V[nc:]
    phit = ham + src
    if opt.viscosity > 0:
        flux = np.concatenate(([0.0], e[1:-1] ** 2 * dphi, [0.0]))
        phit = phit + opt.viscosity * np.diff(flux) / (vol / (4 * math.pi))

    # continuity, MUSCL upwind on the faces between dynamic cells
    slope = np.zeros(n)
    d = np.diff(rho) / np.diff(r)
    slope[1:-1] = _minmod(d[:-1], d[1:])
    left = rho[:-1] + slope[:-1] * (e[1:-1] - r[:-1])
    right = rho[1:] + slope[1:] * (e[1:-1] - r[1:])
    u = -dphi
    face = np.where(u > 0, left, right)
    up = np.where(u > 0, np.arange(n - 1), np.arange(1, n))
    live = state.rho[nc:][up] * vol[up] > VACUUM * max(state.mass, 1e-300)
    F = np.where(live, 4 * math.pi * e[1:-1] ** 2 * u * np.maximum(face, 0.0), 0.0)
    u_out = max(-dphi[-1], 0.0)
    out = 4 * math.pi * e[-1] ** 2 * u_out * rho[-1]
    if rho[-1] * vol[-1] <= VACUUM * max(state.mass, 1e-300):
        out = 0.0
    F = np.concatenate(([0.0], F, [out]))
    mt = F[:-1] - F[1:]
    return phit, mt, out


def _euler(state: FluidState, field, dt):
    nc = state.n_core
    phit, mt, out = _rates(state, field)
    vol = state.grid.vol[nc:]
    m = vol * state.rho[nc:] + dt * mt
    rho = state.rho.copy()
    rho[nc:] = np.maximum(m, 0.0) / vol
    phi = state.phi.copy()
    phi[nc:] = phi[nc:] + dt * phit
    return replace(state, rho=rho, phi=phi, escaped=state.escaped + dt * out)


def step(state: FluidState, field: FieldSnapshot | None = None, dt: float = 0.0, check=True):
    """One SSP-RK3 (Shu-Osher) step.

    The phi/rho coupling is a centred acoustic system; its eigenvalues sit
    on the imaginary axis, which the third-order scheme keeps stable and
    the second-order one does not.

    With ``field`` given every stage uses it frozen; otherwise the
    mean-field potential is recomputed from each stage's density.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if check:
        bound = admissible_dt(state)
        if dt > bound:
            raise CFLError(dt, bound)
    s1 = _euler(state, field, dt)
    s2 = _euler(s1, field, dt)
    s2 = replace(s2, rho=0.75 * state.rho + 0.25 * s2.rho, phi=0.75 * state.phi + 0.25 * s2.phi,
                 escaped=0.75 * state.escaped + 0.25 * s2.escaped)
    s3 = _euler(s2, field, dt)
    rho = (state.rho + 2 * s3.rho) / 3
    phi = (state.phi + 2 * s3.phi) / 3
    if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(phi))):
        raise FloatingPointError("non-finite hydro state")
    out = replace(state, rho=rho, phi=phi, t=state.t + dt,
                  escaped=(state.escaped + 2 * s3.escaped) / 3)
    return out.gauged()


def advance(state: FluidState, t_end, dt_max=math.inf, dt_min=1e-9):
    """Step to ``t_end`` with the largest admissible steps (at most dt_max).

    A CFL bound below ``dt_min`` is treated as a collapse and raised.
    """
    s = state
    while s.t < t_end - 1e-14:
        bound = admissible_dt(s)
        if bound < dt_min:
            raise CFLError(dt_min, bound)
        dt = min(bound, dt_max, t_end - s.t)
        s = step(s, None, dt, check=False)
    return s


def face_kinetic(state: FluidState):
    """Per-cell flow energy density rho u^2/2, u^2 averaged over the cell's faces."""
    nc = state.n_core
    uf = state.velocity_faces()
    u2 = 0.5 * (uf[:-1] ** 2 + uf[1:] ** 2)
    out = np.zeros(state.grid.size)
    out[nc:] = 0.5 * state.rho[nc:] * u2
    return out


def hydro_energy(state: FluidState, field: FieldSnapshot | None = None):
    """Flow, internal, attraction and repulsion energies of the fluid."""
    from .diagnostics import EnergyBreakdown

    grid = state.grid
    dens = state.density
    flow = grid.integrate(face_kinetic(state))
    internal = 0.3 * state.constants.gamma_tf * grid.integrate(state.rho ** (5 / 3))
    attraction = -state.Z * float(np.dot(dens.masses, 1.0 / grid.r))
    repulsion = coulomb_energy(dens)
    return EnergyBreakdown(kinetic=flow, tf_internal=internal, attraction=attraction,
                           repulsion=repulsion, nuclear=0.0, includes_internal=True)


# --- initial data -------------------------------------------------------------

def tf_fluid_grid(Z, r_max=50.0, m=512):
    return RadialGrid.log(1e-4 / Z, r_max, m)


def tf_static_state(Z, r_in=0.2, r_max=50.0, m=512, perturbation=0.0, perturbation_scale=1.0,
                    constants=PhysicalConstants(), options=HydroOptions()):
    """Grid Thomas-Fermi minimiser at rest, frozen below r_in.

    The density is the discrete minimiser on this very grid, so the source
    term of the phi equation vanishes to solver tolerance and the state is
    an exact discrete equilibrium.  ``perturbation`` adds the flow
    u = eps r/(r + scale), i.e. phi = -eps (r - scale log(1 + r/scale)).
    """
    from .groundstate import minimize_direct

    grid = tf_fluid_grid(Z, r_max, m)
    _, rho, _, _ = minimize_direct(grid, Z, constants)
    nc = grid.index_at(r_in)
    r = grid.r
    a = perturbation_scale
    phi = -perturbation * (r - a * np.log1p(r / a))
    return FluidState(grid=grid, rho=rho, phi=phi - phi[-1], Z=float(Z), n_core=nc,
                      constants=constants, options=options)


def dilation_state(c=0.5, width=1.0, r_max=40.0, m=400):
    """Pressureless, field-free Gaussian cloud with the linear flow u = c r."""
    grid = RadialGrid.log(1e-3, r_max, m)
    rho = np.exp(-((grid.r / width) ** 2))
    return FluidState(grid=grid, rho=rho, phi=-0.5 * c * grid.r**2, Z=0.0, n_core=0,
                      options=HydroOptions(pressure=False, self_field=False))


def dilation_exact(r, t, c=0.5, width=1.0):
    """Density of the free linear expansion at time t."""
    s = 1 + c * t
    return np.exp(-((np.asarray(r) / (s * width)) ** 2)) / s**3
