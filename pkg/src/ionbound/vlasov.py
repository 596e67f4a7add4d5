"""Spherically symmetric Vlasov-Poisson in reduced phase-space coordinates.

A radial phase-space density f(r, w, l) is carried on a product grid:
r (log-spaced cells), radial velocity w (sinh-stretched, symmetric about 0)
and angular momentum l, binned uniformly in l**2.  In these coordinates
dx dxi = 8 pi**2 dr dw l dl, so f is transported as a plain density and
each l-bin is an independent 2D problem coupled to the others only through
the mean field.

Uniform l**2 bins are rings of equal area in the tangential velocity plane,
so a bin average is the exact l-integral of a function that is piecewise
constant in |xi_perp|, and the bin's mean l**2 is its midpoint.  Together
with exact w**2 cell moments this makes the discrete kinetic energy the
true kinetic energy of an admissible f, so the rearrangement inequality
holds on the grid to rounding.

Profiles that start from the Thomas-Fermi atom keep the innermost ball
r < r_in as a frozen Fermi sea: it contributes to the field and to every
integral, while the dynamic shell sees a specular wall at r_in.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ._remap import ABSORB, FOLD, REFLECT, remap_rows
from .constants import PhysicalConstants
from .field import FieldSnapshot, RadialDensity, RadialGrid, solve_field


class StepSizeError(ValueError):
    """Raised when a time step exceeds the admissible bound."""

    def __init__(self, dt, bound):
        super().__init__(f"dt={dt:.3g} exceeds the admissible bound {bound:.3g}")
        self.dt = dt
        self.bound = bound


def sinh_edges(w_max, n, stretch=2.0):
    """Symmetric velocity edges, finer near w = 0."""
    if n < 2 or n % 2:
        raise ValueError("velocity grid needs an even number of cells")
    s = np.linspace(-1.0, 1.0, n + 1)
    if stretch <= 0:
        return w_max * s
    e = w_max * np.sinh(stretch * s) / math.sinh(stretch)
    e[0], e[n // 2], e[-1] = -w_max, 0.0, w_max
    return e


@dataclass(frozen=True)
class PhaseShellState:
    grid: RadialGrid            # full radial grid, frozen core cells first
    n_core: int
    core_rho: np.ndarray
    w_edges: np.ndarray
    l2_edges: np.ndarray
    f: np.ndarray               # (n_l, n_r, n_w) cell averages
    Z: float
    constants: PhysicalConstants = PhysicalConstants()
    t: float = 0.0
    escaped: float = 0.0
    escaped_momentum: float = 0.0   # integral of w over escaped mass, taken at r_max

    def __post_init__(self):
        n_r = self.grid.size - self.n_core
        shape = (self.l2_edges.size - 1, n_r, self.w_edges.size - 1)
        if self.f.shape != shape:
            raise ValueError(f"f has shape {self.f.shape}, grid implies {shape}")
        if min(shape) < 2:
            raise ValueError("every phase-space direction needs at least two cells")

    @property
    def measure(self):
        """Phase-space volume factor 8 pi^2 / h^3."""
        return 8 * math.pi**2 / self.constants.h**3

    @property
    def r(self):
        return self.grid.r[self.n_core:]

    @property
    def r_edges(self):
        return self.grid.edges[self.n_core:]

    @property
    def r_in(self):
        return float(self.r_edges[0])

    @property
    def r_max(self):
        return float(self.grid.edges[-1])

    @property
    def w(self):
        return 0.5 * (self.w_edges[1:] + self.w_edges[:-1])

    @property
    def dw(self):
        return np.diff(self.w_edges)

    @property
    def w2(self):
        """Exact cell means of w**2."""
        e = self.w_edges
        return (e[1:] ** 3 - e[:-1] ** 3) / (3 * np.diff(e))

    @property
    def l2(self):
        return 0.5 * (self.l2_edges[1:] + self.l2_edges[:-1])

    @property
    def omega(self):
        """Per-bin measure of l dl."""
        return 0.5 * np.diff(self.l2_edges)

    def cell_mass(self):
        """Particles per phase-space cell, same shape as f."""
        dr = np.diff(self.r_edges)
        return self.measure * self.f * (self.omega[:, None, None] * dr[None, :, None] * self.dw)


def shell_density(state: PhaseShellState):
    """rho(r_i) = (2 pi / h^3) r_i^-2 sum f dw l dl on the dynamic cells."""
    c = 2 * math.pi / state.constants.h**3
    moment = np.einsum("kij,j,k->i", state.f, state.dw, state.omega)
    return c * moment / state.r**2


def density_from_f(state: PhaseShellState) -> RadialDensity:
    return RadialDensity(state.grid, np.concatenate([state.core_rho, shell_density(state)]))


def total_mass(state: PhaseShellState):
    return density_from_f(state).total


def kinetic_density(state: PhaseShellState):
    """Kinetic energy per unit volume at every node (core: filled Fermi ball)."""
    c = 2 * math.pi / state.constants.h**3
    r2 = state.r**2
    wpart = np.einsum("kij,j,k->i", state.f, state.w2 * state.dw, state.omega)
    lpart = np.einsum("kij,j,k->i", state.f, state.dw, state.omega * state.l2) / r2
    shell = 0.5 * c * (wpart + lpart) / r2
    core = 0.3 * state.constants.gamma_tf * state.core_rho ** (5 / 3)
    return np.concatenate([core, shell])


def kinetic_energy(state: PhaseShellState):
    """1/2 int |xi|^2 f over phase space."""
    return state.grid.integrate(kinetic_density(state))


def state_field(state: PhaseShellState) -> FieldSnapshot:
    return solve_field(density_from_f(state), state.Z)


def acceleration(state: PhaseShellState, field: FieldSnapshot):
    """dw/dt = l^2/r^3 + K_r(r) for every (l-bin, r-cell) row."""
    K = field.force[state.n_core:]
    return state.l2[:, None] / state.r[None, :] ** 3 + K[None, :]


def admissible_dt(state: PhaseShellState, field: FieldSnapshot, floor=1e-12):
    """Largest step accepted by :func:`step`.

    Two limits on occupied rows: one kick may not move a row by more than
    half the velocity range, and dt * omega <= 1 for the fastest local
    radial frequency omega = sqrt(|da/dr|), which keeps the drift-kick-drift
    map well inside its stability region.
    """
    a = acceleration(state, field)
    mass = state.f.sum(axis=2)
    occupied = mass > floor * max(mass.max(), 1e-300)
    if not occupied.any():
        return math.inf
    w_max = state.w_edges[-1]
    amax = np.abs(a[occupied]).max()
    dadr = np.abs(np.gradient(a, state.r, axis=1))
    omega = math.sqrt(dadr[occupied].max())
    bounds = [0.5 * w_max / amax if amax > 0 else math.inf,
              1.0 / omega if omega > 0 else math.inf]
    return float(min(bounds))


def _drift(state: PhaseShellState, tau):
    n_l, n_r, n_w = state.f.shape
    rows = np.ascontiguousarray(state.f.transpose(0, 2, 1)).reshape(n_l * n_w, n_r)
    shifts = np.tile(state.w * tau, n_l)
    partner = (np.arange(n_l)[:, None] * n_w + (n_w - 1 - np.arange(n_w))[None, :]).ravel()
    q = float(state.constants.q)
    out, lost = remap_rows(rows, state.r_edges, shifts, partner, REFLECT, ABSORB, q)
    f = np.ascontiguousarray(out.reshape(n_l, n_w, n_r).transpose(0, 2, 1))
    lost = lost.reshape(n_l, n_w) * state.measure * state.omega[:, None] * state.dw[None, :]
    return replace(
        state, f=f,
        escaped=state.escaped + float(lost.sum()),
        escaped_momentum=state.escaped_momentum + float((lost * state.w[None, :]).sum()),
    )


def _kick(state: PhaseShellState, field: FieldSnapshot, tau):
    n_l, n_r, n_w = state.f.shape
    rows = state.f.reshape(n_l * n_r, n_w)
    shifts = (acceleration(state, field) * tau).ravel()
    partner = np.arange(n_l * n_r)
    out, _ = remap_rows(rows, state.w_edges, shifts, partner, FOLD, FOLD, float(state.constants.q))
    return replace(state, f=out.reshape(n_l, n_r, n_w))


def step(state: PhaseShellState, dt, field: FieldSnapshot | None = None, check=True):
    """One drift-kick-drift step.

    With ``field`` given the kick uses it frozen; otherwise the field is
    solved once, from the density after the first half drift, which makes
    the splitting second order in the self-consistent coupling.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if check:
        bound = admissible_dt(state, field if field is not None else state_field(state))
        if dt > bound:
            raise StepSizeError(dt, bound)
    half = _drift(state, 0.5 * dt)
    kick_field = field if field is not None else state_field(half)
    kicked = _kick(half, kick_field, dt)
    out = _drift(kicked, 0.5 * dt)
    return replace(out, t=state.t + dt)


def advance(state: PhaseShellState, dt, n_steps, check=True):
    """``n_steps`` consecutive steps with the inner half drifts fused.

    The step bound is checked once, on the starting state.
    """
    if n_steps <= 0:
        return state
    if not dt > 0:
        raise ValueError("dt must be positive")
    if check:
        bound = admissible_dt(state, state_field(state))
        if dt > bound:
            raise StepSizeError(dt, bound)
    s = _drift(state, 0.5 * dt)
    for k in range(n_steps):
        s = _kick(s, state_field(s), dt)
        s = _drift(s, dt if k < n_steps - 1 else 0.5 * dt)
    return replace(s, t=state.t + n_steps * dt)


# --- initial data -------------------------------------------------------------

def fill_fermi_balls(r, p_f, drift, w_edges, l2_edges, q, sub=32):
    """Cell averages of q * 1{(w - u)^2 + l^2/r^2 <= p_F^2} at each node.

    The l-fraction of every l**2 bin is exact; w is averaged over ``sub``
    midpoint samples per cell.
    """
    n_w = w_edges.size - 1
    t = (np.arange(sub) + 0.5) / sub
    ws = w_edges[:-1, None] + np.diff(w_edges)[:, None] * t[None, :]          # (n_w, sub)
    out = np.empty((l2_edges.size - 1, r.size, n_w))
    lo, width = l2_edges[:-1], np.diff(l2_edges)
    for i in range(r.size):
        L2 = r[i] ** 2 * (p_f[i] ** 2 - (ws - drift[i]) ** 2)                 # (n_w, sub)
        frac = np.clip((L2[None, :, :] - lo[:, None, None]) / width[:, None, None], 0.0, 1.0)
        out[:, i, :] = q * frac.mean(axis=2)
    return out


def _shell_grid(r_in, r_max, n_r, core_edges=None):
    shell = np.exp(np.linspace(math.log(r_in), math.log(r_max), n_r + 1))
    if core_edges is None:
        return RadialGrid.from_edges(shell, inner_cap=False), 0
    edges = np.concatenate([core_edges[:-1], shell])
    return RadialGrid.from_edges(edges, inner_cap=True), core_edges.size - 1


def tf_equilibrium_state(Z, n_r=128, n_w=128, n_l=8, r_in=1.0, r_max=60.0, n_core=48,
                         drift=0.0, drift_scale=1.0, w_stretch=2.0,
                         constants=PhysicalConstants()):
    """Thomas-Fermi atom as a Vlasov state, with a frozen core below r_in.

    ``drift`` adds the radial flow u(r) = drift * r / (r + drift_scale) to
    every Fermi ball, a smooth breathing perturbation.
    """
    from .groundstate import tf_density

    core_edges = np.exp(np.linspace(math.log(1e-4 / Z), math.log(r_in), n_core + 1))
    grid, nc = _shell_grid(r_in, r_max, n_r, core_edges)
    rho = tf_density(grid, Z, constants)
    r = grid.r[nc:]
    p_f = constants.fermi_momentum(rho[nc:])
    u = drift * r / (r + drift_scale)
    w_max = 1.25 * float(np.max(p_f + np.abs(u)))
    l2_max = 1.05 * float(np.max((r * p_f) ** 2))
    w_edges = sinh_edges(w_max, n_w, w_stretch)
    l2_edges = np.linspace(0.0, l2_max, n_l + 1)
    f = fill_fermi_balls(r, p_f, u, w_edges, l2_edges, constants.q)
    return PhaseShellState(grid=grid, n_core=nc, core_rho=rho[:nc].copy(), w_edges=w_edges,
                           l2_edges=l2_edges, f=f, Z=float(Z), constants=constants)


def smooth_ball_density(r, N, radius):
    """rho = rho0 (1 - r^2/a^2)^2 inside a, normalised to N particles."""
    shape = np.clip(1 - (r / radius) ** 2, 0.0, None) ** 2
    norm = 4 * math.pi * radius**3 * (1 / 3 - 2 / 5 + 1 / 7)
    return N / norm * shape


def fermi_ball_state(Z, N, radius=3.0, n_r=128, n_w=64, n_l=16, r_in=0.05, r_max=60.0,
                     w_max=None, w_stretch=1.0, constants=PhysicalConstants()):
    """Filled Fermi balls over a smooth spatial profile, no frozen core."""
    grid, _ = _shell_grid(r_in, r_max, n_r)
    rho = smooth_ball_density(grid.r, N, radius)
    p_f = constants.fermi_momentum(rho)
    if w_max is None:
        w_max = 1.5 * float(p_f.max()) + math.sqrt(2 * max(N, Z) / radius)
    l2_max = 1.05 * float(np.max((grid.r * p_f) ** 2))
    w_edges = sinh_edges(w_max, n_w, w_stretch)
    l2_edges = np.linspace(0.0, l2_max, n_l + 1)
    f = fill_fermi_balls(grid.r, p_f, np.zeros_like(p_f), w_edges, l2_edges, constants.q)
    return PhaseShellState(grid=grid, n_core=0, core_rho=np.zeros(0), w_edges=w_edges,
                           l2_edges=l2_edges, f=f, Z=float(Z), constants=constants)


def shifted_blob_state(Z, r0=2.0, w0=0.5, sigma_r=0.5, sigma_w=0.3, l2_max=0.5, amplitude=0.5,
                       n_r=96, n_w=48, n_l=8, r_in=0.05, r_max=40.0, w_max=None,
                       constants=PhysicalConstants()):
    """Gaussian lump in (r, w), flat in l**2 up to ``l2_max``, peak amplitude*q."""
    if not 0 < amplitude <= 1:
        raise ValueError("amplitude must lie in (0, 1]")
    grid, _ = _shell_grid(r_in, r_max, n_r)
    if w_max is None:
        w_max = abs(w0) + 6 * sigma_w + math.sqrt(2 * Z / max(r0 - 2 * sigma_r, r_in))
    w_edges = sinh_edges(w_max, n_w, 0.0)
    l2_edges = np.linspace(0.0, l2_max, n_l + 1)
    w = 0.5 * (w_edges[1:] + w_edges[:-1])
    prof = np.exp(-((grid.r[:, None] - r0) / sigma_r) ** 2 - ((w[None, :] - w0) / sigma_w) ** 2)
    f = np.broadcast_to(amplitude * constants.q * prof, (n_l, n_r, n_w)).copy()
    return PhaseShellState(grid=grid, n_core=0, core_rho=np.zeros(0), w_edges=w_edges,
                           l2_edges=l2_edges, f=f, Z=float(Z), constants=constants)
