"""Coulomb field of spherically symmetric charge on a radial grid.

Each grid cell is treated as a thin shell at its node carrying the cell
mass ``m_i = vol_i * rho_i``.  With that convention Newton's shell theorem
gives the mean-field potential exactly as a sum over shells,

    V_MF(r_i) = sum_j m_j / max(r_i, r_j),

and the Coulomb energy D[rho] = 1/2 sum_i m_i V_MF(r_i) is the same
double sum evaluated in a different order.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RadialGrid:
    """Cell-centred radial grid.

    ``edges`` has one more entry than ``r``; node i sits at the geometric
    mean of its edges, so ``vol_i = 4 pi r_i^2 (e_{i+1} - e_i)``.  When
    ``inner_cap`` is set the ball [0, e_0] is folded into cell 0 (density
    assumed constant there).
    """

    r: np.ndarray
    edges: np.ndarray
    vol: np.ndarray
    inner_cap: bool = True

    @classmethod
    def from_edges(cls, edges, inner_cap=True):
        e = np.asarray(edges, dtype=float)
        if e.ndim != 1 or e.size < 2:
            raise ValueError("need at least two edges")
        if e[0] <= 0 or np.any(np.diff(e) <= 0):
            raise ValueError("edges must be positive and strictly increasing")
        r = np.sqrt(e[:-1] * e[1:])
        vol = 4 * math.pi * r**2 * np.diff(e)
        if inner_cap:
            vol = vol.copy()
            vol[0] += 4 * math.pi * e[0] ** 3 / 3
        return cls(r=r, edges=e, vol=vol, inner_cap=inner_cap)

    @classmethod
    def log(cls, r_min, r_max, m, inner_cap=True):
        """``m`` log-spaced cells; nodes run from r_min to r_max."""
        if not (0 < r_min < r_max):
            raise ValueError("need 0 < r_min < r_max")
        if m < 2:
            raise ValueError("need at least two cells")
        du = math.log(r_max / r_min) / (m - 1)
        u = math.log(r_min) + du * (np.arange(m + 1) - 0.5)
        return cls.from_edges(np.exp(u), inner_cap=inner_cap)

    @classmethod
    def for_atom(cls, Z, r_max=50.0, m=512):
        return cls.log(1e-4 / Z, r_max, m)

    @property
    def size(self):
        return self.r.size

    @property
    def dr(self):
        return np.diff(self.edges)

    def index_at(self, radius):
        """First cell whose lower edge is >= radius."""
        return int(np.searchsorted(self.edges[:-1], radius, side="left"))

    def suffix(self, start):
        """Cells ``start:`` as a grid with a hard inner wall (no cap)."""
        return RadialGrid.from_edges(self.edges[start:], inner_cap=False)

    def integrate(self, values):
        """Quadrature of a radial function over R^3."""
        return float(np.dot(self.vol, values))


@dataclass(frozen=True)
class RadialDensity:
    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.r.shape:
            raise ValueError("density does not match grid")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("density must be finite and non-negative")
        object.__setattr__(self, "values", v)

    @property
    def masses(self):
        return self.grid.vol * self.values

    @property
    def total(self):
        return float(self.masses.sum())


@dataclass(frozen=True)
class FieldSnapshot:
    grid: RadialGrid
    Z: float
    charge: np.ndarray       # Q(<r_i)
    potential: np.ndarray    # V_MF(r_i)
    force: np.ndarray        # radial force -dV_tot/dr at r_i

    def to_rows(self, rho):
        return [
            {"r": r, "rho": p, "Q": q, "V_MF": v, "K_r": k}
            for r, p, q, v, k in zip(self.grid.r, rho, self.charge, self.potential, self.force)
        ]


@dataclass(frozen=True)
class NucleusSpec:
    charges: tuple
    positions: tuple

    def __post_init__(self):
        if len(self.charges) != len(self.positions) or not self.charges:
            raise ValueError("need matching, non-empty charges and positions")
        if any(z <= 0 for z in self.charges):
            raise ValueError("nuclear charges must be positive")
        pos = np.asarray(self.positions, dtype=float).reshape(len(self.charges), 3)
        for k in range(len(pos)):
            for l in range(k + 1, len(pos)):
                if np.linalg.norm(pos[k] - pos[l]) == 0:
                    raise ValueError("coincident nuclei")

    @classmethod
    def atom(cls, Z):
        return cls(charges=(float(Z),), positions=((0.0, 0.0, 0.0),))


def _inner_fraction(grid: RadialGrid):
    """Fraction of cell i's volume lying below its node (uniform density)."""
    e = grid.edges
    lo = 0.0 if grid.inner_cap else e[0] ** 3
    inner = grid.r**3 - np.concatenate(([lo], e[1:-1] ** 3))
    total = e[1:] ** 3 - np.concatenate(([lo], e[1:-1] ** 3))
    return inner / total


def shell_potential(grid: RadialGrid, masses):
    """V_MF at the nodes from shell masses, O(M) via cumulative sums."""
    m = np.asarray(masses, dtype=float)
    below = np.cumsum(m)                      # sum_{j<=i} m_j
    above = np.cumsum((m / grid.r)[::-1])[::-1] - m / grid.r   # sum_{j>i} m_j/r_j
    return below / grid.r + above


def solve_field(rho: RadialDensity, Z: float) -> FieldSnapshot:
    grid = rho.grid
    m = rho.masses
    V = shell_potential(grid, m)
    Q = np.cumsum(m) - m + _inner_fraction(grid) * m
    K = (Q - Z) / grid.r**2
    return FieldSnapshot(grid=grid, Z=float(Z), charge=Q, potential=V, force=K)


def coulomb_energy(rho: RadialDensity) -> float:
    m = rho.masses
    return 0.5 * float(np.dot(m, shell_potential(rho.grid, m)))


def coulomb_energy_pairwise(rho: RadialDensity) -> float:
    """Same double sum as :func:`coulomb_energy`, accumulated pair by pair
    from the outermost shell inwards."""
    m = rho.masses
    r = rho.grid.r
    enclosed = np.cumsum(m) - m
    return float(np.sum((m * enclosed / r)[::-1]) + 0.5 * np.sum((m * m / r)[::-1]))


def nuclear_attraction(rho: RadialDensity, Z: float) -> float:
    return float(Z * np.dot(rho.masses, 1.0 / rho.grid.r))


def nuclear_repulsion(nuclei: NucleusSpec) -> float:
    pos = np.asarray(nuclei.positions, dtype=float).reshape(len(nuclei.charges), 3)
    total = 0.0
    for k in range(len(pos)):
        for l in range(k + 1, len(pos)):
            total += nuclei.charges[k] * nuclei.charges[l] / np.linalg.norm(pos[k] - pos[l])
    return float(total)


def write_field_csv(path, snapshot: FieldSnapshot, rho):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["r", "rho", "Q", "V_MF", "K_r"])
        w.writeheader()
        for row in snapshot.to_rows(rho):
            w.writerow({k: repr(float(v)) for k, v in row.items()})


def read_field_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(row[k]) for row in rows]) for k in ("r", "rho", "Q", "V_MF", "K_r")}
