from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ionbound.field import (
    NucleusSpec, RadialDensity, RadialGrid, coulomb_energy, coulomb_energy_pairwise,
    nuclear_attraction, nuclear_repulsion, read_field_csv, shell_potential, solve_field,
    write_field_csv,
)


def uniform_ball(a, N, m):
    grid = RadialGrid.from_edges(np.linspace(a / m, a, m), inner_cap=True)
    return RadialDensity(grid, np.full(grid.size, N / grid.vol.sum()))


def test_uniform_ball_potential_and_energy_converge():
    a, N = 2.0, 3.0
    errs = []
    for m in (50, 100, 200, 400):
        dens = uniform_ball(a, N, m)
        assert math.isclose(dens.total, N, rel_tol=1e-12)
        V = shell_potential(dens.grid, dens.masses)
        errs.append((abs(V[0] - 1.5 * N / a), abs(coulomb_energy(dens) - 0.6 * N**2 / a)))
    errs = np.array(errs)
    assert errs[-1, 0] < 1e-2 and errs[-1, 1] < 1e-2
    # both errors fall at least linearly with the cell size
    assert np.all(errs[1:, 0] < 0.6 * errs[:-1, 0])
    assert np.all(errs[1:, 1] < 0.6 * errs[:-1, 1])


def test_two_shells_exact():
    grid = RadialGrid.from_edges(np.array([0.9, 1.1, 2.9, 3.1]), inner_cap=False)
    m = np.array([2.0, 0.0, 5.0])
    rho = RadialDensity(grid, m / grid.vol)
    V = shell_potential(grid, rho.masses)
    r1, r2 = grid.r[0], grid.r[2]
    assert math.isclose(V[0], 2 / r1 + 5 / r2)
    assert math.isclose(V[2], 7 / r2)
    assert math.isclose(coulomb_energy(rho), 0.5 * (4 / r1 + 25 / r2) + 10 / r2)


def test_outside_support_field_is_point_charge():
    dens = uniform_ball(1.0, 2.0, 64)
    grid = RadialGrid.from_edges(np.concatenate([dens.grid.edges, np.linspace(1.1, 5, 20)]))
    rho = np.concatenate([dens.values, np.zeros(20)])
    rho = RadialDensity(grid, rho)
    assert math.isclose(rho.total, 2.0, rel_tol=1e-12)
    snap = solve_field(rho, Z=3.0)
    out = grid.r > 1.05
    assert np.allclose(snap.potential[out], 2.0 / grid.r[out], rtol=1e-12)
    assert np.allclose(snap.force[out], (2.0 - 3.0) / grid.r[out] ** 2, rtol=1e-12)
    assert np.allclose(snap.charge[out], 2.0, rtol=1e-12)


def test_enclosed_charge_of_uniform_ball():
    dens = uniform_ball(1.0, 1.0, 400)
    snap = solve_field(dens, 1.0)
    assert np.allclose(snap.charge, dens.grid.r**3, atol=2e-3)
    assert np.all(np.diff(snap.charge) > 0)


@given(arrays(float, 24, elements=st.floats(0, 10)))
def test_energy_orderings_agree(values):
    grid = RadialGrid.log(0.01, 30, 24)
    rho = RadialDensity(grid, values)
    a, b = coulomb_energy(rho), coulomb_energy_pairwise(rho)
    assert a >= 0
    assert math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-300)


@given(arrays(float, 16, elements=st.floats(0, 5)), st.floats(0.1, 10))
def test_potential_is_linear_in_mass(values, c):
    grid = RadialGrid.log(0.1, 10, 16)
    v1 = shell_potential(grid, grid.vol * values)
    v2 = shell_potential(grid, grid.vol * values * c)
    assert np.allclose(v2, c * v1, rtol=1e-12, atol=1e-300)


def test_nuclear_terms():
    dens = uniform_ball(1.0, 1.0, 200)
    assert math.isclose(nuclear_attraction(dens, 2.0), 2.0 * 1.5, rel_tol=1e-2)
    nuc = NucleusSpec(charges=(1.0, 2.0), positions=((0, 0, 0), (0, 0, 2)))
    assert nuclear_repulsion(nuc) == 1.0
    assert nuclear_repulsion(NucleusSpec.atom(3)) == 0.0
    with pytest.raises(ValueError):
        NucleusSpec(charges=(1.0, 1.0), positions=((0, 0, 0), (0, 0, 0)))
    with pytest.raises(ValueError):
        NucleusSpec(charges=(-1.0,), positions=((0, 0, 0),))


def test_grid_and_density_validation():
    with pytest.raises(ValueError):
        RadialGrid.from_edges([1.0, 0.5])
    with pytest.raises(ValueError):
        RadialGrid.log(1.0, 0.5, 10)
    grid = RadialGrid.log(0.1, 1.0, 4)
    with pytest.raises(ValueError):
        RadialDensity(grid, np.array([1.0, -1.0, 0.0, 0.0]))
    with pytest.raises(ValueError):
        RadialDensity(grid, np.ones(3))


def test_log_grid_nodes_and_cap():
    grid = RadialGrid.log(0.01, 100.0, 41)
    assert math.isclose(grid.r[0], 0.01) and math.isclose(grid.r[-1], 100.0)
    # node-based volumes carry an O(dlog r^2) error per cell
    assert math.isclose(grid.vol.sum(), 4 / 3 * math.pi * grid.edges[-1] ** 3, rel_tol=5e-2)
    assert grid.suffix(5).size == 36 and not grid.suffix(5).inner_cap


def test_field_csv_round_trip(tmp_path):
    dens = uniform_ball(1.5, 2.0, 30)
    snap = solve_field(dens, 1.0)
    path = tmp_path / "field.csv"
    write_field_csv(path, snap, dens.values)
    back = read_field_csv(path)
    assert np.array_equal(back["V_MF"], snap.potential)
    assert np.array_equal(back["K_r"], snap.force)
    assert np.array_equal(back["rho"], dens.values)
