from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ionbound.constants import PhysicalConstants
from ionbound.field import NucleusSpec, RadialDensity, RadialGrid
from ionbound.groundstate import (
    enclosed_charge, length_scale, minimize_direct, screening_function, solve_tf_atom,
    stability_constant, stability_lower_bound, tf_density, tf_energy_closed_form, tf_functional,
    uniform_norm_bound,
)

# initial slope of the neutral screening function, frozen from an independent
# high-precision shooting computation
SLOPE = -1.5880710226


def test_screening_slope():
    assert abs(screening_function().slope - SLOPE) < 1e-9


def test_screening_function_shape():
    chi = screening_function()
    x = np.geomspace(1e-4, 1e4, 400)
    c, d = chi.evaluate(x)
    assert np.all(c > 0) and np.all(np.diff(c) < 0) and np.all(d < 0)
    # far tail approaches 144/x^3
    assert math.isclose(chi(1e4) * 1e12 / 144, 1.0, rel_tol=0.05)


def test_length_scale_value():
    assert math.isclose(length_scale(1.0), 0.88534, rel_tol=1e-4)


def test_closed_form_energy_scaling_is_exact():
    e1 = tf_energy_closed_form(1.0)
    for Z in (2.0, 5.0, 92.0):
        assert math.isclose(tf_energy_closed_form(Z), e1 * Z ** (7 / 3), rel_tol=1e-12)
    assert math.isclose(e1, -0.7687, rel_tol=1e-3)
    assert stability_constant() == e1


@pytest.mark.parametrize("Z", [1.0, 3.0])
def test_neutral_and_routes_agree(Z):
    st_ = solve_tf_atom(Z)
    assert abs(st_.charge - Z) / Z < 1e-4
    assert abs(st_.energy_direct - st_.energy) / abs(st_.energy) < 1e-3
    assert abs(st_.energy_grid - st_.energy) / abs(st_.energy) < 1e-3
    assert st_.energy_direct <= st_.energy_grid + 1e-12


def test_enclosed_charge_monotone_to_Z():
    r = np.geomspace(1e-3, 1e3, 100)
    Q = enclosed_charge(r, 2.0)
    assert np.all(np.diff(Q) > 0)
    assert Q[-1] > 2.0 * (1 - 1e-4)


def test_residual_vanishes_where_density_lives():
    st_ = solve_tf_atom(1.0, direct=False)
    r = st_.grid.r
    mid = (r > 0.01) & (r < 20)
    rel = np.abs(st_.residual()[mid]) * r[mid]
    assert rel.max() < 5e-3


def test_direct_minimiser_is_a_critical_point():
    grid = RadialGrid.log(1e-4, 50.0, 160)
    E, rho, it, gnorm = minimize_direct(grid, 1.0)
    assert gnorm < 1e-8
    base = tf_functional(RadialDensity(grid, rho), 1.0)
    assert math.isclose(base, E, rel_tol=1e-12)
    rng = np.random.default_rng(0)
    for _ in range(5):
        trial = rho * np.exp(1e-3 * rng.standard_normal(rho.size))
        assert tf_functional(RadialDensity(grid, trial), 1.0) >= E - 1e-12


_stab_grid = RadialGrid.log(1e-3, 40.0, 80)


@given(st.floats(0.05, 5.0), st.floats(0.1, 6.0), st.floats(0.5, 4.0), st.floats(0.2, 3.0))
def test_stability_lower_bound_on_random_densities(N, scale, power, Z):
    r = _stab_grid.r
    rho = np.exp(-(r / scale) ** power)
    dens = RadialDensity(_stab_grid, rho * N / RadialDensity(_stab_grid, rho).total)
    alpha = stability_constant()
    assert tf_functional(dens, Z) >= alpha * Z ** (7 / 3) - 1e-9


def test_stability_lower_bound_sums_over_nuclei():
    nuc = NucleusSpec(charges=(1.0, 2.0), positions=((0, 0, 0), (0, 0, 1)))
    assert math.isclose(stability_lower_bound(nuc, -1.0), -(1 + 2 ** (7 / 3)))


def test_uniform_norm_bound_examples():
    alpha = stability_constant()
    E0 = alpha  # neutral atom energy for Z = 1
    b = uniform_norm_bound(E0, 1.0, alpha)
    assert math.isclose(b, 2 * (alpha - 0.5 * alpha * 2 ** (7 / 3)))
    assert b > 0
    with pytest.raises(ValueError):
        uniform_norm_bound(10 * alpha * 2 ** (7 / 3), 1.0, alpha)


def test_q_dependence():
    c1, c2 = PhysicalConstants(1), PhysicalConstants(2)
    assert c1.gamma_tf > c2.gamma_tf
    assert tf_energy_closed_form(1.0, c1) > tf_energy_closed_form(1.0, c2)
    with pytest.raises(ValueError):
        PhysicalConstants(0)
    grid = RadialGrid.log(1e-3, 10.0, 20)
    assert np.all(tf_density(grid, 1.0) > 0)
