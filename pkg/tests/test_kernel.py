from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ionbound import kernel as K
from ionbound.kernel import WeightParams

radius = st.floats(1e-3, 1e3)
Rs = st.floats(0.5, 50.0)
vec3 = st.lists(st.floats(-20, 20), min_size=3, max_size=3).map(np.array)


@given(radius)
def test_g_is_increasing_convex_and_small_r_series_matches(r):
    assert K.g(r) >= 0
    assert K.g_prime(r) >= 0 and K.g_double_prime(r) >= 0
    assert K.g_prime(r) < 1.0


def test_g_series_continuous_at_switch():
    lo, hi = K.g(np.nextafter(0.1, 0)), K.g(0.1)
    assert abs(lo - hi) <= 1e-12 * hi


def test_g_rejects_negative_radius():
    with pytest.raises(ValueError):
        K.g(-1.0)


@given(vec3, Rs)
def test_gradient_matches_finite_difference(x, R):
    p = WeightParams(R)
    if np.linalg.norm(x) < 1e-2:
        return
    h = 1e-5 * max(1.0, np.linalg.norm(x))
    fd = np.array([(K.g_R(x + h * e, p) - K.g_R(x - h * e, p)) / (2 * h) for e in np.eye(3)])
    g = K.grad_gR(x, p)
    assert np.allclose(fd, g, rtol=1e-5, atol=1e-6 * max(1.0, np.abs(g).max()))


@given(vec3, Rs)
def test_hessian_eigenvalues_match_finite_difference(x, R):
    p = WeightParams(R)
    r = np.linalg.norm(x)
    if r < 1e-1:
        return
    h = 1e-5 * max(1.0, r)
    H = np.array([(K.grad_gR(x + h * e, p) - K.grad_gR(x - h * e, p)) / (2 * h) for e in np.eye(3)])
    ev = np.sort(np.linalg.eigvalsh(0.5 * (H + H.T)))
    lam_r, lam_t = K.hess_eigs(r, p)
    assert np.allclose(ev, np.sort([lam_r, lam_t, lam_t]), rtol=1e-4, atol=1e-6)
    assert lam_r >= 0 and lam_t >= 0
    assert math.isclose(K.laplacian_gR(r, p), lam_r + 2 * lam_t)


def test_weight_identity_radial_gradient_over_r_squared_is_moment_weight():
    r = np.geomspace(1e-3, 1e3, 200)
    for R in (1.0, 5.0, 40.0):
        gp = R**2 * K.g_prime(r / R)
        assert np.allclose(gp / r**2, K.moment_weight(r, R), rtol=1e-13)


def test_ll1_worked_examples():
    # x = -y on the unit sphere: lhs = 2 g'(1) * 2 / 8, rhs = g'(1)^2 / 2
    m = K.check_ll1(np.array([1.0, 0, 0]), np.array([-1.0, 0, 0]))
    assert math.isclose(m.lhs, 0.25, rel_tol=1e-14)
    assert math.isclose(m.rhs, 0.125, rel_tol=1e-14)
    assert m.holds()


@given(vec3, vec3)
def test_ll1_holds_for_arbitrary_pairs(x, y):
    if min(np.linalg.norm(x), np.linalg.norm(y), np.linalg.norm(x - y)) < 1e-3:
        return
    assert K.check_ll1(x, y).holds()


def test_ll1_rejects_degenerate_pairs():
    with pytest.raises(ValueError):
        K.check_ll1(np.zeros(3), np.ones(3))
    with pytest.raises(ValueError):
        K.check_ll1(np.ones(3), np.ones(3))


def test_ll1_sweep_is_seeded():
    a = K.ll1_sweep(20_000, seed=3)
    b = K.ll1_sweep(20_000, seed=3)
    assert a[0] == b[0] and a[1] == b[1] == 0
    assert len(a[2]) == 16


def test_sphere_average_matches_monte_carlo():
    rng = np.random.default_rng(0)
    r, s = 1.3, 0.7
    u = rng.standard_normal((400_000, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    v = rng.standard_normal((400_000, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    x, y = r * u, s * v
    p = WeightParams(1.0)
    d = x - y
    vals = np.sum((K.grad_gR(x, p) - K.grad_gR(y, p)) * d, axis=1) / np.linalg.norm(d, axis=1) ** 3
    mc = vals.mean()
    err = vals.std() / math.sqrt(vals.size)
    assert abs(K.sphere_averaged_kernel(r, s) - mc) < 5 * err


def test_sphere_average_equal_radii_closed_form():
    # at r = s the average is g'(r)/r^2 exactly (integrand constant in separation)
    r = np.array([0.1, 1.0, 7.0])
    assert np.allclose(K.sphere_averaged_kernel(r, r), K.g_prime(r) / r**2, rtol=1e-14)


@given(st.floats(0.01, 100), st.floats(0.01, 100))
def test_ll2_holds(r, s):
    assert K.check_ll2(r, s).holds()


def test_ll2_grid_sweep_reports_no_violation():
    mn, bad, lhs, rhs = K.ll2_grid_sweep(np.geomspace(0.01, 100, 12), 64)
    assert bad == 0 and lhs.shape == (12, 12)
    assert np.allclose(lhs, lhs.T)


@pytest.mark.parametrize("nu", [2, 3, 4, 5])
def test_nu_inequality_sweep(nu):
    mn, bad = K.nu_sweep(nu, 20_000, seed=nu)
    assert bad == 0


def test_nu_inequality_equality_case():
    # antipodal unit vectors: lhs = 2 / 2^(nu-1) = 2^(2-nu) = rhs
    for nu in (2, 3, 4, 5):
        x = np.zeros(nu)
        x[0] = 1.0
        m = K.check_nu_inequality(x, -x)
        assert math.isclose(m.lhs, m.rhs, rel_tol=1e-14)


def test_configuration_ratio_invariances():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((4, 3))
    Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    base = K.configuration_ratio(x)
    assert math.isclose(K.configuration_ratio(3.7 * x), base, rel_tol=1e-12)
    assert math.isclose(K.configuration_ratio(x @ Q.T), base, rel_tol=1e-12)
    assert math.isclose(K.configuration_ratio(x[::-1]), base, rel_tol=1e-12)


def test_alpha_two_is_one_half():
    est = K.estimate_alpha_N(2, restarts=4, seed=1)
    assert abs(est.value - 0.5) < 1e-3
    assert est.value >= 0.5 - 1e-12


def test_alpha_n_estimate_is_seed_reproducible():
    a = K.estimate_alpha_N(3, restarts=3, seed=7)
    b = K.estimate_alpha_N(3, restarts=3, seed=7)
    assert a.value == b.value
    assert a.configuration.shape == (3, 3)


def test_weight_params_validate():
    with pytest.raises(ValueError):
        WeightParams(0.0)


@pytest.mark.parametrize("r", [1e-8, 1e-3, 0.05, 0.0999, 0.1, 0.3, 5.0])
def test_g_matches_high_precision_reference(r):
    mpmath = pytest.importorskip("mpmath")
    with mpmath.workdps(50):
        ref = float(mpmath.mpf(r) - mpmath.atan(mpmath.mpf(r)))
    assert abs(K.g(r) - ref) <= 1e-13 * ref
