from __future__ import annotations

import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ionbound._remap import ABSORB, FOLD, REFLECT, remap_rows

N = 24
EDGES = np.geomspace(0.5, 20.0, N + 1)
WIDTH = np.diff(EDGES)
rows_st = arrays(float, (3, N), elements=st.floats(0, 2))
shift_st = st.floats(-6.0, 6.0)


def mass(A):
    return A @ WIDTH


@given(rows_st, shift_st)
def test_fold_conserves_below_ceiling(A, s):
    out, lost = remap_rows(A, EDGES, np.full(3, s), np.arange(3), FOLD, FOLD, 10.0)
    assert np.allclose(mass(out), mass(A), rtol=1e-12, atol=1e-12)
    assert np.all(lost == 0)
    # at most two sheets overlap next to a wall
    assert out.min() >= 0 and out.max() <= 2 * A.max() + 1e-12


@given(rows_st, shift_st)
def test_translation_obeys_maximum_principle(A, s):
    out, lost = remap_rows(A, EDGES, np.full(3, s), np.arange(3), ABSORB, ABSORB, 10.0)
    assert out.min() >= 0 and out.max() <= A.max() + 1e-12


def test_ceiling_clips_folded_pile_up():
    A = np.full((1, N), 2.0)
    out, _ = remap_rows(A, EDGES, np.array([3.0]), np.arange(1), FOLD, FOLD, 2.0)
    assert out.max() == 2.0
    assert mass(out)[0] < mass(A)[0]


@given(rows_st, st.floats(0.0, 6.0))
def test_absorb_accounts_for_outflow(A, s):
    out, lost = remap_rows(A, EDGES, np.full(3, s), np.arange(3), ABSORB, ABSORB, 2.0)
    assert np.allclose(mass(out) + lost, mass(A), rtol=1e-12, atol=1e-12)
    assert np.all(lost >= -1e-14)


@given(arrays(float, (2, N), elements=st.floats(0, 2)), st.floats(0.0, 6.0))
def test_reflect_conserves_pair_mass(A, s):
    # row 0 moves outwards, row 1 is its mirror image moving inwards
    shifts = np.array([s, -s])
    partner = np.array([1, 0])
    out, lost = remap_rows(A, EDGES, shifts, partner, REFLECT, ABSORB, 2.0)
    assert np.isclose(mass(out).sum() + lost.sum(), mass(A).sum(), rtol=1e-12, atol=1e-12)
    assert lost[1] == 0


def test_zero_shift_is_identity():
    A = np.random.default_rng(0).random((4, N))
    out, _ = remap_rows(A, EDGES, np.zeros(4), np.arange(4), FOLD, FOLD, 2.0)
    assert np.allclose(out, A, rtol=1e-14, atol=1e-15)


def test_whole_cell_shift_on_uniform_grid_is_exact():
    edges = np.linspace(0.0, 1.0, 41)
    A = np.zeros((1, 40))
    A[0, 10:20] = np.random.default_rng(1).random(10)
    out, lost = remap_rows(A, edges, np.array([3 * 0.025]), np.arange(1), ABSORB, ABSORB, 2.0)
    assert np.allclose(out[0, 13:23], A[0, 10:20], atol=1e-14)
    assert lost[0] == 0


def test_ceiling_is_respected():
    A = np.full((1, N), 2.0)
    out, _ = remap_rows(A, EDGES, np.array([0.37]), np.arange(1), FOLD, FOLD, 2.0)
    assert out.max() <= 2.0


def test_constant_state_stays_constant_away_from_walls():
    A = np.full((1, N), 0.7)
    out, _ = remap_rows(A, EDGES, np.array([1.3]), np.arange(1), FOLD, FOLD, 2.0)
    inner = (EDGES[:-1] > EDGES[0] + 1.3) & (EDGES[1:] < EDGES[-1] - 1.3)
    assert np.allclose(out[0, inner], 0.7, rtol=1e-12)
