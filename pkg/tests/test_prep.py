import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from lowmach.eos import PhysParams
from lowmach.fields import Grid
from lowmach.isolver import prepare_w0
from lowmach.prep import (
    bump_profile,
    entropy_bump,
    general_data,
    orszag_tang_like,
    rest_state,
    well_prepared,
)


def test_zero_amplitude_is_rest(grid32):
    state = general_data(3, 0.0, 4, grid32)
    for name in state.FIELDS:
        assert not np.any(getattr(state, name))


def test_same_seed_same_state(grid32):
    a, b = general_data(11, 0.7, 4, grid32), general_data(11, 0.7, 4, grid32)
    c = general_data(12, 0.7, 4, grid32)
    for name in a.FIELDS:
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert not np.array_equal(a.q, c.q)


def test_normalized_general_data(grid64):
    state = general_data(7, 0.5, 4, grid64)
    assert np.max(np.abs(grid64.div(state.H))) <= 1e-12
    for name in state.FIELDS:
        assert grid64.sobolev_norm(getattr(state, name), 4) <= 0.5 * (1 + 1e-12)
        assert np.all(np.isfinite(getattr(state, name)))
    # the constant mode is left out so q and S have zero mean
    assert abs(state.q.mean()) < 1e-15


def test_norms_scale_linearly(grid32):
    a = general_data(5, 0.3, 4, grid32)
    b = general_data(5, 0.9, 4, grid32)
    for name in a.FIELDS:
        ratio = grid32.sobolev_norm(getattr(b, name), 4) / grid32.sobolev_norm(getattr(a, name), 4)
        assert abs(ratio - 3) <= 1e-10


def test_mode_limit(grid32):
    with pytest.raises(ValueError):
        general_data(0, 1.0, 9, grid32)


def test_well_prepared_limits(grid32):
    base = general_data(2, 1.0, 4, grid32)
    full = well_prepared(base, 0.0)
    assert not np.any(full.q)
    assert np.max(np.abs(grid32.div(full.u))) < 1e-12
    a, b = well_prepared(base, 0.2), well_prepared(base, 0.1)
    assert grid32.l2(b.q) == pytest.approx(grid32.l2(a.q) / 2, rel=1e-14)
    assert grid32.l2(grid32.div(b.u)) == pytest.approx(grid32.l2(grid32.div(a.u)) / 2, rel=1e-12)
    assert np.array_equal(a.S, base.S) and a.S is not base.S


def test_prepared_w0_is_projected_base_velocity(grid64):
    base = general_data(4, 1.0, 4, grid64)
    base.S[...] = 0.3
    prepared = well_prepared(base, 0.1)
    w0 = prepare_w0(grid64, prepared.u, prepared.S, PhysParams())
    assert np.max(np.abs(w0 - grid64.leray_project(base.u))) <= 1e-10


def test_bump_profile_values():
    assert bump_profile(0.0) == 1.0
    assert bump_profile(np.array([1.0, 1.5]))[0] == 0.0
    assert np.all(bump_profile(np.linspace(0, 0.99, 50)) > 0)


def test_zero_height_bump_is_constant(grid64):
    S = entropy_bump((1.0, 2.0), 0.5, 0.0, grid64, background=0.4)
    assert np.all(S == 0.4)


def test_bump_mass_by_quadrature():
    grid = Grid(2, 256)
    width, height = 0.4, 0.3
    S = entropy_bump((np.pi, np.pi), width, height, grid)
    # mass of the radial profile in the plane, radius measured in units of 2*width
    unit_mass = 2 * np.pi * quad(lambda r: bump_profile(r) * r, 0, 1)[0]
    expected = height * unit_mass * (2 * width) ** 2
    assert grid.integrate(S) == pytest.approx(expected, rel=1e-6)


@settings(max_examples=20, deadline=None)
@given(cx=st.floats(0, 2 * np.pi), cy=st.floats(0, 2 * np.pi), width=st.floats(0.2, 1.4))
def test_bump_support_and_slope(cx, cy, width):
    grid = Grid(2, 64)
    height = 0.5
    S = entropy_bump((cx, cy), width, height, grid, background=-0.1)
    X, Y = grid.x
    dx = (X - cx + np.pi) % (2 * np.pi) - np.pi
    dy = (Y - cy + np.pi) % (2 * np.pi) - np.pi
    outside = np.hypot(dx, dy) >= 2 * width
    assert np.all(S[outside] == -0.1)
    slope = np.max(np.abs(np.gradient(S, grid.dx, axis=0)))
    assert slope <= 4 * height / width


def test_bump_width_guard(grid32):
    with pytest.raises(ValueError):
        entropy_bump((0, 0), 2.0, 1.0, grid32)


def test_orszag_tang_and_rest_states(grid32):
    ot = orszag_tang_like(grid32)
    X, Y = grid32.x
    assert np.array_equal(ot.H[1], np.sin(2 * X))
    assert np.max(np.abs(grid32.div(ot.H))) < 1e-13
    with pytest.raises(ValueError):
        orszag_tang_like(Grid(3, 8))
    rest = rest_state(grid32, S=0.25)
    assert np.all(rest.S == 0.25) and not np.any(rest.u)
