import io

import numpy as np
import pytest
from conftest import band_limited
from hypothesis import given, settings
from hypothesis import strategies as st

from lowmach.fields import (
    Grid,
    export_csv,
    gather,
    identity_suite,
    induction_expanded,
    induction_rhs,
    lorentz_force,
    read_snapshot,
    strain_and_stress,
    write_snapshot,
)
from lowmach.errors import ConfigurationError


@pytest.mark.parametrize("n", [4, 12, 48, 100])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(ValueError):
        Grid(2, n)


def test_grid_rejects_bad_dimension_and_length():
    with pytest.raises(ValueError):
        Grid(1, 16)
    with pytest.raises(ValueError):
        Grid(2, 16, length=0.0)


def test_wavenumber_table_is_symmetric(grid64):
    m = grid64.modes[0].ravel()
    nyquist = grid64.n // 2
    for value in m:
        if abs(value) != nyquist:
            assert -value in m


def test_derivative_of_constant_is_zero(grid64):
    assert np.max(np.abs(grid64.derivative(np.full(grid64.shape, 3.7), 0))) < 1e-13


def test_derivative_of_sine(grid64):
    X, _ = grid64.x
    err = np.max(np.abs(grid64.derivative(np.sin(X), 0) - np.cos(X)))
    assert err <= 1e-12


def test_mixed_mode_derivative(grid64):
    X, Y = grid64.x
    out = grid64.derivative(np.sin(3 * X) * np.cos(2 * Y), 1)
    assert np.max(np.abs(out + 2 * np.sin(3 * X) * np.sin(2 * Y))) <= 1e-11


def test_derivative_axis_out_of_range(grid64):
    with pytest.raises(ValueError):
        grid64.derivative(np.zeros(grid64.shape), 2)


def test_operators_reject_foreign_grid(grid64, grid32):
    with pytest.raises(ValueError):
        grid64.div(np.zeros((2,) + grid32.shape))
    with pytest.raises(ValueError):
        grid64.grad(np.zeros(grid32.shape))


def test_vector_calculus_examples(grid64):
    X, Y = grid64.x
    assert np.max(np.abs(grid64.div(np.stack([np.sin(Y), np.sin(X)])))) < 1e-13
    curl = grid64.curl(np.stack([-np.sin(Y), np.sin(X)]))
    assert np.max(np.abs(curl - np.cos(X) - np.cos(Y))) < 1e-12
    assert np.max(np.abs(grid64.laplacian(np.sin(X)) + np.sin(X))) < 1e-12


def test_curl_grad_and_div_curl_vanish(grid64, rng):
    f = band_limited(grid64, rng, 16)
    scale = np.max(np.abs(grid64.grad(f)))
    assert np.max(np.abs(grid64.curl(grid64.grad(f)))) <= 1e-12 * scale
    g3 = Grid(3, 16)
    u = band_limited(g3, rng, 4, 3)
    assert np.max(np.abs(g3.div(g3.curl(u)))) <= 1e-12 * np.max(np.abs(g3.curl(u)))


def test_laplacian_is_div_grad(grid64, rng):
    f = band_limited(grid64, rng, 16)
    assert np.max(np.abs(grid64.laplacian(f) - grid64.div(grid64.grad(f)))) <= 1e-10


def test_identity_suite_random_trio(grid64, rng):
    a, b, c = (band_limited(grid64, rng, 16, 2) for _ in range(3))
    rows = identity_suite(grid64, a, b, c, band_limited(grid64, rng, 16))
    assert len(rows) == 6
    for row in rows:
        assert row["residual"] <= 1e-10 * (1 + row["scale"]), row


def test_identity_suite_three_dimensional(rng):
    g = Grid(3, 16)
    a, b, c = (band_limited(g, rng, 4, 3) for _ in range(3))
    for row in identity_suite(g, a, b, c, band_limited(g, rng, 4)):
        assert row["residual"] <= 1e-10 * (1 + row["scale"]), row


def test_dealias_kills_nyquist_mode(grid64):
    X, _ = grid64.x
    assert np.max(np.abs(grid64.dealias(np.cos(32 * X)))) < 1e-14


def test_dealias_keeps_low_modes_and_is_idempotent(grid64, rng):
    f = band_limited(grid64, rng, 20)
    assert np.allclose(grid64.dealias(f), f, atol=1e-13)
    g = band_limited(grid64, rng, 31)
    once = grid64.dealias(g)
    assert np.allclose(grid64.dealias(once), once, atol=1e-13)


def test_leray_matches_componentwise_formula(grid64):
    X, Y = grid64.x
    u = np.stack([np.sin(X), np.sin(Y)])
    # both modes are pure gradients, so the projection removes everything
    assert np.max(np.abs(grid64.leray_project(u))) <= 1e-12


def test_leray_properties(grid64, rng):
    u = band_limited(grid64, rng, 16, 2)
    Pu = grid64.leray_project(u)
    assert np.max(np.abs(grid64.div(Pu))) <= 1e-10
    assert np.allclose(grid64.leray_project(Pu), Pu, atol=1e-12)
    assert abs(grid64.inner(Pu, u - Pu)) <= 1e-10 * grid64.inner(u, u)


def test_l2_and_sobolev_norms_of_sine(grid64):
    X, _ = grid64.x
    f = np.sin(X)
    assert grid64.l2(f) == pytest.approx(np.sqrt(2 * np.pi**2), rel=1e-13)
    assert grid64.sobolev_norm(f, 0) == pytest.approx(grid64.l2(f), rel=1e-13)
    assert grid64.sobolev_norm(f, 1) == pytest.approx(np.sqrt(2) * grid64.l2(f), rel=1e-13)


def test_sobolev_norm_rejects_negative_index(grid64):
    with pytest.raises(ValueError):
        grid64.sobolev_norm(np.zeros(grid64.shape), -1)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), s=st.integers(0, 4))
def test_parseval_and_monotone_sobolev(seed, s):
    g = Grid(2, 16)
    f = band_limited(g, np.random.default_rng(seed), 7)
    assert g.sobolev_norm(f, 0) == pytest.approx(g.l2(f), rel=1e-12)
    assert g.sobolev_norm(f, s + 1) >= g.sobolev_norm(f, s) * (1 - 1e-14)


def test_strain_psi_matches_nodal_definition(grid64):
    X, Y = grid64.x
    mu, lam = 0.3, 0.1
    u = np.stack([np.sin(Y), np.zeros(grid64.shape)])
    data = strain_and_stress(grid64, u, mu, lam)
    assert np.max(np.abs(data.divu)) < 1e-13
    # D has only the off-diagonal entries cos(y)/2, so 2mu|D|^2 = mu cos^2 y
    assert np.max(np.abs(data.psi_colon_gradu - mu * np.cos(Y) ** 2)) < 1e-12


def test_strain_psi_is_nonnegative(grid64, rng):
    u = band_limited(grid64, rng, 8, 2)
    data = strain_and_stress(grid64, u, mu=0.1, lam=-0.09)
    assert data.psi_colon_gradu.min() >= -1e-12
    assert np.allclose(data.D[0, 1], data.D[1, 0])


def test_strain_rejects_bad_viscosity(grid64):
    with pytest.raises(ConfigurationError):
        strain_and_stress(grid64, np.zeros((2,) + grid64.shape), mu=0.0, lam=0.0)


def test_lorentz_force_example(grid64):
    X, Y = grid64.x
    H = np.stack([-np.sin(Y), np.sin(X)])
    out = lorentz_force(grid64, H)
    J = np.cos(X) + np.cos(Y)
    assert np.max(np.abs(out - J * np.stack([-np.sin(X), -np.sin(Y)]))) < 1e-12


def test_induction_constant_field(grid64, rng):
    c = np.array([0.7, -1.3])
    H = c[:, None, None] * np.ones((2,) + grid64.shape)
    u = band_limited(grid64, rng, 8, 2)
    du = [np.stack([grid64.derivative(comp, j) for comp in u]) for j in range(2)]
    expected = c[0] * du[0] + c[1] * du[1] - H * grid64.div(u)
    assert np.max(np.abs(induction_rhs(grid64, u, H) - grid64.dealias(expected))) < 1e-11


def test_induction_routes_agree(grid64, rng):
    u = band_limited(grid64, rng, 16, 2)
    H = grid64.leray_project(band_limited(grid64, rng, 16, 2))
    assert np.max(np.abs(induction_rhs(grid64, u, H) - induction_expanded(grid64, u, H))) <= 1e-10


def test_induction_rejects_divergent_field(grid64):
    X, _ = grid64.x
    H = np.stack([np.sin(X), np.zeros(grid64.shape)])
    with pytest.raises(ValueError):
        induction_rhs(grid64, np.zeros_like(H), H)


def test_interpolation_reproduces_band_limited_field(grid32, rng):
    f = band_limited(grid32, rng, 10)
    fine = grid32.interpolate(f, 4)
    assert np.allclose(fine[::4, ::4], f, atol=1e-13)
    X, Y = Grid(2, 128).x
    exact = np.sin(3 * X) * np.cos(Y)
    Xc, Yc = grid32.x
    assert np.allclose(grid32.interpolate(np.sin(3 * Xc) * np.cos(Yc)), exact, atol=1e-13)


def test_extrema_see_between_nodes():
    g = Grid(2, 16)
    X, _ = g.x
    f = np.cos(X - g.dx / 2)  # peak sits between two nodes
    lo, hi = g.extrema(f)
    assert f.max() < 1 - 1e-3
    assert hi == pytest.approx(1.0, abs=1e-12)
    assert lo == pytest.approx(-1.0, abs=1e-12)


def test_snapshot_round_trip(tmp_path, grid32, rng):
    S = band_limited(grid32, rng, 5)
    u = band_limited(grid32, rng, 5, 2)
    path = tmp_path / "s.bin"
    write_snapshot(path, grid32, {"S": S, "u": u}, {"t": 0.25})
    grid, fields, meta = read_snapshot(path)
    assert grid == grid32
    assert meta == {"t": 0.25}
    assert np.array_equal(fields["S"], S)
    assert np.array_equal(gather(fields, "u", 2), u)
    raw = path.read_bytes()
    assert raw[:4] == b"MHDF"


def test_snapshot_rejects_foreign_file(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"NOPE" + bytes(40))
    with pytest.raises(ValueError):
        read_snapshot(path)


def test_export_csv_rows(grid32):
    X, Y = grid32.x
    buf = io.StringIO()
    export_csv(buf, grid32, X + 10 * Y)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "x,y,value"
    assert len(lines) == 1 + grid32.n**2
    x, y, v = (float(s) for s in lines[5].split(","))
    assert v == pytest.approx(x + 10 * y)
