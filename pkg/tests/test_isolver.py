import numpy as np
import pytest
from conftest import band_limited

from lowmach.eos import EosParams, PhysParams, Variant, coeff_r
from lowmach.errors import ConvergenceError
from lowmach.isolver import (
    EllipticProblem,
    LimitParams,
    LimitState,
    elliptic_solve,
    limit_density,
    limit_energy,
    prepare_w0,
    project_variable_density,
    rhs_limit,
    run_limit,
    solve_elliptic,
    stable_dt_limit,
)
from lowmach.fields import advect
from lowmach.prep import orszag_tang_like


def _limit_state(grid, S=None, v=None, H=None):
    zero = np.zeros((2,) + grid.shape)
    return LimitState(
        grid=grid,
        S=np.zeros(grid.shape) if S is None else S,
        v=zero.copy() if v is None else v,
        H=zero.copy() if H is None else H,
    )


def test_laplacian_eigenfunction(grid64):
    X, _ = grid64.x
    res = solve_elliptic(EllipticProblem(grid64, np.ones(grid64.shape), -np.sin(X), tolerance=1e-10))
    assert np.max(np.abs(res.phi - np.sin(X))) <= 1e-10
    assert res.residuals[-1] <= 1e-10


def test_manufactured_variable_coefficient(grid64):
    X, Y = grid64.x
    exact = np.sin(X) * np.cos(Y)
    coef = 1 + 0.3 * np.cos(X)
    tol = 1e-10
    phi = elliptic_solve(EllipticProblem(grid64, coef, grid64.div(coef * grid64.grad(exact)), tol))
    assert grid64.l2(phi - exact) / grid64.l2(exact) <= 10 * tol
    assert abs(phi.mean()) < 1e-14


def test_zero_rhs_gives_zero(grid64):
    res = solve_elliptic(EllipticProblem(grid64, np.ones(grid64.shape), np.zeros(grid64.shape)))
    assert res.iterations == 0 and not np.any(res.phi)


def test_problem_validation(grid32):
    X, _ = grid32.x
    with pytest.raises(ValueError):
        EllipticProblem(grid32, np.cos(X), np.sin(X))
    with pytest.raises(ValueError):
        EllipticProblem(grid32, np.ones(grid32.shape), np.ones(grid32.shape))


def test_iteration_cap_reports_history(grid64, rng):
    coef = 1 + 0.9 * np.cos(grid64.x[0]) * np.cos(grid64.x[1])
    rhs = band_limited(grid64, rng, 10)
    rhs -= rhs.mean()
    with pytest.raises(ConvergenceError) as info:
        solve_elliptic(EllipticProblem(grid64, coef, rhs, tolerance=1e-14, max_iterations=3))
    assert len(info.value.residuals) == 4
    assert info.value.residuals[-1] < info.value.residuals[0]


def test_warm_start_needs_fewer_iterations(grid64):
    X, Y = grid64.x
    coef = 1 + 0.5 * np.sin(X + Y)
    exact = np.cos(2 * X) * np.sin(Y)
    problem = EllipticProblem(grid64, coef, grid64.div(coef * grid64.grad(exact)), 1e-12)
    cold = solve_elliptic(problem)
    warm = solve_elliptic(problem, x0=exact + 1e-6 * np.sin(X))
    assert warm.iterations < cold.iterations


def test_constant_density_projection_is_leray(grid64, rng):
    F = band_limited(grid64, rng, 12, 2)
    w, _ = project_variable_density(grid64, F, np.ones(grid64.shape))
    assert np.max(np.abs(w - grid64.leray_project(F))) <= 1e-10


def test_gradient_forcing_is_absorbed(grid64, rng):
    psi = band_limited(grid64, rng, 6)
    psi -= psi.mean()
    rho = 1 + 0.4 * np.cos(grid64.x[0])
    w, pi = project_variable_density(grid64, grid64.grad(psi), rho, tol=1e-12)
    assert np.max(np.abs(w)) <= 1e-9
    assert np.max(np.abs(pi - psi)) <= 1e-9


def test_solenoidal_forcing_is_a_fixed_point(grid64, rng):
    F = grid64.leray_project(band_limited(grid64, rng, 8, 2))
    w, pi = project_variable_density(grid64, F, np.ones(grid64.shape))
    assert np.max(np.abs(pi)) <= 1e-10
    assert np.max(np.abs(w - F)) <= 1e-10


def test_variable_density_projection_properties(grid64, rng):
    F = band_limited(grid64, rng, 8, 2)
    rho = 1.5 + 0.5 * np.sin(grid64.x[1])
    w, pi = project_variable_density(grid64, F, rho, tol=1e-12)
    assert np.max(np.abs(grid64.div(w))) <= 1e-9
    assert np.max(np.abs(rho * w + grid64.grad(pi) - F)) <= 1e-12
    assert abs(pi.mean()) < 1e-14


def test_rest_state_limit_tangent_is_zero(grid32):
    tangent = rhs_limit(_limit_state(grid32, S=np.full(grid32.shape, 0.3)), LimitParams())
    for name in LimitState.FIELDS:
        assert np.max(np.abs(getattr(tangent, name))) < 1e-15


def test_constant_entropy_reproduces_navier_stokes(grid64, rng):
    v = grid64.leray_project(band_limited(grid64, rng, 8, 2))
    S = np.full(grid64.shape, 0.7)
    params = LimitParams(mu=0.05, eos=EosParams(gamma=1.4, p_bar=1.3))
    rho = float(limit_density(S, params)[0, 0])
    tangent = rhs_limit(_limit_state(grid64, S=S, v=v), params)
    P = grid64.dealias
    expected = grid64.leray_project(P(-advect(grid64, v, v)) + params.mu / rho * grid64.laplacian(v))
    assert np.max(np.abs(tangent.v - expected)) <= 1e-10


def test_constant_field_induction(grid64, rng):
    v = grid64.leray_project(band_limited(grid64, rng, 8, 2))
    c = np.array([0.4, -0.9])
    H = c[:, None, None] * np.ones((2,) + grid64.shape)
    tangent = rhs_limit(_limit_state(grid64, v=v, H=H), LimitParams())
    expected = sum(c[j] * np.stack([grid64.derivative(comp, j) for comp in v]) for j in range(2))
    assert np.max(np.abs(tangent.H - grid64.dealias(expected))) <= 1e-12


def test_limit_tangent_divergences(grid64, rng):
    S = 0.3 * np.cos(grid64.x[0])
    v = prepare_w0(grid64, band_limited(grid64, rng, 6, 2), S, LimitParams())
    H = grid64.leray_project(band_limited(grid64, rng, 6, 2))
    tangent = rhs_limit(_limit_state(grid64, S, v, H), LimitParams(mu=0.05, nu=0.02))
    assert np.max(np.abs(grid64.div(tangent.v))) <= 1e-8
    assert np.max(np.abs(grid64.div(tangent.H))) <= 1e-10


def test_resistive_flag_switches_magnetic_diffusion(grid32):
    _, Y = grid32.x
    H = np.stack([np.sin(Y), np.zeros(grid32.shape)])
    state = _limit_state(grid32, H=H)
    params = LimitParams(mu=0.0, nu=0.1)
    assert np.allclose(rhs_limit(state, params).H[0], -0.1 * np.sin(Y), atol=1e-13)
    assert np.max(np.abs(rhs_limit(state, params, resistive=False).H)) < 1e-13


def test_limit_params_from_compressible():
    viscous = LimitParams.from_phys(PhysParams(mu=0.07))
    assert (viscous.mu, viscous.nu, viscous.resistive) == (0.07, 0.0, False)
    resistive = LimitParams.from_phys(PhysParams(mu=0.0, nu=0.03, variant=Variant.INFINITE_REYNOLDS))
    assert (resistive.mu, resistive.nu, resistive.resistive) == (0.0, 0.03, True)
    with pytest.raises(ValueError):
        LimitParams(mu=-1.0)


def test_stable_dt_limit_has_no_acoustic_bound(grid32):
    state = _limit_state(grid32)
    dt, report = stable_dt_limit(state, LimitParams(mu=0.0), cfl=0.5)
    assert report.cfl_acoustic == np.inf and dt == pytest.approx(0.5 * grid32.dx)
    with pytest.raises(ValueError):
        stable_dt_limit(state, LimitParams(), cfl=2.0)


def test_zero_horizon_and_rest_state(grid32):
    state = _limit_state(grid32, S=np.full(grid32.shape, 0.2))
    assert run_limit(state, LimitParams(), 0.0).final is state
    final = run_limit(state, LimitParams(), 0.3).final
    assert final.t == pytest.approx(0.3)
    assert np.array_equal(final.S, state.S) and not np.any(final.v)


@pytest.mark.parametrize("params", [LimitParams(mu=0.05), LimitParams(mu=0.05, nu=0.05)])
def test_orszag_tang_limit_energy_decays(grid64, params):
    base = orszag_tang_like(grid64)
    initial = LimitState(grid64, base.S, base.u, base.H)
    energies, divs = [], []

    def watch(state, report):
        energies.append(limit_energy(state, params))
        divs.append(max(np.max(np.abs(grid64.div(state.v))), np.max(np.abs(grid64.div(state.H)))))

    run_limit(initial, params, 0.5, observers=[watch])
    assert all(b <= a * (1 + 1e-12) for a, b in zip(energies, energies[1:]))
    assert energies[-1] < energies[0]
    assert max(divs) <= 1e-8


def test_entropy_range_is_transported(grid64):
    X, Y = grid64.x
    S = 0.2 * np.cos(X) * np.sin(Y)
    v = np.stack([-np.sin(Y), np.sin(X)])
    params = LimitParams(mu=0.05)
    extremes = []
    run_limit(_limit_state(grid64, S=S, v=v), params, 0.25,
              observers=[lambda s, r: extremes.append(grid64.extrema(s.S))])
    lo = [e[0] for e in extremes]
    hi = [e[1] for e in extremes]
    assert max(abs(x - lo[0]) for x in lo) <= 1e-6 * 0.25 + 1e-6
    assert max(abs(x - hi[0]) for x in hi) <= 1e-6 * 0.25 + 1e-6


def test_w0_trivial_cases(grid64, rng):
    params = PhysParams()
    S0 = np.zeros(grid64.shape)
    v0 = grid64.leray_project(band_limited(grid64, rng, 6, 2))
    assert np.max(np.abs(prepare_w0(grid64, v0, S0, params) - v0)) <= 1e-10
    psi = band_limited(grid64, rng, 6)
    assert np.max(np.abs(prepare_w0(grid64, grid64.grad(psi), S0, params))) <= 1e-10


def test_w0_defining_conditions(grid64):
    X, Y = grid64.x
    S0 = 0.3 * np.cos(X)
    v0 = np.stack([np.sin(Y), np.sin(X)])
    params = PhysParams()
    w0 = prepare_w0(grid64, v0, S0, params)
    r0 = coeff_r(S0, 0.0, params)
    assert np.max(np.abs(grid64.div(w0))) <= 1e-8
    assert np.max(np.abs(grid64.curl(r0 * w0) - grid64.curl(r0 * v0))) <= 1e-8
    # gauge: the r0-weighted mean is kept
    assert np.allclose(grid64.integrate(r0 * w0), grid64.integrate(r0 * v0), atol=1e-10)
    assert np.max(np.abs(prepare_w0(grid64, w0, S0, params) - w0)) <= 1e-9
