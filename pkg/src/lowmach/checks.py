"""Self-check suite behind ``lowmach check``."""

import time
from dataclasses import dataclass

import numpy as np

from . import csolver
from .diagnostics import singular_iterate, weighted_energy
from .eos import PhysParams, coeff_a, coeff_r, conservative_energy
from .fields import Grid, identity_suite
from .isolver import EllipticProblem, prepare_w0, solve_elliptic
from .prep import general_data, orszag_tang_like


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _random_set(grid, rng, modes):
    def field():
        keep = np.ones(grid.spectral_shape, dtype=bool)
        for m in grid.modes:
            keep &= np.abs(m) <= modes
        coeffs = rng.standard_normal(grid.spectral_shape) + 1j * rng.standard_normal(grid.spectral_shape)
        return grid.ifft(np.where(keep, coeffs, 0.0))

    vec = lambda: np.stack([field() for _ in range(grid.dim)])  # noqa: E731
    return vec(), vec(), vec(), field()


def check_identities(grid, sets=5, seed=1):
    rng = np.random.Generator(np.random.Philox(seed))
    worst = 0.0
    for _ in range(sets):
        for row in identity_suite(grid, *_random_set(grid, rng, grid.n // 4)):
            worst = max(worst, row["residual"] / (1 + row["scale"]))
    return worst <= 1e-10, f"worst scaled residual {worst:.2e}"


def check_projection(grid):
    rng = np.random.default_rng(2)
    u = _random_set(grid, rng, grid.n // 4)[0]
    Pu = grid.leray_project(u)
    idem = np.max(np.abs(grid.leray_project(Pu) - Pu))
    div = np.max(np.abs(grid.div(Pu)))
    orth = abs(grid.inner(Pu, u - Pu)) / grid.inner(u, u)
    ok = idem <= 1e-12 * np.max(np.abs(u)) and div <= 1e-10 and orth <= 1e-10
    return ok, f"idempotence {idem:.1e}, div {div:.1e}, orthogonality {orth:.1e}"


def check_elliptic(grid):
    X = grid.x
    exact = np.sin(X[0]) * np.cos(X[1])
    coef = 1 + 0.3 * np.cos(X[0])
    res = solve_elliptic(EllipticProblem(grid, coef, grid.div(coef * grid.grad(exact))))
    err = grid.l2(res.phi - exact) / grid.l2(exact)
    return err <= 1e-9, f"relative error {err:.1e} after {res.iterations} iterations"


def check_dispersion(grid, amplitude=1e-9):
    """A small acoustic plane wave cos(kx - omega t) solves the linearized system."""
    params = PhysParams(epsilon=0.25, mu=1e-12)
    a = float(coeff_a(0.0, 0.0, params))
    r = float(coeff_r(0.0, 0.0, params))
    k = 2.0
    omega = k / (params.epsilon * np.sqrt(a * r))
    x = grid.x[0]
    speed = np.sqrt(a / r)
    state = csolver.FlowState(
        grid=grid,
        S=np.zeros(grid.shape),
        q=amplitude * np.cos(k * x),
        u=np.zeros((grid.dim,) + grid.shape),
        H=np.zeros((grid.dim,) + grid.shape),
    )
    state.u[0] = amplitude * speed * np.cos(k * x)
    tangent = csolver.rhs(state, params)
    exact = amplitude * omega * np.sin(k * x)
    res = max(np.max(np.abs(tangent.q - exact)), np.max(np.abs(tangent.u[0] - speed * exact)))
    res /= amplitude * omega
    return res <= 1e-8, f"relative plane-wave residual {res:.1e}"


def check_w0(grid):
    X = grid.x
    S0 = 0.3 * np.cos(X[0])
    v0 = np.stack([np.sin(X[1]), np.sin(X[0])] + [np.zeros(grid.shape)] * (grid.dim - 2))
    v0[0] += 0.5 * np.cos(X[0])
    params = PhysParams()
    w0 = prepare_w0(grid, v0, S0, params)
    r0 = coeff_r(S0, 0.0, params)
    div = np.max(np.abs(grid.div(w0)))
    curl = np.max(np.abs(grid.curl(r0 * w0) - grid.curl(r0 * v0)))
    return max(div, curl) <= 1e-8, f"div {div:.1e}, weighted curl {curl:.1e}"


def check_cancellation(grid):
    """The 1/eps part of the tangent does not change the weighted energy."""
    params = PhysParams(epsilon=1 / 16, mu=0.05)
    state = general_data(3, 1.0, 4, grid)
    state.S[...] = 0.0
    a = coeff_a(state.S, 0.0, params)
    r = coeff_r(state.S, 0.0, params)
    iq, iu = singular_iterate(grid, state.q, state.u, a, r, 1)
    rate = -2 * (grid.inner(a * iq, state.q) + grid.inner(r * iu, state.u)) / params.epsilon
    scale = weighted_energy(state, params) / params.epsilon
    return abs(rate) <= 1e-10 * scale, f"singular contribution {abs(rate) / scale:.1e} (relative)"


def check_conservation(grid, T=0.1):
    if grid.dim != 2:
        state = general_data(5, 2.0, 2, grid)
    else:
        state = orszag_tang_like(grid)
    params = PhysParams(epsilon=0.25, mu=0.05)
    E0 = conservative_energy(state, params, grid)
    final = csolver.run(state, params, T).final
    drift = abs(conservative_energy(final, params, grid) - E0) / E0
    div = np.max(np.abs(grid.div(final.H)))
    return drift <= 1e-7 and div <= 1e-10, f"energy drift {drift:.1e}, div H {div:.1e}"


def run_checks(quick=False):
    grid = Grid(2, 32 if quick else 64)
    small = Grid(3, 16)
    checks = [
        ("identities", lambda: check_identities(grid, 2 if quick else 5)),
        ("projection", lambda: check_projection(grid)),
        ("elliptic", lambda: check_elliptic(grid)),
        ("dispersion", lambda: check_dispersion(grid)),
        ("w0", lambda: check_w0(grid)),
        ("cancellation", lambda: check_cancellation(grid)),
        ("conservation", lambda: check_conservation(grid, 0.05 if quick else 0.1)),
        ("identities-3d", lambda: check_identities(small, 1)),
        ("conservation-3d", lambda: check_conservation(small, 0.02)),
    ]
    results = []
    for name, fn in checks:
        start = time.perf_counter()
        try:
            passed, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(passed), detail, time.perf_counter() - start))
    return results
