"""Initial data: random band-limited fields, well-prepared data, entropy bumps."""

import numpy as np

from .csolver import FlowState
from .fields import Grid

SOBOLEV_INDEX = 4


def _random_field(grid, rng, modes):
    keep = np.ones(grid.spectral_shape, dtype=bool)
    for m in grid.modes:
        keep &= np.abs(m) <= modes
    keep &= ~grid.null_modes
    coeffs = rng.standard_normal(grid.spectral_shape) + 1j * rng.standard_normal(grid.spectral_shape)
    return grid.ifft(np.where(keep, coeffs, 0.0))


def _normalized(grid, f, amplitude):
    norm = grid.sobolev_norm(f, SOBOLEV_INDEX)
    if amplitude == 0 or norm == 0:
        return np.zeros_like(f)
    return f * (amplitude / norm)


def general_data(seed, amplitude, modes, grid: Grid):
    """Random (S, q, u, H), each with H^4 norm equal to ``amplitude``.

    q is O(1) independently of the Mach number, so the data is ill-prepared.
    H is projected onto divergence-free fields before normalizing.
    """
    if modes > grid.n // 4:
        raise ValueError(f"modes must not exceed n/4 = {grid.n // 4}")
    rng = np.random.Generator(np.random.Philox(seed))
    d = grid.dim
    S = _normalized(grid, _random_field(grid, rng, modes), amplitude)
    q = _normalized(grid, _random_field(grid, rng, modes), amplitude)
    u = np.stack([_random_field(grid, rng, modes) for _ in range(d)])
    H = grid.leray_project(np.stack([_random_field(grid, rng, modes) for _ in range(d)]))
    return FlowState(
        grid=grid,
        S=S,
        q=q,
        u=_normalized(grid, u, amplitude),
        H=_normalized(grid, H, amplitude),
    )


def well_prepared(base: FlowState, epsilon):
    """Scale the acoustic part of ``base`` by epsilon: q -> eps q, grad part of u -> eps."""
    g = base.grid
    solenoidal = g.leray_project(base.u)
    return FlowState(
        grid=g,
        S=base.S.copy(),
        q=epsilon * base.q,
        u=solenoidal + epsilon * (base.u - solenoidal),
        H=base.H.copy(),
        t=base.t,
    )


def bump_profile(rho):
    """exp(1 - 1/(1 - rho^2)) on rho < 1, zero outside; equals 1 at rho = 0."""
    rho = np.asarray(rho, dtype=float)
    out = np.zeros_like(rho)
    inside = rho < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - rho[inside] ** 2))
    return out


def entropy_bump(center, width, height, grid: Grid, background=0.0):
    """Smooth compactly supported entropy excess of radius 2*width around ``center``.

    Distances use the nearest periodic image, so the bump wraps around the box.
    """
    if not 0 < width < grid.length / 4:
        raise ValueError(f"width must lie in (0, L/4), got {width}")
    dist2 = np.zeros(grid.shape)
    for xi, ci in zip(grid.x, center):
        delta = (xi - ci + grid.length / 2) % grid.length - grid.length / 2
        dist2 = dist2 + delta**2
    return background + height * bump_profile(np.sqrt(dist2) / (2 * width))


def orszag_tang_like(grid: Grid, S=None):
    """u = (-sin y, sin x), H = (-sin y, sin 2x), q = 0."""
    if grid.dim != 2:
        raise ValueError("orszag_tang_like data is two-dimensional")
    X, Y = grid.x
    return FlowState(
        grid=grid,
        S=np.zeros(grid.shape) if S is None else np.asarray(S, dtype=float),
        q=np.zeros(grid.shape),
        u=np.stack([-np.sin(Y), np.sin(X)]),
        H=np.stack([-np.sin(Y), np.sin(2 * X)]),
    )


def rest_state(grid: Grid, S=0.0):
    z = np.zeros(grid.shape)
    return FlowState(
        grid=grid,
        S=z + S,
        q=z.copy(),
        u=np.zeros((grid.dim,) + grid.shape),
        H=np.zeros((grid.dim,) + grid.shape),
    )
