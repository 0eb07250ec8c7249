"""Incompressible non-isentropic MHD limit with a variable-density projection.

The density of the limit flow is rho = R(S, p_bar), frozen along particle
paths.  The momentum tangent is obtained by projecting the forcing F in the
1/rho-weighted metric: v' = (F - grad pi)/rho with div v' = 0.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .csolver import StepReport, integrate
from .eos import EosParams, PhysParams, Variant, coeff_r
from .errors import ConvergenceError
from .fields import Grid, advect, induction_rhs, lorentz_force


@dataclass
class LimitState:
    grid: Grid
    S: np.ndarray
    v: np.ndarray
    H: np.ndarray
    t: float = 0.0

    FIELDS = ("S", "v", "H")

    def copy(self):
        return replace(self, **{name: getattr(self, name).copy() for name in self.FIELDS})


@dataclass(frozen=True)
class LimitParams:
    """``mu`` is the fluid viscosity, ``nu`` the magnetic diffusivity."""

    mu: float = 0.05
    nu: float = 0.0
    eos: EosParams = field(default_factory=EosParams)
    elliptic_tol: float = 1e-12
    elliptic_max_iter: int = 500

    def __post_init__(self):
        if self.mu < 0 or self.nu < 0:
            raise ValueError("viscosities must be non-negative")

    @classmethod
    def from_phys(cls, params: PhysParams, **kw):
        """Limit of a compressible parameter set: ideal or resistive magnetic field."""
        if params.variant is Variant.ZERO_MAGNETIC_DIFFUSIVITY:
            return cls(mu=params.mu, nu=0.0, eos=params.eos, **kw)
        return cls(mu=0.0, nu=params.nu, eos=params.eos, **kw)

    @property
    def resistive(self):
        return self.nu > 0


@dataclass
class EllipticProblem:
    """-div(coefficient grad phi) = -rhs on the periodic box."""

    grid: Grid
    coefficient: np.ndarray
    rhs: np.ndarray
    tolerance: float = 1e-10
    max_iterations: int = 500

    def __post_init__(self):
        if not np.min(self.coefficient) > 0:
            raise ValueError("elliptic coefficient must be strictly positive")
        scale = max(1.0, float(np.max(np.abs(self.rhs))))
        if abs(float(np.mean(self.rhs))) > 1e-12 * scale:
            raise ValueError("elliptic right-hand side must have zero mean")


@dataclass
class EllipticResult:
    phi: np.ndarray
    iterations: int
    residuals: list


def _remove_null(grid, f):
    fh = grid.fft(f)
    fh[grid.null_modes] = 0.0
    return grid.ifft(fh)


def solve_elliptic(problem, x0=None):
    """Preconditioned conjugate gradients; returns phi with iteration history."""
    g = problem.grid
    c = problem.coefficient
    inv = np.zeros(g.spectral_shape)
    live = ~g.null_modes
    inv[live] = 1.0 / (float(np.mean(c)) * g.k2[live])

    def apply(phi):
        return -g.div(c * g.grad(phi))

    def precondition(r):
        return g.ifft(inv * g.fft(r))

    b = _remove_null(g, -problem.rhs)
    b_norm = math.sqrt(g.inner(b, b))
    if b_norm == 0.0:
        return EllipticResult(np.zeros(g.shape), 0, [0.0])
    x = np.zeros(g.shape) if x0 is None else _remove_null(g, x0)
    r = b - apply(x)
    z = precondition(r)
    d = z.copy()
    rz = g.inner(r, z)
    residuals = [math.sqrt(g.inner(r, r)) / b_norm]
    for it in range(1, problem.max_iterations + 1):
        if residuals[-1] <= problem.tolerance:
            break
        Ad = apply(d)
        alpha = rz / g.inner(d, Ad)
        x = x + alpha * d
        r = r - alpha * Ad
        residuals.append(math.sqrt(g.inner(r, r)) / b_norm)
        if residuals[-1] <= problem.tolerance:
            # confirm with the true residual before accepting
            r = b - apply(x)
            residuals[-1] = math.sqrt(g.inner(r, r)) / b_norm
            if residuals[-1] <= problem.tolerance:
                return EllipticResult(_remove_null(g, x), it, residuals)
        z = precondition(r)
        rz_new = g.inner(r, z)
        d = z + (rz_new / rz) * d
        rz = rz_new
    else:
        raise ConvergenceError(
            f"conjugate gradients did not reach {problem.tolerance:g} in "
            f"{problem.max_iterations} iterations",
            residuals=residuals,
        )
    return EllipticResult(_remove_null(g, x), len(residuals) - 1, residuals)


def elliptic_solve(problem, x0=None):
    return solve_elliptic(problem, x0).phi


def project_variable_density(grid, F, rho, tol=1e-10, max_iter=500, x0=None):
    """Split F = rho w + grad pi with div w = 0; returns (w, pi)."""
    coef = 1.0 / rho
    problem = EllipticProblem(grid, coef, grid.div(coef * F), tol, max_iter)
    pi = elliptic_solve(problem, x0)
    return coef * (F - grid.grad(pi)), pi


def limit_density(S, params):
    """rho = R(S, p_bar) = p_bar r(S, 0)."""
    return params.eos.p_bar * coeff_r(S, 0.0, params.eos)


def rhs_limit(state, params, resistive=None):
    g = state.grid
    P = g.dealias
    if isinstance(params, PhysParams):
        params = LimitParams.from_phys(params)
    nu = params.nu if resistive is None or resistive else 0.0
    S, v, H = state.S, state.v, state.H
    rho = limit_density(S, params)
    F = P(-rho * advect(g, v, v) + lorentz_force(g, H))
    if params.mu:
        F = F + params.mu * g.laplacian(v)
    vdot, _ = project_variable_density(g, F, rho, params.elliptic_tol, params.elliptic_max_iter)
    Hdot = induction_rhs(g, v, H)
    if nu:
        Hdot = Hdot + nu * g.laplacian(H)
    return LimitState(
        grid=g,
        S=P(-advect(g, v, S)),
        v=P(vdot),
        H=g.leray_project(Hdot),
        t=1.0,
    )


def stable_dt_limit(state, params, cfl=0.4):
    """Advective (including Alfven) and diffusive bounds; no acoustic limit."""
    if not 0 < cfl <= 1:
        raise ValueError(f"cfl must lie in (0, 1], got {cfl}")
    g = state.grid
    rho_min = float(np.min(limit_density(state.S, params)))
    speed = float(np.max(np.sqrt(np.sum(state.v**2, axis=0))))
    speed += float(np.max(np.sqrt(np.sum(state.H**2, axis=0)))) / math.sqrt(rho_min)
    advective = g.dx / speed if speed > 0 else math.inf
    diffusivity = max(params.mu / rho_min, params.nu)
    diffusive = g.dx**2 / (2 * g.dim * diffusivity) if diffusivity > 0 else math.inf
    dt = cfl * min(advective, diffusive)
    if not math.isfinite(dt):
        dt = cfl * g.dx
    report = StepReport(
        dt_used=dt,
        cfl_acoustic=math.inf,
        cfl_advective=cfl * advective,
        cfl_diffusive=cfl * diffusive,
    )
    return dt, report


def run_limit(initial, params, T, observers=(), cfl=0.4, **kwargs):
    if isinstance(params, PhysParams):
        params = LimitParams.from_phys(params)
    meta = kwargs.pop("meta", None) or {}
    meta.setdefault("params", {"mu": params.mu, "nu": params.nu, "gamma": params.eos.gamma,
                               "p_bar": params.eos.p_bar})
    return integrate(
        initial,
        lambda s: rhs_limit(s, params),
        lambda s: stable_dt_limit(s, params, cfl),
        T,
        observers=observers,
        meta=meta,
        **kwargs,
    )


def prepare_w0(grid, v0, S0, params, tol=1e-12, max_iter=500):
    """Divergence-free w0 with curl(r0 w0) = curl(r0 v0), r0 = r(S0, 0).

    w0 = v0 - grad(phi)/r0 where div(grad(phi)/r0) = div v0.
    """
    eos = params.eos if hasattr(params, "eos") else params
    r0 = coeff_r(S0, 0.0, eos)
    coef = 1.0 / r0
    rhs = grid.div(v0)
    rhs = rhs - np.mean(rhs)
    phi = elliptic_solve(EllipticProblem(grid, coef, rhs, tol, max_iter))
    return v0 - coef * grid.grad(phi)


def limit_energy(state, params):
    """Kinetic plus magnetic energy (1/2) int(rho |v|^2 + |H|^2)."""
    g = state.grid
    rho = limit_density(state.S, params)
    return 0.5 * g.integrate(rho * np.sum(state.v**2, axis=0) + np.sum(state.H**2, axis=0))


__all__ = [
    "ConvergenceError",
    "EllipticProblem",
    "EllipticResult",
    "LimitParams",
    "LimitState",
    "elliptic_solve",
    "limit_density",
    "limit_energy",
    "prepare_w0",
    "project_variable_density",
    "rhs_limit",
    "run_limit",
    "solve_elliptic",
    "stable_dt_limit",
]
