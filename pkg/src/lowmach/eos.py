"""Ideal-gas closure in (S, p) variables and the scaled-system coefficients.

With rho = R(S, p) = p^(1/gamma) exp(-S/gamma), the Gibbs relation
theta dS = de + p d(1/rho) fixes the temperature up to the choice of heat
capacity.  We take c_v = 1, so e = theta = p / ((gamma - 1) rho).

All coefficient functions work pointwise on scalars or arrays.  ``eq``
denotes the product epsilon*q, so the pressure is p = p_bar*exp(eq).
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigurationError, DomainError


class Variant(str, Enum):
    ZERO_MAGNETIC_DIFFUSIVITY = "zero_magnetic_diffusivity"
    INFINITE_REYNOLDS = "infinite_reynolds"


@dataclass(frozen=True)
class EosParams:
    gamma: float = 1.4
    p_bar: float = 1.0

    def __post_init__(self):
        if not self.gamma > 1:
            raise ConfigurationError(f"gamma must exceed 1, got {self.gamma}")
        if not self.p_bar > 0:
            raise ConfigurationError(f"p_bar must be positive, got {self.p_bar}")


@dataclass(frozen=True)
class PhysParams:
    """Dimensionless parameters of the scaled system.

    ``mu`` and ``lam`` are the fluid viscosities, ``nu`` the magnetic
    diffusivity (only the infinite-Reynolds variant uses it).
    """

    epsilon: float = 0.25
    mu: float = 0.05
    lam: float = 0.0
    nu: float = 0.0
    eos: EosParams = field(default_factory=EosParams)
    variant: Variant = Variant.ZERO_MAGNETIC_DIFFUSIVITY

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not 0 < self.epsilon <= 1:
            raise ConfigurationError(
                f"epsilon must lie in (0, 1], got {self.epsilon}; the scaled system is singular at 0"
            )
        self.validate(2)

    def validate(self, dim):
        if self.variant is Variant.ZERO_MAGNETIC_DIFFUSIVITY:
            if self.nu != 0:
                raise ConfigurationError("zero_magnetic_diffusivity variant requires nu = 0")
            if not (self.mu > 0 and 2 * self.mu + dim * self.lam > 0):
                raise ConfigurationError(
                    f"zero_magnetic_diffusivity variant requires mu > 0 and 2mu + {dim}lambda > 0"
                )
        else:
            if self.mu != 0 or self.lam != 0:
                raise ConfigurationError("infinite_reynolds variant is inviscid: set mu = lambda = 0")
            if not self.nu > 0:
                raise ConfigurationError(
                    "infinite_reynolds variant requires magnetic diffusivity nu > 0"
                )
        return self

    def replace(self, **changes):
        from dataclasses import replace

        return replace(self, **changes)


def _eos(params):
    return params.eos if isinstance(params, PhysParams) else params


def _positive_pressure(p):
    p = np.asarray(p, dtype=float)
    if np.any(~(p > 0)):
        raise DomainError("pressure must be positive")
    return p


def pressure(eq, params):
    eos = _eos(params)
    with np.errstate(over="ignore"):
        p = eos.p_bar * np.exp(eq)
    if not np.all(np.isfinite(p)):
        raise OverflowError("p_bar*exp(eps*q) overflows")
    return p


def density_R(S, p, params):
    eos = _eos(params)
    p = _positive_pressure(p)
    return p ** (1.0 / eos.gamma) * np.exp(-np.asarray(S) / eos.gamma)


def dR_dp(S, p, params):
    eos = _eos(params)
    p = _positive_pressure(p)
    return density_R(S, p, eos) / (eos.gamma * p)


def temperature_Theta(S, p, params):
    eos = _eos(params)
    p = _positive_pressure(p)
    return p / ((eos.gamma - 1.0) * density_R(S, p, eos))


def internal_energy(S, p, params):
    return temperature_Theta(S, p, params)


def dlogR_dS(S, p, params):
    """Derivative of log R in S at fixed p; -1/gamma for the ideal closure."""
    eos = _eos(params)
    _positive_pressure(p)
    return np.full(np.shape(S), -1.0 / eos.gamma) if np.ndim(S) else -1.0 / eos.gamma


def coeff_a(S, eq, params):
    p = pressure(eq, params)
    return p / density_R(S, p, params) * dR_dp(S, p, params)


def coeff_r(S, eq, params):
    p = pressure(eq, params)
    return density_R(S, p, params) / p


def coeff_b(S, eq, params):
    """R*Theta, evaluated at p = p_bar*exp(eq) like a and r."""
    p = pressure(eq, params)
    return density_R(S, p, params) * temperature_Theta(S, p, params)


def r0_and_factor(S, q, params):
    """r0 = r(S, 0), f = 1 - r0/r(S, eps q) and g = f/eps.

    For the ideal closure r(S, eq)/r0 = exp((1/gamma - 1) eq), so f and g
    are evaluated with expm1 and g stays accurate as eps -> 0.
    """
    eos = _eos(params)
    eps = params.epsilon if isinstance(params, PhysParams) else 0.0
    S = np.asarray(S, dtype=float)
    q = np.asarray(q, dtype=float)
    r0 = coeff_r(S, 0.0, eos)
    rate = (1.0 / eos.gamma - 1.0) * q
    if eps > 0:
        f = -np.expm1(-eps * rate)
        g = f / eps
    else:
        f = np.zeros_like(rate)
        g = rate
    return r0, f, g


def conservative_energy(state, params, grid):
    """Integral of rho e + eps^2 rho |u|^2/2 + eps^2 |H|^2/2 over the box."""
    eps = params.epsilon
    p = pressure(eps * state.q, params)
    rho = density_R(state.S, p, params)
    density = rho * internal_energy(state.S, p, params)
    density = density + 0.5 * eps**2 * (rho * np.sum(state.u**2, axis=0) + np.sum(state.H**2, axis=0))
    return float(grid.integrate(density))
