"""Pseudo-spectral solvers for low Mach number non-isentropic MHD on a periodic box."""

from .csolver import FlowState, StepReport, rhs, run, stable_dt, step_rk4
from .eos import EosParams, PhysParams, Variant
from .errors import (
    ConfigurationError,
    ConvergenceError,
    DomainError,
    InstabilityError,
    NumericalError,
)
from .fields import Grid
from .isolver import LimitParams, LimitState, prepare_w0, run_limit

__all__ = [
    "ConfigurationError",
    "ConvergenceError",
    "DomainError",
    "EosParams",
    "FlowState",
    "Grid",
    "InstabilityError",
    "LimitParams",
    "LimitState",
    "NumericalError",
    "PhysParams",
    "StepReport",
    "Variant",
    "prepare_w0",
    "rhs",
    "run",
    "run_limit",
    "stable_dt",
    "step_rk4",
]
