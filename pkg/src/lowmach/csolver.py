"""Time integration of the scaled compressible non-isentropic MHD system.

Unknowns are the entropy S, the log-pressure fluctuation q (p = p_bar e^{eps q}),
the scaled velocity u and the scaled magnetic field H.  Two variants:

* zero magnetic diffusivity: viscous fluid, ideal induction;
* infinite Reynolds number: inviscid fluid, resistive induction.

The momentum forcing (Lorentz + viscous) is divided by the density
R = r p, which is what the change of variables produces from the
conservative system; this keeps the total energy an exact invariant.
"""

import math
import time
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .eos import (
    Variant,
    coeff_a,
    coeff_b,
    coeff_r,
    dlogR_dS,
    pressure,
)
from .errors import InstabilityError, NumericalError
from .fields import (
    Grid,
    advect,
    gather,
    induction_rhs,
    lorentz_force,
    read_snapshot,
    strain_and_stress,
    write_snapshot,
)


@dataclass
class FlowState:
    grid: Grid
    S: np.ndarray
    q: np.ndarray
    u: np.ndarray
    H: np.ndarray
    t: float = 0.0

    FIELDS = ("S", "q", "u", "H")

    def copy(self):
        return replace(self, **{name: getattr(self, name).copy() for name in self.FIELDS})


@dataclass
class StepReport:
    dt_used: float
    cfl_acoustic: float
    cfl_advective: float
    cfl_diffusive: float
    max_divH: float = 0.0
    min_S: float = 0.0


def _check_finite(tangent, what="right-hand side"):
    for name in tangent.FIELDS:
        if not np.all(np.isfinite(getattr(tangent, name))):
            raise NumericalError(f"non-finite value in {what}", field=name)
    return tangent


def _coefficients(state, params):
    eq = params.epsilon * state.q
    p = pressure(eq, params)
    a = coeff_a(state.S, eq, params)
    r = coeff_r(state.S, eq, params)
    b = coeff_b(state.S, eq, params)
    return a, r, b, p


def singular_tangent(state, params):
    """The 1/eps part of (q', u'): (-div u / (eps a), -grad q / (eps r))."""
    g = state.grid
    a, r, _, _ = _coefficients(state, params)
    eps = params.epsilon
    return -g.div(state.u) / (eps * a), -g.grad(state.q) / (eps * r)


def tangent_parts(state, params):
    """Undealiased pieces of the right-hand side, shared with the diagnostics.

    Returns a dict with ``adv_q``, ``sing_q``, ``adv_u``, ``sing_u``,
    ``force_u`` (forcing already divided by R), ``Hdot`` and ``Sdot``.
    """
    g = state.grid
    eps = params.epsilon
    S, q, u, H = state.S, state.q, state.u, state.H
    a, r, b, p = _coefficients(state, params)
    R = r * p
    sing_q, sing_u = singular_tangent(state, params)
    force = lorentz_force(g, H)
    Hdot = induction_rhs(g, u, H)
    if params.variant is Variant.ZERO_MAGNETIC_DIFFUSIVITY:
        strain = strain_and_stress(g, u, params.mu, params.lam)
        force = force + strain.div_psi
        source = strain.psi_colon_gradu
    else:
        J = g.curl(H)
        Hdot = Hdot + params.nu * g.laplacian(H)
        source = params.nu * (J**2 if J.ndim == g.dim else np.sum(J**2, axis=0))
    heating = g.dealias(source) / b
    # entropy production also changes the density at fixed pressure
    dilation = -eps * dlogR_dS(S, p, params) * heating / a
    return {
        "adv_q": -advect(g, u, q),
        "heat_q": dilation,
        "sing_q": sing_q,
        "adv_u": -advect(g, u, u),
        "sing_u": sing_u,
        "force_u": force / R,
        "Hdot": Hdot,
        "Sdot": -advect(g, u, S) + eps**2 * heating,
    }


def _rhs(state, params):
    _check_finite(state, "state")
    g = state.grid
    P = g.dealias
    parts = tangent_parts(state, params)
    tangent = FlowState(
        grid=g,
        S=P(parts["Sdot"]),
        q=P(parts["adv_q"] + parts["sing_q"] + parts["heat_q"]),
        u=P(parts["adv_u"] + parts["sing_u"] + parts["force_u"]),
        H=parts["Hdot"],
        t=1.0,
    )
    return _check_finite(tangent)


def rhs_zero_diffusivity(state, params):
    if params.variant is not Variant.ZERO_MAGNETIC_DIFFUSIVITY:
        raise ValueError("rhs_zero_diffusivity needs the zero_magnetic_diffusivity variant")
    return _rhs(state, params)


def rhs_infinite_reynolds(state, params):
    if params.variant is not Variant.INFINITE_REYNOLDS:
        raise ValueError("rhs_infinite_reynolds needs the infinite_reynolds variant")
    return _rhs(state, params)


def rhs(state, params):
    """Dispatch on ``params.variant``."""
    params.validate(state.grid.dim)
    return _rhs(state, params)


def stable_dt(state, params, cfl=0.4):
    """Largest explicit step allowed by the acoustic, advective and diffusive limits."""
    if not 0 < cfl <= 1:
        raise ValueError(f"cfl must lie in (0, 1], got {cfl}")
    g = state.grid
    dx = g.dx
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        a, r, _, p = _coefficients(state, params)
        R_min = float(np.min(r * p))
    # the thermodynamic coefficients over- or underflow long before the fields do
    if not (np.isfinite(R_min) and R_min > 0 and np.all(np.isfinite(a)) and np.all(np.isfinite(r))):
        raise NumericalError("density out of floating-point range", field="q", snapshot=state)
    acoustic = params.epsilon * dx * math.sqrt(float(np.min(a)) * float(np.min(r)))
    speed = float(np.max(np.sqrt(np.sum(state.u**2, axis=0))))
    speed += float(np.max(np.sqrt(np.sum(state.H**2, axis=0)))) / math.sqrt(R_min)
    advective = dx / speed if speed > 0 else math.inf
    diffusivity = max(params.mu, 2 * params.mu + params.lam) / R_min
    diffusivity = max(diffusivity, params.nu)
    diffusive = dx**2 / (2 * g.dim * diffusivity) if diffusivity > 0 else math.inf
    report = StepReport(
        dt_used=cfl * min(acoustic, advective, diffusive),
        cfl_acoustic=cfl * acoustic,
        cfl_advective=cfl * advective,
        cfl_diffusive=cfl * diffusive,
        max_divH=float(np.max(np.abs(g.div(state.H)))),
        min_S=float(np.min(state.S)),
    )
    return report.dt_used, report


# -- generic explicit stepping ----------------------------------------------


def _axpy(y, dt, tangents, weights):
    new = {}
    for name in y.FIELDS:
        incr = sum(w * getattr(k, name) for w, k in zip(weights, tangents))
        new[name] = getattr(y, name) + dt * incr
    return replace(y, t=y.t + dt, **new)


def _size(y):
    return sum(y.grid.l2(getattr(y, name)) for name in y.FIELDS)


def rk4_step(f, y, dt, growth_limit=10.0):
    """Classical four-stage Runge-Kutta step of y' = f(y)."""
    k1 = f(y)
    k2 = f(_axpy(y, dt / 2, [k1], [1.0]))
    k3 = f(_axpy(y, dt / 2, [k2], [1.0]))
    k4 = f(_axpy(y, dt, [k3], [1.0]))
    new = _axpy(y, dt / 6, [k1, k2, k3, k4], [1.0, 2.0, 2.0, 1.0])
    new.t = y.t + dt
    for name in new.FIELDS:
        if not np.all(np.isfinite(getattr(new, name))):
            raise NumericalError("non-finite state after step", field=name, snapshot=y)
    before, after = _size(y), _size(new)
    if after > growth_limit * max(before, 1e-6):
        raise InstabilityError(
            f"norm grew from {before:.3e} to {after:.3e} in one step at t={y.t:.6g}",
            snapshot=y,
        )
    return new


def step_rk4(state, params, dt):
    _, bounds = stable_dt(state, params)
    new = rk4_step(lambda s: rhs(s, params), state, dt)
    report = replace(
        bounds,
        dt_used=dt,
        max_divH=float(np.max(np.abs(new.grid.div(new.H)))),
        min_S=new.grid.extrema(new.S)[0],
    )
    return new, report


# -- runs and checkpoints ---------------------------------------------------


@dataclass
class Trajectory:
    final: object
    steps: int
    observers: list = field(default_factory=list)
    completed: bool = True
    checkpoint: str = None

    @property
    def records(self):
        for obs in self.observers:
            if hasattr(obs, "records"):
                return obs.records
        return []


def save_checkpoint(path, state, meta=None, extra=None):
    arrays = {name: getattr(state, name) for name in state.FIELDS}
    for key, arr in (extra or {}).items():
        arrays[key] = arr
    info = {"t": state.t, "kind": type(state).__name__, "fields": list(state.FIELDS)}
    info.update(meta or {})
    write_snapshot(path, state.grid, arrays, meta=info)


def load_checkpoint(path, state_cls=None):
    """Returns (state, meta, remaining scalar fields)."""
    grid, arrays, meta = read_snapshot(path)
    if state_cls is None:
        from .isolver import LimitState

        state_cls = {"FlowState": FlowState, "LimitState": LimitState}[meta["kind"]]
    values = {}
    for name in state_cls.FIELDS:
        if name in arrays:
            values[name] = arrays.pop(name)
        else:
            ncomp = sum(1 for key in arrays if key.startswith(name + "_") and len(key) == len(name) + 2)
            values[name] = gather(arrays, name, ncomp)
            for i in range(ncomp):
                arrays.pop(f"{name}_{'xyz'[i]}")
    return state_cls(grid=grid, t=meta["t"], **values), meta, arrays


def integrate(
    initial,
    f,
    dt_fn,
    T,
    observers=(),
    sample_dt=None,
    wall_budget=None,
    checkpoint_path=None,
    checkpoint_every=None,
    meta=None,
):
    """Advance ``initial`` to time T with steps from ``dt_fn(state)``.

    Observers are called as ``obs(state, report)`` once at the start
    (report None) and after every step; objects with a ``close`` method get
    ``close(state)`` at the end.  With ``sample_dt`` steps are shortened so
    that every multiple of it is hit exactly.
    """
    if T < 0:
        raise ValueError("T must be non-negative")
    observers = list(observers)
    state = initial
    if T <= initial.t:
        return Trajectory(final=state, steps=0, observers=observers)
    for obs in observers:
        obs(state, None)
    started = time.monotonic()
    steps = 0
    while state.t < T:
        dt, report = dt_fn(state)
        target = T
        if sample_dt:
            nxt = (math.floor(state.t / sample_dt + 1e-9) + 1) * sample_dt
            target = min(T, nxt)
        landing = state.t + dt >= target - 1e-12 * max(1.0, T)
        if landing:
            dt = target - state.t
        state = rk4_step(f, state, dt)
        if landing:
            state.t = target
        steps += 1
        report = replace(
            report,
            dt_used=dt,
            max_divH=float(np.max(np.abs(state.grid.div(state.H)))),
            min_S=state.grid.extrema(state.S)[0],
        )
        for obs in observers:
            obs(state, report)
        if checkpoint_path and checkpoint_every and steps % checkpoint_every == 0:
            _checkpoint(checkpoint_path, state, observers, meta, steps)
        if wall_budget is not None and time.monotonic() - started > wall_budget and state.t < T:
            path = checkpoint_path or "checkpoint.bin"
            _checkpoint(path, state, observers, meta, steps)
            return Trajectory(final=state, steps=steps, observers=observers, completed=False, checkpoint=path)
    for obs in observers:
        if hasattr(obs, "close"):
            obs.close(state)
    return Trajectory(final=state, steps=steps, observers=observers)


def _checkpoint(path, state, observers, meta, steps):
    info = dict(meta or {})
    info["step"] = steps
    extra = {}
    for i, obs in enumerate(observers):
        if hasattr(obs, "state_dict"):
            arrays, obs_meta = obs.state_dict()
            info[f"observer{i}"] = obs_meta
            extra.update({f"obs{i}.{key}": arr for key, arr in arrays.items()})
    save_checkpoint(path, state, info, extra)


def run(initial, params, T, observers=(), cfl=0.4, **kwargs):
    """Integrate the compressible system to time T with adaptive stable steps."""
    params.validate(initial.grid.dim)
    meta = kwargs.pop("meta", None) or {}
    meta.setdefault("params", params_to_dict(params))
    return integrate(
        initial,
        lambda s: rhs(s, params),
        lambda s: stable_dt(s, params, cfl),
        T,
        observers=observers,
        meta=meta,
        **kwargs,
    )


def params_to_dict(params):
    return {
        "epsilon": params.epsilon,
        "mu": params.mu,
        "lambda": params.lam,
        "nu": params.nu,
        "gamma": params.eos.gamma,
        "p_bar": params.eos.p_bar,
        "variant": params.variant.value,
    }


def state_fields(state):
    return {f.name for f in fields(state)}
