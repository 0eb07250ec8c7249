"""Observables of compressible and limit runs.

The monitor computes one ``DiagnosticsRecord`` per observation and keeps
running time integrals (trapezoid rule over the actual steps) of the
acoustic amplitude.
"""

import csv
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .csolver import FlowState, tangent_parts
from .eos import coeff_a, coeff_b, coeff_r, conservative_energy, density_R, pressure
from .fields import strain_and_stress

CSV_COLUMNS = (
    "t",
    "l2_q",
    "l2_u",
    "l2_H",
    "hs4",
    "E_weighted",
    "E_conservative",
    "divH",
    "minS",
    "maxS",
    "vort_r0",
    "wave_res",
    "q_timeavg",
)


@dataclass
class DiagnosticsRecord:
    t: float
    l2_q: float
    l2_u: float
    l2_H: float
    hs4: float
    E_weighted: float
    E_conservative: float
    divH: float
    minS: float
    maxS: float
    vort_r0: float
    wave_res: float
    q_timeavg: float

    def row(self):
        return ["%.17g" % getattr(self, name) for name in CSV_COLUMNS]


def weighted_energy(state, params):
    """<a q, q> + <r u, u> + ||H||^2."""
    g = state.grid
    eq = params.epsilon * state.q
    a = coeff_a(state.S, eq, params)
    r = coeff_r(state.S, eq, params)
    return g.inner(a * state.q, state.q) + g.inner(r * state.u, state.u) + g.inner(state.H, state.H)


def viscous_dissipation(state, params):
    """2 (mu ||grad u||^2 + (mu + lambda) ||div u||^2), the rate lost by the weighted energy."""
    g = state.grid
    grad_sq = sum(g.inner(g.grad(state.u[i]), g.grad(state.u[i])) for i in range(state.u.shape[0]))
    divu = g.div(state.u)
    return 2 * (params.mu * grad_sq + (params.mu + params.lam) * g.inner(divu, divu))


def hs_norm(state, s=4):
    """Sum of the H^s norms of the unknowns."""
    g = state.grid
    return sum(g.sobolev_norm(getattr(state, name), s) for name in state.FIELDS)


def vorticity_r0(state, params, s_index=3):
    """H^s norm of curl(r0 u), r0 = r(S, 0)."""
    if s_index > 3:
        raise ValueError("s_index must not exceed 3")
    g = state.grid
    r0 = coeff_r(state.S, 0.0, params)
    return g.sobolev_norm(g.curl(r0 * state.u), s_index)


def singular_iterate(grid, q, u, a, r, power):
    """Apply (q, u) -> (div u / a, grad q / r) ``power`` times."""
    if not 0 <= power <= 3:
        raise ValueError("power must lie in 0..3")
    for _ in range(power):
        q, u = grid.div(u) / a, grid.grad(q) / r
    return q, u


def apply_singular_operator(state, params, power):
    eq = params.epsilon * state.q
    a = coeff_a(state.S, eq, params)
    r = coeff_r(state.S, eq, params)
    return singular_iterate(state.grid, state.q, state.u, a, r, power)


def _check_history(history):
    if len(history) != 3:
        raise ValueError("wave_residual needs exactly three states")
    t0, t1, t2 = (s.t for s in history)
    h1, h2 = t1 - t0, t2 - t1
    if not (h1 > 0 and h2 > 0):
        raise ValueError("states must have strictly increasing times")
    if not 0.5 <= h2 / h1 <= 2.0:
        raise ValueError(f"time steps {h1:g} and {h2:g} are too unequal")
    return h1, h2


def wave_residual(history, params):
    """L2 norm of the residual of the second-order wave equation for q.

    eps^2 d/dt(a dq/dt) - div(grad q / r) = F, where F collects the Lorentz
    and viscous forcing, momentum transport and the transported part of q.
    Time derivatives are centred differences over the three states.
    """
    h1, h2 = _check_history(history)
    s0, s1, s2 = history
    g = s1.grid
    eps = params.epsilon
    P = g.dealias
    a0, a1, a2 = (coeff_a(s.S, eps * s.q, params) for s in history)
    mid = tangent_parts(s1, params)
    parts0, parts2 = tangent_parts(s0, params), tangent_parts(s2, params)

    a_plus, a_minus = 0.5 * (a1 + a2), 0.5 * (a0 + a1)
    d2 = (a_plus * (s2.q - s1.q) / h2 - a_minus * (s1.q - s0.q) / h1) * 2 / (h1 + h2)
    lhs = eps**2 * d2 + eps * g.div(P(mid["sing_u"]))

    def transported(parts, a):
        return a * P(parts["adv_q"] + parts["heat_q"])

    forcing = -eps * g.div(P(mid["force_u"])) - eps * g.div(P(mid["adv_u"]))
    forcing = forcing + eps**2 * (transported(parts2, a2) - transported(parts0, a0)) / (h1 + h2)
    return g.l2(lhs - forcing)


def convergence_order(errors, epsilons):
    """Least-squares slope of log(error) against log(epsilon)."""
    errors = np.asarray(errors, dtype=float)
    epsilons = np.asarray(epsilons, dtype=float)
    if errors.shape != epsilons.shape or errors.size < 3:
        raise ValueError("need at least three (error, epsilon) pairs")
    if np.any(errors <= 0) or np.any(epsilons <= 0):
        raise ValueError("errors and epsilons must be positive")
    slope, _ = np.polyfit(np.log(epsilons), np.log(errors), 1)
    return float(slope)


# -- observers ----------------------------------------------------------------


class Sampler:
    """Keeps copies of the state at multiples of ``every`` (and at the start)."""

    def __init__(self, every):
        self.every = every
        self.samples = []

    def __call__(self, state, report):
        k = state.t / self.every
        if abs(k - round(k)) < 1e-9:
            self.samples.append(state.copy())


class DiagnosticsMonitor:
    """Observer producing DiagnosticsRecords for a compressible run.

    A record is taken at the start, every ``stride`` steps, and at the end.
    ``sup_hs4`` and ``sup_q`` are maxima over every step.
    """

    def __init__(self, params, stride=1, csv_path=None):
        self.params = params
        self.stride = max(1, int(stride))
        self.csv_path = csv_path
        self.records = []
        self.steps = 0
        self.history = []
        self.q_integral = 0.0
        self.u_hs5_integral = 0.0
        self.q_field_integral = None
        self.t0 = None
        self.last_q = None
        self.sup_hs4 = 0.0
        self.sup_q = 0.0
        self.max_divH = 0.0
        self.min_S_drops = []
        self.last_wave = 0.0
        self._written = 0
        self.rows_before = 0
        self._resumed = False

    # running quantities --------------------------------------------------
    def _accumulate(self, state):
        g = state.grid
        l2q = g.l2(state.q)
        # one derivative above the bounded norm; at fixed resolution this is
        # dominated by the top retained modes, so it is recorded, not bounded
        u_hs5 = g.sobolev_norm(state.u, 5) ** 2
        min_S = g.extrema(state.S)[0]
        if self.t0 is None:
            self.t0 = state.t
            self.q_field_integral = np.zeros(g.shape)
        else:
            prev = self.history[-1]
            dt = state.t - prev.t
            self.q_integral += 0.5 * dt * (self.last_q + l2q)
            self.u_hs5_integral += 0.5 * dt * (self.last_u_hs5 + u_hs5)
            self.q_field_integral = self.q_field_integral + 0.5 * dt * (prev.q + state.q)
            self.min_S_drops.append(min_S - self.last_min_S)
        self.last_q = l2q
        self.last_u_hs5 = u_hs5
        self.last_min_S = min_S
        self.sup_q = max(self.sup_q, l2q)
        self.sup_hs4 = max(self.sup_hs4, hs_norm(state))
        self.max_divH = max(self.max_divH, float(np.max(np.abs(g.div(state.H)))))
        self.history = (self.history + [state])[-3:]

    @property
    def elapsed(self):
        return 0.0 if self.t0 is None or not self.history else self.history[-1].t - self.t0

    @property
    def q_timeavg(self):
        return self.q_integral / self.elapsed if self.elapsed > 0 else self.last_q or 0.0

    @property
    def q_avg_l2(self):
        """L2 norm of the time-averaged q field."""
        if self.elapsed <= 0:
            return self.last_q or 0.0
        return self.history[-1].grid.l2(self.q_field_integral / self.elapsed)

    def record(self, state):
        g = state.grid
        p = self.params
        # steps shortened to hit sample times can make the stencil too
        # lopsided; the previous value is carried over then
        wave = self.last_wave
        if len(self.history) == 3:
            try:
                wave = self.last_wave = wave_residual(self.history, p)
            except ValueError:
                pass
        S_min, S_max = g.extrema(state.S)
        rec = DiagnosticsRecord(
            t=state.t,
            l2_q=g.l2(state.q),
            l2_u=g.l2(state.u),
            l2_H=g.l2(state.H),
            hs4=hs_norm(state),
            E_weighted=weighted_energy(state, p),
            E_conservative=conservative_energy(state, p, g),
            divH=float(np.max(np.abs(g.div(state.H)))),
            minS=S_min,
            maxS=S_max,
            vort_r0=vorticity_r0(state, p),
            wave_res=wave,
            q_timeavg=self.q_timeavg,
        )
        self.records.append(rec)
        self._flush()
        return rec

    def __call__(self, state, report):
        if report is None and self._resumed:
            return  # the restored history already ends with this state
        self._accumulate(state)
        if report is not None:
            self.steps += 1
        if self.steps % self.stride == 0 and (report is not None or not self.records):
            self.record(state)

    def close(self, state):
        if not self.records or self.records[-1].t != state.t:
            self.record(state)

    def _flush(self):
        if self.csv_path is None:
            return
        mode = "w" if self._written == 0 and not self._resumed else "a"
        with open(self.csv_path, mode, newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            if mode == "w":
                writer.writerow(CSV_COLUMNS)
            for rec in self.records[self._written:]:
                writer.writerow(rec.row())
        self._written = len(self.records)

    # checkpoint support ----------------------------------------------------
    def state_dict(self):
        arrays = {"q_field_integral": self.q_field_integral}
        for i, s in enumerate(self.history):
            for name in s.FIELDS:
                arr = getattr(s, name)
                if arr.ndim == s.grid.dim:
                    arrays[f"hist{i}.{name}"] = arr
                else:
                    for c in range(arr.shape[0]):
                        arrays[f"hist{i}.{name}.{c}"] = arr[c]
        meta = {
            "steps": self.steps,
            "q_integral": self.q_integral,
            "u_hs5_integral": self.u_hs5_integral,
            "last_u_hs5": self.last_u_hs5,
            "t0": self.t0,
            "last_q": self.last_q,
            "sup_hs4": self.sup_hs4,
            "sup_q": self.sup_q,
            "max_divH": self.max_divH,
            "last_wave": self.last_wave,
            "last_min_S": self.last_min_S,
            "history_t": [s.t for s in self.history],
            "records": self.rows_before + len(self.records),
        }
        return arrays, meta

    def load_state_dict(self, grid, arrays, meta):
        self.steps = meta["steps"]
        self.q_integral = meta["q_integral"]
        self.u_hs5_integral = meta["u_hs5_integral"]
        self.last_u_hs5 = meta["last_u_hs5"]
        self.t0 = meta["t0"]
        self.last_q = meta["last_q"]
        self.sup_hs4 = meta["sup_hs4"]
        self.sup_q = meta["sup_q"]
        self.max_divH = meta["max_divH"]
        self.last_wave = meta["last_wave"]
        self.last_min_S = meta["last_min_S"]
        self.q_field_integral = arrays["q_field_integral"]
        self.history = []
        for i, t in enumerate(meta["history_t"]):
            values = {}
            for name in FlowState.FIELDS:
                key = f"hist{i}.{name}"
                if key in arrays:
                    values[name] = arrays[key]
                else:
                    values[name] = np.stack([arrays[f"{key}.{c}"] for c in range(grid.dim)])
            self.history.append(FlowState(grid=grid, t=t, **values))
        self._resumed = True
        self._written = 0
        self.rows_before = meta["records"]
        if self.csv_path is not None:
            # drop rows written after the checkpoint was taken
            with open(self.csv_path, newline="") as fh:
                kept = fh.readlines()[: 1 + self.rows_before]
            with open(self.csv_path, "w", newline="") as fh:
                fh.writelines(kept)
        self.records = []


def read_diagnostics_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected diagnostics header {header}")
        return [DiagnosticsRecord(*map(float, row)) for row in reader]


# -- comparison with the limit ---------------------------------------------


@dataclass
class LimitComparison:
    epsilon: float
    error_u: float
    sup_q: float
    q_timeavg: float
    q_avg_l2: float
    sup_hs4: float


def compare_to_limit(comp_samples, limit_samples):
    """Sup over common sample times of ||u - v|| and ||q||.

    Returns (sup_error_u, sup_q, mean of ||q|| over the samples).
    """
    if len(comp_samples) != len(limit_samples):
        raise ValueError("trajectories have different numbers of samples")
    err_u, sup_q, q_norms = 0.0, 0.0, []
    for cs, ls in zip(comp_samples, limit_samples):
        if cs.grid != ls.grid:
            raise ValueError("grid mismatch")
        if abs(cs.t - ls.t) > 1e-9 * max(1.0, abs(cs.t)):
            raise ValueError(f"sample times differ: {cs.t} vs {ls.t}")
        err_u = max(err_u, cs.grid.l2(cs.u - ls.v))
        qn = cs.grid.l2(cs.q)
        sup_q = max(sup_q, qn)
        q_norms.append(qn)
    return err_u, sup_q, float(np.mean(q_norms)) if q_norms else 0.0


@dataclass
class SweepResult:
    epsilons: list
    errors_u: list
    errors_q: list
    q_timeavg: list = field(default_factory=list)
    q_avg_l2: list = field(default_factory=list)
    hs4_sup: list = field(default_factory=list)
    orders: dict = field(default_factory=dict)
    uniform_bound_ratio: float = float("nan")

    def __post_init__(self):
        n = len(self.epsilons)
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, list) and value and len(value) != n:
                raise ValueError(f"{f.name} has {len(value)} entries, expected {n}")
        if any(b >= a for a, b in zip(self.epsilons, self.epsilons[1:])):
            raise ValueError("epsilons must be strictly decreasing")

    def finalize(self):
        if len(self.epsilons) >= 3:
            self.orders = {
                "u": convergence_order(self.errors_u, self.epsilons),
                "q": convergence_order(self.errors_q, self.epsilons),
                "q_timeavg": convergence_order(self.q_timeavg, self.epsilons),
            }
        else:
            self.orders = {}
        if self.hs4_sup:
            self.uniform_bound_ratio = max(self.hs4_sup) / min(self.hs4_sup)
        return self

    def to_dict(self):
        return asdict(self)


def write_sweep_csv(path, result: SweepResult):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epsilon", "sup_err_u", "sup_l2_q", "q_timeavg", "q_avg_l2", "hs4_sup"])
        for row in zip(
            result.epsilons,
            result.errors_u,
            result.errors_q,
            result.q_timeavg,
            result.q_avg_l2,
            result.hs4_sup,
        ):
            writer.writerow(["%.17g" % v for v in row])


def entropy_production_rate(state, params):
    """d/dt of the total entropy int rho S predicted by the dissipation."""
    g = state.grid
    eps = params.epsilon
    p = pressure(eps * state.q, params)
    rho = density_R(state.S, p, params)
    b = coeff_b(state.S, eps * state.q, params)
    if params.nu:
        J = g.curl(state.H)
        src = params.nu * (J**2 if J.ndim == g.dim else np.sum(J**2, axis=0))
    else:
        src = strain_and_stress(g, state.u, params.mu, params.lam).psi_colon_gradu
    return eps**2 * g.integrate(rho * src / b)


def total_entropy(state, params):
    g = state.grid
    p = pressure(params.epsilon * state.q, params)
    return g.integrate(density_R(state.S, p, params) * state.S)


__all__ = [
    "CSV_COLUMNS",
    "DiagnosticsMonitor",
    "DiagnosticsRecord",
    "LimitComparison",
    "Sampler",
    "SweepResult",
    "apply_singular_operator",
    "compare_to_limit",
    "convergence_order",
    "entropy_production_rate",
    "hs_norm",
    "read_diagnostics_csv",
    "singular_iterate",
    "total_entropy",
    "viscous_dissipation",
    "vorticity_r0",
    "wave_residual",
    "weighted_energy",
    "write_sweep_csv",
]
