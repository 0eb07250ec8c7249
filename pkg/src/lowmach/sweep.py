"""Mach-number sweeps: one limit run, one compressible run per epsilon."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .csolver import run
from .diagnostics import DiagnosticsMonitor, Sampler, SweepResult, compare_to_limit, hs_norm
from .isolver import LimitParams, LimitState, prepare_w0, run_limit
from .prep import well_prepared


@dataclass
class SweepEntry:
    epsilon: float
    error_u: float
    sup_q: float
    q_timeavg: float
    q_avg_l2: float
    sup_hs4: float
    steps: int


def limit_initial(base, params, kind):
    """Initial limit state: w0 built from the eps -> 0 limit of the compressible data."""
    u = well_prepared(base, 0.0).u if kind == "well_prepared" else base.u
    w0 = prepare_w0(base.grid, u, base.S, params)
    return LimitState(grid=base.grid, S=base.S.copy(), v=w0, H=base.H.copy(), t=base.t)


def compressible_initial(base, epsilon, kind):
    return well_prepared(base, epsilon) if kind == "well_prepared" else base.copy()


def _compressible_job(args):
    base, params, epsilon, kind, T, sample_dt, cfl, limit_samples = args
    p = params(epsilon) if callable(params) else params.replace(epsilon=epsilon)
    monitor = DiagnosticsMonitor(p, stride=10**9)
    sampler = Sampler(sample_dt)
    traj = run(compressible_initial(base, epsilon, kind), p, T, observers=[monitor, sampler],
               cfl=cfl, sample_dt=sample_dt)
    err_u, _, _ = compare_to_limit(sampler.samples, limit_samples)
    return SweepEntry(
        epsilon=epsilon,
        error_u=err_u,
        sup_q=monitor.sup_q,
        q_timeavg=monitor.q_timeavg,
        q_avg_l2=monitor.q_avg_l2,
        sup_hs4=monitor.sup_hs4,
        steps=traj.steps,
    )


def run_limit_samples(base, params, kind, T, sample_dt, cfl=0.4):
    limit_params = LimitParams.from_phys(params)
    sampler = Sampler(sample_dt)
    run_limit(limit_initial(base, params, kind), limit_params, T, observers=[sampler],
              cfl=cfl, sample_dt=sample_dt)
    return sampler.samples


def run_sweep(base, params, epsilons, T=0.5, kind="general", samples=25, cfl=0.4, workers=1,
              on_entry=None, schedule=None):
    """Compare compressible runs at each epsilon against one limit run.

    ``base`` is the epsilon-independent data; with kind="well_prepared" the
    acoustic part is scaled by epsilon for each run.  ``on_entry`` is called
    with each finished SweepEntry (in epsilon order).  ``schedule`` maps
    epsilon to the PhysParams of that run (viscosities may depend on
    epsilon); ``params`` then holds the limiting values used by the limit run.
    """
    epsilons = sorted(epsilons, reverse=True)
    sample_dt = T / samples
    limit_samples = run_limit_samples(base, params, kind, T, sample_dt, cfl)
    per_run = schedule or params
    jobs = [(base, per_run, eps, kind, T, sample_dt, cfl, limit_samples) for eps in epsilons]
    entries = []
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for entry in pool.map(_compressible_job, jobs):
                entries.append(entry)
                if on_entry:
                    on_entry(entry)
    else:
        for job in jobs:
            entry = _compressible_job(job)
            entries.append(entry)
            if on_entry:
                on_entry(entry)
    return result_from_entries(entries)


def result_from_entries(entries):
    return SweepResult(
        epsilons=[e.epsilon for e in entries],
        errors_u=[e.error_u for e in entries],
        errors_q=[e.sup_q for e in entries],
        q_timeavg=[e.q_timeavg for e in entries],
        q_avg_l2=[e.q_avg_l2 for e in entries],
        hs4_sup=[e.sup_hs4 for e in entries],
    ).finalize()


__all__ = ["SweepEntry", "run_sweep", "limit_initial", "compressible_initial", "hs_norm"]
