"""End-to-end Monte Carlo experiments: replications, aggregation, reports.

One replication simulates a volatility path, draws the price increments,
and, for every requested block size k, runs the full two-target estimation
and scores it against the model's true coefficient functions at the design
points.  Replications are independent tasks keyed by (base seed, purpose,
replication index), so reports do not depend on how work is scheduled.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from ._version import __version__ as _version
from .bases import collection, domain_from_data, max_dimension
from .lsq import empirical_error, evaluate
from .models import DiffusionModel, builtin_model
from .quadvar import quad_var
from .sampling import generate_observations, integrate_blocks, simulate_fine_path
from .selection import DEFAULT_KAPPA, PRACTICAL, full_estimation

# purpose tags of the counter-based seeding scheme
VOL_STREAM = 1
PRICE_STREAM = 2


class HarnessError(RuntimeError):
    pass


def derive_rng(base_seed: int, purpose: int, rep_index: int = 0) -> np.random.Generator:
    """Independent stream for (seed, purpose, replication); order-free and
    identical regardless of which worker draws it."""
    return np.random.default_rng(
        np.random.SeedSequence([int(base_seed), int(purpose), int(rep_index)]))


@dataclass
class ExperimentPlan:
    """Everything one Monte Carlo table needs, picklable for worker pools."""

    model_id: str
    model_params: dict
    horizon: float          # T
    fine_step: float        # simulation step
    obs_step: float         # observation step
    ks: tuple
    basis_family: str = "trig"
    replications: int = 1
    base_seed: int = 0
    penalty_mode: str = PRACTICAL
    kappa: float = DEFAULT_KAPPA
    sigma1_sq: float | None = None
    q_lo: float = 0.025
    q_hi: float = 0.975
    r_max: int = 4
    max_dim_override: int | None = None
    collect_curves: int = 0   # dump fitted curves for this many leading reps
    curve_points: int = 512

    def __post_init__(self):
        self.ks = tuple(int(k) for k in self.ks)
        if self.replications < 1:
            raise HarnessError("need at least one replication")
        if not (self.horizon > 0 and self.fine_step > 0 and self.obs_step > 0):
            raise HarnessError("horizon and steps must be positive")
        if abs(self.ratio * self.fine_step - self.obs_step) > 1e-9 * self.obs_step:
            raise HarnessError("observation step must be an integer multiple of the fine step")
        if abs(self.n_obs * self.obs_step - self.horizon) > 1e-9 * self.horizon:
            raise HarnessError("horizon must be an integer multiple of the observation step")

    @property
    def ratio(self) -> int:
        return round(self.obs_step / self.fine_step)

    @property
    def n_obs(self) -> int:
        return round(self.horizon / self.obs_step)

    @property
    def n_fine(self) -> int:
        return self.n_obs * self.ratio

    def build_model(self) -> DiffusionModel:
        return builtin_model(self.model_id, **self.model_params)


@dataclass
class CellResult:
    """One (replication, k) outcome."""

    k: int
    error_b: float = math.nan
    error_sig: float = math.nan
    dim_b: int = 0
    dim_sig: int = 0
    n_design: int = 0
    failed: bool = False
    message: str | None = None
    curves: dict | None = None


@dataclass
class ReplicationResult:
    rep_index: int
    cells: list
    failed: bool = False
    message: str | None = None


def _clip_to_state_space(domain, model):
    """Keep the estimation interval a compact subset of the model's state
    space; realized blocks are noisy and their quantiles can poke outside it
    for bounded-state models, where the true coefficients are undefined."""
    from .bases import EstimationDomain

    lo_b, hi_b = model.state_space
    lo = max(domain.lo, np.nextafter(lo_b, np.inf))
    hi = min(domain.hi, np.nextafter(hi_b, -np.inf))
    if (lo, hi) == (domain.lo, domain.hi):
        return domain
    return EstimationDomain(lo=lo, hi=hi)  # raises if the overlap degenerates


def run_replication(plan: ExperimentPlan, rep_index: int) -> ReplicationResult:
    """Simulate once, then estimate for every k; deterministic in (seed, index).

    Stage failures are captured per cell rather than silently dropped; a
    simulation failure marks every cell of the replication failed.
    """
    try:
        model = plan.build_model()
        rng_vol = derive_rng(plan.base_seed, VOL_STREAM, rep_index)
        rng_price = derive_rng(plan.base_seed, PRICE_STREAM, rep_index)
        path = simulate_fine_path(model, plan.fine_step, plan.n_fine, rng_vol)
        integ = integrate_blocks(path, plan.ratio)
        obs = generate_observations(integ, rng_price)
    except Exception as exc:  # recorded, not raised: the table reports failures
        cells = [CellResult(k=k, failed=True, message=str(exc)) for k in plan.ks]
        return ReplicationResult(rep_index=rep_index, cells=cells, failed=True,
                                 message=str(exc))

    cells = []
    for k in plan.ks:
        try:
            qv = quad_var(obs, k)
            domain = domain_from_data(qv, plan.q_lo, plan.q_hi)
            domain = _clip_to_state_space(domain, model)
            cap = plan.max_dim_override or max_dimension(qv.n_blocks, qv.block_span)
            coll = collection(plan.basis_family, cap, plan.r_max)
            est = full_estimation(qv, coll, domain, kappa=plan.kappa,
                                  mode=plan.penalty_mode, sigma1_sq=plan.sigma1_sq)
            err_b, n_used = empirical_error(est.drift_fit, model.drift, qv.values)
            err_s, _ = empirical_error(est.diff_sq_fit, model.diff_sq, qv.values)
            curves = None
            if rep_index < plan.collect_curves:
                grid = np.linspace(domain.lo, domain.hi, plan.curve_points)
                curves = {
                    "v": grid,
                    "drift": evaluate(est.drift_fit, grid),
                    "diff_sq": evaluate(est.diff_sq_fit, grid),
                    "true_drift": np.asarray(model.drift(grid), dtype=float),
                    "true_diff_sq": np.asarray(model.diff_sq(grid), dtype=float),
                }
            cells.append(CellResult(
                k=k, error_b=err_b, error_sig=err_s,
                dim_b=est.drift_fit.spec.dim, dim_sig=est.diff_sq_fit.spec.dim,
                n_design=n_used, curves=curves))
        except Exception as exc:
            cells.append(CellResult(k=k, failed=True, message=str(exc)))
    return ReplicationResult(rep_index=rep_index, cells=cells)


@dataclass
class McCell:
    """Aggregated errors for one (model, basis, k, target) table cell."""

    model: str
    basis: str
    k: int
    target: str
    errors: list
    dims: list
    failures: int

    @property
    def n_ok(self) -> int:
        return len(self.errors)

    @property
    def mean(self) -> float:
        return float(np.mean(self.errors)) if self.errors else math.nan

    @property
    def std(self) -> float | None:
        if len(self.errors) < 2:
            return None
        return float(np.std(self.errors, ddof=1))

    def dim_histogram(self) -> dict:
        hist = {}
        for d in self.dims:
            hist[d] = hist.get(d, 0) + 1
        return hist


@dataclass
class McReport:
    cells: list
    replications: int
    meta: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)   # (rep, k, message)
    curves: dict = field(default_factory=dict)     # (k, target) -> list per rep

    def cell(self, model: str, basis: str, k: int, target: str) -> McCell:
        for c in self.cells:
            if (c.model, c.basis, c.k, c.target) == (model, basis, k, target):
                return c
        raise KeyError((model, basis, k, target))

    def to_dict(self) -> dict:
        return {
            "meta": self.meta,
            "replications": self.replications,
            "cells": [
                {
                    "model": c.model, "basis": c.basis, "k": c.k, "target": c.target,
                    "mean": c.mean, "std": c.std, "n_ok": c.n_ok,
                    "failures": c.failures, "errors": c.errors,
                    "dim_histogram": {str(d): n for d, n in sorted(c.dim_histogram().items())},
                }
                for c in self.cells
            ],
            "failures": [
                {"rep": r, "k": k, "message": m} for (r, k, m) in self.failures
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def csv_rows(self) -> list:
        """Per-cell rows: model,basis,k,target,mean,std,R,failures."""
        rows = [("model", "basis", "k", "target", "mean", "std", "R", "failures")]
        for c in self.cells:
            std = "" if c.std is None else repr(c.std)
            rows.append((c.model, c.basis, str(c.k), c.target, repr(c.mean), std,
                         str(self.replications), str(c.failures)))
        return rows


FAILURE_ABORT_RATE = 0.05


def resolve_workers(requested: int | None = None) -> int:
    """Worker count: request capped by STOVOL_WORKERS, default the CPU count."""
    cap = os.environ.get("STOVOL_WORKERS")
    cap = int(cap) if cap else (os.cpu_count() or 1)
    if requested is None:
        return max(1, cap)
    return max(1, min(int(requested), cap))


def _rep_task(args):
    plan, rep_index = args
    return run_replication(plan, rep_index)


def run_table(plan: ExperimentPlan, workers: int | None = None) -> McReport:
    """Run all replications of a plan and aggregate the error table.

    Results are reduced in replication-index order, so the report is identical
    for any worker count.  A cell failure rate above 5% aborts with a
    diagnostic instead of reporting a misleading mean.
    """
    n_workers = resolve_workers(workers)
    tasks = [(plan, i) for i in range(plan.replications)]
    if n_workers > 1 and plan.replications > 1:
        import multiprocessing as mp

        with mp.get_context("spawn").Pool(min(n_workers, plan.replications)) as pool:
            results = pool.map(_rep_task, tasks)
    else:
        results = [_rep_task(t) for t in tasks]

    results.sort(key=lambda r: r.rep_index)
    by_k = {k: {"b": [], "sig": [], "dims_b": [], "dims_sig": [], "fail": 0}
            for k in plan.ks}
    failures = []
    curves = {}
    for res in results:
        for cell in res.cells:
            agg = by_k[cell.k]
            if cell.failed:
                agg["fail"] += 1
                failures.append((res.rep_index, cell.k, cell.message or "unknown"))
                continue
            agg["b"].append(cell.error_b)
            agg["sig"].append(cell.error_sig)
            agg["dims_b"].append(cell.dim_b)
            agg["dims_sig"].append(cell.dim_sig)
            if cell.curves is not None:
                key = (plan.model_id, plan.basis_family, cell.k)
                curves.setdefault(key, []).append(
                    {"rep": res.rep_index, **cell.curves})

    for k, agg in by_k.items():
        rate = agg["fail"] / plan.replications
        if rate > FAILURE_ABORT_RATE:
            msgs = sorted({m for (_, kk, m) in failures if kk == k})
            raise HarnessError(
                f"k={k}: {agg['fail']}/{plan.replications} replications failed "
                f"({rate:.0%} > {FAILURE_ABORT_RATE:.0%}); first causes: {msgs[:3]}")

    cells = []
    for k in plan.ks:
        agg = by_k[k]
        cells.append(McCell(model=plan.model_id, basis=plan.basis_family, k=k,
                            target="b", errors=agg["b"], dims=agg["dims_b"],
                            failures=agg["fail"]))
        cells.append(McCell(model=plan.model_id, basis=plan.basis_family, k=k,
                            target="sigma2", errors=agg["sig"], dims=agg["dims_sig"],
                            failures=agg["fail"]))
    meta = {
        "package": "stovol",
        "version": _version,
        "model": plan.model_id,
        "exact_sampler": plan.build_model().exact,
        "model_params": dict(sorted(plan.model_params.items())),
        "basis": plan.basis_family,
        "horizon": plan.horizon,
        "fine_step": plan.fine_step,
        "obs_step": plan.obs_step,
        "ks": list(plan.ks),
        "penalty_mode": plan.penalty_mode,
        "kappa": plan.kappa,
        "base_seed": plan.base_seed,
        "seed_scheme": "SeedSequence([base, purpose, rep]); purposes: vol=1, price=2",
    }
    return McReport(cells=cells, replications=plan.replications, meta=meta,
                    failures=failures, curves=curves)


def merge_reports(reports: list) -> McReport:
    """Combine single-model reports into one multi-model table."""
    if not reports:
        raise HarnessError("nothing to merge")
    cells, failures, curves = [], [], {}
    meta = {"package": "stovol", "version": _version, "merged": [r.meta for r in reports]}
    for r in reports:
        cells.extend(r.cells)
        failures.extend(r.failures)
        curves.update(r.curves)
    return McReport(cells=cells, replications=reports[0].replications, meta=meta,
                    failures=failures, curves=curves)
