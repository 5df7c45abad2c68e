"""Penalized selection of the estimation space and penalty-constant calibration.

For each candidate space the criterion is the attained contrast plus a
dimension-increasing penalty.  The practical penalty is

    kappa * (s_sq / M) * (D + ln(D+1)^2.5)

with the additive log correction guarding against under-penalization; the
``theoretical`` mode exposes the bare forms kappa * s_sq * D / (M * Delta)
for the drift and kappa * s_sq * D / M for the squared diffusion, for
reference runs with a known volatility bound.

The constants are data-calibrated in two stages: a preliminary squared
diffusion estimate (penalty constant twice the largest minimized contrast)
yields fitted values whose high quantile, doubled and squared, gives the final
diffusion constant; the drift constant is the largest fitted squared-diffusion
value at the design points divided by the block span.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bases import BasisSpec
from .lsq import Fit, FitError, evaluate, fit, retained_mask
from .quadvar import DIFF_SQ, DRIFT, QuadVarSeries, RegressionSample, build_regression

CALIBRATION_QUANTILE = 0.995
DEFAULT_KAPPA = 2.0
PRACTICAL = "practical"
THEORETICAL = "theoretical"


class SelectionError(ValueError):
    pass


@dataclass(frozen=True)
class PenaltyParams:
    """Penalty configuration for one target.

    ``s_sq`` is the calibrated constant (drift: replaces sigma1^2/Delta,
    diffusion: replaces sigma1^4) and ``n_points`` the regression point count
    M that normalizes the penalty.
    """

    target: str
    s_sq: float
    n_points: int
    block_span: float
    kappa: float = DEFAULT_KAPPA
    mode: str = PRACTICAL

    def __post_init__(self):
        if self.n_points < 1:
            raise SelectionError(f"n_points must be >= 1, got {self.n_points}")
        if self.s_sq < 0:
            raise SelectionError(f"s_sq must be >= 0, got {self.s_sq}")
        if self.mode not in (PRACTICAL, THEORETICAL):
            raise SelectionError(f"unknown penalty mode {self.mode!r}")


def penalty(spec: BasisSpec, params: PenaltyParams) -> float:
    """Penalty of one space under ``params``; strictly increasing in dimension."""
    d = spec.dim
    if params.mode == PRACTICAL:
        return params.kappa * (params.s_sq / params.n_points) * (
            d + math.log(d + 1.0) ** 2.5)
    if params.target == DRIFT:
        return params.kappa * params.s_sq * d / (params.n_points * params.block_span)
    return params.kappa * params.s_sq * d / params.n_points


@dataclass
class SelectionRow:
    spec: BasisSpec
    contrast: float
    penalty: float
    criterion: float


@dataclass
class CalibrationRecord:
    """Trace of the two-stage constant calibration."""

    prelim_s2_sq: float
    quantile_value: float
    final_s2_sq: float
    s1_sq: float | None = None
    degenerate: bool = False


@dataclass
class SelectionOutcome:
    """Per-space criterion table and the chosen space.

    The table covers every feasible space of the collection (retained points
    >= dimension); infeasible specs are listed separately.
    """

    table: list[SelectionRow]
    chosen: BasisSpec
    chosen_fit: Fit
    infeasible: list[BasisSpec] = field(default_factory=list)
    calibration: CalibrationRecord | None = None

    @property
    def chosen_row(self) -> SelectionRow:
        for row in self.table:
            if row.spec == self.chosen:
                return row
        raise SelectionError("chosen spec missing from table")


def _fit_collection(sample: RegressionSample, collection) -> tuple[dict, list]:
    """Fit every feasible spec once; returns ({spec: Fit}, infeasible specs)."""
    n_retained = int(retained_mask(sample).sum())
    fits, infeasible = {}, []
    for spec in collection:
        if n_retained < spec.dim:
            infeasible.append(spec)
            continue
        if spec not in fits:
            fits[spec] = fit(sample, spec)
    if not fits:
        raise SelectionError(
            f"no feasible spec: {n_retained} retained points cover none of the collection")
    return fits, infeasible


def _select_from_fits(fits: dict, collection, params: PenaltyParams,
                      infeasible) -> SelectionOutcome:
    table = []
    best = None  # (criterion, dim, order index)
    for idx, spec in enumerate(c for c in collection if c in fits):
        f = fits[spec]
        pen = penalty(spec, params)
        crit = f.contrast + pen
        table.append(SelectionRow(spec=spec, contrast=f.contrast, penalty=pen,
                                  criterion=crit))
        key = (crit, spec.dim, idx)
        if best is None or key < best[0]:
            best = (key, spec)
    chosen = best[1]
    return SelectionOutcome(table=table, chosen=chosen, chosen_fit=fits[chosen],
                            infeasible=list(infeasible))


def select(sample: RegressionSample, collection, params: PenaltyParams) -> SelectionOutcome:
    """Fit every feasible space and return the criterion minimizer.

    Ties resolve toward the smallest dimension, then the earliest spec in
    collection order.
    """
    fits, infeasible = _fit_collection(sample, collection)
    return _select_from_fits(fits, collection, params, infeasible)


def _guard_s_sq(s_sq: float, responses: np.ndarray) -> tuple[float, bool]:
    # Vanishing contrasts would leave the selection unpenalized; anything at
    # or below roundoff scale relative to the responses counts as degenerate.
    # Substitute a strictly positive floor tied to the response magnitude and
    # flag the run.
    second_moment = float(np.mean(responses * responses))
    if s_sq > np.finfo(float).eps * second_moment:
        return s_sq, False
    floor = float(np.finfo(float).tiny * second_moment)
    return max(s_sq, floor), True


@dataclass
class DiffCalibration:
    prelim_fit: Fit
    s2_sq: float
    prelim_s2_sq: float
    quantile_value: float
    degenerate: bool


def calibrate_diff_constant(qv: QuadVarSeries, collection, domain,
                            kappa: float = DEFAULT_KAPPA) -> DiffCalibration:
    """Two-stage calibration of the squared-diffusion penalty constant.

    Stage 1 runs the selection with constant twice the largest minimized
    contrast over the collection, giving a preliminary estimator.  Stage 2
    doubles the 99.5% quantile of its fitted values at the design points
    inside the domain and squares the result.
    """
    sample = build_regression(qv, DIFF_SQ, domain)
    fits, infeasible = _fit_collection(sample, collection)
    prelim_raw = 2.0 * max(f.contrast for f in fits.values())
    prelim_s_sq, degenerate = _guard_s_sq(prelim_raw, sample.y)
    params = PenaltyParams(target=DIFF_SQ, s_sq=prelim_s_sq,
                           n_points=int(retained_mask(sample).sum()),
                           block_span=qv.block_span, kappa=kappa)
    prelim = _select_from_fits(fits, collection, params, infeasible)
    pts = qv.values[domain.contains(qv.values)]
    fitted = evaluate(prelim.chosen_fit, pts)
    quant = float(np.quantile(fitted, CALIBRATION_QUANTILE))
    s2 = 2.0 * quant
    return DiffCalibration(prelim_fit=prelim.chosen_fit, s2_sq=s2 * s2,
                           prelim_s2_sq=prelim_s_sq, quantile_value=quant,
                           degenerate=degenerate)


def calibrate_drift_constant(diff_fit: Fit, qv: QuadVarSeries,
                             block_span: float | None = None) -> float:
    """Drift penalty constant: max fitted squared diffusion over the design
    points inside the domain, divided by the block span."""
    span = qv.block_span if block_span is None else block_span
    pts = qv.values[diff_fit.domain.contains(qv.values)]
    if pts.size == 0:
        raise FitError("no design point inside the estimation domain")
    return float(np.max(evaluate(diff_fit, pts)) / span)


@dataclass
class FullEstimate:
    """Both targets estimated from one realized quadratic variation series."""

    drift: SelectionOutcome
    diff_sq: SelectionOutcome
    calibration: CalibrationRecord

    @property
    def drift_fit(self) -> Fit:
        return self.drift.chosen_fit

    @property
    def diff_sq_fit(self) -> Fit:
        return self.diff_sq.chosen_fit


def full_estimation(qv: QuadVarSeries, collection, domain,
                    kappa: float = DEFAULT_KAPPA, mode: str = PRACTICAL,
                    sigma1_sq: float | None = None) -> FullEstimate:
    """Calibrate constants and select both estimators.

    In ``theoretical`` mode the volatility bound ``sigma1_sq`` must be given;
    it enters the drift penalty directly and the diffusion penalty squared.
    """
    diff_sample = build_regression(qv, DIFF_SQ, domain)
    drift_sample = build_regression(qv, DRIFT, domain)
    n_points = int(retained_mask(diff_sample).sum())
    span = qv.block_span

    if mode == THEORETICAL:
        if sigma1_sq is None:
            raise SelectionError("theoretical mode needs the volatility bound sigma1_sq")
        record = CalibrationRecord(prelim_s2_sq=sigma1_sq ** 2, quantile_value=math.nan,
                                   final_s2_sq=sigma1_sq ** 2, s1_sq=sigma1_sq)
        diff_params = PenaltyParams(target=DIFF_SQ, s_sq=sigma1_sq ** 2,
                                    n_points=n_points, block_span=span,
                                    kappa=kappa, mode=THEORETICAL)
        drift_params = PenaltyParams(target=DRIFT, s_sq=sigma1_sq,
                                     n_points=n_points, block_span=span,
                                     kappa=kappa, mode=THEORETICAL)
        diff_outcome = select(diff_sample, collection, diff_params)
        drift_outcome = select(drift_sample, collection, drift_params)
        diff_outcome.calibration = record
        drift_outcome.calibration = record
        return FullEstimate(drift=drift_outcome, diff_sq=diff_outcome, calibration=record)

    cal = calibrate_diff_constant(qv, collection, domain, kappa=kappa)
    final_s2_sq, deg2 = _guard_s_sq(cal.s2_sq, diff_sample.y)
    diff_params = PenaltyParams(target=DIFF_SQ, s_sq=final_s2_sq, n_points=n_points,
                                block_span=span, kappa=kappa)
    diff_outcome = select(diff_sample, collection, diff_params)

    s1_raw = calibrate_drift_constant(diff_outcome.chosen_fit, qv)
    s1_sq, deg1 = _guard_s_sq(s1_raw, drift_sample.y)
    drift_params = PenaltyParams(target=DRIFT, s_sq=s1_sq, n_points=n_points,
                                 block_span=span, kappa=kappa)
    drift_outcome = select(drift_sample, collection, drift_params)

    record = CalibrationRecord(prelim_s2_sq=cal.prelim_s2_sq,
                               quantile_value=cal.quantile_value,
                               final_s2_sq=final_s2_sq, s1_sq=s1_sq,
                               degenerate=cal.degenerate or deg1 or deg2)
    diff_outcome.calibration = record
    drift_outcome.calibration = record
    return FullEstimate(drift=drift_outcome, diff_sq=diff_outcome, calibration=record)
