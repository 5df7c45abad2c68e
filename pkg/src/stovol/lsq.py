"""Least-squares projection of regression responses onto one function space.

The fitted coefficient vector minimizes the mean squared residual of the
responses against the basis evaluated at the design points that fall inside
the estimation domain.  Rank-deficient designs resolve to the minimum-norm
minimizer, so fitted values are always uniquely defined.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bases import BasisSpec, EstimationDomain, design_matrix
from .quadvar import RegressionSample

RANK_RCOND = 1e-10  # singular values below RANK_RCOND * s_max count as zero


class FitError(ValueError):
    pass


@dataclass
class Fit:
    """A fitted function: basis spec, coefficients and the attained contrast.

    ``contrast`` is the mean squared residual over the ``n_used`` design
    points retained inside the domain.
    """

    spec: BasisSpec
    coeffs: np.ndarray
    contrast: float
    domain: EstimationDomain
    n_used: int
    target: str
    rank: int

    def __call__(self, v):
        return evaluate(self, v)


def retained_mask(sample: RegressionSample) -> np.ndarray:
    if sample.domain is None:
        raise FitError("regression sample has no estimation domain attached")
    return sample.domain.contains(sample.x)


def fit(sample: RegressionSample, spec: BasisSpec) -> Fit:
    """Minimize the empirical contrast of ``sample`` over the space ``spec``.

    Only design points inside the domain enter the fit; the contrast
    normalizes by the retained count.
    """
    keep = retained_mask(sample)
    x = sample.x[keep]
    y = sample.y[keep]
    if x.size == 0:
        raise FitError("no design points inside the estimation domain")
    if not np.all(np.isfinite(y)):
        raise FitError("non-finite responses")
    unit = sample.domain.to_unit(x)
    phi = design_matrix(spec, unit)
    coeffs, _, rank, _ = np.linalg.lstsq(phi, y, rcond=RANK_RCOND)
    resid = y - phi @ coeffs
    contrast = float(resid @ resid / x.size)
    return Fit(spec=spec, coeffs=coeffs, contrast=contrast, domain=sample.domain,
               n_used=int(x.size), target=sample.target, rank=int(rank))


def evaluate(f: Fit, v):
    """Evaluate the fitted function; zero outside the estimation domain."""
    arr = np.atleast_1d(np.asarray(v, dtype=np.float64))
    out = np.zeros_like(arr)
    inside = f.domain.contains(arr)
    if np.any(inside):
        unit = f.domain.to_unit(arr[inside])
        out[inside] = design_matrix(f.spec, unit) @ f.coeffs
    return out if np.ndim(v) else float(out[0])


def empirical_error(f: Fit, truth, design) -> tuple[float, int]:
    """Mean squared deviation from ``truth`` at the design points inside the domain.

    Returns (error, retained count).  ``truth`` is a callable of the
    volatility level.
    """
    design = np.asarray(design, dtype=np.float64)
    if design.size == 0:
        raise FitError("empty design")
    inside = f.domain.contains(design)
    pts = design[inside]
    if pts.size == 0:
        raise FitError("no design point inside the estimation domain")
    truth_vals = np.asarray(truth(pts), dtype=np.float64)
    if not np.all(np.isfinite(truth_vals)):
        raise FitError("reference function is not finite on the estimation domain")
    diff = truth_vals - evaluate(f, pts)
    return float(diff @ diff / pts.size), int(pts.size)
