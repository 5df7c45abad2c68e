"""Realized quadratic variation blocks and the drift/diffusion regression samples."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .sampling import IntegratedSeries, ObservationSet

DRIFT = "drift"
DIFF_SQ = "diff_sq"
TARGETS = (DRIFT, DIFF_SQ)


class QuadVarError(ValueError):
    pass


@dataclass
class QuadVarSeries:
    """Per-block realized quadratic variation.

    Block i aggregates k squared increments: hat_V_i = (1/(k*step)) * sum of
    the squared increments with indices i*k+1 .. (i+1)*k.  ``vbar`` optionally
    carries the integrated-volatility block means (oracle companion, computed
    from stored block integrals, never used by the estimator).
    """

    values: np.ndarray
    k: int
    step: float
    vbar: np.ndarray | None = None

    @property
    def block_span(self) -> float:
        """Length Delta = k * step of one block."""
        return self.k * self.step

    @property
    def n_blocks(self) -> int:
        return len(self.values)


@dataclass
class RegressionSample:
    """Design/response pairs for one estimation target.

    x[i] is the realized quadratic variation of block i, y[i] the response
    built from the increment between blocks i+1 and i+2 (the one-block gap is
    what makes the noise a martingale increment).  ``domain`` must be attached
    before fitting.
    """

    target: str
    x: np.ndarray
    y: np.ndarray
    block_span: float
    domain: object | None = None

    @property
    def n_pairs(self) -> int:
        return len(self.x)

    def with_domain(self, domain) -> "RegressionSample":
        return replace(self, domain=domain)


def quad_var(obs: ObservationSet, k: int,
             integrated: IntegratedSeries | None = None) -> QuadVarSeries:
    """Realized quadratic variation with k increments per block.

    Leftover increments (n not divisible by k) are dropped from the end.  If
    the block integrals that generated ``obs`` are supplied, the matching
    integrated-volatility block means are stored for diagnostics.
    """
    k = int(k)
    if k < 1:
        raise QuadVarError(f"k must be >= 1, got {k}")
    n = obs.n_increments
    if k > n:
        raise QuadVarError(f"k={k} exceeds the number of increments n={n}")
    n_blocks = n // k
    used = obs.increments[: n_blocks * k]
    sq = used * used
    values = sq.reshape(n_blocks, k).sum(axis=1) / (k * obs.step)
    vbar = None
    if integrated is not None:
        if integrated.n_blocks < n_blocks * k:
            raise QuadVarError("integrated series shorter than the observation set")
        j = integrated.values[: n_blocks * k]
        vbar = j.reshape(n_blocks, k).sum(axis=1) / (k * obs.step)
    return QuadVarSeries(values=values, k=k, step=obs.step, vbar=vbar)


def build_regression(qv: QuadVarSeries, target: str, domain=None) -> RegressionSample:
    """Assemble the regression sample for the drift or squared-diffusion target.

    Pairs (x_i, y_i), i = 0..N-3, with x_i = hat_V_i and

      drift:    y_i = (hat_V_{i+2} - hat_V_{i+1}) / Delta
      diff_sq:  y_i = 1.5 * (hat_V_{i+2} - hat_V_{i+1})^2 / Delta
    """
    if target not in TARGETS:
        raise QuadVarError(f"unknown target {target!r}; expected one of {TARGETS}")
    n = qv.n_blocks
    if n < 3:
        raise QuadVarError(f"need at least 3 blocks to form regression pairs, got {n}")
    v = qv.values
    span = qv.block_span
    diff = v[2:] - v[1:-1]  # hat_V_{i+2} - hat_V_{i+1}, i = 0..N-3
    if target == DRIFT:
        y = diff / span
    else:
        y = 1.5 * diff * diff / span
    return RegressionSample(target=target, x=v[: n - 2].copy(), y=y,
                            block_span=span, domain=domain)
