"""Fine-grid volatility paths, integrated-volatility blocks and price increments.

The observation model is: increments of the price process over a step delta
are, conditionally on the volatility path, centered Gaussians whose variance
is the integrated volatility over the step.  Integrals are approximated by the
composite trapezoid rule over the fine simulation grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import DiffusionModel


class SamplingError(ValueError):
    pass


@dataclass
class FineGridPath:
    """Volatility values on the fine grid 0, step, ..., n_steps*step.

    ``exact`` records whether the sampler had an exact transition law; Euler
    paths carry False and downstream reports surface it.
    """

    step: float
    values: np.ndarray
    model_id: str = "custom"
    exact: bool = True

    @property
    def n_steps(self) -> int:
        return len(self.values) - 1

    @property
    def horizon(self) -> float:
        return self.n_steps * self.step


@dataclass
class IntegratedSeries:
    """Block integrals J_l of the volatility over consecutive spans of length
    ``ratio`` fine steps; step = ratio * fine step."""

    step: float
    values: np.ndarray
    ratio: int

    @property
    def n_blocks(self) -> int:
        return len(self.values)


@dataclass
class ObservationSet:
    """Observed price increments dX_l, l = 1..n, at step ``step``."""

    step: float
    increments: np.ndarray
    levels: np.ndarray | None = None  # cumulated X grid, kept on request

    @property
    def n_increments(self) -> int:
        return len(self.increments)


def simulate_fine_path(model: DiffusionModel, step: float, n_steps: int,
                       rng: np.random.Generator) -> FineGridPath:
    """Simulate the volatility on the fine grid, started from stationarity.

    Deterministic given the generator state; exactness is whatever the model's
    sampler provides (exact transitions for the built-ins).
    """
    if not step > 0:
        raise SamplingError(f"fine step must be > 0, got {step}")
    if n_steps < 1:
        raise SamplingError(f"need at least one step, got {n_steps}")
    if model.sampler is None:
        raise SamplingError(f"model {model.id!r} has no sampler attached")
    values = model.sampler.sample(n_steps, step, rng)
    return FineGridPath(step=step, values=np.asarray(values, dtype=np.float64),
                        model_id=model.id, exact=model.exact)


def integrate_blocks(path: FineGridPath, ratio: int) -> IntegratedSeries:
    """Composite trapezoid integrals over consecutive blocks of ``ratio`` fine steps.

    J_l = step * (V_{(l-1)r}/2 + V_{(l-1)r+1} + ... + V_{lr-1} + V_{lr}/2),
    exact for affine segments, second-order for smooth integrands.
    """
    ratio = int(ratio)
    if ratio < 1:
        raise SamplingError(f"ratio must be >= 1, got {ratio}")
    if path.n_steps % ratio != 0:
        raise SamplingError(
            f"ratio {ratio} does not divide the number of fine steps {path.n_steps}")
    v = path.values
    # per fine-interval trapezoid areas, then fixed-order block sums
    areas = 0.5 * path.step * (v[:-1] + v[1:])
    n = path.n_steps // ratio
    values = areas.reshape(n, ratio).sum(axis=1)
    return IntegratedSeries(step=ratio * path.step, values=values, ratio=ratio)


def generate_observations(integ: IntegratedSeries, rng: np.random.Generator,
                          keep_levels: bool = False) -> ObservationSet:
    """Draw price increments dX_l = sqrt(J_l) * eps_l, eps i.i.d. standard normal.

    The generator must be independent of the one that produced the volatility
    path (two separately seeded streams realize the independence of the two
    driving Brownian motions).
    """
    j = np.asarray(integ.values, dtype=np.float64)
    if np.any(j < 0):
        raise SamplingError("negative block integral; volatility must be nonnegative")
    eps = rng.standard_normal(j.size)
    increments = np.sqrt(j) * eps
    levels = None
    if keep_levels:
        levels = np.concatenate([[0.0], np.cumsum(increments)])
    return ObservationSet(step=integ.step, increments=increments, levels=levels)
