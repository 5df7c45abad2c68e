"""Volatility diffusion models with exact discrete-time simulation.

Four built-in positive one-dimensional diffusions are provided, each specified
by a drift b(v) and a squared diffusion coefficient sigma2(v), together with an
exact sampling recipe driven by Ornstein-Uhlenbeck components:

  * ``exp_ou``        V = exp(U)        for an OU process U
  * ``tanh_ou_shift`` V = tanh(U) + 2
  * ``exp_tanh_ou``   V = exp(tanh(U))
  * ``cir``           V = sum of squares of d independent OU components

User-supplied models plug in through :class:`DiffusionModel` with either an
exact sampler or a fine-grid Euler sampler (flagged as approximate).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.signal import lfilter

EXP_OU = "exp_ou"
TANH_OU_SHIFT = "tanh_ou_shift"
EXP_TANH_OU = "exp_tanh_ou"
CIR = "cir"
CUSTOM = "custom"

BUILTIN_IDS = (EXP_OU, TANH_OU_SHIFT, EXP_TANH_OU, CIR)


class ModelError(ValueError):
    """Invalid model identifier or parameters."""


@dataclass(frozen=True)
class OUParams:
    """Parameters of dU = -rate * U dt + vol * dW.

    ``vol == 0`` is tolerated so that degenerate (deterministic) paths can be
    constructed in tests; genuine models require vol > 0.
    """

    rate: float
    vol: float

    def __post_init__(self):
        if not self.rate > 0:
            raise ModelError(f"OU mean-reversion rate must be > 0, got {self.rate}")
        if self.vol < 0:
            raise ModelError(f"OU volatility must be >= 0, got {self.vol}")

    @property
    def stationary_std(self) -> float:
        """Standard deviation of the N(0, vol^2/(2 rate)) stationary law."""
        return self.vol / math.sqrt(2.0 * self.rate)


def _ar1_coeffs(params: OUParams, h: float) -> tuple[float, float]:
    # Shared by the scalar step and the vectorized path so both produce
    # bit-identical recursions.
    alpha = math.exp(-params.rate * h)
    beta = params.vol * math.sqrt(-math.expm1(-2.0 * params.rate * h) / (2.0 * params.rate))
    return alpha, beta


def ou_exact_step(u: float, params: OUParams, h: float, noise: float) -> float:
    """One exact transition of the OU process over a step of length h.

    Returns exp(-a h) * u + s * sqrt((1 - exp(-2 a h)) / (2 a)) * noise, the
    exact conditional law U_{t+h} | U_t = u with a standard normal ``noise``.
    """
    if not h > 0:
        raise ModelError(f"step length must be > 0, got {h}")
    alpha, beta = _ar1_coeffs(params, h)
    return alpha * u + beta * noise


def stationary_draw(params: OUParams, noise: float) -> float:
    """Draw from the stationary N(0, vol^2/(2 rate)) law given a standard normal."""
    return params.stationary_std * noise


def ou_exact_path(u0: float, params: OUParams, h: float, noises: np.ndarray) -> np.ndarray:
    """Exact OU path from u0, one AR(1) step per entry of ``noises``.

    Returns an array of length len(noises) + 1 starting at u0.  Identical,
    step for step, to repeated :func:`ou_exact_step` calls.
    """
    alpha, beta = _ar1_coeffs(params, h)
    noises = np.asarray(noises, dtype=np.float64)
    out = np.empty(noises.size + 1)
    out[0] = u0
    # AR(1) recursion y[i] = beta * x[i] + alpha * y[i-1] in C via lfilter.
    out[1:] = lfilter([beta], [1.0, -alpha], noises, zi=np.array([alpha * u0]))[0]
    return out


class TransformedOUSampler:
    """Exact sampler for V = transform(U) with U a single OU component."""

    def __init__(self, ou: OUParams, transform: Callable[[np.ndarray], np.ndarray]):
        self.ou = ou
        self.transform = transform

    exact = True

    def sample(self, n_steps: int, dt: float, rng: np.random.Generator) -> np.ndarray:
        u0 = stationary_draw(self.ou, rng.standard_normal())
        u = ou_exact_path(u0, self.ou, dt, rng.standard_normal(n_steps))
        return self.transform(u)


class SquaredOUSumSampler:
    """Exact sampler for V = sum_{c=1..d} U_c^2, independent OU components.

    Component draw order is fixed (per component: stationary init, then its
    path noises) so paths are reproducible for a given stream.
    """

    def __init__(self, ou: OUParams, n_components: int):
        if n_components < 1:
            raise ModelError("need at least one OU component")
        self.ou = ou
        self.n_components = n_components

    exact = True

    def sample(self, n_steps: int, dt: float, rng: np.random.Generator) -> np.ndarray:
        v = np.zeros(n_steps + 1)
        for _ in range(self.n_components):
            u0 = stationary_draw(self.ou, rng.standard_normal())
            u = ou_exact_path(u0, self.ou, dt, rng.standard_normal(n_steps))
            v += u * u
        return v


class EulerSampler:
    """Fine-grid Euler-Maruyama stepper for user-supplied models.

    Only valid at the fine simulation grid; flagged as approximate through
    ``exact = False`` and reported as such downstream.
    """

    exact = False

    def __init__(self, drift, diff_sq, init: Callable[[np.random.Generator], float],
                 clip: tuple[float, float] | None = None):
        self.drift = drift
        self.diff_sq = diff_sq
        self.init = init
        self.clip = clip

    def sample(self, n_steps: int, dt: float, rng: np.random.Generator) -> np.ndarray:
        v = np.empty(n_steps + 1)
        v[0] = self.init(rng)
        sq = math.sqrt(dt)
        noises = rng.standard_normal(n_steps)
        lo, hi = self.clip if self.clip is not None else (-math.inf, math.inf)
        for i in range(n_steps):
            x = v[i]
            x = x + self.drift(x) * dt + math.sqrt(max(self.diff_sq(x), 0.0)) * sq * noises[i]
            v[i + 1] = min(max(x, lo), hi)
        return v


@dataclass
class DiffusionModel:
    """A volatility model: coefficient functions plus a simulation recipe.

    ``drift`` and ``diff_sq`` accept scalars or arrays.  ``state_space`` is the
    open interval on which diff_sq is strictly positive.
    """

    id: str
    params: dict = field(default_factory=dict)
    drift: Callable = None
    diff_sq: Callable = None
    state_space: tuple[float, float] = (-math.inf, math.inf)
    sampler: object = None

    @property
    def exact(self) -> bool:
        return bool(getattr(self.sampler, "exact", False))


def _tanh_ou_drift(x, theta, c):
    # Drift of tanh(U): -(1 - x^2) * (c^2 x + (theta/2) ln((1+x)/(1-x)))
    return -(1.0 - x * x) * (c * c * x + 0.5 * theta * np.log((1.0 + x) / (1.0 - x)))


def _tanh_ou_diff_sq(x, c):
    # Squared diffusion of tanh(U): (c (1 - x^2))^2
    return (c * (1.0 - x * x)) ** 2


def builtin_model(model_id: str, theta: float, c: float, d: int | None = None) -> DiffusionModel:
    """Construct one of the four built-in volatility models.

    Args:
        model_id: one of ``exp_ou``, ``tanh_ou_shift``, ``exp_tanh_ou``, ``cir``.
        theta: mean-reversion rate, > 0.
        c: volatility scale, > 0.
        d: integer dimension, required for ``cir`` only (>= 1).

    Returns:
        DiffusionModel with closed-form drift/diff_sq and an exact sampler.
    """
    mid = str(model_id).lower().replace("-", "_")
    if mid not in BUILTIN_IDS:
        raise ModelError(f"unknown model id {model_id!r}; expected one of {BUILTIN_IDS}")
    if not theta > 0:
        raise ModelError(f"theta must be > 0, got {theta}")
    if not c > 0:
        raise ModelError(f"c must be > 0, got {c}")

    if mid == CIR:
        if d is None:
            raise ModelError("cir requires the integer dimension d")
        d = int(d)
        if d < 1:
            raise ModelError(f"cir dimension d must be >= 1, got {d}")
        params = {"theta": theta, "c": c, "d": d}
        return DiffusionModel(
            id=CIR,
            params=params,
            drift=lambda x, _t=theta, _c=c, _d=d: _d * _c ** 2 / 4.0 - _t * x,
            diff_sq=lambda x, _c=c: _c ** 2 * x,
            state_space=(0.0, math.inf),
            # sum of squares of d OU components with parameters -theta/2, c/2
            sampler=SquaredOUSumSampler(OUParams(rate=theta / 2.0, vol=c / 2.0), d),
        )
    if d is not None:
        raise ModelError(f"dimension d applies only to cir, not {mid}")

    params = {"theta": theta, "c": c}
    ou = OUParams(rate=theta, vol=c)
    if mid == EXP_OU:
        return DiffusionModel(
            id=EXP_OU,
            params=params,
            drift=lambda x, _t=theta, _c=c: x * (-_t * np.log(x) + 0.5 * _c ** 2),
            diff_sq=lambda x, _c=c: _c ** 2 * x ** 2,
            state_space=(0.0, math.inf),
            sampler=TransformedOUSampler(ou, np.exp),
        )
    if mid == TANH_OU_SHIFT:
        return DiffusionModel(
            id=TANH_OU_SHIFT,
            params=params,
            drift=lambda x, _t=theta, _c=c: _tanh_ou_drift(x - 2.0, _t, _c),
            diff_sq=lambda x, _c=c: _tanh_ou_diff_sq(x - 2.0, _c),
            state_space=(1.0, 3.0),
            sampler=TransformedOUSampler(ou, lambda u: np.tanh(u) + 2.0),
        )
    # exp_tanh_ou: V = exp(tanh(U)), coefficients by composition
    return DiffusionModel(
        id=EXP_TANH_OU,
        params=params,
        drift=lambda x, _t=theta, _c=c: x * (
            _tanh_ou_drift(np.log(x), _t, _c) + 0.5 * _tanh_ou_diff_sq(np.log(x), _c)
        ),
        diff_sq=lambda x, _c=c: x ** 2 * _tanh_ou_diff_sq(np.log(x), _c),
        state_space=(math.exp(-1.0), math.e),
        sampler=TransformedOUSampler(ou, lambda u: np.exp(np.tanh(u))),
    )
