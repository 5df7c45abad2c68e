"""Finite-dimensional function spaces on [0,1] and the estimation domain map.

Two families of orthonormal systems are provided:

  * trig: phi_1 = 1, phi_{2q} = sqrt(2) cos(2 pi q x), phi_{2q+1} =
    sqrt(2) sin(2 pi q x), q = 1..m, dimension D = 2m+1.  The first D
    functions span exactly the trigonometric polynomials of frequency <= m.
  * poly: dyadic piecewise polynomials; [0,1] is split into 2^p equal cells
    and each cell carries the orthonormal shifted Legendre system of degree
    <= r, dimension D = 2^p (r+1).

Estimation happens on a compact data-driven interval [a0, a1] mapped
affinely onto [0,1]; fitted functions vanish outside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_legendre

from .quadvar import QuadVarSeries

TRIG = "trig"
POLY = "poly"
FAMILIES = (TRIG, POLY)

SQRT2 = math.sqrt(2.0)


class BasisError(ValueError):
    pass


@dataclass(frozen=True)
class EstimationDomain:
    """Interval [lo, hi] in volatility units with its affine map onto [0,1]."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise BasisError(f"degenerate estimation domain [{self.lo}, {self.hi}]")

    def to_unit(self, v):
        return (np.asarray(v, dtype=np.float64) - self.lo) / (self.hi - self.lo)

    def from_unit(self, x):
        return self.lo + np.asarray(x, dtype=np.float64) * (self.hi - self.lo)

    def contains(self, v):
        v = np.asarray(v)
        return (v >= self.lo) & (v <= self.hi)


@dataclass(frozen=True)
class BasisSpec:
    """One function space: family plus dimension.

    For ``poly``, ``depth`` p and ``degree`` r determine dim = 2^p (r+1); for
    ``trig`` the dimension alone (odd, D = 2m+1) fixes the space.
    """

    family: str
    dim: int
    depth: int | None = None
    degree: int | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise BasisError(f"unknown family {self.family!r}")
        if self.family == TRIG:
            if self.dim < 1 or self.dim % 2 == 0:
                raise BasisError(f"trig dimension must be odd and >= 1, got {self.dim}")
        else:
            if self.depth is None or self.degree is None:
                raise BasisError("poly spec needs depth p and degree r")
            if self.depth < 0 or self.degree < 0:
                raise BasisError("poly depth and degree must be >= 0")
            if self.dim != 2 ** self.depth * (self.degree + 1):
                raise BasisError("poly dim must equal 2^p (r+1)")

    def label(self) -> str:
        if self.family == TRIG:
            return f"trig:D={self.dim}"
        return f"poly:p={self.depth},r={self.degree},D={self.dim}"


def trig_spec(dim: int) -> BasisSpec:
    return BasisSpec(family=TRIG, dim=dim)


def poly_spec(depth: int, degree: int) -> BasisSpec:
    return BasisSpec(family=POLY, dim=2 ** depth * (degree + 1),
                     depth=depth, degree=degree)


def _check_unit(x):
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        raise BasisError("evaluation points must lie in [0,1]")
    return x


def trig_eval(j: int, x):
    """Evaluate the j-th trigonometric basis function on [0,1].

    j = 1 is the constant 1; j = 2q evaluates sqrt(2) cos(2 pi q x) and
    j = 2q+1 evaluates sqrt(2) sin(2 pi q x).
    """
    if j < 1:
        raise BasisError(f"basis index must be >= 1, got {j}")
    xs = _check_unit(x)
    if j == 1:
        out = np.ones_like(xs)
    else:
        q = j // 2
        if j % 2 == 0:
            out = SQRT2 * np.cos(2.0 * np.pi * q * xs)
        else:
            out = SQRT2 * np.sin(2.0 * np.pi * q * xs)
    return out if np.ndim(x) else float(out[0])


def _poly_design(spec: BasisSpec, xs: np.ndarray) -> np.ndarray:
    p, r = spec.depth, spec.degree
    n_cells = 2 ** p
    cells = np.minimum((xs * n_cells).astype(int), n_cells - 1)  # x = 1 -> last cell
    # map each point into [-1, 1] within its cell
    u = 2.0 * (xs * n_cells - cells) - 1.0
    out = np.zeros((xs.size, spec.dim))
    scale_cell = math.sqrt(n_cells)
    rows = np.arange(xs.size)
    for q in range(r + 1):
        vals = scale_cell * math.sqrt(2 * q + 1) * eval_legendre(q, u)
        out[rows, cells * (r + 1) + q] = vals
    return out


def design_matrix(spec: BasisSpec, xs) -> np.ndarray:
    """Rows = evaluation points in [0,1], columns = basis functions."""
    xs = _check_unit(xs)
    if spec.family == TRIG:
        out = np.empty((xs.size, spec.dim))
        out[:, 0] = 1.0
        m = (spec.dim - 1) // 2
        for q in range(1, m + 1):
            ang = 2.0 * np.pi * q * xs
            out[:, 2 * q - 1] = SQRT2 * np.cos(ang)
            if 2 * q < spec.dim:
                out[:, 2 * q] = SQRT2 * np.sin(ang)
        return out
    return _poly_design(spec, xs)


def collection(family: str, max_dim: int, r_max: int = 4) -> list[BasisSpec]:
    """Enumerate the nested collection of spaces with dimension <= max_dim.

    trig: every odd dimension 1, 3, ..., max_dim.
    poly: every (p, r) with r <= r_max and 2^p (r+1) <= max_dim, ordered by
    depth then degree.
    """
    if max_dim < 1:
        raise BasisError(f"max_dim must be >= 1, got {max_dim}")
    if family == TRIG:
        return [trig_spec(d) for d in range(1, max_dim + 1, 2)]
    if family == POLY:
        specs = []
        p = 0
        while 2 ** p <= max_dim:
            for r in range(r_max + 1):
                if 2 ** p * (r + 1) <= max_dim:
                    specs.append(poly_spec(p, r))
            p += 1
        return specs
    raise BasisError(f"unknown family {family!r}")


def max_dimension(n_blocks: int, block_span: float) -> int:
    """Dimension cap floor(N * Delta / ln(N)^1.5), at least 1."""
    if n_blocks < 2:
        return 1
    cap = math.floor(n_blocks * block_span / math.log(n_blocks) ** 1.5)
    return max(1, cap)


def domain_from_data(qv: QuadVarSeries, q_lo: float = 0.025,
                     q_hi: float = 0.975) -> EstimationDomain:
    """Estimation interval from empirical quantiles of the realized blocks.

    Quantiles use linear interpolation of order statistics (the default numpy
    convention), which makes the domain a deterministic function of the data.
    """
    if not (0.0 <= q_lo < q_hi <= 1.0):
        raise BasisError(f"need 0 <= q_lo < q_hi <= 1, got ({q_lo}, {q_hi})")
    if qv.n_blocks < 10:
        raise BasisError(f"need at least 10 blocks, got {qv.n_blocks}")
    lo = float(np.quantile(qv.values, q_lo))
    hi = float(np.quantile(qv.values, q_hi))
    if not lo < hi:
        raise BasisError(f"degenerate sample: both quantiles equal {lo}")
    return EstimationDomain(lo=lo, hi=hi)
