"""Exact Fourier-Legendre coefficients of the ordered-simplex kernel.

For weights ``psi_1..psi_k`` and the orthonormal Legendre system on
``[t, T]`` the coefficient

    C[j_k..j_1] = int_{t < t_1 < ... < t_k < T} prod_l psi_l(t_l) phi_{j_l}(t_l) dt

factors into a scale that only depends on ``T - t`` and a rational number
``cbar`` computed on the reference interval ``[-1, 1]``:

    C = prod_l sqrt(2 j_l + 1) / 2**k * (T-t)**(k/2) * ((T-t)/2)**d * cbar

where ``d`` is the total homogeneous degree of the weights.

Index conventions: public functions taking a ``subscript`` expect the
indices in written order ``(j_k, ..., j_1)``, outermost first.  Dense
arrays returned by :func:`coefficient_tensor` use axis ``l-1`` for
``j_l``, i.e. innermost first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .legendre import (
    DEFAULT_MAX_DEGREE,
    RationalPoly,
    integral_11,
    integral_from_minus_one,
    legendre_poly,
    moment,
    poly_mul,
)

__all__ = [
    "MAX_MULTIPLICITY",
    "LOW_ORDER_MAX_DEGREE",
    "Weight",
    "WeightSpec",
    "CoefficientTensor",
    "KernelNorm",
    "cbar",
    "c_scaled",
    "coefficient_tensor",
    "kernel_norm",
    "max_degree_for",
]

MAX_MULTIPLICITY = 6
#: Legendre index limit for k <= 2, where the grid stays small enough to go higher.
LOW_ORDER_MAX_DEGREE = 64


@dataclass(frozen=True)
class Weight:
    """A weight homogeneous in ``(T - t, s - t)``.

    ``psi(s) = ((T-t)/2)**degree * poly(x)`` with ``x = 2(s - t)/(T - t) - 1``.
    """

    poly: RationalPoly = field(default_factory=lambda: RationalPoly((1,)))
    degree: int = 0

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("weight degree must be nonnegative")
        if self.poly.degree > self.degree:
            raise ValueError("reference polynomial degree cannot exceed the homogeneous degree")

    @classmethod
    def unit(cls) -> Weight:
        return cls(RationalPoly((1,)), 0)

    @classmethod
    def elapsed(cls, power: int = 1, coef=1) -> Weight:
        """``coef * (s - t)**power``."""
        base = RationalPoly((1, 1))
        poly = RationalPoly((coef,))
        for _ in range(power):
            poly = poly_mul(poly, base)
        return cls(poly, power)

    @classmethod
    def remaining(cls, power: int = 1, coef=1) -> Weight:
        """``coef * (T - s)**power``."""
        base = RationalPoly((1, -1))
        poly = RationalPoly((coef,))
        for _ in range(power):
            poly = poly_mul(poly, base)
        return cls(poly, power)

    def times(self, other: Weight) -> Weight:
        return Weight(poly_mul(self.poly, other.poly), self.degree + other.degree)

    def is_unit(self) -> bool:
        return self.degree == 0 and self.poly == RationalPoly((1,))

    def __call__(self, s, t: float, T: float):
        x = 2.0 * (np.asarray(s, dtype=float) - t) / (T - t) - 1.0
        return (0.5 * (T - t)) ** self.degree * self.poly(x)


@dataclass(frozen=True)
class WeightSpec:
    """Per-level weights ``psi_1..psi_k`` (innermost first)."""

    weights: tuple[Weight, ...]

    def __init__(self, weights: Sequence[Weight]):
        object.__setattr__(self, "weights", tuple(weights))
        if not self.weights:
            raise ValueError("need at least one weight")

    @classmethod
    def unit(cls, k: int) -> WeightSpec:
        return cls([Weight.unit()] * k)

    @property
    def k(self) -> int:
        return len(self.weights)

    @property
    def total_degree(self) -> int:
        return sum(w.degree for w in self.weights)

    def is_unit(self) -> bool:
        return all(w.is_unit() for w in self.weights)


def max_degree_for(k: int) -> int:
    return LOW_ORDER_MAX_DEGREE if k <= 2 else DEFAULT_MAX_DEGREE


def _check(weights: WeightSpec, js: Sequence[int], max_degree: int | None):
    k = weights.k
    if not 1 <= k <= MAX_MULTIPLICITY:
        raise ValueError(f"multiplicity k={k} outside supported range 1..{MAX_MULTIPLICITY}")
    if len(js) != k:
        raise ValueError(f"expected {k} indices, got {len(js)}")
    limit = max_degree_for(k) if max_degree is None else max_degree
    for j in js:
        if not 0 <= j <= limit:
            raise ValueError(f"Legendre index {j} outside 0..{limit}")


@lru_cache(maxsize=None)
def _chain(weights: tuple[Weight, ...], js: tuple[int, ...]) -> RationalPoly:
    """Nested antiderivative ``int_{-1}^x w_l P_{j_l} (...)`` over the given prefix."""
    inner = RationalPoly((1,)) if len(js) == 1 else _chain(weights[:-1], js[:-1])
    w = weights[-1]
    integrand = poly_mul(poly_mul(w.poly, legendre_poly(js[-1])), inner)
    return integral_from_minus_one(integrand)


def _outer(w: Weight, j: int, inner: RationalPoly) -> Fraction:
    f = poly_mul(w.poly, inner)
    return sum((c * moment(j, n) for n, c in enumerate(f.coeffs) if n >= j), Fraction(0))


def _cbar_inner_first(weights: WeightSpec, js: tuple[int, ...]) -> Fraction:
    k = weights.k
    inner = RationalPoly((1,)) if k == 1 else _chain(weights.weights[:-1], js[:-1])
    return _outer(weights.weights[-1], js[-1], inner)


def cbar(subscript: Sequence[int], weights: WeightSpec | None = None, max_degree: int | None = None) -> Fraction:
    """Exact reference-interval coefficient ``cbar[j_k..j_1]``.

    ``subscript`` is given in written order, outermost index first, so
    ``cbar((3, 0, 1))`` is the coefficient with ``j_3 = 3, j_2 = 0, j_1 = 1``.
    """
    js = tuple(reversed(tuple(int(j) for j in subscript)))
    if weights is None:
        weights = WeightSpec.unit(len(js))
    _check(weights, js, max_degree)
    return _cbar_inner_first(weights, js)


def _scale_sq(weights: WeightSpec, js: Sequence[int]) -> Fraction:
    """Exact ``(C / cbar)**2`` divided by ``(T-t)**(k + 2d)``."""
    k, d = weights.k, weights.total_degree
    num = math.prod(2 * j + 1 for j in js)
    return Fraction(num, 4**k * 4**d)


def c_scaled(
    subscript: Sequence[int],
    weights: WeightSpec | None = None,
    interval_length: float = 1.0,
    max_degree: int | None = None,
) -> float:
    """Floating value of ``C[j_k..j_1]`` on an interval of the given length."""
    if not interval_length > 0:
        raise ValueError("interval_length must be positive")
    js = tuple(reversed(tuple(int(j) for j in subscript)))
    if weights is None:
        weights = WeightSpec.unit(len(js))
    value = cbar(subscript, weights, max_degree)
    k, d = weights.k, weights.total_degree
    factor = math.prod(math.sqrt(2 * j + 1) for j in js) / 2**k
    return factor * interval_length ** (0.5 * k) * (0.5 * interval_length) ** d * float(value)


@dataclass
class CoefficientTensor:
    """Dense grid of exact coefficients, axis ``l-1`` indexing ``j_l``."""

    weights: WeightSpec
    cbar: np.ndarray  # object array of Fraction

    @property
    def k(self) -> int:
        return self.weights.k

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cbar.shape

    @property
    def power(self) -> Fraction:
        """``C`` scales like ``(T-t)**power``."""
        return Fraction(self.k, 2) + self.weights.total_degree

    def scale_factors(self) -> np.ndarray:
        """Float factors ``prod sqrt(2j+1) / 2**k / 2**d`` broadcast to the grid."""
        out = np.ones(self.shape)
        for axis, n in enumerate(self.shape):
            f = np.sqrt(2 * np.arange(n) + 1.0) / 2.0
            out = out * f.reshape([n if a == axis else 1 for a in range(self.k)])
        return out * 0.5**self.weights.total_degree

    def scaled(self, interval_length: float) -> np.ndarray:
        """Float array of ``C`` at the given ``T - t``."""
        vals = np.vectorize(float, otypes=[float])(self.cbar) if self.cbar.size else np.zeros(self.shape)
        return vals * self.scale_factors() * interval_length ** float(self.power)

    def sum_squares(self) -> Fraction:
        """Exact ``sum C**2`` divided by ``(T-t)**(k + 2d)``."""
        total = Fraction(0)
        for js in np.ndindex(*self.shape):
            c = self.cbar[js]
            if c:
                total += c * c * _scale_sq(self.weights, js)
        return total

    def truncate(self, sizes: Sequence[int]) -> CoefficientTensor:
        return CoefficientTensor(self.weights, self.cbar[tuple(slice(0, n) for n in sizes)])

    def entries(self):
        """Yield ``(js_inner_first, cbar)`` for every grid point."""
        for js in np.ndindex(*self.shape):
            yield js, self.cbar[js]


_GRIDS: dict[WeightSpec, np.ndarray] = {}


def coefficient_tensor(
    weights: WeightSpec,
    p: int | Sequence[int],
    max_degree: int | None = None,
) -> CoefficientTensor:
    """All ``cbar`` with ``0 <= j_l <= p_l``; ``p`` may be a scalar or per-level orders."""
    k = weights.k
    ps = (p,) * k if isinstance(p, (int, np.integer)) else tuple(p)
    if len(ps) != k:
        raise ValueError(f"expected {k} truncation orders, got {len(ps)}")
    if any(q < 0 for q in ps):
        raise ValueError("truncation orders must be nonnegative")
    _check(weights, ps, max_degree)
    sizes = tuple(q + 1 for q in ps)
    cached = _GRIDS.get(weights)
    if cached is None or any(a < b for a, b in zip(cached.shape, sizes)):
        full = sizes if cached is None else tuple(max(a, b) for a, b in zip(cached.shape, sizes))
        grid = np.empty(full, dtype=object)
        for js in np.ndindex(*full):
            grid[js] = _cbar_inner_first(weights, js)
        _GRIDS[weights] = cached = grid
    return CoefficientTensor(weights, cached[tuple(slice(0, n) for n in sizes)])


@dataclass(frozen=True)
class KernelNorm:
    """Squared L2 norm of the simplex kernel, ``exact * (T-t)**power``."""

    k: int
    exact: Fraction
    power: int
    interval_length: float

    @property
    def value(self) -> float:
        return float(self.exact) * self.interval_length**self.power


def kernel_norm(weights: WeightSpec, interval_length: float = 1.0) -> KernelNorm:
    k = weights.k
    if not 1 <= k <= MAX_MULTIPLICITY:
        raise ValueError(f"multiplicity k={k} outside supported range 1..{MAX_MULTIPLICITY}")
    acc = RationalPoly((1,))
    for w in weights.weights[:-1]:
        acc = integral_from_minus_one(poly_mul(poly_mul(w.poly, w.poly), acc))
    last = weights.weights[-1]
    ref = integral_11(poly_mul(poly_mul(last.poly, last.poly), acc))
    d = weights.total_degree
    exact = ref / 2**k / 4**d
    return KernelNorm(k, exact, k + 2 * d, interval_length)
