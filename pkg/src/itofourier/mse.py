"""Mean-square errors of truncated expansions, exact and bounded.

Every value is assembled in exact rational arithmetic as the coefficient
of a power of ``T - t`` and converted to float only at the end.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .coefficients import (
    DEFAULT_MAX_DEGREE,
    WeightSpec,
    _scale_sq,
    coefficient_tensor,
    kernel_norm,
    max_degree_for,
)
from .partitions import coupled_permutations

__all__ = [
    "IndexPattern",
    "MseReport",
    "UnsupportedPatternError",
    "SUPPORTED_PATTERNS",
    "parseval_bracket",
    "mse_bound",
    "mse_exact_distinct",
    "mse_exact_case",
    "k2_closed_form",
    "g_q",
    "e_q",
    "e_q_exact",
    "E_q",
    "MinQRow",
    "min_q",
    "min_q_table",
]

TAG_BOUND = "bound:factorial"
TAG_DISTINCT = "exact:distinct"
TAG_PATTERN = "exact:pattern"


class UnsupportedPatternError(ValueError):
    pass


@dataclass(frozen=True)
class IndexPattern:
    """Equality structure of ``(i_1..i_k)``, stored as first-occurrence labels.

    ``IndexPattern.of((5, 5, 2))`` and ``IndexPattern.of("aab")`` both give
    labels ``(0, 0, 1)``, i.e. ``i_1 = i_2 != i_3``.
    """

    labels: tuple[int, ...]

    @classmethod
    def of(cls, values: Iterable) -> IndexPattern:
        seen: dict = {}
        return cls(tuple(seen.setdefault(v, len(seen)) for v in values))

    @classmethod
    def distinct(cls, k: int) -> IndexPattern:
        return cls(tuple(range(k)))

    @property
    def k(self) -> int:
        return len(self.labels)

    def classes(self) -> list[tuple[int, ...]]:
        """Equality classes as tuples of 1-based positions."""
        out: dict[int, list[int]] = {}
        for pos, lab in enumerate(self.labels, 1):
            out.setdefault(lab, []).append(pos)
        return [tuple(v) for v in out.values()]

    def is_distinct(self) -> bool:
        return len(set(self.labels)) == self.k

    def stabilizer(self):
        """Coupled permutations that leave the index pattern unchanged."""
        return [s for s in coupled_permutations(self.k) if s.apply(self.labels) == self.labels]


SUPPORTED_PATTERNS = (
    IndexPattern((0, 0)),
    IndexPattern((0, 0, 1)),
    IndexPattern((0, 0, 1, 1)),
    IndexPattern((0, 0, 1, 1, 0)),
)


@dataclass(frozen=True)
class MseReport:
    """An error value with its provenance.

    ``exact`` is the rational coefficient of ``(T-t)**power``; ``value``
    is the float at the stored interval length.
    """

    value: float
    kind: str  # "exact" or "upper_bound"
    equation_tag: str
    interval_length: float
    truncation: tuple[int, ...]
    exact: Fraction | None = None
    power: int | None = None
    mc_estimate: float | None = None
    mc_se: float | None = None

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("mean-square error cannot be negative")
        if self.kind not in ("exact", "upper_bound"):
            raise ValueError(f"unknown kind {self.kind!r}")

    def with_estimate(self, estimate: float, se: float) -> MseReport:
        return MseReport(
            self.value, self.kind, self.equation_tag, self.interval_length, self.truncation,
            self.exact, self.power, estimate, se,
        )


def _orders(trunc, k: int) -> tuple[int, ...]:
    ps = (int(trunc),) * k if np.isscalar(trunc) else tuple(int(p) for p in trunc)
    if len(ps) != k or any(p < 0 for p in ps):
        raise ValueError(f"need {k} nonnegative truncation orders")
    return ps


def _weights(k: int, weights: WeightSpec | None) -> WeightSpec:
    if weights is None:
        return WeightSpec.unit(k)
    if weights.k != k:
        raise ValueError(f"weights describe k={weights.k}, expected {k}")
    return weights


def _max_degree(k: int, ps: Sequence[int]) -> int:
    return max(max_degree_for(k), max(ps))


def parseval_bracket(k: int, weights: WeightSpec | None = None, trunc=0) -> tuple[Fraction, int]:
    """``(I_k - sum C^2) / (T-t)**power`` exactly, with ``power``."""
    weights = _weights(k, weights)
    ps = _orders(trunc, k)
    tensor = coefficient_tensor(weights, ps, max_degree=_max_degree(k, ps))
    norm = kernel_norm(weights)
    return norm.exact - tensor.sum_squares(), norm.power


def _report(exact: Fraction, power: int, kind: str, tag: str, dt: float, ps, factor=1) -> MseReport:
    if not dt > 0:
        raise ValueError("interval_length must be positive")
    value = factor * exact
    if value < 0:
        warnings.warn(f"negative error coefficient {value} clamped to 0", RuntimeWarning, stacklevel=3)
        value = Fraction(0)
    return MseReport(float(value) * dt**power, kind, tag, dt, tuple(ps), value, power)


def mse_bound(k: int, weights: WeightSpec | None = None, trunc=0, interval_length: float = 1.0) -> MseReport:
    """``k! (I_k - sum C^2)``, valid for any index pattern."""
    if not 1 <= k <= 6:
        raise ValueError("k must be in 1..6")
    bracket, power = parseval_bracket(k, weights, trunc)
    return _report(bracket, power, "upper_bound", TAG_BOUND, interval_length, _orders(trunc, k), math.factorial(k))


def mse_exact_distinct(k: int, weights: WeightSpec | None = None, trunc=0, interval_length: float = 1.0) -> MseReport:
    """``I_k - sum C^2``, the exact error when all ``i_l`` differ."""
    if not 1 <= k <= 5:
        raise ValueError("k must be in 1..5")
    bracket, power = parseval_bracket(k, weights, trunc)
    return _report(bracket, power, "exact", TAG_DISTINCT, interval_length, _orders(trunc, k))


def mse_exact_case(
    pattern: IndexPattern | Iterable,
    trunc: int,
    interval_length: float = 1.0,
    weights: WeightSpec | None = None,
) -> MseReport:
    """Exact error for the equality patterns with a known reduction.

    ``E = I_k - sum_j C_j sum_sigma C_{sigma(j)}``, with ``sigma`` running
    over the coupled permutations that preserve the pattern.
    """
    if not isinstance(pattern, IndexPattern):
        pattern = IndexPattern.of(pattern)
    k = pattern.k
    if pattern.is_distinct():
        if k > 5:
            raise UnsupportedPatternError("exact errors are available for k <= 5")
        return mse_exact_distinct(k, weights, trunc, interval_length)
    if pattern not in SUPPORTED_PATTERNS:
        raise UnsupportedPatternError(
            f"no exact reduction for pattern {pattern.labels}; use Monte Carlo or the factorial bound"
        )
    if not np.isscalar(trunc):
        raise ValueError("repeated-index errors need a single truncation order")
    weights = _weights(k, weights)
    p = int(trunc)
    grid = coefficient_tensor(weights, p, max_degree=_max_degree(k, (p,))).cbar
    perms = pattern.stabilizer()
    total = Fraction(0)
    for js in np.ndindex(*grid.shape):
        c = grid[js]
        if not c:
            continue
        inner = sum((grid[s.apply(js)] for s in perms), Fraction(0))
        if inner:
            total += c * inner * _scale_sq(weights, js)
    norm = kernel_norm(weights)
    return _report(norm.exact - total, norm.power, "exact", TAG_PATTERN, interval_length, (p,) * k)


# ---------------------------------------------------------------------------
# closed forms


def k2_closed_form(q: int) -> Fraction:
    """Telescoped unit-weight ``k=2`` distinct-index error ``1 / (4(2q+1))``."""
    if q < 0:
        raise ValueError("q must be nonnegative")
    return Fraction(1, 4 * (2 * q + 1))


def g_q(q: int) -> Fraction:
    """``(1/2)(1/2 - sum_{i=1}^q 1/(4i^2-1))``, summed term by term."""
    if q < 0:
        raise ValueError("q must be nonnegative")
    return Fraction(1, 2) * (Fraction(1, 2) - sum((Fraction(1, 4 * i * i - 1) for i in range(1, q + 1)), Fraction(0)))


def _e_q_terms(q: int):
    yield Fraction(5, 9)
    for i in range(2, q + 1):
        yield -2 * Fraction(1, 4 * i * i - 1)
    for i in range(1, q + 1):
        yield -Fraction(1, (2 * i - 1) ** 2 * (2 * i + 3) ** 2)
    for i in range(q + 1):
        yield -Fraction((i + 2) ** 2 + (i + 1) ** 2, (2 * i + 1) * (2 * i + 5) * (2 * i + 3) ** 2)


def e_q_exact(q: int) -> Fraction:
    """Coefficient of ``(T-t)**4`` in the weighted double-integral error."""
    if q < 0:
        raise ValueError("q must be nonnegative")
    return sum(_e_q_terms(q), Fraction(0)) / 16


def e_q(q: int) -> float:
    """Float version of :func:`e_q_exact`; uses exactly rounded summation for large ``q``."""
    if q < 0:
        raise ValueError("q must be nonnegative")
    if q <= 2000:
        return float(e_q_exact(q))
    i = np.arange(q + 1, dtype=float)
    parts = [5.0 / 9.0]
    parts += list(-2.0 / (4 * i[2:] ** 2 - 1))
    parts += list(-1.0 / ((2 * i[1:] - 1) ** 2 * (2 * i[1:] + 3) ** 2))
    parts += list(-((i + 2) ** 2 + (i + 1) ** 2) / ((2 * i + 1) * (2 * i + 5) * (2 * i + 3) ** 2))
    return math.fsum(parts) / 16


def E_q(q: int, interval_length: float) -> float:
    return e_q(q) * interval_length**4


# ---------------------------------------------------------------------------
# minimal truncation orders


@dataclass(frozen=True)
class MinQRow:
    interval_length: float
    q: int
    q1: int | None


def _as_exact(x) -> Fraction:
    # decimal reading so 0.05020 means exactly 502/10000
    return x if isinstance(x, Fraction) else Fraction(str(x))


def min_q(k: int, interval_length, q_limit: int | None = None) -> int | None:
    """Smallest ``q`` with the exact distinct-index error ``<= (T-t)**4``.

    ``k = 2`` uses the telescoped closed form; ``k = 3`` scans the exact
    errors up to ``q_limit`` and returns ``None`` if none qualifies.
    """
    dt = _as_exact(interval_length)
    if not 0 < dt < 1:
        raise ValueError("interval_length must lie in (0, 1)")
    if k == 2:
        # dt^2 / (4(2q+1)) <= dt^4  <=>  2q+1 >= 1/(4 dt^2)
        need = Fraction(1, 4) / dt**2
        q = max(0, math.ceil((need - 1) / 2))
        return q
    if k == 3:
        limit = DEFAULT_MAX_DEGREE if q_limit is None else q_limit
        for q in range(limit + 1):
            bracket, power = parseval_bracket(3, None, q)
            if bracket * dt**power <= dt**4:
                return q
        return None
    raise ValueError("minimal orders are tabulated for k = 2 and 3")


def min_q_table(thresholds: Sequence) -> list[MinQRow]:
    return [MinQRow(float(x), min_q(2, x), min_q(3, x)) for x in thresholds]
