"""Exact Legendre polynomial algebra on [-1, 1].

Polynomials are stored in the monomial basis with ``fractions.Fraction``
coefficients; index ``n`` of the coefficient tuple multiplies ``x**n``.
The shifted orthonormal system on ``[t, T]`` is evaluated in floating
point by :func:`shifted_basis`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "DEFAULT_MAX_DEGREE",
    "RationalPoly",
    "ShiftedBasisSpec",
    "legendre_poly",
    "poly_mul",
    "integral_from_minus_one",
    "inner_product_11",
    "moment",
    "legendre_values",
    "shifted_basis",
]

#: Largest Legendre index accepted by the coefficient engine for k >= 3.
DEFAULT_MAX_DEGREE = 12


def _as_fraction(c) -> Fraction:
    return c if isinstance(c, Fraction) else Fraction(c)


@dataclass(frozen=True)
class RationalPoly:
    """Univariate polynomial with exact rational coefficients.

    Trailing zero coefficients are stripped on construction, so two
    polynomials are equal iff their coefficient tuples are equal.  The
    zero polynomial has an empty coefficient tuple and degree -1.
    """

    coeffs: tuple[Fraction, ...] = ()

    def __init__(self, coeffs: Iterable = ()):
        cs = [_as_fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, x):
        """Evaluate exactly for int/Fraction arguments, in floating point otherwise."""
        if isinstance(x, (int, Fraction)):
            acc = Fraction(0)
            for c in reversed(self.coeffs):
                acc = acc * x + c
            return acc
        return np.polynomial.polynomial.polyval(x, self.to_float()) if self.coeffs else 0.0 * np.asarray(x, dtype=float)

    def __add__(self, other: RationalPoly) -> RationalPoly:
        a, b = self.coeffs, other.coeffs
        n = max(len(a), len(b))
        return RationalPoly(
            (a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)
        )

    def __neg__(self) -> RationalPoly:
        return RationalPoly(-c for c in self.coeffs)

    def __sub__(self, other: RationalPoly) -> RationalPoly:
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, RationalPoly):
            return poly_mul(self, other)
        s = _as_fraction(other)
        return RationalPoly(c * s for c in self.coeffs)

    __rmul__ = __mul__

    def derivative(self) -> RationalPoly:
        return RationalPoly(n * c for n, c in enumerate(self.coeffs) if n > 0)

    def to_float(self) -> np.ndarray:
        return np.array([float(c) for c in self.coeffs], dtype=float)

    @classmethod
    def constant(cls, c) -> RationalPoly:
        return cls((c,))

    @classmethod
    def x(cls) -> RationalPoly:
        return cls((0, 1))


def poly_mul(a: RationalPoly, b: RationalPoly) -> RationalPoly:
    """Exact product of two polynomials."""
    if a.is_zero() or b.is_zero():
        return RationalPoly()
    out = [Fraction(0)] * (len(a.coeffs) + len(b.coeffs) - 1)
    for i, ca in enumerate(a.coeffs):
        if ca == 0:
            continue
        for j, cb in enumerate(b.coeffs):
            if cb:
                out[i + j] += ca * cb
    return RationalPoly(out)


@lru_cache(maxsize=None)
def legendre_poly(j: int) -> RationalPoly:
    """Legendre polynomial ``P_j`` via ``(n+1)P_{n+1} = (2n+1)xP_n - nP_{n-1}``."""
    if j < 0:
        raise ValueError(f"Legendre index must be nonnegative, got {j}")
    if j == 0:
        return RationalPoly((1,))
    if j == 1:
        return RationalPoly((0, 1))
    n = j - 1
    pn, pm = legendre_poly(n).coeffs, legendre_poly(n - 1).coeffs
    out = [Fraction(0)] * (j + 1)
    for i, c in enumerate(pn):
        out[i + 1] += c * (2 * n + 1)
    for i, c in enumerate(pm):
        out[i] -= c * n
    return RationalPoly(c / (n + 1) for c in out)


def integral_from_minus_one(a: RationalPoly) -> RationalPoly:
    """Antiderivative ``F`` of ``a`` normalized so that ``F(-1) = 0``."""
    if a.is_zero():
        return RationalPoly()
    raw = [Fraction(0)] + [c / (n + 1) for n, c in enumerate(a.coeffs)]
    # F(-1) = sum raw[n] * (-1)^n
    at_minus_one = sum((c if n % 2 == 0 else -c) for n, c in enumerate(raw))
    raw[0] -= at_minus_one
    return RationalPoly(raw)


@lru_cache(maxsize=None)
def _monomial_integral(n: int) -> Fraction:
    return Fraction(2, n + 1) if n % 2 == 0 else Fraction(0)


def integral_11(a: RationalPoly) -> Fraction:
    """Exact ``int_{-1}^{1} a(x) dx``."""
    return sum((c * _monomial_integral(n) for n, c in enumerate(a.coeffs)), Fraction(0))


def inner_product_11(a: RationalPoly, b: RationalPoly) -> Fraction:
    """Exact ``int_{-1}^{1} a(x) b(x) dx``."""
    return integral_11(poly_mul(a, b))


@lru_cache(maxsize=None)
def moment(j: int, n: int) -> Fraction:
    """``int_{-1}^{1} P_j(x) x**n dx``; zero whenever ``n < j`` or parities differ."""
    if n < j or (n - j) % 2:
        return Fraction(0)
    return sum(
        (c * _monomial_integral(i + n) for i, c in enumerate(legendre_poly(j).coeffs)),
        Fraction(0),
    )


def legendre_values(p_max: int, x) -> np.ndarray:
    """Float values of ``P_0..P_{p_max}`` at ``x``; shape ``(p_max+1,) + x.shape``."""
    x = np.asarray(x, dtype=float)
    out = np.empty((p_max + 1,) + x.shape)
    out[0] = 1.0
    if p_max >= 1:
        out[1] = x
    for n in range(1, p_max):
        out[n + 1] = ((2 * n + 1) * x * out[n] - n * out[n - 1]) / (n + 1)
    return out


@dataclass(frozen=True)
class ShiftedBasisSpec:
    """Orthonormal Legendre system on an interval of the given length."""

    interval_length: float
    j: int = 0

    def __post_init__(self):
        if not self.interval_length > 0:
            raise ValueError("interval_length must be positive")
        if self.j < 0:
            raise ValueError("basis index must be nonnegative")

    def __call__(self, s, t: float = 0.0):
        return shifted_basis(self.j, s, t, t + self.interval_length)[self.j]


def shifted_basis(p_max: int, s, t: float, T: float) -> np.ndarray:
    """Values of ``phi_0..phi_{p_max}`` at times ``s`` in ``[t, T]``.

    ``phi_j(s) = sqrt((2j+1)/(T-t)) P_j(2(s - (T+t)/2)/(T-t))``.
    """
    length = T - t
    if not length > 0:
        raise ValueError("T must exceed t")
    x = (np.asarray(s, dtype=float) - 0.5 * (T + t)) * (2.0 / length)
    vals = legendre_values(p_max, x)
    scale = np.sqrt((2 * np.arange(p_max + 1) + 1) / length)
    return vals * scale.reshape((-1,) + (1,) * x.ndim)


def from_legendre_series(coeffs: Sequence) -> RationalPoly:
    """Monomial form of ``sum_j coeffs[j] P_j``."""
    acc = RationalPoly()
    for j, c in enumerate(coeffs):
        if c:
            acc = acc + legendre_poly(j) * c
    return acc
