"""Truncated expansions of iterated Ito integrals driven by Gaussian draws.

The generic evaluator sums ``C[j_k..j_1]`` against products of the
standard Gaussians ``zeta_j^{(i)}`` minus the pair-partition corrections
that make the truncated sum an Ito (not Stratonovich) object.  The
low-order closed forms used for composite Q-Wiener integrals live here
too, written out term by term.

Noise draws may carry leading batch axes; every function then returns an
array over those axes instead of a scalar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .coefficients import (
    MAX_MULTIPLICITY,
    Weight,
    WeightSpec,
    coefficient_tensor,
    max_degree_for,
)
from .legendre import RationalPoly, integral_11, integral_from_minus_one, poly_mul
from .partitions import all_pair_partitions

__all__ = [
    "NoiseMatrix",
    "gen_noise",
    "row_generator",
    "fold_zero_levels",
    "float_coefficients",
    "approx_iterated",
    "coefficient_count",
    "hermite_exact",
    "i1_approx",
    "i01_approx",
    "i10_approx",
    "i11_approx",
    "j01_approx",
    "j10_approx",
    "j01_support",
    "j10_support",
    "J01_WEIGHTS",
    "J10_WEIGHTS",
]


@dataclass(frozen=True)
class NoiseMatrix:
    """Gaussian draws ``zeta_j^{(i)}``; the last two axes are (component, index).

    Component ``i`` (1-based) lives in row ``i - 1``.
    """

    draws: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        arr = np.array(self.draws, dtype=float)
        if arr.ndim < 2:
            raise ValueError("draws need at least two axes (component, index)")
        arr.setflags(write=False)
        object.__setattr__(self, "draws", arr)

    @property
    def m(self) -> int:
        return self.draws.shape[-2]

    @property
    def p_max(self) -> int:
        return self.draws.shape[-1] - 1

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.draws.shape[:-2]

    def zeta(self, i: int, upto: int) -> np.ndarray:
        """Draws ``zeta_0^{(i)} .. zeta_upto^{(i)}`` for component ``i``."""
        if not 1 <= i <= self.m:
            raise IndexError(f"component {i} outside 1..{self.m}")
        if upto > self.p_max:
            raise IndexError(f"index {upto} exceeds noise p_max={self.p_max}")
        return self.draws[..., i - 1, : upto + 1]

    def z(self, i: int, j: int) -> np.ndarray | float:
        return self.zeta(i, j)[..., j]


def row_generator(seed: int, i: int) -> np.random.Generator:
    """Independent stream for component ``i`` derived from the master seed."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(i,))))


def gen_noise(m: int, p_max: int, seed: int) -> NoiseMatrix:
    """Seeded draws; entry ``(i, j)`` depends only on ``(seed, i, j)``.

    Each row comes from its own stream, consumed from the start, so a
    larger ``p_max`` only appends columns.
    """
    if m < 1 or p_max < 0:
        raise ValueError("need m >= 1 and p_max >= 0")
    rows = [row_generator(seed, i).standard_normal(p_max + 1) for i in range(1, m + 1)]
    return NoiseMatrix(np.stack(rows), seed)


# ---------------------------------------------------------------------------
# zero-index folding


def _integral_to_one(a: RationalPoly) -> RationalPoly:
    """``G(x) = int_x^1 a``."""
    return RationalPoly((integral_11(a),)) - integral_from_minus_one(a)


def fold_zero_levels(idx: Sequence[int], weights: WeightSpec | None = None) -> tuple[tuple[int, ...], WeightSpec]:
    """Absorb ``dt`` levels at either end into the neighbouring stochastic weight.

    Leading zeros contribute ``int_t^s``, trailing zeros ``int_s^T`` of
    their (nested) weights.  Zeros strictly between stochastic levels are
    not supported.
    """
    idx = tuple(int(i) for i in idx)
    if weights is None:
        weights = WeightSpec.unit(len(idx))
    if len(idx) != weights.k:
        raise ValueError(f"{len(idx)} indices but {weights.k} weights")
    if any(i < 0 for i in idx):
        raise ValueError("indices must be nonnegative")
    live = [n for n, i in enumerate(idx) if i != 0]
    if not live:
        raise ValueError("all levels are time integrals; nothing stochastic to expand")
    first, last = live[0], live[-1]
    if len(live) != last - first + 1:
        raise ValueError(
            "zero index between stochastic levels is not supported; "
            "only leading or trailing time integrations can be folded"
        )
    ws = list(weights.weights)

    lead_poly, lead_deg = RationalPoly((1,)), 0
    for w in ws[:first]:
        lead_poly = integral_from_minus_one(poly_mul(w.poly, lead_poly))
        lead_deg += w.degree + 1
    trail_poly, trail_deg = RationalPoly((1,)), 0
    for w in reversed(ws[last + 1:]):
        trail_poly = _integral_to_one(poly_mul(w.poly, trail_poly))
        trail_deg += w.degree + 1

    kept = ws[first:last + 1]
    kept[0] = kept[0].times(Weight(lead_poly, lead_deg))
    kept[-1] = kept[-1].times(Weight(trail_poly, trail_deg))
    return idx[first:last + 1], WeightSpec(kept)


# ---------------------------------------------------------------------------
# generic evaluator


@lru_cache(maxsize=256)
def _unit_scaled_coefficients(weights: WeightSpec, ps: tuple[int, ...]) -> np.ndarray:
    arr = coefficient_tensor(weights, ps, max_degree=max(max(ps), max_degree_for(weights.k))).scaled(1.0)
    arr.setflags(write=False)
    return arr


def float_coefficients(weights: WeightSpec, ps: Sequence[int], interval_length: float) -> np.ndarray:
    """Float ``C`` on the grid ``j_l <= p_l`` (axis ``l-1`` is ``j_l``)."""
    tensor_power = weights.k / 2 + weights.total_degree
    return _unit_scaled_coefficients(weights, tuple(ps)) * interval_length**tensor_power


def _orders(trunc, k: int) -> tuple[int, ...]:
    ps = (int(trunc),) * k if np.isscalar(trunc) else tuple(int(p) for p in trunc)
    if len(ps) != k:
        raise ValueError(f"expected {k} truncation orders, got {len(ps)}")
    if any(p < 0 for p in ps):
        raise ValueError("truncation orders must be nonnegative")
    return ps


def _support_mask(support, shape: tuple[int, ...]) -> np.ndarray:
    if isinstance(support, np.ndarray) and support.dtype == bool:
        if support.shape != shape:
            raise ValueError(f"support mask shape {support.shape} does not match grid {shape}")
        return support
    mask = np.zeros(shape, dtype=bool)
    for js in support:
        js = tuple(js)
        if len(js) != len(shape) or any(not 0 <= j < n for j, n in zip(js, shape)):
            raise ValueError(f"support index {js} outside grid {shape}")
        mask[js] = True
    return mask


def _prepare(idx, weights, trunc, interval_length, support):
    if not interval_length > 0:
        raise ValueError("interval_length must be positive")
    idx, weights = fold_zero_levels(idx, weights)
    k = len(idx)
    if k > MAX_MULTIPLICITY:
        raise ValueError(f"multiplicity {k} exceeds {MAX_MULTIPLICITY}")
    ps = _orders(trunc, k)
    C = float_coefficients(weights, ps, interval_length)
    if support is not None:
        C = np.where(_support_mask(support, C.shape), C, 0.0)
    return idx, ps, C


def coefficient_count(idx, weights=None, trunc=0, interval_length: float = 1.0, support=None) -> int:
    """Number of nonzero coefficients entering :func:`approx_iterated`."""
    _, _, C = _prepare(idx, weights, trunc, interval_length, support)
    return int(np.count_nonzero(C))


_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def _partition_term(C, idx, zs, part) -> np.ndarray:
    """Contract ``C`` with one pair partition: diagonals on pairs, ``zeta`` on singles."""
    k = C.ndim
    letters = list(_LETTERS[:k])
    slices = [slice(None)] * k
    for a, b in part.pairs:
        n = min(C.shape[a - 1], C.shape[b - 1])
        slices[a - 1] = slices[b - 1] = slice(0, n)
        letters[b - 1] = letters[a - 1]
    sub = C[tuple(slices)]
    operands = [sub]
    terms = ["".join(letters)]
    for q in part.singles:
        operands.append(zs[q - 1])
        terms.append("..." + letters[q - 1])
    return np.einsum(",".join(terms) + "->...", *operands)


def _bracket_tensor(C, idx, zs, parts) -> np.ndarray:
    """Per-coefficient multiplier (batch + grid shape) for compensated summation."""
    k = C.ndim
    batch = zs[0].shape[:-1]
    out = np.zeros(batch + C.shape)
    for part in parts:
        term = np.ones(batch + C.shape)
        for q in part.singles:
            shape = [1] * k
            shape[q - 1] = C.shape[q - 1]
            term = term * zs[q - 1].reshape(batch + tuple(shape))
        for a, b in part.pairs:
            shape = [1] * k
            shape[a - 1], shape[b - 1] = C.shape[a - 1], C.shape[b - 1]
            term = term * np.eye(C.shape[a - 1], C.shape[b - 1]).reshape(shape)
        out += (-1) ** part.r * term
    return out


def approx_iterated(
    idx: Sequence[int],
    weights: WeightSpec | None,
    trunc,
    noise: NoiseMatrix,
    interval_length: float,
    support=None,
    compensated: bool = False,
):
    """Truncated expansion of ``J[psi]^{(i_1..i_k)}`` on the given draws.

    ``idx`` lists ``i_1..i_k`` innermost first; ``0`` marks a time
    integration and may only appear at either end.  ``trunc`` is one
    order for all levels or one per stochastic level.  ``support``
    (a boolean grid mask or an iterable of ``(j_1..j_k)`` tuples)
    restricts the sum to part of the grid.  ``compensated`` switches to
    exactly rounded summation over the grid.
    """
    idx, ps, C = _prepare(idx, weights, trunc, interval_length, support)
    zs = [noise.zeta(i, p) for i, p in zip(idx, ps)]
    parts = [
        part
        for part in all_pair_partitions(len(idx))
        if all(idx[a - 1] == idx[b - 1] for a, b in part.pairs)
    ]
    if compensated:
        terms = C * _bracket_tensor(C, idx, zs, parts)
        flat = terms.reshape(terms.shape[: terms.ndim - C.ndim] + (-1,))
        if flat.ndim == 1:
            return math.fsum(flat)
        out = np.array([math.fsum(row) for row in flat.reshape(-1, flat.shape[-1])])
        return out.reshape(flat.shape[:-1])
    total = 0.0
    for part in parts:
        total = total + (-1) ** part.r * _partition_term(C, idx, zs, part)
    return total if np.ndim(total) else float(total)


# ---------------------------------------------------------------------------
# equal-index closed forms

_HERMITE = {
    1: ((1, 1, 0),),
    2: ((1, 2, 0), (-1, 0, 1)),
    3: ((1, 3, 0), (-3, 1, 1)),
    4: ((1, 4, 0), (-6, 2, 1), (3, 0, 2)),
    5: ((1, 5, 0), (-10, 3, 1), (15, 1, 2)),
    6: ((1, 6, 0), (-15, 4, 1), (45, 2, 2), (-15, 0, 3)),
}


def hermite_exact(delta, Delta, k: int):
    """``J[psi^{(k)}]^{(i..i)}`` from ``delta = int psi dw`` and ``Delta = int psi^2 ds``.

    Terms are ``(coef, power of delta, power of Delta)``, divided by ``k!``.
    """
    if k not in _HERMITE:
        raise ValueError(f"closed form available for k = 1..6, got {k}")
    if np.any(np.asarray(Delta) <= 0):
        raise ValueError("Delta must be positive")
    delta = np.asarray(delta, dtype=float)
    total = sum(c * delta**a * np.asarray(Delta, dtype=float) ** b for c, a, b in _HERMITE[k])
    out = total / math.factorial(k)
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# low-order closed forms


def i1_approx(r: int, noise: NoiseMatrix, interval_length: float):
    """``int_t^T dw^{(r)} = sqrt(T-t) zeta_0``."""
    return math.sqrt(interval_length) * noise.z(r, 0)


def i01_approx(r: int, noise: NoiseMatrix, interval_length: float):
    """``int_t^T int_t^s dtau dw_s^{(r)}``; exact with two basis terms."""
    z = noise.zeta(r, 1)
    return interval_length**1.5 / 2 * (z[..., 0] + z[..., 1] / math.sqrt(3))


def i10_approx(r: int, noise: NoiseMatrix, interval_length: float):
    """``int_t^T int_t^s dw_tau^{(r)} ds``; exact with two basis terms."""
    z = noise.zeta(r, 1)
    return interval_length**1.5 / 2 * (z[..., 0] - z[..., 1] / math.sqrt(3))


def i11_approx(r1: int, r2: int, q: int, noise: NoiseMatrix, interval_length: float):
    """Double integral ``int dw^{(r2)} int dw^{(r1)}`` truncated at ``q``."""
    a, b = noise.zeta(r1, q), noise.zeta(r2, q)
    total = a[..., 0] * b[..., 0]
    for i in range(1, q + 1):
        total = total + (a[..., i - 1] * b[..., i] - a[..., i] * b[..., i - 1]) / math.sqrt(4 * i * i - 1)
    return interval_length / 2 * (total - (1.0 if r1 == r2 else 0.0))


def j01_approx(r1: int, r2: int, q: int, noise: NoiseMatrix, interval_length: float):
    """``int_t^T (t-s) int_t^s dw^{(r1)} dw_s^{(r2)}`` truncated at ``q``; needs draws up to ``q+2``.

    The embedded double integral always keeps at least its first
    antisymmetric pair, so ``q = 0`` and ``q = 1`` differ only in the
    ``i = 1`` diagonal and ``(1, 3)`` cross terms.
    """
    a, b = noise.zeta(r1, q + 2), noise.zeta(r2, q + 2)
    bracket = a[..., 0] * b[..., 1] / math.sqrt(3)
    for i in range(q + 1):
        root = (2 * i + 3) * math.sqrt((2 * i + 1) * (2 * i + 5))
        bracket = bracket + ((i + 2) * a[..., i] * b[..., i + 2] - (i + 1) * a[..., i + 2] * b[..., i]) / root
        bracket = bracket - a[..., i] * b[..., i] / ((2 * i - 1) * (2 * i + 3))
    head = -interval_length / 2 * i11_approx(r1, r2, max(q, 1), noise, interval_length)
    return head - interval_length**2 / 4 * bracket


def j10_approx(r1: int, r2: int, q: int, noise: NoiseMatrix, interval_length: float):
    """``int_t^T int_t^s (t-tau) dw_tau^{(r1)} dw_s^{(r2)}`` truncated at ``q``; needs draws up to ``q+2``."""
    a, b = noise.zeta(r1, q + 2), noise.zeta(r2, q + 2)
    bracket = b[..., 0] * a[..., 1] / math.sqrt(3)
    for i in range(q + 1):
        root = (2 * i + 3) * math.sqrt((2 * i + 1) * (2 * i + 5))
        bracket = bracket + ((i + 1) * b[..., i + 2] * a[..., i] - (i + 2) * b[..., i] * a[..., i + 2]) / root
        bracket = bracket + a[..., i] * b[..., i] / ((2 * i - 1) * (2 * i + 3))
    head = -interval_length / 2 * i11_approx(r1, r2, max(q, 1), noise, interval_length)
    return head - interval_length**2 / 4 * bracket


#: Weights (innermost first) of the two weighted double integrals.
J01_WEIGHTS = WeightSpec([Weight.unit(), Weight.elapsed(coef=-1)])
J10_WEIGHTS = WeightSpec([Weight.elapsed(coef=-1), Weight.unit()])


def _i11_support(q: int) -> set[tuple[int, int]]:
    out = {(0, 0)}
    for i in range(1, q + 1):
        out |= {(i - 1, i), (i, i - 1)}
    return out


def j01_support(q: int) -> set[tuple[int, int]]:
    """Grid points ``(j_1, j_2)`` used by :func:`j01_approx`."""
    out = _i11_support(max(q, 1))
    for i in range(q + 1):
        out |= {(i, i + 2), (i + 2, i), (i, i)}
    return out


def j10_support(q: int) -> set[tuple[int, int]]:
    """Grid points ``(j_1, j_2)`` used by :func:`j10_approx`."""
    return {(b, a) for a, b in j01_support(q)}
