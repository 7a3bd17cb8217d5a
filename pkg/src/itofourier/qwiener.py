"""Finite-mode Q-Wiener integrals and the composite integrals I0..I8.

The Hilbert space is ``R^n``.  Operators and their Frechet derivatives at
the frozen point are dense tensors whose trailing axes are the mode
indices, so ``B[:, r]`` is ``B(Z) e_r`` and ``dB[:, a, r]`` is the
derivative in direction ``e_a`` applied to ``e_r``.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import zeta

from . import expansion as ex
from .coefficients import WeightSpec
from .mse import E_q, g_q, parseval_bracket

__all__ = [
    "QWienerSpec",
    "MultilinearOperator",
    "CompositeOperators",
    "COMPOSITE_KINDS",
    "COMPOSITE_ARITY",
    "approx_generic",
    "bound_thm4",
    "compose",
    "composite_scalar",
    "approx_composite",
    "composite_error_bound",
    "check_orthogonality_inputs",
    "synthetic_operator",
    "synthetic_composite",
    "load_config",
]


@dataclass(frozen=True)
class QWienerSpec:
    """Retained eigenvalues ``lambda_1..lambda_M`` and the full-spectrum trace."""

    eigenvalues: tuple[float, ...]
    trace: float

    def __init__(self, eigenvalues: Sequence[float], trace: float | None = None):
        lam = tuple(float(x) for x in eigenvalues)
        if not lam:
            raise ValueError("need at least one mode")
        if any(not x > 0 for x in lam):
            raise ValueError("eigenvalues must be positive")
        tr = math.fsum(lam) if trace is None else float(trace)
        if tr < math.fsum(lam) * (1 - 1e-12):
            raise ValueError("trace cannot be smaller than the retained eigenvalue sum")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "trace", tr)

    @classmethod
    def power_law(cls, M: int, nu: float = 2.0, c: float = 1.0) -> QWienerSpec:
        """``lambda_r = c r^-nu`` with trace ``c zeta(nu)`` over all modes."""
        if not nu > 1:
            raise ValueError("nu must exceed 1 for a trace-class spectrum")
        if M < 1 or not c > 0:
            raise ValueError("need M >= 1 and c > 0")
        lam = [c * r ** (-nu) for r in range(1, M + 1)]
        return cls(lam, float(c * zeta(nu, 1)))

    @property
    def M(self) -> int:
        return len(self.eigenvalues)

    @property
    def sqrt_lambda(self) -> np.ndarray:
        return np.sqrt(np.array(self.eigenvalues))


@dataclass(frozen=True)
class MultilinearOperator:
    """Dense tensor ``T[h, r_1, .., r_k]`` with a bound ``L`` on squared column norms."""

    tensor: np.ndarray
    L: float = field(default=-1.0)

    def __post_init__(self):
        t = np.array(self.tensor, dtype=float)
        if t.ndim < 2:
            raise ValueError("tensor needs an output axis and at least one mode axis")
        if len(set(t.shape[1:])) != 1:
            raise ValueError("all mode axes must have the same length")
        t.setflags(write=False)
        object.__setattr__(self, "tensor", t)
        sharp = self.max_column_norm_sq()
        if self.L < 0:
            object.__setattr__(self, "L", sharp)
        elif self.L < sharp * (1 - 1e-12):
            raise ValueError(f"L={self.L} is below the largest squared column norm {sharp}")

    @property
    def arity(self) -> int:
        return self.tensor.ndim - 1

    @property
    def n(self) -> int:
        return self.tensor.shape[0]

    @property
    def M(self) -> int:
        return self.tensor.shape[1]

    def max_column_norm_sq(self) -> float:
        return float(np.max(np.sum(self.tensor**2, axis=0)))

    def column(self, modes: Sequence[int]) -> np.ndarray:
        """``T(e_{r_1}, .., e_{r_k})`` for 1-based modes."""
        return self.tensor[(slice(None),) + tuple(r - 1 for r in modes)]

    def truncate(self, M: int) -> MultilinearOperator:
        return MultilinearOperator(self.tensor[(slice(None),) + (slice(0, M),) * self.arity])


def _mode_tuples(M: int, k: int):
    return list(itertools.product(range(1, M + 1), repeat=k))


def _scalar_grid(func: Callable, M: int, k: int, batch_shape, threads: int) -> np.ndarray:
    """Evaluate ``func(modes)`` on every mode tuple into a ``batch + (M,)*k`` array.

    Each entry is computed independently, so the worker count cannot
    change the values.
    """
    tuples = _mode_tuples(M, k)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(func, tuples))
    else:
        values = [func(t) for t in tuples]
    out = np.empty(tuple(batch_shape) + (M,) * k)
    for t, v in zip(tuples, values):
        out[(Ellipsis,) + tuple(r - 1 for r in t)] = v
    return out


def _contract(tensor: np.ndarray, spec: QWienerSpec, S: np.ndarray) -> np.ndarray:
    """``sum_r T[:, r] sqrt(lambda_r1..lambda_rk) S[..., r]``."""
    k = tensor.ndim - 1
    weighted = tensor.copy()
    root = spec.sqrt_lambda[: tensor.shape[1]]
    for axis in range(1, k + 1):
        shape = [1] * tensor.ndim
        shape[axis] = len(root)
        weighted = weighted * root.reshape(shape)
    letters = "abcdefgh"[:k]
    return np.einsum(f"h{letters},...{letters}->...h", weighted, S)


def _check_dims(op: MultilinearOperator, spec: QWienerSpec, noise: ex.NoiseMatrix):
    if op.M > spec.M:
        raise ValueError(f"operator has {op.M} modes but the spectrum only {spec.M}")
    if noise.m < op.M:
        raise ValueError(f"noise has {noise.m} components, need at least {op.M}")


def approx_generic(
    op: MultilinearOperator,
    spec: QWienerSpec,
    weights: WeightSpec | None,
    trunc,
    noise: ex.NoiseMatrix,
    interval_length: float,
    threads: int = 1,
) -> np.ndarray:
    """Truncated multi-mode integral ``sum_r T(e_r) sqrt(lambda_r) J^{(r)p}``."""
    _check_dims(op, spec, noise)
    k = op.arity
    if weights is not None and weights.k != k:
        raise ValueError(f"weights describe k={weights.k}, operator arity is {k}")
    S = _scalar_grid(
        lambda r: ex.approx_iterated(r, weights, trunc, noise, interval_length),
        op.M, k, noise.batch_shape, threads,
    )
    return _contract(op.tensor, spec, S)


def bound_thm4(
    k: int,
    L: float,
    spec: QWienerSpec,
    trunc,
    interval_length: float,
    weights: WeightSpec | None = None,
) -> float:
    """``L (k!)^2 (tr Q)^k (I_k - sum C^2)``; the retained mode count does not enter."""
    if L < 0:
        raise ValueError("L must be nonnegative")
    bracket, power = parseval_bracket(k, weights, trunc)
    return L * math.factorial(k) ** 2 * spec.trace**k * float(bracket) * interval_length**power


# ---------------------------------------------------------------------------
# composite integrals

COMPOSITE_KINDS = ("I0", "I1", "I2", "I3", "I4", "I5", "I6", "I7", "I8")
COMPOSITE_ARITY = {"I0": 1, "I1": 1, "I2": 3, "I3": 4, "I4": 4, "I5": 4, "I6": 2, "I7": 2, "I8": 2}
_NEEDS = {
    "I0": ("dB", "F"),
    "I1": ("dF",),
    "I2": ("d2B",),
    "I3": ("d3B",),
    "I4": ("dB", "d2B"),
    "I5": ("dB", "d2B"),
    "I6": ("dB", "dF"),
    "I7": ("d2F",),
    "I8": ("d2B", "F"),
}


@dataclass(frozen=True)
class CompositeOperators:
    """``B(Z)``, ``F(Z)`` and their derivatives at the frozen point as dense arrays.

    Shapes: ``B (n, M)``, ``dB (n, n, M)``, ``d2B (n, n, n, M)``,
    ``d3B (n, n, n, n, M)``, ``F (n,)``, ``dF (n, n)``, ``d2F (n, n, n)``.
    """

    B: np.ndarray
    dB: np.ndarray | None = None
    d2B: np.ndarray | None = None
    d3B: np.ndarray | None = None
    F: np.ndarray | None = None
    dF: np.ndarray | None = None
    d2F: np.ndarray | None = None

    def __post_init__(self):
        B = np.array(self.B, dtype=float)
        if B.ndim != 2:
            raise ValueError("B must be an (n, M) array")
        object.__setattr__(self, "B", B)
        n, M = B.shape
        expected = {
            "dB": (n, n, M), "d2B": (n, n, n, M), "d3B": (n, n, n, n, M),
            "F": (n,), "dF": (n, n), "d2F": (n, n, n),
        }
        for name, shape in expected.items():
            val = getattr(self, name)
            if val is None:
                continue
            arr = np.array(val, dtype=float)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.B.shape[0]

    @property
    def M(self) -> int:
        return self.B.shape[1]

    @classmethod
    def from_dict(cls, data: dict) -> CompositeOperators:
        ops = data.get("operators", data)
        return cls(**{k: ops[k] for k in ("B", "dB", "d2B", "d3B", "F", "dF", "d2F") if k in ops})

    def to_dict(self) -> dict:
        out = {}
        for name in ("B", "dB", "d2B", "d3B", "F", "dF", "d2F"):
            val = getattr(self, name)
            if val is not None:
                out[name] = val.tolist()
        return out


def load_config(path: str | os.PathLike) -> tuple[QWienerSpec, CompositeOperators]:
    """Read a JSON config with ``spectrum`` and ``operators`` sections.

    ``spectrum`` is either ``{"eigenvalues": [...], "trace": x}`` or
    ``{"M": M, "nu": nu, "c": c}`` for a power law.
    """
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    spec_data = data["spectrum"]
    if "eigenvalues" in spec_data:
        spec = QWienerSpec(spec_data["eigenvalues"], spec_data.get("trace"))
    else:
        spec = QWienerSpec.power_law(int(spec_data["M"]), float(spec_data.get("nu", 2.0)), float(spec_data.get("c", 1.0)))
    return spec, CompositeOperators.from_dict(data)


def compose(kind: str, ops: CompositeOperators) -> MultilinearOperator:
    """Operator tensor multiplying the scalar bracket of each composite integral."""
    if kind not in COMPOSITE_KINDS:
        raise ValueError(f"unknown composite kind {kind!r}")
    missing = [name for name in _NEEDS[kind] if getattr(ops, name) is None]
    if missing:
        raise ValueError(f"{kind} needs operator(s) {', '.join(missing)}")
    B = ops.B
    if kind == "I0":
        T = np.einsum("har,a->hr", ops.dB, ops.F)
    elif kind == "I1":
        T = np.einsum("ha,ar->hr", ops.dF, B)
    elif kind == "I2":
        T = np.einsum("habs,ap,bq->hpqs", ops.d2B, B, B)
    elif kind == "I3":
        T = np.einsum("habcs,ap,bq,cr->hpqrs", ops.d3B, B, B, B)
    elif kind == "I4":
        inner = np.einsum("habs,ap,bq->hpqs", ops.d2B, B, B)
        T = np.einsum("has,apqr->hpqrs", ops.dB, inner)
    elif kind == "I5":
        # B''(B e_r3, B'(B e_r2) e_r1) e_r4, stored as T[h, r1, r2, r3, r4]
        inner = np.einsum("bcp,cq->bpq", ops.dB, B)
        T = np.einsum("habs,ar,bpq->hpqrs", ops.d2B, B, inner)
    elif kind == "I6":
        inner = np.einsum("acq,cp->apq", ops.dB, B)
        T = np.einsum("ha,apq->hpq", ops.dF, inner)
    elif kind == "I7":
        T = np.einsum("hab,ap,bq->hpq", ops.d2F, B, B)
    else:  # I8
        T = np.einsum("habq,a,bp->hpq", ops.d2B, ops.F, B)
    return MultilinearOperator(T)


def composite_scalar(kind: str, modes: Sequence[int], q: int, noise: ex.NoiseMatrix, dt: float, cache: dict | None = None):
    """Scalar bracket multiplying ``T(e_r) sqrt(lambda_r)`` for one mode tuple."""
    cache = {} if cache is None else cache

    def I(*r):
        # unit-weight iterated integral of any multiplicity
        key = ("I",) + r
        if key not in cache:
            cache[key] = ex.approx_iterated(r, None, q, noise, dt)
        return cache[key]

    def J01(a, b):
        key = ("J01", a, b)
        if key not in cache:
            cache[key] = ex.j01_approx(a, b, q, noise, dt)
        return cache[key]

    def J10(a, b):
        key = ("J10", a, b)
        if key not in cache:
            cache[key] = ex.j10_approx(a, b, q, noise, dt)
        return cache[key]

    def one(a, b):
        return 1.0 if a == b else 0.0

    if kind == "I0":
        (r1,) = modes
        return ex.i01_approx(r1, noise, dt)
    if kind == "I1":
        (r1,) = modes
        return ex.i10_approx(r1, noise, dt)
    if kind == "I2":
        r1, r2, r3 = modes
        return I(r1, r2, r3) + I(r2, r1, r3) + one(r1, r2) * ex.i01_approx(r3, noise, dt)
    if kind == "I3":
        r1, r2, r3, r4 = modes
        total = 0.0
        for a, b, c in itertools.permutations((r1, r2, r3)):
            total = total + I(a, b, c, r4)
        return (
            total
            - one(r1, r2) * J01(r3, r4)
            - one(r1, r3) * J01(r2, r4)
            - one(r2, r3) * J01(r1, r4)
        )
    if kind == "I4":
        r1, r2, r3, r4 = modes
        return I(r1, r2, r3, r4) + I(r2, r1, r3, r4) - one(r1, r2) * J10(r3, r4)
    if kind == "I5":
        r1, r2, r3, r4 = modes
        return (
            I(r2, r1, r3, r4) + I(r2, r3, r1, r4) + I(r3, r2, r1, r4)
            + one(r1, r3) * (J10(r2, r4) - J01(r2, r4))
            - one(r2, r3) * J10(r1, r4)
        )
    if kind == "I6":
        r1, r2 = modes
        return dt * ex.i11_approx(r1, r2, q, noise, dt) + J01(r1, r2)
    if kind == "I7":
        r1, r2 = modes
        return (
            dt * ex.i1_approx(r1, noise, dt) * ex.i1_approx(r2, noise, dt)
            + J01(r1, r2) + J01(r2, r1)
            - one(r1, r2) * dt**2 / 2
        )
    if kind == "I8":
        r1, r2 = modes
        return -J01(r1, r2)
    raise ValueError(f"unknown composite kind {kind!r}")


def approx_composite(
    kind: str,
    ops: CompositeOperators,
    spec: QWienerSpec,
    q: int,
    noise: ex.NoiseMatrix,
    interval_length: float,
    threads: int = 1,
) -> np.ndarray:
    """Truncated composite integral as an ``H``-vector (batch axes first)."""
    op = compose(kind, ops)
    _check_dims(op, spec, noise)
    k = COMPOSITE_ARITY[kind]
    if threads > 1:
        func = lambda r: composite_scalar(kind, r, q, noise, interval_length)  # noqa: E731
    else:
        cache: dict = {}
        func = lambda r: composite_scalar(kind, r, q, noise, interval_length, cache)  # noqa: E731
    S = _scalar_grid(func, op.M, k, noise.batch_shape, threads)
    return _contract(op.tensor, spec, S)


def composite_error_bound(kind: str, constant: float, spec: QWienerSpec | float, q: int, interval_length: float) -> float:
    """Upper bound on the mean-square H-norm error of a composite approximation."""
    if kind not in COMPOSITE_KINDS:
        raise ValueError(f"unknown composite kind {kind!r}")
    if constant < 0:
        raise ValueError("constant must be nonnegative")
    tr = spec.trace if isinstance(spec, QWienerSpec) else float(spec)
    dt = interval_length
    if kind in ("I0", "I1"):
        return 0.0
    E = E_q(q, dt)
    if kind == "I2":
        b3, p3 = parseval_bracket(3, None, q)
        return 4 * constant * 36 * tr**3 * float(b3) * dt**p3
    if kind in ("I3", "I4", "I5"):
        b4, p4 = parseval_bracket(4, None, q)
        b4 = float(b4) * dt**p4
        a, b = {"I3": (36, 9), "I4": (4, 1), "I5": (9, 9)}[kind]
        return constant * tr**4 * (a * 576 * b4 + b * 4 * E)
    if kind == "I6":
        G = float(g_q(q)) * dt**2
        return 2 * constant * 4 * tr**2 * (dt**2 * G + E)
    if kind == "I7":
        return 4 * constant * 4 * tr**2 * E
    return constant * 4 * tr**2 * E


def check_orthogonality_inputs(r: Sequence[int], m: Sequence[int]) -> bool:
    """True iff the two mode tuples differ as multisets."""
    return Counter(r) != Counter(m)


# ---------------------------------------------------------------------------
# seeded fixtures


def _symmetrize(arr: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    perms = list(itertools.permutations(axes))
    out = np.zeros_like(arr)
    for p in perms:
        order = list(range(arr.ndim))
        for src, dst in zip(axes, p):
            order[src] = dst
        out += np.transpose(arr, order)
    return out / len(perms)


def synthetic_operator(k: int, n: int, M: int, seed: int) -> MultilinearOperator:
    """Random ``k``-linear operator with columns of squared norm about 1."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(k, n, M)))
    return MultilinearOperator(rng.standard_normal((n,) + (M,) * k) / math.sqrt(n))


def synthetic_composite(n: int, M: int, seed: int) -> CompositeOperators:
    """Random ``B``, ``F`` and derivatives, with symmetric higher derivatives."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(n, M)))
    s = 1 / math.sqrt(n)
    return CompositeOperators(
        B=rng.standard_normal((n, M)) * s,
        dB=rng.standard_normal((n, n, M)) * s,
        d2B=_symmetrize(rng.standard_normal((n, n, n, M)) * s, (1, 2)),
        d3B=_symmetrize(rng.standard_normal((n, n, n, n, M)) * s, (1, 2, 3)),
        F=rng.standard_normal(n) * s,
        dF=rng.standard_normal((n, n)) * s,
        d2F=_symmetrize(rng.standard_normal((n, n, n)) * s, (1, 2)),
    )
