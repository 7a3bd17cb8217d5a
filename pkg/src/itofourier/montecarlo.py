"""Brute-force Monte Carlo checks on a fine time grid.

Each replication draws its own Wiener path from a stream derived from
``(seed, replication)``; the reference iterated integral and the
Gaussian coefficients of the expansion are both computed from that one
path, so their difference estimates the mean-square error directly.

Grid bias is tracked by repeating every computation on the path
coarsened by a factor of two.  With ``e_N`` the per-path error at
resolution ``N``, ``delta = E[(e_N - e_{N/2})^2]`` estimates the squared
distance between the grid error and its continuous limit (exactly so
when the bias halves with the step).  Doubling that root-mean-square
distance for safety, the Cauchy-Schwarz inequality gives the allowance
``4 delta + 4 sqrt(E delta)`` around a target ``E``.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import expansion as ex
from .coefficients import WeightSpec
from .legendre import shifted_basis
from .mse import E_q, mse_exact_distinct
from .qwiener import (
    MultilinearOperator,
    QWienerSpec,
    approx_generic,
    bound_thm4,
    check_orthogonality_inputs,
    synthetic_operator,
)

__all__ = [
    "GridPath",
    "MseEstimate",
    "Case",
    "CaseResult",
    "ValidationRow",
    "replication_generator",
    "simulate_reference",
    "couple_noise",
    "run_cases",
    "estimate_mse",
    "check_identity",
    "identity_envelope",
    "IDENTITIES",
    "orthogonality_test",
    "suite_errors",
    "suite_identities",
    "suite_orthogonality",
    "suite_qwiener",
    "SUITES",
]


def replication_generator(seed: int, rep: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(rep,))))


@dataclass(frozen=True)
class GridPath:
    """Wiener increments on a uniform grid; shape ``(..., m, N)``."""

    increments: np.ndarray
    interval_length: float
    t: float = 0.0

    def __post_init__(self):
        if not self.interval_length > 0:
            raise ValueError("interval_length must be positive")
        inc = np.asarray(self.increments, dtype=float)
        if inc.ndim < 2 or inc.shape[-1] < 2:
            raise ValueError("need at least two steps and a component axis")
        object.__setattr__(self, "increments", inc)

    @classmethod
    def simulate(cls, m: int, N: int, interval_length: float, seed: int, reps: Sequence[int] | int = 0) -> GridPath:
        """Paths for the given replication numbers, stacked on a leading axis.

        A single integer gives one unbatched path.
        """
        scale = math.sqrt(interval_length / N)
        if isinstance(reps, (int, np.integer)):
            return cls(replication_generator(seed, int(reps)).standard_normal((m, N)) * scale, interval_length)
        inc = np.stack([replication_generator(seed, int(r)).standard_normal((m, N)) for r in reps])
        return cls(inc * scale, interval_length)

    @property
    def N(self) -> int:
        return self.increments.shape[-1]

    @property
    def m(self) -> int:
        return self.increments.shape[-2]

    @property
    def dtau(self) -> float:
        return self.interval_length / self.N

    @property
    def T(self) -> float:
        return self.t + self.interval_length

    def midpoints(self) -> np.ndarray:
        return self.t + (np.arange(self.N) + 0.5) * self.dtau

    def dw(self, i: int) -> np.ndarray:
        if not 1 <= i <= self.m:
            raise IndexError(f"component {i} outside 1..{self.m}")
        return self.increments[..., i - 1, :]

    def coarsen(self) -> GridPath:
        """Same path on a grid with half as many steps."""
        if self.N % 2:
            raise ValueError("coarsening needs an even number of steps")
        inc = self.increments[..., 0::2] + self.increments[..., 1::2]
        return GridPath(inc, self.interval_length, self.t)


def _exclusive_cumsum(x: np.ndarray) -> np.ndarray:
    return np.cumsum(x, axis=-1) - x


def simulate_reference(idx: Sequence[int], weights: WeightSpec | None, path: GridPath) -> np.ndarray:
    """Left-point Ito sum over strictly increasing grid indices.

    Deterministic weights are evaluated at cell midpoints; ``i = 0``
    levels integrate against ``dtau``.  The mean-square bias is
    ``O(dtau)``.
    """
    idx = tuple(int(i) for i in idx)
    k = len(idx)
    if not 1 <= k <= 4:
        raise ValueError("reference simulation supports k = 1..4")
    weights = WeightSpec.unit(k) if weights is None else weights
    if weights.k != k:
        raise ValueError("weights and indices disagree on k")
    s = path.midpoints()
    acc = None
    for level, (i, w) in enumerate(zip(idx, weights.weights)):
        psi = w(s, path.t, path.T)
        step = psi * (path.dtau if i == 0 else path.dw(i))
        acc = step if acc is None else _exclusive_cumsum(acc) * step
    return acc.sum(axis=-1)


def couple_noise(path: GridPath, p_max: int) -> ex.NoiseMatrix:
    """``zeta_j^{(i)} = sum_l phi_j(mid_l) dw_l^{(i)}`` on the same path."""
    phi = shifted_basis(p_max, path.midpoints(), path.t, path.T)
    return ex.NoiseMatrix(path.increments @ phi.T)


# ---------------------------------------------------------------------------
# batched engine


@dataclass(frozen=True)
class Case:
    """A per-path error ``reference(path) - approx(noise, dt)``.

    ``ref_key`` identifies the reference so cases sharing it reuse one
    computation per batch.
    """

    name: str
    reference: Callable[[GridPath], np.ndarray]
    approx: Callable[[ex.NoiseMatrix, float], np.ndarray]
    ref_key: object = None
    target: float | None = None


@dataclass(frozen=True)
class CaseResult:
    """Per-replication errors at resolution ``N`` and ``N/2``; ``errors`` may carry trailing axes."""

    name: str
    errors: np.ndarray
    coarse_errors: np.ndarray


@dataclass(frozen=True)
class MseEstimate:
    estimate: float
    se: float
    R: int
    grid_delta: float = 0.0

    def envelope(self, target: float | None = None) -> float:
        """Grid-bias allowance ``4 delta + 4 sqrt(E delta)``."""
        E = self.estimate if target is None else max(target, 0.0)
        return 4.0 * self.grid_delta + 4.0 * math.sqrt(E * self.grid_delta)

    def tolerance(self, target: float | None = None) -> float:
        return max(3.0 * self.se, self.envelope(target))


def _run_block(cases: Sequence[Case], m: int, p_max: int, N: int, dt: float, seed: int, reps) -> list[tuple[np.ndarray, np.ndarray]]:
    fine = GridPath.simulate(m, N, dt, seed, reps)
    out = []
    per_grid = []
    for path in (fine, fine.coarsen()):
        noise = couple_noise(path, p_max)
        refs: dict = {}
        errs = []
        for case in cases:
            key = case.ref_key if case.ref_key is not None else case.name
            if key not in refs:
                refs[key] = case.reference(path)
            errs.append(refs[key] - case.approx(noise, dt))
        per_grid.append(errs)
    for a, b in zip(*per_grid):
        out.append((a, b))
    return out


def run_cases(
    cases: Sequence[Case],
    m: int,
    p_max: int,
    R: int,
    N: int,
    interval_length: float,
    seed: int,
    batch: int = 250,
    threads: int = 1,
) -> list[CaseResult]:
    """Evaluate every case on ``R`` shared paths.

    Replications are split into fixed blocks of ``batch``; blocks may run
    on any number of threads and are concatenated in order, so results
    do not depend on ``threads``.
    """
    if R < 1 or N < 2 or N % 2:
        raise ValueError("need R >= 1 and an even N >= 2")
    blocks = [range(a, min(a + batch, R)) for a in range(0, R, batch)]
    run = lambda reps: _run_block(cases, m, p_max, N, interval_length, seed, reps)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, blocks))
    else:
        results = [run(b) for b in blocks]
    out = []
    for n, case in enumerate(cases):
        fine = np.concatenate([res[n][0] for res in results])
        coarse = np.concatenate([res[n][1] for res in results])
        out.append(CaseResult(case.name, fine, coarse))
    return out


def _mse_from(result: CaseResult) -> MseEstimate:
    sq = result.errors**2
    if sq.ndim > 1:
        sq = sq.reshape(sq.shape[0], -1).sum(axis=1)
        dd = ((result.errors - result.coarse_errors) ** 2).reshape(sq.shape[0], -1).sum(axis=1)
    else:
        dd = (result.errors - result.coarse_errors) ** 2
    R = len(sq)
    return MseEstimate(float(np.mean(sq)), float(np.std(sq, ddof=1) / math.sqrt(R)), R, float(np.mean(dd)))


def _iterated_case(name, idx, weights, trunc, target=None) -> Case:
    return Case(
        name,
        lambda path: simulate_reference(idx, weights, path),
        lambda noise, dt: ex.approx_iterated(idx, weights, trunc, noise, dt),
        ref_key=("J", tuple(idx), weights),
        target=target,
    )


def estimate_mse(
    idx: Sequence[int],
    weights: WeightSpec | None,
    trunc,
    R: int,
    N: int,
    seed: int,
    interval_length: float = 1.0,
    approx: Callable[[ex.NoiseMatrix, float], np.ndarray] | None = None,
    batch: int = 250,
    threads: int = 1,
) -> MseEstimate:
    """Coupled Monte Carlo estimate of ``E[(J - J^p)^2]``.

    ``approx`` overrides the generic expansion, e.g. with a closed form.
    """
    if R < 1000:
        raise ValueError("need at least 1000 replications")
    idx = tuple(int(i) for i in idx)
    case = _iterated_case("mse", idx, weights, trunc)
    if approx is not None:
        case = Case("mse", case.reference, approx, case.ref_key)
    m = max(idx)
    p_max = max(np.atleast_1d(trunc)) + 2
    (res,) = run_cases([case], m, int(p_max), R, N, interval_length, seed, batch, threads)
    return _mse_from(res)


# ---------------------------------------------------------------------------
# pathwise identities

IDENTITIES = ("ito-product", "time-weighted", "product-integral", "triple-product")


def identity_envelope(tag: str, interval_length: float, N: int) -> float:
    """``8 * scale / sqrt(N)``.

    ``scale * N^{-1/2}`` is the standard deviation of the leading
    quadratic-variation residual when all components coincide:
    ``sqrt(2) (T-t)`` for the two-factor product, ``sqrt(18) (T-t)^{3/2}``
    for the three-factor one; the ``ds`` identities use ``(T-t)^2``.
    """
    if tag not in IDENTITIES:
        raise ValueError(f"unknown identity {tag!r}")
    scale = {
        "ito-product": math.sqrt(2) * interval_length,
        "triple-product": math.sqrt(18) * interval_length**1.5,
    }.get(tag, interval_length**2)
    return 8.0 * scale / math.sqrt(N)


def check_identity(tag: str, path: GridPath, r1: int = 1, r2: int = 2, r3: int = 3) -> np.ndarray:
    """Residual ``|LHS - RHS|`` of an Ito-calculus identity on the grid.

    ``ito-product``: ``W1 W2 = I(r1 r2) + I(r2 r1) + 1{r1=r2}(T-t)``.
    ``time-weighted``: ``int_t^T I(r1 r2)_s ds = (T-t) I(r1 r2) + J01(r1 r2)``.
    ``product-integral``: ``int_t^T W1_s W2_s ds = (T-t) W1 W2 + J01(r1 r2) + J01(r2 r1) - 1{r1=r2}(T-t)^2/2``.
    ``triple-product``: ``W1 W2 W3`` equals the six ordered triple integrals plus,
    for every equal pair, the two mixed integrals of ``ds`` and the third component.
    """
    if tag not in IDENTITIES:
        raise ValueError(f"unknown identity {tag!r}")
    dt = path.interval_length
    same = 1.0 if r1 == r2 else 0.0
    W1, W2 = path.dw(r1).sum(axis=-1), path.dw(r2).sum(axis=-1)
    if tag == "ito-product":
        lhs = W1 * W2
        rhs = simulate_reference((r1, r2), None, path) + simulate_reference((r2, r1), None, path) + same * dt
    elif tag == "time-weighted":
        lhs = simulate_reference((r1, r2, 0), None, path)
        rhs = dt * simulate_reference((r1, r2), None, path) + simulate_reference((r1, r2), ex.J01_WEIGHTS, path)
    elif tag == "product-integral":
        left1 = _exclusive_cumsum(path.dw(r1))
        left2 = _exclusive_cumsum(path.dw(r2))
        lhs = (left1 * left2).sum(axis=-1) * path.dtau
        rhs = (
            dt * W1 * W2
            + simulate_reference((r1, r2), ex.J01_WEIGHTS, path)
            + simulate_reference((r2, r1), ex.J01_WEIGHTS, path)
            - same * dt**2 / 2
        )
    else:  # triple-product
        r = (r1, r2, r3)
        lhs = W1 * W2 * path.dw(r3).sum(axis=-1)
        rhs = sum(simulate_reference(tuple(r[a] for a in perm), None, path) for perm in itertools.permutations(range(3)))
        for a, b, c in ((0, 1, 2), (0, 2, 1), (1, 2, 0)):
            if r[a] == r[b]:
                rhs = rhs + simulate_reference((0, r[c]), None, path) + simulate_reference((r[c], 0), None, path)
    return np.abs(lhs - rhs)


# ---------------------------------------------------------------------------
# orthogonality of error terms


def _tuple_case(name: str, r: tuple[int, ...], trunc) -> Case:
    return _iterated_case(name, r, None, trunc)


def _z_from(a: CaseResult, b: CaseResult) -> tuple[float, float, float]:
    prod = a.errors * b.errors
    R = len(prod)
    mean = float(np.mean(prod))
    se = float(np.std(prod, ddof=1) / math.sqrt(R))
    return mean, se, (mean / se if se > 0 else 0.0)


def orthogonality_test(
    r: Sequence[int],
    m: Sequence[int],
    trunc: int,
    R: int,
    seed: int,
    N: int = 1000,
    interval_length: float = 1.0,
    batch: int = 500,
    threads: int = 1,
) -> float:
    """z-score of the mean product of two truncation errors.

    Rejects tuples with equal multisets, for which the errors are correlated.
    """
    r, m = tuple(r), tuple(m)
    if not check_orthogonality_inputs(r, m):
        raise ValueError(f"{r} and {m} are the same multiset; the errors are not orthogonal")
    cases = [_tuple_case("a", r, trunc), _tuple_case("b", m, trunc)]
    a, b = run_cases(cases, max(r + m), int(trunc), R, N, interval_length, seed, batch, threads)
    return _z_from(a, b)[2]


# ---------------------------------------------------------------------------
# validation suites


@dataclass(frozen=True)
class ValidationRow:
    case: str
    target: float
    estimate: float
    se: float
    tolerance: float
    verdict: str

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def _row(case: str, target: float, estimate: float, se: float, tolerance: float, ok: bool) -> ValidationRow:
    return ValidationRow(case, target, estimate, se, tolerance, "pass" if ok else "fail")


def suite_errors(R: int = 100_000, N: int = 10_000, seed: int = 0, interval_length: float = 0.25, batch: int = 250, threads: int = 1) -> list[ValidationRow]:
    """Closed-form errors against coupled Monte Carlo, plus zero-error calibration cases."""
    dt = interval_length
    cases = []
    for q in (0, 2, 5):
        cases.append(_iterated_case(f"k2-distinct q={q}", (1, 2), None, q, mse_exact_distinct(2, None, q, dt).value))
    for q in (0, 2):
        cases.append(_iterated_case(f"k3-distinct q={q}", (1, 2, 3), None, q, mse_exact_distinct(3, None, q, dt).value))
    for q in (0, 2):
        ref01 = lambda path: simulate_reference((1, 2), ex.J01_WEIGHTS, path)  # noqa: E731
        ref10 = lambda path: simulate_reference((1, 2), ex.J10_WEIGHTS, path)  # noqa: E731
        cases.append(Case(f"J01 q={q}", ref01, lambda z, d, q=q: ex.j01_approx(1, 2, q, z, d), ("J01",), E_q(q, dt)))
        cases.append(Case(f"J10 q={q}", ref10, lambda z, d, q=q: ex.j10_approx(1, 2, q, z, d), ("J10",), E_q(q, dt)))
    cases.append(_iterated_case("calibration k1", (1,), None, 0, 0.0))
    cases.append(Case("calibration I01", lambda p: simulate_reference((0, 1), None, p), lambda z, d: ex.i01_approx(1, z, d), ("I01",), 0.0))
    cases.append(Case("calibration I10", lambda p: simulate_reference((1, 0), None, p), lambda z, d: ex.i10_approx(1, z, d), ("I10",), 0.0))
    results = run_cases(cases, 3, 7, R, N, dt, seed, batch, threads)
    rows = []
    for case, res in zip(cases, results):
        est = _mse_from(res)
        tol = est.tolerance(case.target)
        rows.append(_row(case.name, case.target, est.estimate, est.se, tol, abs(est.estimate - case.target) <= tol))
    return rows


def suite_identities(paths: int = 100, N: int = 10_000, seed: int = 0, interval_length: float = 0.25) -> list[ValidationRow]:
    """Largest residual over ``paths`` grid paths for each identity, equal and distinct components."""
    path = GridPath.simulate(3, N, interval_length, seed, range(paths))
    rows = []
    for tag in IDENTITIES:
        env = identity_envelope(tag, interval_length, N)
        combos = ((1, 1, 1), (1, 1, 2), (1, 2, 3)) if tag == "triple-product" else ((1, 1), (1, 2))
        for r in combos:
            res = check_identity(tag, path, *r)
            worst = float(res.max())
            se = float(res.std(ddof=1) / math.sqrt(paths))
            label = ",".join(map(str, r))
            rows.append(_row(f"{tag} r=({label})", 0.0, worst, se, env, worst <= env))
    return rows


ORTHOGONALITY_PAIRS = (
    ((1, 2), (1, 3)),
    ((1, 1), (2, 2)),
    ((1, 2), (2, 3)),
    ((1, 1), (1, 2)),
    ((1, 2), (3, 3)),
    ((1, 2, 3), (1, 2)),
    ((1, 1, 2), (1, 2)),
    ((1, 1, 2), (1, 2, 2)),
    ((1, 2, 3), (1, 1, 3)),
    ((1, 2, 3), (3,)),
    ((1, 1), (1,)),
    ((2, 1), (3, 1)),
)


def suite_orthogonality(R: int = 100_000, N: int = 1000, seed: int = 0, interval_length: float = 1.0, q: int = 2, batch: int = 500, threads: int = 1) -> list[ValidationRow]:
    """Mean products of truncation errors for tuples with different multisets; pass iff ``|z| <= 4``."""
    tuples = sorted({t for pair in ORTHOGONALITY_PAIRS for t in pair}, key=lambda t: (len(t), t))
    cases = [_tuple_case(str(t), t, q) for t in tuples]
    results = dict(zip(tuples, run_cases(cases, 3, q, R, N, interval_length, seed, batch, threads)))
    rows = []
    for r, m in ORTHOGONALITY_PAIRS:
        mean, se, z = _z_from(results[r], results[m])
        rows.append(_row(f"{r} vs {m}", 0.0, mean, se, 4 * se, abs(z) <= 4))
    return rows


def _qwiener_case(name: str, op: MultilinearOperator, spec: QWienerSpec, trunc) -> Case:
    k, M = op.arity, op.M

    def reference(path):
        out = 0.0
        root = spec.sqrt_lambda
        for modes in np.ndindex(*(M,) * k):
            r = tuple(x + 1 for x in modes)
            J = simulate_reference(r, None, path)
            out = out + np.multiply.outer(J, op.column(r) * np.prod(root[list(modes)]))
        return out

    return Case(
        name,
        reference,
        lambda noise, dt: approx_generic(op, spec, None, trunc, noise, dt),
        ref_key=("Q", k, M),
    )


def suite_qwiener(R: int = 20_000, N: int = 2000, seed: int = 0, interval_length: float = 0.5, M: int = 2, n: int = 3, batch: int = 500, threads: int = 1) -> list[ValidationRow]:
    """Monte Carlo H-norm errors of multi-mode approximations against the trace-class bound."""
    spec = QWienerSpec.power_law(M, 2.0)
    rows = []
    for k in (2, 3):
        op = synthetic_operator(k, n, M, seed)
        cases = [_qwiener_case(f"k={k} p={p}", op, spec, p) for p in (0, 1, 3)]
        results = run_cases(cases, M, 3, R, N, interval_length, seed + k, batch, threads)
        for p, res in zip((0, 1, 3), results):
            est = _mse_from(res)
            bound = bound_thm4(k, op.L, spec, p, interval_length)
            rows.append(_row(f"k={k} p={p} M={M}", bound, est.estimate, est.se, 0.0, est.estimate <= bound))
        bounds = [bound_thm4(k, op.L, QWienerSpec(QWienerSpec.power_law(mm).eigenvalues, spec.trace), 1, interval_length) for mm in (1, 2, 8)]
        rows.append(_row(f"k={k} bound M-independence", bounds[0], bounds[-1], 0.0, 0.0, len(set(bounds)) == 1))
    return rows


SUITES = {
    "errors": suite_errors,
    "identities": suite_identities,
    "orthogonality": suite_orthogonality,
    "qwiener": suite_qwiener,
}
