from __future__ import annotations

import math
import warnings
from fractions import Fraction as F

import numpy as np
import pytest

from itofourier.expansion import NoiseMatrix, approx_iterated
from itofourier.mse import (
    E_q,
    IndexPattern,
    MseReport,
    UnsupportedPatternError,
    e_q,
    e_q_exact,
    g_q,
    k2_closed_form,
    min_q,
    min_q_table,
    mse_bound,
    mse_exact_case,
    mse_exact_distinct,
    parseval_bracket,
)


def test_bound_examples():
    for p in range(5):
        assert mse_bound(1, None, p).value == 0.0
    assert mse_bound(2, None, 0).exact == F(1, 2)
    assert mse_bound(3, None, 6).value >= mse_exact_distinct(3, None, 6).value


def test_distinct_k2_formula():
    for q in range(8):
        dt = 0.3
        formula = dt**2 / 2 * (0.5 - sum(1 / (4 * i * i - 1) for i in range(1, q + 1)))
        assert mse_exact_distinct(2, None, q, dt).value == pytest.approx(formula, rel=1e-13)
    assert mse_exact_distinct(2, None, 0).exact == F(1, 4)


def test_telescoping_exact():
    for q in range(51):
        assert mse_exact_distinct(2, None, q).exact == k2_closed_form(q)


def test_frozen_higher_order_constants():
    # exact rationals; independently confirmed by nested Gauss-Legendre quadrature
    assert parseval_bracket(3, None, 6) == (F(3754499729, 192008134890), 3)
    assert parseval_bracket(4, None, 2) == (F(234761, 10245312), 4)
    assert parseval_bracket(5, None, 1) == (F(32131, 4233600), 5)


@pytest.mark.parametrize("k", [2, 3, 4, 5])
def test_bracket_strictly_decreasing(k):
    top = 6 if k <= 3 else (4 if k == 4 else 2)
    vals = [parseval_bracket(k, None, p)[0] for p in range(top + 1)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_equal_index_pattern_values():
    assert mse_exact_case((1, 1), 0).value == 0.0
    assert mse_exact_case((1, 1), 12).value <= 1e-3
    assert mse_exact_case((1, 1, 2), 3).exact == F(14464, 800415)
    assert mse_exact_case("aabb", 2).exact == F(576791, 64033200)
    assert mse_exact_case("aabba", 1).exact == F(6427, 1058400)


def test_pattern_sandwich():
    prev = None
    for p in range(6):
        rep = mse_exact_case((1, 1, 2), p)
        assert 0 <= rep.value <= mse_bound(3, None, p).value
        if prev is not None:
            assert rep.value <= prev
        prev = rep.value


def _pythagoras_check(idx, p, P, seed, samples=200_000):
    rng = np.random.default_rng(seed)
    m = max(idx)
    draws = rng.standard_normal((samples, m, P + 1))
    noise = NoiseMatrix(draws)
    diff = approx_iterated(idx, None, P, noise, 1.0) - approx_iterated(idx, None, p, noise, 1.0)
    sq = diff**2
    mean, se = sq.mean(), sq.std(ddof=1) / math.sqrt(samples)
    E = mse_exact_case(idx, p).value - mse_exact_case(idx, P).value
    return mean, se, E


@pytest.mark.parametrize("idx,p,P", [((1, 1), 0, 6), ((1, 2, 3), 1, 4), ((1, 1, 2), 1, 4), ((1, 1, 2, 2), 0, 2), ((1, 1, 2, 2, 1), 0, 1)])
def test_exact_case_against_gaussian_sampling(idx, p, P):
    mean, se, E = _pythagoras_check(idx, p, P, seed=len(idx) * 10 + p)
    assert abs(mean - E) <= 4 * se + 1e-15


def test_unsupported_pattern():
    with pytest.raises(UnsupportedPatternError, match="Monte Carlo"):
        mse_exact_case((1, 2, 1), 2)
    with pytest.raises(UnsupportedPatternError):
        mse_exact_case((1, 1, 1), 2)


def test_pattern_helpers():
    assert IndexPattern.of((5, 5, 2)).labels == (0, 0, 1)
    assert IndexPattern.of("aab") == IndexPattern.of((7, 7, 1))
    assert IndexPattern((0, 0, 1)).classes() == [(1, 2), (3,)]
    assert len(IndexPattern((0, 0, 1)).stabilizer()) == 2


def test_report_validation():
    with pytest.raises(ValueError):
        MseReport(-1.0, "exact", "x", 1.0, (0,))
    rep = mse_exact_distinct(2, None, 1, 0.5).with_estimate(0.1, 0.01)
    assert rep.mc_estimate == 0.1 and rep.kind == "exact"


def test_clamp_warns():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        mse_bound(3, None, 2)


def test_e_q_values():
    assert e_q_exact(0) == F(1, 36)
    assert e_q(10**6) <= 1e-7
    vals = [e_q(q) for q in range(101)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert E_q(2, 0.5) == pytest.approx(e_q(2) * 0.5**4)


def test_e_q_float_paths_agree():
    q = 2001
    exact = float(e_q_exact(q))
    assert e_q(q) == pytest.approx(exact, rel=1e-12)


def test_g_q():
    assert g_q(0) == F(1, 4)
    for q in range(10):
        assert g_q(q) == mse_exact_distinct(2, None, q).exact


def test_min_q():
    assert min_q(3, "0.01956") == 6
    assert min_q(3, "0.02310") == 5
    assert abs(min_q(2, "0.08222") - 19) <= 1
    assert [r.q for r in min_q_table(["0.02310", "0.01956"])] == [234, 327]
    with pytest.raises(ValueError):
        min_q(4, 0.1)


@pytest.mark.parametrize("q", [0, 1, 2, 5, 9])
def test_e_q_is_exact_error_on_closed_form_support(q):
    from itofourier.coefficients import _scale_sq, coefficient_tensor, kernel_norm
    from itofourier.expansion import J01_WEIGHTS, J10_WEIGHTS, j01_support, j10_support

    for weights, support in ((J01_WEIGHTS, j01_support(q)), (J10_WEIGHTS, j10_support(q))):
        grid = coefficient_tensor(weights, q + 2, max_degree=64).cbar
        captured = sum((grid[js] ** 2 * _scale_sq(weights, js) for js in support), F(0))
        assert kernel_norm(weights).exact - captured == e_q_exact(q)
