from __future__ import annotations

import math

import numpy as np
import pytest

from itofourier.expansion import J01_WEIGHTS, j01_approx
from itofourier.montecarlo import (
    IDENTITIES,
    Case,
    GridPath,
    check_identity,
    couple_noise,
    estimate_mse,
    identity_envelope,
    orthogonality_test,
    run_cases,
    simulate_reference,
)
from itofourier.mse import e_q, mse_exact_distinct


def test_grid_path_basics():
    path = GridPath.simulate(2, 100, 0.5, seed=1, reps=range(3))
    assert path.increments.shape == (3, 2, 100)
    assert path.dtau * path.N == pytest.approx(0.5)
    again = GridPath.simulate(2, 100, 0.5, seed=1, reps=range(1, 3))
    assert np.array_equal(again.increments, path.increments[1:])
    coarse = path.coarsen()
    assert coarse.N == 50
    assert np.allclose(coarse.increments.sum(-1), path.increments.sum(-1))
    with pytest.raises(ValueError):
        GridPath(np.zeros((1, 5)), 1.0).coarsen()


def test_k1_reference_telescopes():
    path = GridPath.simulate(1, 1000, 2.0, seed=3)
    assert simulate_reference((1,), None, path) == pytest.approx(path.dw(1).sum())


def test_reference_rejects_large_k():
    path = GridPath.simulate(1, 10, 1.0, seed=0)
    with pytest.raises(ValueError):
        simulate_reference((1,) * 5, None, path)


def test_zeta0_exact_on_grid():
    path = GridPath.simulate(2, 500, 0.7, seed=5, reps=range(4))
    noise = couple_noise(path, 3)
    assert np.allclose(noise.draws[..., 0], path.increments.sum(-1) / math.sqrt(0.7))


def test_coupled_noise_is_standard():
    R = 20_000
    path = GridPath.simulate(2, 400, 1.0, seed=9, reps=range(R))
    z = couple_noise(path, 4).draws
    a = z[:, 0, :]
    gram = a.T @ a / R
    se = np.sqrt(np.var(a[:, :, None] * a[:, None, :], axis=0, ddof=1) / R)
    assert np.all(np.abs(gram - np.eye(5)) <= 3.5 * se + 2e-3)
    corr = np.mean(z[:, 0, :] * z[:, 1, :], axis=0)
    assert np.all(np.abs(corr) <= 4 / math.sqrt(R))


def test_reference_moments():
    R, dt = 20_000, 0.8
    path = GridPath.simulate(2, 500, dt, seed=2, reps=range(R))
    J = simulate_reference((1, 2), None, path)
    se = np.std(J**2, ddof=1) / math.sqrt(R)
    assert abs(np.mean(J**2) - dt**2 / 2) <= 3 * se
    Jii = simulate_reference((1, 1), None, path)
    assert abs(np.mean(Jii)) <= 3 * np.std(Jii, ddof=1) / math.sqrt(R)


def test_estimate_mse_k2_distinct():
    est = estimate_mse((1, 2), None, 2, R=10_000, N=2000, seed=4, interval_length=0.5)
    target = mse_exact_distinct(2, None, 2, 0.5).value
    assert abs(est.estimate - target) <= est.tolerance(target)
    assert est.se == pytest.approx(est.se)
    assert est.R == 10_000


def test_estimate_mse_weighted_q0():
    est = estimate_mse((1, 2), J01_WEIGHTS, 2, R=5000, N=2000, seed=6, interval_length=1.0,
                       approx=lambda z, dt: j01_approx(1, 2, 0, z, dt))
    assert abs(est.estimate - 1 / 36) <= est.tolerance(e_q(0))


def test_estimate_mse_needs_replications():
    with pytest.raises(ValueError):
        estimate_mse((1, 2), None, 1, R=10, N=100, seed=0)


def test_thread_and_batch_invariance():
    case = Case("c", lambda p: simulate_reference((1, 2), None, p), lambda z, dt: j01_approx(1, 2, 1, z, dt) * 0)
    a = run_cases([case], 2, 3, 600, 200, 0.5, seed=7, batch=100, threads=1)[0]
    b = run_cases([case], 2, 3, 600, 200, 0.5, seed=7, batch=100, threads=3)[0]
    assert np.array_equal(a.errors, b.errors)
    assert np.array_equal(a.coarse_errors, b.coarse_errors)
    est1 = estimate_mse((1, 1, 2), None, 1, R=1000, N=200, seed=3, threads=1)
    est2 = estimate_mse((1, 1, 2), None, 1, R=1000, N=200, seed=3, threads=2)
    assert est1 == est2


@pytest.mark.parametrize("tag", IDENTITIES)
def test_identities_small_residual(tag):
    path = GridPath.simulate(3, 4000, 0.5, seed=11, reps=range(20))
    for r in ((1, 1, 1), (1, 2, 3), (2, 1, 1)):
        res = check_identity(tag, path, *r)
        assert res.shape == (20,)
        assert res.max() <= identity_envelope(tag, 0.5, 4000)


def test_identity_residual_shrinks():
    coarse = GridPath.simulate(2, 400, 1.0, seed=2, reps=range(50))
    fine = GridPath.simulate(2, 6400, 1.0, seed=2, reps=range(50))
    assert check_identity("ito-product", fine, 1, 1).mean() < check_identity("ito-product", coarse, 1, 1).mean()


def test_unknown_identity():
    with pytest.raises(ValueError):
        check_identity("nope", GridPath.simulate(1, 10, 1.0, 0))


def test_orthogonality_small():
    z = orthogonality_test((1, 2), (1, 3), 2, R=3000, seed=5, N=200)
    assert abs(z) <= 4
    with pytest.raises(ValueError, match="multiset"):
        orthogonality_test((1, 2), (2, 1), 2, R=100, seed=5, N=50)
