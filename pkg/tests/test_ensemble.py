import json

import numpy as np
import pytest

from sdbounds import ensemble
from sdbounds.ensemble import Sensor, SensorPool
from sdbounds.errors import (
    DimMismatch,
    IndexOutOfRange,
    InvalidBudget,
    InvalidDistribution,
    InvalidSensor,
)


def test_info_matrix_rank_one():
    Z = ensemble.info_matrix(Sensor([1.0, 2.0], 0.5))
    np.testing.assert_allclose(Z, [[2.0, 4.0], [4.0, 8.0]])
    assert np.linalg.matrix_rank(Z) == 1


@pytest.mark.parametrize("s2", [0.0, -1.0, np.inf, np.nan])
def test_sensor_rejects_bad_variance(s2):
    with pytest.raises(InvalidSensor):
        Sensor([1.0], s2)


def test_pool_validation():
    with pytest.raises(DimMismatch):
        SensorPool(np.ones((3, 2)), np.ones(2))
    with pytest.raises(InvalidSensor):
        SensorPool(np.ones((2, 2)), np.array([1.0, 0.0]))
    with pytest.raises(DimMismatch):
        SensorPool.from_sensors([Sensor([1.0], 1.0), Sensor([1.0, 2.0], 1.0)])


def test_pool_json_roundtrip():
    pool = ensemble.random_pool(3, 7, 0.5, seed=4)
    back = SensorPool.from_json(pool.to_json())
    np.testing.assert_array_equal(back.C, pool.C)
    np.testing.assert_array_equal(back.sigma2, pool.sigma2)
    obj = json.loads(pool.to_json())
    assert set(obj) == {"d", "sensors"} and obj["d"] == 3


def test_expected_info_matches_loop(rng):
    pool = ensemble.random_pool(3, 9, 0.7, seed=1)
    p = rng.dirichlet(np.ones(9))
    ref = sum(p[i] * ensemble.info_matrix(s) for i, s in enumerate(pool.sensors))
    np.testing.assert_allclose(ensemble.expected_info(pool, p), ref, atol=1e-13)


def test_distribution_validation():
    with pytest.raises(InvalidDistribution):
        ensemble.as_distribution([0.5, 0.6])
    with pytest.raises(InvalidDistribution):
        ensemble.as_distribution([1.5, -0.5])
    with pytest.raises(DimMismatch):
        ensemble.as_distribution([1.0], eta=2)


def test_draw_selection_reproducible():
    pool = ensemble.random_pool(2, 5, 1.0, seed=0)
    p = ensemble.uniform(5)
    a = ensemble.draw_selection(pool, p, 50, seed=3, trial=2)
    b = ensemble.draw_selection(pool, p, 50, seed=3, trial=2)
    c = ensemble.draw_selection(pool, p, 50, seed=3, trial=1)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    np.testing.assert_array_equal(ensemble.draw_selections(pool, p, 50, 3, 1, start=2)[0], a)


def test_draw_selection_never_hits_zero_probability():
    pool = ensemble.random_pool(2, 4, 1.0, seed=0)
    p = np.array([0.0, 0.5, 0.5, 0.0])
    sel = ensemble.draw_selections(pool, p, 200, seed=9, trials=20)
    assert set(np.unique(sel)) <= {1, 2}


def test_draw_frequencies_binomial():
    # every category count should sit inside a 4-sigma binomial band
    pool = ensemble.random_pool(2, 4, 1.0, seed=0)
    p = np.array([0.1, 0.2, 0.3, 0.4])
    n = 200_000
    counts = np.bincount(ensemble.draw_selection(pool, p, n, seed=11), minlength=4)
    sd = np.sqrt(n * p * (1 - p))
    assert np.all(np.abs(counts - n * p) <= 4 * sd)


def test_budget_validation():
    pool = ensemble.random_pool(2, 3, 1.0, seed=0)
    with pytest.raises(InvalidBudget):
        ensemble.draw_selection(pool, ensemble.uniform(3), 0, seed=0)


def test_selection_sum_counts_multiplicity():
    pool = SensorPool(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([1.0, 2.0]))
    S = ensemble.selection_sum(pool, np.array([0, 0, 1]))
    np.testing.assert_allclose(S, np.diag([2.0, 0.5]))
    with pytest.raises(IndexOutOfRange):
        ensemble.selection_sum(pool, np.array([0, 2]))


def test_selection_sum_batch_matches_single(rng):
    pool = ensemble.random_pool(3, 6, 0.5, seed=2)
    sels = rng.integers(0, 6, size=(4, 10))
    batch = ensemble.selection_sum(pool, sels)
    for s, B in zip(sels, batch):
        np.testing.assert_allclose(B, ensemble.selection_sum(pool, s), atol=1e-13)


def test_rho_single_sensor_is_one():
    pool = SensorPool(np.array([[1.0, 2.0, 3.0]]), np.array([0.3]))
    assert ensemble.rho_min(pool, [1.0]) == pytest.approx(1.0, abs=1e-12)


def test_rho_orthogonal_pair_is_two():
    pool = SensorPool(np.eye(2), np.ones(2))
    assert ensemble.rho_min(pool, [0.5, 0.5]) == pytest.approx(2.0, rel=1e-12)


def test_rho_is_tightest_certificate(rng):
    # by bisection: rho_min certifies Z_i <= rho E[Z], 0.99 rho_min does not
    pool = ensemble.random_pool(3, 12, 0.5, seed=5)
    p = rng.dirichlet(np.ones(12))
    rho = ensemble.rho_min(pool, p)
    ez = ensemble.expected_info(pool, p)
    Z = pool.info_matrices()
    from sdbounds.symmat import loewner_leq
    assert np.all(loewner_leq(Z, rho * ez, 1e-9))
    assert not np.all(loewner_leq(Z, 0.99 * rho * ez, 1e-12))
    lo, hi = 1.0, 2 * rho
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if np.all(loewner_leq(Z, mid * ez, 1e-12)):
            hi = mid
        else:
            lo = mid
    assert hi == pytest.approx(rho, rel=1e-6)


def test_rho_orthogonal_weighted_closed_form():
    # E[Z] = diag(p), whitened Z_i = e_i e_i^T / p_i, so rho = 1 / min_i p_i
    p = np.array([0.7, 0.2, 0.1])
    pool = SensorPool(np.eye(3), np.ones(3))
    assert ensemble.rho_min(pool, p) == pytest.approx(10.0, rel=1e-12)
    # zero-probability sensors do not enter the certificate
    assert ensemble.rho_min(pool, [0.5, 0.5, 0.0]) == pytest.approx(2.0, rel=1e-12)


def test_whitened_support_mean_is_projector():
    pool = SensorPool(np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0], [0.0, 0.0, 1.0]]), np.ones(3))
    p = np.array([0.3, 0.7, 0.0])
    W, idx, Y = ensemble.whitened_support(pool, p)
    np.testing.assert_array_equal(idx, [0, 1])
    ey = np.einsum("k,kij->ij", p[idx], Y)
    np.testing.assert_allclose(ey @ ey, ey, atol=1e-12)
    assert np.trace(ey) == pytest.approx(1.0)
