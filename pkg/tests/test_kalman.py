import numpy as np
import pytest
import scipy.linalg

from sdbounds import kalman, symmat
from sdbounds.concentration import AwParams, GenParams
from sdbounds.ensemble import SensorPool, uniform
from sdbounds.errors import DimMismatch, HypothesisViolated, NoConvergence, NotPsd, TrivialLowerScale
from sdbounds.kalman import LtiSystem

from conftest import random_pd, random_psd


def random_system(rng, d):
    return LtiSystem(rng.uniform(0, 1, (d, d)), random_pd(rng, d))


def test_system_validation():
    with pytest.raises(DimMismatch):
        LtiSystem(np.eye(2), np.eye(3))
    with pytest.raises(NotPsd):
        LtiSystem(np.eye(2), np.diag([1.0, 0.0]))


def test_system_json_roundtrip(rng):
    sys = random_system(rng, 3)
    back = LtiSystem.from_json(sys.to_json())
    np.testing.assert_array_equal(back.A, sys.A)
    np.testing.assert_array_equal(back.Q, sys.Q)


def test_f_map_matches_gain_form(rng):
    for _ in range(20):
        d = int(rng.integers(1, 5))
        sys = random_system(rng, d)
        P = random_psd(rng, d)
        C = rng.standard_normal((2, d))
        R = random_pd(rng, 2)
        Xi = C.T @ np.linalg.solve(R, C)
        np.testing.assert_allclose(kalman.f_map(sys, P, Xi), kalman.riccati_step_gain_form(sys, P, C, R),
                                   rtol=1e-9, atol=1e-10)


def test_f_map_no_information_is_prediction(rng):
    sys = random_system(rng, 3)
    P = random_psd(rng, 3)
    np.testing.assert_allclose(kalman.f_map(sys, P, np.zeros((3, 3))), sys.A @ P @ sys.A.T + sys.Q,
                               rtol=1e-10)


def test_steady_state_matches_scipy_dare(rng):
    for _ in range(10):
        d = int(rng.integers(1, 5))
        sys = random_system(rng, d)
        Xi = random_pd(rng, d)
        C, R = symmat.psd_sqrt(Xi), np.eye(d)
        # predicted-covariance DARE, then one measurement update
        Sig = scipy.linalg.solve_discrete_are(sys.A.T, C.T, sys.Q, R)
        ref = Sig - Sig @ C.T @ np.linalg.solve(R + C @ Sig @ C.T, C @ Sig)
        res = kalman.steady_state(sys, Xi)
        np.testing.assert_allclose(res.matrix, ref, rtol=1e-8, atol=1e-10)


def test_steady_state_initialization_independent(rng):
    sys = random_system(rng, 3)
    Xi = random_pd(rng, 3)
    sols = [kalman.steady_state(sys, Xi, P_init=P0).matrix for P0 in (None, sys.Q, 10 * np.eye(3))]
    for S in sols[1:]:
        assert symmat.spectral_norm(S - sols[0]) <= 1e-8 * max(1.0, symmat.spectral_norm(sols[0]))


def test_steady_state_no_convergence():
    sys = LtiSystem(np.array([[2.0]]), np.eye(1))
    with pytest.raises(NoConvergence) as exc:
        kalman.steady_state(sys, np.zeros((1, 1)), max_iter=50)
    assert exc.value.iterations == 50 and exc.value.last is not None


def test_batch_matches_single(rng):
    sys = random_system(rng, 3)
    Xis = np.stack([random_pd(rng, 3) for _ in range(5)])
    P, iters, res, conv = kalman.steady_state_batch(sys, Xis)
    assert conv.all() and np.all(res <= kalman.TOL)
    for k in range(5):
        single = kalman.steady_state(sys, Xis[k])
        np.testing.assert_array_equal(P[k], single.matrix)
        assert iters[k] == single.iterations


@pytest.mark.parametrize("a,q,xi", [(1.0, 1.0, 1.0), (0.5, 2.0, 0.1), (3.0, 0.2, 5.0), (0.9, 1.0, 0.0)])
def test_scalar_closed_form(a, q, xi):
    sys = LtiSystem(np.array([[a]]), np.array([[q]]))
    p = kalman.scalar_fixed_point(a, q, xi)
    # a slowly contracting map leaves error ~ tol / (1 - a^2) at the default tol
    it = kalman.steady_state(sys, np.array([[xi]]), tol=1e-13).matrix[0, 0]
    assert p == pytest.approx(it, rel=1e-10)
    # root of xi a^2 p^2 + (1 + xi q - a^2) p - q = 0
    assert xi * a * a * p * p + (1 + xi * q - a * a) * p - q == pytest.approx(0.0, abs=1e-12)


def test_scalar_single_step_and_fixed_point():
    sys = LtiSystem(np.eye(1), np.eye(1))
    # one step from 1: (1/2 + 1)^{-1}
    assert kalman.f_map(sys, np.eye(1), np.eye(1))[0, 0] == pytest.approx(2 / 3, rel=1e-14)
    # fixed point solves p^2 + p - 1 = 0
    assert kalman.scalar_fixed_point(1.0, 1.0, 1.0) == pytest.approx((np.sqrt(5) - 1) / 2, rel=1e-14)


def test_detectability():
    A = np.diag([1.5, 0.5])
    assert kalman.detectability_check(A, [[1.0, 0.0]])
    assert not kalman.detectability_check(A, [[0.0, 1.0]])
    assert kalman.detectability_check(np.diag([0.5, 0.2]), np.zeros((0, 2)))
    # marginal eigenvalue counts as unstable
    assert not kalman.detectability_check(np.eye(1), np.zeros((0, 1)))


def test_ss_bounds_order(rng):
    sys = random_system(rng, 3)
    pool = SensorPool(rng.uniform(size=(20, 3)), np.full(20, 0.5))
    p = uniform(20)
    from sdbounds.ensemble import expected_info, rho_min
    ez, rho = expected_info(pool, p), rho_min(pool, p)
    aw = AwParams.solve(3, 0.05, 2000, rho, p)
    U, L = kalman.ss_bounds_aw(sys, aw, ez)
    assert symmat.loewner_leq(L.matrix, U.matrix)
    gp = GenParams.solve(3, 0.05, 2000, rho, p, 0.5)
    Us, Ls = kalman.ss_bounds_gen(sys, gp, ez)
    # tighter one-sided scales sit inside the two-sided ones here
    assert symmat.loewner_leq(Ls.matrix, Us.matrix)
    assert symmat.loewner_leq(Us.matrix, U.matrix)


def test_ss_bounds_gen_trivial_lower():
    sys = LtiSystem(np.array([[0.5]]), np.eye(1))
    gp = GenParams.solve(1, 0.05, 10, 1.0, [1.0])
    with pytest.raises(TrivialLowerScale):
        kalman.ss_bounds_gen(sys, gp, np.eye(1))


def test_ss_bounds_require_detectable_mean():
    sys = LtiSystem(np.diag([2.0, 0.5]), np.eye(2))
    aw = AwParams.solve(2, 0.05, 2000, 1.0, [1.0])
    with pytest.raises(HypothesisViolated):
        kalman.ss_bounds_aw(sys, aw, np.diag([0.0, 1.0]))
