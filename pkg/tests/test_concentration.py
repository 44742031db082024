import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdbounds import concentration as cc
from sdbounds.ensemble import SensorPool, expected_info, random_pool, rho_min, uniform
from sdbounds.errors import InsufficientSamples, InvalidRefinement, InvalidScalar, Undefined

P3 = uniform(3)


def test_aw_epsilon_worked_example():
    # sqrt(4 * 3 * ln(120) / 240)
    assert cc.solve_epsilon_aw(3, 0.05, 240, 3.0) == pytest.approx(0.48925922284521, rel=1e-12)


def test_aw_scales_worked_example():
    params = cc.AwParams.solve(3, 0.05, 240, 3.0, P3)
    lo, hi = cc.aw_bounds(params, np.eye(3))
    assert lo.scale == pytest.approx(122.5777865171, rel=1e-10)
    assert hi.scale == pytest.approx(357.4222134829, rel=1e-10)
    assert lo.two_sided and hi.two_sided and lo.confidence == pytest.approx(0.95)


def test_sample_complexities_worked_example():
    assert cc.sample_complexity_aw(3, 0.05, 3.0) == pytest.approx(12 * math.log(120), rel=1e-12)
    assert cc.sample_complexity_aw(3, 0.05, 3.0) == pytest.approx(57.4499, abs=1e-4)
    assert cc.sample_complexity_gen(3, 0.05, 3.0) == pytest.approx(24.5661, abs=1e-4)
    assert cc.nontriviality_threshold(3, 0.05, 3.0) == pytest.approx(49.1321, abs=1e-4)


def test_aw_infeasible_below_kappa():
    with pytest.raises(InsufficientSamples) as exc:
        cc.solve_epsilon_aw(3, 0.05, 57, 3.0)
    assert exc.value.required == pytest.approx(12 * math.log(120))
    assert cc.solve_epsilon_aw(3, 0.05, 58, 3.0) < 1.0


def test_gen_epsilon_worked_example():
    # zeta = 1, rho = 3: r = 2/3 and eps = sqrt(12 ln 60 / (2/3 * 240))
    eps = cc.solve_epsilon_gen(3, 0.05, 240, 3.0, 1.0)
    assert eps == pytest.approx(math.sqrt(12 * math.log(60) / 160), rel=1e-12)
    assert eps == pytest.approx(0.55414, abs=1e-5)


def test_gen_epsilon_cap():
    # eps <= 2 iff gamma >= rho ln(d/delta) / r
    need = 3.0 * math.log(60)
    with pytest.raises(InsufficientSamples):
        cc.solve_epsilon_gen(3, 0.05, math.floor(need), 3.0)
    assert cc.solve_epsilon_gen(3, 0.05, math.ceil(need), 3.0) <= 2.0


def test_r_factor():
    assert cc.r_factor(4.0, 1.0) == 0.75
    assert cc.r_factor(4.0, 0.0) == 1.0
    with pytest.raises(Undefined):
        cc.r_factor(1.0, 1.0)


@pytest.mark.parametrize("zeta", [-0.1, 1.1])
def test_zeta_range(zeta):
    with pytest.raises(InvalidRefinement):
        cc.solve_epsilon_gen(3, 0.05, 240, 3.0, zeta)


def test_rho_equal_zeta_squared_rejected():
    with pytest.raises(InvalidRefinement):
        cc.solve_epsilon_gen(3, 0.05, 240, 1.0, 1.0)


def test_param_equality_enforced():
    with pytest.raises(InvalidScalar):
        cc.AwParams(3, 0.05, 240, 3.0, 0.5, P3)
    with pytest.raises(InvalidScalar):
        cc.GenParams(3, 0.05, 240, 3.0, 0.5, P3, 0.0)


def test_certificate_check():
    pool = SensorPool(np.eye(2), np.ones(2))
    p = [0.5, 0.5]
    assert cc.check_certificate(pool, p, 2.0) == pytest.approx(2.0)
    with pytest.raises(InvalidScalar):
        cc.GenParams.solve(2, 0.05, 240, 1.5, p, pool=pool)


def test_zeta_zero_reduces_to_aw():
    p = uniform(4)
    ez = np.diag([1.0, 2.0, 3.0, 4.0])
    gen = cc.GenParams.solve(4, 0.02, 300, 2.5, p, 0.0)
    aw = cc.AwParams.solve(4, 0.04, 300, 2.5, p)
    assert gen.epsilon == pytest.approx(aw.epsilon_bar, rel=1e-12)
    for g, a in zip(cc.gen_bounds(gen, ez), cc.aw_bounds(aw, ez)):
        np.testing.assert_allclose(g.matrix, a.matrix, rtol=1e-12)


def test_triviality_flag_flips_at_threshold():
    # (rho - zeta^2) 4 ln(d/delta) with rho = 3, zeta = 0: ~49.13
    p = P3
    below = cc.GenParams.solve(3, 0.05, 49, 3.0, p)
    above = cc.GenParams.solve(3, 0.05, 50, 3.0, p)
    lo_b, _ = cc.gen_bounds(below, np.eye(3))
    lo_a, _ = cc.gen_bounds(above, np.eye(3))
    assert lo_b.trivial and not lo_a.trivial


def test_bounds_for_pool_uses_rho_min():
    pool = random_pool(3, 30, 0.5, seed=3)
    p = uniform(30)
    ez, rho, aw, gen = cc.bounds_for_pool(pool, p, 2000, 0.05, zeta=0.5)
    assert rho == pytest.approx(rho_min(pool, p))
    np.testing.assert_allclose(ez, expected_info(pool, p))
    assert aw is not None and gen.zeta == 0.5


@settings(max_examples=80, deadline=None)
@given(d=st.integers(1, 50), delta=st.floats(1e-4, 0.5), rho=st.floats(1.0, 50.0),
       gamma=st.integers(1, 10**6), z1=st.floats(0, 1), z2=st.floats(0, 1))
def test_gen_bound_tightens_with_zeta(d, delta, rho, gamma, z1, z2):
    # r * eps = sqrt(4 rho r ln(d/delta) / gamma) decreases as zeta grows
    if d / delta <= 1:
        return
    z1, z2 = sorted((z1, z2))
    try:
        e1 = cc.solve_epsilon_gen(d, delta, gamma, rho, z1)
        e2 = cc.solve_epsilon_gen(d, delta, gamma, rho, z2)
    except (InsufficientSamples, InvalidRefinement):
        return
    assert cc.r_factor(rho, z2) * e2 <= cc.r_factor(rho, z1) * e1 * (1 + 1e-12)


@settings(max_examples=80, deadline=None)
@given(d=st.integers(1, 50), delta=st.floats(1e-4, 0.9), rho=st.floats(1.0, 50.0))
def test_kappa_identity(d, delta, rho):
    lhs = cc.sample_complexity_aw(d, delta, rho)
    rhs = 2 * cc.sample_complexity_gen(d, delta, rho, 0.0) + 4 * rho * math.log(2)
    assert lhs == pytest.approx(rhs, rel=1e-9)
