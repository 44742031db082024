"""Semi-definite concentration bounds for sums of i.i.d. p.s.d. random matrices.

Two inequalities are implemented side by side:

* the two-sided Ahlswede-Winter style bound ("AW"), parametrized by
  ``(d, delta_bar, gamma, rho_bar, epsilon_bar, p)`` with
  ``gamma * epsilon_bar**2 / rho_bar == 4 * log(2 d / delta_bar)``;
* the generalized one-sided bounds with a refinement factor ``zeta``,
  parametrized by ``(d, delta, gamma, rho, epsilon, p, zeta)`` with
  ``r * gamma * epsilon**2 / rho == 4 * log(d / delta)`` and
  ``r = 1 - zeta**2 / rho``.

Setting ``zeta = 0`` and ``delta_bar = 2 delta`` recovers the AW bound.
"""

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from . import symmat
from .ensemble import as_distribution, expected_info, rho_min
from .errors import (
    DimMismatch,
    InsufficientSamples,
    InvalidRefinement,
    InvalidScalar,
    Undefined,
)

_REL = 1e-9


def _check_delta(delta, name="delta"):
    if not 0.0 < delta < 1.0:
        raise InvalidScalar(f"{name} must lie in (0, 1), got {delta}")


def _check_common(d, gamma, rho):
    if int(d) != d or d < 1:
        raise InvalidScalar(f"d must be a positive integer, got {d}")
    if int(gamma) != gamma or gamma < 1:
        raise InvalidScalar(f"gamma must be a positive integer, got {gamma}")
    if not rho >= 1.0:
        raise InvalidScalar(f"rho must be >= 1, got {rho}")


def _check_zeta(rho, zeta):
    if not 0.0 <= zeta <= 1.0:
        raise InvalidRefinement(f"zeta must lie in [0, 1], got {zeta}")
    if not rho > zeta**2:
        raise InvalidRefinement(f"need rho > zeta**2, got rho={rho}, zeta={zeta}")


def r_factor(rho, zeta):
    """``1 - zeta**2 / rho``."""
    if rho == zeta**2:
        raise Undefined(f"r(rho, zeta) is undefined at rho == zeta**2 == {rho}")
    return 1.0 - zeta**2 / rho


def sample_complexity_aw(d, delta_bar, rho_bar):
    """Minimum draw count of the AW bound: ``4 rho_bar log(2d / delta_bar)``.

    Feasibility needs ``gamma`` strictly above this value.
    """
    return 4.0 * rho_bar * math.log(2.0 * d / delta_bar)


def sample_complexity_gen(d, delta, rho, zeta=0.0):
    """Minimum draw count of the generalized bound.

    Returns ``rho**2 / (rho - zeta**2) * 2 log(d / delta)``, the published
    expression. Note that inverting the parameter equality at
    ``epsilon = 2`` gives the smaller threshold
    ``rho**2 / (rho - zeta**2) * log(d / delta)``; :func:`solve_epsilon_gen`
    enforces the latter, so this value is conservative by a factor of two.
    """
    _check_zeta(rho, zeta)
    return rho**2 / (rho - zeta**2) * 2.0 * math.log(d / delta)


def nontriviality_threshold(d, delta, rho, zeta=0.0):
    """``(rho - zeta**2) * 4 log(d / delta)``.

    The one-sided lower bound ``(1 - r eps) gamma E[Z]`` is non-trivial iff
    ``gamma`` strictly exceeds this value.
    """
    return (rho - zeta**2) * 4.0 * math.log(d / delta)


def solve_epsilon_aw(d, delta_bar, gamma, rho_bar):
    """Solve the AW equality for ``epsilon_bar``; it must land in (0, 1)."""
    _check_delta(delta_bar, "delta_bar")
    _check_common(d, gamma, rho_bar)
    eps = math.sqrt(4.0 * rho_bar * math.log(2.0 * d / delta_bar) / gamma)
    if not eps < 1.0:
        kappa = sample_complexity_aw(d, delta_bar, rho_bar)
        raise InsufficientSamples(
            f"epsilon_bar = {eps:.6g} >= 1: need gamma > {kappa:.6g}, got {gamma}",
            required=kappa,
        )
    return eps


def solve_epsilon_gen(d, delta, gamma, rho, zeta=0.0):
    """Solve ``r gamma eps**2 / rho = 4 log(d / delta)`` for ``eps`` in (0, 2]."""
    _check_delta(delta)
    _check_common(d, gamma, rho)
    _check_zeta(rho, zeta)
    r = r_factor(rho, zeta)
    eps = math.sqrt(4.0 * rho * math.log(d / delta) / (r * gamma))
    if not eps <= 2.0:
        needed = rho * math.log(d / delta) / r
        raise InsufficientSamples(
            f"epsilon = {eps:.6g} > 2: need gamma >= {needed:.6g}, got {gamma}",
            required=needed,
        )
    return eps


@dataclass(frozen=True, eq=False)
class AwParams:
    d: int
    delta_bar: float
    gamma: int
    rho_bar: float
    epsilon_bar: float
    p: np.ndarray

    def __post_init__(self):
        _check_delta(self.delta_bar, "delta_bar")
        _check_common(self.d, self.gamma, self.rho_bar)
        if not 0.0 < self.epsilon_bar < 1.0:
            raise InsufficientSamples(f"epsilon_bar must lie in (0, 1), got {self.epsilon_bar}")
        lhs = self.gamma * self.epsilon_bar**2 / self.rho_bar
        rhs = 4.0 * math.log(2.0 * self.d / self.delta_bar)
        if abs(lhs - rhs) > _REL * rhs:
            raise InvalidScalar(f"parameter equality violated: {lhs} != {rhs}")
        object.__setattr__(self, "p", as_distribution(self.p))

    @classmethod
    def solve(cls, d, delta_bar, gamma, rho_bar, p, pool=None):
        """Build a feasible tuple by solving for ``epsilon_bar``.

        When ``pool`` is given, ``rho_bar`` is checked as a valid certificate
        (``Z_i <= rho_bar E[Z]`` on the support of ``p``).
        """
        if pool is not None:
            check_certificate(pool, p, rho_bar)
        return cls(d, delta_bar, gamma, rho_bar, solve_epsilon_aw(d, delta_bar, gamma, rho_bar), p)

    @property
    def kappa(self):
        return sample_complexity_aw(self.d, self.delta_bar, self.rho_bar)


@dataclass(frozen=True, eq=False)
class GenParams:
    d: int
    delta: float
    gamma: int
    rho: float
    epsilon: float
    p: np.ndarray
    zeta: float = 0.0

    def __post_init__(self):
        _check_delta(self.delta)
        _check_common(self.d, self.gamma, self.rho)
        _check_zeta(self.rho, self.zeta)
        if not 0.0 < self.epsilon <= 2.0:
            raise InsufficientSamples(f"epsilon must lie in (0, 2], got {self.epsilon}")
        lhs = self.r * self.gamma * self.epsilon**2 / self.rho
        rhs = 4.0 * math.log(self.d / self.delta)
        if abs(lhs - rhs) > _REL * rhs:
            raise InvalidScalar(f"parameter equality violated: {lhs} != {rhs}")
        object.__setattr__(self, "p", as_distribution(self.p))

    @classmethod
    def solve(cls, d, delta, gamma, rho, p, zeta=0.0, pool=None):
        if pool is not None:
            check_certificate(pool, p, rho)
        return cls(d, delta, gamma, rho, solve_epsilon_gen(d, delta, gamma, rho, zeta), p, zeta)

    @property
    def r(self):
        return r_factor(self.rho, self.zeta)

    @property
    def kappa(self):
        return sample_complexity_gen(self.d, self.delta, self.rho, self.zeta)

    @property
    def threshold(self):
        return nontriviality_threshold(self.d, self.delta, self.rho, self.zeta)

    def lower_scale(self):
        return (1.0 - self.r * self.epsilon) * self.gamma

    def upper_scale(self):
        return (1.0 + self.r * self.epsilon) * self.gamma


def check_certificate(pool, p, rho, tol=1e-8):
    """Raise :class:`InvalidScalar` unless ``Z_i <= rho E[Z]`` for all supported i."""
    rmin = rho_min(pool, p)
    if rho < rmin * (1.0 - tol):
        raise InvalidScalar(f"rho = {rho} is below the smallest valid certificate {rmin}")
    return rmin


@dataclass(frozen=True, eq=False)
class SdBound:
    """``scale * E[Z]`` bounding the random sum from one side."""

    matrix: np.ndarray
    scale: float
    confidence: float
    side: Literal["lower", "upper"]
    two_sided: bool
    trivial: bool = None

    def __post_init__(self):
        object.__setattr__(self, "trivial", bool(self.scale <= 0))


def _ez_for(params, ez):
    ez = symmat.sym(ez)
    if ez.shape[-1] != params.d:
        raise DimMismatch(f"E[Z] has dimension {ez.shape[-1]}, params say d={params.d}")
    return ez


def aw_bounds(params, ez):
    """Two-sided AW envelope: ``(1 - eps_bar) gamma E[Z]`` and ``(1 + eps_bar) gamma E[Z]``.

    Both sides hold jointly with probability at least ``1 - delta_bar``.
    """
    ez = _ez_for(params, ez)
    lo = (1.0 - params.epsilon_bar) * params.gamma
    hi = (1.0 + params.epsilon_bar) * params.gamma
    conf = 1.0 - params.delta_bar
    return (SdBound(lo * ez, lo, conf, "lower", True),
            SdBound(hi * ez, hi, conf, "upper", True))


def gen_bounds(params, ez):
    """One-sided envelopes ``(1 -+ r eps) gamma E[Z]``, each at confidence ``1 - delta``.

    The lower envelope is returned even when its scale is non-positive, with
    ``trivial`` set, so callers can reject it explicitly.
    """
    ez = _ez_for(params, ez)
    lo, hi = params.lower_scale(), params.upper_scale()
    conf = 1.0 - params.delta
    return (SdBound(lo * ez, lo, conf, "lower", False),
            SdBound(hi * ez, hi, conf, "upper", False))


def bounds_for_pool(pool, p, gamma, delta, zeta=0.0, rho=None):
    """Convenience: solve both tuples for a pool with ``rho`` defaulting to ``rho_min``.

    Returns ``(ez, rho, aw_params_or_None, gen_params)``. AW uses
    ``delta_bar = delta``; an infeasible AW tuple is reported as ``None``.
    """
    p = as_distribution(p, pool.eta)
    ez = expected_info(pool, p)
    rho = rho_min(pool, p) if rho is None else rho
    try:
        aw = AwParams.solve(pool.d, delta, gamma, rho, p)
    except InsufficientSamples:
        aw = None
    gen = GenParams.solve(pool.d, delta, gamma, rho, p, zeta)
    return ez, rho, aw, gen
