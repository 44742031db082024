"""Filtered error covariance recursions for an LTI system with random sensors.

With information matrix ``Xi = C^T R^{-1} C`` the filtered covariance obeys
``P <- f(P, Xi)`` where ``f(L, Xi) = ((A L A^T + Q)^{-1} + Xi)^{-1}``. The
map is monotone in both arguments, so ordering the information matrices
orders the steady states; that is what turns concentration bounds on the
random sum into bounds on the steady-state covariance.
"""

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import symmat
from .errors import (
    DimMismatch,
    HypothesisViolated,
    InvalidMatrix,
    NoConvergence,
    NotPsd,
    TrivialLowerScale,
)

TOL = 1e-10
MAX_ITER = 10_000
#: Eigenvalues with modulus at or above this are treated as unstable in PBH.
MARGINAL = 1.0 - 1e-12


@dataclass(frozen=True, eq=False)
class LtiSystem:
    """``x+ = A x + w`` with ``w ~ N(0, Q)``, ``Q`` positive definite."""

    A: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        Q = symmat.sym(self.Q)
        if A.shape != Q.shape or A.shape[0] != A.shape[1]:
            raise DimMismatch(f"A has shape {A.shape}, Q has shape {Q.shape}")
        if not np.all(np.isfinite(A)):
            raise InvalidMatrix("A has non-finite entries")
        if symmat.min_eig(Q) <= 0:
            raise NotPsd("process-noise covariance Q must be positive definite")
        A.setflags(write=False)
        Q.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Q", Q)

    @property
    def d(self):
        return self.A.shape[0]

    def to_dict(self):
        return {"A": self.A.tolist(), "Q": self.Q.tolist()}

    @classmethod
    def from_dict(cls, obj):
        return cls(np.array(obj["A"], dtype=float), np.array(obj["Q"], dtype=float))

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


class SteadyStateResult(NamedTuple):
    matrix: np.ndarray
    iterations: int
    residual: float


def f_map(sys, Lambda, Xi):
    """``((A Lambda A^T + Q)^{-1} + Xi)^{-1}``; broadcasts over stacks."""
    Lambda, Xi = symmat.sym(Lambda), symmat.sym(Xi)
    if Lambda.shape[-1] != sys.d or Xi.shape[-1] != sys.d:
        raise DimMismatch("Lambda and Xi must match the system dimension")
    if not np.all(symmat.is_psd(Xi)):
        raise NotPsd("information matrix Xi must be p.s.d.")
    pred = sys.A @ Lambda @ sys.A.T + sys.Q
    return symmat.inv_sym(symmat.inv_sym(pred) + Xi)


def riccati_step(sys, P, Xi):
    """One filtered-covariance update (predict, then absorb information ``Xi``)."""
    return f_map(sys, P, Xi)


def riccati_step_gain_form(sys, P, C, R):
    """Same update written with an explicit output matrix and noise covariance.

    ``Sigma = A P A^T + Q`` followed by
    ``Sigma - Sigma C^T (R + C Sigma C^T)^{-1} C Sigma``.
    """
    S = sys.A @ P @ sys.A.T + sys.Q
    C = np.atleast_2d(C)
    if C.shape[0] == 0:
        return symmat.sym(S)
    G = np.linalg.solve(np.atleast_2d(R) + C @ S @ C.T, C @ S)
    return symmat.sym(S - S @ C.T @ G)


def _residual(new, old):
    return symmat.spectral_norm(new - old) / np.maximum(1.0, symmat.spectral_norm(old))


def steady_state(sys, Xi, P_init=None, tol=TOL, max_iter=MAX_ITER):
    """Iterate ``P <- f(P, Xi)`` from ``P_init`` (default zero) to a fixed point.

    Stops when ``||f(P) - P|| / max(1, ||P||) <= tol``; raises
    :class:`NoConvergence` (carrying the last iterate) after ``max_iter``.
    """
    Xi = symmat.sym(Xi)
    P = np.zeros((sys.d, sys.d)) if P_init is None else symmat.sym(P_init)
    if not symmat.is_psd(P):
        raise NotPsd("initial covariance must be p.s.d.")
    res = np.inf
    for k in range(1, max_iter + 1):
        new = f_map(sys, P, Xi)
        res = float(_residual(new, P))
        P = new
        if res <= tol:
            return SteadyStateResult(P, k, res)
    raise NoConvergence(f"no fixed point after {max_iter} iterations (residual {res:.3e})",
                        last=P, residual=res, iterations=max_iter)


def steady_state_batch(sys, Xis, tol=TOL, max_iter=MAX_ITER):
    """Vectorized :func:`steady_state` from zero over a stack of ``Xi``.

    Each member is frozen once it meets ``tol``. Returns
    ``(P, iterations, residuals, converged)`` as arrays.
    """
    Xis = symmat.sym(Xis)
    if not np.all(symmat.is_psd(Xis)):
        raise NotPsd("information matrices must be p.s.d.")
    n = Xis.shape[0]
    P = np.zeros_like(Xis)
    iters = np.zeros(n, dtype=int)
    res = np.full(n, np.inf)
    active = np.ones(n, dtype=bool)
    At = sys.A.T
    for k in range(1, max_iter + 1):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        pred = sys.A @ P[idx] @ At + sys.Q
        new = symmat.inv_sym(symmat.inv_sym(pred) + Xis[idx])
        r = _residual(new, P[idx])
        P[idx] = new
        res[idx] = r
        iters[idx] = k
        done = r <= tol
        active[idx[done]] = False
    return P, iters, res, ~active


def detectability_check(A, C_rows, rank_tol=1e-9):
    """PBH test: ``rank [lam I - A; C] == d`` at every eigenvalue with ``|lam| >= 1``.

    Marginal eigenvalues count as unstable.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    d = A.shape[0]
    C = np.asarray(C_rows, dtype=float)
    C = C.reshape(-1, d) if C.size else np.zeros((0, d))
    if A.shape != (d, d) or C.shape[1] != d:
        raise DimMismatch(f"A is {A.shape}, C rows have length {C.shape[1]}")
    for lam in np.linalg.eigvals(A):
        if abs(lam) < MARGINAL:
            continue
        M = np.vstack([lam * np.eye(d) - A, C.astype(complex)])
        s = np.linalg.svd(M, compute_uv=False)
        if np.sum(s > rank_tol * max(1.0, s[0])) < d:
            return False
    return True


def _solve_pair(sys, xi_upper, xi_lower, tol, max_iter):
    return steady_state(sys, xi_upper, tol=tol, max_iter=max_iter), \
        steady_state(sys, xi_lower, tol=tol, max_iter=max_iter)


def _check_mean_detectable(sys, ez):
    if not detectability_check(sys.A, symmat.psd_sqrt(ez)):
        raise HypothesisViolated("(A, E[Z]^{1/2}) is not detectable")


def ss_bounds_aw(sys, params, ez, tol=TOL, max_iter=MAX_ITER):
    """Steady-state envelope from the two-sided AW bound.

    Returns ``(upper, lower)``: fixed points of ``f(., (1 - eps_bar) gamma E[Z])``
    and ``f(., (1 + eps_bar) gamma E[Z])``. Jointly,
    ``lower <= P_S <= upper`` with probability at least ``1 - delta_bar``.
    """
    ez = symmat.sym(ez)
    _check_mean_detectable(sys, ez)
    g, e = params.gamma, params.epsilon_bar
    return _solve_pair(sys, (1.0 - e) * g * ez, (1.0 + e) * g * ez, tol, max_iter)


def ss_bounds_gen(sys, params, ez, tol=TOL, max_iter=MAX_ITER):
    """Steady-state envelope from the generalized one-sided bounds.

    Returns ``(upper, lower)`` from ``Xi = (1 -+ r eps) gamma E[Z]``; each
    side holds with probability at least ``1 - delta``. Raises
    :class:`TrivialLowerScale` when ``1 - r eps <= 0`` since the upper
    envelope is then undefined.
    """
    ez = symmat.sym(ez)
    lo, hi = params.lower_scale(), params.upper_scale()
    if lo <= 0:
        raise TrivialLowerScale(
            f"1 - r*eps = {lo / params.gamma:.6g} <= 0; need gamma > {params.threshold:.6g}")
    _check_mean_detectable(sys, ez)
    return _solve_pair(sys, lo * ez, hi * ez, tol, max_iter)


def scalar_fixed_point(a, q, xi):
    """Closed-form positive root of ``p = ((a^2 p + q)^{-1} + xi)^{-1}`` for ``d = 1``."""
    if xi == 0:
        if abs(a) >= 1:
            raise NoConvergence("undetectable scalar system without measurements")
        return q / (1.0 - a * a)
    b = 1.0 + xi * q - a * a
    c = xi * a * a
    # numerically stable form of (-b + sqrt(b^2 + 4 c q)) / (2 c)
    return 2.0 * q / (b + np.sqrt(b * b + 4.0 * c * q))
