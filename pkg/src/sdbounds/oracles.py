"""Exact finite-support checks of the lemmas behind the generalized bound.

Every expectation here is an explicit weighted sum over the support, never
a sample average, so each check is deterministic.
"""

import math
from typing import NamedTuple

import numpy as np

from . import symmat
from .ensemble import as_distribution, expected_info, whitened_support
from .errors import HypothesisViolated, InvalidScalar, NotPsd, RangeViolation, Unbounded

_TOL = 1e-9


class FiniteDist(NamedTuple):
    """Random symmetric matrix with finite support ``support[k]`` w.p. ``probs[k]``."""

    support: np.ndarray
    probs: np.ndarray

    @classmethod
    def make(cls, support, probs):
        support = symmat.sym(np.asarray(support, dtype=float))
        if support.ndim != 3:
            raise InvalidScalar("support must be a stack of matrices")
        probs = as_distribution(probs, support.shape[0])
        return cls(support, probs)

    @property
    def d(self):
        return self.support.shape[-1]

    def mean(self):
        return symmat.sym(np.einsum("k,kij->ij", self.probs, self.support))

    def expect(self, fn):
        """``E[fn(X)]`` for a stack-aware ``fn``."""
        return symmat.sym(np.einsum("k,kij->ij", self.probs, fn(self.support)))

    def sample(self, rng, size):
        return rng.choice(self.probs.shape[0], size=size, p=self.probs)


def mgf_norm(dist, lam):
    """``|| E[exp(lam X)] ||`` computed exactly over the support."""
    return float(symmat.spectral_norm(dist.expect(lambda X: symmat.matrix_exp(lam * X))))


def master_tail_rhs(dist, gamma, lam, t, sign=+1):
    """Right-hand side of the matrix Laplace-transform tail bound.

    For ``S = X_1 + ... + X_gamma`` with i.i.d. copies of ``dist``:
    ``sign=+1`` bounds ``P[S not<= t I]`` by
    ``d exp(-lam t) ||E[exp(lam X)]||**gamma``; ``sign=-1`` bounds
    ``P[-S not<= t I]`` with ``exp(-lam X)`` instead.
    """
    if not (lam > 0 and t > 0):
        raise InvalidScalar(f"need lam > 0 and t > 0, got lam={lam}, t={t}")
    if sign not in (1, -1):
        raise InvalidScalar("sign must be +1 or -1")
    if int(gamma) != gamma or gamma < 1:
        raise InvalidScalar(f"gamma must be a positive integer, got {gamma}")
    m = mgf_norm(dist, sign * lam)
    return dist.d * math.exp(-lam * t) * m**gamma


def tail_frequency(dist, gamma, t, sign, trials, seed):
    """Monte Carlo frequency of ``{sign * S not<= t I}``."""
    rng = np.random.default_rng(seed)
    idx = dist.sample(rng, (trials, gamma))
    S = dist.support[idx].sum(axis=1)
    top = symmat.max_eig(sign * S)
    return float(np.mean(top > t))


def exp_identity_check(X):
    """``||e^X|| == e^{||X||}`` for p.s.d. ``X``, to relative precision 1e-9."""
    if not symmat.is_psd(X):
        raise NotPsd("exp identity needs a p.s.d. argument")
    lhs = float(symmat.spectral_norm(symmat.matrix_exp(X)))
    rhs = math.exp(float(symmat.spectral_norm(X)))
    return abs(lhs - rhs) <= _TOL * rhs


def exp_sandwich_check(X, tol=_TOL):
    """``I + X <= e^X``, and ``e^X <= I + X + X^2`` when ``||X|| <= 1``."""
    X = symmat.sym(X)
    eye = np.eye(X.shape[-1])
    E = symmat.matrix_exp(X)
    ok = symmat.loewner_leq(eye + X, E, tol)
    if symmat.spectral_norm(X) <= 1.0:
        ok = ok and symmat.loewner_leq(E, eye + X + X @ X, tol)
    return bool(ok)


def centered_norm_check(dist, rho):
    """``||Y_k - E[Y]|| <= rho`` on every support point of a p.s.d. ``Y <= rho I``."""
    if not rho > 0:
        raise HypothesisViolated(f"rho must be > 0, got {rho}")
    Y = dist.support
    if not np.all(symmat.is_psd(Y)) or not np.all(symmat.loewner_leq(Y, rho * np.eye(dist.d))):
        raise HypothesisViolated("support must satisfy 0 <= Y <= rho I")
    dev = symmat.spectral_norm(Y - dist.mean())
    return bool(np.all(dev <= rho * (1.0 + _TOL)))


def whitening_residuals(pool, p, rank_tol=symmat.RANK_TOL):
    """Residuals of the pseudo-inverse identities used by the whitening argument.

    Keys name the identity; every value should be ~0. Projector-valued
    identities are absolute, ``Z_i`` containment is relative to ``||Z_i||``.
    """
    ez = expected_info(pool, p)
    W = symmat.pinv_sqrt(ez, rank_tol)
    half = symmat.psd_sqrt(ez, rank_tol)
    Iz = symmat.range_projector(ez, rank_tol)
    ez_pinv = symmat.pinv_sym(ez, rank_tol)
    norm = lambda M: float(symmat.spectral_norm(M))  # noqa: E731
    try:
        _, idx, Y = whitened_support(pool, p, rank_tol)
    except Unbounded as exc:
        raise RangeViolation(str(exc)) from exc
    ey = symmat.sym(np.einsum("k,kij->ij", np.asarray(p)[idx], Y))
    Z = pool.info_matrices()[idx]
    zs = symmat.spectral_norm(Z)
    contain = symmat.spectral_norm(Z - Iz @ Z @ Iz) / np.where(zs > 0, zs, 1.0)
    return {
        "proj_eq_whitened_mean": norm(Iz - W @ ez @ W),
        "proj_eq_double_product": norm(Iz - ez @ ez_pinv @ ez @ ez_pinv),
        "proj_eq_half_left": norm(Iz - half @ W),
        "proj_eq_half_right": norm(Iz - W @ half),
        "whitened_mean_is_its_projector": norm(symmat.range_projector(ey, rank_tol) - ey),
        "whitened_mean_eq_proj": norm(ey - Iz),
        "support_in_range": float(np.max(contain)),
    }


def whiten(pool, p, rank_tol=symmat.RANK_TOL):
    """Whitened ensemble ``Y = E[Z]^{+/2} Z E[Z]^{+/2}`` with the same probabilities.

    The pseudo-inverse identities are verified to 1e-9 first; a supported
    sensor outside ``range(E[Z])`` raises :class:`RangeViolation`.
    """
    p = as_distribution(p, pool.eta)
    res = whitening_residuals(pool, p, rank_tol)
    if res["support_in_range"] > _TOL:
        raise RangeViolation("a supported Z_i escapes range(E[Z])")
    bad = {k: v for k, v in res.items() if v > _TOL}
    if bad:
        raise HypothesisViolated(f"whitening identities fail: {bad}")
    _, idx, Y = whitened_support(pool, p, rank_tol)
    return FiniteDist(Y, p[idx])


def mgf_bound_check(pool, p, rho, zeta, lam, rank_tol=symmat.RANK_TOL):
    """Exact check of ``||E[exp(+-lam X)]|| <= exp(lam**2 rho_t)`` for the whitened ensemble.

    ``X = (Y - E[Y]) / rho`` and ``rho_t = 1/rho - zeta**2/rho**2``.
    Hypotheses (``Y <= rho I``, ``zeta I_y <= E[Y] <= I_y``,
    ``rho >= zeta**2``, ``lam in [0, 1]``) are checked first and raise
    :class:`HypothesisViolated` when they fail.
    """
    if not 0.0 <= lam <= 1.0:
        raise HypothesisViolated(f"lam must lie in [0, 1], got {lam}")
    if not 0.0 <= zeta <= 1.0 or not rho >= zeta**2 or not rho > 0:
        raise HypothesisViolated(f"need zeta in [0, 1] and rho >= zeta**2, rho > 0, got rho={rho}, zeta={zeta}")
    try:
        dist = whiten(pool, p, rank_tol)
    except RangeViolation as exc:
        raise HypothesisViolated(str(exc)) from exc
    eye = np.eye(dist.d)
    if not np.all(symmat.loewner_leq(dist.support, rho * eye, 1e-8)):
        raise HypothesisViolated(f"whitened support exceeds rho I for rho={rho}")
    ey = dist.mean()
    Iy = symmat.range_projector(ey, rank_tol)
    if not (symmat.loewner_leq(zeta * Iy, ey, 1e-8) and symmat.loewner_leq(ey, Iy, 1e-8)):
        raise HypothesisViolated("whitened mean is not sandwiched by zeta I_y and I_y")
    rho_t = 1.0 / rho - zeta**2 / rho**2
    X = FiniteDist((dist.support - ey) / rho, dist.probs)
    bound = math.exp(lam**2 * rho_t)
    return all(mgf_norm(X, s * lam) <= bound * (1.0 + 1e-12) for s in (1, -1))
