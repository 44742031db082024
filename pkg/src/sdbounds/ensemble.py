"""Candidate-sensor pools, replacement sampling and the random information matrix.

A sensor ``(c, sigma2)`` contributes the rank-one information matrix
``c c^T / sigma2``. Drawing ``gamma`` sensors i.i.d. from a categorical
distribution ``p`` over the pool gives the random sum whose expectation is
``gamma * E[Z]`` with ``E[Z] = sum_i p_i Z_i``.

Sensor indices are zero-based throughout.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import symmat
from .errors import (
    DimMismatch,
    IndexOutOfRange,
    InvalidBudget,
    InvalidDistribution,
    InvalidSensor,
    Unbounded,
)

#: Range-containment tolerance used when certifying ``Z_i <= rho E[Z]``.
RANGE_TOL = 1e-9


@dataclass(frozen=True)
class Sensor:
    c: np.ndarray
    sigma2: float

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        object.__setattr__(self, "c", c)
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise InvalidSensor(f"sigma2 must be > 0, got {self.sigma2}")
        if not np.all(np.isfinite(c)):
            raise InvalidSensor("observation vector has non-finite entries")


@dataclass(frozen=True, eq=False)
class SensorPool:
    """``eta`` candidate sensors stored row-wise.

    Attributes
    ----------
    C : ndarray of shape (eta, d)
        Observation vectors, one per row.
    sigma2 : ndarray of shape (eta,)
        Measurement noise variances.
    """

    C: np.ndarray
    sigma2: np.ndarray

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        s2 = np.asarray(self.sigma2, dtype=float).reshape(-1)
        if C.shape[0] < 1 or C.shape[1] < 1:
            raise InvalidSensor("pool needs at least one sensor of dimension >= 1")
        if s2.shape[0] != C.shape[0]:
            raise DimMismatch(f"{C.shape[0]} observation vectors but {s2.shape[0]} variances")
        if not np.all(np.isfinite(C)):
            raise InvalidSensor("observation vectors have non-finite entries")
        bad = ~(np.isfinite(s2) & (s2 > 0))
        if np.any(bad):
            raise InvalidSensor(f"sigma2 must be > 0 (sensor {int(np.argmax(bad))})")
        C.setflags(write=False)
        s2.setflags(write=False)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "sigma2", s2)

    @classmethod
    def from_sensors(cls, sensors):
        sensors = list(sensors)
        d = {s.c.shape[0] for s in sensors}
        if len(d) > 1:
            raise DimMismatch(f"sensors of mixed dimension {sorted(d)}")
        return cls(np.array([s.c for s in sensors]), np.array([s.sigma2 for s in sensors]))

    @property
    def d(self):
        return self.C.shape[1]

    @property
    def eta(self):
        return self.C.shape[0]

    @property
    def sensors(self):
        return [Sensor(c, float(s)) for c, s in zip(self.C, self.sigma2)]

    def info_matrices(self):
        """Stack of shape ``(eta, d, d)`` holding every ``Z_i``."""
        return np.einsum("ni,nj->nij", self.C, self.C) / self.sigma2[:, None, None]

    def to_dict(self):
        return {
            "d": self.d,
            "sensors": [{"c": c.tolist(), "sigma2": float(s)} for c, s in zip(self.C, self.sigma2)],
        }

    @classmethod
    def from_dict(cls, obj):
        d = int(obj["d"])
        sensors = [Sensor(s["c"], float(s["sigma2"])) for s in obj["sensors"]]
        if any(s.c.shape[0] != d for s in sensors):
            raise DimMismatch(f"sensor vector length differs from d={d}")
        return cls.from_sensors(sensors)

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def as_distribution(p, eta=None):
    """Validate a point on the probability simplex and return it as an array."""
    p = np.asarray(p, dtype=float).reshape(-1)
    if eta is not None and p.shape[0] != eta:
        raise DimMismatch(f"distribution has {p.shape[0]} entries, pool has {eta}")
    if p.shape[0] < 1 or not np.all(np.isfinite(p)) or np.any(p < 0):
        raise InvalidDistribution("probabilities must be finite and non-negative")
    if abs(p.sum() - 1.0) > 1e-12:
        raise InvalidDistribution(f"probabilities sum to {p.sum()!r}, not 1")
    return p


def uniform(eta):
    return np.full(eta, 1.0 / eta)


def info_matrix(s):
    """``c c^T / sigma2`` for one sensor."""
    if not isinstance(s, Sensor):
        s = Sensor(*s)
    return np.outer(s.c, s.c) / s.sigma2


def expected_info(pool, p):
    """``E[Z] = sum_i p_i Z_i``."""
    p = as_distribution(p, pool.eta)
    return symmat.sym(np.einsum("n,ni,nj->ij", p / pool.sigma2, pool.C, pool.C))


def trial_rng(seed, trial=0):
    """Philox stream keyed by ``(seed, trial)``; independent of scheduling order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(trial)])))


def draw_selection(pool, p, gamma, seed, trial=0):
    """Draw ``gamma`` sensor indices i.i.d. from ``p`` (with replacement).

    Inverse-CDF sampling on the cumulative vector, so the same
    ``(seed, trial)`` always yields the same selection.
    """
    gamma = int(gamma)
    if gamma < 1:
        raise InvalidBudget(f"gamma must be >= 1, got {gamma}")
    p = as_distribution(p, pool.eta)
    return _inverse_cdf(p, trial_rng(seed, trial).random(gamma))


def _inverse_cdf(p, u):
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, u, side="right")
    # guard against landing on a zero-probability tail entry
    last = np.flatnonzero(p > 0)[-1]
    return np.minimum(idx, last)


def draw_selections(pool, p, gamma, seed, trials, start=0):
    """Selections for trials ``start .. start + trials - 1`` stacked row-wise."""
    p = as_distribution(p, pool.eta)
    if int(gamma) < 1:
        raise InvalidBudget(f"gamma must be >= 1, got {gamma}")
    return np.stack([_inverse_cdf(p, trial_rng(seed, t).random(int(gamma)))
                     for t in range(start, start + trials)])


def selection_sum(pool, sel):
    """``sum_{i in sel} Z_i``; ``sel`` may be a 2-D array of selections."""
    sel = np.asarray(sel)
    if sel.size and (not np.issubdtype(sel.dtype, np.integer) or sel.min() < 0 or sel.max() >= pool.eta):
        raise IndexOutOfRange(f"selection indices must lie in [0, {pool.eta})")
    if sel.ndim == 1:
        counts = np.bincount(sel, minlength=pool.eta).astype(float)
        return symmat.sym(np.einsum("n,ni,nj->ij", counts / pool.sigma2, pool.C, pool.C))
    counts = np.stack([np.bincount(s, minlength=pool.eta) for s in sel]).astype(float)
    return symmat.sym(np.einsum("tn,ni,nj->tij", counts / pool.sigma2, pool.C, pool.C))


def random_pool(d, eta, sigma2, seed):
    """Pool with i.i.d. uniform(0, 1) observation entries and a common variance."""
    if d < 1 or eta < 1:
        raise InvalidBudget("d and eta must be >= 1")
    if not sigma2 > 0:
        raise InvalidSensor(f"sigma2 must be > 0, got {sigma2}")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5E45]))
    return SensorPool(rng.uniform(0.0, 1.0, size=(eta, d)), np.full(eta, float(sigma2)))


def whitened_support(pool, p, rank_tol=symmat.RANK_TOL):
    """Whitening matrix ``E[Z]^{+/2}`` and supported whitened matrices.

    Returns ``(W, idx, Y)`` with ``Y[k] = W Z_idx[k] W``. Raises
    :class:`Unbounded` when a supported ``Z_i`` leaves ``range(E[Z])``.
    """
    p = as_distribution(p, pool.eta)
    ez = expected_info(pool, p)
    W = symmat.pinv_sqrt(ez, rank_tol)
    P = symmat.range_projector(ez, rank_tol)
    idx = np.flatnonzero(p > 0)
    Z = pool.info_matrices()[idx]
    off = np.eye(pool.d) - P
    leak = symmat.spectral_norm(off @ Z @ off)
    size = symmat.spectral_norm(Z)
    bad = leak > RANGE_TOL * np.maximum(size, np.finfo(float).tiny)
    bad &= size > 0
    if np.any(bad):
        raise Unbounded(f"sensor {int(idx[np.argmax(bad)])} escapes range(E[Z]); no finite rho")
    return W, idx, symmat.sym(W @ Z @ W)


def rho_min(pool, p, rank_tol=symmat.RANK_TOL):
    """Smallest ``rho`` with ``Z_i <= rho E[Z]`` for every supported sensor.

    Computed as ``max_i lambda_max(E[Z]^{+/2} Z_i E[Z]^{+/2})``; always >= 1.
    """
    _, _, Y = whitened_support(pool, p, rank_tol)
    # the whitened mean is a projector, so the true value is >= 1; clip rounding
    return max(1.0, float(np.max(symmat.max_eig(Y))))
