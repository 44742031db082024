"""Seeded Monte Carlo experiments for the steady-state covariance bounds.

Every trial draws a selection keyed by ``(seed, trial)``, so results do not
depend on how trials are split across worker threads, and aggregation is
always done in trial order.
"""

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import kalman, symmat
from .concentration import AwParams, GenParams
from .ensemble import (
    SensorPool,
    as_distribution,
    draw_selections,
    expected_info,
    rho_min,
    selection_sum,
    uniform,
)
from .errors import (
    GenerationFailed,
    InfeasibleParameters,
    InsufficientSamples,
    NoConvergence,
)

#: Loewner tolerance for covariance-level comparisons.
COV_TOL = 1e-8
#: Fraction of non-converged trials above which a run is invalid.
EXCLUSION_BUDGET = 1e-3

CSV_HEADER = ["gamma", "zeta", "epsilon", "r", "lam_U_gen", "lam_U_aw", "lam_P_mean",
              "lam_P_std", "coverage_lower", "coverage_upper", "lower_trivial"]


@dataclass(frozen=True)
class ExperimentConfig:
    d: int = 3
    eta: int = 420
    gamma: int = 240
    gammas: tuple = ()
    delta: float = 0.05
    zetas: tuple = (0.0,)
    sigma2: float = 0.5
    q_scale: float = 0.5
    trials: int = 2000
    seed: int = 1
    distribution: object = "uniform"
    threads: int = 1
    tol: float = kalman.TOL
    max_iter: int = kalman.MAX_ITER

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        object.__setattr__(self, "zetas", tuple(float(z) for z in self.zetas))
        object.__setattr__(self, "gammas", tuple(int(g) for g in self.gammas))


class Instance(NamedTuple):
    system: kalman.LtiSystem
    pool: SensorPool
    rejections: int = 0


def build_fig1_instance(seed, d=3, eta=420, sigma2=0.5, q_scale=0.5, max_attempts=1000):
    """Random system and pool in the style of the published experiment.

    ``A`` and every observation vector have i.i.d. uniform(0, 1) entries,
    ``Q = q_scale * I`` and every sensor has variance ``sigma2``. Draws are
    rejected until each single sensor ``(A, c_i)`` is detectable and
    ``E[Z]`` is positive definite under the uniform distribution.
    """
    for attempt in range(max_attempts):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), attempt, 0xF161]))
        A = rng.uniform(0.0, 1.0, size=(d, d))
        C = rng.uniform(0.0, 1.0, size=(eta, d))
        pool = SensorPool(C, np.full(eta, float(sigma2)))
        ez = expected_info(pool, uniform(eta))
        if symmat.min_eig(ez) <= 1e-9 * symmat.max_eig(ez):
            continue
        if all(kalman.detectability_check(A, c) for c in C):
            return Instance(kalman.LtiSystem(A, q_scale * np.eye(d)), pool, attempt)
    raise GenerationFailed(f"no admissible instance after {max_attempts} attempts")


def heuristic_distribution(pool, mode="uniform", iters=1000):
    """Sampling distribution for experiments.

    ``"uniform"`` returns ``1/eta`` everywhere. ``"min_rho"`` runs
    multiplicative-weights updates ``p_i <- p_i * lambda_max(W Z_i W)``
    (``W = E[Z]^{+/2}``), which drives down ``max_i lambda_max(W Z_i W)``,
    and returns the best iterate seen. Falls back to uniform if the result
    does not have a positive definite ``E[Z]``.
    """
    p = uniform(pool.eta)
    if mode == "uniform" or pool.eta == 1:
        return p
    if mode != "min_rho":
        raise ValueError(f"unknown distribution mode {mode!r}")
    Z = pool.info_matrices()
    best_p, best_rho = p, math.inf
    try:
        for _ in range(iters):
            W = symmat.pinv_sqrt(expected_info(pool, p))
            lev = symmat.max_eig(W @ Z @ W)
            rho = float(lev[p > 0].max())
            if rho < best_rho:
                best_p, best_rho = p, rho
            q = p * lev
            p = q / q.sum()
    except (ArithmeticError, ValueError):
        pass
    ez = expected_info(pool, best_p)
    if symmat.min_eig(ez) <= 1e-9 * symmat.max_eig(ez):
        return uniform(pool.eta)
    return best_p


def resolve_distribution(pool, spec):
    if isinstance(spec, str):
        return heuristic_distribution(pool, spec)
    return as_distribution(spec, pool.eta)


class Simulation(NamedTuple):
    sums: np.ndarray
    P: np.ndarray
    converged: np.ndarray

    @property
    def n_excluded(self):
        return int(np.sum(~self.converged))


def simulate(system, pool, p, gamma, seed, trials, threads=1, tol=kalman.TOL,
             max_iter=kalman.MAX_ITER):
    """Draw ``trials`` selections and solve each steady-state covariance."""

    def chunk(bounds):
        start, stop = bounds
        sels = draw_selections(pool, p, gamma, seed, stop - start, start=start)
        sums = selection_sum(pool, sels)
        P, _, _, conv = kalman.steady_state_batch(system, sums, tol, max_iter)
        return sums, P, conv

    threads = max(1, int(threads))
    edges = np.linspace(0, trials, threads + 1).astype(int)
    parts = [(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]
    if len(parts) == 1:
        out = [chunk(parts[0])]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            out = list(ex.map(chunk, parts))
    sums, P, conv = (np.concatenate(x) for x in zip(*out))
    return Simulation(sums, P, conv)


def _check_exclusions(sim, trials):
    if sim.n_excluded > EXCLUSION_BUDGET * trials:
        raise NoConvergence(f"{sim.n_excluded} of {trials} trials failed to converge")


def _freq(mask):
    return float(np.mean(mask)) if mask.size else float("nan")


@dataclass
class AwCoverage:
    epsilon_bar: float
    freq_lower: float
    freq_upper: float
    freq_two_sided: float
    freq_ss: float
    freq_ss_lower: float
    freq_ss_upper: float
    implication_violations: int


@dataclass
class GenCoverage:
    zeta: float
    epsilon: float
    r: float
    lower_trivial: bool
    freq_lower: float
    freq_upper: float
    freq_ss_lower: float
    freq_ss_upper: Optional[float]
    implication_violations: int


@dataclass
class CoverageReport:
    """Empirical coverage of every concentration event on one instance.

    ``aw`` holds the two-sided bound at ``delta_bar = delta``; ``gen`` holds
    one entry per refinement factor. Sum-level frequencies test the random
    information sum against the scaled ``E[Z]``; ``ss`` frequencies test
    the steady-state covariance against the corresponding fixed points.
    """

    n_trials: int
    n_excluded: int
    gamma: int
    delta: float
    rho: float
    confidence: float
    aw: AwCoverage
    gen: list = field(default_factory=list)
    lam_P_mean: float = float("nan")
    lam_P_std: float = float("nan")

    @property
    def valid(self):
        return self.n_excluded <= EXCLUSION_BUDGET * self.n_trials

    @property
    def threshold(self):
        """Coverage floor ``1 - delta`` less a 3-sigma binomial allowance."""
        n = self.n_trials - self.n_excluded
        return self.confidence - 3.0 * math.sqrt(self.delta * (1.0 - self.delta) / n)

    def to_dict(self):
        out = asdict(self)
        out["valid"] = self.valid
        out["threshold"] = self.threshold
        return out


def run_coverage(config, instance=None):
    """Validate every sum-level and steady-state event on seeded trials.

    Raises :class:`InsufficientSamples` if either parameter tuple is
    infeasible for ``config.gamma``. Non-converged trials are excluded and
    counted.
    """
    inst = instance or build_fig1_instance(config.seed, config.d, config.eta,
                                           config.sigma2, config.q_scale)
    system, pool = inst.system, inst.pool
    p = resolve_distribution(pool, config.distribution)
    ez = expected_info(pool, p)
    rho = rho_min(pool, p)
    g = config.gamma
    aw = AwParams.solve(pool.d, config.delta, g, rho, p)
    gens = [GenParams.solve(pool.d, config.delta, g, rho, p, z) for z in config.zetas]

    sim = simulate(system, pool, p, g, config.seed, config.trials, config.threads,
                   config.tol, config.max_iter)
    keep = sim.converged
    S, P = sim.sums[keep], sim.P[keep]
    lam_P = symmat.max_eig(P)

    def solve(xi):
        return kalman.steady_state(system, xi, tol=config.tol, max_iter=config.max_iter).matrix

    lo, hi = (1 - aw.epsilon_bar) * g, (1 + aw.epsilon_bar) * g
    sum_lo = symmat.loewner_leq(lo * ez, S)
    sum_hi = symmat.loewner_leq(S, hi * ez)
    U_bar, L_bar = (r.matrix for r in kalman.ss_bounds_aw(system, aw, ez, config.tol, config.max_iter))
    P_le_U = symmat.loewner_leq(P, U_bar, COV_TOL)
    L_le_P = symmat.loewner_leq(L_bar, P, COV_TOL)
    # a lower bound on the sum orders the covariance from above, and vice versa
    viol = int(np.sum(sum_lo & ~P_le_U) + np.sum(sum_hi & ~L_le_P))
    aw_cov = AwCoverage(aw.epsilon_bar, _freq(sum_lo), _freq(sum_hi), _freq(sum_lo & sum_hi),
                        _freq(P_le_U & L_le_P), _freq(L_le_P), _freq(P_le_U), viol)

    gen_cov = []
    for gp in gens:
        lo, hi = gp.lower_scale(), gp.upper_scale()
        sum_lo = symmat.loewner_leq(lo * ez, S)
        sum_hi = symmat.loewner_leq(S, hi * ez)
        L = solve(hi * ez)
        L_le_P = symmat.loewner_leq(L, P, COV_TOL)
        viol = int(np.sum(sum_hi & ~L_le_P))
        freq_ss_upper = None
        if lo > 0:
            U = solve(lo * ez)
            P_le_U = symmat.loewner_leq(P, U, COV_TOL)
            viol += int(np.sum(sum_lo & ~P_le_U))
            freq_ss_upper = _freq(P_le_U)
        gen_cov.append(GenCoverage(gp.zeta, gp.epsilon, gp.r, lo <= 0, _freq(sum_lo),
                                   _freq(sum_hi), _freq(L_le_P), freq_ss_upper, viol))

    return CoverageReport(
        n_trials=config.trials, n_excluded=sim.n_excluded, gamma=g, delta=config.delta,
        rho=rho, confidence=1.0 - config.delta, aw=aw_cov, gen=gen_cov,
        lam_P_mean=float(np.mean(lam_P)) if lam_P.size else float("nan"),
        lam_P_std=float(np.std(lam_P, ddof=1)) if lam_P.size > 1 else 0.0,
    )


@dataclass
class SweepRow:
    gamma: int
    zeta: float
    epsilon: Optional[float]
    r: Optional[float]
    lam_U_gen: Optional[float]
    lam_U_aw: Optional[float]
    lam_P_mean: float
    lam_P_std: float
    coverage_lower: Optional[float]
    coverage_upper: Optional[float]
    lower_trivial: bool
    feasible: bool = True
    note: str = ""


def _sweep(config, instance, gammas, zetas):
    inst = instance or build_fig1_instance(config.seed, config.d, config.eta,
                                           config.sigma2, config.q_scale)
    system, pool = inst.system, inst.pool
    p = resolve_distribution(pool, config.distribution)
    ez = expected_info(pool, p)
    rho = rho_min(pool, p)

    def solve(xi):
        return kalman.steady_state(system, xi, tol=config.tol, max_iter=config.max_iter).matrix

    rows = []
    for g in gammas:
        sim = simulate(system, pool, p, g, config.seed, config.trials, config.threads,
                       config.tol, config.max_iter)
        _check_exclusions(sim, config.trials)
        P = sim.P[sim.converged]
        lam_P = symmat.max_eig(P)
        lam_mean = float(np.mean(lam_P))
        lam_std = float(np.std(lam_P, ddof=1)) if lam_P.size > 1 else 0.0
        try:
            aw = AwParams.solve(pool.d, config.delta, g, rho, p)
            lam_U_aw = float(symmat.max_eig(solve((1 - aw.epsilon_bar) * g * ez)))
        except InsufficientSamples:
            lam_U_aw = None
        for z in zetas:
            try:
                gp = GenParams.solve(pool.d, config.delta, g, rho, p, z)
            except InfeasibleParameters as exc:
                rows.append(SweepRow(g, z, None, None, None, lam_U_aw, lam_mean, lam_std,
                                     None, None, True, feasible=False, note=str(exc)))
                continue
            lo, hi = gp.lower_scale(), gp.upper_scale()
            L = solve(hi * ez)
            cov_lower = _freq(symmat.loewner_leq(L, P, COV_TOL))
            lam_U_gen = cov_upper = None
            if lo > 0:
                U = solve(lo * ez)
                lam_U_gen = float(symmat.max_eig(U))
                cov_upper = _freq(symmat.loewner_leq(P, U, COV_TOL))
            rows.append(SweepRow(g, z, gp.epsilon, gp.r, lam_U_gen, lam_U_aw, lam_mean,
                                 lam_std, cov_lower, cov_upper, lo <= 0))
    return rows


def sweep_zeta(config, instance=None):
    """One row per refinement factor at the fixed ``config.gamma``."""
    return _sweep(config, instance, [config.gamma], config.zetas)


def sweep_gamma(config, instance=None):
    """Rows for every ``(gamma, zeta)`` in ``config.gammas x config.zetas``."""
    gammas = config.gammas or (config.gamma,)
    return _sweep(config, instance, gammas, config.zetas)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_sweep_csv(rows, fh=None):
    """Write rows with the fixed header; returns the text when ``fh`` is None."""
    out = io.StringIO() if fh is None else fh
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in rows:
        w.writerow([_fmt(getattr(row, k)) for k in CSV_HEADER])
    return out.getvalue() if fh is None else None


def read_sweep_csv(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    return rows
