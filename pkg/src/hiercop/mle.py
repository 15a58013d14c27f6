"""Per-group maximum likelihood and the Bayes-vs-MLE simulation study."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from .copula import CLAMP_EPS, Family, GroupLikelihood, GroupSpec, NU_MAX, bounds_for, psi_from_gamma
from .distributions import make_rng, student_t_cdf
from .errors import ConfigError, DomainError, HiercopError, NumericError
from .mcmc import McmcConfig, run_chains

log = logging.getLogger(__name__)

__all__ = [
    "GAMMA_BRACKET",
    "MleFit",
    "SimStudyConfig",
    "MseReport",
    "fit_mle",
    "sample_true_params",
    "sample_copula_data",
    "replication_seeds",
    "run_replication",
    "run_simulation_study",
]

GAMMA_BRACKET = (-15.0, 15.0)
_GRID_POINTS = 61


@dataclass
class MleFit:
    gamma: float
    nu: int | None
    loglik: float


def _maximize_gamma(lik: GroupLikelihood, nu):
    lo, hi = GAMMA_BRACKET
    grid = np.linspace(lo, hi, _GRID_POINTS)
    ll = lik.grid(psi_from_gamma(grid, lik.bounds), nu)
    ll = np.where(np.isfinite(ll), ll, -np.inf)
    k = int(np.argmax(ll))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]

    def neg(g):
        v = lik(psi_from_gamma(float(g), lik.bounds), nu)
        return -v if math.isfinite(v) else math.inf

    # golden section with parabolic steps inside the best grid cell
    res = optimize.minimize_scalar(neg, bounds=(a, b), method="bounded",
                                   options={"xatol": 1e-9, "maxiter": 500})
    if not res.success:
        raise NumericError(f"MLE search failed on ({a}, {b}) for nu={nu}: {res.message}")
    if -res.fun >= ll[k]:
        return float(res.x), float(-res.fun)
    return float(grid[k]), float(ll[k])


def fit_mle(data, family) -> MleFit:
    """Maximise the group log-likelihood over gamma in [-15, 15] (and nu in 1..35).

    For Student-t the degrees of freedom are profiled out by exhaustive search
    over the integer grid.
    """
    group = GroupSpec(family, data)
    if group.n < 1:
        raise DomainError("MLE needs at least one observation")
    lik = GroupLikelihood(group)
    nus = range(1, NU_MAX + 1) if group.family is Family.STUDENT_T else [None]
    best = None
    for nu in nus:
        g, ll = _maximize_gamma(lik, nu)
        if best is None or ll > best.loglik:
            best = MleFit(g, nu, ll)
    return best


# ----------------------------------------------------------------------------
# simulation study
# ----------------------------------------------------------------------------

def sample_true_params(rng, m: int = 5, dim_range=(2, 5)):
    """gamma ~ N(0, 1), nu ~ U{1..35}, dims ~ U{dim_range}, one per group."""
    gamma = rng.standard_normal(m)
    nu = rng.integers(1, NU_MAX + 1, size=m)
    dims = rng.integers(dim_range[0], dim_range[1] + 1, size=m)
    return gamma, nu, dims


def sample_copula_data(psi: float, nu, d: int, n: int, rng) -> np.ndarray:
    """``n`` draws from the d-dimensional equicorrelation t copula (Gaussian if ``nu`` is None)."""
    bounds = bounds_for(Family.GAUSSIAN, d)
    if not bounds.lower < psi < bounds.upper:
        raise DomainError(f"correlation {psi} outside ({bounds.lower}, 1) for d={d}")
    corr = np.full((d, d), psi)
    np.fill_diagonal(corr, 1.0)
    chol = np.linalg.cholesky(corr)
    z = rng.standard_normal((n, d)) @ chol.T
    if nu is None:
        u = special.ndtr(z)
    else:
        w = rng.chisquare(nu, size=(n, 1)) / nu
        u = student_t_cdf(z / np.sqrt(w), nu)
    return np.clip(u, CLAMP_EPS, 1.0 - CLAMP_EPS)


@dataclass
class SimStudyConfig:
    replications: int = 100
    groups: int = 5
    obs: int = 20
    dim_range: tuple = (2, 5)
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    seed: int = 1
    n_jobs: int = 1

    def __post_init__(self):
        problems = []
        if self.replications < 1:
            problems.append("replications must be >= 1")
        if self.obs < 1:
            problems.append("obs must be >= 1")
        if self.groups < 1:
            problems.append("groups must be >= 1")
        lo, hi = self.dim_range
        if not 2 <= lo <= hi:
            problems.append(f"dim_range must satisfy 2 <= lo <= hi, got {self.dim_range}")
        if problems:
            raise ConfigError(problems)


@dataclass
class MseReport:
    bayes: np.ndarray
    mle: np.ndarray
    bayes_se: np.ndarray = None
    mle_se: np.ndarray = None
    failures: list = field(default_factory=list)
    replications: int = 0

    @property
    def bayes_mean(self) -> float:
        return float(np.mean(self.bayes))

    @property
    def mle_mean(self) -> float:
        return float(np.mean(self.mle))


def replication_seeds(seed: int, rep: int):
    """Streams for replication ``rep``: truths ``(seed, rep, 0)``, data
    ``(seed, rep, 1)``; the sampler seed is the first 63 bits drawn from
    stream ``(seed, rep, 2)``.
    """
    truth = make_rng(seed, rep, 0)
    data = make_rng(seed, rep, 1)
    mcmc_seed = int(make_rng(seed, rep, 2).integers(0, 2 ** 63 - 1))
    return truth, data, mcmc_seed


def run_replication(config: SimStudyConfig, rep: int):
    """Squared gamma errors ``(bayes, mle)`` of one replication."""
    rng_truth, rng_data, mcmc_seed = replication_seeds(config.seed, rep)
    gamma_t, nu_t, dims = sample_true_params(rng_truth, config.groups, config.dim_range)
    groups = []
    for i in range(config.groups):
        bounds = bounds_for(Family.STUDENT_T, int(dims[i]))
        psi = psi_from_gamma(float(gamma_t[i]), bounds)
        u = sample_copula_data(psi, int(nu_t[i]), int(dims[i]), config.obs, rng_data)
        groups.append(GroupSpec(Family.STUDENT_T, u, name=f"group{i + 1}"))
    gamma_mle = np.array([fit_mle(g.data, g.family).gamma for g in groups])
    mc = McmcConfig(**{**config.mcmc.__dict__, "seed": mcmc_seed, "n_jobs": 1})
    store = run_chains(groups, mc)
    gamma_bayes = store.pooled("gamma").mean(axis=0)
    return (gamma_t - gamma_bayes) ** 2, (gamma_t - gamma_mle) ** 2


def _safe_replication(args):
    config, rep = args
    try:
        return rep, run_replication(config, rep), None
    except HiercopError as exc:
        return rep, None, str(exc)


def run_simulation_study(config: SimStudyConfig) -> MseReport:
    """Average squared gamma errors of posterior mean and MLE over replications."""
    jobs = [(config, r) for r in range(config.replications)]
    if config.n_jobs > 1:
        with ProcessPoolExecutor(max_workers=config.n_jobs) as pool:
            results = list(pool.map(_safe_replication, jobs))
    else:
        results = [_safe_replication(j) for j in jobs]
    bayes, mle, failures = [], [], []
    for rep, res, err in results:
        if err is not None:
            log.error("replication %d failed: %s", rep, err)
            failures.append((rep, err))
            continue
        bayes.append(res[0])
        mle.append(res[1])
    if not bayes:
        raise NumericError(f"all {config.replications} replications failed")
    bayes, mle = np.array(bayes), np.array(mle)
    r = bayes.shape[0]

    def se(x):
        return x.std(axis=0, ddof=1) / math.sqrt(r) if r > 1 else np.full(x.shape[1], np.nan)

    return MseReport(bayes=bayes.mean(axis=0), mle=mle.mean(axis=0),
                     bayes_se=se(bayes), mle_se=se(mle), failures=failures, replications=r)
