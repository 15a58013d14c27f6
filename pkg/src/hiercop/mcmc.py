"""Metropolis-within-Gibbs sampler for the hierarchical copula model.

Model, for groups ``i = 1..m`` with real-line parameters ``gamma_i``::

    gamma_i | xi, tau, alpha_i, beta_i  ~  Normal(xi, beta_i tau^2 alpha_i^2)
    beta_i  ~ Exp(1/2)            (so gamma_i | xi, tau, alpha_i ~ Laplace(xi, tau alpha_i))
    tau     ~ Gamma(m a, 1/2)
    alpha   ~ Dirichlet(a, ..., a)
    xi      ~ Logistic(0, 1)
    nu_i    ~ Uniform{1, ..., 35}  (Student-t groups only)

A scan updates gamma (joint Cauchy random-walk block), nu, xi (Cauchy random
walk), then the shrinkage scales alpha, tau, beta by exact Gibbs draws
(alpha with tau and beta integrated out, then tau given alpha, then beta).
"""

from __future__ import annotations

import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .copula import Family, GroupLikelihood, GroupSpec, NU_MAX, natural_from_psi, psi_from_gamma
from .distributions import (
    make_rng,
    sample_dirichlet,
    sample_gamma,
    sample_gig,
    sample_inverse_gaussian,
    sample_logistic,
)
from .errors import ConfigError, HiercopError, NumericError

log = logging.getLogger(__name__)

__all__ = [
    "McmcConfig",
    "ChainState",
    "Model",
    "ChainDraws",
    "SampleStore",
    "Stats",
    "GroupSummary",
    "PosteriorSummary",
    "init_state",
    "step_gamma",
    "step_nu",
    "step_xi",
    "step_tau",
    "step_alpha",
    "step_beta",
    "scan",
    "run_chain",
    "run_chains",
    "summarize",
    "summarize_draws",
    "effective_sample_size",
]

DEFAULT_SEED = 20200605
GIG_B_FLOOR = 1e-300


@dataclass
class McmcConfig:
    chains: int = 6
    scans: int = 250_000
    burn_in: int = 50_000
    delta_gamma: float = 1e-3
    delta_xi: float = 1e-1
    a: float = 1.0
    seed: int = DEFAULT_SEED
    thin: int = 1
    per_group_gamma: bool = False
    scale_order: str = "exact"
    n_jobs: int = 1
    progress_every: int = 0

    def __post_init__(self):
        problems = []
        if self.chains < 1:
            problems.append(f"chains must be >= 1, got {self.chains}")
        if self.scans < 1:
            problems.append(f"scans must be >= 1, got {self.scans}")
        if not 0 <= self.burn_in < self.scans:
            problems.append(f"burn_in must satisfy 0 <= burn_in < scans, got {self.burn_in}")
        if not self.delta_gamma > 0:
            problems.append(f"delta_gamma must be > 0, got {self.delta_gamma}")
        if not self.delta_xi > 0:
            problems.append(f"delta_xi must be > 0, got {self.delta_xi}")
        if not self.a > 0:
            problems.append(f"a must be > 0, got {self.a}")
        if self.thin < 1:
            problems.append(f"thin must be >= 1, got {self.thin}")
        if self.scale_order not in ("exact", "tau_first"):
            problems.append(f"scale_order must be 'exact' or 'tau_first', got {self.scale_order!r}")
        if self.n_jobs < 1:
            problems.append(f"n_jobs must be >= 1, got {self.n_jobs}")
        if problems:
            raise ConfigError(problems)

    @property
    def kept_per_chain(self) -> int:
        return (self.scans - self.burn_in) // self.thin


@dataclass
class ChainState:
    gamma: np.ndarray
    xi: float
    tau: float
    alpha: np.ndarray
    beta: np.ndarray
    nu: Optional[np.ndarray] = None
    # per-group log-likelihood at the current (gamma, nu); recomputed when None
    loglik: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def check(self) -> None:
        alpha = self.alpha.tolist()
        if abs(math.fsum(alpha) - 1.0) > 1e-12 or min(alpha) <= 0:
            raise NumericError(f"alpha left the simplex: {self.alpha}")
        if not (self.tau > 0 and min(self.beta.tolist()) > 0):
            raise NumericError(f"non-positive scale: tau={self.tau}, beta={self.beta}")
        if not (math.isfinite(math.fsum(self.gamma.tolist())) and math.isfinite(self.xi)):
            raise NumericError("non-finite gamma or xi")


class Model:
    """Groups plus their cached likelihoods."""

    def __init__(self, groups: Sequence[GroupSpec]):
        if len(groups) == 0:
            raise ConfigError("at least one group is required")
        self.groups = list(groups)
        self.m = len(self.groups)
        self.likelihoods = [GroupLikelihood(g) for g in self.groups]
        self.t_mask = np.array([g.family is Family.STUDENT_T for g in self.groups])
        self.has_nu = bool(self.t_mask.any())

    def psi(self, i: int, gamma: float) -> float:
        return psi_from_gamma(gamma, self.groups[i].bounds)

    def loglik(self, i: int, gamma: float, nu) -> float:
        if self.likelihoods[i].n == 0:
            return 0.0
        nu_i = int(nu[i]) if self.t_mask[i] else None
        return self.likelihoods[i](self.psi(i, gamma), nu_i)

    def loglik_all(self, gamma, nu) -> np.ndarray:
        return np.array([self.loglik(i, gamma[i], nu) for i in range(self.m)])


def _as_model(groups) -> Model:
    return groups if isinstance(groups, Model) else Model(groups)


def _log_logistic(x: float) -> float:
    ax = abs(x)
    return -ax - 2.0 * math.log1p(math.exp(-ax))


def _log_normal_kernel(x, mean, var):
    return -0.5 * np.log(var) - 0.5 * (x - mean) ** 2 / var


# ----------------------------------------------------------------------------
# initialisation and single-block updates
# ----------------------------------------------------------------------------

def init_state(groups, config: McmcConfig, rng: np.random.Generator) -> ChainState:
    """Draw a starting state from the prior."""
    model = _as_model(groups)
    m, a = model.m, config.a
    xi = float(sample_logistic(rng))
    tau = float(sample_gamma(m * a, 0.5, rng))
    alpha = sample_dirichlet(np.full(m, a), rng)
    beta = rng.standard_exponential(m) * 2.0
    gamma = xi + np.sqrt(beta) * tau * alpha * rng.standard_normal(m)
    nu = None
    if model.has_nu:
        nu = np.where(model.t_mask, rng.integers(1, NU_MAX + 1, size=m), 0)
    return ChainState(gamma=gamma, xi=xi, tau=tau, alpha=alpha, beta=beta, nu=nu)


def _current_loglik(state, model):
    if state.loglik is None:
        state.loglik = model.loglik_all(state.gamma, state.nu)
    return state.loglik


def step_gamma(state: ChainState, groups, config: McmcConfig, rng, proposal=None, stats=None):
    """Random-walk update of gamma with independent Cauchy proposals.

    By default the whole vector is accepted or rejected at once; with
    ``config.per_group_gamma`` each coordinate is accepted separately.
    ``proposal`` overrides the random proposal (used in tests).
    """
    model = _as_model(groups)
    m = model.m
    ll_cur = _current_loglik(state, model)
    if proposal is None:
        proposal = state.gamma + config.delta_gamma * rng.standard_cauchy(m)
    proposal = np.asarray(proposal, dtype=float)
    var = state.beta * state.tau ** 2 * state.alpha ** 2
    ll_prop = np.empty(m)
    for i in range(m):
        ll_prop[i] = model.loglik(i, proposal[i], state.nu) if math.isfinite(proposal[i]) else -math.inf
    prior_diff = (_log_normal_kernel(proposal, state.xi, var)
                  - _log_normal_kernel(state.gamma, state.xi, var))
    terms = ll_prop - ll_cur + prior_diff

    if config.per_group_gamma:
        accept = np.zeros(m, dtype=bool)
        for i in range(m):
            t = terms[i]
            if math.isnan(t) or not t > -math.inf:
                continue
            accept[i] = t >= 0 or math.log(rng.random()) <= t
        gamma = np.where(accept, proposal, state.gamma)
        loglik = np.where(accept, ll_prop, ll_cur)
        if stats is not None:
            stats["gamma"] += accept.mean()
        return dataclasses.replace(state, gamma=gamma, loglik=loglik)

    log_q = float(terms.sum())
    if not math.isfinite(log_q) and not (log_q == -math.inf):
        log.warning("non-finite gamma acceptance ratio; proposal rejected")
        log_q = -math.inf
    accepted = log_q >= 0 or math.log(rng.random()) <= log_q
    if stats is not None:
        stats["gamma"] += accepted
    if accepted:
        return dataclasses.replace(state, gamma=proposal, loglik=ll_prop)
    return state


def step_nu(state: ChainState, groups, rng, stats=None) -> ChainState:
    """Independent-proposal update of each Student-t group's degrees of freedom."""
    model = _as_model(groups)
    if state.nu is None:
        return state
    ll_cur = _current_loglik(state, model)
    nu = state.nu.copy()
    loglik = ll_cur.copy()
    for i in np.flatnonzero(model.t_mask):
        nu_prop = int(rng.integers(1, NU_MAX + 1))
        if nu_prop == nu[i]:
            ok = True
            ll_new = loglik[i]
        else:
            ll_new = model.likelihoods[i](model.psi(i, state.gamma[i]), nu_prop)
            log_q = ll_new - loglik[i]
            ok = log_q >= 0 or math.log(rng.random()) <= log_q
        if ok:
            nu[i] = nu_prop
            loglik[i] = ll_new
        if stats is not None:
            stats["nu"] += ok / model.t_mask.sum()
    return dataclasses.replace(state, nu=nu, loglik=loglik)


def step_xi(state: ChainState, config: McmcConfig, rng, stats=None) -> ChainState:
    """Cauchy random-walk update of the shrinkage location."""
    xi_prop = state.xi + config.delta_xi * rng.standard_cauchy()
    var = state.beta * state.tau ** 2 * state.alpha ** 2
    log_q = (float(np.sum(-0.5 * ((state.gamma - xi_prop) ** 2 - (state.gamma - state.xi) ** 2) / var))
             + _log_logistic(xi_prop) - _log_logistic(state.xi))
    accepted = log_q >= 0 or math.log(rng.random()) <= log_q
    if stats is not None:
        stats["xi"] += accepted
    if accepted:
        return dataclasses.replace(state, xi=float(xi_prop))
    return state


def step_tau(state: ChainState, rng, a: float = 1.0) -> ChainState:
    """Exact draw of the global scale from ``GIG(m(a-1), 1, 2 sum |gamma_i - xi| / alpha_i)``."""
    m = state.gamma.size
    s = float(np.sum(np.abs(state.gamma - state.xi) / state.alpha))
    if s == 0.0:
        log.warning("all gamma_i equal xi; drawing tau from its prior")
        tau = float(sample_gamma(m * a, 0.5, rng))
    else:
        tau = sample_gig(m * (a - 1.0), 1.0, 2.0 * s, rng)
    return dataclasses.replace(state, tau=tau)


def _abs_dev(state):
    dev = np.abs(state.gamma - state.xi)
    if np.any(dev == 0.0):
        log.warning("gamma_i == xi exactly; flooring GIG/IG parameter at %g", GIG_B_FLOOR)
        dev = np.maximum(dev, GIG_B_FLOOR)
    return dev


def step_alpha(state: ChainState, rng, a: float = 1.0) -> ChainState:
    """Exact draw of the local scales: ``T_i ~ GIG(a-1, 1, 2|gamma_i - xi|)``, normalised."""
    dev = _abs_dev(state)
    t = np.array([sample_gig(a - 1.0, 1.0, 2.0 * d, rng) for d in dev])
    return dataclasses.replace(state, alpha=t / t.sum())


def step_beta(state: ChainState, rng) -> ChainState:
    """``1/beta_i ~ IG(tau alpha_i / |gamma_i - xi|, 1)``."""
    dev = _abs_dev(state)
    mean = state.tau * state.alpha / dev
    inv = np.array([sample_inverse_gaussian(mu, 1.0, rng) for mu in mean])
    beta = 1.0 / inv
    return dataclasses.replace(state, beta=np.maximum(beta, np.finfo(float).tiny))


def scan(state: ChainState, model: Model, config: McmcConfig, rng, stats=None) -> ChainState:
    """One full sweep: gamma, [nu], xi, then the scales.

    With ``scale_order="exact"`` the scales are drawn alpha, tau, beta, which is
    an exact joint draw of (alpha, tau, beta) given (gamma, xi).  ``"tau_first"``
    draws tau before alpha; tau then pairs with the previous alpha and the
    chain no longer targets the joint posterior of (tau, alpha).
    """
    state = step_gamma(state, model, config, rng, stats=stats)
    if model.has_nu:
        state = step_nu(state, model, rng, stats=stats)
    state = step_xi(state, config, rng, stats=stats)
    if config.scale_order == "exact":
        state = step_alpha(state, rng, config.a)
        state = step_tau(state, rng, config.a)
    else:
        state = step_tau(state, rng, config.a)
        state = step_alpha(state, rng, config.a)
    return step_beta(state, rng)


# ----------------------------------------------------------------------------
# chains and storage
# ----------------------------------------------------------------------------

@dataclass
class ChainDraws:
    """Post burn-in, thinned draws of one chain."""

    scan: np.ndarray
    gamma: np.ndarray
    xi: np.ndarray
    tau: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    nu: Optional[np.ndarray] = None
    acceptance: dict = field(default_factory=dict)

    def __len__(self):
        return self.scan.size


@dataclass
class SampleStore:
    families: list
    bounds: list
    names: list
    chains: list

    @property
    def m(self) -> int:
        return len(self.families)

    def __len__(self):
        return sum(len(c) for c in self.chains)

    def pooled(self, name: str) -> np.ndarray:
        parts = [getattr(c, name) for c in self.chains]
        if any(p is None for p in parts):
            return None
        return np.concatenate(parts, axis=0)

    def psi(self) -> np.ndarray:
        g = self.pooled("gamma")
        return np.column_stack([psi_from_gamma(g[:, i], self.bounds[i]) for i in range(self.m)])


def run_chain(model: Model, config: McmcConfig, chain: int,
              progress: Optional[Callable[[int, int], None]] = None) -> ChainDraws:
    rng = make_rng(config.seed, chain)
    state = init_state(model, config, rng)
    m = model.m
    keep = config.kept_per_chain
    out = ChainDraws(
        scan=np.empty(keep, dtype=np.int64),
        gamma=np.empty((keep, m)),
        xi=np.empty(keep),
        tau=np.empty(keep),
        alpha=np.empty((keep, m)),
        beta=np.empty((keep, m)),
        nu=np.empty((keep, m), dtype=np.int64) if model.has_nu else None,
    )
    stats = {"gamma": 0.0, "nu": 0.0, "xi": 0.0}
    k = 0
    for t in range(1, config.scans + 1):
        try:
            state = scan(state, model, config, rng, stats)
            state.check()
        except (HiercopError, FloatingPointError, ValueError) as exc:
            raise NumericError(f"chain {chain} failed at scan {t}: {exc}") from exc
        if t > config.burn_in and (t - config.burn_in) % config.thin == 0 and k < keep:
            out.scan[k] = t
            out.gamma[k] = state.gamma
            out.xi[k] = state.xi
            out.tau[k] = state.tau
            out.alpha[k] = state.alpha
            out.beta[k] = state.beta
            if out.nu is not None:
                out.nu[k] = state.nu
            k += 1
        if progress is not None and config.progress_every and t % config.progress_every == 0:
            progress(chain, t)
    out.acceptance = {name: v / config.scans for name, v in stats.items()
                      if name != "nu" or model.has_nu}
    return out


def _log_progress(chain: int, t: int) -> None:
    log.info("chain %d: scan %d", chain, t)


def _run_chain_job(args):
    groups, config, chain = args
    return run_chain(Model(groups), config, chain, _log_progress)


def run_chains(groups, config: McmcConfig, progress=None) -> SampleStore:
    """Run ``config.chains`` independent chains; chain ``c`` uses stream ``(seed, c)``."""
    model = _as_model(groups)
    if config.n_jobs > 1 and config.chains > 1:
        jobs = [(model.groups, config, c) for c in range(config.chains)]
        with ProcessPoolExecutor(max_workers=min(config.n_jobs, config.chains)) as pool:
            chains = list(pool.map(_run_chain_job, jobs))
    else:
        chains = [run_chain(model, config, c, progress or _log_progress) for c in range(config.chains)]
    return SampleStore(
        families=[g.family for g in model.groups],
        bounds=[g.bounds for g in model.groups],
        names=[g.name or f"group{i + 1}" for i, g in enumerate(model.groups)],
        chains=chains,
    )


# ----------------------------------------------------------------------------
# summaries
# ----------------------------------------------------------------------------

@dataclass
class Stats:
    mean: float
    sd: float
    lower: float
    upper: float


def summarize_draws(x) -> Stats:
    """Mean, sd and equal-tailed 95% interval (order-statistic quantiles)."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise HiercopError("cannot summarize an empty sample")
    # exactly rounded sums, so constant draws give mean c and sd 0
    mean = math.fsum(x.tolist()) / x.size
    sd = math.sqrt(math.fsum(((x - mean) ** 2).tolist()) / (x.size - 1)) if x.size > 1 else 0.0
    lo, hi = np.quantile(x, [0.025, 0.975], method="inverted_cdf")
    return Stats(mean, sd, float(lo), float(hi))


def effective_sample_size(draws) -> float:
    """Multi-chain ESS with Geyer's initial monotone sequence.

    ``draws`` has shape ``(chains, n)``.
    """
    x = np.atleast_2d(np.asarray(draws, dtype=float))
    n_chain, n = x.shape
    if n < 4:
        return float(n_chain * n)
    centred = x - x.mean(axis=1, keepdims=True)
    size = 1 << int(math.ceil(math.log2(2 * n)))
    f = np.fft.rfft(centred, size, axis=1)
    acov = np.fft.irfft(f * np.conj(f), size, axis=1)[:, :n] / n
    chain_var = acov[:, 0] * n / (n - 1)
    w = chain_var.mean()
    between = n * x.mean(axis=1).var(ddof=1) if n_chain > 1 else 0.0
    var_plus = (n - 1) / n * w + between / n
    if var_plus <= 0:
        return float(n_chain * n)
    rho = 1.0 - (w - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    # sum adjacent pairs while positive, enforcing monotonicity
    tau_hat = -1.0
    prev = math.inf
    for k in range(0, n - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair < 0:
            break
        pair = min(pair, prev)
        prev = pair
        tau_hat += 2.0 * pair
    tau_hat = max(tau_hat, 1.0 / math.log10(n_chain * n + 10))
    return float(n_chain * n / tau_hat)


@dataclass
class GroupSummary:
    name: str
    family: Family
    gamma: Stats
    psi: Stats
    natural: Stats
    ess: float
    nu_mode: Optional[int] = None
    nu_freq: Optional[dict] = None


@dataclass
class PosteriorSummary:
    groups: list
    acceptance: list
    n_draws: int


def _natural_draws(family, psi):
    if not family.archimedean:
        return psi
    uniq, inv = np.unique(psi, return_inverse=True)
    nat = np.array([natural_from_psi(family, p) for p in uniq])
    return nat[inv]


def summarize(store: SampleStore, groups=None) -> PosteriorSummary:
    """Pool chains and summarise each group in gamma, psi and natural scale."""
    if len(store) == 0:
        raise HiercopError("empty sample store")
    gamma = store.pooled("gamma")
    nu = store.pooled("nu")
    out = []
    for i in range(store.m):
        fam = store.families[i]
        g = gamma[:, i]
        psi = psi_from_gamma(g, store.bounds[i])
        by_chain = np.array([c.gamma[:, i] for c in store.chains]) if len(
            {len(c) for c in store.chains}) == 1 else g[None, :]
        gs = GroupSummary(
            name=store.names[i],
            family=fam,
            gamma=summarize_draws(g),
            psi=summarize_draws(psi),
            natural=summarize_draws(_natural_draws(fam, np.atleast_1d(psi))),
            ess=effective_sample_size(by_chain),
        )
        if fam is Family.STUDENT_T and nu is not None:
            values, counts = np.unique(nu[:, i], return_counts=True)
            gs.nu_mode = int(values[np.argmax(counts)])
            gs.nu_freq = {int(v): int(c) for v, c in zip(values, counts)}
        out.append(gs)
    return PosteriorSummary(groups=out, acceptance=[c.acceptance for c in store.chains],
                            n_draws=len(store))
