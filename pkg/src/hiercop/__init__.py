"""Bayesian hierarchical copula models with Dirichlet-Laplace shrinkage.

Copula densities, a Metropolis-within-Gibbs sampler across groups of
dependence parameters, a per-group MLE baseline with a simulation study, and
lower-tail-dependence clustering.
"""

from .copula import (
    Family,
    GroupLikelihood,
    GroupSpec,
    ParamBounds,
    bounds_for,
    gamma_from_psi,
    log_density,
    natural_from_psi,
    psi_from_gamma,
    tau_from_theta,
    theta_from_tau,
)
from .distributions import make_rng, sample_gig, sample_inverse_gaussian
from .errors import ConfigError, DataError, DomainError, HiercopError, NumericError
from .mcmc import McmcConfig, PosteriorSummary, SampleStore, run_chains, summarize
from .mle import MseReport, SimStudyConfig, fit_mle, run_simulation_study
from .tail import (
    ClusterPartition,
    DissimilarityMatrix,
    complete_linkage_cluster,
    dissimilarity_matrix,
    empirical_lower_tail,
    posterior_tail_summary,
    t_copula_lower_tail,
)

__version__ = "0.1.0"
