"""
Bayes against per-group MLE on simulated data
=============================================

A scaled-down simulation study: random true parameters, Student-t data, and
the squared error of both estimators in the correlation space. Four
replications only show the mechanics; the ordering is noise at this size.
With ``replications=20`` and ``scans=20_000`` (a few minutes) Bayes comes out
ahead.
"""

# %%
from hiercop import McmcConfig, SimStudyConfig, run_simulation_study
from hiercop.dataio import format_mse_report

cfg = SimStudyConfig(replications=4, groups=5, obs=20, dim_range=(2, 5), seed=7,
                     mcmc=McmcConfig(chains=2, scans=4_000, burn_in=1_000, delta_gamma=0.1, delta_xi=0.5))
report = run_simulation_study(cfg)
print(format_mse_report(report))
print("ratio Bayes/MLE", round(report.bayes_mean / report.mle_mean, 3))
