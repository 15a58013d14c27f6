"""
Copula families and their parameter maps
========================================

Every group carries one real parameter gamma. It is squashed into the open
interval of the family (Kendall's tau for the Archimedean families, the
equicorrelation for Gaussian and Student-t) and from there into the natural
parameter the density uses.
"""

# %%
import numpy as np

from hiercop import Family, bounds_for, log_density, natural_from_psi, psi_from_gamma, theta_from_tau

# gamma = 0 sits in the middle of the interval, large |gamma| approaches the ends
for family, dim in [("clayton", 2), ("frank", 2), ("gaussian", 4)]:
    b = bounds_for(family, dim)
    psi = psi_from_gamma(np.array([-4.0, 0.0, 4.0]), b)
    print(f"{family:>9} d={dim}  bounds=({b.lower:+.3f}, {b.upper:+.3f})  psi={np.round(psi, 4)}")

# %%
# Kendall's tau to the generator parameter, per family
for fam in (Family.CLAYTON, Family.GUMBEL, Family.JOE, Family.FRANK):
    print(f"{fam.value:>7}: tau=0.5 -> theta={theta_from_tau(fam, 0.5):.6f}")

# %%
# log densities at a few points; t needs its degrees of freedom
u = np.array([[0.05, 0.07], [0.5, 0.5], [0.9, 0.2]])
for fam in ("clayton", "survival_clayton", "gumbel", "joe", "frank", "gaussian"):
    print(f"{fam:>16}", np.round(log_density(fam, 0.5, u), 4))
print(f"{'t, nu=3':>16}", np.round(log_density("t", 0.5, u, nu=3), 4))

# natural parameters: Clayton theta at tau=0.5, Gaussian rho passes through
print(natural_from_psi("clayton", 0.5), natural_from_psi("gaussian", 0.5))

# %%
# equicorrelated Gaussian in five dimensions: one parameter, no matrix inverse
u5 = np.random.default_rng(0).uniform(size=(3, 5))
print(log_density("gaussian", 0.3, u5))
