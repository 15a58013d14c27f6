"""Single-parameter copula families, parameter maps and log densities.

Every family carries one dependence parameter ``psi`` living in an open
interval ``(b, B)``.  The sampler works on the real line through

    gamma = log((psi - b) / (B - psi)),    psi = (B e^gamma + b) / (1 + e^gamma).

Archimedean families are parametrised by Kendall's tau (bivariate only); the
elliptical families by the correlation of an equicorrelation matrix, valid for
any dimension ``d >= 2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, special

from .distributions import normal_quantile, student_t_quantile
from .errors import DomainError, NumericError

__all__ = [
    "Family",
    "ParamBounds",
    "GroupSpec",
    "NU_MAX",
    "bounds_for",
    "psi_from_gamma",
    "gamma_from_psi",
    "theta_from_tau",
    "tau_from_theta",
    "natural_from_psi",
    "log_density",
    "GroupLikelihood",
]

NU_MAX = 35
CLAMP_EPS = 1e-10


class Family(enum.Enum):
    JOE = "joe"
    CLAYTON = "clayton"
    SURVIVAL_CLAYTON = "survival_clayton"
    GUMBEL = "gumbel"
    FRANK = "frank"
    GAUSSIAN = "gaussian"
    STUDENT_T = "student_t"

    @classmethod
    def parse(cls, name) -> "Family":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_").replace(" ", "_")
        aliases = {"t": "student_t", "studentt": "student_t", "normal": "gaussian",
                   "survivalclayton": "survival_clayton"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise DomainError(f"unknown copula family {name!r}") from None

    @property
    def archimedean(self) -> bool:
        return self not in (Family.GAUSSIAN, Family.STUDENT_T)

    @property
    def has_nu(self) -> bool:
        return self is Family.STUDENT_T


@dataclass(frozen=True)
class ParamBounds:
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise DomainError(f"bounds need lower < upper, got ({self.lower}, {self.upper})")

    def contains(self, psi) -> bool:
        return bool(np.all((psi > self.lower) & (psi < self.upper)))


def bounds_for(family, dim: int) -> ParamBounds:
    """Parameter-space bounds of ``psi`` for a family in dimension ``dim``."""
    family = Family.parse(family)
    if dim < 2:
        raise DomainError(f"a copula needs dimension >= 2, got {dim}")
    if family.archimedean:
        if dim != 2:
            raise DomainError(f"{family.value} copula is bivariate only, got dim={dim}")
        if family is Family.FRANK:
            return ParamBounds(-1.0, 1.0)
        return ParamBounds(0.0, 1.0)
    return ParamBounds(-1.0 / (dim - 1), 1.0)


@dataclass
class GroupSpec:
    """One cluster: a copula family and its ``n x d`` block of pseudo-observations."""

    family: Family
    data: np.ndarray
    name: str = ""
    bounds: ParamBounds = field(init=False)

    def __post_init__(self):
        self.family = Family.parse(self.family)
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise DomainError("group data must be a 2-d array (n x d)")
        self.data = data
        self.bounds = bounds_for(self.family, data.shape[1])
        if data.size and not np.all((data > 0.0) & (data < 1.0)):
            raise DomainError(f"group {self.name!r}: data must lie strictly inside (0, 1)")

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    @property
    def n(self) -> int:
        return self.data.shape[0]


# ----------------------------------------------------------------------------
# gamma <-> psi
# ----------------------------------------------------------------------------

def psi_from_gamma(gamma, bounds: ParamBounds):
    """Map the real-line parameter to ``(b, B)``; strictly interior."""
    b, B = bounds.lower, bounds.upper
    if isinstance(gamma, (float, int)):
        if not math.isfinite(gamma):
            raise DomainError("gamma must be finite")
        e = math.exp(-abs(gamma))
        r = e / (1.0 + e)
        psi = b + (B - b) * r if gamma <= 0 else B - (B - b) * r
        return min(max(psi, math.nextafter(b, B)), math.nextafter(B, b))
    g = np.asarray(gamma, dtype=float)
    if not np.all(np.isfinite(g)):
        raise DomainError("gamma must be finite")
    # b + (B - b) * expit(g), evaluated from the nearer end; same operations
    # as the scalar branch so both agree bit for bit
    e = np.fromiter((math.exp(-abs(x)) for x in g.ravel()), float, g.size).reshape(g.shape)
    r = e / (1.0 + e)
    psi = np.where(g <= 0, b + (B - b) * r, B - (B - b) * r)
    psi = np.clip(psi, np.nextafter(b, B), np.nextafter(B, b))
    return float(psi) if psi.ndim == 0 else psi


def gamma_from_psi(psi, bounds: ParamBounds):
    p = np.asarray(psi, dtype=float)
    if not bounds.contains(p):
        raise DomainError(f"psi must lie in ({bounds.lower}, {bounds.upper})")
    g = np.log(p - bounds.lower) - np.log(bounds.upper - p)
    return float(g) if g.ndim == 0 else g


# ----------------------------------------------------------------------------
# Kendall's tau <-> theta (Archimedean)
# ----------------------------------------------------------------------------

def _debye1(x: float) -> float:
    """First Debye function ``(1/x) * int_0^x t / (e^t - 1) dt``, for x > 0."""
    if x < 1e-4:
        return 1.0 - x / 4.0 + x * x / 36.0
    upper = min(x, 100.0)  # integrand < 1e-41 past 100
    val, _ = integrate.quad(lambda t: t / math.expm1(t) if t > 0 else 1.0,
                            0.0, upper, epsabs=1e-15, epsrel=1e-13, limit=200)
    if x > upper:
        val = math.pi ** 2 / 6.0
    return val / x


def _tau_frank(theta: float) -> float:
    if theta == 0.0:
        return 0.0
    a = abs(theta)
    if a < 1e-4:
        t = a / 9.0 - a ** 3 / 900.0
    else:
        t = 1.0 - 4.0 / a * (1.0 - _debye1(a))
    return math.copysign(t, theta)


def _tau_joe(theta: float) -> float:
    # 1 - 4 sum_k 1 / (k (theta k + 2) (theta (k - 1) + 2)), summed via digamma
    if abs(theta - 2.0) < 1e-2:
        # removable singularity at theta = 2: expand the digamma difference
        h = (2.0 - theta) / theta
        acc = 0.0
        for k in range(7, 0, -1):
            acc = acc * h + special.polygamma(k, 2.0) / math.factorial(k)
        return 1.0 - 2.0 / theta * acc
    return 1.0 + 2.0 / (2.0 - theta) * (special.digamma(2.0) - special.digamma(2.0 / theta + 1.0))


def tau_from_theta(family, theta: float) -> float:
    """Kendall's tau of an Archimedean family at natural parameter ``theta``."""
    family = Family.parse(family)
    theta = float(theta)
    if family in (Family.CLAYTON, Family.SURVIVAL_CLAYTON):
        if not theta > 0:
            raise DomainError(f"Clayton theta must be > 0, got {theta}")
        return theta / (theta + 2.0)
    if family is Family.GUMBEL:
        if not theta > 1:
            raise DomainError(f"Gumbel theta must be > 1, got {theta}")
        return 1.0 - 1.0 / theta
    if family is Family.JOE:
        if not theta > 1:
            raise DomainError(f"Joe theta must be > 1, got {theta}")
        return _tau_joe(theta)
    if family is Family.FRANK:
        if not math.isfinite(theta):
            raise DomainError("Frank theta must be finite")
        return _tau_frank(theta)
    raise DomainError(f"{family.value} is not Archimedean")


def _invert_tau(fun, tau, lo, hi):
    # expand the upper end until it brackets the root
    f_lo = fun(lo) - tau
    f_hi = fun(hi) - tau
    n_expand = 0
    while f_hi < 0:
        lo, f_lo = hi, f_hi
        hi *= 4.0
        f_hi = fun(hi) - tau
        n_expand += 1
        if n_expand > 60:
            raise NumericError(f"could not bracket tau={tau}: last bracket ({lo}, {hi})")
    if f_lo > 0:
        raise NumericError(f"tau={tau} below bracket ({lo}, {hi})")
    try:
        return optimize.brentq(lambda t: fun(t) - tau, lo, hi, xtol=1e-14, rtol=1e-14,
                               maxiter=200)
    except (RuntimeError, ValueError) as exc:
        raise NumericError(f"root finding failed for tau={tau} in ({lo}, {hi}): {exc}") from exc


def theta_from_tau(family, tau: float) -> float:
    """Natural parameter of an Archimedean family with Kendall's tau ``tau``."""
    family = Family.parse(family)
    tau = float(tau)
    b = bounds_for(family, 2)
    if not b.lower < tau < b.upper:
        raise DomainError(f"tau={tau} outside ({b.lower}, {b.upper}) for {family.value}")
    if family in (Family.CLAYTON, Family.SURVIVAL_CLAYTON):
        return 2.0 * tau / (1.0 - tau)
    if family is Family.GUMBEL:
        return 1.0 / (1.0 - tau)
    if family is Family.JOE:
        return _invert_tau(_tau_joe, tau, 1.0, 4.0)
    if family is Family.FRANK:
        if tau == 0.0:
            return 0.0
        t = abs(tau)
        if t < 1e-5:
            theta = 9.0 * t
        else:
            theta = _invert_tau(_tau_frank, t, 0.0, 20.0)
        return math.copysign(theta, tau)
    raise DomainError(f"{family.value} is not Archimedean")


def natural_from_psi(family, psi: float) -> float:
    """theta for Archimedean families, the correlation itself otherwise."""
    family = Family.parse(family)
    if family.archimedean:
        return theta_from_tau(family, psi)
    return float(psi)


# ----------------------------------------------------------------------------
# densities
# ----------------------------------------------------------------------------

def _log_clayton(theta, u, v):
    lu, lv = np.log(u), np.log(v)
    a, b = -theta * lu, -theta * lv
    m = np.maximum(a, b)
    # log(u^-theta + v^-theta - 1)
    small = m < 1.0
    with np.errstate(over="ignore", invalid="ignore"):
        s_small = np.log1p(np.expm1(a) + np.expm1(b))
        s_big = m + np.log(np.exp(a - m) + np.exp(b - m) - np.exp(-m))
    s = np.where(small, s_small, s_big)
    return math.log1p(theta) - (theta + 1.0) * (lu + lv) - (2.0 + 1.0 / theta) * s


def _log_gumbel(theta, u, v):
    lu, lv = np.log(u), np.log(v)
    lx, ly = np.log(-lu), np.log(-lv)
    log_a = np.logaddexp(theta * lx, theta * ly)
    l = np.exp(log_a / theta)
    return (-l - lu - lv + (theta - 1.0) * (lx + ly)
            + (1.0 / theta - 2.0) * log_a + np.log(l + theta - 1.0))


def _log_joe(theta, u, v):
    lu, lv = np.log1p(-u), np.log1p(-v)
    la, lb = theta * lu, theta * lv
    # log(a + b - a b) = log(a + b (1 - a)) with a = (1-u)^theta, b = (1-v)^theta
    log_s = np.logaddexp(la, lb + np.log1p(-np.exp(la)))
    return ((1.0 / theta - 2.0) * log_s + (theta - 1.0) * (lu + lv)
            + np.log(theta - 1.0 + np.exp(log_s)))


def _log_frank(theta, u, v):
    if theta < 0:
        # c_theta(u, v) = c_{-theta}(1 - u, v)
        theta, u = -theta, 1.0 - u
    if theta < 1e-6:
        return np.log1p(0.5 * theta * (1.0 - 2.0 * u) * (1.0 - 2.0 * v))
    if theta <= 1.0:
        den = -math.expm1(-theta) - np.expm1(-theta * u) * np.expm1(-theta * v)
        return (math.log(theta) + math.log(-math.expm1(-theta)) - theta * (u + v)
                - 2.0 * np.log(den))
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    bracket = (1.0 + np.exp(-theta * (hi - lo)) - np.exp(-theta * hi)
               - np.exp(-theta * (1.0 - lo)))
    return (math.log(theta) + math.log1p(-math.exp(-theta)) - theta * (u + v)
            + 2.0 * theta * lo - 2.0 * np.log(bracket))


def _equicorr_terms(rho, d):
    """log det and the rank-one inverse coefficient of the equicorrelation matrix."""
    one_minus = 1.0 - rho
    top = 1.0 + (d - 1) * rho
    logdet = (d - 1) * math.log(one_minus) + math.log(top)
    return logdet, one_minus, rho / top


def _quad_form(s1, s2, rho, d):
    logdet, one_minus, coef = _equicorr_terms(rho, d)
    return logdet, (s2 - coef * s1 * s1) / one_minus


def _t_const(nu, d):
    return (special.gammaln((nu + d) / 2.0) + (d - 1) * special.gammaln(nu / 2.0)
            - d * special.gammaln((nu + 1) / 2.0))


def _log_archimedean(family, theta, u):
    x, y = u[..., 0], u[..., 1]
    if family is Family.CLAYTON:
        return _log_clayton(theta, x, y)
    if family is Family.SURVIVAL_CLAYTON:
        return _log_clayton(theta, 1.0 - x, 1.0 - y)
    if family is Family.GUMBEL:
        return _log_gumbel(theta, x, y)
    if family is Family.JOE:
        return _log_joe(theta, x, y)
    return _log_frank(theta, x, y)


def log_density(family, psi: float, u, nu=None):
    """Log copula density at ``u`` (shape ``(d,)`` or ``(n, d)``).

    ``psi`` is Kendall's tau for Archimedean families and the equicorrelation
    for Gaussian / Student-t.  ``nu`` is required for Student-t only.
    """
    family = Family.parse(family)
    u = np.asarray(u, dtype=float)
    d = u.shape[-1]
    bounds = bounds_for(family, d)
    if not bounds.contains(psi):
        raise DomainError(f"psi={psi} outside ({bounds.lower}, {bounds.upper})")
    if not np.all((u > 0.0) & (u < 1.0)):
        raise DomainError("u must lie strictly inside (0, 1)")
    if family.has_nu:
        if nu is None or not nu > 0:
            raise DomainError("Student-t copula needs nu > 0")
    elif nu is not None:
        raise DomainError(f"{family.value} copula takes no nu")

    if family.archimedean:
        out = _log_archimedean(family, natural_from_psi(family, psi), u)
    elif family is Family.GAUSSIAN:
        x = normal_quantile(u)
        s1, s2 = x.sum(axis=-1), (x * x).sum(axis=-1)
        logdet, q = _quad_form(s1, s2, psi, d)
        out = -0.5 * logdet - 0.5 * (q - s2)
    else:
        x = student_t_quantile(u, nu)
        s1, s2 = x.sum(axis=-1), (x * x).sum(axis=-1)
        logdet, q = _quad_form(s1, s2, psi, d)
        out = (_t_const(nu, d) - 0.5 * logdet - 0.5 * (nu + d) * np.log1p(q / nu)
               + 0.5 * (nu + 1) * np.log1p(x * x / nu).sum(axis=-1))
    return float(out) if np.ndim(out) == 0 else out


class GroupLikelihood:
    """Cached log-likelihood ``sum_j log c(u_j | psi[, nu])`` of one group.

    Elliptical families reduce to per-row sums of the quantiles and their
    squares, which are computed once (per ``nu`` for Student-t).
    """

    def __init__(self, group: GroupSpec):
        self.group = group
        self.family = group.family
        self.bounds = group.bounds
        self.dim = group.dim
        self.n = group.n
        self._t_cache = {}
        if self.n and self.family is Family.GAUSSIAN:
            x = normal_quantile(group.data)
            s1, s2 = x.sum(axis=1), (x * x).sum(axis=1)
            self._sum_s2 = float(s2.sum())
            self._sum_s1sq = float((s1 * s1).sum())

    def _t_stats(self, nu):
        stats = self._t_cache.get(nu)
        if stats is None:
            x = student_t_quantile(self.group.data, nu)
            s1, s2 = x.sum(axis=1), (x * x).sum(axis=1)
            marg = 0.5 * (nu + 1) * float(np.log1p(x * x / nu).sum())
            stats = (s1 * s1, s2, self.n * _t_const(nu, self.dim) + marg)
            self._t_cache[nu] = stats
        return stats

    def __call__(self, psi: float, nu=None) -> float:
        if self.n == 0:
            return 0.0
        if not self.bounds.lower < psi < self.bounds.upper:
            return -math.inf
        d = self.dim
        if self.family is Family.GAUSSIAN:
            logdet, one_minus, coef = _equicorr_terms(psi, d)
            q = (self._sum_s2 - coef * self._sum_s1sq) / one_minus
            return -0.5 * self.n * logdet - 0.5 * (q - self._sum_s2)
        if self.family is Family.STUDENT_T:
            s1sq, s2, const = self._t_stats(nu)
            logdet, one_minus, coef = _equicorr_terms(psi, d)
            q = (s2 - coef * s1sq) / one_minus
            return (const - 0.5 * self.n * logdet
                    - 0.5 * (nu + d) * float(np.log1p(q / nu).sum()))
        theta = natural_from_psi(self.family, psi)
        return float(_log_archimedean(self.family, theta, self.group.data).sum())

    def grid(self, psis, nu=None) -> np.ndarray:
        """Vectorised log-likelihood over an array of ``psi`` values."""
        psis = np.asarray(psis, dtype=float)
        if self.n == 0:
            return np.zeros_like(psis)
        if self.family in (Family.GAUSSIAN, Family.STUDENT_T):
            d = self.dim
            one_minus = 1.0 - psis
            top = 1.0 + (d - 1) * psis
            logdet = (d - 1) * np.log(one_minus) + np.log(top)
            coef = psis / top
            if self.family is Family.GAUSSIAN:
                q = (self._sum_s2 - coef * self._sum_s1sq) / one_minus
                return -0.5 * self.n * logdet - 0.5 * (q - self._sum_s2)
            s1sq, s2, const = self._t_stats(nu)
            q = (s2[None, :] - coef[:, None] * s1sq[None, :]) / one_minus[:, None]
            return const - 0.5 * self.n * logdet - 0.5 * (nu + d) * np.log1p(q / nu).sum(axis=1)
        return np.array([self(p, nu) for p in psis])
