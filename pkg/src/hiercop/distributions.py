"""Random variate generators and density primitives used by the sampler.

All samplers take a :class:`numpy.random.Generator` built by :func:`make_rng`.
Gamma-type distributions use the *rate* convention throughout:
``Gamma(shape, rate)`` has density proportional to ``x**(shape-1) * exp(-rate*x)``.

The generalized inverse Gaussian is parametrised as ``GIG(p, a, b)`` with
density proportional to ``x**(p-1) * exp(-(a*x + b/x)/2)``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from .errors import DomainError

__all__ = [
    "make_rng",
    "sample_gig",
    "sample_inverse_gaussian",
    "sample_dirichlet",
    "sample_gamma",
    "sample_exponential",
    "sample_cauchy",
    "sample_logistic",
    "log_pdf_laplace",
    "log_pdf_normal",
    "log_pdf_logistic",
    "student_t_cdf",
    "student_t_quantile",
    "normal_quantile",
]

_LOG_2PI = math.log(2.0 * math.pi)


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Return a PCG64 generator for ``(seed, stream...)``.

    Identical keys give identical sequences; different stream keys give
    independent streams (``SeedSequence`` spawn keys).
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(ss))


# ----------------------------------------------------------------------------
# generalized inverse Gaussian
# ----------------------------------------------------------------------------

def _gig_mode(lam: float, omega: float) -> float:
    if lam >= 1.0:
        return (math.sqrt((lam - 1.0) ** 2 + omega * omega) + (lam - 1.0)) / omega
    return omega / (math.sqrt((1.0 - lam) ** 2 + omega * omega) + (1.0 - lam))


def _gig_rou_shift(lam, omega, rng):
    # ratio-of-uniforms with mode shift; used for lam > 2 or omega > 3
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = _gig_mode(lam, omega)
    nc = t * math.log(xm) - s * (xm + 1.0 / xm)

    # roots of the cubic giving the extremes of (x - xm) * sqrt(f(x))
    a = -(2.0 * (lam + 1.0) / omega + xm)
    b = 2.0 * (lam - 1.0) * xm / omega - 1.0
    c = xm
    p = b - a * a / 3.0
    q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c
    fi = math.acos(-q / (2.0 * math.sqrt(-(p * p * p) / 27.0)))
    fak = 2.0 * math.sqrt(-p / 3.0)
    y1 = fak * math.cos(fi / 3.0) - a / 3.0
    y2 = fak * math.cos(fi / 3.0 + 4.0 / 3.0 * math.pi) - a / 3.0
    uplus = (y1 - xm) * math.exp(t * math.log(y1) - s * (y1 + 1.0 / y1) - nc)
    uminus = (y2 - xm) * math.exp(t * math.log(y2) - s * (y2 + 1.0 / y2) - nc)

    while True:
        u = uminus + rng.random() * (uplus - uminus)
        v = rng.random()
        x = u / v + xm
        if x <= 0.0 or v <= 0.0:
            continue
        if math.log(v) <= t * math.log(x) - s * (x + 1.0 / x) - nc:
            return x


def _gig_rou_noshift(lam, omega, rng):
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = _gig_mode(lam, omega)
    nc = t * math.log(xm) - s * (xm + 1.0 / xm)
    ym = ((lam + 1.0) + math.sqrt((lam + 1.0) ** 2 + omega * omega)) / omega
    um = math.exp(0.5 * (lam + 1.0) * math.log(ym) - s * (ym + 1.0 / ym) - nc)

    while True:
        u = um * rng.random()
        v = rng.random()
        if u <= 0.0 or v <= 0.0:
            continue
        x = u / v
        if math.log(v) <= t * math.log(x) - s * (x + 1.0 / x) - nc:
            return x


def _expdiff_over(lam, hi, lo):
    """(exp(lam*hi) - exp(lam*lo)) / lam without cancellation for small lam."""
    if lam * max(abs(hi), abs(lo)) < 1e-5:
        return (hi - lo) * (1.0 + lam * (hi + lo) / 2.0 + lam * lam * (hi * hi + hi * lo + lo * lo) / 6.0)
    return (math.expm1(lam * hi) - math.expm1(lam * lo)) / lam


def _log1p_over(lam, c):
    """log1p(lam*c) / lam, finite as lam -> 0."""
    z = lam * c
    if abs(z) < 1e-8:
        return c * (1.0 - z / 2.0 + z * z / 3.0)
    return math.log1p(z) / lam


def _gig_concave(lam, omega, rng):
    # piecewise hat (constant / power / exponential) for 0 <= lam < 1, small omega
    xm = _gig_mode(lam, omega)
    x0 = omega / (1.0 - lam)
    k0 = math.exp((lam - 1.0) * math.log(xm) - 0.5 * omega * (xm + 1.0 / xm))
    a0 = k0 * x0
    if x0 >= 2.0 / omega:
        k1 = 0.0
        a1 = 0.0
        k2 = x0 ** (lam - 1.0)
        a2 = k2 * 2.0 * math.exp(-omega * x0 / 2.0) / omega
    else:
        k1 = math.exp(-omega)
        if lam == 0.0:
            a1 = k1 * math.log(2.0 / (omega * omega))
        else:
            a1 = k1 * _expdiff_over(lam, math.log(2.0 / omega), math.log(x0))
        k2 = (2.0 / omega) ** (lam - 1.0)
        a2 = k2 * 2.0 * math.exp(-1.0) / omega
    total = a0 + a1 + a2
    edge = max(x0, 2.0 / omega)

    while True:
        v = total * rng.random()
        if v <= a0:
            x = x0 * v / a0
            hx = k0
        else:
            v -= a0
            if v <= a1:
                if lam == 0.0:
                    x = omega * math.exp(math.exp(omega) * v)
                    hx = k1 / x
                else:
                    c = v / (k1 * x0 ** lam)
                    x = x0 * math.exp(_log1p_over(lam, c))
                    hx = k1 * x ** (lam - 1.0)
            else:
                v -= a1
                arg = math.exp(-omega / 2.0 * edge) - omega / (2.0 * k2) * v
                if arg <= 0.0:
                    continue
                x = -2.0 / omega * math.log(arg)
                hx = k2 * math.exp(-omega / 2.0 * x)
        if x <= 0.0:
            continue
        u = rng.random() * hx
        if u <= 0.0:
            return x
        if math.log(u) <= (lam - 1.0) * math.log(x) - omega / 2.0 * (x + 1.0 / x):
            return x


def _gig_standard(lam: float, omega: float, rng) -> float:
    """Draw from density ~ x**(lam-1) exp(-omega (x + 1/x) / 2), lam >= 0."""
    if lam > 2.0 or omega > 3.0:
        return _gig_rou_shift(lam, omega, rng)
    if lam >= 1.0 - 2.25 * omega * omega or omega > 0.2:
        return _gig_rou_noshift(lam, omega, rng)
    return _gig_concave(lam, omega, rng)


def _check_gig(p, a, b):
    if not (math.isfinite(p) and math.isfinite(a) and math.isfinite(b)):
        raise DomainError(f"GIG parameters must be finite, got p={p}, a={a}, b={b}")
    if a < 0 or b < 0:
        raise DomainError(f"GIG requires a >= 0 and b >= 0, got a={a}, b={b}")
    if a > 0 and b > 0:
        return
    if a > 0 and b == 0 and p > 0:
        return
    if a == 0 and b > 0 and p < 0:
        return
    raise DomainError(f"invalid GIG parameter combination p={p}, a={a}, b={b}")


def _gig_one(p, a, b, rng):
    if b == 0.0:
        # Gamma(p, rate a/2)
        return rng.standard_gamma(p) * 2.0 / a
    if a == 0.0:
        # inverse Gamma(-p, scale b/2)
        return (b / 2.0) / rng.standard_gamma(-p)
    omega = math.sqrt(a * b)
    scale = math.sqrt(b / a)
    x = _gig_standard(abs(p), omega, rng)
    return scale / x if p < 0 else scale * x


def sample_gig(p: float, a: float, b: float, rng: np.random.Generator, size=None):
    """Sample the generalized inverse Gaussian ``GIG(p, a, b)``.

    Valid for ``a, b > 0`` and any ``p``, and for the boundary cases
    ``b = 0, p > 0`` (Gamma) and ``a = 0, p < 0`` (inverse Gamma).

    Uses the Hörmann-Leydold (2014) rejection schemes: ratio-of-uniforms
    with or without mode shift, and a concave-hat sampler for small
    ``omega = sqrt(a b)``.

    Parameters
    ----------
    p, a, b : float
        Shape and the two scale parameters.
    rng : numpy.random.Generator
    size : int, optional
        Number of draws. ``None`` returns a float.

    Returns
    -------
    float or ndarray
    """
    p, a, b = float(p), float(a), float(b)
    _check_gig(p, a, b)
    if size is None:
        return _gig_one(p, a, b, rng)
    out = np.empty(int(size))
    for i in range(out.size):
        out[i] = _gig_one(p, a, b, rng)
    return out


# ----------------------------------------------------------------------------
# other samplers
# ----------------------------------------------------------------------------

_LEVY_SWITCH = 1e8


def _ig_one(mean, shape, rng):
    z = rng.standard_normal()
    y = z * z
    if mean > _LEVY_SWITCH * shape:
        # the IG(mean, shape) law is indistinguishable from Levy(shape) here
        return shape / y if y > 0.0 else math.inf
    w = mean * y / (2.0 * shape)
    # mean * (1 + w - sqrt(w^2 + 2w)), written without cancellation
    x = mean / (1.0 + w + math.sqrt(w * (w + 2.0)))
    if rng.random() * (mean + x) <= mean:
        return x
    return mean * mean / x


def sample_inverse_gaussian(mean: float, shape: float, rng: np.random.Generator, size=None):
    """Inverse Gaussian ``IG(mean, shape)`` draws (Michael, Schucany & Haas)."""
    mean, shape = float(mean), float(shape)
    if not (mean > 0 and shape > 0) or math.isnan(mean) or math.isnan(shape):
        raise DomainError(f"IG requires mean > 0 and shape > 0, got {mean}, {shape}")
    if size is None:
        return _ig_one(mean, shape, rng)
    return np.array([_ig_one(mean, shape, rng) for _ in range(int(size))])


def sample_dirichlet(concentrations, rng: np.random.Generator) -> np.ndarray:
    alpha = np.asarray(concentrations, dtype=float)
    if alpha.ndim != 1 or alpha.size == 0:
        raise DomainError("Dirichlet needs a non-empty 1-d concentration vector")
    if np.any(~(alpha > 0)):
        raise DomainError(f"Dirichlet concentrations must be > 0, got {alpha}")
    g = rng.standard_gamma(alpha)
    # guard against underflow for tiny concentrations
    g = np.maximum(g, np.finfo(float).tiny)
    return g / g.sum()


def sample_gamma(shape: float, rate: float, rng: np.random.Generator, size=None):
    if not (shape > 0 and rate > 0):
        raise DomainError(f"Gamma requires shape > 0 and rate > 0, got {shape}, {rate}")
    return rng.standard_gamma(shape, size) / rate


def sample_exponential(rate: float, rng: np.random.Generator, size=None):
    if not rate > 0:
        raise DomainError(f"Exponential rate must be > 0, got {rate}")
    return rng.standard_exponential(size) / rate


def sample_cauchy(location: float, scale: float, rng: np.random.Generator, size=None):
    if not scale > 0:
        raise DomainError(f"Cauchy scale must be > 0, got {scale}")
    return location + scale * rng.standard_cauchy(size)


def sample_logistic(rng: np.random.Generator, size=None):
    """Standard logistic draws, by inversion."""
    u = rng.random(size)
    return np.log(u) - np.log1p(-u)


# ----------------------------------------------------------------------------
# log densities
# ----------------------------------------------------------------------------

def log_pdf_laplace(x, location, scale):
    if not np.all(np.asarray(scale) > 0):
        raise DomainError("Laplace scale must be > 0")
    return -np.log(2.0 * scale) - np.abs(x - location) / scale


def log_pdf_normal(x, mean, variance):
    if not np.all(np.asarray(variance) > 0):
        raise DomainError("normal variance must be > 0")
    return -0.5 * (_LOG_2PI + np.log(variance)) - 0.5 * (x - mean) ** 2 / variance


def log_pdf_logistic(x):
    """Standard logistic log density, ``-|x| - 2 log(1 + exp(-|x|))``."""
    ax = np.abs(x)
    return -ax - 2.0 * np.log1p(np.exp(-ax))


# ----------------------------------------------------------------------------
# CDFs and quantiles
# ----------------------------------------------------------------------------

def _check_open_unit(u):
    u = np.asarray(u, dtype=float)
    if np.any(~((u > 0.0) & (u < 1.0))):
        raise DomainError("probabilities must lie strictly inside (0, 1)")
    return u


def student_t_cdf(x, nu):
    """Student-t CDF via the regularized incomplete beta function."""
    if not np.all(np.asarray(nu) > 0):
        raise DomainError("degrees of freedom must be > 0")
    return special.stdtr(nu, x)


def student_t_quantile(u, nu):
    if not np.all(np.asarray(nu) > 0):
        raise DomainError("degrees of freedom must be > 0")
    return special.stdtrit(nu, _check_open_unit(u))


def normal_quantile(u):
    return special.ndtri(_check_open_unit(u))
