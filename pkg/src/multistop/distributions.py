"""Inverse-Gaussian / GIG distribution kernels and special functions.

Everything downstream (policy gain models, value recursions, simulators)
is built on the primitives here:

* the Inverse Gaussian family ``IG(mu, lam)`` with density
  ``sqrt(lam / (2 pi x^3)) exp(-lam (x - mu)^2 / (2 mu^2 x))``,
  closed under convolution: a sum of ``n`` i.i.d. draws is
  ``IG(n mu, n^2 lam)``;
* the Generalized Inverse Gaussian family ``GIG(alpha, beta, p)`` with
  density proportional to ``x^(p-1) exp(-(alpha x + beta / x) / 2)``,
  normalized by the modified Bessel function of the third kind ``K_p``;
* partial (stop-loss style) expectations of IG sums, which reduce to GIG
  CDFs of order +1/2.

The IG CDF uses the normal-CDF closed form; ``gig_cdf`` integrates the
density with an exponential substitution and serves as the independent
quadrature route against which the closed forms are validated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gammaln, log_ndtr, ndtr


class NumericalError(RuntimeError):
    """Quadrature or special-function evaluation failed to converge."""


@dataclass(frozen=True)
class IGParams:
    """Inverse Gaussian parameters: ``mu`` is the mean, ``lam`` the shape."""

    mu: float
    lam: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mu) and self.mu > 0):
            raise ValueError(f"IG mean must be positive and finite, got {self.mu}")
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"IG shape must be positive and finite, got {self.lam}")

    @property
    def variance(self) -> float:
        return self.mu**3 / self.lam


@dataclass(frozen=True)
class GIGParams:
    """Generalized Inverse Gaussian parameters ``(alpha, beta, p)``."""

    alpha: float
    beta: float
    p: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"GIG alpha must be positive and finite, got {self.alpha}")
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"GIG beta must be positive and finite, got {self.beta}")
        if not math.isfinite(self.p):
            raise ValueError(f"GIG order must be finite, got {self.p}")


@dataclass(frozen=True)
class FrequencyModel:
    """Annual loss-count model: Poisson with mean ``rate`` events/year."""

    rate: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise ValueError(f"Poisson rate must be positive and finite, got {self.rate}")


@dataclass(frozen=True)
class QuadratureSpec:
    """Adaptive quadrature controls shared by the CDF/expectation integrals."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 200

    def __post_init__(self) -> None:
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")


DEFAULT_QUAD = QuadratureSpec()

_HALF_ORDER_TOL = 1e-12


def bessel_k(p: float, z: float) -> float:
    """Modified Bessel function of the third kind ``K_p(z)``.

    ``K_p(z) = (1/2) int_0^inf u^(p-1) exp(-z (u + 1/u) / 2) du``, evaluated
    through the equivalent ``int_0^inf exp(-z cosh t) cosh(p t) dt`` form,
    which makes the symmetry ``K_p = K_{-p}`` manifest.  Orders ``p = +-1/2``
    (the only ones the closed-form gain models need) use the elementary form
    ``sqrt(pi / (2 z)) exp(-z)``.
    """
    if not (math.isfinite(p) and math.isfinite(z)):
        raise ValueError(f"bessel_k requires finite arguments, got p={p}, z={z}")
    if z <= 0:
        raise ValueError(f"bessel_k requires z > 0, got z={z}")
    if abs(abs(p) - 0.5) < _HALF_ORDER_TOL:
        return math.sqrt(math.pi / (2.0 * z)) * math.exp(-z)

    ap = abs(p)

    def integrand(t: float) -> float:
        # cosh(pt) written as a sum of exponentials so huge t underflows to 0
        # instead of overflowing.
        ch = math.cosh(t)
        e1 = ap * t - z * ch
        e2 = -ap * t - z * ch
        return 0.5 * (math.exp(e1) if e1 > -745 else 0.0) + 0.5 * (
            math.exp(e2) if e2 > -745 else 0.0
        )

    # exp(-z cosh t) decays double-exponentially; find a safe upper cutoff.
    t_max = 1.0
    while z * math.cosh(t_max) - ap * t_max < 750.0 and t_max < 720.0:
        t_max += 1.0
    val, err = integrate.quad(integrand, 0.0, t_max, epsabs=1e-14, epsrel=1e-12, limit=300)
    if not math.isfinite(val):
        raise NumericalError(f"bessel_k({p}, {z}) quadrature returned {val}")
    return val


# -- raw vectorized kernels (validated params, array-friendly) ----------------


def _ig_pdf(x, mu, lam):
    x, mu, lam = np.broadcast_arrays(
        np.asarray(x, dtype=float), np.asarray(mu, dtype=float), np.asarray(lam, dtype=float)
    )
    out = np.zeros(x.shape)
    pos = (x > 0) & np.isfinite(x)
    xp, mp, lp = x[pos], mu[pos], lam[pos]
    out[pos] = np.sqrt(lp / (2.0 * np.pi * xp**3)) * np.exp(
        -lp * (xp - mp) ** 2 / (2.0 * mp**2 * xp)
    )
    return out


def _ig_cdf(x, mu, lam):
    x, mu, lam = np.broadcast_arrays(
        np.asarray(x, dtype=float), np.asarray(mu, dtype=float), np.asarray(lam, dtype=float)
    )
    out = np.zeros(x.shape)
    inf = np.isinf(x) & (x > 0)
    out[inf] = 1.0
    pos = (x > 0) & ~inf
    xp, mp, lp = x[pos], mu[pos], lam[pos]
    s = np.sqrt(lp) / np.sqrt(xp)  # split to survive denormal x
    # second term exponent-combined: exp(2 lam / mu) * Phi(-...) can hit
    # inf * 0 when evaluated naively at large shape/mean ratios.
    out[pos] = ndtr(s * (xp / mp - 1.0)) + np.exp(2.0 * lp / mp + log_ndtr(-s * (xp / mp + 1.0)))
    return np.clip(out, 0.0, 1.0)


def _gig_half_cdf(x, alpha, beta):
    """CDF of GIG(alpha, beta, +1/2) via the reciprocal-IG representation.

    If ``Y ~ GIG(beta, alpha, -1/2) = IG(sqrt(alpha/beta), alpha)`` then
    ``1/Y ~ GIG(alpha, beta, +1/2)``, so the CDF is a survival of an IG CDF.
    """
    x, alpha, beta = np.broadcast_arrays(
        np.asarray(x, dtype=float), np.asarray(alpha, dtype=float), np.asarray(beta, dtype=float)
    )
    out = np.zeros(x.shape)
    inf = np.isinf(x) & (x > 0)
    out[inf] = 1.0
    pos = (x > 0) & ~inf
    out[pos] = 1.0 - _ig_cdf(1.0 / x[pos], np.sqrt(alpha[pos] / beta[pos]), alpha[pos])
    return out


def _scalar_or_array(x, value):
    return value if np.ndim(x) else float(value)


# -- public operations ---------------------------------------------------------


def ig_pdf(x, params: IGParams):
    """IG density; defined on x > 0 (limits at 0+ and infinity are both 0)."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0):
        raise ValueError(f"ig_pdf requires x > 0, got {x}")
    return _scalar_or_array(x, _ig_pdf(arr, params.mu, params.lam))


def ig_cdf(x, params: IGParams):
    """IG distribution function via the normal-CDF closed form."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise ValueError("ig_cdf requires x >= 0")
    if np.any(np.isnan(arr)):
        raise ValueError("ig_cdf requires non-NaN x")
    return _scalar_or_array(x, _ig_cdf(arr, params.mu, params.lam))


def ig_sf(x, params: IGParams):
    """IG survival function ``1 - ig_cdf``."""
    return _scalar_or_array(x, 1.0 - np.asarray(ig_cdf(x, params)))


def gig_pdf(x, params: GIGParams):
    """GIG density, normalized by ``bessel_k(p, sqrt(alpha*beta))``."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0):
        raise ValueError("gig_pdf requires x > 0")
    z = math.sqrt(params.alpha * params.beta)
    lognorm = 0.5 * params.p * math.log(params.alpha / params.beta) - math.log(
        2.0 * bessel_k(params.p, z)
    )
    out = np.exp(
        lognorm + (params.p - 1.0) * np.log(arr) - 0.5 * (params.alpha * arr + params.beta / arr)
    )
    return _scalar_or_array(x, out)


def gig_cdf(x: float, params: GIGParams, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """GIG distribution function by adaptive quadrature of the density.

    The substitution ``u = exp(t)`` maps (0, x] to (-inf, log x] and removes
    the essential singularity of the integrand at the origin.
    """
    if x < 0:
        raise ValueError(f"gig_cdf requires x >= 0, got {x}")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    z = math.sqrt(params.alpha * params.beta)
    lognorm = 0.5 * params.p * math.log(params.alpha / params.beta) - math.log(
        2.0 * bessel_k(params.p, z)
    )

    def integrand(t: float) -> float:
        # for |t| past exp's overflow range the -(alpha e^t + beta e^-t)/2
        # term dominates everything else and the integrand has underflowed
        if abs(t) > 700.0:
            return 0.0
        e = lognorm + params.p * t - 0.5 * (params.alpha * math.exp(t) + params.beta * math.exp(-t))
        return math.exp(e) if e > -745.0 else 0.0

    val, err, info = integrate.quad(
        integrand,
        -np.inf,
        math.log(x),
        epsabs=quad.abs_tol,
        epsrel=quad.rel_tol,
        limit=quad.max_subdivisions,
        full_output=True,
    )[:3]
    if err > max(quad.abs_tol * 10.0, abs(val) * quad.rel_tol * 10.0) and err > 1e-9:
        raise NumericalError(
            f"gig_cdf quadrature did not converge at x={x}, params={params}: "
            f"value={val}, error estimate={err}"
        )
    return float(min(max(val, 0.0), 1.0))


def ig_sum_params(n: int, params: IGParams) -> IGParams:
    """Distribution of a sum of ``n`` i.i.d. IG draws: ``IG(n mu, n^2 lam)``."""
    if n < 1:
        raise ValueError(f"ig_sum_params requires n >= 1, got {n}")
    return IGParams(mu=n * params.mu, lam=n * n * params.lam)


def ig_partial_expectation(x, n: int, params: IGParams):
    """Lower partial mean of an n-fold IG sum: ``int_0^x u f_{S_n}(u) du``.

    Equals ``n mu F_GIG(x; lam/mu^2, n^2 lam, +1/2)``: multiplying the IG sum
    density by ``u`` shifts the GIG order from -1/2 to +1/2 and contributes
    the factor ``n mu``.
    """
    if n < 1:
        raise ValueError(f"ig_partial_expectation requires n >= 1, got {n}")
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise ValueError("ig_partial_expectation requires x >= 0")
    alpha = params.lam / params.mu**2
    beta = n * n * params.lam
    return _scalar_or_array(x, n * params.mu * _gig_half_cdf(arr, alpha, beta))


def poisson_pmf(m, freq: FrequencyModel):
    """Poisson probability mass ``exp(-rate) rate^m / m!``."""
    arr = np.asarray(m)
    if np.any(arr < 0):
        raise ValueError("poisson_pmf requires m >= 0")
    out = np.exp(arr * math.log(freq.rate) - freq.rate - gammaln(arr + 1.0))
    return _scalar_or_array(m, out)


def poisson_sf(m: int, freq: FrequencyModel) -> float:
    """Upper tail ``P[N > m]`` computed from the pmf partial sum."""
    ms = np.arange(0, m + 1)
    return float(max(0.0, 1.0 - np.sum(poisson_pmf(ms, freq))))


def poisson_m_max(freq: FrequencyModel, tail: float = 1e-10) -> int:
    """Smallest count with ``P[N > m] < tail``, floored at rate + 10 sqrt(rate)."""
    m = int(math.ceil(freq.rate + 10.0 * math.sqrt(freq.rate)))
    while poisson_sf(m, freq) >= tail:
        m += 1
    return m


def sample_ig(params: IGParams, rng: np.random.Generator, size=None):
    """Draw from IG(mu, lam) by the Michael-Schucany-Haas transform."""
    y = rng.standard_normal(size) ** 2
    mu, lam = params.mu, params.lam
    x = mu + mu**2 * y / (2.0 * lam) - (mu / (2.0 * lam)) * np.sqrt(
        4.0 * mu * lam * y + mu**2 * y**2
    )
    # numerical guard: the smaller root can round to 0 for extreme normals
    x = np.maximum(x, np.finfo(float).tiny)
    u = rng.uniform(size=size)
    out = np.where(u <= mu / (mu + x), x, mu**2 / x)
    return out if size is not None else float(out)
