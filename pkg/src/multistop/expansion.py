"""Gamma-kernel Laguerre expansion of an unknown insured-loss density.

When a policy/severity combination admits no closed-form law, the insured
loss ``Zt`` is rescaled to ``U = b Zt`` with ``b = E/Var`` and ``a = E^2/Var``
so that ``E[U] = Var[U] = a``, and the density of ``U`` is expanded on the
Gamma(a, 1) kernel ``g(u; a)``:

    f_U(u) = g(u; a) [1 + A3 L3(u) + A4 L4(u)],

with Laguerre polynomials orthogonal under ``g`` and coefficients matched to
the third and fourth central moments.  The truncation can dip negative for
some moment pairs; the admissible region in the ``(mu3, mu4)`` plane is
bounded by the curve along which the bracketed factor has a double root, and
out-of-region moment pairs can be projected back onto that curve.

The expansion also yields closed-form lower partial expectations (sums of
Gamma CDFs), which is exactly what the stopping engine needs, so a fitted
expansion can drive the value recursion directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammainc, gammaincinv, gammaln

_KERNEL_MASS_TAIL = 1e-12
POSITIVITY_TOL = 1e-12


@dataclass(frozen=True)
class MomentSet:
    """First four moments driving a fit.

    ``mean`` and ``variance`` are moments of the insured loss itself; ``mu3``
    and ``mu4`` are the *central* third and fourth moments of the rescaled
    variable ``U = (mean / variance) * Zt``.
    """

    mean: float
    variance: float
    mu3: float
    mu4: float

    def __post_init__(self) -> None:
        if not (self.mean > 0 and math.isfinite(self.mean)):
            raise ValueError(f"mean must be positive, got {self.mean}")
        if not (self.variance > 0 and math.isfinite(self.variance)):
            raise ValueError(f"variance must be positive, got {self.variance}")
        if not (self.mu4 > 0 and math.isfinite(self.mu4)):
            raise ValueError(f"mu4 must be positive, got {self.mu4}")

    @classmethod
    def from_loss_moments(cls, mean: float, variance: float, mu3: float, mu4: float) -> "MomentSet":
        """Build from central moments of the loss itself (rescales mu3, mu4)."""
        b = mean / variance
        return cls(mean=mean, variance=variance, mu3=b**3 * mu3, mu4=b**4 * mu4)

    @classmethod
    def from_sample(cls, draws: np.ndarray) -> "MomentSet":
        draws = np.asarray(draws, dtype=float)
        mean = float(draws.mean())
        centered = draws - mean
        variance = float(np.mean(centered**2))
        return cls.from_loss_moments(
            mean, variance, float(np.mean(centered**3)), float(np.mean(centered**4))
        )


def compound_poisson_loss_moments(rate: float, raw_moments: Sequence[float]):
    """(mean, variance, mu3, mu4) of a compound Poisson sum from severity raw
    moments; cumulants of the compound are ``rate * raw_moment``."""
    k1, k2, k3, k4 = (rate * raw_moments[j] for j in range(4))
    return k1, k2, k3, k4 + 3.0 * k2**2


def lognormal_raw_moments(mu: float, sigma: float):
    return [math.exp(j * mu + 0.5 * j * j * sigma * sigma) for j in (1, 2, 3, 4)]


_LAGUERRE_MAX = 4


def laguerre(n: int, a: float, u):
    """Laguerre polynomial ``L_n`` (orthogonal under the Gamma(a,1) kernel),
    in the monic-leading-term convention ``L_n = n! (-1)^n Ltilde_n^(a-1)``."""
    if not (0 <= n <= _LAGUERRE_MAX):
        raise ValueError(f"laguerre supports orders 0..{_LAGUERRE_MAX}, got {n}")
    u = np.asarray(u, dtype=float)
    if n == 0:
        out = np.ones_like(u)
    elif n == 1:
        out = u - a
    elif n == 2:
        out = u**2 - 2 * (a + 1) * u + (a + 1) * a
    elif n == 3:
        out = u**3 - 3 * (a + 2) * u**2 + 3 * (a + 2) * (a + 1) * u - (a + 2) * (a + 1) * a
    else:
        out = (
            u**4
            - 4 * (a + 3) * u**3
            + 6 * (a + 3) * (a + 2) * u**2
            - 4 * (a + 3) * (a + 2) * (a + 1) * u
            + (a + 3) * (a + 2) * (a + 1) * a
        )
    return out if out.ndim else float(out)


def _laguerre_deriv(n: int, a: float, u):
    u = np.asarray(u, dtype=float)
    if n == 3:
        out = 3 * u**2 - 6 * (a + 2) * u + 3 * (a + 2) * (a + 1)
    elif n == 4:
        out = 4 * u**3 - 12 * (a + 3) * u**2 + 12 * (a + 3) * (a + 2) * u - 4 * (a + 3) * (
            a + 2
        ) * (a + 1)
    else:
        raise ValueError(f"derivative only needed for orders 3 and 4, got {n}")
    return out if out.ndim else float(out)


def _gamma_pdf(u, shape: float):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp((shape - 1.0) * np.log(u[pos]) - u[pos] - gammaln(shape))
    return out


@dataclass(frozen=True)
class PositivityResult:
    positive: bool
    u_violation: float | None = None
    min_value: float = math.inf

    def __bool__(self) -> bool:
        return self.positive


@dataclass(frozen=True)
class ExpansionFit:
    """Fitted Gamma-Laguerre expansion state."""

    a: float
    b: float
    a3: float
    a4: float
    astar: np.ndarray  # 5 Gamma-mixture coefficients (include the b jacobian)
    positivity: PositivityResult
    moments: MomentSet

    def bracket(self, u):
        """The polynomial factor ``1 + A3 L3 + A4 L4`` multiplying the kernel."""
        return 1.0 + self.a3 * laguerre(3, self.a, u) + self.a4 * laguerre(4, self.a, u)


def _coeffs(a: float) -> tuple[float, float, float, float]:
    g3 = math.exp(gammaln(a + 3) - gammaln(a))
    g4 = math.exp(gammaln(a + 4) - gammaln(a))
    return 1.0 / (6.0 * g3), 1.0 / (24.0 * g4), g3, g4


def default_scan_limit(a: float) -> float:
    """Upper end of the positivity scan: the 1 - 1e-12 kernel quantile + 50%."""
    return 1.5 * float(gammaincinv(a, 1.0 - _KERNEL_MASS_TAIL))


def _fit_coefficients(a: float, mu3: float, mu4: float) -> tuple[float, float]:
    c3, c4, _, _ = _coeffs(a)
    a3 = c3 * (mu3 - 2.0 * a)
    a4 = c4 * (mu4 - 12.0 * mu3 - 3.0 * a * a + 18.0 * a)
    return a3, a4


def fit_expansion(moments: MomentSet) -> ExpansionFit:
    """Match the first four moments and record the positivity verdict."""
    a = moments.mean**2 / moments.variance
    b = moments.mean / moments.variance
    _, _, g3, g4 = _coeffs(a)
    a3, a4 = _fit_coefficients(a, moments.mu3, moments.mu4)
    astar = b * np.array(
        [
            1.0 - g3 * a3 + g4 * a4,
            3.0 * g3 * a3 - 4.0 * g4 * a4,
            -3.0 * g3 * a3 + 6.0 * g4 * a4,
            g3 * a3 - 4.0 * g4 * a4,
            g4 * a4,
        ]
    )
    verdict = _bracket_positivity(a, a3, a4, default_scan_limit(a))
    return ExpansionFit(
        a=a, b=b, a3=a3, a4=a4, astar=astar, positivity=verdict, moments=moments
    )


def approx_pdf(fit: ExpansionFit, z):
    """Expanded density of the insured loss at ``z`` (u = b z internally)."""
    u = fit.b * np.asarray(z, dtype=float)
    out = fit.b * _gamma_pdf(u, fit.a) * fit.bracket(u)
    return out if out.ndim else float(out)


def _bracket_positivity(a: float, a3: float, a4: float, u_max: float) -> PositivityResult:
    def bracket(u):
        return 1.0 + a3 * laguerre(3, a, u) + a4 * laguerre(4, a, u)

    # The bracket is a quartic in u; a negative leading coefficient means the
    # density is eventually negative no matter how wide the scan window is.
    lead = a4
    cubic = a3 - 4.0 * (a + 3.0) * a4
    if lead < -POSITIVITY_TOL or (abs(lead) <= POSITIVITY_TOL and cubic < -POSITIVITY_TOL):
        u_far = max(2.0 * u_max, 10.0)
        while bracket(u_far) >= 0.0:
            u_far *= 2.0
        return PositivityResult(False, u_violation=u_far, min_value=float(bracket(u_far)))

    if a3 == 0.0 and a4 == 0.0:
        return PositivityResult(True, min_value=1.0)
    grid = np.linspace(0.0, u_max, 4001)
    vals = bracket(grid)
    best_val = float(np.min(vals))
    best_u = float(grid[int(np.argmin(vals))])
    strict = np.nonzero((vals[1:-1] < vals[:-2]) & (vals[1:-1] < vals[2:]))[0] + 1
    for idx in strict:
        res = minimize_scalar(
            lambda u: float(bracket(u)),
            bracket=(grid[idx - 1], grid[idx], grid[idx + 1]),
            method="brent",
        )
        if res.fun < best_val:
            best_val, best_u = float(res.fun), float(res.x)
    if best_val < -POSITIVITY_TOL:
        return PositivityResult(False, u_violation=best_u, min_value=best_val)
    return PositivityResult(True, min_value=best_val)


def positivity_check(fit: ExpansionFit, u_max: float) -> PositivityResult:
    """Scan the bracket factor for negative values on (0, u_max].

    Dense grid plus local refinement of every interior minimum; see
    :func:`default_scan_limit` for the window the fitter itself uses.
    """
    return _bracket_positivity(fit.a, fit.a3, fit.a4, u_max)


@dataclass(frozen=True)
class PositivityCurve:
    """Sampled double-root locus bounding the positivity region."""

    u: np.ndarray
    mu3: np.ndarray
    mu4: np.ndarray
    skipped: tuple[float, ...] = ()


def _beta_system(a: float, u):
    """Coefficients of the linear system ``mu3 B1 + mu4 B2 + B3 = 0`` and its
    u-derivative, with the common Gamma-kernel factor divided out (it cancels
    row-by-row after eliminating the kernel's log-derivative)."""
    c3, c4, _, _ = _coeffs(a)
    l3, l4 = laguerre(3, a, u), laguerre(4, a, u)
    d3, d4 = _laguerre_deriv(3, a, u), _laguerre_deriv(4, a, u)
    b1 = c3 * l3 - 12.0 * c4 * l4
    b2 = c4 * l4
    b3 = 1.0 - 2.0 * a * c3 * l3 + (18.0 * a - 3.0 * a * a) * c4 * l4
    b1p = c3 * d3 - 12.0 * c4 * d4
    b2p = c4 * d4
    b3p = -2.0 * a * c3 * d3 + (18.0 * a - 3.0 * a * a) * c4 * d4
    return b1, b2, b3, b1p, b2p, b3p


def b_system(a: float, u: float):
    """The dressed boundary system coefficients (kernel factor included)."""
    g = float(_gamma_pdf(np.asarray([u]), a)[0])
    kappa = (a - 1.0) / u - 1.0
    b1, b2, b3, b1p, b2p, b3p = _beta_system(a, u)
    return (
        g * b1,
        g * b2,
        g * b3,
        g * (kappa * b1 + b1p),
        g * (kappa * b2 + b2p),
        g * (kappa * b3 + b3p),
    )


def positivity_boundary(a: float, u_grid) -> PositivityCurve:
    """Moment pairs ``(mu3(u), mu4(u))`` whose expansion has a double root at u.

    Grid points where the linear system degenerates are flagged and skipped.
    """
    us, m3s, m4s, skipped = [], [], [], []
    for u in np.asarray(u_grid, dtype=float):
        if u <= 0:
            raise ValueError(f"boundary grid values must be positive, got {u}")
        b1, b2, b3, b1p, b2p, b3p = _beta_system(a, u)
        if abs(b1) < 1e-14:
            skipped.append(float(u))
            continue
        denom = b2p - b1p * b2 / b1
        if abs(denom) < 1e-14:
            skipped.append(float(u))
            continue
        mu4 = (b1p * b3 / b1 - b3p) / denom
        mu3 = -(mu4 * b2 + b3) / b1
        us.append(float(u))
        m3s.append(float(mu3))
        m4s.append(float(mu4))
    return PositivityCurve(
        u=np.array(us), mu3=np.array(m3s), mu4=np.array(m4s), skipped=tuple(skipped)
    )


def approx_expected_min(fit: ExpansionFit, c1: float, c2: float) -> float:
    """``E[min{c1 + Zt, c2}]`` under the fitted density, for 0 <= c1 <= c2.

    Splitting at ``Zt = c2 - c1`` reduces every piece to Gamma CDFs: the
    expansion is a signed Gamma mixture and ``u f(u; s) = s f(u; s+1)``
    shifts each shape up by one in the partial-mean term.
    """
    if c1 > c2:
        raise ValueError(f"need c1 <= c2, got ({c1}, {c2})")
    if c1 < 0 or c2 < 0:
        raise ValueError(f"need nonnegative thresholds, got ({c1}, {c2})")
    mean = fit.a / fit.b
    if math.isinf(c2):
        return c1 + mean
    shapes = fit.a + np.arange(5.0)
    x = fit.b * (c2 - c1)
    f_here = gammainc(shapes, x)
    f_up = gammainc(shapes + 1.0, x)
    partial = float(np.sum(fit.astar * shapes * f_up)) / fit.b**2
    low = c1 * float(np.sum(fit.astar * f_here)) / fit.b
    high = c2 * float(np.sum(fit.astar * (1.0 - f_here))) / fit.b
    return partial + low + high


class ExpansionLocalGain:
    """Local-objective gain model driven by a fitted expansion (W = -Zt)."""

    def __init__(self, fit: ExpansionFit) -> None:
        self.fit = fit

    @property
    def mean_gain(self) -> float:
        return -self.fit.a / self.fit.b

    def expected_max(self, c1: float, c2: float) -> float:
        if c2 == -math.inf:
            return c1 + self.mean_gain
        if c1 > 0 or c2 > c1:
            raise ValueError(f"local-objective model needs c2 <= c1 <= 0, got ({c1}, {c2})")
        return -approx_expected_min(self.fit, -c1, -c2)


def expansion_local_gain_model(fit: ExpansionFit) -> ExpansionLocalGain:
    return ExpansionLocalGain(fit)


class GammaLocalGain:
    """Exact reference model for Gamma(shape, rate) insured losses, W = -Zt."""

    def __init__(self, shape: float, rate: float) -> None:
        if shape <= 0 or rate <= 0:
            raise ValueError(f"need positive shape and rate, got ({shape}, {rate})")
        self.shape = shape
        self.rate = rate

    @property
    def mean_gain(self) -> float:
        return -self.shape / self.rate

    def expected_max(self, c1: float, c2: float) -> float:
        if c2 == -math.inf:
            return c1 + self.mean_gain
        if c1 > 0 or c2 > c1:
            raise ValueError(f"local-objective model needs c2 <= c1 <= 0, got ({c1}, {c2})")
        q1, q2 = -c1, -c2
        x = self.rate * (q2 - q1)
        partial = (self.shape / self.rate) * gammainc(self.shape + 1.0, x)
        f = gammainc(self.shape, x)
        return -(partial + q1 * f + q2 * (1.0 - f))


def gamma_local_model(shape: float, rate: float) -> GammaLocalGain:
    return GammaLocalGain(shape, rate)


@dataclass(frozen=True)
class RefitResult:
    moments: MomentSet
    fit: ExpansionFit
    u_at_projection: float
    segment: tuple[float, float]


def _curve_point_admissible(a: float, u: float) -> bool:
    curve = positivity_boundary(a, [u])
    if curve.u.size == 0:
        return False
    a3, a4 = _fit_coefficients(a, float(curve.mu3[0]), float(curve.mu4[0]))
    # boundary densities touch zero at their double root; tolerate that dip
    res = _bracket_positivity(a, a3, a4, default_scan_limit(a))
    return res.positive or res.min_value > -1e-8


def constrained_refit(moments: MomentSet, n_scan: int = 400) -> RefitResult:
    """Project out-of-region moments onto the admissible boundary segment.

    The double-root curve is scanned in ``u``; the admissible segment (where
    the boundary density is nonnegative everywhere) is bracketed by bisection
    on the scan verdict, and the projection minimizes Euclidean distance in
    per-coordinate-scaled ``(mu3, mu4)`` units.
    """
    a = moments.mean**2 / moments.variance
    u_hi = default_scan_limit(a)
    us = np.linspace(u_hi / n_scan, u_hi, n_scan)
    flags = np.array([_curve_point_admissible(a, float(u)) for u in us])
    if not flags.any():
        raise ValueError("no admissible boundary segment found; widen the scan")

    def refine(u_ok: float, u_bad: float) -> float:
        for _ in range(40):
            mid = 0.5 * (u_ok + u_bad)
            if _curve_point_admissible(a, mid):
                u_ok = mid
            else:
                u_bad = mid
        return u_ok

    ok_idx = np.nonzero(flags)[0]
    lo = float(us[ok_idx[0]])
    hi = float(us[ok_idx[-1]])
    if ok_idx[0] > 0:
        lo = refine(lo, float(us[ok_idx[0] - 1]))
    if ok_idx[-1] < len(us) - 1:
        hi = refine(hi, float(us[ok_idx[-1] + 1]))

    seg_u = np.linspace(lo, hi, max(2 * n_scan, 100))
    curve = positivity_boundary(a, seg_u)
    physical = curve.mu4 > 0  # the solved system can leave the moment cone
    if not physical.any():
        raise ValueError("admissible boundary segment has no physical moment pairs")
    mu3s, mu4s, us = curve.mu3[physical], curve.mu4[physical], curve.u[physical]
    s3 = max(float(np.std(mu3s)), 1e-12)
    s4 = max(float(np.std(mu4s)), 1e-12)
    dist = ((mu3s - moments.mu3) / s3) ** 2 + ((mu4s - moments.mu4) / s4) ** 2
    j = int(np.argmin(dist))
    projected = MomentSet(
        mean=moments.mean, variance=moments.variance, mu3=float(mu3s[j]), mu4=float(mu4s[j])
    )
    return RefitResult(
        moments=projected,
        fit=fit_expansion(projected),
        u_at_projection=float(us[j]),
        segment=(lo, hi),
    )
