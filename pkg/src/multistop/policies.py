"""Gain models for the three insurance policy structures.

A policy turns the raw annual loss ``Z = X_1 + ... + X_N`` (Poisson count
``N``, i.i.d. Inverse-Gaussian severities) into an insured loss ``Zt``:

* ILP caps each individual loss at a top cover limit:
  ``Zt = sum max(X_n - tcl, 0)``;
* ALP compensates the annual aggregate above a cap:
  ``Zt = max(Z - cap, 0)``;
* PAP covers every loss from the moment the running total first exceeds an
  attachment point: ``Zt = sum X_n * 1{S_n <= attachment}``.

Each policy is exposed under two objectives through the engine's gain
contract: "local" (``W = -Zt``: minimize insured loss at claim years) and
"global" (``W = Z - Zt``: minimize total loss over the horizon).  All
expectations are conditioned on the loss count, with first-passage events
for PAP handled by explicit conditioning on the crossing index; this keeps
every closed form consistent with pathwise simulation of the definitions
above.  The ILP-global case has no tractable density and is served by an
empirical model built from an offline Monte Carlo sample of the gain.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np
from scipy import integrate

from .distributions import (
    DEFAULT_QUAD,
    FrequencyModel,
    IGParams,
    QuadratureSpec,
    _gig_half_cdf,
    _ig_cdf,
    _ig_pdf,
    poisson_m_max,
    poisson_pmf,
    poisson_sf,
    sample_ig,
)

Objective = Literal["local", "global"]
LOCAL: Objective = "local"
GLOBAL: Objective = "global"

POISSON_TAIL = 1e-10


class ConfigError(ValueError):
    """Invalid model/policy configuration."""


@dataclass(frozen=True)
class LDAModel:
    """Loss-generating law: Poisson frequency, IG severity, series truncation.

    ``m_max`` truncates the conditioning sums over the annual loss count; the
    default leaves Poisson tail mass below 1e-10.
    """

    frequency: FrequencyModel
    severity: IGParams
    m_max: int = 0

    def __post_init__(self) -> None:
        if self.m_max == 0:
            object.__setattr__(self, "m_max", poisson_m_max(self.frequency, POISSON_TAIL))
        elif poisson_sf(self.m_max, self.frequency) >= POISSON_TAIL:
            raise ConfigError(
                f"m_max={self.m_max} leaves Poisson tail >= {POISSON_TAIL:g} "
                f"at rate {self.frequency.rate}"
            )

    @property
    def mean_annual_loss(self) -> float:
        return self.frequency.rate * self.severity.mu


@dataclass(frozen=True)
class PolicySpec:
    """Choice of policy structure, its parameter, and the objective mode."""

    kind: Literal["ILP", "ALP", "PAP"]
    param: float
    objective: Objective

    def __post_init__(self) -> None:
        if self.kind not in ("ILP", "ALP", "PAP"):
            raise ConfigError(f"unknown policy kind {self.kind!r}")
        if not (math.isfinite(self.param) and self.param > 0):
            raise ConfigError(f"policy parameter must be positive, got {self.param}")
        if self.objective not in (LOCAL, GLOBAL):
            raise ConfigError(f"objective must be 'local' or 'global', got {self.objective!r}")


@dataclass(frozen=True)
class ILPAuxModel:
    """Post-insurance loss process for ILP under the local objective.

    The insured process is modelled directly as a compound Poisson with its
    own rate and IG severities.  Calibrating ``aux_rate`` from the raw
    frequency / top-cover-limit pair is the caller's responsibility.
    """

    aux_rate: float
    aux_severity: IGParams

    def __post_init__(self) -> None:
        if not (math.isfinite(self.aux_rate) and self.aux_rate > 0):
            raise ConfigError(f"aux rate must be positive, got {self.aux_rate}")


@dataclass(frozen=True)
class ALPWeights:
    """Mixture weights of the ALP insured loss: atom ``c0`` at zero plus one
    continuous branch per loss count; ``c0 + sum(cm) == 1``."""

    c0: float
    cm: np.ndarray  # index m-1 -> P[N = m, S_m > cap]


@dataclass(frozen=True)
class PAPWeights:
    """PAP conditioning weights: ``dmm[m*-1, m-1] = P[M* = m*] p_m`` for the
    crossing index, ``dm[m-1] = F_{S_m}(attachment) p_m`` for paths that never
    cross, and the crossing pmf itself (independent of the count)."""

    dmm: np.ndarray
    dm: np.ndarray
    mstar_pmf: np.ndarray


@dataclass(frozen=True)
class EmpiricalGainSample:
    """Offline Monte Carlo sample of a nonnegative annual gain."""

    draws: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        if len(self.draws) == 0:
            raise ConfigError("empirical gain sample must be nonempty")
        if np.any(self.draws < 0):
            raise ConfigError("gain draws must be nonnegative")


def _check_local_regime(c1: float, c2: float) -> None:
    if c1 > 0 or c2 > c1:
        raise ValueError(f"local-objective model needs c2 <= c1 <= 0, got ({c1}, {c2})")


def _check_global_regime(c1: float, c2: float) -> None:
    if c1 < 0 or c2 < c1:
        raise ValueError(f"global-objective model needs 0 <= c1 <= c2, got ({c1}, {c2})")


def _leggauss(n: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (t + 1.0), half * w


# ---------------------------------------------------------------------------
# Accumulated Loss Policy
# ---------------------------------------------------------------------------


class AlpLocalGain:
    """ALP, local objective: W = -max(Z - cap, 0).

    Conditional on ``N = m`` and on the aggregate exceeding the cap, the
    insured loss is the aggregate's excess; its partial expectations reduce
    to GIG CDFs of order +-1/2 evaluated at shifted arguments.
    """

    def __init__(self, lda: LDAModel, cap: float) -> None:
        if not (math.isfinite(cap) and cap > 0):
            raise ConfigError(f"cap must be positive, got {cap}")
        self.lda = lda
        self.cap = cap
        mu, lam = lda.severity.mu, lda.severity.lam
        m = np.arange(1, lda.m_max + 1)
        self._m_mu = m * mu
        self._alpha = lam / mu**2
        self._beta = m * m * lam
        self._pm = poisson_pmf(m, lda.frequency)
        self._p0 = float(poisson_pmf(0, lda.frequency))
        self._f_cap = _ig_cdf(cap, self._m_mu, self._beta)
        self._f_cap_half = _gig_half_cdf(cap, self._alpha, self._beta)
        self.weights = ALPWeights(
            c0=self._p0 + float(np.sum(self._pm * self._f_cap)),
            cm=self._pm * (1.0 - self._f_cap),
        )
        self._mean_insured = float(
            np.sum(
                self._pm
                * (self._m_mu * (1.0 - self._f_cap_half) - cap * (1.0 - self._f_cap))
            )
        )

    @property
    def mean_gain(self) -> float:
        return -self._mean_insured

    def expected_min_insured(self, q1: float, q2: float) -> float:
        """``E[min{q1 + Zt, q2}]`` for 0 <= q1 <= q2."""
        y = (q2 - q1) + self.cap
        f_y = _ig_cdf(y, self._m_mu, self._beta)
        f_y_half = _gig_half_cdf(y, self._alpha, self._beta)
        body = np.sum(
            self._pm
            * (
                self._m_mu * (f_y_half - self._f_cap_half)
                + (q1 - self.cap) * (f_y - self._f_cap)
                + q2 * (1.0 - f_y)
            )
        )
        return float(body + q1 * self.weights.c0)

    def expected_max(self, c1: float, c2: float) -> float:
        if c2 == -math.inf:
            return c1 + self.mean_gain
        _check_local_regime(c1, c2)
        return -self.expected_min_insured(-c1, -c2)


class AlpGlobalGain:
    """ALP, global objective: W = min(cap, Z).

    The gain has atoms at 0 (no losses) and at the cap (aggregate exceeds it)
    with the IG-sum density in between.
    """

    def __init__(self, lda: LDAModel, cap: float) -> None:
        if not (math.isfinite(cap) and cap > 0):
            raise ConfigError(f"cap must be positive, got {cap}")
        self.lda = lda
        self.cap = cap
        mu, lam = lda.severity.mu, lda.severity.lam
        m = np.arange(1, lda.m_max + 1)
        self._m_mu = m * mu
        self._alpha = lam / mu**2
        self._beta = m * m * lam
        self._pm = poisson_pmf(m, lda.frequency)
        self._p0 = float(poisson_pmf(0, lda.frequency))
        self._f_cap = _ig_cdf(cap, self._m_mu, self._beta)
        self._f_cap_half = _gig_half_cdf(cap, self._alpha, self._beta)
        self._mean = float(
            np.sum(self._pm * (cap * (1.0 - self._f_cap) + self._m_mu * self._f_cap_half))
        )

    @property
    def mean_gain(self) -> float:
        return self._mean

    def expected_max(self, c1: float, c2: float) -> float:
        if c2 == -math.inf:
            return c1 + self._mean
        _check_global_regime(c1, c2)
        if c2 == c1:
            return c1 + self._mean  # max{c1 + W, c1} = c1 + W for W >= 0
        if c2 - c1 >= self.cap:
            return float(c2)  # the gain is capped, so c2 always wins
        d = min(c2 - c1, self.cap)
        f_d = _ig_cdf(d, self._m_mu, self._beta)
        f_d_half = _gig_half_cdf(d, self._alpha, self._beta)
        body = np.sum(
            self._pm
            * (
                (1.0 - self._f_cap) * max(c1 + self.cap, c2)
                + c1 * (self._f_cap - f_d)
                + self._m_mu * (self._f_cap_half - f_d_half)
                + c2 * f_d
            )
        )
        return float(body + self._p0 * c2)


def alp_local_model(lda: LDAModel, cap: float) -> AlpLocalGain:
    return AlpLocalGain(lda, cap)


def alp_global_model(lda: LDAModel, cap: float) -> AlpGlobalGain:
    return AlpGlobalGain(lda, cap)


# ---------------------------------------------------------------------------
# Post Attachment Point coverage
# ---------------------------------------------------------------------------


@lru_cache(maxsize=512)
def _mstar_pmf_cached(
    m_star: int, lda: LDAModel, attachment: float, quad: QuadratureSpec
) -> float:
    mu, lam = lda.severity.mu, lda.severity.lam
    if m_star == 1:
        return float(1.0 - _ig_cdf(attachment, mu, lam))
    j = m_star - 1

    def integrand(a: float) -> float:
        tail = 1.0 - _ig_cdf(attachment - a, mu, lam)
        return tail * _ig_pdf(a, j * mu, j * j * lam)

    val, _ = integrate.quad(
        integrand,
        0.0,
        attachment,
        epsabs=quad.abs_tol,
        epsrel=quad.rel_tol,
        limit=quad.max_subdivisions,
    )
    return float(val)


def mstar_pmf(
    m_star: int, lda: LDAModel, attachment: float, quad: QuadratureSpec = DEFAULT_QUAD
) -> float:
    """P[the running severity sum first exceeds the attachment at index m*].

    Independent of the annual count: the event only constrains the first
    ``m_star`` severities.  ``m_star = 1`` is the single-loss exceedance
    probability; larger indices integrate the single-loss tail against the
    density of the previous partial sum.
    """
    if m_star < 1:
        raise ValueError(f"m_star must be >= 1, got {m_star}")
    if not (math.isfinite(attachment) and attachment > 0):
        raise ValueError(f"attachment must be positive, got {attachment}")
    return _mstar_pmf_cached(m_star, lda, attachment, quad)


def pap_weights(
    lda: LDAModel, attachment: float, quad: QuadratureSpec = DEFAULT_QUAD
) -> PAPWeights:
    """Conditioning weights for the PAP decompositions (count x crossing index)."""
    m_max = lda.m_max
    pm = poisson_pmf(np.arange(1, m_max + 1), lda.frequency)
    mstar = np.array([mstar_pmf(j, lda, attachment, quad) for j in range(1, m_max + 1)])
    mu, lam = lda.severity.mu, lda.severity.lam
    dm = pm * _ig_cdf(attachment, np.arange(1, m_max + 1) * mu, np.arange(1, m_max + 1) ** 2 * lam)
    dmm = np.zeros((m_max, m_max))
    for m in range(1, m_max + 1):
        dmm[: m, m - 1] = mstar[:m] * pm[m - 1]
    return PAPWeights(dmm=dmm, dm=dm, mstar_pmf=mstar)


class PapLocalGain:
    """PAP, local objective: W = -(sum of losses up to the attachment crossing).

    Conditioning on the crossing index ``j``, the insured loss is the partial
    sum ``S_{j-1}`` restricted to the crossing event; those restricted
    expectations are one-dimensional integrals of smooth IG quantities over
    ``(0, attachment)`` and are evaluated on a fixed Gauss-Legendre grid
    shared by every call.  Paths that never cross keep the plain IG-sum law
    below the attachment.
    """

    def __init__(self, lda: LDAModel, attachment: float, n_nodes: int = 256) -> None:
        if not (math.isfinite(attachment) and attachment > 0):
            raise ConfigError(f"attachment must be positive, got {attachment}")
        self.lda = lda
        self.attachment = attachment
        mu, lam = lda.severity.mu, lda.severity.lam
        m_max = lda.m_max
        m = np.arange(1, m_max + 1)
        self._m_mu = m * mu
        self._alpha = lam / mu**2
        self._beta = m * m * lam
        self._pm = poisson_pmf(m, lda.frequency)
        self._p0 = float(poisson_pmf(0, lda.frequency))
        self._f_att = _ig_cdf(attachment, self._m_mu, self._beta)

        nodes, wts = _leggauss(n_nodes, 0.0, attachment)
        self._nodes = nodes
        cross = 1.0 - _ig_cdf(attachment - nodes, mu, lam)  # next loss crosses
        # g[q] aggregates, over all crossing indices j >= 2, the sub-density of
        # the retained sum at the node, weighted by P[N >= j].
        g = np.zeros(n_nodes)
        for j in range(2, m_max + 1):
            prev = j - 1
            dens = _ig_pdf(nodes, prev * mu, prev * prev * lam)
            p_at_least_j = poisson_sf(j - 1, lda.frequency)
            g += p_at_least_j * wts * cross * dens
        self._g = g
        self._atom = self._p0 + (1.0 - self._p0) * float(1.0 - _ig_cdf(attachment, mu, lam))
        mean_cross = float(np.sum(nodes * g))
        mean_never = float(
            np.sum(self._pm * self._m_mu * _gig_half_cdf(attachment, self._alpha, self._beta))
        )
        self._mean_insured = mean_cross + mean_never

    @property
    def mean_gain(self) -> float:
        return -self._mean_insured

    def expected_min_insured(self, q1: float, q2: float) -> float:
        """``E[min{q1 + Zt, q2}]`` for 0 <= q1 <= q2."""
        d = min(q2 - q1, self.attachment)
        f_d = _ig_cdf(d, self._m_mu, self._beta)
        f_d_half = _gig_half_cdf(d, self._alpha, self._beta)
        never = np.sum(
            self._pm * (q1 * f_d + self._m_mu * f_d_half + q2 * (self._f_att - f_d))
        )
        cross = np.sum(np.minimum(q1 + self._nodes, q2) * self._g)
        return float(never + cross + q1 * self._atom)

    def expected_max(self, c1: float, c2: float) -> float:
        if c2 == -math.inf:
            return c1 + self.mean_gain
        _check_local_regime(c1, c2)
        return -self.expected_min_insured(-c1, -c2)

    def total_mass(self) -> float:
        """Atom plus quadrature mass of all branches; 1 up to grid error."""
        never = float(np.sum(self._pm * self._f_att))
        return self._atom + float(np.sum(self._g)) + never


class PapGlobalGain:
    """PAP, global objective: W = sum of losses from the crossing onwards.

    Conditional on ``N = m`` and crossing index ``j``, the gain is the
    crossing loss (restricted to exceed the remaining gap) plus an
    unconstrained IG sum of the ``m - j`` subsequent losses.  Expectations
    integrate a closed-form inner kernel over the crossing gap and the
    pre-crossing sum on nested Gauss-Legendre grids.
    """

    def __init__(
        self, lda: LDAModel, attachment: float, n_outer: int = 128, n_inner: int = 64
    ) -> None:
        if not (math.isfinite(attachment) and attachment > 0):
            raise ConfigError(f"attachment must be positive, got {attachment}")
        self.lda = lda
        self.attachment = attachment
        mu, lam = lda.severity.mu, lda.severity.lam
        self._mu, self._lam = mu, lam
        self._alpha = lam / mu**2
        m_max = lda.m_max
        self._m_max = m_max
        m = np.arange(1, m_max + 1)
        self._pm = poisson_pmf(m, lda.frequency)
        self._p0 = float(poisson_pmf(0, lda.frequency))
        self._f_att_m = _ig_cdf(attachment, m * mu, m * m * lam)
        self.prob_zero_gain = self._p0 + float(np.sum(self._pm * self._f_att_m))

        nodes, wts = _leggauss(n_outer, 0.0, attachment)
        self._u = attachment - nodes  # gap the crossing loss must exceed
        # h[r, q]: total weight on (pre-crossing sum at node q, r losses after
        # the crossing) = sum_i P[N = i + r + 1] w_q f_{S_i}(node_q)
        h = np.zeros((m_max, nodes.size))
        for i in range(1, m_max):
            dens = wts * _ig_pdf(nodes, i * mu, i * i * lam)
            for r in range(0, m_max - i):
                h[r] += self._pm[i + r] * dens
        self._h = h
        self._pr1 = self._pm.copy()  # P[N = r + 1] weights the crossing-first branch
        self._ti, self._wi = np.polynomial.legendre.leggauss(n_inner)
        # effective support bounds: where the crossing-loss density and the
        # largest residual sum's stop-loss transform have fully decayed
        x_hi = max(mu, attachment)
        while float(_ig_cdf(np.asarray(x_hi), mu, lam)) < 1.0 - 1e-15:
            x_hi *= 2.0
        self._x_hi = x_hi
        s_cap = max(m_max * mu, 1.0)
        while float(_ig_cdf(np.asarray(s_cap), m_max * mu, m_max * m_max * lam)) < 1.0 - 1e-15:
            s_cap *= 2.0
        self._s_cap = s_cap

        self._mean = self._reduce(self._psi_mean(self._u), self._psi_mean(np.array([attachment])))

    def _reduce(self, psi_u: np.ndarray, psi_att: np.ndarray) -> float:
        return float(np.sum(self._h * psi_u) + np.sum(self._pr1 * psi_att[:, 0]))

    def _psi_mean(self, u: np.ndarray) -> np.ndarray:
        """``int_u^inf f_X(x) (x + r mu) dx`` for each residual count r."""
        tail_first = self._mu * (1.0 - _gig_half_cdf(u, self._alpha, self._lam))
        tail_count = 1.0 - _ig_cdf(u, self._mu, self._lam)
        r = np.arange(self._m_max)[:, None]
        return tail_first[None, :] + r * self._mu * tail_count[None, :]

    def _psi_max(self, u: np.ndarray, c1: float, c2: float) -> np.ndarray:
        """``int_u^inf f_X(x) E[max{c1 + x + S_r, c2}] dx`` for each r.

        On (u, delta) the integrand is ``c2`` plus the residual sum's
        stop-loss transform ``E[(S_r - (delta - x))+]``; the bulk has an
        exact CDF form and the correction lives on a bounded window, so the
        quadrature grid never stretches with ``c2``.
        """
        delta = c2 - c1
        b0 = np.maximum(u, delta)
        tail_x = 1.0 - _ig_cdf(b0, self._mu, self._lam)
        tail_first = self._mu * (1.0 - _gig_half_cdf(b0, self._alpha, self._lam))
        r = np.arange(self._m_max)[:, None]
        out = (c1 + r * self._mu) * tail_x[None, :] + tail_first[None, :]
        low = u < delta
        if np.any(low):
            ulo = u[low]
            f_delta = float(_ig_cdf(np.asarray(delta), self._mu, self._lam))
            out[:, low] += c2 * (f_delta - _ig_cdf(ulo, self._mu, self._lam))[None, :]
            lo = np.maximum(ulo, delta - self._s_cap)
            hi = min(delta, self._x_hi)
            has = lo < hi
            if np.any(has) and self._m_max > 1:
                lo = lo[has]
                half = 0.5 * (hi - lo)
                x = lo[:, None] + half[:, None] * (self._ti[None, :] + 1.0)
                w = half[:, None] * self._wi[None, :]
                fx = w * _ig_pdf(x, self._mu, self._lam)
                y = delta - x
                rows = np.nonzero(low)[0][has]
                for rr in range(1, self._m_max):
                    fs_bar = 1.0 - _ig_cdf(y, rr * self._mu, rr * rr * self._lam)
                    fh_bar = 1.0 - _gig_half_cdf(y, self._alpha, rr * rr * self._lam)
                    stop_loss = rr * self._mu * fh_bar - y * fs_bar
                    out[rr, rows] += np.sum(fx * stop_loss, axis=1)
        return out

    @property
    def mean_gain(self) -> float:
        return self._mean

    def continuous_mass(self) -> float:
        """Quadrature mass of the strictly-positive-gain branches."""
        tail_u = np.tile(1.0 - _ig_cdf(self._u, self._mu, self._lam), (self._m_max, 1))
        tail_att = np.tile(
            1.0 - _ig_cdf(np.array([self.attachment]), self._mu, self._lam),
            (self._m_max, 1),
        )
        return self._reduce(tail_u, tail_att)

    def expected_max(self, c1: float, c2: float) -> float:
        if c2 == -math.inf:
            return c1 + self._mean
        _check_global_regime(c1, c2)
        if c2 == c1:
            return c1 + self._mean  # max{c1 + W, c1} = c1 + W for W >= 0
        att = np.array([self.attachment])
        val = self._reduce(self._psi_max(self._u, c1, c2), self._psi_max(att, c1, c2))
        return float(val + c2 * self.prob_zero_gain)


def pap_local_model(lda: LDAModel, attachment: float) -> PapLocalGain:
    return PapLocalGain(lda, attachment)


def pap_global_model(lda: LDAModel, attachment: float) -> PapGlobalGain:
    return PapGlobalGain(lda, attachment)


# ---------------------------------------------------------------------------
# Individual Loss Policy
# ---------------------------------------------------------------------------


class IlpLocalGain:
    """ILP, local objective, on the directly-modelled post-insurance process.

    ``Zt`` is compound Poisson with rate ``aux_rate`` and IG severities, so
    its restricted expectations are plain IG-sum / GIG CDF evaluations.
    """

    def __init__(self, aux: ILPAuxModel) -> None:
        self.aux = aux
        freq = FrequencyModel(rate=aux.aux_rate)
        n_max = poisson_m_max(freq, POISSON_TAIL)
        n = np.arange(1, n_max + 1)
        mu, lam = aux.aux_severity.mu, aux.aux_severity.lam
        self._n_mu = n * mu
        self._alpha = lam / mu**2
        self._beta = n * n * lam
        self._pn = poisson_pmf(n, freq)
        self._p0 = float(poisson_pmf(0, freq))
        self._mean_insured = aux.aux_rate * mu

    @property
    def mean_gain(self) -> float:
        return -self._mean_insured

    def expected_min_insured(self, q1: float, q2: float) -> float:
        d = q2 - q1
        f_d = _ig_cdf(d, self._n_mu, self._beta)
        f_d_half = _gig_half_cdf(d, self._alpha, self._beta)
        body = np.sum(self._pn * (self._n_mu * f_d_half + q1 * f_d + q2 * (1.0 - f_d)))
        return float(body + q1 * self._p0)

    def expected_max(self, c1: float, c2: float) -> float:
        if c2 == -math.inf:
            return c1 + self.mean_gain
        _check_local_regime(c1, c2)
        return -self.expected_min_insured(-c1, -c2)


def ilp_local_model(aux: ILPAuxModel) -> IlpLocalGain:
    return IlpLocalGain(aux)


def ilp_global_sample(
    lda: LDAModel, tcl: float, n_draws: int, seed: int
) -> EmpiricalGainSample:
    """Offline sample of the ILP global gain ``W = sum min(X_n, tcl)``."""
    if not (math.isfinite(tcl) and tcl > 0):
        raise ConfigError(f"tcl must be positive, got {tcl}")
    if n_draws < 1:
        raise ConfigError(f"need at least one draw, got {n_draws}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    counts = rng.poisson(lda.frequency.rate, n_draws)
    total = int(counts.sum())
    draws = np.zeros(n_draws)
    if total > 0:
        xs = np.minimum(sample_ig(lda.severity, rng, size=total), tcl)
        np.add.at(draws, np.repeat(np.arange(n_draws), counts), xs)
    return EmpiricalGainSample(draws=draws, seed=seed)


class EmpiricalGain:
    """Gain model backed by a stored Monte Carlo sample.

    The same sample is reused for every ``(c1, c2)`` evaluation, so the whole
    value recursion is driven by one offline simulation;
    :meth:`expected_max_stderr` reports the Monte Carlo error of any single
    evaluation.
    """

    def __init__(self, sample: EmpiricalGainSample) -> None:
        if len(sample.draws) < 10_000:
            warnings.warn(
                f"empirical gain model built from only {len(sample.draws)} draws",
                stacklevel=2,
            )
        self.sample = sample
        self._draws = np.asarray(sample.draws, dtype=float)
        self._mean = float(self._draws.mean())
        self._mean_se = float(self._draws.std(ddof=1) / math.sqrt(self._draws.size))

    @property
    def mean_gain(self) -> float:
        return self._mean

    @property
    def mean_gain_stderr(self) -> float:
        return self._mean_se

    def expected_max(self, c1: float, c2: float) -> float:
        if c2 == -math.inf:
            return c1 + self._mean
        _check_global_regime(c1, c2)
        return float(np.mean(np.maximum(c1 + self._draws, c2)))

    def expected_max_stderr(self, c1: float, c2: float) -> float:
        if c2 == -math.inf:
            return self._mean_se
        vals = np.maximum(c1 + self._draws, c2)
        return float(vals.std(ddof=1) / math.sqrt(vals.size))


def ilp_global_model(sample: EmpiricalGainSample) -> EmpiricalGain:
    return EmpiricalGain(sample)


# ---------------------------------------------------------------------------
# JSON configuration
# ---------------------------------------------------------------------------


def _require(cfg: dict, key: str) -> object:
    if key not in cfg:
        raise ConfigError(f"missing config field {key!r}")
    return cfg[key]


def lda_from_config(cfg: dict) -> LDAModel:
    """Build the loss law from ``{"frequency": {...}, "severity": {...}}``."""
    freq = _require(cfg, "frequency")
    sev = _require(cfg, "severity")
    try:
        frequency = FrequencyModel(rate=float(_require(freq, "rate")))
        severity = IGParams(mu=float(_require(sev, "mu")), lam=float(_require(sev, "lambda")))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    m_max = int(cfg.get("m_max", 0))
    return LDAModel(frequency=frequency, severity=severity, m_max=m_max)


def policy_from_config(cfg: dict) -> PolicySpec:
    pol = _require(cfg, "policy")
    return PolicySpec(
        kind=str(_require(pol, "kind")).upper(),
        param=float(_require(pol, "param")),
        objective=str(_require(cfg, "objective")).lower(),
    )


def aux_from_config(cfg: dict) -> ILPAuxModel:
    aux = _require(cfg, "aux")
    try:
        severity = IGParams(mu=float(_require(aux, "mu")), lam=float(_require(aux, "lambda")))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return ILPAuxModel(aux_rate=float(_require(aux, "rate")), aux_severity=severity)


def gain_model_from_config(cfg: dict):
    """Dispatch a config dict to the matching gain model.

    ILP/local reads the auxiliary post-insurance process from ``cfg["aux"]``;
    ILP/global draws its offline sample using ``cfg["mc"]``.
    """
    policy = policy_from_config(cfg)
    if policy.kind == "ALP":
        lda = lda_from_config(cfg)
        return alp_local_model(lda, policy.param) if policy.objective == LOCAL else (
            alp_global_model(lda, policy.param)
        )
    if policy.kind == "PAP":
        lda = lda_from_config(cfg)
        return pap_local_model(lda, policy.param) if policy.objective == LOCAL else (
            pap_global_model(lda, policy.param)
        )
    if policy.objective == LOCAL:
        return ilp_local_model(aux_from_config(cfg))
    mc = cfg.get("mc", {})
    sample = ilp_global_sample(
        lda_from_config(cfg),
        policy.param,
        n_draws=int(mc.get("samples", 100_000)),
        seed=int(mc.get("seed", 0)),
    )
    return ilp_global_model(sample)


def load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
