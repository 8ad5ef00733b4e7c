"""Multiple-stopping value recursion, claim thresholds, and online decisions.

The engine is generic over a :class:`GainModel`: any object exposing the
annual gain mean ``E[W]`` and the expectation ``E[max{c1 + W, c2}]``.  The
value ``v[L, l]`` of holding ``l`` claim rights with ``L`` years remaining
satisfies

* ``v[1, 1] = E[W]``,
* ``v[L, 1] = E[max{W, v[L-1, 1]}]``,
* ``v[L, l] = E[max{v[L-1, l-1] + W, v[L-1, l]}]`` for ``1 < l < L``,
* ``v[l, l] = v[l-1, l-1] + E[W]`` (claiming is forced every year).

The induced rule claims the ``i``-th right in year ``m`` as soon as the
observed gain reaches ``v[T-m, k-i+1] - v[T-m, k-i]`` (with ``v[., 0] = 0``),
and claims unconditionally once the remaining years equal the remaining
rights.  That boundary is encoded as a ``-inf`` threshold so a single
comparison drives every decision.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

import numpy as np
from scipy.special import ndtr

from .distributions import NumericalError


@runtime_checkable
class GainModel(Protocol):
    """Contract every policy model implements for the value recursion."""

    @property
    def mean_gain(self) -> float: ...

    def expected_max(self, c1: float, c2: float) -> float:
        """``E[max{c1 + W, c2}]`` for the model's annual gain ``W``."""
        ...


@dataclass(frozen=True)
class Horizon:
    """Contract horizon: ``T`` coverage years, ``k`` claim rights, k < T."""

    T: int
    k: int

    def __post_init__(self) -> None:
        if self.T < 2 or self.k < 1 or self.k >= self.T:
            raise ValueError(f"need 1 <= k < T, got T={self.T}, k={self.k}")


class Decision(enum.Enum):
    CLAIM = "claim"
    WAIT = "wait"


@dataclass(frozen=True)
class ValueTable:
    """Triangular value array ``v[L, l]`` for ``1 <= l <= min(L, k)``."""

    T: int
    k: int
    values: np.ndarray  # shape (T+1, k+1); NaN where undefined; v[0, 0] = 0

    def value(self, L: int, l: int) -> float:
        if not (1 <= l <= min(L, self.k)) or L > self.T:
            raise ValueError(f"v[{L},{l}] undefined for T={self.T}, k={self.k}")
        return float(self.values[L, l])

    def threshold(self, L: int, i: int) -> float:
        """Claim trigger for the ``i``-th right with ``L`` years still ahead.

        ``-inf`` on the forced boundary (L <= k - i): the right must be used.
        """
        if not (1 <= i <= self.k):
            raise ValueError(f"right index must be in 1..{self.k}, got {i}")
        stops_after = self.k - i  # rights left after using this one
        if L <= stops_after:
            return -math.inf
        upper = self.values[L, stops_after + 1]
        lower = self.values[L, stops_after] if stops_after >= 1 else 0.0
        return float(upper - lower)

    @property
    def game_value(self) -> float:
        return self.value(self.T, self.k)

    def to_csv(self, path) -> None:
        """Rows L = 1..T, columns l = 1..k, blank above the diagonal."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["L"] + [f"l={l}" for l in range(1, self.k + 1)])
            for L in range(1, self.T + 1):
                row = [L]
                for l in range(1, self.k + 1):
                    row.append(f"{self.values[L, l]:.6f}" if l <= min(L, self.k) else "")
                writer.writerow(row)


def compute_value_table(model: GainModel, horizon: Horizon) -> ValueTable:
    """Fill the value triangle by backward recursion over (L, l)."""
    T, k = horizon.T, horizon.k
    v = np.full((T + 1, k + 1), np.nan)
    v[0, 0] = 0.0
    mean_gain = model.mean_gain
    for l in range(1, k + 1):
        for L in range(l, T + 1):
            try:
                if L == l:
                    prev = v[l - 1, l - 1]
                    v[L, l] = prev + mean_gain
                elif l == 1:
                    v[L, 1] = model.expected_max(0.0, v[L - 1, 1])
                else:
                    v[L, l] = model.expected_max(v[L - 1, l - 1], v[L - 1, l])
            except Exception as exc:  # annotate with the failing cell
                raise NumericalError(f"gain model failed at cell (L={L}, l={l}): {exc}") from exc
    return ValueTable(T=T, k=k, values=v)


def thresholds(table: ValueTable) -> np.ndarray:
    """Threshold matrix ``b[L, i]`` for L = 0..T-1 (rows) and i = 1..k (cols)."""
    out = np.empty((table.T, table.k))
    for L in range(0, table.T):
        for i in range(1, table.k + 1):
            out[L, i - 1] = table.threshold(L, i)
    return out


@dataclass(frozen=True)
class StoppingState:
    """Online position: current year, rights already used, and the table."""

    year: int
    rights_used: int
    horizon: Horizon
    table: ValueTable

    def __post_init__(self) -> None:
        T, k = self.horizon.T, self.horizon.k
        if not (1 <= self.year <= T):
            raise ValueError(f"year {self.year} outside 1..{T}")
        if not (0 <= self.rights_used < k):
            raise ValueError(f"rights_used {self.rights_used} outside 0..{k - 1}")
        years_left = T - self.year + 1
        rights_left = k - self.rights_used
        if rights_left > years_left:
            raise ValueError(
                f"infeasible state: {rights_left} rights left but only {years_left} years"
            )

    @property
    def current_threshold(self) -> float:
        return self.table.threshold(self.horizon.T - self.year, self.rights_used + 1)


def decide(state: StoppingState, observed_gain: float) -> Decision:
    """Claim iff the observed gain meets the active threshold (ties claim)."""
    return Decision.CLAIM if observed_gain >= state.current_threshold else Decision.WAIT


@dataclass(frozen=True)
class StoppingResult:
    taus: tuple[int, ...]
    realized_gain: float


def run_rule(gains: Sequence[float], table: ValueTable) -> StoppingResult:
    """Apply the threshold rule year by year along one gain path."""
    T, k = table.T, table.k
    if len(gains) != T:
        raise ValueError(f"need {T} annual gains, got {len(gains)}")
    horizon = Horizon(T=T, k=k)
    taus: list[int] = []
    for year in range(1, T + 1):
        if len(taus) == k:
            break
        state = StoppingState(year=year, rights_used=len(taus), horizon=horizon, table=table)
        if decide(state, float(gains[year - 1])) is Decision.CLAIM:
            taus.append(year)
    realized = float(sum(gains[t - 1] for t in taus))
    return StoppingResult(taus=tuple(taus), realized_gain=realized)


class LogNormalLocalGain:
    """Reference gain model: insured annual loss is LogNormal, gain W = -loss.

    Both contract quantities are elementary: ``E[W] = -exp(mu + sigma^2/2)``
    and ``E[max{c1 - Z, c2}]`` splits at ``Z = c1 - c2`` into a truncated
    lognormal mean plus CDF terms.
    """

    def __init__(self, mu: float = 0.0, sigma: float = 1.0) -> None:
        if not (sigma > 0 and math.isfinite(sigma) and math.isfinite(mu)):
            raise ValueError(f"need finite mu and sigma > 0, got mu={mu}, sigma={sigma}")
        self.mu = mu
        self.sigma = sigma
        self._ez = math.exp(mu + 0.5 * sigma * sigma)

    @property
    def mean_gain(self) -> float:
        return -self._ez

    def _cdf(self, d: float) -> float:
        if d <= 0.0:
            return 0.0
        return float(ndtr((math.log(d) - self.mu) / self.sigma))

    def _partial_mean(self, d: float) -> float:
        """``E[Z; Z <= d]`` for the lognormal loss Z."""
        if d <= 0.0:
            return 0.0
        return self._ez * float(ndtr((math.log(d) - self.mu - self.sigma**2) / self.sigma))

    def expected_max(self, c1: float, c2: float) -> float:
        if c2 == -math.inf:
            return c1 + self.mean_gain
        d = c1 - c2  # claim region: loss <= c1 - c2
        f = self._cdf(d)
        return c1 * f - self._partial_mean(d) + c2 * (1.0 - f)


def lognormal_local_model(mu: float, sigma: float) -> LogNormalLocalGain:
    """Gain model for i.i.d. LogNormal(mu, sigma^2) insured losses."""
    return LogNormalLocalGain(mu=mu, sigma=sigma)
