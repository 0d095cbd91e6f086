"""State dynamics: mortality, family-state transitions, wealth transition,
discounting, minimum withdrawals and Gauss-Hermite expectations."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from .errors import ConfigError, DomainError
from .utility import FamilyState


# --- mortality --------------------------------------------------------------

@dataclass(frozen=True)
class MortalityTable:
    """One-year survival probabilities ``p[age]`` for ``age`` in ``ages``."""

    ages: np.ndarray
    survival: np.ndarray
    source: str = ""

    def __post_init__(self):
        ages = np.asarray(self.ages, dtype=int)
        surv = np.asarray(self.survival, dtype=float)
        if ages.shape != surv.shape or ages.ndim != 1 or ages.size == 0:
            raise ConfigError("life_table", "ages and survival must be equal-length vectors")
        if np.any(np.diff(ages) != 1):
            raise ConfigError("life_table.age", "ages must be consecutive integers")
        bad = np.flatnonzero(~((surv > 0) & (surv <= 1)))
        if bad.size:
            raise ConfigError(f"life_table.row[{bad[0]}]",
                              f"survival probability {surv[bad[0]]} at age {ages[bad[0]]} not in (0, 1]")
        object.__setattr__(self, "ages", ages)
        object.__setattr__(self, "survival", surv)

    def p(self, age) -> np.ndarray | float:
        age = np.asarray(age)
        if np.any(age < self.ages[0]) or np.any(age > self.ages[-1]):
            raise DomainError(f"age {age} outside life table [{self.ages[0]}, {self.ages[-1]}]")
        out = self.survival[age - self.ages[0]]
        return out if out.ndim else float(out)

    def life_expectancy(self, age: int, horizon: int) -> float:
        """Complete expectation of life at ``age`` with death certain by ``horizon``.

        Approximated as curtate expectation plus one half.
        """
        if not self.ages[0] <= age < horizon <= self.ages[-1] + 1:
            raise DomainError("age range not covered by the life table")
        k = np.cumprod(self.p(np.arange(age, horizon)))
        return float(k.sum() + 0.5)


def _read_rows(text: str) -> tuple[list[dict], list[str]]:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ConfigError("life_table", "no data rows")
    dialect = csv.Sniffer().sniff(lines[0], delimiters=",;\t ")
    reader = csv.DictReader(io.StringIO("\n".join(lines)), dialect=dialect)
    reader.fieldnames = [f.strip().lower() for f in reader.fieldnames]
    return list(reader), reader.fieldnames


def parse_life_table(text: str, source: str = "") -> MortalityTable:
    """Parse a delimited life table.

    Accepted headers: ``age,unisex`` or ``age,male,female`` (survival
    probabilities). The unisex probability is the mean of male and female.
    """
    rows, header = _read_rows(text)
    if "age" not in header:
        raise ConfigError("life_table.header", "missing 'age' column")
    ages, surv = [], []
    for i, row in enumerate(rows):
        try:
            ages.append(int(float(row["age"])))
            if "unisex" in header:
                surv.append(float(row["unisex"]))
            elif "male" in header and "female" in header:
                surv.append(0.5 * (float(row["male"]) + float(row["female"])))
            else:
                raise ConfigError("life_table.header", "need 'unisex' or 'male' and 'female'")
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"life_table.row[{i}]", f"unparseable row {row}") from None
    for i, s in enumerate(surv):
        if not 0 < s <= 1:
            raise ConfigError(f"life_table.row[{i}]",
                              f"survival probability {s} at age {ages[i]} not in (0, 1]")
    return MortalityTable(np.array(ages), np.array(surv), source=source)


def load_life_table(path: str | Path | None = None) -> MortalityTable:
    if path is None:
        text = resources.files("agepension").joinpath("data/life_table_au.csv").read_text()
        return parse_life_table(text, source="bundled:life_table_au.csv")
    path = Path(path)
    if not path.is_file():
        raise ConfigError("life_table", f"file not found: {path}")
    return parse_life_table(path.read_text(), source=str(path))


def family_transition_probs(G: FamilyState, age: int, table: MortalityTable) -> dict:
    """Distribution of next year's family state.

    Couples lose one member at a time; a couple never jumps straight to the
    bequest state. Couple survival is keyed to a single (oldest) age.
    """
    G = FamilyState(G)
    if G in (FamilyState.DEAD, FamilyState.DIED):
        return {FamilyState.DEAD: 1.0}
    q = table.p(age)
    if G is FamilyState.COUPLE:
        return {FamilyState.COUPLE: q, FamilyState.SINGLE: 1.0 - q}
    return {FamilyState.SINGLE: q, FamilyState.DIED: 1.0 - q}


# --- market -----------------------------------------------------------------

@dataclass(frozen=True)
class MarketParams:
    """Nominal risky drift, volatility, real risk-free rate and inflation.

    Real log-returns on the risky asset are Normal(mu - inflation, sigma).
    """

    mu: float = 0.081
    sigma: float = 0.133
    r: float = 0.005
    inflation: float = 0.025

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigError("market.sigma", "must be >= 0")

    @property
    def real_drift(self) -> float:
        return self.mu - self.inflation

    def expected_gross_risky(self) -> float:
        return float(np.exp(self.real_drift + 0.5 * self.sigma ** 2))

    def median_gross_risky(self) -> float:
        return float(np.exp(self.real_drift))


def wealth_step(W, alpha, delta, z, r):
    """Next-period liquid wealth after drawdown ``alpha`` and risky share ``delta``."""
    W = np.asarray(W, dtype=float)
    if np.any(W < 0):
        raise DomainError("wealth must be non-negative")
    return (W - alpha * W) * (delta * np.exp(z) + (1.0 - delta) * np.exp(r))


def discount_factor(t, t_prime, r) -> float:
    """exp(-sum of rates over the years t, ..., t'-1); equals 1 when t == t'.

    ``r`` is a constant rate, or a callable/sequence giving the rate for a year.
    """
    if t > t_prime:
        raise DomainError(f"discounting backwards from {t} to {t_prime}")
    if np.isscalar(r):
        return float(np.exp(-r * (t_prime - t)))
    years = range(int(t), int(t_prime))
    rate = r if callable(r) else (lambda i: r[i])
    return float(np.exp(-sum(rate(i) for i in years)))


# --- minimum withdrawals ----------------------------------------------------

DEFAULT_WITHDRAWAL_BANDS = ((64, 0.04), (74, 0.05), (79, 0.06), (84, 0.07),
                            (89, 0.09), (94, 0.11), (None, 0.14))


@dataclass(frozen=True)
class WithdrawalSchedule:
    """Minimum annual drawdown by age band; ``bands`` holds (upper age, rate)."""

    bands: tuple = DEFAULT_WITHDRAWAL_BANDS
    enforced: bool = True

    def __post_init__(self):
        rates = [b[1] for b in self.bands]
        if any(not 0 < r < 1 for r in rates):
            raise ConfigError("withdrawal.bands", "rates must lie in (0, 1)")
        if any(b > a for a, b in zip(rates[1:], rates[:-1])):
            raise ConfigError("withdrawal.bands", "rates must be non-decreasing in age")
        if self.bands[-1][0] is not None:
            raise ConfigError("withdrawal.bands", "last band must be open-ended")

    def min_rate(self, age: int) -> float:
        if not self.enforced:
            return 0.0
        for upper, rate in self.bands:
            if upper is None or age <= upper:
                return rate
        raise AssertionError("unreachable")

    def band_edges(self) -> list[int]:
        return [upper + 1 for upper, _ in self.bands[:-1]]


# --- quadrature -------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureRule:
    """Standard-normal nodes and probability weights."""

    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def gauss_hermite(cls, n: int = 10) -> "QuadratureRule":
        if n < 1:
            raise ConfigError("quadrature.nodes", "need at least one node")
        x, w = hermegauss(n)
        return cls(nodes=x, weights=w / w.sum())

    def expect(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


def return_draws(quad: QuadratureRule, market: MarketParams) -> np.ndarray:
    return market.real_drift + market.sigma * quad.nodes


def expected_value_next(W, alpha, delta, continuation: Callable, quad: QuadratureRule,
                        market: MarketParams):
    """E[continuation(W')] over the risky return, by quadrature."""
    z = return_draws(quad, market)
    Wn = wealth_step(np.asarray(W, dtype=float)[..., None], np.asarray(alpha)[..., None],
                     np.asarray(delta)[..., None], z, market.r)
    out = (continuation(Wn) * quad.weights).sum(axis=-1)
    return out if np.ndim(out) else float(out)
