"""Means-tested Age Pension.

The pension is the smaller of the asset-test and income-test entitlements,
capped at the full rate and floored at zero. Two income-test variants exist:

* ``deemed``: assessed income is the deemed return on the account balance.
* ``drawdown``: assessed income is the actual withdrawal less a fixed
  deduction set when the account was opened (grandfathered accounts).

Parameters are read from ``data/policy.yaml``; see :func:`load_regimes`.
"""
from __future__ import annotations

import copy
import enum
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping

import numpy as np
import yaml

from .errors import ConfigError, DomainError


class HouseholdKind(str, enum.Enum):
    SINGLE = "single"
    COUPLE = "couple"


class IncomeTestMode(str, enum.Enum):
    DRAWDOWN = "drawdown"
    DEEMED = "deemed"


KINDS = (HouseholdKind.SINGLE, HouseholdKind.COUPLE)


def _by_kind(raw: Mapping, field: str) -> dict[HouseholdKind, float]:
    try:
        return {k: float(raw[k.value]) for k in KINDS}
    except KeyError as exc:
        raise ConfigError(field, f"missing entry for {exc.args[0]}") from None


@dataclass(frozen=True)
class PensionParams:
    full_pension: dict[HouseholdKind, float]
    income_threshold: dict[HouseholdKind, float]
    income_taper: dict[HouseholdKind, float]
    asset_threshold_homeowner: dict[HouseholdKind, float]
    asset_threshold_non_homeowner: dict[HouseholdKind, float]
    asset_taper: dict[HouseholdKind, float]
    deeming_threshold: dict[HouseholdKind, float]
    deeming_rate_below: float
    deeming_rate_above: float

    def __post_init__(self):
        positive = {
            "full_pension": self.full_pension,
            "income_test.threshold": self.income_threshold,
            "asset_test.threshold_homeowner": self.asset_threshold_homeowner,
            "asset_test.threshold_non_homeowner": self.asset_threshold_non_homeowner,
            "deeming.threshold": self.deeming_threshold,
        }
        for name, table in positive.items():
            for k, v in table.items():
                if not v > 0:
                    raise ConfigError(f"params.{name}.{k.value}", f"must be > 0, got {v}")
        for name, table in (("income_test.taper", self.income_taper),
                            ("asset_test.taper", self.asset_taper)):
            for k, v in table.items():
                if not 0 < v < 1:
                    raise ConfigError(f"params.{name}.{k.value}", f"must lie in (0, 1), got {v}")
        for name, v in (("rate_below", self.deeming_rate_below),
                        ("rate_above", self.deeming_rate_above)):
            if not 0 <= v < 1:
                raise ConfigError(f"params.deeming.{name}", f"must lie in [0, 1), got {v}")
        if self.deeming_rate_below > self.deeming_rate_above:
            raise ConfigError("params.deeming.rate_below",
                              "lower deeming rate exceeds the upper deeming rate")
        for k in KINDS:
            if not self.asset_threshold_homeowner[k] < self.asset_threshold_non_homeowner[k]:
                raise ConfigError(f"params.asset_test.threshold_homeowner.{k.value}",
                                  "homeowner threshold must be below the non-homeowner threshold")

    @classmethod
    def from_dict(cls, raw: Mapping) -> "PensionParams":
        try:
            inc, ast, dem = raw["income_test"], raw["asset_test"], raw["deeming"]
            return cls(
                full_pension=_by_kind(raw["full_pension"], "params.full_pension"),
                income_threshold=_by_kind(inc["threshold"], "params.income_test.threshold"),
                income_taper=_by_kind(inc["taper"], "params.income_test.taper"),
                asset_threshold_homeowner=_by_kind(
                    ast["threshold_homeowner"], "params.asset_test.threshold_homeowner"),
                asset_threshold_non_homeowner=_by_kind(
                    ast["threshold_non_homeowner"], "params.asset_test.threshold_non_homeowner"),
                asset_taper=_by_kind(ast["taper"], "params.asset_test.taper"),
                deeming_threshold=_by_kind(dem["threshold"], "params.deeming.threshold"),
                deeming_rate_below=float(dem["rate_below"]),
                deeming_rate_above=float(dem["rate_above"]),
            )
        except KeyError as exc:
            raise ConfigError(f"params.{exc.args[0]}", "missing field") from None

    def to_dict(self) -> dict:
        kd = lambda t: {k.value: t[k] for k in KINDS}  # noqa: E731
        return {
            "full_pension": kd(self.full_pension),
            "income_test": {"threshold": kd(self.income_threshold),
                            "taper": kd(self.income_taper)},
            "asset_test": {"threshold_homeowner": kd(self.asset_threshold_homeowner),
                           "threshold_non_homeowner": kd(self.asset_threshold_non_homeowner),
                           "taper": kd(self.asset_taper)},
            "deeming": {"threshold": kd(self.deeming_threshold),
                        "rate_below": self.deeming_rate_below,
                        "rate_above": self.deeming_rate_above},
        }

    def asset_threshold(self, d: HouseholdKind, homeowner: bool) -> float:
        table = self.asset_threshold_homeowner if homeowner else self.asset_threshold_non_homeowner
        return table[d]


@dataclass(frozen=True)
class PolicyRegime:
    name: str
    label: str
    params: PensionParams
    income_test: IncomeTestMode

    @property
    def deemed(self) -> bool:
        return self.income_test is IncomeTestMode.DEEMED


@dataclass(frozen=True)
class GrandfatherRecord:
    """Opening state of a pre-2015 account, fixing its income-test deduction."""

    opening_balance: float
    life_expectancy: float
    start_age: int
    inflation: float

    def __post_init__(self):
        if self.opening_balance < 0:
            raise DomainError(f"opening balance must be >= 0, got {self.opening_balance}")
        if not self.life_expectancy > 0:
            raise DomainError(f"life expectancy must be > 0, got {self.life_expectancy}")


def _deep_merge(base: dict, override: Mapping) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, Mapping) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def resolve_documents(documents: list[Mapping]) -> dict[str, dict]:
    """Resolve ``extends`` chains into one flat raw document per regime."""
    raw = {}
    for i, doc in enumerate(documents):
        if not isinstance(doc, Mapping) or "regime" not in doc:
            raise ConfigError(f"document[{i}].regime", "missing regime name")
        raw[doc["regime"]] = doc
    resolved: dict[str, dict] = {}

    def resolve(name: str, seen: tuple = ()) -> dict:
        if name in resolved:
            return resolved[name]
        if name in seen:
            raise ConfigError(f"{name}.extends", "circular extends chain")
        if name not in raw:
            raise ConfigError(f"{seen[-1]}.extends" if seen else name, f"unknown regime {name!r}")
        doc = dict(raw[name])
        parent = doc.pop("extends", None)
        if parent is not None:
            doc = _deep_merge(resolve(parent, seen + (name,)), doc)
        resolved[name] = doc
        return doc

    for name in raw:
        resolve(name)
    return resolved


def regime_from_raw(name: str, doc: Mapping, overrides: Mapping | None = None) -> PolicyRegime:
    params = doc.get("params")
    if params is None:
        raise ConfigError(f"{name}.params", "missing field")
    if overrides:
        params = _deep_merge(params, overrides)
    try:
        mode = IncomeTestMode(doc.get("income_test"))
    except ValueError:
        raise ConfigError(f"{name}.income_test",
                          f"must be one of {[m.value for m in IncomeTestMode]}") from None
    return PolicyRegime(name=name, label=str(doc.get("label", name)),
                        params=PensionParams.from_dict(params), income_test=mode)


def load_policy_documents(path: str | Path | None = None) -> dict[str, dict]:
    if path is None:
        text = resources.files("agepension").joinpath("data/policy.yaml").read_text()
    else:
        text = Path(path).read_text()
    return resolve_documents([d for d in yaml.safe_load_all(text) if d is not None])


def load_regimes(path: str | Path | None = None,
                 overrides: Mapping | None = None) -> dict[str, PolicyRegime]:
    """Load every regime in a policy file (the bundled one by default)."""
    docs = load_policy_documents(path)
    return {name: regime_from_raw(name, doc, overrides) for name, doc in docs.items()}


REGIME_ALIASES = {"post2015_rebalanced": "post2015r"}


def load_regime(name: str, path: str | Path | None = None,
                overrides: Mapping | None = None) -> PolicyRegime:
    docs = load_policy_documents(path)
    name = REGIME_ALIASES.get(name, name)
    if name not in docs:
        raise ConfigError("regime", f"unknown regime {name!r}; available: {sorted(docs)}")
    return regime_from_raw(name, docs[name], overrides)


# --- means test -------------------------------------------------------------

def deemed_income(W, d: HouseholdKind, params: PensionParams):
    """Deemed annual income on financial assets ``W``."""
    W = np.asarray(W, dtype=float)
    if np.any(W < 0):
        raise DomainError("wealth must be non-negative")
    kappa = params.deeming_threshold[d]
    out = (params.deeming_rate_below * np.minimum(W, kappa)
           + params.deeming_rate_above * np.maximum(0.0, W - kappa))
    return out if out.ndim else float(out)


def income_test_deduction(g: GrandfatherRecord, t):
    """Real value at age ``t`` of the deduction fixed at account opening."""
    t = np.asarray(t, dtype=float)
    if np.any(t < g.start_age):
        raise DomainError(f"age {t} precedes account opening at {g.start_age}")
    out = g.opening_balance / g.life_expectancy * (1.0 + g.inflation) ** (g.start_age - t)
    return out if out.ndim else float(out)


def asset_test(W, d: HouseholdKind, homeowner: bool, params: PensionParams):
    return params.full_pension[d] - (W - params.asset_threshold(d, homeowner)) * params.asset_taper[d]


def income_test(income, d: HouseholdKind, params: PensionParams):
    return params.full_pension[d] - (income - params.income_threshold[d]) * params.income_taper[d]


def assessed_income(W, drawdown, d: HouseholdKind, regime: PolicyRegime,
                    grandfather: GrandfatherRecord | None = None, t=None):
    if regime.deemed:
        return deemed_income(W, d, regime.params)
    if grandfather is None:
        raise ConfigError("grandfather", f"regime {regime.name!r} needs a grandfather record")
    if t is None:
        raise ConfigError("t", "drawdown income test needs the current age")
    # Open question: deduction larger than drawdown; assessed income floors at zero.
    return np.maximum(np.asarray(drawdown, dtype=float) - income_test_deduction(grandfather, t), 0.0)


def age_pension(W, drawdown, d: HouseholdKind, homeowner: bool, regime: PolicyRegime,
                grandfather: GrandfatherRecord | None = None, t=None):
    """Annual Age Pension on start-of-year balance ``W``.

    ``drawdown`` is the dollar withdrawal for the year; it only matters for
    the drawdown income test. Arrays broadcast.
    """
    W = np.asarray(W, dtype=float)
    if np.any(W < 0):
        raise DomainError("wealth must be non-negative")
    p = regime.params
    income = assessed_income(W, drawdown, d, regime, grandfather, t)
    pa = asset_test(W, d, homeowner, p)
    pi = income_test(income, d, p)
    out = np.maximum(0.0, np.minimum(p.full_pension[d], np.minimum(pa, pi)))
    return out if out.ndim else float(out)


def binding_test_crossover(d: HouseholdKind, homeowner: bool, regime: PolicyRegime) -> float:
    """Wealth at which the asset and deemed income tests give the same pension."""
    if not regime.deemed:
        raise DomainError("crossover is undefined when income depends on the drawdown")
    p = regime.params
    wa, wi = p.asset_taper[d], p.income_taper[d]
    la, li, kappa = p.asset_threshold(d, homeowner), p.income_threshold[d], p.deeming_threshold[d]
    lo, hi = p.deeming_rate_below, p.deeming_rate_above
    # P_A - P_I = -wa (W - la) + wi (I(W) - li), linear on each side of kappa
    for slope, offset, (a, b) in (
        (hi, (lo - hi) * kappa, (kappa, np.inf)),
        (lo, 0.0, (0.0, kappa)),
    ):
        denom = wa - wi * slope
        if denom == 0:
            continue
        w = (wa * la + wi * (offset - li)) / denom
        if a <= w <= b:
            return float(w)
    raise DomainError("asset and income tests never coincide for these parameters")


def zero_pension_wealth(d: HouseholdKind, homeowner: bool, regime: PolicyRegime) -> float:
    """Lowest wealth receiving no pension in deemed mode."""
    if not regime.deemed:
        raise DomainError("cutoff depends on the drawdown in drawdown mode")
    p = regime.params
    w_asset = p.asset_threshold(d, homeowner) + p.full_pension[d] / p.asset_taper[d]
    income_cut = p.income_threshold[d] + p.full_pension[d] / p.income_taper[d]
    kappa = p.deeming_threshold[d]
    if income_cut <= p.deeming_rate_below * kappa:
        w_income = income_cut / p.deeming_rate_below
    else:
        w_income = kappa + (income_cut - p.deeming_rate_below * kappa) / p.deeming_rate_above
    return float(min(w_asset, w_income))


def pension_kinks(d: HouseholdKind, homeowner: bool, regime: PolicyRegime) -> list[float]:
    """Breakpoints of the deemed-mode pension as a function of wealth."""
    if not regime.deemed:
        raise DomainError("kinks depend on the drawdown in drawdown mode")
    p = regime.params
    kappa = p.deeming_threshold[d]
    li = p.income_threshold[d]
    if li <= p.deeming_rate_below * kappa:
        free_area = li / p.deeming_rate_below
    else:
        free_area = kappa + (li - p.deeming_rate_below * kappa) / p.deeming_rate_above
    candidates = {kappa, free_area, p.asset_threshold(d, homeowner),
                  zero_pension_wealth(d, homeowner, regime)}
    try:
        candidates.add(binding_test_crossover(d, homeowner, regime))
    except DomainError:
        pass
    cutoff = zero_pension_wealth(d, homeowner, regime)

    def pension(w):
        return age_pension(w, 0.0, d, homeowner, regime)

    kinks = []
    for w in sorted(candidates):
        if not 0 < w <= cutoff:
            continue
        left = pension(w) - pension(w - 1.0)
        right = pension(w + 1.0) - pension(w)
        if abs(right - left) > 1e-9:
            kinks.append(float(w))
    return kinks
