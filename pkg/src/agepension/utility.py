"""HARA utilities for consumption, luxury bequest and housing, and the
per-period reward that combines them."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields
from typing import Mapping

import numpy as np

from .errors import ConfigError, DomainError, InfeasibleConsumptionError
from .pension import KINDS, HouseholdKind


class FamilyState(enum.IntEnum):
    DEAD = -1  # died in an earlier period
    DIED = 0  # died during the last period; bequest is paid now
    SINGLE = 1
    COUPLE = 2

    @property
    def kind(self) -> HouseholdKind:
        if self is FamilyState.SINGLE:
            return HouseholdKind.SINGLE
        if self is FamilyState.COUPLE:
            return HouseholdKind.COUPLE
        raise DomainError(f"{self.name} has no household kind")

    @classmethod
    def of(cls, d: HouseholdKind) -> "FamilyState":
        return cls.COUPLE if HouseholdKind(d) is HouseholdKind.COUPLE else cls.SINGLE


def _kd(single: float, couple: float):
    return field(default_factory=lambda: {HouseholdKind.SINGLE: single,
                                          HouseholdKind.COUPLE: couple})


@dataclass(frozen=True)
class UtilityParams:
    """Preference parameters; per-kind fields are keyed by :class:`HouseholdKind`."""

    gamma: dict = _kd(-1.98, -1.78)
    gamma_housing: float = -1.87
    altruism: float = 0.96
    bequest_threshold: float = 27_200.0
    consumption_floor: dict = _kd(13_284.0, 20_607.0)
    health_decay: float = 1.18
    housing_preference: float = 0.044
    scale: dict = _kd(1.0, 1.3)

    def __post_init__(self):
        for k in KINDS:
            if not self.gamma[k] < 0:
                raise ConfigError(f"utility.gamma.{k.value}", "risk aversion must be < 0")
            if not self.consumption_floor[k] >= 0:
                raise ConfigError(f"utility.consumption_floor.{k.value}", "must be >= 0")
            if not self.scale[k] >= 1:
                raise ConfigError(f"utility.scale.{k.value}", "must be >= 1")
        if self.scale[HouseholdKind.SINGLE] != 1:
            raise ConfigError("utility.scale.single", "single scaling factor must equal 1")
        if not self.gamma_housing < 0:
            raise ConfigError("utility.gamma_housing", "must be < 0")
        if not 0 <= self.altruism < 1:
            raise ConfigError("utility.altruism", "must lie in [0, 1)")
        if not self.bequest_threshold >= 0:
            raise ConfigError("utility.bequest_threshold", "must be >= 0")
        if not self.health_decay >= 1:
            raise ConfigError("utility.health_decay", "must be >= 1")
        if not 0 < self.housing_preference <= 1:
            raise ConfigError("utility.housing_preference", "must lie in (0, 1]")

    @classmethod
    def from_dict(cls, raw: Mapping) -> "UtilityParams":
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, val in raw.items():
            if key not in known:
                raise ConfigError(f"utility.{key}", "unknown field")
            if isinstance(val, Mapping):
                try:
                    val = {HouseholdKind(k): float(v) for k, v in val.items()}
                except ValueError:
                    raise ConfigError(f"utility.{key}", "keys must be single/couple") from None
                if set(val) != set(KINDS):
                    raise ConfigError(f"utility.{key}", "needs both single and couple")
            else:
                val = float(val)
            kwargs[key] = val
        return cls(**kwargs)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = {k.value: v[k] for k in KINDS} if isinstance(v, dict) else v
        return out

    @property
    def bequest_gamma(self) -> float:
        return self.gamma[HouseholdKind.SINGLE]


# --- consumption ------------------------------------------------------------

def _consumption_core(C, d, t, t0, p: UtilityParams):
    g = p.gamma[d]
    x = (np.asarray(C, dtype=float) - p.consumption_floor[d]) / p.scale[d]
    return x, g, p.health_decay ** (t - t0)


def u_consumption(C, d: HouseholdKind, t, t0, p: UtilityParams):
    """Utility of consumption above the floor, decayed by the health proxy."""
    if np.any(np.asarray(t) < t0):
        raise DomainError("age precedes retirement age")
    x, g, health = _consumption_core(C, d, t, t0, p)
    if np.any(x <= 0):
        raise InfeasibleConsumptionError(
            f"consumption must exceed the floor {p.consumption_floor[d]}")
    out = x ** g / (health * g)
    return out if np.ndim(out) else float(out)


def u_consumption_masked(C, d: HouseholdKind, t, t0, p: UtilityParams):
    """As :func:`u_consumption` but ``-inf`` wherever consumption is infeasible."""
    x, g, health = _consumption_core(C, d, t, t0, p)
    ok = x > 0
    out = np.where(ok, np.where(ok, x, 1.0) ** g / (health * g), -np.inf)
    return out


def marginal_u_consumption(C, d: HouseholdKind, t, t0, p: UtilityParams):
    x, g, health = _consumption_core(C, d, t, t0, p)
    if np.any(x <= 0):
        raise InfeasibleConsumptionError("consumption must exceed the floor")
    out = x ** (g - 1) / (health * p.scale[d])
    return out if np.ndim(out) else float(out)


# --- bequest ----------------------------------------------------------------

def u_bequest(W, p: UtilityParams):
    """Luxury bequest utility of liquid wealth ``W``; finite at ``W = 0``."""
    W = np.asarray(W, dtype=float)
    if np.any(W < 0):
        raise DomainError("bequest wealth must be non-negative")
    g = p.bequest_gamma
    k = p.altruism / (1.0 - p.altruism)
    out = k ** (1.0 - g) * (k * p.bequest_threshold + W) ** g / g
    return out if out.ndim else float(out)


def marginal_u_bequest(W, p: UtilityParams):
    W = np.asarray(W, dtype=float)
    if np.any(W < 0):
        raise DomainError("bequest wealth must be non-negative")
    g = p.bequest_gamma
    k = p.altruism / (1.0 - p.altruism)
    out = k ** (1.0 - g) * (k * p.bequest_threshold + W) ** (g - 1.0)
    return out if out.ndim else float(out)


# --- housing ----------------------------------------------------------------

def housing_coefficient(d: HouseholdKind, p: UtilityParams) -> float:
    """Factor multiplying ``(lambda H) ** gamma_H`` in the housing utility."""
    g = p.gamma_housing
    return 1.0 / (g * p.scale[d] ** g)


def u_housing(H, d: HouseholdKind, p: UtilityParams):
    H = np.asarray(H, dtype=float)
    if np.any(H <= 0):
        raise DomainError("housing value must be positive; renters carry no housing term")
    g = p.gamma_housing
    out = (p.housing_preference * H / p.scale[d]) ** g / g
    return out if out.ndim else float(out)


def marginal_u_housing(H, d: HouseholdKind, p: UtilityParams):
    H = np.asarray(H, dtype=float)
    if np.any(H <= 0):
        raise DomainError("housing value must be positive")
    g, lam, z = p.gamma_housing, p.housing_preference, p.scale[d]
    out = (lam / z) * (lam * H / z) ** (g - 1.0)
    return out if out.ndim else float(out)


# --- reward -----------------------------------------------------------------

@dataclass(frozen=True)
class HouseholdState:
    age: int
    wealth: float
    family: FamilyState
    homeowner: bool = False
    housing: float = 0.0

    def __post_init__(self):
        if self.wealth < 0:
            raise DomainError("wealth must be non-negative")
        if self.homeowner and not self.housing > 0:
            raise DomainError("homeowner needs a positive housing value")


def reward(state: HouseholdState, consumption, p: UtilityParams,
           t0: int = 65, horizon: int = 100):
    """Per-period reward; at ``age == horizon`` the terminal reward applies."""
    G = FamilyState(state.family)
    if G is FamilyState.DEAD:
        return 0.0
    if state.age >= horizon or G is FamilyState.DIED:
        return u_bequest(state.wealth, p)
    d = G.kind
    out = u_consumption(consumption, d, state.age, t0, p)
    if state.homeowner:
        out = out + u_housing(state.housing, d, p)
    return out
