"""Scenario configuration: one solver run, loadable from YAML.

Every field has a default reproducing the calibrated model; a YAML file
only needs the fields it overrides. Unknown keys are rejected with the
dotted path of the offending field.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import ConfigError
from .lifecycle import (MarketParams, MortalityTable, QuadratureRule, WithdrawalSchedule,
                        load_life_table)
from .pension import REGIME_ALIASES as _EXTRA_ALIASES
from .pension import GrandfatherRecord, HouseholdKind, PolicyRegime, load_regime
from .utility import UtilityParams

REGIME_ALIASES = {"pre2015": "pre2015", "post2015": "post2015", "post2015r": "post2015r",
                  **_EXTRA_ALIASES}


@dataclass(frozen=True)
class GridSpec:
    w_min: float = 1_000.0
    w_max: float = 3_000_000.0
    n_wealth: int = 120

    def __post_init__(self):
        if not 0 < self.w_min < self.w_max:
            raise ConfigError("grid.w_min", "need 0 < w_min < w_max")
        if self.n_wealth < 2:
            raise ConfigError("grid.n_wealth", "need at least two nodes")


@dataclass(frozen=True)
class ControlSpec:
    n_alpha: int = 21
    n_delta: int = 21
    refine_rounds: int = 3
    golden_tol: float = 1e-5

    def __post_init__(self):
        if self.n_alpha < 2 or self.n_delta < 2:
            raise ConfigError("controls.n_alpha", "coarse grids need at least two points")
        if self.refine_rounds < 0:
            raise ConfigError("controls.refine_rounds", "must be >= 0")


RENTING_MODES = ("below_lower_bound", "optional")


@dataclass(frozen=True)
class HousingSpec:
    search: bool = False
    lower_bound: float = 30_000.0
    total_wealth_min: float = 50_000.0
    total_wealth_max: float = 2_000_000.0
    n_total_wealth: int = 40
    # opening balances solved when the income test depends on the opening balance
    n_opening_balances: int = 48
    # "below_lower_bound": renting is only possible when total wealth is under
    # lower_bound (owning is otherwise required, since the housing utility
    # diverges to -inf as H -> 0). "optional": renting is always available
    # and carries no housing term.
    renting: str = "below_lower_bound"

    def __post_init__(self):
        if self.renting not in RENTING_MODES:
            raise ConfigError("housing.renting", f"must be one of {RENTING_MODES}")
        if self.lower_bound <= 0:
            raise ConfigError("housing.lower_bound", "must be > 0")
        if not 0 < self.total_wealth_min < self.total_wealth_max:
            raise ConfigError("housing.total_wealth_min", "need 0 < min < max")


@dataclass(frozen=True)
class ScenarioConfig:
    regime: str = "post2015"
    household: HouseholdKind = HouseholdKind.SINGLE
    homeowner: bool = False
    t0: int = 65
    T: int = 100
    market: MarketParams = field(default_factory=MarketParams)
    utility: UtilityParams = field(default_factory=UtilityParams)
    policy_file: str | None = None
    pension_overrides: dict = field(default_factory=dict)
    grid: GridSpec = field(default_factory=GridSpec)
    quadrature_nodes: int = 10
    controls: ControlSpec = field(default_factory=ControlSpec)
    withdrawal: WithdrawalSchedule = field(default_factory=WithdrawalSchedule)
    housing: HousingSpec = field(default_factory=HousingSpec)
    life_table: str | None = None
    opening_balance: float = 500_000.0
    output_dir: str = "output"
    seed: int = 20161

    def __post_init__(self):
        if self.regime not in REGIME_ALIASES:
            raise ConfigError("regime", f"unknown regime {self.regime!r}")
        object.__setattr__(self, "regime", REGIME_ALIASES[self.regime])
        object.__setattr__(self, "household", HouseholdKind(self.household))
        if not self.t0 < self.T:
            raise ConfigError("t0", "retirement age must precede the horizon")
        if self.quadrature_nodes < 1:
            raise ConfigError("quadrature_nodes", "must be >= 1")
        if self.opening_balance < 0:
            raise ConfigError("opening_balance", "must be >= 0")

    # --- construction ------------------------------------------------------

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ScenarioConfig":
        raw = dict(raw or {})
        known = {f.name for f in fields(cls)}
        for key in raw:
            if key not in known:
                raise ConfigError(key, "unknown field")
        kw: dict[str, Any] = {}
        for key, val in raw.items():
            if key == "market":
                kw[key] = _section(MarketParams, val, "market")
            elif key == "utility":
                kw[key] = UtilityParams.from_dict(val or {})
            elif key == "grid":
                kw[key] = _section(GridSpec, val, "grid")
            elif key == "controls":
                kw[key] = _section(ControlSpec, val, "controls")
            elif key == "housing":
                kw[key] = _section(HousingSpec, val, "housing")
            elif key == "withdrawal":
                val = dict(val or {})
                if "bands" in val:
                    val["bands"] = tuple((None if u is None else int(u), float(r))
                                         for u, r in val["bands"])
                kw[key] = _section(WithdrawalSchedule, val, "withdrawal")
            elif key == "household":
                try:
                    kw[key] = HouseholdKind(val)
                except ValueError:
                    raise ConfigError("household", "must be single or couple") from None
            else:
                kw[key] = val
        return cls(**kw)

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError("config", f"file not found: {path}")
        return cls.from_dict(yaml.safe_load(path.read_text()) or {})

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, UtilityParams):
                v = v.to_dict()
            elif isinstance(v, WithdrawalSchedule):
                v = {"bands": [list(b) for b in v.bands], "enforced": v.enforced}
            elif dataclasses.is_dataclass(v):
                v = dataclasses.asdict(v)
            elif isinstance(v, HouseholdKind):
                v = v.value
            out[f.name] = v
        return out

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=True))

    def config_hash(self) -> str:
        """Stable hash of everything that affects numerical results."""
        d = self.to_dict()
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    # --- derived model objects ----------------------------------------------

    def policy_regime(self) -> PolicyRegime:
        return load_regime(self.regime, self.policy_file, self.pension_overrides)

    def mortality(self) -> MortalityTable:
        table = load_life_table(self.life_table)
        if table.ages[0] > self.t0 or table.ages[-1] < self.T - 1:
            raise ConfigError("life_table", f"must cover ages {self.t0}..{self.T - 1}")
        return table

    def quadrature(self) -> QuadratureRule:
        return QuadratureRule.gauss_hermite(self.quadrature_nodes)

    def grandfather(self, opening_balance: float | None = None,
                    table: MortalityTable | None = None) -> GrandfatherRecord:
        table = table or self.mortality()
        return GrandfatherRecord(
            opening_balance=self.opening_balance if opening_balance is None else opening_balance,
            life_expectancy=table.life_expectancy(self.t0, self.T),
            start_age=self.t0, inflation=self.market.inflation)

    def validate(self) -> None:
        """Build every derived object so that invalid settings fail early."""
        self.policy_regime()
        self.mortality()
        self.quadrature()


def _section(cls, raw, name: str):
    raw = dict(raw or {})
    known = {f.name for f in fields(cls)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"{name}.{key}", "unknown field")
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigError(name, str(exc)) from None
