"""Lifetime paths, Monte Carlo ensembles and pension-function sweeps built
from solved policies."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig
from .errors import ConfigError
from .interp import interp_policy
from .lifecycle import MarketParams
from .pension import GrandfatherRecord, HouseholdKind, PolicyRegime, age_pension, load_regimes
from .solver import SolutionSet, check_monotone
from .utility import FamilyState

QUANTILES = (5, 25, 50, 75, 95)
RETURN_CONVENTIONS = ("mean", "median")


@dataclass
class LifetimePath:
    ages: np.ndarray
    wealth: np.ndarray  # start-of-year balance
    drawdown: np.ndarray
    pension: np.ndarray
    consumption: np.ndarray
    risky_share: np.ndarray
    final_wealth: float
    regime: str
    family: FamilyState
    homeowner: bool
    constrained: bool
    return_convention: str

    @property
    def cumulative_pension(self) -> float:
        return float(self.pension.sum())

    def rows(self):
        for i, t in enumerate(self.ages):
            yield {"age": int(t), "wealth": self.wealth[i], "drawdown": self.drawdown[i],
                   "pension": self.pension[i], "consumption": self.consumption[i],
                   "risky_share": self.risky_share[i]}


def _regime_name(regime) -> str:
    return regime.name if isinstance(regime, PolicyRegime) else str(regime)


def _check_solution(solution: SolutionSet, regime, constrained: bool, start_wealth: float):
    name = _regime_name(regime)
    if solution.regime.name != name:
        raise ConfigError("regime", f"solution solved under {solution.regime.name!r}, not {name!r}")
    if solution.constrained != constrained:
        raise ConfigError("withdrawal.enforced",
                          f"solution has enforced={solution.constrained}, path wants {constrained}")
    if not solution.regime.deemed and not np.isclose(solution.opening_balance, start_wealth):
        raise ConfigError("opening_balance",
                          f"pre-2015 solution opened at {solution.opening_balance}, "
                          f"path starts at {start_wealth}")


def _gross_return(delta, market: MarketParams, convention: str):
    if convention == "mean":
        risky = market.expected_gross_risky()
    elif convention == "median":
        risky = market.median_gross_risky()
    else:
        raise ConfigError("return_convention", f"must be one of {RETURN_CONVENTIONS}")
    return delta * risky + (1.0 - delta) * np.exp(market.r)


def deterministic_path(start_wealth: float, regime, solution: SolutionSet,
                       constrained: bool = True, family: FamilyState = FamilyState.SINGLE,
                       homeowner: bool = False, return_convention: str = "mean",
                       market: MarketParams | None = None) -> LifetimePath:
    """Follow the optimal policy with every year's return at its expected value.

    The family state stays fixed (no widowhood on the path).
    """
    _check_solution(solution, regime, constrained, start_wealth)
    family = FamilyState(family)
    if family not in solution.states:
        raise ConfigError("family", f"solution has no {family.name} policy")
    model = solution.model()
    market = market or model.market
    tab = solution.tables[homeowner]
    ages = solution.ages
    n = ages.size
    wealth, draw, pens, cons, share = (np.zeros(n) for _ in range(5))
    W = float(start_wealth)
    d = family.kind
    for i, t in enumerate(ages):
        a = interp_policy(solution.wealth, tab.alpha[family][i], W)
        dl = interp_policy(solution.wealth, tab.delta[family][i], W)
        wealth[i], draw[i], share[i] = W, a * W, dl
        pens[i] = model.pension(W, a * W, d, homeowner, int(t))
        cons[i] = draw[i] + pens[i]
        W = (W - a * W) * float(_gross_return(dl, market, return_convention))
    return LifetimePath(ages.copy(), wealth, draw, pens, cons, share, W, solution.regime.name,
                        family, homeowner, constrained, return_convention)


@dataclass
class EnsembleSummary:
    ages: np.ndarray
    quantile_levels: tuple
    wealth: np.ndarray  # (n_quantiles, n_ages), alive households only
    pension: np.ndarray
    consumption: np.ndarray
    alive: np.ndarray  # count alive at the start of each age
    mean_gross_return: np.ndarray
    se_gross_return: np.ndarray
    expected_gross_return: np.ndarray  # lognormal mean at the realised mean risky share
    seed: int
    n_paths: int
    raw: dict = field(default_factory=dict, repr=False)


def monte_carlo_paths(start_wealth: float, regime, solution: SolutionSet, n_paths: int,
                      seed: int, constrained: bool = True,
                      family: FamilyState | None = None, homeowner: bool = False,
                      market: MarketParams | None = None) -> EnsembleSummary:
    """Simulate returns and family transitions under the optimal policy.

    Each path draws from its own stream spawned from ``seed``.
    """
    if n_paths < 1:
        raise ConfigError("n_paths", "must be >= 1")
    _check_solution(solution, regime, constrained, start_wealth)
    model = solution.model()
    market = market or model.market
    family = FamilyState.of(solution.config.household) if family is None else FamilyState(family)
    tab = solution.tables[homeowner]
    ages = solution.ages
    n = ages.size

    streams = np.random.SeedSequence(seed).spawn(n_paths)
    shocks = np.empty((n_paths, n))
    uniforms = np.empty((n_paths, n))
    for j, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        shocks[j] = rng.standard_normal(n)
        uniforms[j] = rng.random(n)

    W = np.full(n_paths, float(start_wealth))
    G = np.full(n_paths, int(family))
    rec = {k: np.full((n, n_paths), np.nan) for k in ("wealth", "pension", "consumption",
                                                      "gross", "delta")}
    for i, t in enumerate(ages):
        t = int(t)
        alive = G > 0
        if not alive.any():
            break
        a = np.zeros(n_paths)
        dl = np.zeros(n_paths)
        P = np.zeros(n_paths)
        for g in (FamilyState.SINGLE, FamilyState.COUPLE):
            m = G == int(g)
            if not m.any():
                continue
            a[m] = interp_policy(solution.wealth, tab.alpha[g][i], W[m])
            dl[m] = interp_policy(solution.wealth, tab.delta[g][i], W[m])
            P[m] = model.pension(W[m], a[m] * W[m], g.kind, homeowner, t)
        gross = dl * np.exp(market.real_drift + market.sigma * shocks[:, i]) \
            + (1.0 - dl) * np.exp(market.r)
        rec["wealth"][i, alive] = W[alive]
        rec["pension"][i, alive] = P[alive]
        rec["consumption"][i, alive] = (a * W + P)[alive]
        rec["gross"][i, alive] = gross[alive]
        rec["delta"][i, alive] = dl[alive]
        W = np.where(alive, (W - a * W) * gross, W)
        q = model.mortality.p(t)
        survive = uniforms[:, i] < q
        G = np.where(G == 2, np.where(survive, 2, 1),
                     np.where(G == 1, np.where(survive, 1, 0), -1))

    alive_n = np.sum(~np.isnan(rec["wealth"]), axis=1)

    def quant(x):
        out = np.full((len(QUANTILES), n), np.nan)
        for i in range(n):
            col = x[i][~np.isnan(x[i])]
            if col.size:
                out[:, i] = np.percentile(col, QUANTILES)
        return out

    with np.errstate(invalid="ignore", divide="ignore"):
        mean_g = np.array([np.nanmean(r) if c else np.nan for r, c in zip(rec["gross"], alive_n)])
        se_g = np.array([np.nanstd(r, ddof=1) / np.sqrt(c) if c > 1 else np.nan
                         for r, c in zip(rec["gross"], alive_n)])
        mean_d = np.array([np.nanmean(r) if c else np.nan for r, c in zip(rec["delta"], alive_n)])
    expected = mean_d * market.expected_gross_risky() + (1 - mean_d) * np.exp(market.r)
    return EnsembleSummary(ages.copy(), QUANTILES, quant(rec["wealth"]), quant(rec["pension"]),
                           quant(rec["consumption"]), alive_n, mean_g, se_g, expected, seed,
                           n_paths, raw=rec)


@dataclass
class PensionCurve:
    regime: str
    kind: HouseholdKind
    homeowner: bool
    drawdown_rate: float
    age: int
    wealth: np.ndarray
    pension: np.ndarray


def pension_curve(regime: PolicyRegime, d: HouseholdKind, homeowner: bool,
                  drawdown_rate: float, age: int = 65, wealth: np.ndarray | None = None,
                  cfg: ScenarioConfig | None = None,
                  opening_balance: float | None = None) -> PensionCurve:
    """Pension against wealth with drawdown ``drawdown_rate * W``.

    For the drawdown income test the account is taken as opened at retirement
    with ``opening_balance`` (default: the swept wealth itself).
    """
    if not 0 <= drawdown_rate <= 1:
        raise ConfigError("drawdown_rate", "must lie in [0, 1]")
    cfg = cfg or ScenarioConfig()
    wealth = np.arange(0.0, 1_600_001.0, 1_000.0) if wealth is None else np.asarray(wealth, float)
    d = HouseholdKind(d)
    if regime.deemed:
        P = age_pension(wealth, drawdown_rate * wealth, d, homeowner, regime)
    else:
        table = cfg.mortality()
        e0 = table.life_expectancy(cfg.t0, cfg.T)
        basis = wealth if opening_balance is None else np.full_like(wealth, opening_balance)
        P = np.array([age_pension(w, drawdown_rate * w, d, homeowner, regime,
                                  GrandfatherRecord(b, e0, cfg.t0, cfg.market.inflation), age)
                      for w, b in zip(wealth, basis)])
    return PensionCurve(regime.name, d, homeowner, drawdown_rate, age, wealth, np.asarray(P))


def pension_curves(d: HouseholdKind, homeowner: bool = False, drawdown_rate: float = 0.05,
                   age: int = 65, wealth=None, cfg: ScenarioConfig | None = None) -> dict:
    """The three-regime overlay of the pension function."""
    cfg = cfg or ScenarioConfig()
    regimes = load_regimes(cfg.policy_file, cfg.pension_overrides)
    return {name: pension_curve(r, d, homeowner, drawdown_rate, age, wealth, cfg)
            for name, r in regimes.items()}


def validate_surfaces(solution: SolutionSet, atol: float = 1e-12) -> list[str]:
    """Re-check solver invariants on an exported solution; returns problems found."""
    problems = []
    w = solution.config.withdrawal
    for h, tab in solution.tables.items():
        for G in tab.alpha:
            for i, t in enumerate(solution.ages):
                a_min = w.min_rate(int(t))
                if np.any(tab.alpha[G][i] < a_min - atol):
                    problems.append(f"alpha below minimum at age {t}, {G.name}, homeowner={h}")
                dl = tab.delta[G][i]
                if np.any(dl < -atol) or np.any(dl > 1 + atol):
                    problems.append(f"delta outside [0, 1] at age {t}, {G.name}, homeowner={h}")
                if not check_monotone(tab.value[G][i]):
                    problems.append(f"value not monotone at age {t}, {G.name}, homeowner={h}")
    return problems
