"""Backward induction over (age, wealth, family state, homeownership).

Each period the drawdown ``alpha`` and risky share ``delta`` are chosen by a
coarse grid scan followed by golden-section coordinate refinement. Housing
is chosen once at retirement: the housing utility does not depend on liquid
wealth, so its lifetime contribution factors into ``(lambda H) ** gamma_H``
times an expected discounted coefficient ``phi(t0, G)`` and the DP itself
only needs the homeowner flag (which moves the asset-test threshold).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import ControlSpec, ScenarioConfig
from .errors import ConfigError
from .interp import LogWealthInterpolant, interp_policy
from .lifecycle import (MarketParams, MortalityTable, QuadratureRule, WithdrawalSchedule,
                        discount_factor, return_draws)
from .pension import GrandfatherRecord, HouseholdKind, PolicyRegime, age_pension
from .utility import (FamilyState, UtilityParams, housing_coefficient, u_bequest,
                      u_consumption_masked)

log = logging.getLogger(__name__)

INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0
ALIVE = (FamilyState.SINGLE, FamilyState.COUPLE)


@dataclass(frozen=True)
class StateGrid:
    wealth: np.ndarray
    t0: int
    T: int

    @classmethod
    def log_spaced(cls, w_min: float, w_max: float, n: int, t0: int, T: int) -> "StateGrid":
        return cls(np.geomspace(w_min, w_max, n), t0, T)

    @property
    def ages(self) -> np.ndarray:
        return np.arange(self.t0, self.T)


@dataclass
class Model:
    """Everything one backward induction needs, resolved from a config."""

    utility: UtilityParams
    regime: PolicyRegime
    market: MarketParams
    mortality: MortalityTable
    withdrawal: WithdrawalSchedule
    quad: QuadratureRule
    grid: StateGrid
    controls: ControlSpec
    grandfather: GrandfatherRecord | None = None

    @classmethod
    def from_config(cls, cfg: ScenarioConfig, opening_balance: float | None = None) -> "Model":
        table = cfg.mortality()
        regime = cfg.policy_regime()
        gf = None if regime.deemed else cfg.grandfather(opening_balance, table)
        return cls(utility=cfg.utility, regime=regime, market=cfg.market, mortality=table,
                   withdrawal=cfg.withdrawal, quad=cfg.quadrature(),
                   grid=StateGrid.log_spaced(cfg.grid.w_min, cfg.grid.w_max, cfg.grid.n_wealth,
                                             cfg.t0, cfg.T),
                   controls=cfg.controls, grandfather=gf)

    @property
    def t0(self) -> int:
        return self.grid.t0

    @property
    def T(self) -> int:
        return self.grid.T

    def pension(self, W, drawdown, d: HouseholdKind, homeowner: bool, t):
        return age_pension(W, drawdown, d, homeowner, self.regime, self.grandfather, t)

    def beta(self, t: int) -> float:
        return discount_factor(t, t + 1, self.market.r)


# --- inner optimizer ----------------------------------------------------------

def _golden(f: Callable, lo: np.ndarray, hi: np.ndarray, tol: float):
    """Vectorised golden-section maximisation on per-state brackets."""
    width = float(np.max(hi - lo)) if lo.size else 0.0
    n = int(np.ceil(np.log(tol / width) / np.log(INV_PHI))) if width > tol else 0
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(n):
        left = fc >= fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        new = np.where(left, hi - INV_PHI * (hi - lo), lo + INV_PHI * (hi - lo))
        fn = f(new)
        c, d, fc, fd = (np.where(left, new, d), np.where(left, c, new),
                        np.where(left, fn, fd), np.where(left, fc, fn))
    take_c = fc >= fd
    return np.where(take_c, c, d), np.where(take_c, fc, fd)


@dataclass
class ControlResult:
    alpha: np.ndarray
    delta: np.ndarray
    value: np.ndarray
    infeasible: np.ndarray


def optimize_controls(objective: Callable, alpha_min, n_states: int,
                      spec: ControlSpec = ControlSpec(), alpha_max: float = 1.0) -> ControlResult:
    """Maximise ``objective(alpha, delta)`` over ``[alpha_min, alpha_max] x [0, 1]``.

    ``objective`` takes arrays of shape ``(n_states, m)`` and returns values
    of the same shape, ``-inf`` marking infeasible controls. Ties on the
    coarse grid go to the smaller ``alpha``, then the smaller ``delta``;
    refinement only replaces a point that it strictly improves on.
    """
    a_lo = np.broadcast_to(np.asarray(alpha_min, dtype=float), (n_states,)).copy()
    frac = np.linspace(0.0, 1.0, spec.n_alpha)
    alphas = a_lo[:, None] + (alpha_max - a_lo)[:, None] * frac[None, :]
    deltas = np.linspace(0.0, 1.0, spec.n_delta)
    A = np.repeat(alphas, spec.n_delta, axis=1)
    D = np.tile(deltas, (n_states, spec.n_alpha))
    vals = objective(A, D)
    best = np.argmax(vals, axis=1)
    rows = np.arange(n_states)
    alpha, delta, value = A[rows, best], D[rows, best], vals[rows, best]
    infeasible = ~np.isfinite(value)

    step_a = (alpha_max - a_lo) / (spec.n_alpha - 1)
    step_d = 1.0 / (spec.n_delta - 1)
    for _ in range(spec.refine_rounds):
        lo = np.maximum(alpha - step_a, a_lo)
        hi = np.minimum(alpha + step_a, alpha_max)
        cand, cval = _golden(lambda a: objective(a[:, None], delta[:, None])[:, 0],
                             lo, hi, spec.golden_tol)
        better = cval > value
        alpha = np.where(better, cand, alpha)
        value = np.where(better, cval, value)

        lo = np.maximum(delta - step_d, 0.0)
        hi = np.minimum(delta + step_d, 1.0)
        cand, cval = _golden(lambda x: objective(alpha[:, None], x[:, None])[:, 0],
                             lo, hi, spec.golden_tol)
        better = cval > value
        delta = np.where(better, cand, delta)
        value = np.where(better, cval, value)
    return ControlResult(alpha, delta, value, infeasible)


# --- Bellman step -------------------------------------------------------------

@dataclass
class StepResult:
    value: np.ndarray
    alpha: np.ndarray
    delta: np.ndarray
    floor_infeasible: np.ndarray


class Continuation:
    """Next-period value as a function of next-period wealth, per family state."""

    def __init__(self, model: Model, t_next: int, values: dict | None):
        self.model = model
        self.terminal = t_next >= model.T
        if not self.terminal:
            keys = sorted(values)
            self._index = {G: i for i, G in enumerate(keys)}
            self._interp = LogWealthInterpolant(model.grid.wealth,
                                                np.stack([values[G] for G in keys]))

    def __call__(self, W) -> dict:
        bequest = u_bequest(np.maximum(W, 0.0), self.model.utility)
        out = {FamilyState.DIED: bequest}
        if self.terminal:
            out.update({G: bequest for G in ALIVE})
        else:
            vals = self._interp(W)
            out.update({G: vals[i] for G, i in self._index.items()})
        return out

    @property
    def below_range(self) -> int:
        return 0 if self.terminal else self._interp.below_range


def state_objective(model: Model, t: int, G: FamilyState, homeowner: bool,
                    cont: Continuation, W: np.ndarray) -> Callable:
    """Objective over controls for alive state ``G`` at wealth nodes ``W``."""
    d = G.kind
    q = model.mortality.p(t)
    lower = FamilyState.SINGLE if G is FamilyState.COUPLE else FamilyState.DIED
    beta = model.beta(t)
    z = return_draws(model.quad, model.market)
    ez, er = np.exp(z), np.exp(model.market.r)
    w = model.quad.weights
    Wc = W[:, None]

    def objective(alpha, delta):
        draw = alpha * Wc
        C = draw + model.pension(Wc, draw, d, homeowner, t)
        reward = u_consumption_masked(C, d, t, model.t0, model.utility)
        gross = delta[..., None] * ez + (1.0 - delta[..., None]) * er
        Wn = ((Wc - draw)[..., None]) * gross
        nxt = cont(Wn)
        ev = ((q * nxt[G] + (1.0 - q) * nxt[lower]) * w).sum(axis=-1)
        return reward + beta * ev

    return objective


def bellman_step(t: int, V_next: dict | None, model: Model, homeowner: bool,
                 states=ALIVE) -> dict[FamilyState, StepResult]:
    """Optimal value and controls at age ``t`` for the alive family states.

    ``V_next`` maps family state to values on the wealth grid at ``t + 1``
    (``None`` when ``t + 1`` is the horizon, where the bequest applies).
    The bequest state needs no optimisation: its value is the bequest
    utility, and the long-dead state is worth zero.
    """
    W = model.grid.wealth
    cont = Continuation(model, t + 1, V_next)
    a_min = model.withdrawal.min_rate(t)
    out = {}
    for G in states:
        obj = state_objective(model, t, G, homeowner, cont, W)
        res = optimize_controls(obj, a_min, W.size, model.controls)
        alpha, delta, value = res.alpha, res.delta, res.value
        if np.any(res.infeasible):
            n = int(res.infeasible.sum())
            log.warning("age %d, %s: %d wealth nodes cannot reach the consumption floor",
                        t, G.name, n)
            alpha = np.where(res.infeasible, 1.0, alpha)
            delta = np.where(res.infeasible, 0.0, delta)
            d = G.kind
            floor_c = model.utility.consumption_floor[d] + model.utility.scale[d]
            clamped = u_consumption_masked(floor_c, d, t, model.t0, model.utility)
            nxt = cont(np.zeros(1))
            q = model.mortality.p(t)
            lower = FamilyState.SINGLE if G is FamilyState.COUPLE else FamilyState.DIED
            ev = float(q * nxt[G][0] + (1 - q) * nxt[lower][0])
            value = np.where(res.infeasible, clamped + model.beta(t) * ev, value)
        out[G] = StepResult(value, alpha, delta, res.infeasible)
    return out


def check_monotone(values: np.ndarray, rtol: float = 1e-10) -> bool:
    """True when ``values`` never decreases by more than ``rtol`` relative."""
    drops = values[:-1] - values[1:]
    return bool(np.all(drops <= rtol * np.abs(values[:-1])))


# --- backward induction -------------------------------------------------------

@dataclass
class PolicyTables:
    """Values and controls for one homeowner flag (and one opening balance)."""

    value: dict  # FamilyState -> (n_ages + 1, n_w); last row is the horizon
    alpha: dict  # FamilyState -> (n_ages, n_w)
    delta: dict
    floor_infeasible: int = 0
    monotone_violations: list = field(default_factory=list)
    below_grid_lookups: int = 0


def family_states_for(kind: HouseholdKind) -> tuple:
    return ALIVE if kind is HouseholdKind.COUPLE else (FamilyState.SINGLE,)


def backward_induction(model: Model, homeowner: bool, states=ALIVE,
                       strict_monotone: bool = False) -> PolicyTables:
    ages = model.grid.ages
    n_w = model.grid.wealth.size
    value = {G: np.empty((ages.size + 1, n_w)) for G in states}
    alpha = {G: np.empty((ages.size, n_w)) for G in states}
    delta = {G: np.empty((ages.size, n_w)) for G in states}
    for G in states:
        value[G][-1] = u_bequest(model.grid.wealth, model.utility)
    tables = PolicyTables(value, alpha, delta)
    V_next = None
    for i in range(ages.size - 1, -1, -1):
        t = int(ages[i])
        step = bellman_step(t, V_next, model, homeowner, states)
        for G, res in step.items():
            value[G][i], alpha[G][i], delta[G][i] = res.value, res.alpha, res.delta
            tables.floor_infeasible += int(res.floor_infeasible.sum())
            if not check_monotone(res.value):
                tables.monotone_violations.append((t, int(G)))
                if strict_monotone:
                    raise AssertionError(f"value not monotone in wealth at age {t}, {G.name}")
        V_next = {G: res.value for G, res in step.items()}
    return tables


def housing_accumulator(model: Model, states=ALIVE) -> dict:
    """Expected discounted housing-utility coefficient ``phi[G][t - t0]``.

    ``phi(t, G) * (lambda H) ** gamma_H`` is the expected present value at
    ``t`` of all housing utility still to come for a homeowner in state ``G``.
    """
    ages = model.grid.ages
    phi = {G: np.zeros(ages.size + 1) for G in ALIVE}
    c = {G: housing_coefficient(G.kind, model.utility) for G in ALIVE}
    for i in range(ages.size - 1, -1, -1):
        t = int(ages[i])
        q, b = model.mortality.p(t), model.beta(t)
        phi[FamilyState.SINGLE][i] = c[FamilyState.SINGLE] + b * q * phi[FamilyState.SINGLE][i + 1]
        phi[FamilyState.COUPLE][i] = c[FamilyState.COUPLE] + b * (
            q * phi[FamilyState.COUPLE][i + 1] + (1 - q) * phi[FamilyState.SINGLE][i + 1])
    return {G: phi[G] for G in states}


@dataclass
class HousingCurve:
    """Optimal retirement housing ``H*`` by total wealth, per family state."""

    total_wealth: np.ndarray
    housing: dict  # FamilyState -> H* array
    value: dict  # FamilyState -> optimal value array


@dataclass
class SolutionSet:
    config: ScenarioConfig
    regime: PolicyRegime
    wealth: np.ndarray
    ages: np.ndarray
    tables: dict  # homeowner flag -> PolicyTables
    phi: dict
    opening_balance: float | None
    housing: HousingCurve | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def constrained(self) -> bool:
        return self.config.withdrawal.enforced

    @property
    def states(self) -> tuple:
        return tuple(next(iter(self.tables.values())).value)

    def _row(self, t: int) -> int:
        i = int(t) - int(self.ages[0])
        if not 0 <= i < self.ages.size:
            raise IndexError(f"age {t} outside [{self.ages[0]}, {self.ages[-1]}]")
        return i

    def alpha(self, t: int, W, G=FamilyState.SINGLE, homeowner: bool = False):
        return interp_policy(self.wealth, self.tables[homeowner].alpha[G][self._row(t)], W)

    def delta(self, t: int, W, G=FamilyState.SINGLE, homeowner: bool = False):
        return interp_policy(self.wealth, self.tables[homeowner].delta[G][self._row(t)], W)

    def value(self, t: int, W, G=FamilyState.SINGLE, homeowner: bool = False):
        i = int(t) - int(self.ages[0])
        return LogWealthInterpolant(self.wealth, self.tables[homeowner].value[G][i])(W)

    def model(self) -> Model:
        return Model.from_config(self.config, self.opening_balance)


def _homeowner_flags(cfg: ScenarioConfig) -> tuple:
    return (False, True) if cfg.housing.search else (bool(cfg.homeowner),)


def solve_tables(cfg: ScenarioConfig, opening_balance: float | None = None,
                 flags=None, states=None) -> tuple[Model, dict]:
    model = Model.from_config(cfg, opening_balance)
    flags = _homeowner_flags(cfg) if flags is None else flags
    states = family_states_for(cfg.household) if states is None else states
    return model, {h: backward_induction(model, h, states) for h in flags}


def _best_housing(total: float, liquid_value: Callable, renter_value: Callable,
                  phi0: float, p: UtilityParams, lower_bound: float,
                  renting_optional: bool = False) -> tuple[float, float]:
    """Best housing for total wealth ``total``: renting below ``lower_bound``,
    otherwise the argmax over ``[lower_bound, total]`` (compared against
    renting when ``renting_optional``)."""
    renter = float(renter_value(np.array([total]))[0])
    if total < lower_bound:
        return 0.0, renter
    g, lam = p.gamma_housing, p.housing_preference

    def f(H):
        return liquid_value(np.maximum(total - H, 0.0)) + phi0 * (lam * H) ** g

    span = total - lower_bound
    H = np.concatenate([[lower_bound],
                        total - np.geomspace(max(span, 1.0), 1.0, 200)[:-1],
                        [total]]) if span > 1.0 else np.array([lower_bound, total])
    H = np.unique(np.clip(H, lower_bound, total))
    vals = f(H)
    k = int(np.argmax(vals))
    lo, hi = H[max(k - 1, 0)], H[min(k + 1, H.size - 1)]
    if hi > lo:
        cand, cval = _golden(f, np.array([lo]), np.array([hi]), 1e-2)
        if cval[0] > vals[k]:
            H_best, v_best = float(cand[0]), float(cval[0])
        else:
            H_best, v_best = float(H[k]), float(vals[k])
    else:
        H_best, v_best = float(H[k]), float(vals[k])
    if renting_optional and renter >= v_best:
        return 0.0, renter
    return H_best, v_best


def housing_curve(cfg: ScenarioConfig, value_at_t0: dict, phi: dict,
                  total_wealth: np.ndarray | None = None) -> HousingCurve:
    """Optimal housing from retirement values.

    ``value_at_t0[(G, homeowner)]`` is a callable giving the value at ``t0``
    of liquid wealth for a household that opens its account with that wealth.
    """
    hs = cfg.housing
    if total_wealth is None:
        total_wealth = np.geomspace(hs.total_wealth_min, hs.total_wealth_max, hs.n_total_wealth)
    housing, values = {}, {}
    for G in phi:
        res = [_best_housing(Wt, value_at_t0[(G, True)], value_at_t0[(G, False)],
                             phi[G][0], cfg.utility, hs.lower_bound, hs.renting == "optional")
               for Wt in total_wealth]
        housing[G] = np.array([r[0] for r in res])
        values[G] = np.array([r[1] for r in res])
    return HousingCurve(np.asarray(total_wealth, dtype=float), housing, values)


def opening_balance_nodes(cfg: ScenarioConfig, wealth: np.ndarray) -> np.ndarray:
    """Grid nodes used as opening balances when the deduction depends on them."""
    top = cfg.housing.total_wealth_max
    idx = np.unique(np.round(np.linspace(0, np.searchsorted(wealth, top), cfg.housing.n_opening_balances))
                    .astype(int))
    return np.clip(idx, 0, wealth.size - 1)


def _deemed_values(model: Model, tables: dict, states) -> dict:
    out = {}
    for h, tab in tables.items():
        for G in states:
            out[(G, h)] = LogWealthInterpolant(model.grid.wealth, tab.value[G][0])
    return out


def _opening_balance_values(cfg: ScenarioConfig, states, progress=None) -> dict:
    """Value at t0 along the diagonal W = opening balance, one solve per node.

    Renter values are only looked up below ``housing.lower_bound`` unless renting
    is optional, so above it only the homeowner problem is solved.
    """
    wealth = StateGrid.log_spaced(cfg.grid.w_min, cfg.grid.w_max, cfg.grid.n_wealth,
                                  cfg.t0, cfg.T).wealth
    nodes = opening_balance_nodes(cfg, wealth)
    if cfg.housing.renting == "optional":
        renter = nodes
    else:
        below = nodes[wealth[nodes] < cfg.housing.lower_bound]
        renter = nodes[:max(below.size + 1, 2)]
    diag = {(G, h): {} for G in states for h in (False, True)}
    for j, k in enumerate(nodes):
        flags = (False, True) if k in renter else (True,)
        _, tables = solve_tables(cfg, float(wealth[k]), flags=flags, states=states)
        for h, tab in tables.items():
            for G in states:
                diag[(G, h)][k] = tab.value[G][0][k]
        if progress:
            progress(j + 1, nodes.size)
    out = {}
    for key, vals in diag.items():
        ks = np.array(sorted(vals))
        out[key] = LogWealthInterpolant(wealth[ks], np.array([vals[k] for k in ks]))
    return out


def solve_policy(cfg: ScenarioConfig, progress=None) -> SolutionSet:
    """Solve the scenario: policy tables for each homeowner flag and, when
    housing search is enabled, the optimal retirement housing curve."""
    cfg.validate()
    regime = cfg.policy_regime()
    opening = None if regime.deemed else cfg.opening_balance
    states = family_states_for(cfg.household)
    model, tables = solve_tables(cfg, opening, states=states)
    phi = housing_accumulator(model, states)
    diagnostics = {
        "floor_infeasible_states": sum(t.floor_infeasible for t in tables.values()),
        "monotone_violations": sum(len(t.monotone_violations) for t in tables.values()),
        "grid": {"w_min": cfg.grid.w_min, "w_max": cfg.grid.w_max, "n_wealth": cfg.grid.n_wealth,
                 "spacing": "log"},
        "controls": {"n_alpha": cfg.controls.n_alpha, "n_delta": cfg.controls.n_delta,
                     "refine_rounds": cfg.controls.refine_rounds,
                     "golden_tol": cfg.controls.golden_tol},
        "quadrature": {"rule": "gauss-hermite", "nodes": cfg.quadrature_nodes},
        "interpolation": "monotone cubic in log-wealth",
    }
    sol = SolutionSet(cfg, regime, model.grid.wealth, model.grid.ages, tables, phi, opening,
                      diagnostics=diagnostics)
    if cfg.housing.search:
        if regime.deemed:
            values = _deemed_values(model, tables, states)
        else:
            values = _opening_balance_values(cfg, states, progress)
        sol.housing = housing_curve(cfg, values, phi)
    return sol
