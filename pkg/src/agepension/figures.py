"""Datasets behind the nine result figures.

=====  ===========================================================
fig    content
=====  ===========================================================
1, 2   drawdown and consumption surfaces, couple / single, 3 regimes
3      lifetime paths from $1m: 3 regimes plus unconstrained post-2015
4      pension against wealth, 3 regimes, both household kinds
5-8    risky share surfaces: couple post/pre, single post/pre
9      retirement housing by total wealth, both kinds, pre/post 2015
=====  ===========================================================

Non-homeowner households throughout except figure 9. Pre-2015 surfaces
are solved for the config's ``opening_balance``.
"""
from __future__ import annotations

import logging
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ScenarioConfig
from .export import SurfaceExport, pension_annotations, write_housing, write_table
from .paths import RETURN_CONVENTIONS, deterministic_path, pension_curves
from .pension import HouseholdKind
from .solver import SolutionSet, solve_policy
from .utility import FamilyState

log = logging.getLogger(__name__)

REGIMES = ("pre2015", "post2015", "post2015r")
ALL_FIGURES = tuple(range(1, 10))
FIG3_START = 1_000_000.0
RISKY_FIGURES = {5: (HouseholdKind.COUPLE, "post2015"), 6: (HouseholdKind.COUPLE, "pre2015"),
                 7: (HouseholdKind.SINGLE, "post2015"), 8: (HouseholdKind.SINGLE, "pre2015")}


class _Cache:
    def __init__(self, base: ScenarioConfig):
        self.base = base
        self._store: dict = {}

    def get(self, **changes) -> SolutionSet:
        if changes.get("regime", self.base.regime) != "pre2015":
            changes.pop("opening_balance", None)
        cfg = replace(self.base, household=HouseholdKind.COUPLE, homeowner=False, **changes)
        key = cfg.config_hash()
        if key not in self._store:
            log.info("solving %s", {k: v for k, v in changes.items() if k != "housing"})
            self._store[key] = solve_policy(cfg)
        return self._store[key]


def _surface(sol: SolutionSet, kind: HouseholdKind, name: str, columns: tuple) -> SurfaceExport:
    G = FamilyState.of(kind)
    tab = sol.tables[False]
    model = sol.model()
    W = sol.wealth[None, :]
    alpha = tab.alpha[G]
    cols = {}
    if "alpha" in columns or "drawdown" in columns or "consumption" in columns:
        drawdown = alpha * W
        pension = np.vstack([model.pension(sol.wealth, drawdown[i], kind, False, int(t))
                             for i, t in enumerate(sol.ages)])
        cols.update(alpha=alpha, drawdown=drawdown, pension=pension,
                    consumption=drawdown + pension,
                    min_rate=np.repeat([[sol.config.withdrawal.min_rate(int(t))]
                                        for t in sol.ages], sol.wealth.size, axis=1))
    if "delta" in columns:
        cols["delta"] = tab.delta[G]
    return SurfaceExport(name, sol.regime.name, kind, False, sol.ages, sol.wealth,
                         {c: cols[c] for c in cols},
                         pension_annotations(sol.regime, kind, False))


def _fig_name(fig: int, regime: str, kind: HouseholdKind | None, homeowner: bool | None = False,
              extra: str = "") -> str:
    parts = [f"fig{fig}", regime]
    if kind is not None:
        parts.append(kind.value)
    if homeowner is not None:
        parts.append("homeowner" if homeowner else "renter")
    if extra:
        parts.append(extra)
    return "_".join(parts) + ".csv"


def run_figures(figures, cfg: ScenarioConfig | None = None, out_dir: str | Path | None = None
                ) -> dict[int, list[Path]]:
    """Write the datasets for the requested figure numbers; returns paths per figure."""
    figures = sorted(set(int(f) for f in figures))
    if not figures:
        log.warning("no figures requested; nothing to do")
        return {}
    bad = [f for f in figures if f not in ALL_FIGURES]
    if bad:
        raise ValueError(f"unknown figure numbers {bad}; valid are 1-9")
    cfg = cfg or ScenarioConfig()
    out = Path(out_dir or cfg.output_dir)
    cache = _Cache(cfg)
    meta = {"config_hash": cfg.config_hash()}
    written: dict[int, list[Path]] = {}

    for fig in figures:
        paths = written.setdefault(fig, [])
        if fig in (1, 2):
            kind = HouseholdKind.COUPLE if fig == 1 else HouseholdKind.SINGLE
            for regime in REGIMES:
                sol = cache.get(regime=regime)
                surf = _surface(sol, kind, f"fig{fig}", ("alpha",))
                paths.append(surf.write(out / _fig_name(fig, regime, kind),
                                        {**meta, "opening_balance": sol.opening_balance}))
        elif fig == 3:
            unconstrained = replace(cfg.withdrawal, enforced=False)
            runs = [(r, True) for r in REGIMES] + [("post2015", False)]
            for kind in (HouseholdKind.SINGLE, HouseholdKind.COUPLE):
                G = FamilyState.of(kind)
                for regime, constrained in runs:
                    changes = {"regime": regime, "opening_balance": FIG3_START}
                    if not constrained:
                        changes["withdrawal"] = unconstrained
                    sol = cache.get(**changes)
                    for conv in RETURN_CONVENTIONS:
                        p = deterministic_path(FIG3_START, regime, sol, constrained, G,
                                               return_convention=conv)
                        tag = ("constrained" if constrained else "unconstrained") + "_" + conv
                        rows = [(r["age"], r["wealth"], r["drawdown"], r["pension"],
                                 r["consumption"], r["risky_share"]) for r in p.rows()]
                        paths.append(write_table(
                            out / _fig_name(3, regime, kind, None, tag),
                            ["age", "wealth", "drawdown", "pension", "consumption", "risky_share"],
                            rows, {**meta, "figure": "fig3", "regime": regime,
                                   "household": kind.value, "constrained": constrained,
                                   "return_convention": conv, "start_wealth": FIG3_START,
                                   "cumulative_pension": p.cumulative_pension}))
        elif fig == 4:
            for kind in (HouseholdKind.SINGLE, HouseholdKind.COUPLE):
                curves = pension_curves(kind, False, 0.05, cfg.t0, cfg=cfg)
                names = list(curves)
                wealth = curves[names[0]].wealth
                rows = zip(wealth, *[curves[n].pension for n in names])
                paths.append(write_table(
                    out / _fig_name(4, "all", kind), ["wealth", *names], rows,
                    {**meta, "figure": "fig4", "household": kind.value, "homeowner": False,
                     "drawdown_rate": 0.05, "age": cfg.t0}))
        elif fig in RISKY_FIGURES:
            kind, regime = RISKY_FIGURES[fig]
            sol = cache.get(regime=regime)
            surf = _surface(sol, kind, f"fig{fig}", ("delta",))
            paths.append(surf.write(out / _fig_name(fig, regime, kind),
                                    {**meta, "opening_balance": sol.opening_balance}))
        elif fig == 9:
            housing = replace(cfg.housing, search=True)
            for regime in ("pre2015", "post2015"):
                sol = cache.get(regime=regime, housing=housing)
                paths.append(write_housing(sol.housing, out / _fig_name(9, regime, None, None),
                                           {**meta, "figure": "fig9", "regime": regime}))
    return written
