"""Plain-text tabular files with a ``# key: json`` metadata preamble.

Solutions written by :func:`write_solution` read back to an equivalent
:class:`~agepension.solver.SolutionSet` with :func:`read_solution`; floats are
written with 17 significant digits so the round trip is exact.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from . import __version__
from .config import ScenarioConfig
from .errors import DomainError
from .pension import HouseholdKind, binding_test_crossover, zero_pension_wealth
from .solver import HousingCurve, PolicyTables, SolutionSet
from .utility import FamilyState

FORMAT_VERSION = 1


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return "nan" if np.isnan(x) else format(float(x), ".17g")
    return str(x)


def write_table(path: str | Path, header: list[str], rows: Iterable, meta: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    for key in meta:
        buf.write(f"# {key}: {json.dumps(meta[key], sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue())
    return path


def read_table(path: str | Path) -> tuple[dict, list[str], list[list[str]]]:
    meta, body = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# "):
            key, _, val = line[2:].partition(": ")
            meta[key] = json.loads(val)
        elif line.strip():
            body.append(line)
    rows = list(csv.reader(body))
    return meta, rows[0], rows[1:]


def solution_metadata(sol: SolutionSet) -> dict:
    cfg = sol.config
    return {
        "format": "agepension-solution",
        "format_version": FORMAT_VERSION,
        "code_version": __version__,
        "regime": sol.regime.name,
        "config_hash": cfg.config_hash(),
        "config": cfg.to_dict(),
        "opening_balance": sol.opening_balance,
        "phi": {str(int(G)): list(map(float, v)) for G, v in sol.phi.items()},
        "diagnostics": sol.diagnostics,
    }


def write_solution(sol: SolutionSet, path: str | Path) -> Path:
    """Write ``sol`` after re-checking the surface invariants; raises DomainError on a violation."""
    from .paths import validate_surfaces

    problems = validate_surfaces(sol)
    if problems:
        raise DomainError(f"refusing to export {len(problems)} invariant violation(s): "
                          + "; ".join(problems[:3]))
    header = ["homeowner", "family", "age", "wealth", "value", "alpha", "delta"]

    def rows():
        for h in sorted(sol.tables):
            tab = sol.tables[h]
            for G in sorted(tab.value):
                for i in range(sol.ages.size + 1):
                    age = int(sol.ages[0]) + i
                    for k, w in enumerate(sol.wealth):
                        if i < sol.ages.size:
                            a, d = tab.alpha[G][i, k], tab.delta[G][i, k]
                        else:
                            a = d = float("nan")
                        yield (int(h), int(G), age, w, tab.value[G][i, k], a, d)

    return write_table(path, header, rows(), solution_metadata(sol))


def read_solution(path: str | Path) -> SolutionSet:
    meta, header, rows = read_table(path)
    if meta.get("format") != "agepension-solution":
        raise ValueError(f"{path} is not a solution file")
    cfg = ScenarioConfig.from_dict(meta["config"])
    data = np.array(rows, dtype=float)
    wealth = np.unique(data[:, 3])
    ages = np.arange(cfg.t0, cfg.T)
    tables = {}
    for h in np.unique(data[:, 0]).astype(int):
        value, alpha, delta = {}, {}, {}
        for G in np.unique(data[data[:, 0] == h, 1]).astype(int):
            block = data[(data[:, 0] == h) & (data[:, 1] == G)]
            block = block[np.lexsort((block[:, 3], block[:, 2]))]
            v = block[:, 4].reshape(ages.size + 1, wealth.size)
            a = block[:, 5].reshape(ages.size + 1, wealth.size)[:-1]
            d = block[:, 6].reshape(ages.size + 1, wealth.size)[:-1]
            fs = FamilyState(G)
            value[fs], alpha[fs], delta[fs] = v, a, d
        tables[bool(h)] = PolicyTables(value, alpha, delta)
    phi = {FamilyState(int(k)): np.array(v) for k, v in meta["phi"].items()}
    return SolutionSet(cfg, cfg.policy_regime(), wealth, ages, tables, phi,
                       meta["opening_balance"], diagnostics=meta.get("diagnostics", {}))


def write_housing(curve: HousingCurve, path: str | Path, meta: dict) -> Path:
    rows = []
    for G in sorted(curve.housing):
        for i, w in enumerate(curve.total_wealth):
            rows.append((int(G), w, curve.housing[G][i], w - curve.housing[G][i],
                         curve.value[G][i]))
    return write_table(path, ["family", "total_wealth", "housing", "liquid_wealth", "value"],
                       rows, meta)


@dataclass
class SurfaceExport:
    """A control or value surface on (age, wealth) with pension annotations."""

    name: str
    regime: str
    kind: HouseholdKind
    homeowner: bool
    ages: np.ndarray
    wealth: np.ndarray
    columns: dict  # column name -> (n_ages, n_wealth)
    annotations: dict = field(default_factory=dict)

    def rows(self):
        for i, t in enumerate(self.ages):
            for k, w in enumerate(self.wealth):
                yield (int(t), w, *[self.columns[c][i, k] for c in self.columns])

    def write(self, path: str | Path, meta: dict | None = None) -> Path:
        m = {"figure": self.name, "regime": self.regime, "household": self.kind.value,
             "homeowner": self.homeowner, "annotations": self.annotations}
        m.update(meta or {})
        return write_table(path, ["age", "wealth", *self.columns], self.rows(), m)


def pension_annotations(regime, kind: HouseholdKind, homeowner: bool) -> dict:
    p = regime.params
    out = {"asset_threshold": p.asset_threshold(kind, homeowner)}
    asset_cut = p.asset_threshold(kind, homeowner) + p.full_pension[kind] / p.asset_taper[kind]
    if regime.deemed:
        out["binding_test_crossover"] = binding_test_crossover(kind, homeowner, regime)
        out["zero_pension_wealth"] = zero_pension_wealth(kind, homeowner, regime)
    else:
        out["asset_test_zero_pension_wealth"] = asset_cut
    return out
