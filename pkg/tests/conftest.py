import numpy as np
import pytest

from agepension.config import ControlSpec, GridSpec, ScenarioConfig
from agepension.pension import HouseholdKind
from agepension.solver import solve_policy


def toy_config(**changes) -> ScenarioConfig:
    """Three decision periods (ages 97-99), 5 wealth nodes, 3 quadrature nodes, no refinement."""
    base = dict(t0=97, T=100, grid=GridSpec(1_000.0, 3e6, 5), quadrature_nodes=3,
                controls=ControlSpec(21, 21, refine_rounds=0), household=HouseholdKind.COUPLE)
    base.update(changes)
    return ScenarioConfig(**base)


def small_config(**changes) -> ScenarioConfig:
    """A full-horizon problem on coarse grids, for quick end-to-end tests."""
    base = dict(grid=GridSpec(1_000.0, 3e6, 40), quadrature_nodes=5,
                controls=ControlSpec(11, 11, refine_rounds=1))
    base.update(changes)
    return ScenarioConfig(**base)


class _Solves:
    """Full-size solves shared across test modules (each is solved at most once)."""

    def __init__(self):
        self._cache = {}

    def get(self, **changes):
        cfg = ScenarioConfig(**changes)
        key = cfg.config_hash()
        if key not in self._cache:
            self._cache[key] = solve_policy(cfg)
        return self._cache[key]

    def all(self):
        return list(self._cache.values())


_CRITERIA: dict = {}


def record_criterion(n: int, ok: bool, detail: str) -> None:
    _CRITERIA[n] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def solves():
    return _Solves()


@pytest.fixture(scope="session")
def couple_post(solves):
    return solves.get(regime="post2015", household=HouseholdKind.COUPLE)


@pytest.fixture(scope="session")
def couple_pre(solves):
    return solves.get(regime="pre2015", household=HouseholdKind.COUPLE, opening_balance=500_000.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
