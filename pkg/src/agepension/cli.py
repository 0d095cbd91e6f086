"""Command line entry point: ``agepension {solve,figures,validate,pension-query}``.

Exit codes: 0 success, 1 validation failure, 2 runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .config import ScenarioConfig
from .errors import ConfigError, DomainError
from .export import solution_metadata, write_housing, write_solution
from .figures import ALL_FIGURES, run_figures
from .lifecycle import load_life_table
from .pension import (HouseholdKind, age_pension, load_policy_documents, load_regime,
                      regime_from_raw)
from .solver import solve_policy

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
log = logging.getLogger("agepension")


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "y"):
        return True
    if low in ("0", "false", "no", "n"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _load_config(path: str | None) -> ScenarioConfig:
    return ScenarioConfig.load(path) if path else ScenarioConfig()


def run_solve(cfg: ScenarioConfig, out_dir: str | Path | None = None) -> list[Path]:
    """Solve ``cfg`` and write the solution and metadata into ``out_dir``."""
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    sol = solve_policy(cfg)
    stem = f"solution_{cfg.regime}_{cfg.household.value}"
    paths = [write_solution(sol, out / f"{stem}.csv")]
    meta = solution_metadata(sol)
    meta.pop("phi")
    meta_path = out / f"{stem}.meta.json"
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    paths.append(meta_path)
    if sol.housing is not None:
        paths.append(write_housing(sol.housing, out / f"housing_{cfg.regime}_{cfg.household.value}.csv",
                                   {"config_hash": cfg.config_hash(), "regime": cfg.regime}))
    return paths


def validate_data(paths: list[str]) -> list[str]:
    """Check life tables (``.csv``/``.txt``) and policy or scenario files (``.yaml``).

    Returns a list of problems; empty means every file passed.
    """
    problems = []
    for p in paths:
        path = Path(p)
        try:
            if not path.is_file():
                raise ConfigError(str(path), "file not found")
            if path.suffix.lower() in (".yaml", ".yml"):
                docs = [d for d in yaml.safe_load_all(path.read_text()) if d is not None]
                if docs and all(isinstance(d, dict) and "regime" in d and
                                ("params" in d or "extends" in d) for d in docs):
                    for name, doc in load_policy_documents(path).items():
                        regime_from_raw(name, doc)
                else:
                    if len(docs) != 1:
                        raise ConfigError(str(path), "scenario config must be a single document")
                    ScenarioConfig.from_dict(docs[0]).validate()
            else:
                table = load_life_table(path)
                inc = np.flatnonzero(np.diff(table.survival) > 0)
                if inc.size:
                    raise ConfigError(f"life_table.row[{inc[0] + 1}]",
                                      f"survival probability increases at age {table.ages[inc[0] + 1]}")
        except (ConfigError, DomainError, yaml.YAMLError) as exc:
            problems.append(f"{path}: {exc}")
    return problems


class _Parser(argparse.ArgumentParser):
    # bad arguments are invalid input, so they share the validation exit code
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="agepension", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="solve one scenario and write the solution")
    s.add_argument("--config")
    s.add_argument("--regime", choices=["pre2015", "post2015", "post2015r"])
    s.add_argument("--household", choices=["single", "couple"])
    s.add_argument("--homeowner", type=_bool)
    s.add_argument("--housing-search", type=_bool)
    s.add_argument("--opening-balance", type=float)
    s.add_argument("--out")

    f = sub.add_parser("figures", help="write figure datasets")
    g = f.add_mutually_exclusive_group(required=True)
    g.add_argument("--all", action="store_true")
    g.add_argument("--fig", type=int, action="append", choices=ALL_FIGURES)
    f.add_argument("--config")
    f.add_argument("--out")

    v = sub.add_parser("validate", help="check life tables, policy files, scenario configs")
    v.add_argument("files", nargs="+")

    q = sub.add_parser("pension-query", help="evaluate the Age Pension")
    q.add_argument("--wealth", type=float, required=True)
    q.add_argument("--kind", choices=["single", "couple"], required=True)
    q.add_argument("--homeowner", type=_bool, required=True)
    q.add_argument("--regime", choices=["pre2015", "post2015", "post2015r"], required=True)
    q.add_argument("--drawdown", type=float, default=None,
                   help="drawdown rate (proportion of wealth); default is the minimum rate")
    q.add_argument("--age", type=int, default=65)
    q.add_argument("--opening-balance", type=float, default=None,
                   help="pre-2015 account balance at opening (default: --wealth)")
    q.add_argument("--policy-file")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "solve":
            cfg = _load_config(args.config)
            changes = {k: v for k, v in (("regime", args.regime), ("homeowner", args.homeowner),
                                         ("opening_balance", args.opening_balance))
                       if v is not None}
            if args.household:
                changes["household"] = HouseholdKind(args.household)
            if args.housing_search is not None:
                changes["housing"] = replace(cfg.housing, search=args.housing_search)
            if args.out:
                changes["output_dir"] = args.out
            cfg = replace(cfg, **changes)
            cfg.validate()
            for p in run_solve(cfg):
                print(p)
        elif args.command == "figures":
            cfg = _load_config(args.config)
            figs = ALL_FIGURES if args.all else args.fig
            written = run_figures(figs, cfg, args.out)
            for paths in written.values():
                for p in paths:
                    print(p)
        elif args.command == "validate":
            problems = validate_data(args.files)
            for msg in problems:
                print(f"FAIL {msg}", file=sys.stderr)
            if problems:
                return EXIT_INVALID
            print(f"ok: {len(args.files)} file(s) passed")
        elif args.command == "pension-query":
            cfg = ScenarioConfig()
            regime = load_regime(args.regime, args.policy_file)
            kind = HouseholdKind(args.kind)
            rate = cfg.withdrawal.min_rate(args.age) if args.drawdown is None else args.drawdown
            gf = None
            if not regime.deemed:
                basis = args.wealth if args.opening_balance is None else args.opening_balance
                gf = cfg.grandfather(basis)
            p = age_pension(args.wealth, rate * args.wealth, kind, args.homeowner, regime, gf,
                            args.age)
            print(f"{p:.2f}")
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
