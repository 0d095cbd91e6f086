import json

import numpy as np
import pytest
import yaml

from agepension import cli
from agepension.config import ScenarioConfig
from agepension.export import read_solution, read_table, write_solution
from agepension.figures import run_figures
from agepension.solver import solve_policy

from conftest import small_config, toy_config

DATA = "src/agepension/data"


@pytest.fixture(scope="module")
def toy_solution():
    return solve_policy(toy_config())


class TestSolutionFiles:
    def test_round_trip(self, toy_solution, tmp_path):
        path = write_solution(toy_solution, tmp_path / "s.csv")
        back = read_solution(path)
        assert back.config == toy_solution.config
        assert np.array_equal(back.wealth, toy_solution.wealth)
        for h, tab in toy_solution.tables.items():
            for G in tab.value:
                assert np.array_equal(back.tables[h].value[G], tab.value[G])
                assert np.array_equal(back.tables[h].alpha[G], tab.alpha[G])
                assert np.array_equal(back.tables[h].delta[G], tab.delta[G])

    def test_metadata(self, toy_solution, tmp_path):
        meta, header, rows = read_table(write_solution(toy_solution, tmp_path / "s.csv"))
        assert meta["config_hash"] == toy_solution.config.config_hash()
        assert meta["config"]["grid"]["n_wealth"] == 5
        assert header[:4] == ["homeowner", "family", "age", "wealth"]

    def test_refuses_invalid_surface(self, toy_solution, tmp_path):
        from dataclasses import replace
        from agepension.errors import DomainError
        tab = replace(toy_solution.tables[False])
        tab.delta = {k: v + 2.0 for k, v in tab.delta.items()}
        bad = replace(toy_solution, tables={False: tab})
        with pytest.raises(DomainError, match="invariant"):
            write_solution(bad, tmp_path / "bad.csv")


class TestSolveCommand:
    def _cfg(self, tmp_path, **changes):
        f = tmp_path / "cfg.yaml"
        toy_config(**changes).dump(f)
        return f

    def test_byte_identical_reruns(self, tmp_path):
        f = self._cfg(tmp_path)
        out = tmp_path / "out"
        assert cli.main(["solve", "--config", str(f), "--out", str(out)]) == 0
        first = {p.name: p.read_bytes() for p in out.iterdir()}
        assert cli.main(["solve", "--config", str(f), "--out", str(out)]) == 0
        assert first == {p.name: p.read_bytes() for p in out.iterdir()}
        assert set(first) == {"solution_post2015_couple.csv", "solution_post2015_couple.meta.json"}

    def test_regime_flag_and_metadata(self, tmp_path):
        out = tmp_path / "o"
        assert cli.main(["solve", "--config", str(self._cfg(tmp_path)), "--regime", "pre2015",
                         "--out", str(out)]) == 0
        meta = json.loads((out / "solution_pre2015_couple.meta.json").read_text())
        assert meta["regime"] == "pre2015" and meta["config"]["regime"] == "pre2015"

    def test_invalid_config_exit_1(self, tmp_path, capsys):
        f = tmp_path / "bad.yaml"
        f.write_text(yaml.safe_dump({"pension_overrides": {"deeming": {"rate_below": 0.09}}}))
        assert cli.main(["solve", "--config", str(f), "--out", str(tmp_path)]) == 1
        assert "params.deeming.rate_below" in capsys.readouterr().err

    def test_missing_life_table_exit_1(self, tmp_path):
        f = self._cfg(tmp_path, life_table=str(tmp_path / "missing.csv"))
        assert cli.main(["solve", "--config", str(f)]) == 1

    def test_runtime_error_exit_2(self, tmp_path, monkeypatch):
        def boom(cfg):
            raise RuntimeError("disk on fire")
        monkeypatch.setattr(cli, "solve_policy", boom)
        assert cli.main(["solve", "--config", str(self._cfg(tmp_path)), "--out", str(tmp_path)]) == 2

    def test_bad_arguments_exit_1(self):
        with pytest.raises(SystemExit) as err:
            cli.main(["pension-query", "--wealth", "x"])
        assert err.value.code == 1


class TestValidateCommand:
    def test_bundled_files_pass(self):
        assert cli.main(["validate", f"{DATA}/life_table_au.csv", f"{DATA}/policy.yaml"]) == 0

    def test_probability_above_one(self, tmp_path, capsys):
        f = tmp_path / "lt.csv"
        f.write_text("age,unisex\n65,0.99\n66,1.2\n")
        assert cli.main(["validate", str(f)]) == 1
        assert "row[1]" in capsys.readouterr().err

    def test_increasing_survival(self, tmp_path, capsys):
        f = tmp_path / "lt.csv"
        f.write_text("age,unisex\n65,0.95\n66,0.97\n")
        assert cli.main(["validate", str(f)]) == 1
        assert "increases" in capsys.readouterr().err

    def test_bad_policy(self, tmp_path, capsys):
        docs = list(yaml.safe_load_all(open(f"{DATA}/policy.yaml")))
        docs[0]["params"]["income_test"]["taper"]["couple"] = 1.5
        f = tmp_path / "p.yaml"
        f.write_text(yaml.safe_dump_all(docs))
        assert cli.main(["validate", str(f)]) == 1
        assert "income_test.taper.couple" in capsys.readouterr().err

    def test_scenario_file(self, tmp_path):
        f = tmp_path / "c.yaml"
        ScenarioConfig().dump(f)
        assert cli.main(["validate", str(f)]) == 0


class TestPensionQuery:
    @pytest.mark.parametrize("args,expected", [
        (["--wealth", "0", "--kind", "single", "--homeowner", "false"], "22721.00"),
        (["--wealth", "943090", "--kind", "single", "--homeowner", "no"], "0.00"),
        (["--wealth", "100000", "--kind", "couple", "--homeowner", "true"], "34252.00"),
    ])
    def test_post2015(self, capsys, args, expected):
        assert cli.main(["pension-query", *args, "--regime", "post2015"]) == 0
        assert capsys.readouterr().out.strip() == expected

    def test_pre2015_drawdown(self, capsys):
        # deduction 300000 / e65 exceeds a 4% drawdown: only the asset test can bite
        assert cli.main(["pension-query", "--wealth", "300000", "--kind", "single", "--homeowner",
                         "false", "--regime", "pre2015", "--drawdown", "0.04"]) == 0
        assert capsys.readouterr().out.strip() == "22721.00"

    def test_negative_wealth(self, capsys):
        assert cli.main(["pension-query", "--wealth", "-5", "--kind", "single", "--homeowner",
                         "0", "--regime", "post2015"]) == 1


class TestFigures:
    def test_empty_set_is_noop(self, tmp_path, caplog):
        assert run_figures([], out_dir=tmp_path) == {}
        assert "nothing to do" in caplog.text
        assert list(tmp_path.iterdir()) == []

    def test_pension_figure(self, tmp_path):
        out = run_figures([4], out_dir=tmp_path)
        assert len(out[4]) == 2
        meta, header, rows = read_table(out[4][0])
        assert header == ["wealth", "pre2015", "post2015", "post2015r"]
        assert meta["household"] == "single"

    def test_surface_figures_small(self, tmp_path):
        cfg = small_config(grid=small_config().grid.__class__(1_000.0, 3e6, 15), quadrature_nodes=3,
                           controls=small_config().controls.__class__(5, 5, refine_rounds=0))
        out = run_figures([2, 5], cfg, tmp_path)
        names = sorted(p.name for p in out[2])
        assert names == ["fig2_post2015_single_renter.csv", "fig2_post2015r_single_renter.csv",
                         "fig2_pre2015_single_renter.csv"]
        meta, header, rows = read_table(out[5][0])
        assert header == ["age", "wealth", "delta"] and len(rows) == 35 * 15
        assert meta["config_hash"] == cfg.config_hash()

    def test_cli_unknown_figure(self):
        with pytest.raises(SystemExit) as err:
            cli.main(["figures", "--fig", "12"])
        assert err.value.code == 1
