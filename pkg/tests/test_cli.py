"""End-to-end tests of the command line interface."""

import json
import math

import pytest

from feketelab import cli
from feketelab.cache import CacheStore
from feketelab.errors import NonConvergence
from feketelab.sections import get_space


@pytest.fixture(autouse=True)
def isolated_cache(monkeypatch, tmp_path):
    monkeypatch.delenv("FEKETE_LAB_CACHE", raising=False)
    return tmp_path


def run(argv, extra=()):
    return cli.main(list(argv) + list(extra))


def base_flags(tmp_path):
    return [
        "--cache-dir",
        str(tmp_path / "cache"),
        "--out-dir",
        str(tmp_path / "reports"),
    ]


class TestSolve:
    def test_octahedron_cache_value(self, tmp_path, capsys):
        rc = run(
            ["fekete", "solve", "--model", "cp1", "--k", "5", "--seed", "7"],
            base_flags(tmp_path),
        )
        assert rc == 0
        store = CacheStore(tmp_path / "cache")
        config = store.load("cp1", 5)
        assert config is not None
        expected = -6.0 * math.log(2.0) + get_space("cp1", 5).log_normalizer_sum
        assert config.log_vdm == pytest.approx(expected, abs=1e-6)
        assert config.solver_meta["run_config"]["seed"] == 7
        assert "code_hash" in config.solver_meta

    def test_second_run_uses_cache(self, tmp_path, capsys):
        args = ["fekete", "solve", "--k", "3"] + base_flags(tmp_path)
        assert run(args) == 0
        capsys.readouterr()
        assert run(args) == 0
        assert "(cached)" in capsys.readouterr().out

    def test_nonconvergence_exit(self, tmp_path, monkeypatch, capsys):
        def boom(space, options=None):
            raise NonConvergence("no start converged")

        monkeypatch.setattr(cli, "solve_fekete", boom)
        rc = run(["fekete", "solve", "--k", "3"], base_flags(tmp_path))
        assert rc == 3
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "NonConvergence"


class TestValidation:
    def test_negative_level(self, tmp_path, capsys):
        rc = run(["lebesgue", "--model", "cp1", "--k", "-1"], base_flags(tmp_path))
        assert rc == 2
        err = json.loads(capsys.readouterr().err)
        assert err["exit_code"] == 2

    def test_zero_trials(self, tmp_path, capsys):
        rc = run(
            ["random", "ratio", "--k", "16", "--trials", "0"], base_flags(tmp_path)
        )
        assert rc == 2
        assert json.loads(capsys.readouterr().err)["error"] == "DomainError"

    def test_bad_eps(self, tmp_path, capsys):
        rc = run(["witness", "--k", "4", "--eps", "1.5"], base_flags(tmp_path))
        assert rc == 2

    def test_bad_k_list(self, tmp_path, capsys):
        rc = run(["lebesgue", "--k-list", "4,x"], base_flags(tmp_path))
        assert rc == 2

    def test_undersampling_factor(self, tmp_path, capsys):
        rc = run(["oversample", "--k", "4", "--a", "0.5"], base_flags(tmp_path))
        assert rc == 2


class TestNoSolve:
    def test_missing_cache_exit(self, tmp_path, capsys):
        rc = run(["lebesgue", "--k", "4", "--no-solve"], base_flags(tmp_path))
        assert rc == 4
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "CacheMiss"

    def test_present_cache_ok(self, tmp_path, capsys):
        flags = base_flags(tmp_path)
        assert run(["fekete", "solve", "--k", "4"], flags) == 0
        assert run(["lebesgue", "--k", "4", "--no-solve"], flags) == 0


class TestDryRun:
    def test_prints_plan_without_artifacts(self, tmp_path, capsys):
        rc = run(
            ["random", "sup", "--k", "8", "--trials", "200", "--dry-run"],
            base_flags(tmp_path),
        )
        assert rc == 0
        plan = json.loads(capsys.readouterr().out)
        assert plan["command"] == "random"
        assert plan["levels"] == [8]
        assert plan["run_config"]["trials"] == 200
        assert not (tmp_path / "reports").exists()
        assert not (tmp_path / "cache").exists()


class TestReports:
    def test_random_sup_artifacts(self, tmp_path):
        flags = base_flags(tmp_path)
        rc = run(["random", "sup", "--k", "4", "--trials", "50", "--seed", "1"], flags)
        assert rc == 0
        out = tmp_path / "reports"
        stem = "randsup-cp1-k4-s1"
        assert (out / f"{stem}.json").exists()
        assert (out / f"{stem}.csv").exists()
        assert (out / f"{stem}.png").exists()
        data = json.loads((out / f"{stem}.json").read_text())
        assert data["params"]["run_config"]["trials"] == 50
        assert len(data["params"]["code_hash"]) == 16

    def test_rerun_byte_identical_rows(self, tmp_path):
        flags = base_flags(tmp_path)
        path = tmp_path / "reports" / "randsup-cp1-k4-s1.csv"
        run(["random", "sup", "--k", "4", "--trials", "50", "--seed", "1"], flags)
        first = path.read_text().splitlines()
        run(["random", "sup", "--k", "4", "--trials", "50", "--seed", "1"], flags)
        second = path.read_text().splitlines()
        assert first[3:] == second[3:]

    def test_lebesgue_rows(self, tmp_path, capsys):
        flags = base_flags(tmp_path)
        rc = run(["lebesgue", "--k-list", "1 2"], flags)
        assert rc == 0
        out = tmp_path / "reports"
        data = json.loads((out / "lebesgue-cp1-k1to2-s0.json").read_text())
        assert [row["k"] for row in data["rows"]] == [1, 2]
        assert data["rows"][0]["lebesgue"] == pytest.approx(math.sqrt(2.0), abs=1e-6)

    def test_witness_and_ratio_and_l2_and_max(self, tmp_path):
        flags = base_flags(tmp_path)
        assert run(["witness", "--k", "8", "--eps", "0.2"], flags) == 0
        assert run(["random", "ratio", "--k", "4", "--trials", "20"], flags) == 0
        assert run(["random", "l2", "--k", "4", "--trials", "20"], flags) == 0
        assert run(["random", "max", "--k", "4", "--trials", "20"], flags) == 0
        out = tmp_path / "reports"
        assert (out / "witness-cp1-k8-s0.json").exists()
        assert (out / "randratio-cp1-k4-s0.json").exists()
        assert (out / "randl2-cp1-k4-s0.json").exists()
        assert (out / "randmax-cp1-k4-s0.json").exists()

    def test_oversample(self, tmp_path):
        flags = base_flags(tmp_path)
        rc = run(
            ["oversample", "--k", "4", "--a", "1.5", "--trials", "10"], flags
        )
        assert rc == 0
        data = json.loads(
            (tmp_path / "reports" / "oversample-cp1-k4-s0.json").read_text()
        )
        row = data["rows"][0]
        assert row["witness_ratio"] >= 1.0 - 1e-9
        assert row["worst_ratio"] >= row["ratio_max"] - 1e-12
        # both levels were solved and cached along the way
        store = CacheStore(tmp_path / "cache")
        assert store.has("cp1", 4) and store.has("cp1", 6)

    def test_diag_commands(self, tmp_path):
        flags = base_flags(tmp_path)
        assert run(["diag", "separation", "--k-list", "2,4"], flags) == 0
        assert run(["diag", "equidist", "--k", "4", "--r-scale", "1.0"], flags) == 0
        assert run(["diag", "bergman", "--k-list", "4,8"], flags) == 0
        out = tmp_path / "reports"
        assert (out / "separation-cp1-k2to4-s0.json").exists()
        assert (out / "equidist-cp1-k4-s0.json").exists()
        berg = json.loads((out / "bergman-cp1-k4to8-s0.json").read_text())
        for row in berg["rows"]:
            assert row["max_bound_ratio"] <= 1.0
            assert row["diag_rel_err"] <= 1e-10


class TestCacheCommand:
    def test_ls_empty(self, tmp_path, capsys):
        rc = run(["cache", "ls", "--cache-dir", str(tmp_path / "cache")])
        assert rc == 0
        assert "empty" in capsys.readouterr().out

    def test_ls_lists_entries(self, tmp_path, capsys):
        flags = base_flags(tmp_path)
        run(["fekete", "solve", "--k-list", "1,2"], flags)
        capsys.readouterr()
        rc = run(["cache", "ls", "--cache-dir", str(tmp_path / "cache")])
        assert rc == 0
        out = capsys.readouterr().out
        assert "k=1" in out and "k=2" in out


class TestEnvOverride:
    def test_env_wins_over_flag(self, tmp_path, monkeypatch):
        env_dir = tmp_path / "envcache"
        monkeypatch.setenv("FEKETE_LAB_CACHE", str(env_dir))
        rc = run(["fekete", "solve", "--k", "2"], base_flags(tmp_path))
        assert rc == 0
        assert CacheStore(env_dir).has("cp1", 2)
        assert not (tmp_path / "cache").exists()
