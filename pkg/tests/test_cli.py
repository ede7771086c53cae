import json

import pytest

from pairing_tsp.cli import main
from pairing_tsp.core import load_instance
from pairing_tsp.observation import observation_budget
from pairing_tsp.plan import plan_size


def run_cli(*argv) -> int:
    return main(list(argv))


@pytest.fixture
def instance_file(tmp_path):
    path = tmp_path / "inst.txt"
    assert run_cli("gen", "-n", "6", "--seed", "7", "--out", str(path)) == 0
    return path


class TestGen:
    def test_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        assert run_cli("gen", "-n", "8", "--seed", "3", "--out", str(a)) == 0
        assert run_cli("gen", "-n", "8", "--seed", "3", "--out", str(b)) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_json_format_loadable(self, tmp_path):
        path = tmp_path / "inst.json"
        assert run_cli("gen", "-n", "6", "--seed", "1", "--format", "json", "--out", str(path)) == 0
        inst = load_instance(path)
        assert inst.n == 6

    def test_stdout_default(self, capsys):
        assert run_cli("gen", "-n", "4", "--seed", "0") == 0
        out = capsys.readouterr().out
        assert out.startswith("4 0.0 10000.0")

    def test_odd_n_exits_one(self, capsys):
        assert run_cli("gen", "-n", "5", "--seed", "0") == 1
        assert "error" in capsys.readouterr().err


class TestObserve:
    def test_reconstruct_budget_n6(self, instance_file, tmp_path):
        out = tmp_path / "obs.json"
        assert run_cli("observe", str(instance_file), "--out", str(out)) == 0
        data = json.loads(out.read_text())
        assert data["observations"] == observation_budget(6) == 19
        assert data["strategy"] == "reconstruct"
        assert len(data["tilde"]) == 6
        assert all(v == 0 for v in data["tilde"][0])

    def test_minimal_strategy_counts(self, instance_file, tmp_path):
        out = tmp_path / "obs.json"
        assert run_cli("observe", str(instance_file), "--strategy", "minimal", "--out", str(out)) == 0
        data = json.loads(out.read_text())
        assert data["observations"] == plan_size(6) == 10

    def test_share_observations_lowers_count(self, instance_file, capsys):
        assert run_cli("observe", str(instance_file), "--share-observations") == 0
        data = json.loads(capsys.readouterr().out)
        assert data["observations"] < 19

    def test_missing_file_exits_one(self, tmp_path):
        assert run_cli("observe", str(tmp_path / "nope.txt")) == 1


class TestSolve:
    def test_heuristic_below_exact(self, instance_file, tmp_path):
        heur, exact = tmp_path / "h.json", tmp_path / "e.json"
        assert run_cli(
            "solve", str(instance_file), "--algo", "pnn+p2opt", "--seed", "3", "--out", str(heur)
        ) == 0
        assert run_cli(
            "solve", str(instance_file), "--algo", "exact", "--seed", "3", "--out", str(exact)
        ) == 0
        h, e = json.loads(heur.read_text()), json.loads(exact.read_text())
        assert h["score"] <= e["score"] + 1e-9
        assert 0 <= h["p"] <= 1

    def test_observed_mode_reports_observations(self, instance_file, capsys):
        assert run_cli(
            "solve", str(instance_file), "--algo", "pnn", "--mode", "observed", "--seed", "1"
        ) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["observations"] == 19
        assert data["mode"] == "observed"

    def test_trusted_mode_accepts_shadow_file(self, instance_file, tmp_path, capsys):
        shadow = tmp_path / "shadow.json"
        assert run_cli("observe", str(instance_file), "--out", str(shadow)) == 0
        assert run_cli("solve", str(shadow), "--algo", "pnn", "--seed", "2") == 0
        data = json.loads(capsys.readouterr().out)
        assert data["observations"] is None
        assert data["n"] == 6
        assert 0 <= data["p"] <= 1

    def test_observed_mode_rejects_shadow_file(self, instance_file, tmp_path, capsys):
        shadow = tmp_path / "shadow.json"
        assert run_cli("observe", str(instance_file), "--out", str(shadow)) == 0
        assert run_cli("solve", str(shadow), "--algo", "pnn", "--mode", "observed") == 1
        assert "raw instance" in capsys.readouterr().err

    def test_deterministic_output(self, instance_file, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            assert run_cli(
                "solve", str(instance_file), "--algo", "pnn+p2opt", "--seed", "9",
                "--start-node", "random", "--out", str(path),
            ) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_random_start_within_range(self, instance_file, capsys):
        assert run_cli(
            "solve", str(instance_file), "--algo", "pnn", "--seed", "4",
            "--start-node", "random",
        ) == 0
        data = json.loads(capsys.readouterr().out)
        assert 1 <= data["start_node"] <= 6

    def test_enumeration_cap_guard(self, tmp_path, capsys):
        big = tmp_path / "big.txt"
        assert run_cli("gen", "-n", "14", "--seed", "0", "--out", str(big)) == 0
        assert run_cli("solve", str(big), "--algo", "exact") == 1
        assert "max_n" in capsys.readouterr().err
        assert run_cli(
            "solve", str(big), "--algo", "exact", "--enumeration-cap", "14",
            "--out", str(tmp_path / "ok.json"),
        ) == 0


class TestGraph:
    def test_dump_schema(self, instance_file, capsys):
        assert run_cli("graph", str(instance_file)) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["node_count"] == 15
        assert len(data["edges"]) == 39
        assert data["nodes"][0] == "L1:1"
        layer1 = [e for e in data["edges"] if e["u"].startswith("L1") and e["v"].startswith("L1")]
        inst = load_instance(instance_file)
        first = next(e for e in layer1 if e["u"] == "L1:1" and e["v"] == "L1:2")
        assert first["cost"] == -inst.value(1, 2)


class TestBench:
    def write_spec(self, tmp_path, **overrides):
        spec = {
            "n_values": [8],
            "trials": 2,
            "value_range": [0, 10000],
            "exchange_limit": 600,
            "algorithms": ["random", "pnn+p2opt"],
            "master_seed": 5,
        }
        spec.update(overrides)
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(spec))
        return path

    def test_perf_study_byte_identical(self, tmp_path):
        spec = self.write_spec(tmp_path)
        outs = []
        for name in ("one", "two"):
            base = tmp_path / name
            assert run_cli("bench", "perf", "--spec", str(spec), "--out", str(base)) == 0
            outs.append((base.with_suffix(".csv").read_bytes(), base.with_suffix(".json").read_bytes()))
        assert outs[0] == outs[1]

    def test_csv_header(self, tmp_path):
        spec = self.write_spec(tmp_path)
        base = tmp_path / "report"
        assert run_cli("bench", "perf", "--spec", str(spec), "--out", str(base), "--format", "csv") == 0
        lines = base.with_suffix(".csv").read_text().splitlines()
        assert lines[0] == "n,algo,trial,seed,p,noc,exchanges,observations,millis"
        assert not base.with_suffix(".json").exists()

    def test_full_scale_guard(self, tmp_path, capsys):
        spec = self.write_spec(tmp_path, n_values=[600], trials=1)
        assert run_cli("bench", "perf", "--spec", str(spec), "--out", str(tmp_path / "r")) == 1
        assert "--full" in capsys.readouterr().err

    def test_malformed_spec_exits_one(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run_cli("bench", "perf", "--spec", str(bad)) == 1

    def test_sweep_via_cli(self, tmp_path):
        spec = self.write_spec(
            tmp_path, exchange_limit=[0, 5, 50], algorithms=["pnn+p2opt"], trials=2
        )
        base = tmp_path / "sweep"
        assert run_cli("bench", "sweep", "--spec", str(spec), "--out", str(base)) == 0
        data = json.loads(base.with_suffix(".json").read_text())
        means = data["extras"]["sweep"]["8"]["mean_p"]
        assert all(b >= a for a, b in zip(means, means[1:]))


class TestUsageErrors:
    def test_unknown_subcommand(self, capsys):
        assert run_cli("frobnicate") == 1
        assert "usage" in capsys.readouterr().err.lower()

    def test_unknown_flag(self, capsys):
        assert run_cli("gen", "-n", "4", "--bogus") == 1

    def test_missing_required(self, capsys):
        assert run_cli("gen") == 1

    def test_help_exits_zero(self, capsys):
        assert run_cli("--help") == 0
        assert "pairing-tsp" in capsys.readouterr().out
