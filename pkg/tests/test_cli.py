"""Command-line interface: subcommands, exit codes, reproducible outputs."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from symbb.cli import main
from symbb.instance import BqopInstance, QapInstance, bqop_to_json, format_qaplib
from tests.conftest import brute_optimum, random_bqop


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def qap_file(tmp_path):
    f = np.array([1, 0, 1, 0, 0], dtype=np.int64)
    A = np.outer(f, f)
    rng = np.random.default_rng(30)
    B = rng.integers(0, 9, (5, 5))
    B = B + B.T
    np.fill_diagonal(B, 0)
    qap = QapInstance(n=5, A=A, B=B.astype(np.int64))
    path = tmp_path / "small.dat"
    path.write_text(format_qaplib(qap))
    return path


@pytest.fixture
def bqop_file(tmp_path):
    rng = np.random.default_rng(31)
    inst = random_bqop(rng, 7, 3)
    path = tmp_path / "small.json"
    path.write_text(bqop_to_json(inst))
    return path, inst


class TestConvert:
    def test_writes_bqop_json(self, runner, qap_file, tmp_path):
        out = tmp_path / "out.json"
        result = runner.invoke(main, ["convert", "--instance", str(qap_file),
                                      "--output", str(out)])
        assert result.exit_code == 0
        data = json.loads(out.read_text())
        assert data["n"] == 5 and data["m"] == 2
        assert data["config"]["subcommand"] == "convert"
        assert len(data["instance_sha256"]) == 64

    def test_non_rank_one_exits_1(self, runner, tmp_path):
        A = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=np.int64)
        qap = QapInstance(n=3, A=A, B=np.zeros((3, 3), dtype=np.int64))
        path = tmp_path / "bad.dat"
        path.write_text(format_qaplib(qap))
        result = runner.invoke(main, ["convert", "--instance", str(path)])
        assert result.exit_code == 1
        assert "rank-one" in result.output


class TestSymmetry:
    def test_group_order_line(self, runner, tmp_path, cycle6):
        inst = BqopInstance(n=6, B=cycle6, m=3)
        path = tmp_path / "cycle.json"
        path.write_text(bqop_to_json(inst))
        result = runner.invoke(main, ["symmetry", "--instance", str(path)])
        assert result.exit_code == 0
        assert "group order: 12" in result.output

    def test_fix_orbit_report(self, runner, tmp_path, cycle6):
        inst = BqopInstance(n=6, B=cycle6, m=3)
        path = tmp_path / "cycle.json"
        path.write_text(bqop_to_json(inst))
        csv_path = tmp_path / "orbits.csv"
        result = runner.invoke(main, ["symmetry", "--instance", str(path),
                                      "--fix", "1", "--orbit-csv", str(csv_path)])
        assert result.exit_code == 0
        assert "orbits after fixing variable 1" in result.output
        header = csv_path.read_text().splitlines()[0]
        assert header == "orbit,members,size,score"


class TestBoundRoot:
    def test_prints_bound_and_json(self, runner, bqop_file, tmp_path):
        path, inst = bqop_file
        out = tmp_path / "bound.json"
        result = runner.invoke(main, [
            "bound-root", "--instance", str(path), "--apg-tol", "1e-10",
            "--apg-max-iter", "4000", "--json", str(out)])
        assert result.exit_code == 0
        assert "validated lower bound:" in result.output
        data = json.loads(out.read_text())
        assert data["a"] <= data["b"]
        # The root bound is conditional on variable 1 being fixed to 1.
        import itertools
        opt1 = min(int(inst.B[np.ix_(s, s)].sum())
                   for s in (np.array((0,) + c)
                             for c in itertools.combinations(range(1, 7), 2)))
        assert data["integer_lower_bound"] <= opt1

    def test_trace_csv(self, runner, bqop_file, tmp_path):
        path, _ = bqop_file
        trace = tmp_path / "trace.csv"
        result = runner.invoke(main, [
            "bound-root", "--instance", str(path), "--apg-tol", "1e-10",
            "--apg-max-iter", "4000", "--trace-csv", str(trace)])
        assert result.exit_code == 0
        assert trace.read_text().startswith("k,y,a,b,g,gprime")


class TestSolve:
    def test_proved_exit_0(self, runner, bqop_file, tmp_path):
        path, inst = bqop_file
        opt = brute_optimum(inst)
        cert = tmp_path / "cert.json"
        stats = tmp_path / "stats.csv"
        result = runner.invoke(main, [
            "solve", "--instance", str(path), "--target", str(opt),
            "--certificate-json", str(cert), "--stats-csv", str(stats)])
        assert result.exit_code == 0
        assert "outcome: Proved" in result.output
        data = json.loads(cert.read_text())
        assert data["outcome"] == "Proved"
        assert data["config"]["target"] == opt
        assert stats.read_text().startswith("depth,")

    def test_refuted_exit_2(self, runner, bqop_file):
        path, inst = bqop_file
        opt = brute_optimum(inst)
        result = runner.invoke(main, [
            "solve", "--instance", str(path), "--target", str(opt + 1)])
        assert result.exit_code == 2
        assert f"witness value: {opt}" in result.output

    def test_budget_exit_3(self, runner, tmp_path):
        rng = np.random.default_rng(32)
        inst = random_bqop(rng, 10, 5)
        path = tmp_path / "ten.json"
        path.write_text(bqop_to_json(inst))
        result = runner.invoke(main, [
            "solve", "--instance", str(path),
            "--target", str(brute_optimum(inst)), "--node-budget", "2"])
        assert result.exit_code == 3

    def test_rerun_byte_stable_excluding_timing(self, runner, bqop_file, tmp_path):
        path, inst = bqop_file
        opt = brute_optimum(inst)
        outs = []
        for name in ("a.json", "b.json"):
            cert = tmp_path / name
            result = runner.invoke(main, [
                "solve", "--instance", str(path), "--target", str(opt),
                "--certificate-json", str(cert)])
            assert result.exit_code == 0
            data = json.loads(cert.read_text())
            data.pop("timing")
            outs.append(json.dumps(data, sort_keys=True))
        assert outs[0] == outs[1]

    def test_config_override(self, runner, tmp_path):
        rng = np.random.default_rng(33)
        inst = random_bqop(rng, 10, 5)
        path = tmp_path / "ten.json"
        path.write_text(bqop_to_json(inst))
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"node_budget": 2}))
        result = runner.invoke(main, [
            "solve", "--instance", str(path),
            "--target", str(brute_optimum(inst)), "--config", str(cfg)])
        # The overridden budget forces an inconclusive run.
        assert result.exit_code == 3
        assert "outcome: Inconclusive" in result.output


class TestEstimate:
    def test_summary_and_json(self, runner, bqop_file, tmp_path):
        path, inst = bqop_file
        out = tmp_path / "est.json"
        result = runner.invoke(main, [
            "estimate", "--instance", str(path),
            "--target", str(brute_optimum(inst)), "--seeds", "0,1",
            "--report-json", str(out)])
        assert result.exit_code == 0
        assert "estimated nodes (min/mean/max):" in result.output
        data = json.loads(out.read_text())
        assert data["seeds"] == [0, 1]
        assert data["config"]["subcommand"] == "estimate"


class TestSampleDist:
    def test_histogram_csv(self, runner, bqop_file, tmp_path):
        path, _ = bqop_file
        csv_path = tmp_path / "hist.csv"
        result = runner.invoke(main, [
            "sample-dist", "--instance", str(path), "--count", "200",
            "--optimum", "50", "--csv", str(csv_path)])
        assert result.exit_code == 0
        assert "samples: 200" in result.output
        assert csv_path.read_text().startswith("bin_left,bin_right,probability")
