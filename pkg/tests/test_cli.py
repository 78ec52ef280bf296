"""Command-line pipeline: exit codes, artifacts, determinism, plots."""

import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from psdae import cli

PENDULUM_FIGURES = {
    "control.svg", "costates.svg", "propagation_overlay.svg", "phase_x1_x3.svg",
    "tracking_x1.svg", "tracking_x3.svg", "path_residual.svg",
    "stationarity_u.svg", "stationarity_x5.svg",
}


def run_cli(*argv):
    return cli.main(list(argv))


class TestConfigValidation:
    def test_too_few_nodes_for_pendulum(self, tmp_path):
        assert run_cli("solve", "--problem", "pendulum", "--nodes", "2",
                       "--out", str(tmp_path)) == 64

    def test_unknown_problem(self):
        assert run_cli("solve", "--problem", "warp-drive") == 64

    def test_bad_config_file(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("nodes = not-a-number\n")
        assert run_cli("solve", "--config", str(cfg)) == 64

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("warp=9\n")
        assert run_cli("solve", "--config", str(cfg)) == 64

    def test_missing_config_file(self, tmp_path):
        assert run_cli("solve", "--config", str(tmp_path / "nope.cfg")) == 64

    def test_negative_horizon(self, tmp_path):
        assert run_cli("solve", "--problem", "lq", "--T", "-1.0",
                       "--out", str(tmp_path)) == 64

    def test_flags_override_config_file(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("problem=lq\nnodes=4\nb=2.0\n")
        out = tmp_path / "run"
        assert run_cli("solve", "--config", str(cfg), "--b", "1.0",
                       "--out", str(out)) == 0
        rep = json.loads((out / "report.json").read_text())
        # objective b^2/T = 1 proves the flag value won
        assert abs(rep["objective"] - 1.0) < 1e-8


class TestLqRun:
    def test_exit_zero_and_objective(self, tmp_path):
        out = tmp_path / "lq"
        assert run_cli("solve", "--problem", "lq", "--nodes", "4",
                       "--out", str(out)) == 0
        rep = json.loads((out / "report.json").read_text())
        assert abs(rep["objective"] - 1.0) < 1e-8
        assert rep["solver"]["status"] == "success"
        assert rep["verification"]["passes"]["state_deviation"]

    def test_report_carries_required_fields(self, tmp_path):
        out = tmp_path / "lq"
        run_cli("solve", "--problem", "lq", "--nodes", "4", "--out", str(out))
        rep = json.loads((out / "report.json").read_text())
        for key in ("problem", "parameters", "nodes", "solver", "objective",
                    "verification", "wall_clock_seconds"):
            assert key in rep
        assert rep["verification"]["thresholds"]

    def test_lq_plot_set_skips_pendulum_figures(self, tmp_path):
        out = tmp_path / "lq"
        assert run_cli("solve", "--problem", "lq", "--nodes", "4",
                       "--out", str(out), "--plots") == 0
        files = {p.name for p in (out / "figures").glob("*.svg")}
        assert files == {"control.svg", "costates.svg", "propagation_overlay.svg"}


@pytest.fixture(scope="module")
def pendulum_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("pendulum_run")
    code = run_cli("solve", "--problem", "pendulum", "--alpha", "0.0",
                   "--nodes", "32", "--out", str(out), "--plots",
                   "--skip-oracle")
    return code, out


class TestPendulumRun:
    def test_exit_zero(self, pendulum_run):
        code, _ = pendulum_run
        assert code == 0

    def test_nine_wellformed_svg_figures(self, pendulum_run):
        _, out = pendulum_run
        files = sorted((out / "figures").glob("*.svg"))
        assert {f.name for f in files} == PENDULUM_FIGURES
        assert len(files) == 9
        for f in files:
            root = ET.parse(f).getroot()
            assert root.tag.endswith("svg")

    def test_solution_csv_schema(self, pendulum_run):
        _, out = pendulum_run
        from psdae.solution_io import read_solution_csv
        meta, cols = read_solution_csv(out / "solution.csv")
        assert meta["problem"] == "pendulum"
        assert int(meta["N"]) == 32
        assert len(cols["t"]) == 33

    def test_rerun_is_byte_identical(self, pendulum_run, tmp_path):
        _, out = pendulum_run
        out2 = tmp_path / "again"
        assert run_cli("solve", "--problem", "pendulum", "--alpha", "0.0",
                       "--nodes", "32", "--out", str(out2), "--skip-oracle") == 0
        assert (out / "solution.csv").read_bytes() == (out2 / "solution.csv").read_bytes()

    def test_plot_subcommand_regenerates(self, pendulum_run, tmp_path):
        _, out = pendulum_run
        dest = tmp_path / "figs"
        assert run_cli("plot", str(out / "solution.csv"), "--out", str(dest)) == 0
        assert len(list(dest.glob("*.svg"))) == 9


class TestUnconvergedRun:
    def test_max_iter_one_exits_two_with_full_report(self, tmp_path):
        out = tmp_path / "unconverged"
        code = run_cli("solve", "--problem", "pendulum", "--nodes", "32",
                       "--max-iter", "1", "--out", str(out), "--skip-oracle")
        assert code == 2
        rep = json.loads((out / "report.json").read_text())
        assert rep["solver"]["status"] != "success"
        assert not rep["verification"]["passes"]["solver_converged"]
        assert (out / "solution.csv").exists()
        assert "thresholds" in rep["verification"]


class TestPlotErrors:
    def test_missing_column_exits_65(self, tmp_path, capsys):
        csv = tmp_path / "bad.csv"
        csv.write_text("# problem=pendulum\n# N=4\n# T=2.2\n"
                       "t,x1,x2\n0.0,0.0,0.0\n")
        assert run_cli("plot", str(csv), "--out", str(tmp_path / "f")) == 65
        assert "x3" in capsys.readouterr().err

    def test_unknown_problem_exits_65(self, tmp_path):
        csv = tmp_path / "bad.csv"
        csv.write_text("# problem=mystery\nt,x\n0.0,0.0\n")
        assert run_cli("plot", str(csv), "--out", str(tmp_path / "f")) == 65


class TestConsoleEntryPoint:
    def test_module_invocation(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "psdae", "solve", "--problem", "lq",
             "--nodes", "4", "--out", str(tmp_path)],
            capture_output=True, text=True, timeout=120)
        assert proc.returncode == 0
        assert (tmp_path / "report.json").exists()
