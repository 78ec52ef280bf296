"""Command-line entry point: solve, verify and plot in one pipeline.

``psdae solve`` runs transcription, the SQP solve, dual extraction and
the full verification battery, then writes ``solution.csv`` and
``report.json`` (and SVG figures with ``--plots``) into the output
directory.  ``psdae plot`` regenerates the figures from an existing CSV.

Exit codes:
    0   solve converged and every verification test passed
    1   the pipeline itself failed
    2   pipeline completed but the solve did not converge or a
        verification test failed (the report is still written)
    64  configuration error
    65  solution CSV failed schema validation
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

from . import covector, verify
from .basis import lgl_grid
from .ocp import PendulumParams, lq_problem, pendulum_problem, reduced_pendulum_problem
from .solution_io import SchemaError, write_solution_csv
from .sqp import SolverConfig, solve
from .transcribe import cold_start, transcribe

PROBLEMS = ("pendulum", "lq", "reduced-pendulum")

PARAM_KEYS = ("a", "c", "d", "g", "L", "alpha", "T")


@dataclasses.dataclass
class RunConfig:
    problem: str = "pendulum"
    nodes: int = 32
    a: float = 0.5
    c: float = 1.0
    d: float = 100.0
    g: float = 4.0
    L: float = 2.0
    alpha: float = 0.0
    T: float = None           # per-problem default: 2.2 pendulum, 1.0 lq
    b: float = 1.0            # terminal target of the lq problem
    max_iter: int = 500
    tol_stationarity: float = 1e-8
    tol_feasibility: float = 1e-9
    out: str = "."
    plots: bool = False
    verbose: bool = False
    skip_oracle: bool = False
    seed: int = 0             # reserved; the default pipeline is deterministic


class ConfigError(ValueError):
    pass


_CASTERS = {
    "problem": str, "out": str,
    "nodes": int, "max_iter": int, "seed": int,
    "plots": None, "verbose": None, "skip_oracle": None,  # booleans
}


def _coerce(name: str, value: str):
    if name not in {f.name for f in dataclasses.fields(RunConfig)}:
        raise ConfigError(f"unknown config key {name!r}")
    caster = _CASTERS.get(name, float)
    try:
        if caster is None:
            return value.lower() in ("1", "true", "yes", "on")
        return caster(value)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name!r}: {value!r}") from exc


def load_config(path) -> dict:
    """Flat key=value file; blank lines and '#' comments ignored."""
    values = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"malformed config line: {raw!r}")
        key, _, val = line.partition("=")
        values[key.strip()] = _coerce(key.strip(), val.strip())
    return values


def build_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config is not None:
        try:
            file_values = load_config(args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        for key, val in file_values.items():
            setattr(cfg, key, val)
    for f in dataclasses.fields(RunConfig):
        override = getattr(args, f.name, None)
        if override is not None:
            setattr(cfg, f.name, override)
    if cfg.problem not in PROBLEMS:
        raise ConfigError(f"unknown problem {cfg.problem!r}; choose from {PROBLEMS}")
    if cfg.T is None:
        cfg.T = 1.0 if cfg.problem == "lq" else 2.2
    if cfg.T <= 0:
        raise ConfigError("horizon T must be positive")
    min_nodes = 4 if cfg.problem == "pendulum" else 2
    if cfg.nodes < min_nodes:
        raise ConfigError(f"{cfg.problem} runs need at least {min_nodes} nodes")
    return cfg


def _make_problem(cfg: RunConfig):
    if cfg.problem == "lq":
        return lq_problem(T=cfg.T, b=cfg.b)
    params = PendulumParams(a=cfg.a, c=cfg.c, d=cfg.d, g=cfg.g, L=cfg.L,
                            alpha=cfg.alpha, T=cfg.T)
    maker = pendulum_problem if cfg.problem == "pendulum" else reduced_pendulum_problem
    return maker(params)


def run(cfg: RunConfig) -> int:
    """Execute transcribe -> solve -> extract duals -> verify -> write."""
    out_dir = Path(cfg.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"error: output directory not writable: {exc}", file=sys.stderr)
        return 64

    t_start = time.perf_counter()
    problem = _make_problem(cfg)
    grid = lgl_grid(cfg.nodes)
    nlp = transcribe(problem, grid)
    solver_cfg = SolverConfig(max_iter=cfg.max_iter,
                              tol_stationarity=cfg.tol_stationarity,
                              tol_feasibility=cfg.tol_feasibility,
                              verbose=cfg.verbose)
    sol = solve(nlp, cold_start(nlp), solver_cfg)
    duals = covector.extract_duals(sol, grid, problem)
    traj = nlp.trajectory(sol.primal)

    vv_cfg = verify.VvConfig(include_oracle=not cfg.skip_oracle)
    report = verify.full_report(sol, nlp, duals, vv_cfg)
    wall = time.perf_counter() - t_start

    csv_path = out_dir / "solution.csv"
    write_solution_csv(csv_path, problem, cfg.nodes, traj, duals)

    payload = {
        "problem": cfg.problem,
        "parameters": {k: getattr(cfg, k) for k in PARAM_KEYS},
        "nodes": cfg.nodes,
        "solver": {
            "status": sol.status,
            "iterations": sol.iterations,
            "feasibility": sol.feasibility,
            "stationarity": sol.stationarity,
            "max_iter": cfg.max_iter,
            "tol_stationarity": cfg.tol_stationarity,
            "tol_feasibility": cfg.tol_feasibility,
        },
        "objective": float(sol.objective),
        "verification": report.to_dict(),
        "wall_clock_seconds": wall,
    }
    (out_dir / "report.json").write_text(json.dumps(payload, indent=2) + "\n",
                                         encoding="utf-8")

    if cfg.plots:
        from . import plots
        plots.emit_plots(csv_path, out_dir / "figures")

    if cfg.verbose:
        print(f"solver: {sol.status} in {sol.iterations} iterations, "
              f"objective {sol.objective:.9g}", file=sys.stderr)
        for name, ok in report.passes.items():
            print(f"  [{'PASS' if ok else 'FAIL'}] {name}", file=sys.stderr)

    return 0 if (sol.success and report.all_passed()) else 2


class _Parser(argparse.ArgumentParser):
    """Argument errors are configuration errors (exit 64, not argparse's 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(64)


def main(argv=None) -> int:
    parser = _Parser(
        prog="psdae",
        description="Pseudospectral DAE optimal control: solve, verify, plot.")
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve a problem and run the verification battery")
    ps.add_argument("--problem", choices=PROBLEMS, default=None)
    ps.add_argument("--config", default=None, help="flat key=value config file")
    ps.add_argument("--nodes", type=int, default=None, help="polynomial degree N (default 32)")
    for key in PARAM_KEYS:
        ps.add_argument(f"--{key}", type=float, default=None)
    ps.add_argument("--b", type=float, default=None, help="lq terminal target")
    ps.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    ps.add_argument("--tol-stationarity", dest="tol_stationarity", type=float, default=None)
    ps.add_argument("--tol-feasibility", dest="tol_feasibility", type=float, default=None)
    ps.add_argument("--out", default=None, help="output directory (default '.')")
    ps.add_argument("--plots", action="store_const", const=True, default=None,
                    help="emit SVG figures")
    ps.add_argument("--verbose", action="store_const", const=True, default=None)
    ps.add_argument("--skip-oracle", dest="skip_oracle", action="store_const",
                    const=True, default=None,
                    help="skip the minimal-coordinate cost oracle")
    ps.add_argument("--seed", type=int, default=None)

    pp = sub.add_parser("plot", help="render SVG figures from a solution CSV")
    pp.add_argument("csv", help="path to solution.csv")
    pp.add_argument("--out", default="figures", help="figure output directory")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # also covers --help when called as a function
        return int(exc.code or 0)

    if args.command == "plot":
        from . import plots
        try:
            written = plots.emit_plots(args.csv, args.out)
        except SchemaError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 65
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 64
        for path in written:
            print(path)
        return 0

    try:
        cfg = build_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 64
    try:
        return run(cfg)
    except Exception as exc:  # pipeline failure, never an uncaught traceback
        print(f"error: solve pipeline failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
