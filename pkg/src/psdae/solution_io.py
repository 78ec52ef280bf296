"""Reading and writing the nodal solution CSV.

One row per collocation node.  A block of ``# key=value`` comment lines
carries the problem selector and physical parameters so downstream tools
(the plot command in particular) are self-contained.  Values are written
with 17 significant digits, which round-trips IEEE doubles exactly.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np

from .covector import DualTrajectory
from .ocp import OcpProblem
from .transcribe import Trajectory


class SchemaError(ValueError):
    """Solution CSV does not carry the columns its problem requires."""


SCHEMAS = {
    "pendulum": ["t", "x1", "x2", "x3", "x4", "x5", "u",
                 "lam1", "lam2", "lam3", "lam4", "mu"],
    "lq": ["t", "x1", "u", "lam1"],
    "reduced-pendulum": ["t", "phi", "phidot", "u", "lam1", "lam2"],
}


def write_solution_csv(path, problem: OcpProblem, nodes: int,
                       traj: Trajectory, duals: DualTrajectory) -> None:
    columns = SCHEMAS[problem.name]
    data = np.column_stack([traj.times, traj.states, traj.algebraic,
                            traj.controls, duals.costates, duals.path_covectors])
    if data.shape[1] != len(columns):
        raise SchemaError(
            f"{problem.name} solution has {data.shape[1]} channels, "
            f"schema expects {len(columns)}")

    meta = {"problem": problem.name, "N": nodes, "T": problem.T}
    if dataclasses.is_dataclass(problem.params):
        meta.update(dataclasses.asdict(problem.params))
    for i, val in problem.terminal:
        meta[f"terminal_x{i + 1}"] = val

    with open(path, "w", encoding="utf-8") as f:
        for key, val in meta.items():
            f.write(f"# {key}={val:.17g}\n" if isinstance(val, float) else f"# {key}={val}\n")
        f.write(",".join(columns) + "\n")
        for row in data:
            f.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_solution_csv(path):
    """Return (meta, columns) where columns maps names to arrays.

    Raises SchemaError when the problem named in the header is unknown or
    a required column is missing.
    """
    meta = {}
    header = None
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line.lstrip("# ").partition("=")
            meta[key.strip()] = val.strip()
            continue
        if header is None:
            header = [c.strip() for c in line.split(",")]
            continue
        rows.append([float(v) for v in line.split(",")])
    if header is None or not rows:
        raise SchemaError(f"{path} carries no data rows")

    problem = meta.get("problem")
    if problem not in SCHEMAS:
        raise SchemaError(f"unknown problem {problem!r} in {path}")
    for col in SCHEMAS[problem]:
        if col not in header:
            raise SchemaError(f"missing column {col!r} for problem {problem}")

    data = np.asarray(rows, dtype=float)
    return meta, {name: data[:, i] for i, name in enumerate(header)}
