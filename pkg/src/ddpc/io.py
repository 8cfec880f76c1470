"""File formats: JSON matrices and systems, trajectory/log CSV, OCP dumps."""

import csv
import json
from pathlib import Path

import numpy as np

from .descriptor import DescriptorSystem, Trajectory
from .errors import InputError


def fmt(v):
    """17 significant digits round-trip every double exactly."""
    return format(float(v), ".17g")


def matrix_to_json(M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return {"rows": M.shape[0], "cols": M.shape[1], "data": [float(v) for v in M.reshape(-1)]}


def matrix_from_json(obj):
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed matrix object: {exc}") from None
    if len(data) != rows * cols:
        raise InputError(f"matrix has {len(data)} entries, expected {rows}x{cols}")
    return np.array(data, dtype=float).reshape(rows, cols)


def system_to_json(sys):
    return {name: matrix_to_json(getattr(sys, name)) for name in "EABCD"}


def system_from_json(obj):
    missing = [k for k in "EABC" if k not in obj]
    if missing:
        raise InputError(f"system file lacks {', '.join(missing)}")
    mats = {k: matrix_from_json(obj[k]) for k in "EABCD" if k in obj}
    return DescriptorSystem(**mats)


def load_system(path):
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: {exc}") from None
    return system_from_json(obj)


def save_system(sys, path):
    Path(path).write_text(json.dumps(system_to_json(sys), indent=2))


def write_trajectory_csv(traj, path):
    m, p = traj.u.shape[1], traj.y.shape[1]
    header = ["t"] + [f"u_{i}" for i in range(m)] + [f"y_{i}" for i in range(p)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for k, t in enumerate(traj.times):
            writer.writerow([int(t)] + [fmt(v) for v in traj.u[k]] + [fmt(v) for v in traj.y[k]])


def read_trajectory_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise InputError(f"{path}: no data rows")
    header = rows[0]
    if not header or header[0] != "t":
        raise InputError(f"{path}: first column must be 't'")
    u_cols = [i for i, h in enumerate(header) if h.startswith("u_")]
    y_cols = [i for i, h in enumerate(header) if h.startswith("y_")]
    if not u_cols or not y_cols:
        raise InputError(f"{path}: need u_* and y_* columns")
    body = np.array([[float(v) for v in row] for row in rows[1:]])
    t = body[:, 0].astype(int)
    if np.any(np.diff(t) != 1):
        raise InputError(f"{path}: time column must increase in steps of one")
    return Trajectory(body[:, u_cols], body[:, y_cols], None, int(t[0]))


def write_log_csv(log, path):
    t, u, y = log.arrays()
    m, p = u.shape[1], y.shape[1]
    y_ref = np.array(log.y_ref)
    header = (["t"] + [f"u_{i}" for i in range(m)] + [f"y_{i}" for i in range(p)]
              + [f"y_ref_{i}" for i in range(p)] + ["cost", "feasible"])
    with_x = log.x is not None
    if with_x:
        header += [f"x_{i}" for i in range(log.x.shape[1])]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for k in range(len(t)):
            row = [int(t[k])] + [fmt(v) for v in u[k]] + [fmt(v) for v in y[k]]
            row += [fmt(v) for v in y_ref[k]] + [fmt(log.cost[k]), int(log.feasible[k])]
            if with_x:
                row += [fmt(v) for v in log.x[k]]
            writer.writerow(row)


def ocp_dump(qp, solution):
    """JSON-ready dict of the QP data and its solution."""
    return {
        "H": matrix_to_json(qp.H),
        "g": matrix_to_json(qp.g[:, None]),
        "Aeq": matrix_to_json(qp.Aeq),
        "beq": matrix_to_json(qp.beq[:, None]),
        "solution": solution_to_json(solution),
    }


def solution_to_json(sol):
    return {
        "t0": sol.t0,
        "window": sol.window,
        "u": matrix_to_json(sol.u),
        "y": matrix_to_json(sol.y),
        "alpha": matrix_to_json(sol.alpha[:, None]) if sol.alpha.size else None,
        "cost": sol.cost,
        "kkt_residual": sol.kkt_residual,
        "constraint_residual": sol.constraint_residual,
        "feasible": sol.feasible,
    }
