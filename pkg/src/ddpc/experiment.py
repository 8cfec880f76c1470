"""End-to-end pipelines shared by the command line and the demos."""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import presets
from .behavior import build_hankel_representation, generate_pe_input, is_persistently_exciting
from .descriptor import (
    check_regularity,
    observability_index,
    quasi_weierstrass,
    r_controllable,
    r_observable,
    simulate,
)
from .errors import InputError
from .io import load_system, matrix_from_json, read_trajectory_csv
from .mpc import MpcConfig, run_closed_loop, stability_diagnostics


def analyze(sys, tol=1e-9):
    """Structural report of a descriptor system as a JSON-ready dict."""
    report = {"n": sys.n, "m": sys.m, "p": sys.p, "regular": bool(check_regularity(sys, tol))}
    if not report["regular"]:
        return report
    qw = quasi_weierstrass(sys, tol)
    ctrb, obsv = r_controllable(qw, tol), r_observable(qw, tol)
    report.update(
        q=qw.q,
        r=qw.r,
        s=qw.s,
        r_controllable=ctrb,
        r_observable=obsv,
        observability_index=observability_index(qw, tol) if obsv else None,
        min_horizon=2 * qw.q + 3 * qw.s - 2,
        qw_residuals=[float(v) for v in qw.residuals()],
    )
    return report


def minimal_data_length(m, order):
    return (m + 1) * order - 1


def collect_data(qw, T, order, seed=0):
    """Persistently exciting experiment of length ``T`` from a random consistent start.

    Inputs are i.i.d. uniform on ``[-1, 1]``; ``s - 1`` additional samples feed
    the fast state of the final outputs and are not part of the record.
    """
    if T < minimal_data_length(qw.m, order):
        raise InputError(f"data length T = {T} too short; minimal T is {minimal_data_length(qw.m, order)}")
    seq_u, seq_tail, seq_z = np.random.SeedSequence(seed).spawn(3)
    u = generate_pe_input(T, qw.m, order, seed=seq_u)
    tail = np.random.default_rng(seq_tail).uniform(-1.0, 1.0, size=(qw.s - 1, qw.m))
    z1_0 = np.random.default_rng(seq_z).uniform(-1.0, 1.0, size=qw.q)
    traj = simulate(qw, z1_0, np.vstack([u, tail]))
    return traj.manifest(), is_persistently_exciting(traj.u, order)


def weight_matrix(spec, dim):
    if spec is None or spec == "identity":
        return np.eye(dim)
    if isinstance(spec, (int, float)):
        return float(spec) * np.eye(dim)
    return matrix_from_json(spec)


@dataclass
class ExperimentConfig:
    """JSON-configurable experiment. ``system`` is a file path or ``"paper"``."""

    system: str = "paper"
    horizon: int = presets.PAPER_HORIZON
    data_length: int = presets.PAPER_DATA_LENGTH
    pe_order: Optional[int] = None
    Q: object = "identity"
    R: object = "identity"
    schedule: List[dict] = field(default_factory=list)
    seed: int = 0
    total_steps: int = presets.PAPER_TOTAL_STEPS
    priming_steps: int = presets.PAPER_PRIMING_STEPS
    data: Optional[str] = None
    out: str = "out"
    tolerance: float = 1e-3
    base_dir: Path = Path(".")

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            obj = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {path}: {exc}") from None
        known = {k for k in cls.__dataclass_fields__ if k != "base_dir"}
        unknown = set(obj) - known
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**obj, base_dir=path.parent)
        cfg.validate()
        return cfg

    @classmethod
    def paper(cls, **overrides):
        schedule = [
            {"time": t, "u_s": u_s.tolist(), "y_s": y_s.tolist()} for t, u_s, y_s in presets.PAPER_SCHEDULE
        ]
        return cls(schedule=schedule, **overrides)

    def validate(self):
        for name in ("horizon", "data_length", "total_steps"):
            if int(getattr(self, name)) < 1:
                raise InputError(f"{name} must be positive")
        if self.priming_steps < 0:
            raise InputError("priming_steps must be non-negative")
        if self.system != "paper" and not self.resolve(self.system).exists():
            raise InputError(f"system file {self.system} does not exist")
        if self.data is not None and not self.resolve(self.data).exists():
            raise InputError(f"data file {self.data} does not exist")

    def resolve(self, p):
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    def load_system(self):
        if self.system == "paper":
            return presets.paper_system()
        return load_system(self.resolve(self.system))

    def schedule_tuples(self):
        return [(int(e["time"]), np.asarray(e.get("u_s", [0.0]), dtype=float), np.asarray(e["y_s"], dtype=float))
                for e in self.schedule]


def prepare(cfg):
    """System, transformation, data trajectory and Hankel representation for ``cfg``."""
    sys = cfg.load_system()
    qw = quasi_weierstrass(sys)
    w = qw.q + qw.s - 1
    order = cfg.pe_order or cfg.horizon + 2 * w
    if cfg.data is not None:
        data = read_trajectory_csv(cfg.resolve(cfg.data))
        pe = is_persistently_exciting(data.u, order)
    else:
        data, pe = collect_data(qw, cfg.data_length, order, cfg.seed)
    rep = build_hankel_representation(data, cfg.horizon + w, qw.s)
    return sys, qw, data, pe, rep


def run_experiment(cfg):
    """Collect data, run the closed loop, and summarize.

    Returns ``(log, report, summary, mpc_config)``. A failing OCP propagates
    as :class:`~ddpc.errors.StepError` carrying the partial log.
    """
    sys, qw, data, pe, rep = prepare(cfg)
    mpc_cfg = MpcConfig(
        qw=qw,
        horizon=cfg.horizon,
        Q=weight_matrix(cfg.Q, sys.p),
        R=weight_matrix(cfg.R, sys.m),
        total_steps=cfg.total_steps,
        schedule=cfg.schedule_tuples(),
        priming_steps=max(cfg.priming_steps, qw.q + qw.s - 1),
    )
    seq_loop = np.random.SeedSequence(cfg.seed).spawn(4)[3]
    log = run_closed_loop(mpc_cfg, rep, seed=seq_loop)
    report = stability_diagnostics(log, mpc_cfg, tol=cfg.tolerance)
    summary = summarize(log, report, pe, cfg)
    return log, report, summary, mpc_cfg


def summarize(log, report, pe, cfg):
    kkt = [r for r, c in zip(log.residual, log.controlled) if c]
    return {
        "all_feasible": report.all_feasible,
        "failing_index": report.failing_index,
        "max_kkt_residual": max(kkt) if kkt else 0.0,
        "pe_order": pe.order,
        "pe_verdict": pe.verdict,
        "data_length": cfg.data_length,
        "segments": [
            {
                "start": seg.start,
                "stop": seg.stop,
                "y_s": seg.y_s.tolist(),
                "settling_index": seg.settling_index,
                "stays_settled": seg.stays_settled,
                "cost_non_increasing": seg.cost_non_increasing,
                "max_cost_increase": seg.max_cost_increase,
            }
            for seg in report.segments
        ],
    }

