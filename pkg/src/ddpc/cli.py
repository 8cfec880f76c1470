"""Command line entry point ``ddpc``.

JSON reports go to stdout (and into ``--out`` when given); short human-readable
notes go to stderr. ``DDPC_LOG`` selects ``quiet``, ``info`` or ``debug``.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import presets
from .behavior import is_persistently_exciting
from .descriptor import quasi_weierstrass, simulate
from .errors import DdpcError, InfeasibleError, InputError, StepError
from .experiment import (
    ExperimentConfig,
    weight_matrix,
    analyze,
    collect_data,
    minimal_data_length,
    prepare,
    run_experiment,
)
from .io import (
    load_system,
    ocp_dump,
    read_trajectory_csv,
    solution_to_json,
    write_log_csv,
    write_trajectory_csv,
)
from .ocp import OcpSpec, build_data_driven_ocp, solve_data_driven_ocp, solve_model_based_ocp

log = logging.getLogger("ddpc")

PAPER_NOTE = (
    f"data length T = {presets.PAPER_DATA_LENGTH} instead of the published {presets.PAPER_PUBLISHED_DATA_LENGTH}: "
    "a single input persistently exciting of order 26 needs T >= 2*26-1 = 51 samples"
)


def _setup_logging():
    level = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("DDPC_LOG", "quiet").lower(), logging.WARNING
    )
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def _note(msg):
    if os.environ.get("DDPC_LOG", "quiet").lower() != "quiet":
        print(msg, file=sys.stderr)


def _emit(obj, out=None, name=None):
    text = json.dumps(obj, indent=2, default=_json_default)
    print(text)
    if out is not None and name is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / name).write_text(text + "\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    raise TypeError(type(o))


def _config(args):
    cfg = ExperimentConfig.load(args.config) if getattr(args, "config", None) else ExperimentConfig.paper()
    if getattr(args, "system", None):
        cfg.system = args.system
    for attr, name in (("seed", "seed"), ("horizon", "horizon"), ("data_length", "data_length"), ("out", "out")):
        val = getattr(args, attr, None)
        if val is not None:
            setattr(cfg, name, val)
    cfg.validate()
    return cfg


def cmd_analyze(args):
    if not args.system and not args.config:
        raise InputError("analyze needs --system or --config")
    sys_ = load_system(args.system) if args.system else _config(args).load_system()
    report = analyze(sys_)
    if not report["regular"]:
        _note("pencil is not regular")
    _emit(report, args.out, "analysis.json")
    return 0


def cmd_collect(args):
    cfg = _config(args)
    sys_ = cfg.load_system()
    qw = quasi_weierstrass(sys_)
    order = cfg.pe_order or cfg.horizon + 2 * (qw.q + qw.s - 1)
    need = minimal_data_length(sys_.m, order)
    if cfg.data_length < need:
        raise InputError(f"data length {cfg.data_length} too short for excitation order {order}; minimal T is {need}")
    data, pe = collect_data(qw, cfg.data_length, order, cfg.seed)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(data, out / "data.csv")
    _emit(vars(pe), out, "pe_report.json")
    _note(f"wrote {out / 'data.csv'} ({len(data)} samples, PE order {order}: {pe.verdict})")
    return 0


def cmd_check_pe(args):
    data = read_trajectory_csv(args.data)
    report = is_persistently_exciting(data.u, args.order)
    _emit(vars(report), args.out, "pe_report.json")
    return 0


def cmd_ocp(args):
    cfg = _config(args)
    sys_, qw, data, pe, rep = prepare(cfg)
    w = qw.q + qw.s - 1
    if args.past:
        past = read_trajectory_csv(args.past)
    else:
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(5)[4])
        past = simulate(qw, rng.uniform(-1, 1, qw.q), rng.uniform(-1, 1, (w + qw.s - 1, qw.m))).manifest()
    if len(past) != w:
        raise InputError(f"past window must have {w} samples, got {len(past)}")
    sched = cfg.schedule_tuples()
    u_s, y_s = (sched[0][1], sched[0][2]) if sched else (None, None)
    spec = OcpSpec(cfg.horizon, weight_matrix(cfg.Q, sys_.p), weight_matrix(cfg.R, sys_.m), past, qw.q, qw.s, u_s, y_s)
    result = {"pe_verdict": pe.verdict}
    sols = {}
    for name, solver, arg in (("model_based", solve_model_based_ocp, qw), ("data_driven", solve_data_driven_ocp, rep)):
        try:
            sols[name] = solver(arg, spec)
            result[name] = solution_to_json(sols[name])
        except InfeasibleError as exc:
            result[name] = {"feasible": False, "residual": exc.residual, "error": str(exc)}
    if len(sols) == 2:
        mb, dd = sols["model_based"].cost, sols["data_driven"].cost
        result["cost_gap"] = abs(dd - mb) / (1.0 + mb)
    if "data_driven" in sols and args.out:
        dump = ocp_dump(build_data_driven_ocp(rep, spec), sols["data_driven"])
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "ocp_dump.json").write_text(json.dumps(dump))
    _emit(result, cfg.out if args.out else None, "ocp.json")
    return 0 if len(sols) == 2 else 1


def _run_and_write(cfg, extra=None):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        log_, report, summary, _ = run_experiment(cfg)
    except StepError as exc:
        if exc.log is not None and len(exc.log):
            write_log_csv(exc.log, out / "log.csv")
        _emit({"all_feasible": False, "failing_index": exc.t, "error": str(exc)}, out, "summary.json")
        return 1
    write_log_csv(log_, out / "log.csv")
    if extra:
        summary.update(extra)
    _emit(summary, out, "summary.json")
    _note(f"wrote {out / 'log.csv'}")
    return 0


def cmd_mpc(args):
    cfg = _config(args)
    return _run_and_write(cfg)


def cmd_paper_example(args):
    cfg = ExperimentConfig.paper()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    sys_, qw, data, pe, rep = prepare(cfg)
    Path(cfg.out).mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(data, Path(cfg.out) / "data.csv")
    return _run_and_write(cfg, {"note": PAPER_NOTE, "horizon": cfg.horizon})


def build_parser():
    parser = argparse.ArgumentParser(prog="ddpc", description="Data-driven predictive control of descriptor systems")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, system=True):
        p.add_argument("--config", help="experiment config (JSON)")
        if system:
            p.add_argument("--system", help="system file (JSON with E, A, B, C, D)")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--horizon", type=int)
        p.add_argument("--data-length", type=int)

    p = sub.add_parser("analyze", help="structural analysis of a system")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("collect", help="record persistently exciting data")
    common(p)
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("check-pe", help="persistency-of-excitation test of recorded data")
    p.add_argument("--data", required=True, help="trajectory CSV")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check_pe)

    p = sub.add_parser("ocp", help="solve one OCP with both formulations")
    common(p)
    p.add_argument("--past", help="past-window CSV (default: a random consistent window)")
    p.set_defaults(func=cmd_ocp)

    p = sub.add_parser("mpc", help="closed-loop run")
    common(p)
    p.set_defaults(func=cmd_mpc)

    p = sub.add_parser("paper-example", help="reference experiment with the published system")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_paper_example)
    return parser


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DdpcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
