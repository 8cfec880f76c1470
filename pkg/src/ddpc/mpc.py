"""Receding-horizon data-driven control of a simulated descriptor plant.

Each step takes the last ``w`` measured samples as the consistency window,
solves the data-driven OCP, applies the first predicted input and shifts.

The plant is non-causal: ``y(t)`` depends on ``u(t), ..., u(t+s-1)``. When an
input is applied the plant therefore also receives the next ``s - 1`` inputs
of the current plan as a preview. Later OCPs are forced to reproduce the
resulting output through the consistency constraint, so the logged samples
always form a trajectory of the system.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .descriptor import Trajectory, reconstruct_state
from .errors import DomainError, InconsistentWindowError, InfeasibleError, InputError, NumericalError, StepError
from .ocp import OcpSpec, solve_data_driven_ocp

log = logging.getLogger(__name__)

COST_SLACK = 1e-9


class DescriptorPlant:
    """Ground-truth plant in quasi-Weierstrass coordinates.

    Only the slow state ``z1`` is carried between steps; the fast state is an
    algebraic function of the current and previewed inputs.
    """

    def __init__(self, qw, z1_0=None, t0=0):
        self.qw = qw
        self.z1 = np.zeros(qw.q) if z1_0 is None else np.asarray(z1_0, dtype=float).reshape(qw.q)
        self.t = t0

    def step(self, u, preview):
        """Apply ``u(t)`` given previewed ``u(t+1), ..., u(t+s-1)``; return ``(y(t), x(t))``."""
        qw = self.qw
        u = np.asarray(u, dtype=float).reshape(qw.m)
        preview = np.asarray(preview, dtype=float).reshape(-1, qw.m)
        if len(preview) != qw.s - 1:
            raise InputError(f"plant needs a preview of {qw.s - 1} inputs, got {len(preview)}")
        stacked = np.concatenate([u, preview.reshape(-1)])
        z2 = -qw.fast_input_operator() @ stacked
        x = qw.P @ np.concatenate([self.z1, z2])
        y = qw.system.C @ x + qw.system.D @ u
        self.z1 = qw.A1 @ self.z1 + qw.B1 @ u
        self.t += 1
        return y, x


@dataclass
class MpcConfig:
    """Settings of one closed-loop run.

    ``schedule`` holds ``(activation time, u_s, y_s)`` entries; before the
    first activation the origin is the target. The first
    ``priming_steps`` inputs are taken from ``priming`` (or drawn uniformly
    from ``priming_bounds`` with the run seed); ``priming`` must contain
    ``priming_steps + s - 1`` samples because the plant needs a preview.
    """

    qw: object
    horizon: int
    Q: np.ndarray
    R: np.ndarray
    total_steps: int
    schedule: Sequence[Tuple[int, np.ndarray, np.ndarray]] = ()
    priming_steps: Optional[int] = None
    priming: Optional[np.ndarray] = None
    priming_bounds: Tuple[float, float] = (-1.0, 1.0)
    z1_0: Optional[np.ndarray] = None
    window: Optional[int] = None
    terminal_length: Optional[int] = None
    reconstruct: bool = True

    def __post_init__(self):
        qw = self.qw
        if self.window is None:
            self.window = qw.q + qw.s - 1
        if self.terminal_length is None:
            self.terminal_length = qw.q + qw.s - 1
        if self.priming_steps is None:
            self.priming_steps = self.window
        if self.priming_steps < self.window:
            raise InputError(f"need at least {self.window} priming steps to fill the first window")
        times = [int(entry[0]) for entry in self.schedule]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InputError("schedule activation times must be strictly increasing")
        self.schedule = tuple(
            (int(t), np.asarray(u_s, dtype=float).reshape(qw.m), np.asarray(y_s, dtype=float).reshape(qw.p))
            for t, u_s, y_s in self.schedule
        )
        min_horizon = 2 * qw.q + 3 * qw.s - 2
        if self.horizon < min_horizon:
            warnings.warn(
                f"horizon {self.horizon} is below 2q+3s-2 = {min_horizon}; recursive feasibility is not guaranteed",
                stacklevel=2,
            )

    @property
    def depth(self):
        """Hankel depth the data representation must have."""
        return self.horizon + self.window

    def setpoint_at(self, t):
        u_s, y_s = np.zeros(self.qw.m), np.zeros(self.qw.p)
        for start, su, sy in self.schedule:
            if start <= t:
                u_s, y_s = su, sy
        return u_s, y_s

    def segment_bounds(self):
        """``(start, stop, u_s, y_s)`` for each setpoint segment inside the control phase."""
        begin = self.priming_steps
        entries = [(begin, *self.setpoint_at(begin))]
        entries += [(t, su, sy) for t, su, sy in self.schedule if begin < t < self.total_steps]
        out = []
        for i, (start, su, sy) in enumerate(entries):
            stop = entries[i + 1][0] - 1 if i + 1 < len(entries) else self.total_steps - 1
            out.append((start, stop, su, sy))
        return out


@dataclass
class ClosedLoopLog:
    """One record per executed step.

    ``cost`` is NaN and ``controlled`` False during priming. ``x`` holds states
    reconstructed from the input-output log after the run.
    """

    q: int
    s: int
    t: List[int] = field(default_factory=list)
    u: List[np.ndarray] = field(default_factory=list)
    y: List[np.ndarray] = field(default_factory=list)
    y_pred: List[np.ndarray] = field(default_factory=list)
    y_ref: List[np.ndarray] = field(default_factory=list)
    cost: List[float] = field(default_factory=list)
    feasible: List[bool] = field(default_factory=list)
    residual: List[float] = field(default_factory=list)
    controlled: List[bool] = field(default_factory=list)
    x: Optional[np.ndarray] = None
    last_solution: object = None
    previews: List[np.ndarray] = field(default_factory=list)
    aborted_at: Optional[int] = None
    schedule: Sequence = ()

    def __len__(self):
        return len(self.t)

    def append(self, t, u, y, y_ref, cost=np.nan, feasible=True, residual=0.0, controlled=False, y_pred=None,
               preview=None):
        self.t.append(int(t))
        self.u.append(np.asarray(u, dtype=float).copy())
        self.y.append(np.asarray(y, dtype=float).copy())
        self.y_pred.append(np.full_like(self.y[-1], np.nan) if y_pred is None else np.asarray(y_pred, dtype=float))
        self.y_ref.append(np.asarray(y_ref, dtype=float).copy())
        self.cost.append(float(cost))
        self.feasible.append(bool(feasible))
        self.residual.append(float(residual))
        self.controlled.append(bool(controlled))
        self.previews.append(np.zeros((0, len(self.u[-1]))) if preview is None else np.asarray(preview, dtype=float))

    def arrays(self):
        return np.array(self.t), np.array(self.u), np.array(self.y)

    def trajectory(self):
        _, u, y = self.arrays()
        return Trajectory(u, y, self.x, self.t[0] if self.t else 0)


@dataclass
class LoopState:
    t: int
    plant: DescriptorPlant
    u: List[np.ndarray]
    y: List[np.ndarray]


def mpc_step(state, rep, config):
    """One iteration: solve the OCP for the current window, apply the first input.

    Returns ``(u(t), y(t), solution, preview)`` and advances ``state``.

    Raises:
        StepError: the OCP is infeasible or the setpoint is not stationary.
    """
    qw, w, t = config.qw, config.window, state.t
    u_s, y_s = config.setpoint_at(t)
    past = Trajectory(np.array(state.u[-w:]), np.array(state.y[-w:]), None, t - w)
    spec = OcpSpec(config.horizon, config.Q, config.R, past, qw.q, qw.s, u_s, y_s,
                   terminal_length=config.terminal_length)
    try:
        sol = solve_data_driven_ocp(rep, spec)
    except (InfeasibleError, DomainError, NumericalError) as exc:
        raise StepError(f"OCP failed at t = {t}: {exc}", t, cause=exc) from exc
    preview = sol.u[w + 1:w + qw.s]
    if len(preview) < qw.s - 1:
        pad = np.tile(u_s, (qw.s - 1 - len(preview), 1))
        preview = np.vstack([preview, pad])
    u_now = sol.applied_input
    y_now, _ = state.plant.step(u_now, preview)
    state.u.append(u_now)
    state.y.append(y_now)
    state.t += 1
    return u_now, y_now, sol, preview


def _reconstruct_states(log_, config):
    """States along the log, using the final plan to complete the trailing windows."""
    qw = config.qw
    _, u, y = log_.arrays()
    if log_.last_solution is not None:
        sol = log_.last_solution
        tail = slice(sol.window + 1, None)
        u = np.vstack([u, sol.u[tail]])
        y = np.vstack([y, sol.y[tail]])
    width = qw.q + qw.s - 1
    x = np.full((len(log_), qw.n), np.nan)
    for k in range(len(log_)):
        if k + width <= len(u):
            window = Trajectory(u[k:k + width], y[k:k + width], None, k)
            try:
                x[k] = reconstruct_state(qw, window).x
            except InconsistentWindowError:
                log.warning("state reconstruction failed at t = %d", k)
    return x


def run_closed_loop(config, rep, seed=0):
    """Run the full loop: priming, then ``total_steps - priming_steps`` controlled steps.

    Deterministic given ``config`` and ``seed``.

    Raises:
        StepError: some OCP failed; ``exc.log`` holds the records up to the failure.
    """
    qw = config.qw
    if rep.depth != config.depth:
        raise InputError(f"representation depth {rep.depth} != horizon + window = {config.depth}")
    rng = np.random.default_rng(seed)
    n_prime = config.priming_steps
    priming = config.priming
    if priming is None:
        lo, hi = config.priming_bounds
        priming = rng.uniform(lo, hi, size=(n_prime + qw.s - 1, qw.m))
    priming = np.asarray(priming, dtype=float).reshape(-1, qw.m)
    if len(priming) < n_prime + qw.s - 1:
        raise InputError(f"priming needs {n_prime + qw.s - 1} samples, got {len(priming)}")

    plant = DescriptorPlant(qw, config.z1_0)
    out = ClosedLoopLog(qw.q, qw.s, schedule=config.schedule)
    nan_ref = np.full(qw.p, np.nan)
    for t in range(min(n_prime, config.total_steps)):
        preview = priming[t + 1:t + qw.s]
        y, _ = plant.step(priming[t], preview)
        out.append(t, priming[t], y, nan_ref, preview=preview)

    state = LoopState(plant.t, plant, list(out.u), list(out.y))
    for t in range(n_prime, config.total_steps):
        try:
            u, y, sol, preview = mpc_step(state, rep, config)
        except StepError as exc:
            out.aborted_at = t
            exc.log = out
            log.error("closed loop aborted at t = %d", t)
            raise
        _, y_s = config.setpoint_at(t)
        out.append(t, u, y, y_s, sol.cost, True, sol.kkt_residual, True, y_pred=sol.y[sol.window], preview=preview)
        out.last_solution = sol
        log.debug("t=%d cost=%.6g", t, sol.cost)

    if config.reconstruct and len(out):
        out.x = _reconstruct_states(out, config)
    return out


@dataclass
class SegmentReport:
    start: int
    stop: int
    y_s: np.ndarray
    settling_index: Optional[int]
    stays_settled: bool
    cost_non_increasing: bool
    max_cost_increase: float


@dataclass
class StabilityReport:
    segments: List[SegmentReport]
    all_feasible: bool
    failing_index: Optional[int]

    @property
    def ok(self):
        return self.all_feasible and all(s.cost_non_increasing and s.stays_settled for s in self.segments)


def stability_diagnostics(log_, config, tol=1e-3, slack=COST_SLACK, sustain=None):
    """Settling, cost descent and feasibility per setpoint segment.

    ``settling_index`` is the first time from which ``|y - y_s|_inf <= tol``
    holds for ``sustain`` consecutive steps (default ``q + s``);
    ``stays_settled`` additionally requires the bound to hold until the end of
    the segment. Costs must not grow by more than ``slack`` between
    consecutive controlled steps of a segment.
    """
    sustain = log_.q + log_.s if sustain is None else sustain
    t_arr, _, y = log_.arrays()
    cost = np.array(log_.cost)
    segments = []
    for start, stop, _, y_s in config.segment_bounds():
        idx = np.nonzero((t_arr >= start) & (t_arr <= stop))[0]
        if len(idx) == 0:
            continue
        err = np.max(np.abs(y[idx] - y_s), axis=1)
        ok = err <= tol
        settle = None
        for k in range(len(idx) - sustain + 1):
            if ok[k:k + sustain].all():
                settle = int(t_arr[idx[k]])
                break
        stays = settle is not None and bool(ok[settle - int(t_arr[idx[0]]):].all())
        c = cost[idx]
        inc = np.diff(c)
        max_inc = float(inc.max()) if inc.size else 0.0
        segments.append(SegmentReport(start, stop, y_s, settle, stays, bool(max_inc <= slack), max_inc))
    feasible = log_.aborted_at is None and all(log_.feasible)
    return StabilityReport(segments, feasible, log_.aborted_at)
