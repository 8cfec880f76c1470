"""Finite-horizon optimal control with a terminal equality constraint.

Two formulations of the same problem are provided:

* model based: the decision variables are the slow initial state and the input
  sequence, outputs follow from the explicit solution of the descriptor system;
* data driven: the decision variable is the Hankel coefficient vector ``alpha``
  and inputs/outputs are ``[Hu; Hy] alpha``.

Both minimize ``sum_k |y(t+k) - y_s|_Q^2 + |u(t+k) - u_s|_R^2`` over the
horizon, match a measured past window exactly and, in ``"equality"`` terminal
mode, pin the last ``q + s - 1`` predicted samples to the setpoint.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .behavior import MEMBERSHIP_TOL, membership
from .descriptor import Trajectory, trajectory_maps
from .errors import DomainError, InputError, NumericalError
from .qp import solve_equality_qp

STATIONARY_TOL = 1e-7
# normalized KKT residual above which a solve is rejected as numerically unreliable
KKT_REJECT_TOL = 1e-6


@dataclass(frozen=True)
class OcpSpec:
    """One OCP instance.

    ``past`` is the measured window ending at ``t - 1``; its length is the
    consistency window ``q + s - 1`` (or ``theta + s - 1`` in relaxed mode).
    """

    horizon: int
    Q: np.ndarray
    R: np.ndarray
    past: Trajectory
    q: int
    s: int
    u_s: Optional[np.ndarray] = None
    y_s: Optional[np.ndarray] = None
    terminal: str = "equality"
    terminal_length: Optional[int] = None

    def __post_init__(self):
        m, p = self.past.u.shape[1], self.past.y.shape[1]
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        if Q.shape != (p, p) or R.shape != (m, m):
            raise InputError(f"Q must be {p}x{p} and R {m}x{m}")
        for name, W in (("Q", Q), ("R", R)):
            if not np.allclose(W, W.T):
                raise InputError(f"{name} must be symmetric")
            try:
                np.linalg.cholesky(W)
            except np.linalg.LinAlgError:
                raise InputError(f"{name} must be positive definite") from None
        u_s = np.zeros(m) if self.u_s is None else np.asarray(self.u_s, dtype=float).reshape(-1)
        y_s = np.zeros(p) if self.y_s is None else np.asarray(self.y_s, dtype=float).reshape(-1)
        if u_s.shape != (m,) or y_s.shape != (p,):
            raise InputError("setpoint dimensions do not match the past window")
        if self.horizon < 1:
            raise InputError("horizon must be positive")
        if self.terminal not in ("equality", "none"):
            raise InputError(f"unknown terminal mode {self.terminal!r}")
        tl = self.q + self.s - 1 if self.terminal_length is None else int(self.terminal_length)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "u_s", u_s)
        object.__setattr__(self, "y_s", y_s)
        object.__setattr__(self, "terminal_length", tl)

    @property
    def window(self):
        return len(self.past)

    @property
    def length(self):
        """Number of predicted samples, past window included."""
        return self.window + self.horizon

    @property
    def t(self):
        """Current time, i.e. the first sample of the horizon."""
        return self.past.t0 + self.window

    @property
    def m(self):
        return self.past.u.shape[1]

    @property
    def p(self):
        return self.past.y.shape[1]


@dataclass(frozen=True)
class OcpQP:
    """The OCP as ``min 0.5 v'Hv + g'v + const  s.t.  Aeq v = beq``; ``u = Mu v``, ``y = My v``."""

    H: np.ndarray
    g: np.ndarray
    const: float
    Aeq: np.ndarray
    beq: np.ndarray
    Mu: np.ndarray
    My: np.ndarray


@dataclass(frozen=True)
class OcpSolution:
    """Predicted sequences on ``[t - w, t + L - 1]`` (``w`` = past window length)."""

    u: np.ndarray
    y: np.ndarray
    alpha: np.ndarray
    cost: float
    kkt_residual: float
    constraint_residual: float
    t0: int
    window: int
    feasible: bool = True

    @property
    def t(self):
        return self.t0 + self.window

    @property
    def applied_input(self):
        return self.u[self.window]

    def trajectory(self):
        return Trajectory(self.u, self.y, None, self.t0)


def trajectory_cost(u, y, spec):
    """Stage-cost sum over the horizon samples of a predicted trajectory."""
    w = spec.window
    du = np.asarray(u)[w:w + spec.horizon] - spec.u_s
    dy = np.asarray(y)[w:w + spec.horizon] - spec.y_s
    return float(np.einsum("ti,ij,tj->", dy, spec.Q, dy) + np.einsum("ti,ij,tj->", du, spec.R, du))


def _assemble(Mu, My, spec):
    m, p, w, L = spec.m, spec.p, spec.window, spec.horizon
    total = spec.length
    Muh = Mu[w * m:(w + L) * m]
    Myh = My[w * p:(w + L) * p]
    Qb = np.kron(np.eye(L), spec.Q)
    Rb = np.kron(np.eye(L), spec.R)
    ys = np.tile(spec.y_s, L)
    us = np.tile(spec.u_s, L)
    H = 2.0 * (Myh.T @ Qb @ Myh + Muh.T @ Rb @ Muh)
    g = -2.0 * (Myh.T @ Qb @ ys + Muh.T @ Rb @ us)
    const = float(ys @ Qb @ ys + us @ Rb @ us)

    rows = [Mu[:w * m], My[:w * p]]
    rhs = [spec.past.u.reshape(-1), spec.past.y.reshape(-1)]
    if spec.terminal == "equality":
        k = min(spec.terminal_length, total)
        start = total - k
        rows += [Mu[start * m:], My[start * p:]]
        rhs += [np.tile(spec.u_s, k), np.tile(spec.y_s, k)]
    return OcpQP(H, g, const, np.vstack(rows), np.concatenate(rhs), Mu, My)


def build_data_driven_ocp(rep, spec):
    """QP over ``alpha`` for the Hankel representation ``rep`` of depth ``w + L``."""
    if rep.depth != spec.length:
        raise InputError(f"representation depth {rep.depth} != window + horizon = {spec.length}")
    if rep.m != spec.m or rep.p != spec.p:
        raise InputError("representation and OCP dimensions differ")
    return _assemble(np.asarray(rep.Hu), np.asarray(rep.Hy), spec)


def build_model_based_ocp(qw, spec):
    """QP over ``v = [z1(t-w); u(t-w), ..., u(t+L+s-2)]``.

    The trailing ``s - 1`` inputs lie beyond the horizon; they only enter
    through the fast state of the last samples.
    """
    if qw.m != spec.m or qw.p != spec.p:
        raise InputError("system and OCP dimensions differ")
    total, m = spec.length, qw.m
    maps = trajectory_maps(qw, total)
    n_in = m * (total + qw.s - 1)
    Mu = np.hstack([np.zeros((total * m, qw.q)), np.eye(total * m, n_in)])
    My = np.hstack([maps.y_init, maps.y_input])
    return _assemble(Mu, My, spec)


def _solve(qp, spec, alpha_dim=None):
    res = solve_equality_qp(qp.H, qp.g, qp.Aeq, qp.beq)
    u = (qp.Mu @ res.x).reshape(spec.length, spec.m)
    y = (qp.My @ res.x).reshape(spec.length, spec.p)
    alpha = res.x if alpha_dim is not None else np.zeros(0)
    scale = 1.0 + np.linalg.norm(qp.beq) + np.linalg.norm(qp.g)
    if res.kkt_residual > KKT_REJECT_TOL * scale:
        raise NumericalError(f"OCP solve is unreliable (normalized KKT residual {res.kkt_residual / scale:.3g})")
    return OcpSolution(
        u=u,
        y=y,
        alpha=alpha,
        cost=trajectory_cost(u, y, spec),
        kkt_residual=res.kkt_residual / scale,
        constraint_residual=res.constraint_residual,
        t0=spec.past.t0,
        window=spec.window,
    )


def is_stationary_setpoint(u_s, y_s, rep=None, qw=None, tol=STATIONARY_TOL):
    """Whether the constant trajectory ``(u_s, y_s)`` belongs to the behavior.

    Checked either against a Hankel representation or against the model.
    """
    u_s = np.asarray(u_s, dtype=float).reshape(-1)
    y_s = np.asarray(y_s, dtype=float).reshape(-1)
    if rep is not None:
        const = Trajectory(np.tile(u_s, (rep.depth, 1)), np.tile(y_s, (rep.depth, 1)))
        return membership(rep, const, tol).verdict
    if qw is None:
        raise InputError("need a representation or a model")
    # z1 = A1 z1 + B1 u_s, z2 = -sum N^k B2 u_s, y_s = C1 z1 + C2 z2 + D u_s
    z2 = -qw.fast_input_operator() @ np.tile(u_s, qw.s)
    M = np.vstack([np.eye(qw.q) - qw.A1, qw.C1])
    rhs = np.concatenate([qw.B1 @ u_s, y_s - qw.C2 @ z2 - qw.D @ u_s])
    z1, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    return bool(np.linalg.norm(M @ z1 - rhs) <= tol * (1.0 + np.linalg.norm(rhs)))


def solve_model_based_ocp(qw, spec):
    """Solve the OCP using the system matrices.

    Raises:
        DomainError: the setpoint is not stationary.
        InfeasibleError: the constraints cannot be met.
    """
    if not is_stationary_setpoint(spec.u_s, spec.y_s, qw=qw):
        raise DomainError("setpoint is not a stationary point of the system")
    return _solve(build_model_based_ocp(qw, spec), spec)


def solve_data_driven_ocp(rep, spec):
    """Solve the OCP using only the Hankel representation.

    ``alpha`` is the minimum-norm optimal coefficient vector.

    Raises:
        DomainError: the setpoint is not stationary for the recorded behavior.
        InfeasibleError: the constraints cannot be met.
    """
    qp = build_data_driven_ocp(rep, spec)
    if not is_stationary_setpoint(spec.u_s, spec.y_s, rep=rep, tol=MEMBERSHIP_TOL):
        raise DomainError("setpoint is not stationary for the recorded behavior")
    return _solve(qp, spec, alpha_dim=rep.columns)
