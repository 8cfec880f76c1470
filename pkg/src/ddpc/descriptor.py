"""Regular discrete-time descriptor systems ``E x(t+1) = A x(t) + B u(t), y = C x + D u``.

The quasi-Weierstrass form is computed from the Wong sequences of the pencil
``(E, A)``. Everything downstream (simulation, consistency tests, state
reconstruction) works in the transformed coordinates ``z = P^{-1} x``.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import DomainError, InconsistentWindowError, InputError, NumericalError
from .linalg import DEFAULT_RANK_TOL, matrix_power_stack, numerical_rank, preimage

TOL_QW = 1e-10
TOL_TRAJ = 1e-8
COND_MAX = 1e12


def _as_matrix(M, name):
    M = np.array(M, dtype=float)
    if M.ndim != 2:
        raise InputError(f"{name} must be a 2-D matrix, got shape {M.shape}")
    M.setflags(write=False)
    return M


@dataclass(frozen=True)
class DescriptorSystem:
    """The quintuple ``(E, A, B, C, D)``. ``D`` defaults to zero."""

    E: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: Optional[np.ndarray] = None

    def __post_init__(self):
        E = _as_matrix(self.E, "E")
        A = _as_matrix(self.A, "A")
        B = _as_matrix(self.B, "B")
        C = _as_matrix(self.C, "C")
        n = A.shape[0]
        if A.shape != (n, n) or E.shape != (n, n):
            raise InputError(f"E and A must be square of equal size, got {E.shape} and {A.shape}")
        if B.shape[0] != n:
            raise InputError(f"B must have {n} rows, got {B.shape}")
        if C.shape[1] != n:
            raise InputError(f"C must have {n} columns, got {C.shape}")
        D = np.zeros((C.shape[0], B.shape[1])) if self.D is None else self.D
        D = _as_matrix(D, "D")
        if D.shape != (C.shape[0], B.shape[1]):
            raise InputError(f"D must be {C.shape[0]}x{B.shape[1]}, got {D.shape}")
        for name, M in zip("EABCD", (E, A, B, C, D)):
            object.__setattr__(self, name, M)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def p(self):
        return self.C.shape[0]


@dataclass(frozen=True)
class QuasiWeierstrass:
    """Transformation ``(P, S)`` with ``S E P = diag(I_q, N)`` and ``S A P = diag(A1, I_r)``."""

    system: DescriptorSystem
    P: np.ndarray
    S: np.ndarray
    A1: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    C1: np.ndarray
    C2: np.ndarray
    N: np.ndarray
    s: int

    @property
    def q(self):
        return self.A1.shape[0]

    @property
    def r(self):
        return self.N.shape[0]

    @property
    def n(self):
        return self.system.n

    @property
    def m(self):
        return self.system.m

    @property
    def p(self):
        return self.system.p

    @property
    def D(self):
        return self.system.D

    def residuals(self):
        """Frobenius norms of ``S E P - diag(I, N)`` and ``S A P - diag(A1, I)``."""
        E, A = self.system.E, self.system.A
        q, r = self.q, self.r
        target_E = np.block([[np.eye(q), np.zeros((q, r))], [np.zeros((r, q)), self.N]])
        target_A = np.block([[self.A1, np.zeros((q, r))], [np.zeros((r, q)), np.eye(r)]])
        res_E = np.linalg.norm(self.S @ E @ self.P - target_E)
        res_A = np.linalg.norm(self.S @ A @ self.P - target_A)
        return res_E, res_A

    def fast_input_operator(self):
        """``[B2, N B2, ..., N^(s-1) B2]``, the map from ``u(t..t+s-1)`` to ``-z2(t)``."""
        return matrix_power_stack(self.N, self.B2, self.s)


@dataclass(frozen=True)
class Trajectory:
    """Input/output (and optionally state) samples on the integer interval ``[t0, t0+len-1]``.

    Arrays are stored time-major: ``u[k]`` is the input at time ``t0 + k``.
    """

    u: np.ndarray
    y: np.ndarray
    x: Optional[np.ndarray] = None
    t0: int = 0

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        y = np.array(self.y, dtype=float)
        if u.ndim == 1:
            u = u[:, None]
        if y.ndim == 1:
            y = y[:, None]
        if u.ndim != 2 or y.ndim != 2:
            raise InputError("u and y must be sequences of vectors")
        if len(u) < 1 or len(u) != len(y):
            raise InputError(f"u and y must have equal non-zero length, got {len(u)} and {len(y)}")
        u.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "y", y)
        if self.x is not None:
            x = np.array(self.x, dtype=float)
            if x.ndim != 2 or len(x) != len(u):
                raise InputError("x must be a sequence of vectors with the same length as u")
            x.setflags(write=False)
            object.__setattr__(self, "x", x)
        object.__setattr__(self, "t0", int(self.t0))

    def __len__(self):
        return len(self.u)

    @property
    def t1(self):
        return self.t0 + len(self) - 1

    @property
    def interval(self):
        return (self.t0, self.t1)

    @property
    def times(self):
        return np.arange(self.t0, self.t1 + 1)

    def segment(self, start, stop):
        """Restriction to the absolute time interval ``[start, stop]`` (inclusive)."""
        if start < self.t0 or stop > self.t1 or stop < start:
            raise InputError(f"segment [{start}, {stop}] not inside {self.interval}")
        a, b = start - self.t0, stop - self.t0 + 1
        x = None if self.x is None else self.x[a:b]
        return Trajectory(self.u[a:b], self.y[a:b], x, start)

    def manifest(self):
        """Drop the state sequence."""
        return Trajectory(self.u, self.y, None, self.t0)

    def shifted(self, t0):
        return Trajectory(self.u, self.y, self.x, t0)

    def residual(self, system):
        """Largest relative residual of the system equations along the stored states."""
        if self.x is None:
            raise InputError("trajectory has no states")
        x, u, y = self.x, self.u, self.y
        scale = 1.0 + np.max(np.abs(x)) + np.max(np.abs(u))
        out = y - x @ system.C.T - u @ system.D.T
        worst = np.max(np.abs(out)) / scale
        if len(self) > 1:
            dyn = x[1:] @ system.E.T - x[:-1] @ system.A.T - u[:-1] @ system.B.T
            worst = max(worst, np.max(np.abs(dyn)) / scale)
        return float(worst)


def check_regularity(sys, tol=DEFAULT_RANK_TOL):
    """Decide whether ``det(lambda E - A)`` is not identically zero.

    The determinant is a polynomial of degree at most ``n``, so it is evaluated
    at the ``n + 1`` probes ``0, 1, ..., n``. If every value is tiny relative to
    ``max(1, |E|, |A|)^n`` a second batch of seeded complex probes is tried
    before declaring the pencil singular.
    """
    E, A, n = sys.E, sys.A, sys.n
    scale = max(1.0, np.linalg.norm(E, 2), np.linalg.norm(A, 2)) ** n
    for lam in range(n + 1):
        if abs(np.linalg.det(lam * E - A)) > tol * scale:
            return True
    rng = np.random.default_rng(0)
    radius = 1.0 + np.linalg.norm(A, 2) / max(np.linalg.norm(E, 2), 1.0)
    probes = radius * np.sqrt(rng.uniform(size=n + 1)) * np.exp(2j * np.pi * rng.uniform(size=n + 1))
    for lam in probes:
        if abs(np.linalg.det(lam * E - A)) > tol * scale * max(1.0, abs(lam)) ** n:
            return True
    return False


def nilpotency_index(N, tol=DEFAULT_RANK_TOL):
    """Smallest ``s`` with ``N^s = 0`` numerically; ``s = 1`` for the empty matrix."""
    r = N.shape[0]
    if r == 0:
        return 1
    norm_N = np.linalg.norm(N, 2)
    power = np.eye(r)
    for k in range(1, r + 1):
        power = power @ N
        if np.linalg.norm(power, 2) <= tol * max(1.0, norm_N**k):
            return k
    raise NumericalError("fast block N is not nilpotent within tolerance")


def _wong_limit(first, second, start, atol, max_iter):
    """Iterate ``V <- preimage(first, second @ V)`` until the dimension stops changing."""
    V = start
    for _ in range(max_iter + 1):
        nxt = preimage(first, second @ V, atol)
        if nxt.shape[1] == V.shape[1]:
            return nxt
        V = nxt
    return V


def quasi_weierstrass(sys, tol=DEFAULT_RANK_TOL, cond_max=COND_MAX):
    """Compute a quasi-Weierstrass form of a regular pencil via Wong sequences.

    ``V* = lim A^{-1}(E V_i)`` from ``V_0 = R^n`` and ``W* = lim E^{-1}(A W_i)``
    from ``W_0 = {0}``; then ``P = [V*, W*]`` and ``S = [E V*, A W*]^{-1}``.

    Raises:
        DomainError: the pencil is not regular.
        NumericalError: ``[E V*, A W*]`` is too ill-conditioned to invert, or
            the computed off-diagonal blocks are not negligible.
    """
    if not check_regularity(sys, tol):
        raise DomainError("pencil (E, A) is not regular")
    E, A, n = sys.E, sys.A, sys.n
    scale = max(1.0, np.linalg.norm(E, 2), np.linalg.norm(A, 2))
    atol = tol * scale
    V = _wong_limit(A, E, np.eye(n), atol, n)
    W = _wong_limit(E, A, np.zeros((n, 0)), atol, n)
    q = V.shape[1]
    if q + W.shape[1] != n:
        raise DomainError(f"Wong limits have dimensions {q} + {W.shape[1]} != {n}; pencil not regular")
    M = np.hstack([E @ V, A @ W])
    if np.linalg.cond(M) > cond_max:
        raise NumericalError(f"[E V, A W] has condition number above {cond_max:g}")
    S = np.linalg.inv(M)
    P = np.hstack([V, W])
    SEP = S @ E @ P
    SAP = S @ A @ P
    off = max(
        np.max(np.abs(SEP[:q, q:]), initial=0.0),
        np.max(np.abs(SEP[q:, :q]), initial=0.0),
        np.max(np.abs(SAP[:q, q:]), initial=0.0),
        np.max(np.abs(SAP[q:, :q]), initial=0.0),
    )
    if off > np.sqrt(tol) * scale:
        raise NumericalError(f"off-diagonal blocks of size {off:.3g} are not negligible")
    SB = S @ sys.B
    CP = sys.C @ P
    N = SEP[q:, q:].copy()
    return QuasiWeierstrass(
        system=sys,
        P=P,
        S=S,
        A1=SAP[:q, :q].copy(),
        B1=SB[:q].copy(),
        B2=SB[q:].copy(),
        C1=CP[:, :q].copy(),
        C2=CP[:, q:].copy(),
        N=N,
        s=nilpotency_index(N, tol),
    )


def controllability_matrix(qw):
    return matrix_power_stack(qw.A1, qw.B1, qw.q)


def observability_matrix(qw, k=None):
    """Stacked ``C1 A1^j`` for ``j < k`` (default ``k = q``)."""
    k = qw.q if k is None else k
    return matrix_power_stack(qw.A1.T, qw.C1.T, k).T


def r_controllable(qw, tol=DEFAULT_RANK_TOL):
    """Kalman rank test on the slow subsystem ``(A1, B1)``."""
    if qw.q == 0:
        return True
    return numerical_rank(controllability_matrix(qw), tol) == qw.q


def r_observable(qw, tol=DEFAULT_RANK_TOL):
    """Kalman rank test on the slow subsystem ``(C1, A1)``."""
    if qw.q == 0:
        return True
    return numerical_rank(observability_matrix(qw), tol) == qw.q


def observability_index(qw, tol=DEFAULT_RANK_TOL):
    """Smallest ``k`` such that ``[C1; C1 A1; ...; C1 A1^(k-1)]`` has rank ``q``.

    Returns 0 for a purely algebraic system (``q = 0``).
    """
    if qw.q == 0:
        return 0
    for k in range(1, qw.q + 1):
        if numerical_rank(observability_matrix(qw, k), tol) == qw.q:
            return k
    raise DomainError("system is not R-observable")


def is_consistent_initial(qw, x0, tol=DEFAULT_RANK_TOL):
    """Test whether ``x0 = (E x)(0)`` is a consistent initial value.

    In transformed coordinates ``S x0 = [z1; N z2(0)]`` and the fast part must
    lie in ``im [N B2, ..., N^(s-1) B2]``.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape != (qw.n,):
        raise InputError(f"x0 must have length {qw.n}, got {x0.shape}")
    w2 = (qw.S @ x0)[qw.q:]
    if qw.r == 0:
        return True
    bound = tol * max(1.0, np.linalg.norm(x0))
    if qw.s == 1:
        return bool(np.linalg.norm(w2) <= bound)
    K = matrix_power_stack(qw.N, qw.N @ qw.B2, qw.s - 1)
    coef, *_ = np.linalg.lstsq(K, w2, rcond=None)
    return bool(np.linalg.norm(K @ coef - w2) <= bound)


def simulate(qw, z1_0, u, t0=0, tol_traj=TOL_TRAJ):
    """Full trajectory from a slow initial state and an input sequence.

    ``u`` holds inputs on ``[t0, t0+T+s-2]``; states and outputs are returned
    on ``[t0, t0+T-1]`` since ``z2(t)`` needs ``u(t), ..., u(t+s-1)``.

    Raises:
        InputError: fewer than ``s`` input samples, or wrong dimensions.
        NumericalError: the result violates the system equations.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    if u.ndim != 2 or u.shape[1] != qw.m:
        raise InputError(f"u must be a sequence of {qw.m}-vectors")
    T = len(u) - qw.s + 1
    if T < 1:
        raise InputError(f"need at least s = {qw.s} input samples, got {len(u)}")
    z1_0 = np.asarray(z1_0, dtype=float).reshape(-1)
    if z1_0.shape != (qw.q,):
        raise InputError(f"z1_0 must have length {qw.q}")

    z1 = np.empty((T, qw.q))
    z1[0] = z1_0
    for t in range(T - 1):
        z1[t + 1] = qw.A1 @ z1[t] + qw.B1 @ u[t]
    z2 = np.zeros((T, qw.r))
    Nk_B2 = qw.B2
    for k in range(qw.s):
        z2 -= u[k:k + T] @ Nk_B2.T
        Nk_B2 = qw.N @ Nk_B2
    x = z1 @ qw.P[:, :qw.q].T + z2 @ qw.P[:, qw.q:].T
    y = z1 @ qw.C1.T + z2 @ qw.C2.T + u[:T] @ qw.D.T
    traj = Trajectory(u[:T], y, x, t0)
    res = traj.residual(qw.system)
    if res > tol_traj:
        raise NumericalError(f"simulated trajectory violates the system equations (residual {res:.3g})")
    return traj


class TrajectoryMaps(NamedTuple):
    """Linear maps from ``(z1(0), u_[0, length+s-2])`` to vectorized sequences on ``[0, length-1]``."""

    z1_init: np.ndarray
    z1_input: np.ndarray
    z2_input: np.ndarray
    y_init: np.ndarray
    y_input: np.ndarray


def trajectory_maps(qw, length):
    """Stack the explicit solution formulas into matrices.

    The input vector covers ``length + s - 1`` samples; the trailing ``s - 1``
    only influence the fast state near the end of the window.
    """
    q, r, m, p, s = qw.q, qw.r, qw.m, qw.p, qw.s
    n_in = length + s - 1
    z1_init = np.zeros((q * length, q))
    z1_input = np.zeros((q * length, m * n_in))
    z2_input = np.zeros((r * length, m * n_in))
    power = np.eye(q)
    for t in range(length):
        z1_init[t * q:(t + 1) * q] = power
        power = qw.A1 @ power
        # z1(t) = A1^t z1(0) + sum_{k<t} A1^(t-1-k) B1 u(k)
        blk = qw.B1
        for k in range(t - 1, -1, -1):
            z1_input[t * q:(t + 1) * q, k * m:(k + 1) * m] = blk
            blk = qw.A1 @ blk
        blk = qw.B2
        for i in range(s):
            z2_input[t * r:(t + 1) * r, (t + i) * m:(t + i + 1) * m] = -blk
            blk = qw.N @ blk
    C1_big = np.kron(np.eye(length), qw.C1)
    C2_big = np.kron(np.eye(length), qw.C2)
    D_big = np.hstack([np.kron(np.eye(length), qw.D), np.zeros((p * length, m * (s - 1)))])
    y_init = C1_big @ z1_init
    y_input = C1_big @ z1_input + C2_big @ z2_input + D_big
    return TrajectoryMaps(z1_init, z1_input, z2_input, y_init, y_input)


class Reconstruction(NamedTuple):
    x: np.ndarray
    states: np.ndarray
    z1: np.ndarray
    residual: float


def reconstruct_state(qw, window, tol=TOL_TRAJ, theta=None):
    """Recover the latent state from an input-output window.

    The window must span ``theta + s - 1`` samples (``theta`` defaults to
    ``q``; any ``theta`` for which the first ``theta`` observability blocks
    have rank ``q`` works). Returns ``x`` at the window start together with the
    states on the first ``theta`` samples of the window.

    Inputs beyond the window that affect the trailing fast states are treated
    as free unknowns, so the residual measures whether *some* continuation
    explains the window.

    Raises:
        InputError: wrong window length or dimensions.
        DomainError: ``theta`` observability blocks do not pin down ``z1``.
        InconsistentWindowError: no system trajectory matches the window.
    """
    theta = qw.q if theta is None else int(theta)
    w = theta + qw.s - 1
    if len(window) != w:
        raise InputError(f"window must have length {w}, got {len(window)}")
    if window.u.shape[1] != qw.m or window.y.shape[1] != qw.p:
        raise InputError("window dimensions do not match the system")
    if w < 1:
        raise InputError("empty window")
    if qw.q and numerical_rank(observability_matrix(qw, theta)) != qw.q:
        raise DomainError(f"first {theta} observability blocks do not have rank q = {qw.q}")
    m = qw.m
    maps = trajectory_maps(qw, w)
    u_known = window.u.reshape(-1)
    rhs = window.y.reshape(-1) - maps.y_input[:, :w * m] @ u_known
    M = np.hstack([maps.y_init, maps.y_input[:, w * m:]])
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    residual = float(np.linalg.norm(M @ sol - rhs))
    if residual > tol * (1.0 + np.linalg.norm(rhs)):
        raise InconsistentWindowError(f"window is not a system trajectory (residual {residual:.3g})", residual)
    z1_0 = sol[:qw.q]
    u_full = np.concatenate([u_known, sol[qw.q:]])
    z1 = (maps.z1_init @ z1_0 + maps.z1_input @ u_full).reshape(w, qw.q)[:max(theta, 1)]
    z2 = (maps.z2_input @ u_full).reshape(w, qw.r)[:max(theta, 1)]
    states = z1 @ qw.P[:, :qw.q].T + z2 @ qw.P[:, qw.q:].T
    if theta == 0:
        states = states[:0]
    x = states[0] if len(states) else None
    return Reconstruction(x, states, z1_0, residual)
