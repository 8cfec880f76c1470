"""Hankel matrices, persistency of excitation and the descriptor fundamental lemma.

A single recorded trajectory ``(ubar, ybar)`` on ``[0, T-1]`` whose input is
persistently exciting of order ``L + q + s - 1`` spans every length-``L``
input-output trajectory of an R-controllable regular descriptor system. Only
samples up to ``T - s`` are needed for the Hankel matrices.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .descriptor import Trajectory
from .errors import GenerationError, InputError
from .linalg import DEFAULT_RANK_TOL

MEMBERSHIP_TOL = 1e-7
MAX_PE_RETRIES = 100


def vectorize(f):
    """Stack a time-ordered sequence of vectors into one column vector."""
    f = np.asarray(f, dtype=float)
    if f.size == 0 or len(f) == 0:
        raise InputError("cannot vectorize an empty sequence")
    if f.ndim == 1:
        f = f[:, None]
    return f.reshape(-1).copy()


def hankel(fvec, k, L):
    """Depth-``L`` block Hankel matrix of a vectorized sequence with block size ``k``.

    Column ``j`` is the stacked window ``f(j), ..., f(j+L-1)``.

    Examples:
        >>> hankel(np.array([1., 2., 3., 4.]), 1, 2)
        array([[1., 2., 3.],
               [2., 3., 4.]])
    """
    fvec = np.asarray(fvec, dtype=float).reshape(-1)
    if k < 1 or fvec.size % k:
        raise InputError(f"vector of length {fvec.size} is not a sequence of {k}-vectors")
    f = fvec.reshape(-1, k)
    if L < 1 or L > len(f):
        raise InputError(f"depth L = {L} must lie in [1, {len(f)}]")
    windows = sliding_window_view(f, L, axis=0)  # (cols, k, L)
    return np.ascontiguousarray(windows.transpose(0, 2, 1).reshape(len(f) - L + 1, k * L).T)


def _as_sequence(u):
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    return u


@dataclass(frozen=True)
class PEReport:
    order: int
    required_rank: int
    achieved_rank: int
    smallest_singular_value: float
    length_ok: bool
    verdict: bool


def is_persistently_exciting(u, order, tol=DEFAULT_RANK_TOL):
    """Rank test ``rank H_order(u) = m * order``.

    Sequences shorter than ``(m+1) order - 1`` fail without computing a rank.
    """
    u = _as_sequence(u)
    T, m = u.shape
    required = m * order
    length_ok = (m + 1) * order - 1 <= T
    if not length_ok or order < 1:
        return PEReport(order, required, 0, 0.0, False, False)
    sv = np.linalg.svd(hankel(u.reshape(-1), m, order), compute_uv=False)
    rank = 0 if sv[0] == 0.0 else int(np.sum(sv > tol * sv[0]))
    smallest = float(sv[rank - 1]) if rank else 0.0
    return PEReport(order, required, rank, smallest, True, rank == required)


def required_pe_order(L, q=None, s=None, n=None):
    """Excitation order needed for depth-``L`` trajectories.

    With known indices this is ``L + q + s - 1``; otherwise pass the state
    dimension ``n`` for the conservative ``L + n``.
    """
    if q is not None and s is not None:
        return L + q + s - 1
    if n is None:
        raise InputError("give either (q, s) or n")
    return L + n


def generate_pe_input(T, m, order, bounds=(-1.0, 1.0), seed=0, max_retries=MAX_PE_RETRIES):
    """Seeded i.i.d. uniform input, redrawn until it is persistently exciting of ``order``.

    Raises:
        InputError: ``T < (m+1) order - 1``, where excitation is impossible.
        GenerationError: no draw passed within ``max_retries`` attempts.
    """
    if (m + 1) * order - 1 > T:
        raise InputError(f"T = {T} is below the minimum (m+1)*order-1 = {(m + 1) * order - 1}")
    lo, hi = bounds
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        u = rng.uniform(lo, hi, size=(T, m))
        if is_persistently_exciting(u, order).verdict:
            return u
    raise GenerationError(f"no persistently exciting draw of order {order} in {max_retries} attempts")


@dataclass(frozen=True)
class HankelRepresentation:
    """Depth-``L`` Hankel matrices of one data trajectory, truncated at ``T - s``."""

    depth: int
    s: int
    data: Trajectory
    Hu: np.ndarray
    Hy: np.ndarray

    @property
    def m(self):
        return self.data.u.shape[1]

    @property
    def p(self):
        return self.data.y.shape[1]

    @property
    def columns(self):
        return self.Hu.shape[1]

    @property
    def stacked(self):
        return np.vstack([self.Hu, self.Hy])


def build_hankel_representation(data, L, s=1):
    """Hankel matrices over the data restricted to ``[0, T-s]``.

    ``s = 1`` uses all samples, as for explicit LTI systems.
    """
    T = len(data)
    if s < 1 or L < 1:
        raise InputError("L and s must be positive")
    cols = T - s - L + 2
    if cols < 1:
        raise InputError(f"data of length {T} too short for depth {L} with truncation s = {s}")
    used = T - s + 1
    Hu = hankel(data.u[:used].reshape(-1), data.u.shape[1], L)
    Hy = hankel(data.y[:used].reshape(-1), data.y.shape[1], L)
    Hu.setflags(write=False)
    Hy.setflags(write=False)
    return HankelRepresentation(L, s, data.manifest(), Hu, Hy)


class Membership(NamedTuple):
    verdict: bool
    alpha: np.ndarray
    residual: float


def membership(rep, candidate, tol=MEMBERSHIP_TOL):
    """Test whether ``candidate`` lies in the column span of ``[Hu; Hy]``.

    Returns the verdict, the minimum-norm least-squares ``alpha`` and the
    absolute residual. The verdict uses ``residual <= tol (1 + |rhs|)``.
    """
    if len(candidate) != rep.depth:
        raise InputError(f"candidate length {len(candidate)} != depth {rep.depth}")
    if candidate.u.shape[1] != rep.m or candidate.y.shape[1] != rep.p:
        raise InputError("candidate dimensions do not match the data")
    rhs = np.concatenate([candidate.u.reshape(-1), candidate.y.reshape(-1)])
    H = rep.stacked
    alpha, *_ = np.linalg.lstsq(H, rhs, rcond=None)
    residual = float(np.linalg.norm(H @ alpha - rhs))
    return Membership(residual <= tol * (1.0 + np.linalg.norm(rhs)), alpha, residual)


def synthesize(rep, alpha):
    """The manifest trajectory ``[Hu; Hy] alpha`` on ``[0, depth-1]``."""
    alpha = np.asarray(alpha, dtype=float).reshape(-1)
    if alpha.shape != (rep.columns,):
        raise InputError(f"alpha must have {rep.columns} entries, got {alpha.size}")
    u = (rep.Hu @ alpha).reshape(rep.depth, rep.m)
    y = (rep.Hy @ alpha).reshape(rep.depth, rep.p)
    return Trajectory(u, y)
