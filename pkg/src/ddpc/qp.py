"""Equality-constrained convex quadratic programs.

Minimize ``0.5 x'Hx + g'x`` subject to ``Aeq x = beq`` by one solve of the KKT
system after removing numerically dependent constraint rows.
"""

from typing import NamedTuple

import numpy as np

from .errors import InfeasibleError, InputError, NumericalError

RANK_TOL = 1e-10
FEAS_TOL = 1e-6


class QPResult(NamedTuple):
    x: np.ndarray
    multipliers: np.ndarray
    kkt_residual: float
    constraint_residual: float


def _reduce_constraints(Aeq, beq, rank_tol, feas_tol):
    """Replace ``Aeq x = beq`` by the equivalent orthonormal-row system ``Vr' x = c``.

    Returns ``(Ur, sr, Vr, c)`` from the thin SVD ``Aeq = U S V'`` restricted to
    the numerically nonzero singular values.
    """
    U, sv, Vt = np.linalg.svd(Aeq, full_matrices=False)
    if sv.size == 0 or sv[0] == 0.0:
        rank = 0
    else:
        rank = int(np.sum(sv > rank_tol * sv[0]))
    Ur, sr, Vr = U[:, :rank], sv[:rank], Vt[:rank].T
    # beq must lie in im(Aeq); anything outside cannot be matched by any x.
    outside = float(np.linalg.norm(beq - Ur @ (Ur.T @ beq)))
    if outside > feas_tol * (1.0 + np.linalg.norm(beq)):
        raise InfeasibleError(f"equality constraints are inconsistent (residual {outside:.3g})", outside)
    return Ur, sr, Vr, (Ur.T @ beq) / sr


def solve_equality_qp(H, g, Aeq=None, beq=None, rank_tol=RANK_TOL, feas_tol=FEAS_TOL):
    """Solve ``min 0.5 x'Hx + g'x  s.t.  Aeq x = beq`` for symmetric PSD ``H``.

    When the minimizer is not unique the minimum-norm one is returned.
    Multipliers refer to the original (unreduced) constraint rows and satisfy
    ``H x + g + Aeq' lam = 0``.

    Raises:
        InfeasibleError: ``beq`` is not in the range of ``Aeq``, or the
            objective is unbounded below on the feasible set.
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    g = np.asarray(g, dtype=float).reshape(-1)
    nx = g.size
    if H.shape != (nx, nx):
        raise InputError(f"H must be {nx}x{nx}, got {H.shape}")
    if Aeq is None:
        Aeq = np.zeros((0, nx))
        beq = np.zeros(0)
    Aeq = np.asarray(Aeq, dtype=float).reshape(-1, nx)
    beq = np.asarray(beq, dtype=float).reshape(-1)
    if beq.size != Aeq.shape[0]:
        raise InputError("Aeq and beq disagree in row count")
    H = 0.5 * (H + H.T)

    Ur, sr, Vr, c = _reduce_constraints(Aeq, beq, rank_tol, feas_tol)
    # Cost scaling leaves the minimizer unchanged and keeps the KKT matrix balanced
    # against the orthonormal constraint rows.
    h_scale = float(np.linalg.norm(H, 2)) or 1.0
    Hs, gs = H / h_scale, g / h_scale
    k = Vr.shape[1]
    K = np.block([[Hs, Vr], [Vr.T, np.zeros((k, k))]])
    rhs = np.concatenate([-gs, c])
    sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    x, mu = sol[:nx], sol[nx:]

    # Remove components along directions that change neither the constraints nor the cost.
    _, sv, Vt = np.linalg.svd(np.vstack([Hs, Vr.T]), full_matrices=True)
    scale = sv[0] if sv.size and sv[0] > 0 else 1.0
    flat = Vt[int(np.sum(sv > rank_tol * scale)):].T
    if flat.shape[1]:
        if np.linalg.norm(flat.T @ gs) > feas_tol * (1.0 + np.linalg.norm(gs)):
            raise InfeasibleError("objective is unbounded below on the feasible set", np.inf)
        x = x - flat @ (flat.T @ x)

    lam = Ur @ (h_scale * mu / sr) if k else np.zeros(Aeq.shape[0])
    stat = H @ x + g + Aeq.T @ lam
    cons = Aeq @ x - beq
    cons_norm = float(np.linalg.norm(cons))
    if cons_norm > feas_tol * (1.0 + np.linalg.norm(beq)) * max(1.0, float(sr[0]) if k else 1.0):
        raise NumericalError(f"KKT solve lost the constraints (residual {cons_norm:.3g})")
    kkt = float(np.linalg.norm(np.concatenate([stat, cons])))
    return QPResult(x, lam, kkt, cons_norm)
