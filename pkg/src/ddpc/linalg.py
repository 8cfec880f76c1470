"""Small rank-revealing helpers built on the SVD."""

import numpy as np

DEFAULT_RANK_TOL = 1e-9


def numerical_rank(M, tol=DEFAULT_RANK_TOL):
    """Count singular values above ``tol * sigma_max``. Empty or zero matrices have rank 0."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


def orth(M, atol):
    """Orthonormal basis of ``im M``; singular values at or below ``atol`` are discarded."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if M.shape[1] == 0:
        return np.zeros((n, 0))
    U, sv, _ = np.linalg.svd(M, full_matrices=False)
    return U[:, sv > atol]


def null(M, atol):
    """Orthonormal basis of ``ker M`` with absolute singular-value threshold ``atol``."""
    M = np.asarray(M, dtype=float)
    k = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(k)
    _, sv, Vt = np.linalg.svd(M, full_matrices=True)
    rank = int(np.sum(sv > atol))
    return Vt[rank:].T.conj()


def preimage(A, M, atol):
    """Orthonormal basis of ``{x : A x in im M}``."""
    n = A.shape[1]
    Q = orth(M, atol)
    if Q.shape[1] == 0:
        return null(A, atol)
    residual_map = A - Q @ (Q.T @ A)
    if Q.shape[1] == A.shape[0]:
        return np.eye(n)
    return null(residual_map, atol)


def matrix_power_stack(A, B, k):
    """Horizontal stack ``[B, A B, ..., A^(k-1) B]``."""
    blocks = []
    cur = B
    for _ in range(k):
        blocks.append(cur)
        cur = A @ cur
    if not blocks:
        return np.zeros((A.shape[0], 0))
    return np.hstack(blocks)
