"""Random test systems and independent oracles.

Oracles here deliberately avoid the package's own solution formulas: QPs are
solved by the null-space method, behavior membership is decided by
superposing simulator impulse responses.
"""

import numpy as np

from ddpc.descriptor import DescriptorSystem, quasi_weierstrass, simulate


def _well_conditioned(rng, n):
    Q1, _ = np.linalg.qr(rng.normal(size=(n, n)))
    Q2, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return Q1 @ np.diag(rng.uniform(0.5, 2.0, n)) @ Q2


def random_nilpotent(rng, r, max_block=None):
    """Block-diagonal nilpotent matrix with random block sizes; returns ``(N, index)``."""
    if r == 0:
        return np.zeros((0, 0)), 1
    max_block = r if max_block is None else max_block
    sizes = []
    left = r
    while left:
        k = int(rng.integers(1, min(left, max_block) + 1))
        sizes.append(k)
        left -= k
    N = np.zeros((r, r))
    at = 0
    for k in sizes:
        blk = np.triu(rng.normal(size=(k, k)), 1)
        blk[np.arange(k - 1), np.arange(1, k)] = rng.choice([-1, 1], k - 1) * rng.uniform(0.5, 1.5, k - 1)
        N[at:at + k, at:at + k] = blk
        at += k
    return N, max(sizes)


def random_descriptor(rng, n, m, p, q=None, max_block=None, radius=None):
    """Regular descriptor system built from a known quasi-Weierstrass form.

    ``radius`` rescales the slow dynamics to that spectral radius. Returns
    ``(system, q, s)`` with the planted indices.
    """
    q = int(rng.integers(1, n + 1)) if q is None else q
    r = n - q
    A1 = rng.normal(size=(q, q)) / np.sqrt(q)
    if radius is not None and q:
        A1 *= radius / max(np.max(np.abs(np.linalg.eigvals(A1))), 1e-12)
    N, s = random_nilpotent(rng, r, max_block)
    P0 = _well_conditioned(rng, n)
    S0 = _well_conditioned(rng, n)
    Pinv, Sinv = np.linalg.inv(P0), np.linalg.inv(S0)
    Eqw = np.zeros((n, n))
    Eqw[:q, :q] = np.eye(q)
    Eqw[q:, q:] = N
    Aqw = np.zeros((n, n))
    Aqw[:q, :q] = A1
    Aqw[q:, q:] = np.eye(r)
    E = Sinv @ Eqw @ Pinv
    A = Sinv @ Aqw @ Pinv
    B = rng.normal(size=(n, m))
    C = rng.normal(size=(p, n))
    D = rng.normal(size=(p, m)) * rng.integers(0, 2)
    return DescriptorSystem(E, A, B, C, D), q, s


def null_space_qp(H, g, Aeq, beq):
    """Independent equality-QP solve: particular solution plus reduced Newton step."""
    from scipy.linalg import null_space

    x0, *_ = np.linalg.lstsq(Aeq, beq, rcond=None)
    Z = null_space(Aeq)
    if Z.shape[1] == 0:
        return x0
    reduced_H = Z.T @ H @ Z
    reduced_g = Z.T @ (H @ x0 + g)
    y = np.linalg.solve(reduced_H, -reduced_g)
    return x0 + Z @ y


def impulse_basis(qw, length):
    """Columns spanning ``B_m[0, length-1]`` built purely by simulation.

    Each column is the manifest trajectory for a unit slow initial state or a
    unit input sample (including the ``s - 1`` inputs past the window).
    """
    n_in = length + qw.s - 1
    cols = []
    for i in range(qw.q):
        z1 = np.zeros(qw.q)
        z1[i] = 1.0
        tr = simulate(qw, z1, np.zeros((n_in, qw.m)))
        cols.append(np.concatenate([tr.u.reshape(-1), tr.y.reshape(-1)]))
    for k in range(n_in):
        for j in range(qw.m):
            u = np.zeros((n_in, qw.m))
            u[k, j] = 1.0
            tr = simulate(qw, np.zeros(qw.q), u)
            cols.append(np.concatenate([tr.u.reshape(-1), tr.y.reshape(-1)]))
    return np.array(cols).T


def model_membership(qw, traj, tol=1e-7):
    """Whether ``traj`` lies in the manifest behavior, decided from simulations only."""
    M = impulse_basis(qw, len(traj))
    rhs = np.concatenate([traj.u.reshape(-1), traj.y.reshape(-1)])
    coef, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    return bool(np.linalg.norm(M @ coef - rhs) <= tol * (1.0 + np.linalg.norm(rhs)))


def random_trajectory(rng, qw, length, z_scale=1.0):
    """Manifest trajectory of ``length`` samples plus its full-state version."""
    u = rng.uniform(-1, 1, (length + qw.s - 1, qw.m))
    return simulate(qw, z_scale * rng.normal(size=qw.q), u)


def paper_qw():
    from ddpc.presets import paper_system

    return quasi_weierstrass(paper_system())
