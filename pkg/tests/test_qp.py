import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import null_space_qp
from ddpc.errors import InfeasibleError, InputError
from ddpc.qp import solve_equality_qp


def random_qp(rng, n=None, k=None, singular_H=False, redundant=False):
    n = int(rng.integers(2, 51)) if n is None else n
    k = int(rng.integers(1, n)) if k is None else k
    if singular_H:
        # PSD with a kernel the constraints cut off
        M = rng.normal(size=(n - k // 2 if k > 1 else n, n))
        H = M.T @ M
    else:
        M = rng.normal(size=(n, n))
        H = M.T @ M + 0.1 * np.eye(n)
    g = rng.normal(size=n)
    A = rng.normal(size=(k, n))
    b = A @ rng.normal(size=n)
    if redundant:
        A = np.vstack([A, A[:1] * 2.0])
        b = np.concatenate([b, b[:1] * 2.0])
    return H, g, A, b


def test_unconstrained_example():
    res = solve_equality_qp(np.diag([2.0, 4.0]), np.array([-2.0, -4.0]))
    np.testing.assert_allclose(res.x, [1.0, 1.0])


def test_projection_example():
    # closest point to the origin on x + y = 2
    res = solve_equality_qp(np.eye(2), np.zeros(2), np.array([[1.0, 1.0]]), np.array([2.0]))
    np.testing.assert_allclose(res.x, [1.0, 1.0])
    np.testing.assert_allclose(res.multipliers, [-1.0])
    assert res.kkt_residual < 1e-12


def test_minimum_norm_among_optimizers():
    # cost depends only on x0; x1 is free and must come out as zero
    res = solve_equality_qp(np.diag([1.0, 0.0]), np.array([-1.0, 0.0]))
    np.testing.assert_allclose(res.x, [1.0, 0.0], atol=1e-12)
    res = solve_equality_qp(np.zeros((3, 3)), np.zeros(3), np.array([[1.0, 1.0, 0.0]]), np.array([2.0]))
    np.testing.assert_allclose(res.x, [1.0, 1.0, 0.0], atol=1e-12)


def test_inconsistent_constraints():
    A = np.array([[1.0, 0.0], [1.0, 0.0]])
    with pytest.raises(InfeasibleError) as info:
        solve_equality_qp(np.eye(2), np.zeros(2), A, np.array([1.0, 2.0]))
    assert info.value.residual > 0.5


def test_unbounded_objective():
    with pytest.raises(InfeasibleError):
        solve_equality_qp(np.diag([1.0, 0.0]), np.array([0.0, 1.0]))


def test_shape_errors():
    with pytest.raises(InputError):
        solve_equality_qp(np.eye(3), np.zeros(2))
    with pytest.raises(InputError):
        solve_equality_qp(np.eye(2), np.zeros(2), np.ones((2, 2)), np.ones(3))


@pytest.mark.parametrize("seed", range(20))
def test_matches_null_space_method(seed):
    rng = np.random.default_rng(seed)
    H, g, A, b = random_qp(rng, singular_H=seed % 3 == 0, redundant=seed % 4 == 0)
    res = solve_equality_qp(H, g, A, b)
    ref = null_space_qp(H, g, A, b)
    np.testing.assert_allclose(res.x, ref, atol=1e-9 * (1 + np.linalg.norm(ref)))
    assert res.constraint_residual < 1e-8 * (1 + np.linalg.norm(b))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 20))
def test_kkt_conditions_hold(seed, n):
    rng = np.random.default_rng(seed)
    H, g, A, b = random_qp(rng, n=n, k=int(rng.integers(1, n)))
    res = solve_equality_qp(H, g, A, b)
    scale = 1 + np.linalg.norm(H) * np.linalg.norm(res.x) + np.linalg.norm(g)
    np.testing.assert_allclose(H @ res.x + g + A.T @ res.multipliers, 0, atol=1e-8 * scale)
    # no feasible direction decreases the cost
    from scipy.linalg import null_space

    Z = null_space(A)
    val = 0.5 * res.x @ H @ res.x + g @ res.x
    for d in Z.T:
        for step in (1e-3, -1e-3):
            x2 = res.x + step * d
            assert 0.5 * x2 @ H @ x2 + g @ x2 >= val - 1e-10
