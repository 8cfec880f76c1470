import numpy as np
import pytest

from conftest import paper_data
from helpers import model_membership, random_descriptor, random_trajectory
from ddpc.behavior import build_hankel_representation, generate_pe_input, membership, required_pe_order
from ddpc.descriptor import Trajectory, observability_index, quasi_weierstrass, simulate
from ddpc.errors import DomainError, InfeasibleError, InputError, NumericalError
from ddpc.ocp import (
    OcpSpec,
    build_data_driven_ocp,
    build_model_based_ocp,
    is_stationary_setpoint,
    solve_data_driven_ocp,
    solve_model_based_ocp,
    trajectory_cost,
)
from ddpc.presets import PAPER_HORIZON, PAPER_SCHEDULE

Y1 = PAPER_SCHEDULE[0][2]
Y2 = PAPER_SCHEDULE[1][2]


def random_past(rng, qw, w, scale=1.0):
    tr = random_trajectory(rng, qw, w, z_scale=scale)
    return tr.manifest().shifted(10 - w)


def spec_for(qw, past, L=PAPER_HORIZON, y_s=None, **kw):
    return OcpSpec(L, np.eye(qw.p), np.eye(qw.m), past, qw.q, qw.s, np.zeros(qw.m), y_s, **kw)


def test_spec_validation(qw_paper):
    past = Trajectory(np.zeros((3, 1)), np.zeros((3, 4)))
    with pytest.raises(InputError):
        OcpSpec(20, np.eye(3), np.eye(1), past, 2, 2)
    with pytest.raises(InputError):
        OcpSpec(20, np.diag([1.0, 1, 1, 0]), np.eye(1), past, 2, 2)
    with pytest.raises(InputError):
        OcpSpec(20, np.eye(4), -np.eye(1), past, 2, 2)
    with pytest.raises(InputError):
        OcpSpec(0, np.eye(4), np.eye(1), past, 2, 2)
    with pytest.raises(InputError):
        OcpSpec(20, np.eye(4), np.eye(1), past, 2, 2, terminal="soft")
    spec = OcpSpec(20, np.eye(4), np.eye(1), past.shifted(7), 2, 2)
    assert (spec.window, spec.length, spec.t) == (3, 23, 10)


def test_paper_problem_dimensions(qw_paper, rep_ocp):
    spec = spec_for(qw_paper, Trajectory(np.zeros((3, 1)), np.zeros((3, 4))), y_s=Y1)
    qp = build_data_driven_ocp(rep_ocp, spec)
    assert rep_ocp.columns == 37
    assert qp.H.shape == (37, 37)
    # past window and terminal window, both of width q + s - 1 = 3, each with m + p = 5 rows per sample
    assert qp.Aeq.shape == (30, 37)


def test_depth_mismatch(qw_paper, data_paper):
    rep = build_hankel_representation(data_paper, 20, qw_paper.s)
    spec = spec_for(qw_paper, Trajectory(np.zeros((3, 1)), np.zeros((3, 4))))
    with pytest.raises(InputError):
        build_data_driven_ocp(rep, spec)


def test_zero_past_zero_cost(qw_paper, rep_ocp):
    spec = spec_for(qw_paper, Trajectory(np.zeros((3, 1)), np.zeros((3, 4))))
    for sol in (solve_data_driven_ocp(rep_ocp, spec), solve_model_based_ocp(qw_paper, spec)):
        assert sol.cost == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(sol.u, 0, atol=1e-10)


def test_stationary_past_at_setpoint(qw_paper, rep_ocp):
    past = Trajectory(np.zeros((3, 1)), np.tile(Y1, (3, 1)))
    sol = solve_data_driven_ocp(rep_ocp, spec_for(qw_paper, past, y_s=Y1))
    assert sol.cost == pytest.approx(0.0, abs=1e-9)
    np.testing.assert_allclose(sol.y, np.tile(Y1, (23, 1)), atol=1e-8)


def test_stationarity_check(qw_paper, rep_ocp):
    for _, u_s, y_s in PAPER_SCHEDULE:
        assert is_stationary_setpoint(u_s, y_s, qw=qw_paper)
        assert is_stationary_setpoint(u_s, y_s, rep=rep_ocp)
    bad = np.array([1.0, 0.0, 0.0, 0.0])
    assert not is_stationary_setpoint([0.0], bad, qw=qw_paper)
    assert not is_stationary_setpoint([0.0], bad, rep=rep_ocp)
    with pytest.raises(InputError):
        is_stationary_setpoint([0.0], bad)
    past = Trajectory(np.zeros((3, 1)), np.zeros((3, 4)))
    with pytest.raises(DomainError):
        solve_model_based_ocp(qw_paper, spec_for(qw_paper, past, y_s=bad))
    with pytest.raises(DomainError):
        solve_data_driven_ocp(rep_ocp, spec_for(qw_paper, past, y_s=bad))


@pytest.mark.parametrize("seed", range(10))
def test_data_driven_matches_model_based(qw_paper, rep_ocp, seed):
    rng = np.random.default_rng(seed)
    past = random_past(rng, qw_paper, 3, scale=5.0)
    spec = spec_for(qw_paper, past, y_s=[Y1, Y2, None][seed % 3])
    dd = solve_data_driven_ocp(rep_ocp, spec)
    mb = solve_model_based_ocp(qw_paper, spec)
    assert abs(dd.cost - mb.cost) / (1 + mb.cost) <= 1e-9
    np.testing.assert_allclose(dd.u, mb.u, atol=1e-7)
    np.testing.assert_allclose(dd.y, mb.y, atol=1e-7)
    assert dd.kkt_residual < 1e-9 and mb.kkt_residual < 1e-9


def test_constraints_are_met_exactly(qw_paper, rep_ocp):
    rng = np.random.default_rng(20)
    past = random_past(rng, qw_paper, 3, scale=3.0)
    spec = spec_for(qw_paper, past, y_s=Y1)
    sol = solve_data_driven_ocp(rep_ocp, spec)
    np.testing.assert_allclose(sol.u[:3], past.u, atol=1e-9)
    np.testing.assert_allclose(sol.y[:3], past.y, atol=1e-9)
    np.testing.assert_allclose(sol.u[-3:], 0, atol=1e-9)
    np.testing.assert_allclose(sol.y[-3:], np.tile(Y1, (3, 1)), atol=1e-9)
    assert sol.t0 == past.t0 and sol.t == 10
    assert sol.trajectory().interval == (7, 29)


def test_cost_self_consistency(qw_paper, rep_ocp):
    rng = np.random.default_rng(21)
    spec = spec_for(qw_paper, random_past(rng, qw_paper, 3), y_s=Y2)
    qp = build_data_driven_ocp(rep_ocp, spec)
    sol = solve_data_driven_ocp(rep_ocp, spec)
    quad = 0.5 * sol.alpha @ qp.H @ sol.alpha + qp.g @ sol.alpha + qp.const
    assert quad == pytest.approx(sol.cost, rel=1e-9, abs=1e-9)
    assert trajectory_cost(sol.u, sol.y, spec) == pytest.approx(sol.cost)


def test_alpha_is_minimum_norm(qw_paper, rep_ocp):
    rng = np.random.default_rng(22)
    spec = spec_for(qw_paper, random_past(rng, qw_paper, 3), y_s=Y1)
    sol = solve_data_driven_ocp(rep_ocp, spec)
    # orthogonal to the kernel of the stacked Hankel matrix
    from scipy.linalg import null_space

    K = null_space(rep_ocp.stacked)
    assert K.shape[1] > 0
    assert np.linalg.norm(K.T @ sol.alpha) < 1e-8 * (1 + np.linalg.norm(sol.alpha))


def test_solution_is_a_system_trajectory(qw_paper, rep_ocp, rep_ocp_independent):
    rng = np.random.default_rng(23)
    sol = solve_data_driven_ocp(rep_ocp, spec_for(qw_paper, random_past(rng, qw_paper, 3), y_s=Y1))
    tr = sol.trajectory()
    assert membership(rep_ocp_independent, tr).verdict
    assert model_membership(qw_paper, tr)


def test_horizon_one_is_infeasible(qw_paper, data_paper):
    rep = build_hankel_representation(data_paper, 4, qw_paper.s)
    past = random_past(np.random.default_rng(24), qw_paper, 3)
    spec = spec_for(qw_paper, past, L=1, y_s=Y1)
    with pytest.raises(InfeasibleError):
        solve_data_driven_ocp(rep, spec)
    with pytest.raises(InfeasibleError):
        solve_model_based_ocp(qw_paper, spec)


def test_corrupted_past_is_infeasible(qw_paper, rep_ocp):
    past = random_past(np.random.default_rng(25), qw_paper, 3)
    y = past.y.copy()
    y[1, 0] += 1.0
    spec = spec_for(qw_paper, Trajectory(past.u, y, None, past.t0), y_s=Y1)
    with pytest.raises(InfeasibleError):
        solve_data_driven_ocp(rep_ocp, spec)
    with pytest.raises(InfeasibleError):
        solve_model_based_ocp(qw_paper, spec)


def test_minimal_horizon_feasible(qw_paper):
    L = 2 * qw_paper.q + 3 * qw_paper.s - 2
    rep = build_hankel_representation(paper_data(qw_paper, order=L + 6), L + 3, qw_paper.s)
    rng = np.random.default_rng(26)
    for _ in range(10):
        spec = spec_for(qw_paper, random_past(rng, qw_paper, 3, scale=4.0), L=L, y_s=Y1)
        dd = solve_data_driven_ocp(rep, spec)
        mb = solve_model_based_ocp(qw_paper, spec)
        assert abs(dd.cost - mb.cost) / (1 + mb.cost) <= 1e-8


def test_relaxed_window_with_observability_index(qw_paper, data_paper, rep_ocp):
    theta = observability_index(qw_paper)
    w = theta + qw_paper.s - 1
    rep = build_hankel_representation(data_paper, PAPER_HORIZON + w, qw_paper.s)
    rng = np.random.default_rng(27)
    full = random_past(rng, qw_paper, 3, scale=3.0)
    short = full.segment(full.t1 - w + 1, full.t1)
    relaxed = solve_data_driven_ocp(rep, spec_for(qw_paper, short, y_s=Y1))
    reference = solve_data_driven_ocp(rep_ocp, spec_for(qw_paper, full, y_s=Y1))
    assert relaxed.cost == pytest.approx(reference.cost, rel=1e-8)
    np.testing.assert_allclose(relaxed.u[w:], reference.u[3:], atol=1e-7)


def test_no_terminal_constraint_is_cheaper(qw_paper, rep_ocp):
    past = random_past(np.random.default_rng(28), qw_paper, 3, scale=3.0)
    with_term = solve_data_driven_ocp(rep_ocp, spec_for(qw_paper, past, y_s=Y1))
    free = solve_data_driven_ocp(rep_ocp, spec_for(qw_paper, past, y_s=Y1, terminal="none"))
    assert free.cost <= with_term.cost + 1e-9


def test_model_based_decision_vector(qw_paper):
    past = Trajectory(np.zeros((3, 1)), np.zeros((3, 4)))
    qp = build_model_based_ocp(qw_paper, spec_for(qw_paper, past))
    # z1 at the window start plus inputs over 23 + s - 1 samples
    assert qp.H.shape == (2 + 24, 2 + 24)


def _random_instance(seed, radius):
    rng = np.random.default_rng(300 + seed)
    n = int(rng.integers(2, 5))
    m, p = int(rng.integers(1, 3)), int(rng.integers(1, 3))
    sys, _, _ = random_descriptor(rng, n, m, p, radius=radius)
    qw = quasi_weierstrass(sys)
    w = qw.q + qw.s - 1
    L = 2 * qw.q + 3 * qw.s - 2 + 2
    order = required_pe_order(L + w, qw.q, qw.s)
    T = (m + 1) * order - 1 + 5
    u = generate_pe_input(T, m, order, seed=seed)
    data = simulate(qw, rng.normal(size=qw.q), np.vstack([u, np.zeros((qw.s - 1, m))])).manifest()
    rep = build_hankel_representation(data, L + w, qw.s)
    past = random_trajectory(rng, qw, w).manifest()
    spec = OcpSpec(L, np.eye(p), np.eye(m), past, qw.q, qw.s)
    return qw, rep, spec


@pytest.mark.parametrize("seed", range(12))
def test_equivalence_on_random_systems(seed):
    qw, rep, spec = _random_instance(seed, radius=1.0)
    dd = solve_data_driven_ocp(rep, spec)
    mb = solve_model_based_ocp(qw, spec)
    assert abs(dd.cost - mb.cost) / (1 + mb.cost) <= 1e-6
    np.testing.assert_allclose(dd.y, mb.y, atol=1e-5)


def test_exploding_data_is_rejected_not_misreported():
    # slow dynamics with spectral radius 1.37 blow the data up to ~4e7 and the
    # Hankel cost matrix past double precision
    qw, rep, spec = _random_instance(7, radius=None)
    assert np.abs(rep.data.y).max() > 1e7
    assert solve_model_based_ocp(qw, spec).kkt_residual < 1e-8
    with pytest.raises(NumericalError):
        solve_data_driven_ocp(rep, spec)
