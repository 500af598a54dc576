import numpy as np
import pytest

from topoveil.adversary import ols_estimate, score
from topoveil.design_central import (
    check_convergence,
    constraint_matrix,
    design_invariant_subspace,
    design_kernel_pb,
    design_laplacian,
    design_unobservable,
    feedback_dumps,
    feedback_loads,
)
from topoveil.dynamics import build_hankel, observability_matrix, observe, simulate
from topoveil.errors import AlphaTooLarge, Infeasible, NoValidSubset
from topoveil.lincore import eigen_decompose, numerical_rank
from topoveil.netgraph import random_topology, validate


def dense_mixing_topology(n, seed):
    """Dense random row-stochastic matrix with strong mixing (entries
    bounded well away from zero), diagonalizable almost surely."""
    rng = np.random.default_rng(seed)
    w = rng.uniform(1.0, 2.0, (n, n))
    w /= w.sum(axis=1, keepdims=True)
    return validate(w)


def refinement_fixture():
    """Sparse 4-node network whose first valid eigenmode subset pushes
    W + K_c negative: a positive 3x3 block feeding one extra node whose
    self-weight sits near a real eigenvalue of the block."""
    rng = np.random.default_rng(6)
    a = rng.uniform(0.05, 1.0, (3, 3))
    a /= a.sum(axis=1, keepdims=True)
    lam = np.linalg.eigvals(a)
    d = max(l.real for l in lam if abs(l.imag) < 1e-12 and 0.05 < l.real < 0.85) + 0.02
    direction = rng.uniform(0.1, 1.0, 3)
    direction /= direction.sum()
    w = np.zeros((4, 4))
    w[:3, :3] = a
    w[3, :3] = (1 - d) * direction
    w[3, 3] = d
    return validate(w)


def assert_design_invariants(topo, fb):
    k, w = fb.k, topo.w
    assert np.max(np.abs(k.sum(axis=1))) < 1e-9
    assert np.max(np.abs(topo.pi() @ k)) < 1e-9
    assert np.min(w + k) >= -1e-9
    assert fb.verification.all_ok
    for i in range(topo.n):
        for j in range(topo.n):
            if i != j and w[i, j] == 0.0:
                assert k[i, j] == 0.0


# ---------------------------------------------------------------------------
# check_convergence
# ---------------------------------------------------------------------------


def test_zero_feedback_passes():
    topo = random_topology(8, 0.5, 0)
    report = check_convergence(topo, np.zeros((8, 8)))
    assert report.all_ok


def test_laplacian_feedback_passes_lemma1():
    topo = random_topology(8, 0.9, 1)
    fb = design_laplacian(topo)
    assert fb.verification.all_ok


def test_nonzero_row_sum_flagged():
    topo = random_topology(4, 0.8, 2)
    k = np.zeros((4, 4))
    k[0, 0] = 0.1
    report = check_convergence(topo, k)
    assert not report.row_sum_zero
    assert report.row_sum_residual > 1e-3


# ---------------------------------------------------------------------------
# design_unobservable
# ---------------------------------------------------------------------------


def test_unobservable_full_rank_c_infeasible():
    topo = random_topology(5, 0.8, 3)
    with pytest.raises(Infeasible, match="ker"):
        design_unobservable(topo, np.eye(5))


def test_unobservable_shared_kernel_instance():
    # ker(W) & ker(C) nonempty with |Z| > 3n - 1: duplicated row makes W
    # singular, C projected to annihilate the kernel vector.
    n = 8
    base = random_topology(n, 0.9, 2)
    w = np.array(base.w)
    w[3] = w[1]
    topo = validate(w)
    assert topo.z > 3 * n - 1
    from topoveil.lincore import nullspace_basis

    v = nullspace_basis(topo.w)[:, 0]
    rng = np.random.default_rng(0)
    c = rng.standard_normal((4, n))
    c = c - np.outer(c @ v, v) / (v @ v)
    fb = design_unobservable(topo, c)
    assert_design_invariants(topo, fb)
    w_mod = topo.w + fb.k
    assert np.max(np.abs(fb.k)) > 1e-8  # nontrivial
    assert numerical_rank(observability_matrix(w_mod, c)) <= n - 1
    chosen = np.array(fb.info["kernel_vector"])
    assert np.max(np.abs(w_mod @ chosen)) < 1e-8
    # Hankel rank deficiency for arbitrary initial states (Lemma 4 (i)).
    for seed in range(3):
        x0 = np.random.default_rng(seed).uniform(-1, 1, n)
        traj = simulate(w_mod, x0, n * 4 + n + 4)
        y = build_hankel(observe(c, traj), n)
        assert numerical_rank(y) < n


def test_unobservable_feasibility_path():
    topo = random_topology(6, 0.8, 4)
    c = np.random.default_rng(1).standard_normal((3, 6))
    fb = design_unobservable(topo, c)
    assert fb.info["path"] == "feasibility"
    assert_design_invariants(topo, fb)
    v = np.array(fb.info["kernel_vector"])
    assert np.max(np.abs((topo.w + fb.k) @ v)) < 1e-8
    assert numerical_rank(observability_matrix(topo.w + fb.k, c)) < 6


# ---------------------------------------------------------------------------
# design_invariant_subspace
# ---------------------------------------------------------------------------


def test_invariant_subspace_dense_fixture():
    topo = dense_mixing_topology(6, 7)
    fb = design_invariant_subspace(topo)
    assert_design_invariants(topo, fb)
    assert not fb.info["refined"]
    i_s = sorted(fb.selection.indices)
    assert len(i_s) >= 2

    dec = eigen_decompose(topo.w)
    w_mod = topo.w + fb.k
    # Removed modes null, untouched modes intact (Eq. 29 behaviour).
    for i in range(1, 6):
        p = dec.right_vectors[:, i]
        if i in fb.selection.indices:
            assert np.max(np.abs(w_mod @ p)) < 1e-8
        else:
            assert np.max(np.abs(w_mod @ p - dec.eigenvalues[i] * p)) < 1e-8

    # Trajectories stay out of the removed directions for t >= 1.
    rng = np.random.default_rng(0)
    for _ in range(5):
        x = rng.uniform(-1, 1, 6)
        states = [x]
        for _ in range(5):
            states.append(w_mod @ states[-1])
        krylov = np.array(states).T
        assert numerical_rank(krylov[:, :6]) <= 5
        for i in fb.selection.indices:
            q = dec.left_vectors[:, i]
            coeffs = np.abs(q @ krylov[:, 1:])
            assert np.max(coeffs) < 1e-8


def test_invariant_subspace_eigenvalues_match_selection():
    topo = dense_mixing_topology(5, 11)
    fb = design_invariant_subspace(topo)
    dec = eigen_decompose(topo.w)
    i_s = fb.selection.indices
    expected = [1.0] + [0.0] * len(i_s) + [
        dec.eigenvalues[j] for j in range(1, 5) if j not in i_s
    ]
    got = np.linalg.eigvals(topo.w + fb.k)
    from scipy.optimize import linear_sum_assignment

    cost = np.abs(np.subtract.outer(np.array(expected), got))
    rows, cols = linear_sum_assignment(cost)
    assert cost[rows, cols].max() < 1e-7


def test_invariant_subspace_sparse_no_subset():
    topo = random_topology(6, 0.3, 5)
    with pytest.raises(NoValidSubset):
        design_invariant_subspace(topo)


def test_invariant_subspace_refinement_path():
    topo = refinement_fixture()
    fb = design_invariant_subspace(topo, prefer_unrefined=False)
    assert fb.info["refined"]
    assert_design_invariants(topo, fb)
    dec = eigen_decompose(topo.w)
    w_mod = topo.w + fb.k
    # Removed directions stay in the kernel even after refinement, so the
    # forward orbit lives in a shrunken range and the data stays deficient.
    for i in fb.selection.indices:
        assert np.max(np.abs(w_mod @ dec.right_vectors[:, i].real)) < 1e-8
    rng = np.random.default_rng(2)
    for _ in range(5):
        x = rng.uniform(-1, 1, 4)
        states = [x]
        for _ in range(3):
            states.append(w_mod @ states[-1])
        assert numerical_rank(np.array(states).T) <= 3


def test_invariant_subspace_support_condition_matrix():
    topo = refinement_fixture()
    fb = design_invariant_subspace(topo)
    h = fb.selection.h_matrix
    indicator = np.zeros(topo.n)
    indicator[sorted(fb.selection.indices)] = 1.0
    assert np.max(np.abs(h @ indicator)) < 1e-9


# ---------------------------------------------------------------------------
# design_kernel_pb
# ---------------------------------------------------------------------------


def test_kernel_pb_constraint_matrix_shape_and_rank():
    topo = validate(np.full((3, 3), 1.0 / 3.0))
    m_tilde, positions = constraint_matrix(topo)
    assert m_tilde.shape == (6, 9)
    assert len(positions) == topo.z == 9
    assert numerical_rank(m_tilde) < 9  # feasible by the rank condition


def test_kernel_pb_design_properties():
    topo = random_topology(8, 0.5, 9)
    fb = design_kernel_pb(topo)
    assert_design_invariants(topo, fb)
    assert np.max(np.abs(fb.k.sum(axis=1))) < 1e-10
    assert np.max(np.abs(topo.pi() @ fb.k)) < 1e-10
    assert np.linalg.norm(fb.k) > 1e-10  # K != 0


def test_kernel_pb_consensus_point_preserved():
    topo = random_topology(7, 0.6, 10)
    fb = design_kernel_pb(topo)
    w_mod = topo.w + fb.k
    rng = np.random.default_rng(1)
    for _ in range(20):
        x0 = rng.uniform(-5, 5, 7)
        target = float(topo.pi() @ x0)
        final = simulate(w_mod, x0, 3000).states[-1]
        assert np.max(np.abs(final - target)) < 1e-8


def test_kernel_pb_biases_ols_exactly_by_k():
    topo = random_topology(6, 0.6, 12)
    fb = design_kernel_pb(topo)
    w_mod = topo.w + fb.k
    x0 = np.random.default_rng(3).uniform(-1, 1, 6)
    traj = simulate(w_mod, x0, 40)
    est = ols_estimate(traj)
    assert not est.rank_deficient
    assert np.max(np.abs(est.estimate - w_mod)) < 1e-8
    s = score(est, topo, traj, simulate(topo.w, x0, 40), fb.k)
    expected_er1 = np.linalg.norm(fb.k) / np.linalg.norm(topo.w)
    assert abs(s.er1 - expected_er1) < 1e-8
    assert s.er1 > 0


def test_kernel_pb_deterministic():
    topo = random_topology(6, 0.6, 13)
    a = design_kernel_pb(topo)
    b = design_kernel_pb(topo)
    assert np.array_equal(a.k, b.k)


# ---------------------------------------------------------------------------
# design_laplacian
# ---------------------------------------------------------------------------


def test_laplacian_zero_alpha():
    topo = random_topology(5, 0.7, 14)
    fb = design_laplacian(topo, alpha=0.0)
    assert np.max(np.abs(fb.k)) == 0.0
    assert fb.verification.all_ok


def test_laplacian_two_node_bound_arithmetic():
    # r_max = 0.8, spectral bound 1/9 (the diagonal bound 9 is slack).
    topo = validate(np.array([[0.9, 0.1], [0.1, 0.9]]))
    fb = design_laplacian(topo)
    assert abs(fb.info["r_max"] - 0.8) < 1e-12
    assert abs(fb.info["bound"] - 1.0 / 9.0) < 1e-12
    assert abs(fb.info["alpha"] - 1.0 / 18.0) < 1e-12
    assert fb.verification.all_ok


def test_laplacian_alpha_beyond_bound_rejected():
    # lambda_tilde = 0.8 - 0.2 alpha leaves the unit disk at alpha > 9.
    topo = validate(np.array([[0.9, 0.1], [0.1, 0.9]]))
    with pytest.raises(AlphaTooLarge):
        design_laplacian(topo, alpha=10.0)


def test_laplacian_scalar_ambiguity():
    # Off-diagonal of W+K is (1+alpha) times that of W, so an exact OLS
    # recovery has er2 = 0 while er1 > 0.
    topo = random_topology(6, 0.7, 15)
    fb = design_laplacian(topo)
    alpha = fb.info["alpha"]
    w_mod = topo.w + fb.k
    off_w = topo.w - np.diag(np.diag(topo.w))
    off_mod = w_mod - np.diag(np.diag(w_mod))
    assert np.max(np.abs(off_mod - (1 + alpha) * off_w)) < 1e-12
    direction_w = off_w / np.linalg.norm(off_w)
    direction_mod = off_mod / np.linalg.norm(off_mod)
    assert np.max(np.abs(direction_w - direction_mod)) < 1e-10

    x0 = np.random.default_rng(4).uniform(-1, 1, 6)
    traj = simulate(w_mod, x0, 30)
    est = ols_estimate(traj)
    s = score(est, topo, traj, simulate(topo.w, x0, 30), fb.k)
    assert s.er2 < 1e-8
    assert s.er1 > 1e-6
    assert abs(s.gamma_star - 1.0 / (1 + alpha)) < 1e-8


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def test_feedback_json_round_trip():
    topo = random_topology(5, 0.7, 16)
    fb = design_laplacian(topo)
    again = feedback_loads(feedback_dumps(fb))
    assert np.array_equal(fb.k, again.k)
    assert again.method == "laplacian"
    assert again.verification.all_ok
