import numpy as np
import pytest

from topoveil.dynamics import (
    ADJACENT,
    INDEPENDENT,
    NoiseConfig,
    Trajectory,
    build_hankel,
    consensus_hit_time,
    hankel_shift_pair,
    observability_matrix,
    observation_to_csv,
    observe,
    simulate,
    simulate_noisy,
    trajectory_to_csv,
)
from topoveil.errors import DimensionMismatch, HorizonTooShort
from topoveil.lincore import numerical_rank
from topoveil.netgraph import random_topology


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def test_simulate_identity_constant():
    traj = simulate(np.eye(3), np.array([1.0, 2.0, 3.0]), 5)
    assert np.array_equal(traj.states[0], traj.states[-1])


def test_simulate_one_step_average():
    traj = simulate(np.array([[0.5, 0.5], [0.5, 0.5]]), np.array([0.0, 2.0]), 1)
    assert np.allclose(traj.states[1], [1.0, 1.0])


def test_simulate_consensus_limit():
    topo = random_topology(8, 0.4, 1)
    x0 = np.array([-2.0, -48.0, -35.0, -50.0, -56.0, 60.0, 0.0, -84.0])
    value = topo.pi() @ x0
    traj = simulate(topo.w, x0, 500)
    assert np.max(np.abs(traj.states[-1] - value)) < 1e-9


def test_simulate_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        simulate(np.eye(3), np.ones(2), 4)


def test_simulate_linearity():
    topo = random_topology(6, 0.6, 2)
    rng = np.random.default_rng(0)
    x, y = rng.uniform(-1, 1, 6), rng.uniform(-1, 1, 6)
    a, b = 2.5, -1.25
    lhs = simulate(topo.w, a * x + b * y, 30).states
    rhs = a * simulate(topo.w, x, 30).states + b * simulate(topo.w, y, 30).states
    assert np.max(np.abs(lhs - rhs)) < 1e-10


# ---------------------------------------------------------------------------
# observe / observability
# ---------------------------------------------------------------------------


def test_observe_identity():
    traj = simulate(random_topology(4, 0.7, 1).w, np.arange(4.0), 6)
    obs = observe(np.eye(4), traj)
    assert np.array_equal(obs.outputs, traj.states[:-1])


def test_observe_first_component():
    traj = simulate(random_topology(4, 0.7, 1).w, np.arange(4.0), 6)
    c = np.zeros((1, 4))
    c[0, 0] = 1.0
    obs = observe(c, traj)
    assert np.array_equal(obs.outputs[:, 0], traj.states[:-1, 0])


def test_observe_matches_elementwise_products():
    topo = random_topology(8, 0.5, 4)
    traj = simulate(topo.w, np.random.default_rng(1).uniform(-1, 1, 8), 10)
    c = np.random.default_rng(2).standard_normal((3, 8))
    obs = observe(c, traj)
    for t in range(obs.horizon):
        for i in range(3):
            assert abs(obs.outputs[t, i] - float(c[i] @ traj.states[t])) < 1e-12


def test_observability_identity_top_block():
    w = random_topology(4, 0.7, 1).w
    q = observability_matrix(w, np.eye(4))
    assert np.array_equal(q[:4], np.eye(4))
    assert q.shape == (16, 4)


def test_observability_nilpotent_rows_zero():
    w = np.zeros((3, 3))
    w[0, 1] = 1.0  # nilpotent of index 2
    c = np.array([[1.0, 0.0, 0.0]])
    q = observability_matrix(w, c)
    assert np.max(np.abs(q[2:])) == 0.0


def test_observability_full_rank_for_observable_pair():
    topo = random_topology(6, 0.6, 3)
    c = np.random.default_rng(0).standard_normal((2, 6))
    q = observability_matrix(topo.w, c)
    assert numerical_rank(q) == 6


# ---------------------------------------------------------------------------
# Hankel
# ---------------------------------------------------------------------------


def test_hankel_single_column():
    n = 3
    topo = random_topology(n, 1.0, 5)
    # C = I, exactly T = n m + n - 1 observations gives n m columns; the
    # first column is [x_0; ...; x_{n-1}].
    traj = simulate(topo.w, np.arange(3.0), n * n + n - 1)
    obs = observe(np.eye(n), traj)
    y = build_hankel(obs, n)
    assert np.allclose(y[:, 0], traj.states[:n].reshape(-1))


def test_hankel_constant_trajectory_rank_one():
    states = np.tile(np.array([1.0, 2.0]), (12, 1))
    obs = observe(np.eye(2), Trajectory(states))
    y = build_hankel(obs, 2)
    assert numerical_rank(y) == 1


def test_hankel_factorization_identity():
    # Y = Q_o [x_0 .. x_{T-n}] exactly on noiseless data.
    topo = random_topology(5, 0.6, 8)
    c = np.random.default_rng(3).standard_normal((2, 5))
    horizon = 5 * 2 + 5 + 6
    traj = simulate(topo.w, np.random.default_rng(4).uniform(-1, 1, 5), horizon)
    obs = observe(c, traj)
    y = build_hankel(obs, 5)
    q = observability_matrix(topo.w, c)
    x_block = traj.states[: y.shape[1]].T
    assert np.linalg.norm(y - q @ x_block) < 1e-10


def test_hankel_horizon_too_short():
    traj = simulate(random_topology(4, 0.8, 0).w, np.arange(4.0), 5)
    with pytest.raises(HorizonTooShort):
        build_hankel(observe(np.eye(4), traj), 4)


def test_hankel_shift_pair_shapes():
    topo = random_topology(4, 0.7, 2)
    traj = simulate(topo.w, np.arange(4.0), 30)
    y = build_hankel(observe(np.eye(4), traj), 4)
    y_minus, y_plus = hankel_shift_pair(y)
    assert y_minus.shape == y_plus.shape == (y.shape[0], y.shape[1] - 1)
    assert np.array_equal(y_minus[:, 1:], y_plus[:, :-1])


def test_lemma4_unobservable_makes_hankel_deficient():
    # Condition (i): Q_o v = 0 for some v forces rank(Y) < n.  Block
    # system with an unobserved block.
    w1 = random_topology(3, 1.0, 1).w
    w2 = random_topology(2, 1.0, 2).w
    w = np.block([[w1, np.zeros((3, 2))], [np.zeros((2, 3)), w2]])
    c = np.hstack([np.eye(3), np.zeros((3, 2))])  # sees only block 1
    q = observability_matrix(w, c)
    assert numerical_rank(q) < 5
    traj = simulate(w, np.random.default_rng(0).uniform(-1, 1, 5), 40)
    y = build_hankel(observe(c, traj), 5)
    assert numerical_rank(y) < 5


def test_lemma4_invariant_initial_state_makes_data_deficient():
    # Condition (ii): x_0 inside a proper invariant subspace gives
    # rank([x_0 .. x_{n-1}]) < n.
    from topoveil.lincore import eigen_decompose

    topo = random_topology(5, 1.0, 9)
    dec = eigen_decompose(topo.w)
    x0 = np.real(dec.right_vectors[:, 0] + dec.right_vectors[:, 1] + np.conj(dec.right_vectors[:, 1]))
    traj = simulate(topo.w, x0, 5)
    krylov = traj.states[:5].T
    assert numerical_rank(krylov) < 5


def test_lemma3_krylov_rank_saturates():
    # rank([x_0 .. x_{T-1}]) equals rank([x_0 .. x_{n-1}]) for all T >= n.
    from topoveil.lincore import eigen_decompose

    topo = random_topology(6, 1.0, 10)
    dec = eigen_decompose(topo.w)
    x0 = np.real(dec.right_vectors[:, 0] + 2 * dec.right_vectors[:, 5])
    traj = simulate(topo.w, x0, 25)
    base = numerical_rank(traj.states[:6].T)
    for horizon in (8, 12, 25):
        assert numerical_rank(traj.states[:horizon].T) == base


# ---------------------------------------------------------------------------
# noisy baselines
# ---------------------------------------------------------------------------


def test_noise_variance_at_t0():
    # Var per coordinate at t = 0 is 1: statistical check over many runs.
    topo = random_topology(4, 0.8, 3)
    x0 = np.zeros(4)
    cfg = NoiseConfig(mode=INDEPENDENT, seed=123)
    samples = []
    for run in range(800):
        traj = simulate_noisy(topo.w, x0, 1, cfg, run=run)
        samples.append(traj.states[1])  # = w_0 since W x0 = 0
    var = np.var(np.array(samples), axis=0)
    assert np.all(np.abs(var - 1.0) < 0.2)


def test_noise_zero_scale_equals_simulate():
    topo = random_topology(5, 0.6, 4)
    x0 = np.random.default_rng(0).uniform(-1, 1, 5)
    cfg = NoiseConfig(mode=ADJACENT, seed=7, scale=0.0)
    noisy = simulate_noisy(topo.w, x0, 50, cfg)
    clean = simulate(topo.w, x0, 50)
    assert np.array_equal(noisy.states, clean.states)


def test_noise_deterministic_per_seed_and_run():
    topo = random_topology(4, 0.8, 5)
    x0 = np.ones(4)
    cfg = NoiseConfig(mode=ADJACENT, seed=11)
    a = simulate_noisy(topo.w, x0, 30, cfg, run=3)
    b = simulate_noisy(topo.w, x0, 30, cfg, run=3)
    c = simulate_noisy(topo.w, x0, 30, cfg, run=4)
    assert np.array_equal(a.states, b.states)
    assert not np.array_equal(a.states, c.states)


def test_adjacent_noise_deviation_shrinks():
    # The adjacent construction telescopes, so late deviations track the
    # current noise level which decays like 1/t.
    topo = random_topology(6, 0.5, 6)
    x0 = np.random.default_rng(1).uniform(-5, 5, 6)
    clean = simulate(topo.w, x0, 2000)
    cfg = NoiseConfig(mode=ADJACENT, seed=2)
    devs_early, devs_late = [], []
    for run in range(10):
        noisy = simulate_noisy(topo.w, x0, 2000, cfg, run=run)
        diff = np.linalg.norm(noisy.states - clean.states, axis=1)
        devs_early.append(diff[10])
        devs_late.append(diff[2000])
    assert np.mean(devs_late) < np.mean(devs_early)


def test_consensus_hit_time():
    topo = random_topology(5, 0.7, 8)
    traj = simulate(topo.w, np.random.default_rng(2).uniform(-1, 1, 5), 3000)
    hit = consensus_hit_time(traj)
    assert hit is not None and hit < 3000


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------


def test_trajectory_csv_header_and_rows():
    traj = simulate(np.eye(2), np.array([1.0, 2.0]), 2)
    text = trajectory_to_csv(traj)
    lines = text.strip().splitlines()
    assert lines[0] == "t,x1,x2"
    assert lines[1].startswith("0,1,2")
    assert len(lines) == 4


def test_observation_csv_header():
    traj = simulate(np.eye(3), np.arange(3.0), 4)
    obs = observe(np.eye(3)[:2], traj)
    text = observation_to_csv(obs)
    assert text.splitlines()[0] == "t,y1,y2"
