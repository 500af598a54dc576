"""Consensus simulation, observation model, and Hankel constructions.

Also houses the two stochastic noise-adding baselines used for
comparison: adjacent decaying noise (x_{t+1} = W x_t + w_t - w_{t-1})
and independent decaying noise (x_{t+1} = W x_t + w_t), both with
per-coordinate variance 1/(t+1)^2.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, HorizonTooShort

ADJACENT = "adjacent"
INDEPENDENT = "independent"


@dataclass(frozen=True)
class Trajectory:
    """State sequence x_0..x_T stored as a (T+1, n) array."""

    states: np.ndarray

    def __post_init__(self):
        if self.states.ndim != 2 or self.states.shape[0] < 2:
            raise DimensionMismatch("a trajectory needs at least x_0 and x_1")

    @property
    def horizon(self) -> int:
        return self.states.shape[0] - 1

    @property
    def n(self) -> int:
        return self.states.shape[1]


@dataclass(frozen=True)
class ObservationRecord:
    """Outputs y_t = C x_t for t = 0..T-1."""

    c: np.ndarray
    outputs: np.ndarray

    @property
    def m(self) -> int:
        return self.c.shape[0]

    @property
    def horizon(self) -> int:
        return self.outputs.shape[0]


@dataclass(frozen=True)
class NoiseConfig:
    """Decaying-noise configuration with variance law 1/(t+1)^2 per axis.

    ``scale`` multiplies the standard deviation and exists so tests can
    force the degenerate zero-noise case; the nominal law has scale 1.
    """

    mode: str
    seed: int
    runs: int = 1
    scale: float = 1.0

    def __post_init__(self):
        if self.mode not in (ADJACENT, INDEPENDENT):
            raise ValueError(f"unknown noise mode {self.mode!r}")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.scale < 0:
            raise ValueError("scale must be nonnegative")


def simulate(w_eff: np.ndarray, x0: np.ndarray, horizon: int) -> Trajectory:
    """Iterate x_{t+1} = W_eff x_t for ``horizon`` steps."""
    w_eff = np.asarray(w_eff, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    n = x0.shape[0]
    if w_eff.shape != (n, n):
        raise DimensionMismatch("state and matrix dimensions disagree")
    if horizon < 1:
        raise DimensionMismatch("horizon must be at least 1")
    states = np.empty((horizon + 1, n))
    states[0] = x0
    for t in range(horizon):
        states[t + 1] = w_eff @ states[t]
    return Trajectory(states)


def observe(c: np.ndarray, traj: Trajectory) -> ObservationRecord:
    """Apply the observation matrix to x_0..x_{T-1}."""
    c = np.asarray(c, dtype=float)
    if c.ndim != 2 or c.shape[1] != traj.n:
        raise DimensionMismatch("observation matrix width must equal the state size")
    outputs = traj.states[:-1] @ c.T
    return ObservationRecord(c=c, outputs=outputs)


def observability_matrix(w_eff: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Stack of C W_eff^k for k = 0..n-1, shape (n m, n)."""
    w_eff = np.asarray(w_eff, dtype=float)
    c = np.asarray(c, dtype=float)
    n = w_eff.shape[0]
    if c.shape[1] != n:
        raise DimensionMismatch("observation matrix width must equal the state size")
    blocks = []
    block = c
    for _ in range(n):
        blocks.append(block)
        block = block @ w_eff
    return np.vstack(blocks)


def build_hankel(obs: ObservationRecord, n: int) -> np.ndarray:
    """Block Hankel of depth n: column t stacks y_t..y_{t+n-1}.

    Shape (n m, T - n + 1).  On noiseless data this factors exactly as
    Q_o [x_0 .. x_{T-n}].
    """
    t_total, m = obs.outputs.shape
    if t_total < n * m + n - 1:
        raise HorizonTooShort(f"need at least {n * m + n - 1} observations, got {t_total}")
    cols = t_total - n + 1
    windows = np.lib.stride_tricks.sliding_window_view(obs.outputs, (n, m))
    # windows[t, 0] is the (n, m) block y_t..y_{t+n-1}; flattening row-major
    # stacks the outputs in time order.
    return windows[:cols, 0].reshape(cols, n * m).T.copy()


def hankel_shift_pair(hankel: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Drop the last / first column to form the shifted Hankel pair."""
    if hankel.shape[1] < 2:
        raise HorizonTooShort("Hankel matrix needs at least two columns to shift")
    return hankel[:, :-1], hankel[:, 1:]


def simulate_noisy(
    w: np.ndarray, x0: np.ndarray, horizon: int, cfg: NoiseConfig, run: int = 0
) -> Trajectory:
    """Noise-adding baseline trajectory, bit-reproducible per (seed, run).

    Adjacent mode uses theta_t = w_t - w_{t-1} with w_{-1} = 0 so the
    accumulated noise telescopes; independent mode injects w_t directly.
    """
    w = np.asarray(w, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    n = x0.shape[0]
    if w.shape != (n, n):
        raise DimensionMismatch("state and matrix dimensions disagree")
    rng = np.random.default_rng((cfg.seed, run))
    states = np.empty((horizon + 1, n))
    states[0] = x0
    prev_noise = np.zeros(n)
    for t in range(horizon):
        noise = cfg.scale / (t + 1.0) * rng.standard_normal(n)
        if cfg.mode == ADJACENT:
            states[t + 1] = w @ states[t] + noise - prev_noise
            prev_noise = noise
        else:
            states[t + 1] = w @ states[t] + noise
    return Trajectory(states)


def consensus_hit_time(traj: Trajectory, tol: float = 1e-12) -> int | None:
    """First t with ||x_{t+1} - x_t||_inf < tol, or None if never reached."""
    diffs = np.max(np.abs(np.diff(traj.states, axis=0)), axis=1)
    hits = np.nonzero(diffs < tol)[0]
    return int(hits[0]) if hits.size else None


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------


def trajectory_to_csv(traj: Trajectory) -> str:
    buf = io.StringIO()
    n = traj.n
    buf.write("t," + ",".join(f"x{i + 1}" for i in range(n)) + "\n")
    for t, row in enumerate(traj.states):
        buf.write(f"{t}," + ",".join(f"{v:.17g}" for v in row) + "\n")
    return buf.getvalue()


def observation_to_csv(obs: ObservationRecord) -> str:
    buf = io.StringIO()
    m = obs.m
    buf.write("t," + ",".join(f"y{i + 1}" for i in range(m)) + "\n")
    for t, row in enumerate(obs.outputs):
        buf.write(f"{t}," + ",".join(f"{v:.17g}" for v in row) + "\n")
    return buf.getvalue()
