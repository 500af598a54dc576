"""Observer-side estimators and the privacy/performance metrics.

The observer is ideal: with full-rank noiseless data the least-squares
estimate recovers the effective update matrix exactly, so any surviving
error is a property of the data, not of estimator weakness.  Partial
observations go through Hankel-based subspace identification, which
recovers the update matrix up to a similarity transformation; the noise
baselines are attacked with a two-lag instrumental estimator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import HorizonTooShort
from .dynamics import Trajectory
from .lincore import DEFAULT_RANK_TOL, group_inverse_i_minus, left_dominant_vector, numerical_rank
from .netgraph import Topology

DIRECT = "direct"
SIMILARITY = "similarity_class"


@dataclass(frozen=True)
class IdentificationResult:
    estimate: np.ndarray
    mode: str
    data_rank: int
    rank_deficient: bool
    ridge_applied: bool = False


@dataclass(frozen=True)
class PrivacyScore:
    er1: float
    er2: float
    gamma_star: float
    state_dev_sup: float
    pi_dev: float
    sparsity_rate: float
    pi_dev_bound: float
    bound_holds: bool
    gamma_clamped: bool


def ols_estimate(traj: Trajectory) -> IdentificationResult:
    """Least-squares estimate X_{1:T} X_{0:T-1}^+ of the update matrix."""
    n = traj.n
    if traj.horizon < n:
        raise HorizonTooShort(f"least squares needs horizon >= {n}")
    x_past = traj.states[:-1].T
    x_next = traj.states[1:].T
    rank = numerical_rank(x_past)
    estimate = x_next @ np.linalg.pinv(x_past, rcond=DEFAULT_RANK_TOL)
    return IdentificationResult(
        estimate=estimate, mode=DIRECT, data_rank=rank, rank_deficient=rank < n
    )


def subspace_identify(
    hankel_pair: tuple[np.ndarray, np.ndarray], n: int
) -> IdentificationResult:
    """Similarity-class estimate from a shifted block-Hankel pair.

    Truncated SVD of the past Hankel gives Q_hat = U_n S_n^{1/2} and
    X_hat = S_n^{1/2} V_n^T; the estimate is Q_hat^+ Y_plus X_hat^+.
    When the past Hankel has numerical rank below n the result is
    flagged rank deficient (the privacy success case) and the truncated
    estimate is returned as-is.
    """
    y_minus, y_plus = hankel_pair
    y_minus = np.asarray(y_minus, dtype=float)
    y_plus = np.asarray(y_plus, dtype=float)
    if y_minus.shape != y_plus.shape:
        raise ValueError("the shifted Hankel pair must share one shape")
    if y_minus.shape[1] < y_minus.shape[0] - 1 or y_minus.shape[1] < 1:
        raise HorizonTooShort("too few Hankel columns for the shifted pair")

    u, sigma, vt = np.linalg.svd(y_minus, full_matrices=False)
    rank = int(np.count_nonzero(sigma > DEFAULT_RANK_TOL * sigma[0])) if sigma[0] > 0 else 0
    sqrt_sigma = np.sqrt(sigma[:n])
    q_hat = u[:, :n] * sqrt_sigma
    x_hat = sqrt_sigma[:, None] * vt[:n]
    estimate = (
        np.linalg.pinv(q_hat, rcond=DEFAULT_RANK_TOL)
        @ y_plus
        @ np.linalg.pinv(x_hat, rcond=DEFAULT_RANK_TOL)
    )
    return IdentificationResult(
        estimate=estimate, mode=SIMILARITY, data_rank=rank, rank_deficient=rank < n
    )


def lag_estimate(traj: Trajectory) -> IdentificationResult:
    """Two-lag estimator Gamma(2) Gamma(1)^{-1}, robust to adjacent noise.

    Gamma(1) averages x_t x_{t-1}^T over t = 2..T and Gamma(2) averages
    x_t x_{t-2}^T over t = 3..T.  A singular Gamma(1) gets a flagged
    ridge of 1e-10 times its Frobenius norm.
    """
    n = traj.n
    t_end = traj.horizon
    if t_end < n + 3:
        raise HorizonTooShort(f"lag estimator needs horizon >= {n + 3}")
    x = traj.states
    gamma1 = x[2 : t_end + 1].T @ x[1:t_end] / (t_end - 1)
    gamma2 = x[3 : t_end + 1].T @ x[1 : t_end - 1] / (t_end - 2)
    rank = numerical_rank(gamma1)
    ridge = rank < n
    if ridge:
        gamma1 = gamma1 + 1e-10 * np.linalg.norm(gamma1) * np.eye(n)
    estimate = np.linalg.solve(gamma1.T, gamma2.T).T
    return IdentificationResult(
        estimate=estimate, mode=DIRECT, data_rank=rank,
        rank_deficient=rank < n, ridge_applied=ridge,
    )


def _off_diagonal(a: np.ndarray) -> np.ndarray:
    out = a.copy()
    np.fill_diagonal(out, 0.0)
    return out


def score(
    estimate: IdentificationResult,
    truth: Topology,
    traj: Trajectory,
    baseline: Trajectory,
    k: np.ndarray,
) -> PrivacyScore:
    """All privacy and performance metrics for one experiment cell.

    er2 minimizes ||gamma W_hat_nd - W_nd||_F over gamma > 0 with the
    closed form gamma* = <W_hat_nd, W_nd> / ||W_hat_nd||^2; a nonpositive
    correlation clamps er2 to 1 (the value at gamma -> 0+) and records
    gamma* = 0 with the clamp flag set.  The stationary deviation is
    checked against its group-inverse bound.
    """
    w = truth.w
    w_hat = estimate.estimate
    k = np.asarray(k, dtype=float)
    er1 = float(np.linalg.norm(w_hat - w) / np.linalg.norm(w))

    w_nd = _off_diagonal(w)
    w_hat_nd = _off_diagonal(w_hat)
    dot = float(np.sum(w_hat_nd * w_nd))
    denom = float(np.sum(w_hat_nd * w_hat_nd))
    w_nd_norm = float(np.linalg.norm(w_nd))
    if dot <= 0.0 or denom == 0.0:
        gamma_star, er2, clamped = 0.0, 1.0, True
    else:
        gamma_star = dot / denom
        er2 = float(np.linalg.norm(gamma_star * w_hat_nd - w_nd) / w_nd_norm)
        clamped = False

    steps = min(traj.states.shape[0], baseline.states.shape[0])
    state_dev = float(
        np.max(np.linalg.norm(traj.states[:steps] - baseline.states[:steps], axis=1))
    )

    w_mod = w + k
    pi = truth.pi()
    pi_mod = left_dominant_vector(w_mod)
    pi_dev = float(np.abs(pi - pi_mod).sum())
    sharp = group_inverse_i_minus(w)
    bound = float(
        np.max(np.abs(sharp).sum(axis=1)) * np.max(np.abs(k).sum(axis=1))
    )
    sparsity = float(np.count_nonzero(w_mod == 0.0) / w_mod.size)

    return PrivacyScore(
        er1=er1,
        er2=er2,
        gamma_star=gamma_star,
        state_dev_sup=state_dev,
        pi_dev=pi_dev,
        sparsity_rate=sparsity,
        pi_dev_bound=bound,
        bound_holds=pi_dev <= bound + 1e-12,
        gamma_clamped=clamped,
    )


SCORE_CSV_HEADER = "scenario_id,method,T,run,er1,er2,gamma,state_dev,pi_dev,sparsity"


def score_csv_row(scenario_id: str, method: str, t: int, run: int, s: PrivacyScore) -> str:
    values = [s.er1, s.er2, s.gamma_star, s.state_dev_sup, s.pi_dev, s.sparsity_rate]
    return f"{scenario_id},{method},{t},{run}," + ",".join(f"{v:.17g}" for v in values)
