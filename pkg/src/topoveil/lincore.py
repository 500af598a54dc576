"""Dense numeric kernels used by every feedback design.

Provides the spectral decomposition with biorthogonal left/right
eigenvectors, numerical rank and nullspace via SVD, the group inverse of
I - W, and a self-contained phase-1 simplex for small dense linear
feasibility problems.  All routines are pure functions of their inputs
and target matrices of a few hundred rows at most.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    NoUniqueStationary,
    NonConvergence,
    NotComputable,
    NotContractive,
    NotStochastic,
    NumericalFailure,
)

#: Relative tolerance shared by every rank decision in the library.
DEFAULT_RANK_TOL = 1e-8

_UNIT_EIG_TOL = 1e-8


@dataclass
class SpectralDecomposition:
    """Eigenvalues with biorthogonal right (p_i) and left (q_i) eigenvectors.

    ``right_vectors[:, i]`` and ``left_vectors[:, i]`` satisfy
    ``q_i . p_j = delta_ij`` when ``diagonalizable`` is set.  Eigenvalues
    are sorted by descending modulus; for a row-stochastic input the unit
    eigenvalue comes first with p_1 the all-ones vector and q_1 the
    stationary distribution.
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    diagonalizable: bool

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        """Return sum_i lambda_i p_i q_i^T (complex)."""
        return (self.right_vectors * self.eigenvalues) @ self.left_vectors.T

    def mode(self, i: int) -> np.ndarray:
        """Return the rank-one eigenmode lambda_i p_i q_i^T."""
        p = self.right_vectors[:, i]
        q = self.left_vectors[:, i]
        return self.eigenvalues[i] * np.outer(p, q)


def _is_row_stochastic(a: np.ndarray, tol: float = 1e-9) -> bool:
    if np.any(a < -tol):
        return False
    return bool(np.max(np.abs(a.sum(axis=1) - 1.0)) <= tol)


def _eig_sort_order(eigenvalues: np.ndarray) -> np.ndarray:
    # Descending modulus; among equal moduli the eigenvalue nearest 1
    # first, then a fixed real/imag order so conjugate pairs are stable.
    key = [(-abs(v), abs(v - 1.0), -v.real, -v.imag, i) for i, v in enumerate(eigenvalues)]
    return np.array([i for *_, i in sorted(key)], dtype=int)


def eigen_decompose(a: np.ndarray) -> SpectralDecomposition:
    """Full eigendecomposition with matched left eigenvectors.

    The left eigenvectors are the rows of the inverse of the right
    eigenvector matrix, which makes the two families biorthogonal by
    construction.  When the eigenvector matrix is rank deficient at the
    default rank tolerance the ``diagonalizable`` flag is cleared and the
    left vectors fall back to a pseudo-inverse (reconstruction is then
    not guaranteed).

    Raises
    ------
    NonConvergence
        If the underlying QR iteration fails.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("eigen_decompose expects a square matrix")
    try:
        vals, vecs = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise NonConvergence(f"eigenvalue iteration failed: {exc}") from exc

    order = _eig_sort_order(vals)
    vals = vals[order]
    vecs = vecs[:, order]

    stochastic = _is_row_stochastic(a)
    if stochastic and abs(vals[0] - 1.0) < _UNIT_EIG_TOL:
        # Normalize the consensus mode: p_1 = all-ones, q_1 = pi.
        lead = vecs[:, 0]
        scale = lead.mean()
        if abs(scale) > 1e-12:
            vecs[:, 0] = lead / scale

    # Plain (unconjugated) transpose convention: q_i^T p_j = delta_ij, so
    # the q_i are the rows of inv(P) and conjugate pairs sum to real modes.
    diagonalizable = numerical_rank(vecs) == a.shape[0]
    if diagonalizable:
        left = np.linalg.inv(vecs).T
    else:
        left = np.linalg.pinv(vecs, rcond=DEFAULT_RANK_TOL).T
    return SpectralDecomposition(vals, vecs, left, diagonalizable)


def left_dominant_vector(w: np.ndarray) -> np.ndarray:
    """Stationary distribution pi of a row-stochastic matrix.

    Solves (W^T - I) pi = 0 with the normalization pi^T 1 = 1 by
    replacing the redundant last equation, which is nonsingular whenever
    the unit eigenvalue is simple.

    Raises
    ------
    NotStochastic
        If a row sum is off by more than 1e-9 or an entry is negative.
    NoUniqueStationary
        If the unit eigenvalue is not simple at tolerance.
    """
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    if w.ndim != 2 or w.shape[1] != n:
        raise NotStochastic("weight matrix must be square")
    if np.max(np.abs(w.sum(axis=1) - 1.0)) > 1e-9 or np.any(w < -1e-12):
        raise NotStochastic("matrix is not row-stochastic within 1e-9")

    vals = np.linalg.eigvals(w)
    if np.count_nonzero(np.abs(vals - 1.0) < _UNIT_EIG_TOL) != 1:
        raise NoUniqueStationary("unit eigenvalue of W is not simple")

    system = w.T - np.eye(n)
    system[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    pi = np.linalg.solve(system, rhs)

    pi[np.abs(pi) < 1e-14] = 0.0
    pi = pi / pi.sum()
    residual = np.max(np.abs(pi @ w - pi))
    if residual >= 1e-12:
        # One refinement sweep through the transpose usually suffices.
        for _ in range(50):
            pi = pi @ w
            pi = pi / pi.sum()
            residual = np.max(np.abs(pi @ w - pi))
            if residual < 1e-12:
                break
        else:
            raise NumericalFailure(f"stationary residual {residual:.3e} above 1e-12")
    if np.any(pi < 0):
        pi = np.clip(pi, 0.0, None)
        pi = pi / pi.sum()
    return pi


def numerical_rank(a: np.ndarray, rel_tol: float = DEFAULT_RANK_TOL) -> int:
    """Number of singular values above ``rel_tol`` times the largest."""
    a = np.asarray(a)
    if a.size == 0:
        return 0
    sigma = np.linalg.svd(a, compute_uv=False)
    if sigma[0] == 0.0:
        return 0
    return int(np.count_nonzero(sigma > rel_tol * sigma[0]))


def nullspace_basis(a: np.ndarray, rel_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the (numerical) kernel, one column per direction.

    Returns an ``(n, 0)`` array when ``a`` has full column rank.
    """
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        raise ValueError("nullspace_basis expects a nonempty matrix")
    _, sigma, vt = np.linalg.svd(a, full_matrices=True)
    cols = a.shape[1]
    if sigma.size == 0 or sigma[0] == 0.0:
        rank = 0
    else:
        rank = int(np.count_nonzero(sigma > rel_tol * sigma[0]))
    return vt[rank:, :].T.copy()


def group_inverse_i_minus(w: np.ndarray) -> np.ndarray:
    """Group inverse of A = I - W for a row-stochastic W.

    Uses the spectral form sum_{lambda_i != 1} (1 - lambda_i)^{-1} p_i q_i^T
    when W is diagonalizable and a full-rank factorization of A otherwise.
    The three defining identities are verified to 1e-8 before returning.

    Raises
    ------
    NotComputable
        If the unit eigenvalue of W is not simple.
    """
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    a = np.eye(n) - w

    vals = np.linalg.eigvals(w)
    if np.count_nonzero(np.abs(vals - 1.0) < _UNIT_EIG_TOL) != 1:
        raise NotComputable("group inverse needs a simple unit eigenvalue")

    dec = eigen_decompose(w)
    if dec.diagonalizable:
        keep = np.abs(dec.eigenvalues - 1.0) >= _UNIT_EIG_TOL
        inv_vals = np.zeros(n, dtype=complex)
        inv_vals[keep] = 1.0 / (1.0 - dec.eigenvalues[keep])
        sharp = ((dec.right_vectors * inv_vals) @ dec.left_vectors.T).real
    else:
        # Full-rank factorization A = C R with C = U_r S_r, R = V_r^T;
        # index-1 guarantees R C invertible and A# = C (R C)^-2 R.
        u, sigma, vt = np.linalg.svd(a)
        rank = int(np.count_nonzero(sigma > DEFAULT_RANK_TOL * sigma[0]))
        c = u[:, :rank] * sigma[:rank]
        r = vt[:rank, :]
        rc = r @ c
        sharp = c @ np.linalg.solve(rc, np.linalg.solve(rc, r))

    scale = max(np.linalg.norm(a), 1.0)
    if (
        np.linalg.norm(a @ sharp @ a - a) > 1e-8 * scale
        or np.linalg.norm(sharp @ a @ sharp - sharp) > 1e-8 * max(np.linalg.norm(sharp), 1.0)
        or np.linalg.norm(a @ sharp - sharp @ a) > 1e-8 * scale
    ):
        raise NumericalFailure("group inverse identities not met at 1e-8")
    return sharp


def spectral_radius_excluding_one(w: np.ndarray) -> float:
    """Largest modulus among the non-unit eigenvalues of a stochastic W.

    Raises
    ------
    NotContractive
        If any non-unit eigenvalue has modulus >= 1 at tolerance.
    """
    w = np.asarray(w, dtype=float)
    vals = np.linalg.eigvals(w)
    order = np.argsort(np.abs(vals - 1.0))
    rest = np.delete(vals, order[0])
    if rest.size == 0:
        return 0.0
    r_max = float(np.max(np.abs(rest)))
    if r_max >= 1.0 - 1e-9:
        raise NotContractive(f"second-largest modulus {r_max:.12f} is not below 1")
    return r_max


# ---------------------------------------------------------------------------
# Linear feasibility via phase-1 simplex
# ---------------------------------------------------------------------------


@dataclass
class LinearFeasibilityProblem:
    """Find x with A_eq x = b_eq and A_ub x <= b_ub.

    Rows of the inequality block listed in ``strict_rows`` must be
    satisfied with slack at least ``strictness_margin``.  Variables are
    free (both signs); the solver introduces the sign split internally.
    """

    equality_lhs: np.ndarray
    equality_rhs: np.ndarray
    inequality_lhs: np.ndarray
    inequality_rhs: np.ndarray
    strict_rows: frozenset[int] = field(default_factory=frozenset)
    strictness_margin: float = 1e-6

    def __post_init__(self):
        self.equality_lhs = np.atleast_2d(np.asarray(self.equality_lhs, dtype=float))
        self.equality_rhs = np.atleast_1d(np.asarray(self.equality_rhs, dtype=float))
        self.inequality_lhs = np.atleast_2d(np.asarray(self.inequality_lhs, dtype=float))
        self.inequality_rhs = np.atleast_1d(np.asarray(self.inequality_rhs, dtype=float))
        self.strict_rows = frozenset(self.strict_rows)
        if self.strictness_margin <= 0:
            raise ValueError("strictness_margin must be positive")
        ne = self.equality_lhs.shape[1] if self.equality_lhs.size else 0
        ni = self.inequality_lhs.shape[1] if self.inequality_lhs.size else 0
        if ne and ni and ne != ni:
            raise ValueError("equality and inequality blocks disagree on variable count")
        if self.equality_lhs.size and self.equality_lhs.shape[0] != self.equality_rhs.shape[0]:
            raise ValueError("equality dimensions inconsistent")
        if self.inequality_lhs.size and self.inequality_lhs.shape[0] != self.inequality_rhs.shape[0]:
            raise ValueError("inequality dimensions inconsistent")
        if any(r < 0 or r >= self.inequality_rhs.shape[0] for r in self.strict_rows):
            raise ValueError("strict row index out of range")

    @property
    def num_vars(self) -> int:
        if self.equality_lhs.size:
            return self.equality_lhs.shape[1]
        return self.inequality_lhs.shape[1]


def solve_feasibility(problem: LinearFeasibilityProblem) -> np.ndarray | None:
    """Return a feasible point, or None when the problem is infeasible.

    A dense phase-1 simplex over the split variables x = x+ - x- with
    slacks on the inequalities.  Dantzig pricing with a switch to Bland's
    rule guards against cycling.  Infeasibility is a verdict (None), not
    an error; a stalled iteration raises :class:`NumericalFailure`.
    """
    nv = problem.num_vars
    margin = problem.strictness_margin + 1e-9

    a_eq, b_eq = problem.equality_lhs, problem.equality_rhs
    a_ub = problem.inequality_lhs
    b_ub = problem.inequality_rhs.copy()
    if a_ub.size:
        for r in problem.strict_rows:
            b_ub[r] -= margin

    blocks = []
    rhs_parts = []
    if a_eq.size:
        blocks.append(np.hstack([a_eq, -a_eq, np.zeros((a_eq.shape[0], a_ub.shape[0] if a_ub.size else 0))]))
        rhs_parts.append(b_eq)
    if a_ub.size:
        blocks.append(np.hstack([a_ub, -a_ub, np.eye(a_ub.shape[0])]))
        rhs_parts.append(b_ub)
    if not blocks:
        return np.zeros(nv)

    m_mat = np.vstack(blocks)
    rhs = np.concatenate(rhs_parts)
    m, total = m_mat.shape

    flip = rhs < 0
    m_mat[flip] *= -1.0
    rhs = np.abs(rhs)

    # Tableau with one artificial per row; phase-1 cost = sum of artificials.
    tableau = np.zeros((m + 1, total + m + 1))
    tableau[:m, :total] = m_mat
    tableau[:m, total:total + m] = np.eye(m)
    tableau[:m, -1] = rhs
    tableau[m, :total] = -m_mat.sum(axis=0)
    tableau[m, -1] = -rhs.sum()
    basis = list(range(total, total + m))

    tol = 1e-11
    max_iter = 200 * (m + total) + 1000
    bland_after = 20 * (m + total)
    for iteration in range(max_iter):
        costs = tableau[m, :total + m]
        if iteration < bland_after:
            enter = int(np.argmin(costs))
            if costs[enter] >= -tol:
                break
        else:
            negative = np.nonzero(costs < -tol)[0]
            if negative.size == 0:
                break
            enter = int(negative[0])

        col = tableau[:m, enter]
        positive = col > tol
        if not np.any(positive):
            # Phase-1 objective is bounded below by 0, so an unbounded
            # pivot column means the iteration lost its footing.
            raise NumericalFailure("phase-1 simplex found an unbounded direction")
        ratios = np.full(m, np.inf)
        ratios[positive] = tableau[:m, -1][positive] / col[positive]
        best = np.min(ratios)
        candidates = np.nonzero(ratios <= best + tol * (1 + abs(best)))[0]
        leave = int(min(candidates, key=lambda r: basis[r]))

        pivot = tableau[leave, enter]
        tableau[leave] /= pivot
        other = np.arange(m + 1) != leave
        tableau[other] -= np.outer(tableau[other, enter], tableau[leave])
        basis[leave] = enter
    else:
        raise NumericalFailure("phase-1 simplex stalled (iteration cap)")

    infeas = -tableau[m, -1]
    if infeas > 1e-9 * (1.0 + np.max(np.abs(rhs), initial=0.0)):
        return None

    x_split = np.zeros(total)
    for row, var in enumerate(basis):
        if var < total:
            x_split[var] = tableau[row, -1]
    x = x_split[:nv] - x_split[nv:2 * nv]

    if a_eq.size:
        eq_err = np.max(np.abs(a_eq @ x - b_eq))
        if eq_err > 1e-9 * (1.0 + np.max(np.abs(b_eq), initial=0.0)):
            raise NumericalFailure(f"equality residual {eq_err:.3e} after phase 1")
    if a_ub.size:
        slack = problem.inequality_rhs - a_ub @ x
        if np.min(slack) < -1e-9:
            raise NumericalFailure("inequality violated after phase 1")
        for r in problem.strict_rows:
            if slack[r] < problem.strictness_margin:
                raise NumericalFailure("strict inequality margin not met after phase 1")
    return x
