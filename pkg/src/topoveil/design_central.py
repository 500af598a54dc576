"""Centralized feedback designs.

Four constructions, all returning a feedback matrix K that preserves the
consensus point of the nominal network:

* ``design_unobservable`` makes the observed pair (W+K, C) unobservable,
  so the observation Hankel matrix is rank deficient for every initial
  state.
* ``design_invariant_subspace`` removes selected eigenmodes of W so the
  state trajectory is trapped in a proper invariant subspace.
* ``design_kernel_pb`` draws K from the sparsity-restricted kernel of the
  consensus-preservation constraints, biasing full-observation least
  squares away from W.
* ``design_laplacian`` is the scaled negative-Laplacian baseline, which
  leaks the off-diagonal weights up to a scalar.

Off-diagonal entries of K are confined to the support of W; diagonal
entries are always free (the row-sum and stationarity constraints couple
them to the rest of the row).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AlphaTooLarge,
    Infeasible,
    NoValidSubset,
    NotDiagonalizable,
    NumericalFailure,
    RefinementInfeasible,
    ScalingFailed,
)
from .dynamics import observability_matrix
from .lincore import (
    LinearFeasibilityProblem,
    SpectralDecomposition,
    eigen_decompose,
    nullspace_basis,
    numerical_rank,
    solve_feasibility,
    spectral_radius_excluding_one,
)
from .netgraph import Topology

_EQ_TOL = 1e-9
_MODULUS_TOL = 1e-9


@dataclass(frozen=True)
class ConvergenceReport:
    """Outcome of the consensus-preservation checks for one candidate K."""

    row_sum_zero: bool
    row_sum_residual: float
    pi_annihilation: bool
    pi_residual: float
    nonneg: bool
    min_entry: float
    eig_moduli_ok: bool
    max_other_modulus: float

    @property
    def all_ok(self) -> bool:
        return self.row_sum_zero and self.pi_annihilation and self.nonneg and self.eig_moduli_ok

    def to_dict(self) -> dict:
        return {
            "row_sum_zero": self.row_sum_zero,
            "row_sum_residual": self.row_sum_residual,
            "pi_annihilation": self.pi_annihilation,
            "pi_residual": self.pi_residual,
            "nonneg": self.nonneg,
            "min_entry": self.min_entry,
            "eig_moduli_ok": self.eig_moduli_ok,
            "max_other_modulus": self.max_other_modulus,
        }

    @staticmethod
    def from_dict(obj: dict) -> "ConvergenceReport":
        return ConvergenceReport(
            bool(obj["row_sum_zero"]), float(obj["row_sum_residual"]),
            bool(obj["pi_annihilation"]), float(obj["pi_residual"]),
            bool(obj["nonneg"]), float(obj["min_entry"]),
            bool(obj["eig_moduli_ok"]), float(obj["max_other_modulus"]),
        )


@dataclass(frozen=True)
class EigenmodeSelection:
    """Removed eigenmode indices plus the zero-pattern constraint matrix.

    Indices refer to positions in the sorted spectral decomposition, with
    the consensus eigenvalue at position 0, so valid values are 1..n-1.
    Row l of ``h_matrix`` holds lambda_i p_i(r_l) q_i(c_l) for the l-th
    zero entry (r_l, c_l) of W.
    """

    indices: frozenset[int]
    h_matrix: np.ndarray


@dataclass(frozen=True)
class FeedbackMatrix:
    """A designed feedback K with its verification report."""

    k: np.ndarray
    method: str
    verification: ConvergenceReport
    selection: EigenmodeSelection | None = None
    info: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.k.shape[0]

    def modified(self, topo: Topology) -> np.ndarray:
        return topo.w + self.k


def check_convergence(topo: Topology, k: np.ndarray) -> ConvergenceReport:
    """Evaluate the consensus-preservation conditions for W + K.

    Checks K 1 = 0 and pi^T K = 0 at 1e-9, entrywise nonnegativity of
    W + K, and that every non-unit eigenvalue of W + K has modulus below
    1 - 1e-9.  Failures are reported, never raised.
    """
    k = np.asarray(k, dtype=float)
    w_mod = topo.w + k
    row_residual = float(np.max(np.abs(k.sum(axis=1)))) if k.size else 0.0
    pi = topo.pi()
    pi_residual = float(np.max(np.abs(pi @ k)))
    min_entry = float(np.min(w_mod))

    vals = np.linalg.eigvals(w_mod)
    unit_pos = int(np.argmin(np.abs(vals - 1.0)))
    others = np.delete(vals, unit_pos)
    max_other = float(np.max(np.abs(others))) if others.size else 0.0
    moduli_ok = abs(vals[unit_pos] - 1.0) <= _EQ_TOL and max_other < 1.0 - _MODULUS_TOL

    return ConvergenceReport(
        row_sum_zero=row_residual <= _EQ_TOL,
        row_sum_residual=row_residual,
        pi_annihilation=pi_residual <= _EQ_TOL,
        pi_residual=pi_residual,
        nonneg=min_entry >= -_EQ_TOL,
        min_entry=min_entry,
        eig_moduli_ok=moduli_ok,
        max_other_modulus=max_other,
    )


# ---------------------------------------------------------------------------
# Constraint-assembly helpers over the free entries of K
# ---------------------------------------------------------------------------


def _free_positions(topo: Topology, include_diagonal: bool) -> list[tuple[int, int]]:
    """Entries of K allowed to be nonzero, in column-major order."""
    n = topo.n
    positions = []
    for j in range(n):
        for i in range(n):
            if topo.w[i, j] != 0.0 or (include_diagonal and i == j):
                positions.append((i, j))
    return positions


def _embed(values: np.ndarray, positions: list[tuple[int, int]], n: int) -> np.ndarray:
    k = np.zeros((n, n))
    for val, (i, j) in zip(values, positions):
        k[i, j] = val
    return k


def _row_sum_block(positions, n):
    a = np.zeros((n, len(positions)))
    for col, (i, _) in enumerate(positions):
        a[i, col] = 1.0
    return a


def _pi_block(positions, pi, n):
    a = np.zeros((n, len(positions)))
    for col, (i, j) in enumerate(positions):
        a[j, col] = pi[i]
    return a


def _kv_block(positions, v, n):
    a = np.zeros((n, len(positions)))
    for col, (i, j) in enumerate(positions):
        a[i, col] = v[j]
    return a


def _modulus_ok(w_mod: np.ndarray) -> bool:
    vals = np.linalg.eigvals(w_mod)
    unit_pos = int(np.argmin(np.abs(vals - 1.0)))
    if abs(vals[unit_pos] - 1.0) > _EQ_TOL:
        return False
    others = np.delete(vals, unit_pos)
    return others.size == 0 or float(np.max(np.abs(others))) < 1.0 - _MODULUS_TOL


# ---------------------------------------------------------------------------
# Theorem-1-style design: make the observed pair unobservable
# ---------------------------------------------------------------------------


def design_unobservable(topo: Topology, c: np.ndarray) -> FeedbackMatrix:
    """Feedback that makes (W+K, C) unobservable while preserving consensus.

    Picks a direction v in ker(C) (preferring ker(W) & ker(C)) and forces
    (W+K) v = 0, so the observability matrix annihilates v and the
    observation Hankel matrix is rank deficient for every initial state.

    Raises
    ------
    Infeasible
        If ker(C) is trivial, or the constraint system only admits K = 0.
    ScalingFailed
        If no scaling of the candidate passes nonnegativity and the
        eigenvalue-modulus check.
    """
    c = np.atleast_2d(np.asarray(c, dtype=float))
    n = topo.n
    if c.shape[1] != n:
        raise Infeasible("observation matrix width must equal the node count")
    c_kernel = nullspace_basis(c)
    if c_kernel.shape[1] == 0:
        raise Infeasible("ker(C) trivial")

    shared = nullspace_basis(np.vstack([topo.w, c]))
    if shared.shape[1] > 0:
        v = shared[:, 0]
        result = _unobservable_homogeneous(topo, c, v)
        if result is not None:
            return result

    # Stationarity of pi under W+K together with (W+K) v = 0 forces
    # pi^T v = 0, so restrict the choice of v in ker(C) accordingly.
    pi = topo.pi()
    candidates = []
    projected = nullspace_basis(np.vstack([c, pi[None, :]]))
    candidates.extend(projected[:, j] for j in range(projected.shape[1]))
    if projected.shape[1] == 0:
        candidates.extend(c_kernel[:, j] for j in range(c_kernel.shape[1]))
    last_error: Infeasible | None = None
    for v in candidates:
        try:
            return _unobservable_feasibility(topo, c, v)
        except Infeasible as exc:
            last_error = exc
    raise last_error if last_error is not None else Infeasible(
        "feasibility system for the unobservable design has no solution"
    )


def _finalize_unobservable(topo, c, k, v, path) -> FeedbackMatrix:
    report = check_convergence(topo, k)
    if not report.all_ok:
        raise NumericalFailure("unobservable design failed final verification")
    q_rank = numerical_rank(observability_matrix(topo.w + k, c))
    if q_rank >= topo.n:
        raise NumericalFailure("observability matrix kept full rank")
    return FeedbackMatrix(
        k=k, method="unobservable", verification=report,
        info={"path": path, "kernel_vector": v.tolist(), "q_o_rank": q_rank},
    )


def _unobservable_homogeneous(topo, c, v) -> FeedbackMatrix | None:
    """Path for v in ker(W) & ker(C): scale a kernel element of the
    homogeneous system {K1=0, pi K=0, sparsity, Kv=0} until W+K >= 0 and
    the moduli pass.  Returns None when the system only admits K = 0."""
    n = topo.n
    positions = _free_positions(topo, include_diagonal=True)
    pi = topo.pi()
    system = np.vstack([
        _row_sum_block(positions, n),
        _pi_block(positions, pi, n),
        _kv_block(positions, v, n),
    ])
    basis = nullspace_basis(system)
    if basis.shape[1] == 0:
        return None

    rng = np.random.default_rng(0)
    candidates = []
    for col in range(basis.shape[1]):
        candidates.append(basis[:, col])
        candidates.append(-basis[:, col])
    for _ in range(8):
        candidates.append(basis @ rng.standard_normal(basis.shape[1]))

    w_norm = np.linalg.norm(topo.w)
    for cand in candidates:
        k0 = _embed(cand, positions, n)
        k0 *= w_norm / np.linalg.norm(k0)
        scale = 1.0
        for _ in range(60):
            k = scale * k0
            w_mod = topo.w + k
            if np.min(w_mod) >= -1e-12 and _modulus_ok(w_mod):
                return _finalize_unobservable(topo, c, k, v, path="homogeneous")
            scale *= 0.5
    raise ScalingFailed("no scaling of the homogeneous kernel element passed")


def _unobservable_feasibility(topo, c, v) -> FeedbackMatrix:
    """Path for v in ker(C) only: solve the linear feasibility problem
    {K1=0, pi K=0, sparsity, Kv=-Wv, W+K>=0}, shrinking the homogeneous
    component if the eigenvalue moduli fail."""
    n = topo.n
    positions = _free_positions(topo, include_diagonal=True)
    pi = topo.pi()
    eq_lhs = np.vstack([
        _row_sum_block(positions, n),
        _pi_block(positions, pi, n),
        _kv_block(positions, v, n),
    ])
    eq_rhs = np.concatenate([np.zeros(2 * n), -topo.w @ v])
    w_free = np.array([topo.w[i, j] for (i, j) in positions])
    problem = LinearFeasibilityProblem(
        equality_lhs=eq_lhs,
        equality_rhs=eq_rhs,
        inequality_lhs=-np.eye(len(positions)),
        inequality_rhs=w_free,
    )
    x = solve_feasibility(problem)
    if x is None:
        raise Infeasible("feasibility system for the unobservable design has no solution")
    if np.max(np.abs(x)) < 1e-12:
        raise Infeasible("only the trivial feedback solves the unobservable design")

    # null(eq_lhs) is the homogeneous system {K1=0, pi K=0, Kv=0}.
    null_basis = nullspace_basis(eq_lhs)
    k = _embed(x, positions, n)
    if np.min(topo.w + k) >= -1e-12 and _modulus_ok(topo.w + k):
        return _finalize_unobservable(topo, c, k, v, path="feasibility")

    # Shrink the kernel component toward the minimum-norm solution; the
    # inhomogeneous part (and hence (W+K)v = 0) is untouched.
    coords = null_basis.T @ x if null_basis.shape[1] else np.zeros(0)
    scale = 1.0
    for _ in range(40):
        scale *= 0.5
        x_try = x - (1.0 - scale) * (null_basis @ coords if coords.size else 0.0)
        k = _embed(x_try, positions, n)
        w_mod = topo.w + k
        if np.min(w_mod) >= -1e-12 and _modulus_ok(w_mod):
            return _finalize_unobservable(topo, c, k, v, path="feasibility")
    raise ScalingFailed("no shrink of the feasibility solution passed the moduli check")


# ---------------------------------------------------------------------------
# Theorem-2-style design: eigenmode removal
# ---------------------------------------------------------------------------


def _conjugate_atoms(dec: SpectralDecomposition) -> list[tuple[int, ...]]:
    """Group non-consensus eigenvalue indices, pairing conjugates."""
    n = dec.n
    used = set()
    atoms: list[tuple[int, ...]] = []
    for i in range(1, n):
        if i in used:
            continue
        lam = dec.eigenvalues[i]
        if abs(lam.imag) <= 1e-10:
            atoms.append((i,))
            used.add(i)
            continue
        partner = None
        best = np.inf
        for j in range(i + 1, n):
            if j in used:
                continue
            dist = abs(dec.eigenvalues[j] - np.conj(lam))
            if dist < best:
                best, partner = dist, j
        if partner is None or best > 1e-6:
            raise NumericalFailure("could not pair a complex eigenvalue with its conjugate")
        atoms.append((i, partner))
        used.update((i, partner))
    return atoms


def _atom_subsets(atoms: list[tuple[int, ...]]):
    """Subsets of atoms with total index count >= 2, smallest first."""
    from itertools import combinations

    subsets = []
    for r in range(1, len(atoms) + 1):
        for combo in combinations(range(len(atoms)), r):
            idx = tuple(i for a in combo for i in atoms[a])
            if len(idx) >= 2:
                subsets.append(idx)
    subsets.sort(key=lambda idx: (len(idx), idx))
    return subsets


def design_invariant_subspace(topo: Topology, prefer_unrefined: bool = True) -> FeedbackMatrix:
    """Remove a subset of eigenmodes of W so trajectories stay in a
    proper invariant subspace.

    Searches subsets of the non-consensus spectrum (conjugate pairs kept
    together, smallest cardinality first) for one whose combined mode
    sum vanishes on every zero entry of W, builds
    K = -sum_{i in I_s} lambda_i p_i q_i^T, and, when W + K has negative
    entries, adds a refinement Delta K that restores nonnegativity
    without reintroducing the removed modes.

    With ``prefer_unrefined`` (the default) the subset scan skips past
    candidates whose bare K_c violates nonnegativity when a later subset
    avoids the refinement entirely; refinement keeps the removed modes
    in the kernel of W + K but perturbs the untouched eigenvalues, so an
    unrefined K preserves strictly more structure.  Passing False takes
    the first valid subset and refines it when needed.

    Raises
    ------
    NotDiagonalizable
        If W has no eigenvector basis at tolerance.
    NoValidSubset
        If no subset satisfies the zero-pattern condition.
    RefinementInfeasible
        If the nonnegativity refinement has no solution.
    """
    dec = eigen_decompose(topo.w)
    if not dec.diagonalizable:
        raise NotDiagonalizable("eigenmode removal needs a diagonalizable W")
    n = topo.n
    zero_positions = [(i, j) for i in range(n) for j in range(n) if topo.w[i, j] == 0.0]

    h_matrix = np.zeros((len(zero_positions), n), dtype=complex)
    for ell, (r, c_idx) in enumerate(zero_positions):
        for i in range(n):
            h_matrix[ell, i] = dec.eigenvalues[i] * dec.right_vectors[r, i] * dec.left_vectors[c_idx, i]

    atoms = _conjugate_atoms(dec)
    valid: list[tuple[int, ...]] = []
    for idx in _atom_subsets(atoms):
        if zero_positions:
            combined = h_matrix[:, list(idx)].sum(axis=1)
            if np.max(np.abs(combined)) >= 1e-9:
                continue
        valid.append(idx)
    if not valid:
        raise NoValidSubset("no eigenmode subset vanishes on the zero pattern of W")

    def build_kc(idx: tuple[int, ...]) -> np.ndarray:
        mode_sum = np.zeros((n, n), dtype=complex)
        for i in idx:
            mode_sum += dec.mode(i)
        if np.max(np.abs(mode_sum.imag)) > 1e-8:
            raise NumericalFailure("eigenmode sum is not real; conjugate pairing broke")
        k_c = -mode_sum.real
        for (i, j) in zero_positions:
            k_c[i, j] = 0.0
        return k_c

    chosen = valid[0]
    k_c = build_kc(chosen)
    if prefer_unrefined and np.min(topo.w + k_c) < -1e-12:
        for idx in valid[1:]:
            candidate = build_kc(idx)
            if np.min(topo.w + candidate) >= -1e-12:
                chosen, k_c = idx, candidate
                break

    selection = EigenmodeSelection(indices=frozenset(chosen), h_matrix=h_matrix)
    k = k_c
    refined = False
    if np.min(topo.w + k_c) < -1e-12:
        k = k_c + _refinement(topo, dec, chosen, k_c)
        refined = True

    report = check_convergence(topo, k)
    if not report.all_ok:
        raise NumericalFailure("eigenmode-removal design failed final verification")
    return FeedbackMatrix(
        k=k, method="invariant_subspace", verification=report, selection=selection,
        info={"removed_eigenvalues": [complex(dec.eigenvalues[i]) for i in chosen],
              "refined": refined},
    )


def _refinement(topo, dec, chosen, k_c) -> np.ndarray:
    """Solve for Delta K restoring W + K_c + Delta K >= 0 on the support
    of W while keeping consensus and the removed invariant subspace."""
    n = topo.n
    positions = _free_positions(topo, include_diagonal=False)
    pi = topo.pi()
    blocks = [_row_sum_block(positions, n), _pi_block(positions, pi, n)]
    seen = set()
    for i in chosen:
        if i in seen:
            continue
        p = dec.right_vectors[:, i]
        blocks.append(_kv_block(positions, p.real, n))
        if np.max(np.abs(p.imag)) > 1e-12:
            blocks.append(_kv_block(positions, p.imag, n))
            # The conjugate partner's constraint is the same two blocks.
            for j in chosen:
                if j != i and abs(dec.eigenvalues[j] - np.conj(dec.eigenvalues[i])) < 1e-6:
                    seen.add(j)
        seen.add(i)
    eq_lhs = np.vstack(blocks)
    eq_rhs = np.zeros(eq_lhs.shape[0])
    base = np.array([(topo.w + k_c)[i, j] for (i, j) in positions])
    problem = LinearFeasibilityProblem(
        equality_lhs=eq_lhs,
        equality_rhs=eq_rhs,
        inequality_lhs=-np.eye(len(positions)),
        inequality_rhs=base,
    )
    x = solve_feasibility(problem)
    if x is None:
        raise RefinementInfeasible("nonnegativity refinement has no solution")
    return _embed(x, positions, n)


# ---------------------------------------------------------------------------
# Theorem-3-style design: kernel of the vectorized constraints
# ---------------------------------------------------------------------------


def constraint_matrix(topo: Topology) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """The 2n x z matrix of vectorized consensus constraints on the
    support of W, with the column position list (column-major order)."""
    n = topo.n
    pi = topo.pi()
    m_full = np.vstack([
        np.kron(np.ones((1, n)), np.eye(n)),
        np.kron(np.eye(n), pi[None, :]),
    ])
    positions = [(i, j) for j in range(n) for i in range(n) if topo.w[i, j] != 0.0]
    cols = [j * n + i for (i, j) in positions]
    return m_full[:, cols], positions


def design_kernel_pb(topo: Topology, seed: int = 0, combinations: int = 64) -> FeedbackMatrix:
    """Nontrivial K from the kernel of the support-restricted constraints.

    Builds the vectorized constraint matrix, checks the rank condition,
    combines kernel basis vectors (64 seeded random combinations plus the
    plain sum, keeping the one with the most nonzero entries), and scales
    the winner down until W + K is nonnegative and contractive.

    Raises
    ------
    Infeasible
        If the restricted constraint matrix has full column rank.
    ScalingFailed
        If no epsilon in the bisection passes both checks.
    """
    m_tilde, positions = constraint_matrix(topo)
    z = len(positions)
    if numerical_rank(m_tilde) >= z:
        raise Infeasible("support-restricted constraint matrix has full column rank")
    basis = nullspace_basis(m_tilde)

    rng = np.random.default_rng(seed)
    candidates = [np.ones(basis.shape[1])]
    candidates += [rng.standard_normal(basis.shape[1]) for _ in range(combinations)]
    best_theta = None
    best_count = -1
    for coeff in candidates:
        theta = basis @ coeff
        count = int(np.count_nonzero(np.abs(theta) > 1e-10))
        if count > best_count:
            best_count, best_theta = count, theta

    n = topo.n
    k_star = _embed(best_theta, positions, n)
    inf_norm = np.max(np.abs(k_star).sum(axis=1))
    if inf_norm < 1e-14:
        raise Infeasible("kernel combination collapsed to zero")
    k_star /= inf_norm

    def passes(eps: float) -> bool:
        w_mod = topo.w + eps * k_star
        return np.min(w_mod) >= -1e-12 and _modulus_ok(w_mod)

    epsilon = 1.0
    if not passes(epsilon):
        lo, hi = 0.0, 1.0
        found = None
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if mid == 0.0:
                break
            if passes(mid):
                found, lo = mid, mid
            else:
                hi = mid
        if found is None:
            raise ScalingFailed("no epsilon in (0, 1] passed nonnegativity and moduli")
        epsilon = found

    k = epsilon * k_star
    report = check_convergence(topo, k)
    if not report.all_ok:
        raise NumericalFailure("kernel design failed final verification")
    return FeedbackMatrix(
        k=k, method="kernel_pb", verification=report,
        info={"epsilon": epsilon, "kernel_dim": int(basis.shape[1]),
              "support_count": best_count},
    )


# ---------------------------------------------------------------------------
# Laplacian baseline
# ---------------------------------------------------------------------------


def laplacian_gain_bound(topo: Topology) -> float:
    """Largest provably safe Laplacian gain for this network.

    The spectral part (1 - r_max) / (1 + r_max) keeps the non-unit
    moduli below one; the diagonal part min_i W_ii / (1 - W_ii) keeps
    (1 + alpha) W_ii - alpha nonnegative.  The second part is absent
    from the usual statement of the bound but binds whenever a diagonal
    entry is small.
    """
    r_max = spectral_radius_excluding_one(topo.w)
    bound = (1.0 - r_max) / (1.0 + r_max)
    diag = np.diag(topo.w)
    for w_ii in diag:
        if w_ii < 1.0:
            bound = min(bound, w_ii / (1.0 - w_ii))
    return bound


def design_laplacian(topo: Topology, alpha: float | None = None) -> FeedbackMatrix:
    """Scaled negative-Laplacian feedback K = -alpha (I - W).

    Without an explicit gain, alpha is half the safe gain bound of
    :func:`laplacian_gain_bound`.  The convergence report is verified
    before returning.
    """
    r_max = spectral_radius_excluding_one(topo.w)
    bound = laplacian_gain_bound(topo)
    if alpha is None:
        alpha = 0.5 * bound
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    k = -alpha * (np.eye(topo.n) - topo.w)
    report = check_convergence(topo, k)
    if not report.all_ok:
        failing = [name for name, ok in [
            ("row_sum_zero", report.row_sum_zero),
            ("pi_annihilation", report.pi_annihilation),
            ("nonneg", report.nonneg),
            ("eig_moduli", report.eig_moduli_ok),
        ] if not ok]
        raise AlphaTooLarge(
            f"alpha={alpha:.6g} fails {failing} (spectral bound {bound:.6g}, r_max {r_max:.6g})"
        )
    return FeedbackMatrix(
        k=k, method="laplacian", verification=report,
        info={"alpha": alpha, "bound": bound, "r_max": r_max},
    )


# ---------------------------------------------------------------------------
# Serialization (mirrors the Topology JSON with method/verification added)
# ---------------------------------------------------------------------------


def feedback_to_json_dict(fb: FeedbackMatrix) -> dict:
    return {
        "n": fb.n,
        "k": [[float(v) for v in row] for row in fb.k],
        "method": fb.method,
        "verification": fb.verification.to_dict(),
    }


def feedback_dumps(fb: FeedbackMatrix) -> str:
    return json.dumps(feedback_to_json_dict(fb))


def feedback_from_json_dict(obj: dict) -> FeedbackMatrix:
    k = np.array(obj["k"], dtype=float)
    if k.shape != (int(obj["n"]), int(obj["n"])):
        raise ValueError("feedback JSON field n disagrees with the matrix shape")
    return FeedbackMatrix(
        k=k, method=str(obj["method"]),
        verification=ConvergenceReport.from_dict(obj["verification"]),
    )


def feedback_loads(text: str) -> FeedbackMatrix:
    return feedback_from_json_dict(json.loads(text))
