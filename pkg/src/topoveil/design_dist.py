"""Distributed topology modification under a per-row privacy budget.

The protocol elects a root by max-consensus over randomized beacons
while building BFS depths, then every node rewrites its own row of the
weight matrix with the greedy heuristic: hide the cheapest incoming
edges while twice their mass fits in the budget, compensate the row sum,
and spend the leftover budget distorting the surviving weights.

``optimal_support_count`` gives the closed-form minimum support size and
``brute_force_row_oracle`` re-derives it by exhaustive enumeration; the
three must agree on every instance.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import (
    BudgetDegenerate,
    DeltaTooLarge,
    NoFeasibleCount,
    NumericalFailure,
    TooLarge,
)
from .design_central import FeedbackMatrix, check_convergence
from .dynamics import Trajectory
from .netgraph import Topology

# Alias so tests can count invocations; the heuristic sorts exactly once.
_sorted = sorted

# All three support-count routines decide "can this mass be hidden?" via
# the same predicate so they agree bit-for-bit at constructed budget
# boundaries, where algebraically equal rearrangements differ by an ulp.
_BUDGET_SLACK = 1e-12


def _fits_budget(hidden_mass: float, tau: float) -> bool:
    return 2.0 * hidden_mass <= tau + _BUDGET_SLACK


@dataclass(frozen=True)
class RowDesignProblem:
    """One row's modification problem: weights, mandatory keeps, budget."""

    weights: np.ndarray
    mandatory: frozenset[int]
    tau: float
    delta: float

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "mandatory", frozenset(self.mandatory))
        if weights.ndim != 1 or np.any(weights < 0):
            raise ValueError("weights must be a nonnegative vector")
        if abs(weights.sum() - 1.0) > 1e-9:
            raise ValueError("row weights must sum to 1")
        support = {j for j in range(weights.size) if weights[j] > 0.0}
        if not self.mandatory <= support:
            raise ValueError("mandatory set must lie in the row support")
        if not 1 <= len(self.mandatory):
            raise ValueError("mandatory set must be nonempty")
        if self.delta <= 0:
            raise ValueError("delta must be positive")

    @property
    def support(self) -> list[int]:
        return [j for j in range(self.weights.size) if self.weights[j] > 0.0]


@dataclass(frozen=True)
class RowDesignResult:
    k_row: np.ndarray
    support_count: int
    hidden: frozenset[int]
    budget_used: float
    at_budget_cap: bool
    zero_adjusted: bool


def heuristic_row_design(problem: RowDesignProblem) -> RowDesignResult:
    """Greedy row modification following the published heuristic exactly.

    One ascending-weight sort of the non-mandatory candidates, a hide
    loop while 2(a + W_ij) <= tau, uniform row-sum compensation, and a
    symmetric +/- shift of the leftover budget capped for nonnegativity
    by delta.  Hidden entries end at exactly 0.0.

    Raises
    ------
    BudgetDegenerate
        If tau <= 0.
    DeltaTooLarge
        If delta is not below the smallest positive row weight.
    """
    if problem.tau <= 0:
        raise BudgetDegenerate("privacy budget tau must be positive")
    w = problem.weights
    tau = problem.tau
    delta = problem.delta
    support = problem.support
    min_weight = min(w[j] for j in support)
    if delta >= min_weight:
        raise DeltaTooLarge(f"delta {delta:.3e} >= smallest positive weight {min_weight:.3e}")

    candidates = _sorted(
        (j for j in support if j not in problem.mandatory),
        key=lambda j: (w[j], j),
    )

    k = np.zeros_like(w)
    hidden: list[int] = []
    a = 0.0
    for j in candidates:
        if _fits_budget(a + w[j], tau):
            hidden.append(j)
            a += w[j]
        else:
            break
    for j in hidden:
        k[j] = -w[j]
    alpha_z = a

    # Candidate order carries into C_r: surviving candidates ascending by
    # weight, then the mandatory indices.
    mandatory = list(problem.mandatory)
    if len(mandatory) == 2 and mandatory[0] > mandatory[1]:
        mandatory.reverse()
    c_r = [j for j in candidates if j not in hidden] + mandatory

    delta1 = alpha_z / len(c_r)
    for j in c_r:
        k[j] += delta1

    zero_adjusted = False
    if len(c_r) > 1:
        if len(c_r) == 2:
            tau_r = min(tau - 2.0 * alpha_z, 1.0)
        else:
            tau_r = tau - 2.0 * alpha_z
        tau_r = max(tau_r, 0.0)  # boundary-feasible hides can leave -1 ulp
        h = len(c_r) // 2
        c_a, c_b = c_r[:h], c_r[-h:]
        delta2 = min(tau_r / (2.0 * h), min(w[j] + k[j] - delta for j in c_r))
        for j in c_a:
            k[j] += delta2
        for j in c_b:
            k[j] -= delta2
        for j1 in c_b:
            if k[j1] == 0.0:
                k[j1] += delta
                k[c_a[0]] -= delta
                zero_adjusted = True

    budget_used = float(np.abs(k).sum())
    modified = w + k
    for j in hidden:
        modified[j] = 0.0
    support_count = int(np.count_nonzero(modified))
    return RowDesignResult(
        k_row=k,
        support_count=support_count,
        hidden=frozenset(hidden),
        budget_used=budget_used,
        at_budget_cap=budget_used >= tau - 1e-12,
        zero_adjusted=zero_adjusted,
    )


def optimal_support_count(problem: RowDesignProblem) -> int:
    """Closed-form minimum support size for one row under budget tau.

    With mandatory weight sum s: the answer is |mandatory| when
    tau >= 2(1 - s), otherwise |mandatory| plus the smallest count of
    largest candidate weights whose sum reaches 1 - tau/2 - s.
    """
    if problem.tau <= 0:
        raise BudgetDegenerate("privacy budget tau must be positive")
    if len(problem.mandatory) not in (1, 2):
        raise ValueError("closed form covers mandatory sets of size 1 or 2")
    w = problem.weights
    s = float(sum(w[j] for j in problem.mandatory))
    base = len(problem.mandatory)
    if _fits_budget(1.0 - s, problem.tau):
        return base
    weights = sorted((w[j] for j in problem.support if j not in problem.mandatory), reverse=True)
    acc = 0.0
    for count, weight in enumerate(weights, start=1):
        acc += weight
        if _fits_budget(1.0 - s - acc, problem.tau):
            return base + count
    raise NoFeasibleCount("unreachable for tau > 0")  # pragma: no cover


def brute_force_row_oracle(problem: RowDesignProblem) -> int:
    """Exhaustive minimum support size; independent check of the closed form.

    A support set S containing the mandatory nodes is feasible when the
    mass to be moved off its complement fits the budget:
    2 (1 - sum_{j in S} W_ij) <= tau.

    Raises
    ------
    TooLarge
        If the row has more than 16 support entries.
    """
    if problem.tau <= 0:
        raise BudgetDegenerate("privacy budget tau must be positive")
    support = problem.support
    if len(support) > 16:
        raise TooLarge("brute force capped at 16 support entries")
    w = problem.weights
    others = [j for j in support if j not in problem.mandatory]
    base = sum(w[j] for j in problem.mandatory)
    for extra in range(len(others) + 1):
        for combo in combinations(others, extra):
            total = base + sum(w[j] for j in combo)
            if _fits_budget(1.0 - total, problem.tau):
                return len(problem.mandatory) + extra
    raise NoFeasibleCount("unreachable for tau > 0")  # pragma: no cover


# ---------------------------------------------------------------------------
# Maximum-beacon protocol
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProtocolResult:
    feedback: FeedbackMatrix
    trajectory: Trajectory
    log: list[dict] = field(repr=False)
    root: int
    parents: dict[int, int]
    depths: np.ndarray
    beacons: np.ndarray
    xi: np.ndarray
    rows: list[RowDesignResult] = field(repr=False)

    @property
    def k(self) -> np.ndarray:
        return self.feedback.k


def run_protocol(
    topo: Topology,
    x0: np.ndarray,
    tau: float,
    delta: float | None = None,
    seed: int = 0,
    horizon: int | None = None,
    parallel: bool = False,
) -> ProtocolResult:
    """Synchronous maximum-beacon protocol producing a distributed K.

    Runs n-1 lock-step rounds in which every node reads only its
    in-neighbors' previous-round beacon/depth, then lets each node solve
    its own row problem: the root keeps itself and its deepest
    in-neighbor, everyone else keeps an in-neighbor of minimum depth.
    States evolve under W during the rounds and under W + K afterwards,
    up to ``horizon`` total steps (default: the protocol rounds only).

    When ``delta`` is None each row uses 1e-4 times its smallest positive
    weight.  Ties in the parent argmin/argmax break to the lowest index.
    Deterministic for fixed (topology, x0, tau, delta, seed); with
    ``parallel`` the per-node updates of each round run on a thread pool
    and must produce bit-identical results (rounds are barriers and
    every update reads only previous-round values).
    """
    if tau <= 0:
        raise BudgetDegenerate("privacy budget tau must be positive")
    n = topo.n
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (n,):
        raise ValueError("x0 length must match the node count")
    rounds = n - 1
    if horizon is None:
        horizon = rounds
    if horizon < rounds:
        raise ValueError("horizon cannot be shorter than the protocol rounds")

    rng = np.random.default_rng(seed)
    xi = rng.random(n)
    beacons = xi.copy()
    depths = np.zeros(n, dtype=int)
    neighbors = [topo.in_neighbors(i) for i in range(n)]

    states = np.empty((horizon + 1, n))
    states[0] = x0
    log: list[dict] = []

    def log_round(t):
        for i in range(n):
            log.append({
                "round": t,
                "node": i,
                "b": float(beacons[i]),
                "d": int(depths[i]),
                "x": float(states[t][i]),
            })

    def node_update(i, beacons, depths):
        incoming = max((beacons[j] for j in neighbors[i]), default=-np.inf)
        new_b = max(beacons[i], incoming)
        if new_b == xi[i]:
            return new_b, 0
        feeders = [depths[j] for j in neighbors[i] if beacons[j] == new_b]
        if not feeders:
            raise NumericalFailure("beacon bookkeeping lost its source")
        return new_b, 1 + min(feeders)

    pool = ThreadPoolExecutor(max_workers=min(n, 8)) if parallel else None
    try:
        log_round(0)
        for t in range(rounds):
            if pool is not None:
                updates = list(pool.map(lambda i: node_update(i, beacons, depths), range(n)))
            else:
                updates = [node_update(i, beacons, depths) for i in range(n)]
            states[t + 1] = topo.w @ states[t]
            beacons = np.array([b for b, _ in updates])
            depths = np.array([d for _, d in updates], dtype=int)
            log_round(t + 1)
    finally:
        if pool is not None:
            pool.shutdown()

    roots = [i for i in range(n) if beacons[i] == xi[i]]
    if len(roots) != 1:
        raise NumericalFailure(f"expected a unique root, found {roots}")
    root = roots[0]

    k = np.zeros((n, n))
    parents: dict[int, int] = {}
    rows: list[RowDesignResult] = []
    for i in range(n):
        if i == root:
            best_depth = max(depths[j] for j in neighbors[i])
            parent = min(j for j in neighbors[i] if depths[j] == best_depth)
            mandatory = frozenset({i, parent})
        else:
            best_depth = min(depths[j] for j in neighbors[i])
            parent = min(j for j in neighbors[i] if depths[j] == best_depth)
            mandatory = frozenset({parent})
        parents[i] = parent
        row_delta = delta if delta is not None else 1e-4 * min(
            topo.w[i, j] for j in range(n) if topo.w[i, j] > 0.0
        )
        result = heuristic_row_design(
            RowDesignProblem(weights=topo.w[i], mandatory=mandatory, tau=tau, delta=row_delta)
        )
        rows.append(result)
        k[i] = result.k_row

    w_mod = topo.w + k
    for i, result in enumerate(rows):
        for j in result.hidden:
            w_mod[i, j] = 0.0
    for t in range(rounds, horizon):
        states[t + 1] = w_mod @ states[t]

    report = check_convergence(topo, k)
    feedback = FeedbackMatrix(
        k=k, method="distributed", verification=report,
        info={"tau": tau, "seed": seed, "root": root,
              "parents": {str(i): int(p) for i, p in parents.items()}},
    )
    return ProtocolResult(
        feedback=feedback,
        trajectory=Trajectory(states),
        log=log,
        root=root,
        parents=parents,
        depths=depths,
        beacons=beacons,
        xi=xi,
        rows=rows,
    )


def modified_matrix(topo: Topology, result: ProtocolResult) -> np.ndarray:
    """W + K with the hidden entries written as exact zeros."""
    w_mod = topo.w + result.k
    for i, row in enumerate(result.rows):
        for j in row.hidden:
            w_mod[i, j] = 0.0
    return w_mod


def bfs_distances(topo: Topology, source: int) -> np.ndarray:
    """Shortest path lengths from ``source`` in the information-flow
    digraph (arc j -> i iff W[i, j] > 0); -1 where unreachable."""
    n = topo.n
    listeners = [[] for _ in range(n)]
    for (i, j) in topo.support:
        if i != j:
            listeners[j].append(i)
    dist = np.full(n, -1, dtype=int)
    dist[source] = 0
    queue = [source]
    while queue:
        nxt = []
        for u in queue:
            for v in listeners[u]:
                if dist[v] == -1:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        queue = nxt
    return dist


def protocol_log_lines(result: ProtocolResult) -> str:
    """JSON-lines serialization of the per-(round, node) protocol log."""
    import json

    return "\n".join(json.dumps(rec) for rec in result.log) + "\n"
