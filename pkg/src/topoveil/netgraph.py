"""Topology data model, structural graph checks, and network generation.

A :class:`Topology` wraps a row-stochastic weight matrix ``W`` together
with its exact edge support set.  ``W[i, j] > 0`` means node ``i``
receives data from node ``j``, so information flows along arcs j -> i.
Support membership is an exact-zero test: designs write literal ``0.0``
to remove an edge.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from math import gcd

import numpy as np

from .errors import NegativeEntry, NotStochastic
from .lincore import left_dominant_vector

_ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Topology:
    """Validated row-stochastic network with explicit edge support."""

    n: int
    w: np.ndarray
    support: frozenset[tuple[int, int]] = field(repr=False)

    @property
    def z(self) -> int:
        """Cardinality of the edge support set."""
        return len(self.support)

    def in_neighbors(self, i: int) -> list[int]:
        """Indices j != i with W[i, j] > 0 (nodes that node i listens to)."""
        return [j for j in range(self.n) if j != i and self.w[i, j] > 0.0]

    def pi(self) -> np.ndarray:
        return left_dominant_vector(self.w)


@dataclass(frozen=True)
class GraphReport:
    strongly_connected: bool
    root_nodes: frozenset[int]
    root_scc_aperiodic: bool

    @property
    def root_exists(self) -> bool:
        return len(self.root_nodes) > 0


def validate(w) -> Topology:
    """Check stochasticity and nonnegativity, returning a Topology.

    Row sums must be within 1e-9 of 1; rows are then renormalized so the
    stored matrix meets the tighter 1e-12 invariant.  Renormalization
    divides by a positive scalar and therefore never changes the support.
    """
    w = np.array(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] < 1:
        raise NotStochastic("weight matrix must be square and nonempty")
    if np.any(w < 0):
        raise NegativeEntry("weight matrix has a negative entry")
    sums = w.sum(axis=1)
    deviation = np.max(np.abs(sums - 1.0))
    if deviation > _ROW_SUM_TOL:
        raise NotStochastic(f"row sums deviate from 1 by {deviation:.3e}")
    if deviation > 1e-12:
        # Renormalize only when needed so already-tight matrices (and
        # serialization round-trips) are preserved bit-exactly.
        w = w / sums[:, None]
    w.setflags(write=False)
    support = frozenset(zip(*np.nonzero(w)))
    return Topology(n=w.shape[0], w=w, support=support)


def _strong_components(n: int, arcs: list[tuple[int, int]]) -> list[int]:
    """Iterative Tarjan SCC, returning a component label per node."""
    out = [[] for _ in range(n)]
    for u, v in arcs:
        out[u].append(v)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    label = [-1] * n
    counter = 0
    comp = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            node, ptr = work[-1]
            if ptr == 0:
                index[node] = low[node] = counter
                counter += 1
                stack.append(node)
                on_stack[node] = True
            advanced = False
            for k in range(ptr, len(out[node])):
                nxt = out[node][k]
                if index[nxt] == -1:
                    work[-1] = (node, k + 1)
                    work.append((nxt, 0))
                    advanced = True
                    break
                if on_stack[nxt]:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                while True:
                    member = stack.pop()
                    on_stack[member] = False
                    label[member] = comp
                    if member == node:
                        break
                comp += 1
    return label


def _scc_period(nodes: list[int], arcs: list[tuple[int, int]]) -> int:
    """gcd of (level(u) + 1 - level(v)) over arcs inside one SCC; 0 if no arcs."""
    if not arcs:
        return 0
    out: dict[int, list[int]] = {v: [] for v in nodes}
    for u, v in arcs:
        out[u].append(v)
    start = nodes[0]
    level = {start: 0}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in out[u]:
            if v not in level:
                level[v] = level[u] + 1
                queue.append(v)
    g = 0
    for u, v in arcs:
        g = gcd(g, abs(level[u] + 1 - level[v]))
    return g


def structural_report(topo: Topology) -> GraphReport:
    """Strong connectivity, root nodes, and aperiodicity of the root SCC.

    Works on the information-flow digraph (arc j -> i iff W[i, j] > 0).
    The root nodes are the members of the unique source SCC of the
    condensation; if the condensation has several sources no root exists.
    Aperiodicity uses the BFS-level gcd of the root SCC.
    """
    n = topo.n
    arcs = [(j, i) for (i, j) in topo.support]
    label = _strong_components(n, arcs)
    n_comp = max(label) + 1

    has_incoming = [False] * n_comp
    for u, v in arcs:
        if label[u] != label[v]:
            has_incoming[label[v]] = True
    sources = [c for c in range(n_comp) if not has_incoming[c]]

    if len(sources) != 1:
        return GraphReport(strongly_connected=False, root_nodes=frozenset(), root_scc_aperiodic=False)

    root_comp = sources[0]
    root_nodes = frozenset(v for v in range(n) if label[v] == root_comp)
    inner_arcs = [(u, v) for u, v in arcs if label[u] == root_comp and label[v] == root_comp]
    period = _scc_period(sorted(root_nodes), inner_arcs)
    return GraphReport(
        strongly_connected=(n_comp == 1),
        root_nodes=root_nodes,
        root_scc_aperiodic=(period == 1),
    )


def random_topology(n: int, density: float, seed: int) -> Topology:
    """Strongly connected random digraph with self-loops on every node.

    A random Hamiltonian cycle guarantees strong connectivity, the
    self-loops guarantee aperiodicity, and extra off-diagonal arcs appear
    independently with probability ``density``.  Weights are drawn
    uniformly from [0.1, 1) and row-normalized.  Deterministic per seed.
    """
    if n < 2:
        raise ValueError("random_topology needs n >= 2")
    if not 0.0 < density <= 1.0:
        raise ValueError("density must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    mask = rng.random((n, n)) < density
    np.fill_diagonal(mask, True)
    cycle = rng.permutation(n)
    for k in range(n):
        i, j = cycle[(k + 1) % n], cycle[k]
        mask[i, j] = True  # node i listens to node j along the cycle
    weights = rng.uniform(0.1, 1.0, size=(n, n)) * mask
    weights /= weights.sum(axis=1, keepdims=True)
    return validate(weights)


def consensus_point(topo: Topology, x0: np.ndarray) -> float:
    """The common limit pi^T x0 of the consensus iteration."""
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (topo.n,):
        raise ValueError("x0 length must match the node count")
    return float(topo.pi() @ x0)


# ---------------------------------------------------------------------------
# Serialization: JSON object and whitespace-delimited text
# ---------------------------------------------------------------------------


def to_json_dict(topo: Topology) -> dict:
    return {"n": topo.n, "w": [[float(v) for v in row] for row in topo.w]}


def from_json_dict(obj: dict) -> Topology:
    topo = validate(np.array(obj["w"], dtype=float))
    if topo.n != int(obj["n"]):
        raise NotStochastic("JSON field n disagrees with the matrix shape")
    return topo


def dumps(topo: Topology) -> str:
    return json.dumps(to_json_dict(topo))


def loads(text: str) -> Topology:
    return from_json_dict(json.loads(text))


def to_text(topo: Topology) -> str:
    """Whitespace-delimited rows with 17-significant-digit entries."""
    lines = [" ".join(f"{v:.17g}" for v in row) for row in topo.w]
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Topology:
    rows = [[float(tok) for tok in line.split()] for line in text.strip().splitlines() if line.strip()]
    return validate(np.array(rows, dtype=float))
