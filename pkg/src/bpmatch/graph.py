"""Decoding graphs: shortest error paths between checks and per-syndrome graphs.

Variables of a decoding graph with ``s`` detection nodes are numbered as
follows: the pair edges ``(i, j)`` with ``i < j`` come first in lexicographic
order (ids ``0 .. s(s-1)/2 - 1``), followed by the boundary edges ``u_i`` with
id ``s(s-1)/2 + i``. Internally most per-edge quantities are stored in dense
``s x s`` matrices where the off-diagonal cell ``(i, j)`` is the pair edge and
the diagonal cell ``(i, i)`` is the boundary edge of node ``i``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .code import CodeSpec, Syndrome


@dataclass(frozen=True)
class MetricTable:
    """All-pairs shortest error paths between the checks of one Pauli sector.

    ``pair_bits[a, b]`` and ``boundary_bits[a]`` hold the qubit supports of the
    representative paths as 0/1 vectors so that corrections are a single XOR
    reduction.
    """

    pauli_type: str
    n_qubits: int
    dist: np.ndarray
    dist_boundary: np.ndarray
    paths: tuple
    boundary_paths: tuple
    pair_bits: np.ndarray
    boundary_bits: np.ndarray

    @property
    def n_checks(self) -> int:
        return self.dist.shape[0]

    def path(self, a: int, b: int) -> tuple[int, ...]:
        return self.paths[a][b]


def _check_adjacency(h: np.ndarray):
    n_checks = h.shape[0]
    boundary = n_checks
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n_checks + 1)]
    for q in range(h.shape[1]):
        rows = np.flatnonzero(h[:, q])
        if len(rows) == 2:
            a, b = int(rows[0]), int(rows[1])
            adj[a].append((q, b))
            adj[b].append((q, a))
        elif len(rows) == 1:
            a = int(rows[0])
            adj[a].append((q, boundary))
            adj[boundary].append((q, a))
        elif len(rows) > 2:
            raise ValueError(f"qubit {q} touches {len(rows)} checks; code is not graphlike")
    for nbrs in adj:
        nbrs.sort()
    return adj


def _bfs(adj, source: int, blocked: int | None) -> np.ndarray:
    dist = np.full(len(adj), -1, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        if v == blocked and v != source:
            continue
        for _, w in adj[v]:
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def _greedy_path(adj, start: int, target: int, dist_to_target: np.ndarray, avoid: int | None):
    # Lexicographically smallest qubit sequence among shortest paths: adjacency
    # lists are sorted by qubit, so take the first neighbour one step closer.
    path = []
    cur = start
    while cur != target:
        for q, nb in adj[cur]:
            if nb == avoid and nb != target:
                continue
            if dist_to_target[nb] == dist_to_target[cur] - 1:
                path.append(q)
                cur = nb
                break
        else:  # pragma: no cover - unreachable for consistent distances
            raise RuntimeError("shortest-path reconstruction failed")
    return tuple(path)


def precompute_metric(code: CodeSpec, pauli_type: str) -> MetricTable:
    """Shortest error paths between every pair of checks and to the boundary.

    Pair paths run through the check graph only; an error chain that exits
    through the boundary is represented by two boundary edges instead.
    """
    h = code.check_matrix(pauli_type)
    m, n = h.shape
    adj = _check_adjacency(h)
    boundary = m

    dist_full = np.stack([_bfs(adj, a, blocked=boundary) for a in range(m)])
    dist = dist_full[:, :m].copy()
    if np.any(dist < 0):
        raise ValueError("check graph is disconnected")
    to_boundary = _bfs(adj, boundary, blocked=None)
    if m and np.any(to_boundary[:m] < 0):
        raise ValueError("some check cannot reach the boundary")
    dist_boundary = to_boundary[:m].copy()

    paths = [[()] * m for _ in range(m)]
    pair_bits = np.zeros((m, m, n), dtype=np.uint8)
    for a in range(m):
        for b in range(a + 1, m):
            p = _greedy_path(adj, a, b, dist_full[b], avoid=boundary)
            paths[a][b] = paths[b][a] = p
            pair_bits[a, b, list(p)] = 1
            pair_bits[b, a] = pair_bits[a, b]
    boundary_paths = []
    boundary_bits = np.zeros((m, n), dtype=np.uint8)
    for a in range(m):
        p = _greedy_path(adj, a, boundary, to_boundary, avoid=None)
        boundary_paths.append(p)
        boundary_bits[a, list(p)] = 1

    for arr in (dist, dist_boundary, pair_bits, boundary_bits):
        arr.setflags(write=False)
    return MetricTable(
        pauli_type=pauli_type,
        n_qubits=n,
        dist=dist,
        dist_boundary=dist_boundary,
        paths=tuple(tuple(row) for row in paths),
        boundary_paths=tuple(boundary_paths),
        pair_bits=pair_bits,
        boundary_bits=boundary_bits,
    )


@lru_cache(maxsize=None)
def var_layout(s: int):
    """Variable-id layout for ``s`` detection nodes.

    Returns ``(rows, cols, ids)`` where ``rows[k], cols[k]`` is the matrix cell
    of variable ``k`` (diagonal for boundary variables) and ``ids`` is the
    inverse ``s x s`` lookup.
    """
    iu, ju = np.triu_indices(s, 1)
    diag = np.arange(s)
    rows = np.concatenate([iu, diag])
    cols = np.concatenate([ju, diag])
    ids = np.empty((s, s), dtype=np.int64)
    ids[rows, cols] = np.arange(len(rows))
    ids[cols, rows] = np.arange(len(rows))
    for arr in (rows, cols, ids):
        arr.setflags(write=False)
    return rows, cols, ids


def n_pair_vars(s: int) -> int:
    return s * (s - 1) // 2


@dataclass(frozen=True)
class DecodingGraph:
    """Complete graph on the detection events plus one private boundary node each.

    ``weights`` and ``priors`` are symmetric ``s x s`` matrices with boundary
    edges on the diagonal.
    """

    detection_nodes: tuple[int, ...]
    flip_rate: float
    weights: np.ndarray
    priors: np.ndarray

    @property
    def s(self) -> int:
        return len(self.detection_nodes)

    @property
    def n_vars(self) -> int:
        return n_pair_vars(self.s) + self.s

    @property
    def n_nodes(self) -> int:
        return 2 * self.s

    @property
    def pair_edges(self) -> list[tuple[int, int, int, float]]:
        rows, cols, _ = var_layout(self.s)
        npair = n_pair_vars(self.s)
        return [
            (int(i), int(j), int(self.weights[i, j]), float(self.priors[i, j]))
            for i, j in zip(rows[:npair], cols[:npair])
        ]

    @property
    def boundary_edges(self) -> list[tuple[int, int, float]]:
        return [(i, int(self.weights[i, i]), float(self.priors[i, i])) for i in range(self.s)]

    def var_weights(self) -> np.ndarray:
        rows, cols, _ = var_layout(self.s)
        return self.weights[rows, cols]

    def var_priors(self) -> np.ndarray:
        rows, cols, _ = var_layout(self.s)
        return self.priors[rows, cols]

    def edge(self, var_id: int) -> tuple[int, int | None, int, float]:
        """``(i, j, w, prior)`` of a variable; ``j`` is None for boundary edges."""
        if not 0 <= var_id < self.n_vars:
            raise ValueError(f"unknown variable id {var_id}")
        rows, cols, _ = var_layout(self.s)
        i, j = int(rows[var_id]), int(cols[var_id])
        return i, (None if i == j else j), int(self.weights[i, j]), float(self.priors[i, j])

    def dump(self) -> str:
        lines = [f"# s={self.s} flip_rate={self.flip_rate!r} nodes={list(self.detection_nodes)}"]
        for k in range(self.n_vars):
            i, j, w, prior = self.edge(k)
            other = f"b{i}" if j is None else str(j)
            lines.append(f"{k} {i} {other} w={w} prior={prior:.6g}")
        return "\n".join(lines) + "\n"


def edge_prior(w, flip_rate: float):
    """Prior that an edge of path length ``w`` belongs to the matching."""
    return (flip_rate / (1.0 - flip_rate)) ** np.asarray(w, dtype=float)


def build_decoding_graph(syn: Syndrome, metric: MetricTable, flip_rate: float) -> DecodingGraph:
    nodes = tuple(syn.unsatisfied)
    s = len(nodes)
    if flip_rate >= 0.5 or flip_rate < 0:
        raise ValueError(f"flip rate must lie in (0, 1/2), got {flip_rate!r}")
    if s and flip_rate == 0:
        raise ValueError("flip rate 0 cannot produce a non-empty syndrome")
    idx = np.asarray(nodes, dtype=np.int64)
    weights = metric.dist[np.ix_(idx, idx)].copy()
    weights[np.arange(s), np.arange(s)] = metric.dist_boundary[idx]
    priors = edge_prior(weights, flip_rate) if s else np.zeros((0, 0))
    weights.setflags(write=False)
    priors.setflags(write=False)
    return DecodingGraph(nodes, float(flip_rate), weights, priors)


def graph_from_weights(weights, flip_rate: float, detection_nodes=None) -> DecodingGraph:
    """Decoding graph from an explicit symmetric weight matrix (boundary on the diagonal).

    Handy for synthetic instances that do not come from a code.
    """
    weights = np.array(weights, dtype=np.int64)
    s = weights.shape[0]
    if weights.shape != (s, s) or not np.array_equal(weights, weights.T):
        raise ValueError("weights must be a symmetric square matrix")
    if np.any(weights < 1):
        raise ValueError("edge weights must be positive")
    if not 0 < flip_rate < 0.5:
        raise ValueError(f"flip rate must lie in (0, 1/2), got {flip_rate!r}")
    nodes = tuple(range(s)) if detection_nodes is None else tuple(int(v) for v in detection_nodes)
    priors = edge_prior(weights, flip_rate)
    weights.setflags(write=False)
    priors.setflags(write=False)
    return DecodingGraph(nodes, float(flip_rate), weights, priors)


@dataclass(frozen=True)
class Candidate:
    """A matching on the decoding graph and the correction it implies."""

    selected: frozenset
    e_hat: np.ndarray
    weight: int
    source: str
    iteration: int

    @property
    def qubit_weight(self) -> int:
        return int(self.e_hat.sum())


def selection_weight(g: DecodingGraph, selected) -> int:
    if len(selected) == 0:
        return 0
    return int(g.var_weights()[np.fromiter(selected, dtype=np.int64)].sum())


def correction(g: DecodingGraph, metric: MetricTable, selected) -> np.ndarray:
    """XOR of the representative qubit paths of the selected edges."""
    e_hat = np.zeros(metric.n_qubits, dtype=np.uint8)
    if len(selected) == 0:
        return e_hat
    rows, cols, _ = var_layout(g.s)
    ids = np.fromiter(selected, dtype=np.int64)
    nodes = np.asarray(g.detection_nodes, dtype=np.int64)
    a = nodes[rows[ids]]
    b = nodes[cols[ids]]
    pair = a != b
    acc = metric.pair_bits[a[pair], b[pair]].sum(axis=0, dtype=np.int64)
    acc += metric.boundary_bits[a[~pair]].sum(axis=0, dtype=np.int64)
    return (acc % 2).astype(np.uint8)


def candidate_from_selection(
    g: DecodingGraph, metric: MetricTable, selected, source: str = "marginalization", iteration: int = 0
) -> Candidate:
    selected = frozenset(int(k) for k in selected)
    for k in selected:
        if not 0 <= k < g.n_vars:
            raise ValueError(f"unknown variable id {k}")
    return Candidate(
        selected=selected,
        e_hat=correction(g, metric, selected),
        weight=selection_weight(g, selected),
        source=source,
        iteration=iteration,
    )
