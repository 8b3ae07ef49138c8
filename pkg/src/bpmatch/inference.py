"""From posteriors to matchings: marginalization and forced convergence."""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .factor_graph import FactorGraph
from .graph import DecodingGraph, var_layout


def _p1(marg) -> tuple[np.ndarray, np.ndarray]:
    marg = np.asarray(marg, dtype=float)
    if marg.ndim == 2:
        return marg[:, 1], marg[:, 0]
    return marg, 1.0 - marg


def marginal_assignment(marg) -> frozenset:
    """Select every variable whose posterior favours 1; exact ties are left out.

    ``marg`` is either an ``(n_vars, 2)`` array of ``(P(0), P(1))`` pairs or a
    vector of ``P(1)``.
    """
    p1, p0 = _p1(marg)
    return frozenset(int(k) for k in np.flatnonzero(p1 > p0))


def check_counts(s: int, selected) -> np.ndarray:
    """Number of selected variables incident to each check factor."""
    if s == 0:
        return np.zeros(0, dtype=np.int64)
    rows, cols, _ = var_layout(s)
    ids = np.fromiter(selected, dtype=np.int64)
    r, c = rows[ids], cols[ids]
    return np.bincount(r, minlength=s) + np.bincount(c[r != c], minlength=s)


def check_convergence(fg: FactorGraph, a) -> bool:
    """True iff every check factor sees exactly one selected variable."""
    return bool(np.all(check_counts(fg.s, a) == 1))


@dataclass(frozen=True)
class EdgePartition:
    """Disjoint cover of the variables: node ``i`` owns ``E_i``."""

    sets: dict

    def owner(self, k: int) -> int:
        for i, members in self.sets.items():
            if k in members:
                return i
        raise KeyError(k)


def partition_edges(g: DecodingGraph) -> EdgePartition:
    """Pair edge ``(i, j)`` goes to the smaller endpoint, ``u_i`` to node ``i``."""
    s = g.s
    _, _, ids = var_layout(s)
    sets = {i: [int(ids[i, j]) for j in range(i + 1, s)] + [int(ids[i, i])] for i in range(s)}
    return EdgePartition(sets)


def forced_convergence(g: DecodingGraph, fg: FactorGraph, marg, part: EdgePartition) -> frozenset:
    """Greedy matching from per-node maxima, always returning a valid matching.

    Each unmatched node keeps its most probable still-valid variable of
    ``E_i``. The global maximum (ties to the smaller variable id) is taken,
    its endpoints are marked matched, and any node whose stored maximum is no
    longer valid picks again. ``u_i`` is always valid for an unmatched node,
    so every node ends up matched exactly once.
    """
    s = g.s
    if s == 0:
        return frozenset()
    p1, _ = _p1(marg)
    rows, cols, _ = var_layout(s)
    p1_list = p1.tolist()
    rows_l = rows.tolist()
    cols_l = cols.tolist()

    # Each E_i sorted once by (descending P(1), ascending id). Matched nodes
    # only accumulate, so a per-node cursor never has to move backwards.
    order = []
    for i in range(s):
        members = part.sets[i]
        order.append(sorted(members, key=lambda k: (-p1_list[k], k)))
    cursor = [0] * s
    matched = [False] * s

    def best(i: int) -> int:
        seq = order[i]
        c = cursor[i]
        while True:
            k = seq[c]
            if not (matched[rows_l[k]] or matched[cols_l[k]]):
                cursor[i] = c
                return k
            c += 1

    heap = []
    for i in range(s):
        k = best(i)
        heap.append((-p1_list[k], k, i))
    heapq.heapify(heap)

    selected = []
    while heap:
        _, k, i = heapq.heappop(heap)
        if matched[i]:
            continue
        a, b = rows_l[k], cols_l[k]
        if matched[a] or matched[b]:
            k = best(i)
            heapq.heappush(heap, (-p1_list[k], k, i))
            continue
        selected.append(k)
        matched[a] = matched[b] = True
    return frozenset(selected)
