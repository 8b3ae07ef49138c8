"""Exact minimum-weight perfect matching on decoding graphs.

The core is Edmonds' blossom algorithm for maximum-weight matching in general
graphs in the primal-dual form of Galil (O(V^3) time). Dual variables of
vertices are stored doubled so that integer weights keep every quantity
integral.

Decoding-graph instances use the duplicated-boundary construction: detection
node ``i`` has its own boundary node ``b_i``, and the boundary nodes are tied
together by zero-weight edges so a perfect matching always exists.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import DecodingGraph, var_layout

MAX_BRUTE_FORCE = 10


def max_weight_matching(n: int, edges, maxcardinality: bool = False) -> list[int]:
    """Maximum-weight matching of an undirected graph with integer weights.

    Parameters
    ----------
    n : int
        Number of vertices, labelled ``0 .. n-1``.
    edges : sequence of (i, j, weight)
        At most one edge per vertex pair, no self loops.
    maxcardinality : bool
        Restrict to maximum-cardinality matchings.

    Returns
    -------
    list of int
        ``mate[v]`` is the partner of ``v`` or ``-1``.
    """
    edges = [(int(i), int(j), int(w)) for i, j, w in edges]
    nedge = len(edges)
    if nedge == 0:
        return [-1] * n
    maxweight = max(0, max(w for _, _, w in edges))

    # Endpoint p belongs to edge p // 2; endpoint[p ^ 1] is its partner.
    endpoint = [edges[p // 2][p % 2] for p in range(2 * nedge)]
    neighbend: list[list[int]] = [[] for _ in range(n)]
    for k, (i, j, _) in enumerate(edges):
        neighbend[i].append(2 * k + 1)
        neighbend[j].append(2 * k)

    mate = [-1] * n
    # label: 0 free, 1 S (outer), 2 T (inner); 5 marks a scan in progress.
    label = [0] * (2 * n)
    labelend = [-1] * (2 * n)
    inblossom = list(range(n))
    blossomparent = [-1] * (2 * n)
    blossomchilds: list = [None] * (2 * n)
    blossombase = list(range(n)) + [-1] * n
    blossomendps: list = [None] * (2 * n)
    bestedge = [-1] * (2 * n)
    blossombestedges: list = [None] * (2 * n)
    unusedblossoms = list(range(n, 2 * n))
    dualvar = [maxweight] * n + [0] * n
    allowedge = [False] * nedge
    queue: list[int] = []

    def slack(k):
        i, j, wt = edges[k]
        return dualvar[i] + dualvar[j] - 2 * wt

    def leaves(b):
        if b < n:
            yield b
        else:
            for t in blossomchilds[b]:
                if t < n:
                    yield t
                else:
                    yield from leaves(t)

    def assign_label(w, t, p):
        b = inblossom[w]
        label[w] = label[b] = t
        labelend[w] = labelend[b] = p
        bestedge[w] = bestedge[b] = -1
        if t == 1:
            queue.extend(leaves(b))
        else:
            base = blossombase[b]
            assign_label(endpoint[mate[base]], 1, mate[base] ^ 1)

    def scan_blossom(v, w):
        # Walk up from v and w alternately to find a common S ancestor.
        path = []
        base = -1
        while v != -1 or w != -1:
            b = inblossom[v]
            if label[b] & 4:
                base = blossombase[b]
                break
            path.append(b)
            label[b] = 5
            if labelend[b] == -1:
                v = -1
            else:
                v = endpoint[labelend[b]]
                b = inblossom[v]
                v = endpoint[labelend[b]]
            if w != -1:
                v, w = w, v
        for b in path:
            label[b] = 1
        return base

    def add_blossom(base, k):
        v, w, _ = edges[k]
        bb = inblossom[base]
        bv = inblossom[v]
        bw = inblossom[w]
        b = unusedblossoms.pop()
        blossombase[b] = base
        blossomparent[b] = -1
        blossomparent[bb] = b
        blossomchilds[b] = path = []
        blossomendps[b] = endps = []
        while bv != bb:
            blossomparent[bv] = b
            path.append(bv)
            endps.append(labelend[bv])
            v = endpoint[labelend[bv]]
            bv = inblossom[v]
        path.append(bb)
        path.reverse()
        endps.reverse()
        endps.append(2 * k)
        while bw != bb:
            blossomparent[bw] = b
            path.append(bw)
            endps.append(labelend[bw] ^ 1)
            w = endpoint[labelend[bw]]
            bw = inblossom[w]
        label[b] = 1
        labelend[b] = labelend[bb]
        dualvar[b] = 0
        for v in leaves(b):
            if label[inblossom[v]] == 2:
                queue.append(v)
            inblossom[v] = b
        bestedgeto = [-1] * (2 * n)
        for bv in path:
            if blossombestedges[bv] is None:
                nblists = [[p // 2 for p in neighbend[v]] for v in leaves(bv)]
            else:
                nblists = [blossombestedges[bv]]
            for nblist in nblists:
                for k2 in nblist:
                    i, j, _ = edges[k2]
                    if inblossom[j] == b:
                        i, j = j, i
                    bj = inblossom[j]
                    if (bj != b and label[bj] == 1
                            and (bestedgeto[bj] == -1 or slack(k2) < slack(bestedgeto[bj]))):
                        bestedgeto[bj] = k2
            blossombestedges[bv] = None
            bestedge[bv] = -1
        blossombestedges[b] = [k2 for k2 in bestedgeto if k2 != -1]
        bestedge[b] = -1
        for k2 in blossombestedges[b]:
            if bestedge[b] == -1 or slack(k2) < slack(bestedge[b]):
                bestedge[b] = k2

    def expand_blossom(b, endstage):
        for s in blossomchilds[b]:
            blossomparent[s] = -1
            if s < n:
                inblossom[s] = s
            elif endstage and dualvar[s] == 0:
                expand_blossom(s, endstage)
            else:
                for v in leaves(s):
                    inblossom[v] = s
        if not endstage and label[b] == 2:
            # Relabel the sub-blossoms on the even-length path from the entry
            # child to the base.
            entrychild = inblossom[endpoint[labelend[b] ^ 1]]
            j = blossomchilds[b].index(entrychild)
            if j & 1:
                j -= len(blossomchilds[b])
                jstep = 1
                endptrick = 0
            else:
                jstep = -1
                endptrick = 1
            p = labelend[b]
            while j != 0:
                label[endpoint[p ^ 1]] = 0
                label[endpoint[blossomendps[b][j - endptrick] ^ endptrick ^ 1]] = 0
                assign_label(endpoint[p ^ 1], 2, p)
                allowedge[blossomendps[b][j - endptrick] // 2] = True
                j += jstep
                p = blossomendps[b][j - endptrick] ^ endptrick
                allowedge[p // 2] = True
                j += jstep
            bv = blossomchilds[b][j]
            label[endpoint[p ^ 1]] = label[bv] = 2
            labelend[endpoint[p ^ 1]] = labelend[bv] = p
            bestedge[bv] = -1
            j += jstep
            while blossomchilds[b][j] != entrychild:
                bv = blossomchilds[b][j]
                if label[bv] == 1:
                    j += jstep
                    continue
                for v in leaves(bv):
                    if label[v] != 0:
                        break
                if label[v] != 0:
                    label[v] = 0
                    label[endpoint[mate[blossombase[bv]]]] = 0
                    assign_label(v, 2, labelend[v])
                j += jstep
        label[b] = labelend[b] = -1
        blossomchilds[b] = blossomendps[b] = None
        blossombase[b] = -1
        blossombestedges[b] = None
        bestedge[b] = -1
        unusedblossoms.append(b)

    def augment_blossom(b, v):
        t = v
        while blossomparent[t] != b:
            t = blossomparent[t]
        if t >= n:
            augment_blossom(t, v)
        i = j = blossomchilds[b].index(t)
        if i & 1:
            j -= len(blossomchilds[b])
            jstep = 1
            endptrick = 0
        else:
            jstep = -1
            endptrick = 1
        while j != 0:
            j += jstep
            t = blossomchilds[b][j]
            p = blossomendps[b][j - endptrick] ^ endptrick
            if t >= n:
                augment_blossom(t, endpoint[p])
            j += jstep
            t = blossomchilds[b][j]
            if t >= n:
                augment_blossom(t, endpoint[p ^ 1])
            mate[endpoint[p]] = p ^ 1
            mate[endpoint[p ^ 1]] = p
        blossomchilds[b] = blossomchilds[b][i:] + blossomchilds[b][:i]
        blossomendps[b] = blossomendps[b][i:] + blossomendps[b][:i]
        blossombase[b] = blossombase[blossomchilds[b][0]]

    def augment_matching(k):
        v, w, _ = edges[k]
        for s, p in ((v, 2 * k + 1), (w, 2 * k)):
            while True:
                bs = inblossom[s]
                if bs >= n:
                    augment_blossom(bs, s)
                mate[s] = p
                if labelend[bs] == -1:
                    break
                t = endpoint[labelend[bs]]
                bt = inblossom[t]
                s = endpoint[labelend[bt]]
                j = endpoint[labelend[bt] ^ 1]
                if bt >= n:
                    augment_blossom(bt, j)
                mate[j] = labelend[bt]
                p = labelend[bt] ^ 1

    for _stage in range(n):
        label[:] = [0] * (2 * n)
        bestedge[:] = [-1] * (2 * n)
        blossombestedges[n:] = [None] * n
        allowedge[:] = [False] * nedge
        queue[:] = []
        for v in range(n):
            if mate[v] == -1 and label[inblossom[v]] == 0:
                assign_label(v, 1, -1)

        augmented = False
        while True:
            while queue and not augmented:
                v = queue.pop()
                for p in neighbend[v]:
                    k = p // 2
                    w = endpoint[p]
                    if inblossom[v] == inblossom[w]:
                        continue
                    if not allowedge[k]:
                        kslack = slack(k)
                        if kslack <= 0:
                            allowedge[k] = True
                    if allowedge[k]:
                        if label[inblossom[w]] == 0:
                            assign_label(w, 2, p ^ 1)
                        elif label[inblossom[w]] == 1:
                            base = scan_blossom(v, w)
                            if base >= 0:
                                add_blossom(base, k)
                            else:
                                augment_matching(k)
                                augmented = True
                                break
                        elif label[w] == 0:
                            label[w] = 2
                            labelend[w] = p ^ 1
                    elif label[inblossom[w]] == 1:
                        b = inblossom[v]
                        if bestedge[b] == -1 or kslack < slack(bestedge[b]):
                            bestedge[b] = k
                    elif label[w] == 0:
                        if bestedge[w] == -1 or kslack < slack(bestedge[w]):
                            bestedge[w] = k
            if augmented:
                break

            # No augmenting path with tight edges: adjust the duals.
            deltatype = -1
            delta = deltaedge = deltablossom = None
            if not maxcardinality:
                deltatype = 1
                delta = min(dualvar[:n])
            for v in range(n):
                if label[inblossom[v]] == 0 and bestedge[v] != -1:
                    d = slack(bestedge[v])
                    if deltatype == -1 or d < delta:
                        delta, deltatype, deltaedge = d, 2, bestedge[v]
            for b in range(2 * n):
                if blossomparent[b] == -1 and label[b] == 1 and bestedge[b] != -1:
                    d = slack(bestedge[b]) // 2
                    if deltatype == -1 or d < delta:
                        delta, deltatype, deltaedge = d, 3, bestedge[b]
            for b in range(n, 2 * n):
                if (blossombase[b] >= 0 and blossomparent[b] == -1 and label[b] == 2
                        and (deltatype == -1 or dualvar[b] < delta)):
                    delta, deltatype, deltablossom = dualvar[b], 4, b
            if deltatype == -1:
                # Max-cardinality mode with nothing left to grow.
                deltatype = 1
                delta = max(0, min(dualvar[:n]))

            for v in range(n):
                lab = label[inblossom[v]]
                if lab == 1:
                    dualvar[v] -= delta
                elif lab == 2:
                    dualvar[v] += delta
            for b in range(n, 2 * n):
                if blossombase[b] >= 0 and blossomparent[b] == -1:
                    if label[b] == 1:
                        dualvar[b] += delta
                    elif label[b] == 2:
                        dualvar[b] -= delta

            if deltatype == 1:
                break
            if deltatype == 2:
                allowedge[deltaedge] = True
                i, j, _ = edges[deltaedge]
                if label[inblossom[i]] == 0:
                    i, j = j, i
                queue.append(i)
            elif deltatype == 3:
                allowedge[deltaedge] = True
                i, j, _ = edges[deltaedge]
                queue.append(i)
            else:
                expand_blossom(deltablossom, False)

        if not augmented:
            break
        for b in range(n, 2 * n):
            if (blossomparent[b] == -1 and blossombase[b] >= 0
                    and label[b] == 1 and dualvar[b] == 0):
                expand_blossom(b, True)

    return [endpoint[m] if m >= 0 else -1 for m in mate]


def min_weight_perfect_matching(n: int, edges) -> list[tuple[int, int]]:
    """Minimum-weight perfect matching; raises if none exists."""
    edges = [(int(i), int(j), int(w)) for i, j, w in edges]
    if n == 0:
        return []
    if not edges:
        raise ValueError("graph has no perfect matching")
    # Maximum cardinality with flipped weights turns max-weight into min-cost.
    top = max(w for _, _, w in edges) + 1
    mate = max_weight_matching(n, [(i, j, top - w) for i, j, w in edges], maxcardinality=True)
    if any(m < 0 for m in mate):
        raise ValueError("graph has no perfect matching")
    return [(v, m) for v, m in enumerate(mate) if v < m]


@dataclass(frozen=True)
class MatchingInstance:
    """Decoding graph as a matching problem on ``2s`` nodes.

    Nodes ``0 .. s-1`` are detection events and ``s + i`` is the private
    boundary node of detection ``i``. ``weights`` has pair weights off the
    diagonal and boundary weights on it.
    """

    weights: np.ndarray

    @property
    def s(self) -> int:
        return self.weights.shape[0]

    @property
    def n_nodes(self) -> int:
        return 2 * self.s

    @classmethod
    def from_graph(cls, g: DecodingGraph) -> "MatchingInstance":
        return cls(np.asarray(g.weights, dtype=np.int64))

    def edges(self) -> list[tuple[int, int, int]]:
        """Full edge list: detection pairs, detection-boundary, boundary clique."""
        s = self.s
        w = self.weights
        out = [(i, j, int(w[i, j])) for i in range(s) for j in range(i + 1, s)]
        out += [(i, s + i, int(w[i, i])) for i in range(s)]
        out += [(s + i, s + j, 0) for i in range(s) for j in range(i + 1, s)]
        return out

    def selection_weight(self, selected) -> int:
        rows, cols, _ = var_layout(self.s)
        return int(sum(self.weights[rows[k], cols[k]] for k in selected))


def _components(useful: np.ndarray) -> list[list[int]]:
    s = useful.shape[0]
    seen = [False] * s
    comps = []
    for start in range(s):
        if seen[start]:
            continue
        seen[start] = True
        stack = [start]
        comp = []
        while stack:
            v = stack.pop()
            comp.append(v)
            for u in np.flatnonzero(useful[v]):
                if not seen[u]:
                    seen[u] = True
                    stack.append(int(u))
        comps.append(sorted(comp))
    return comps


def mwpm(inst: MatchingInstance) -> frozenset:
    """Exact minimum-weight perfect matching as a set of decoding-graph variable ids.

    Pair edges with ``w_ij >= w_i + w_j`` can always be replaced by two
    boundary edges at no extra cost, so they are dropped and the remaining
    graph is split into connected components, each solved by the blossom
    algorithm on its own duplicated-boundary graph. Boundary-boundary edges
    carry no physical meaning and are left out of the result.
    """
    s = inst.s
    if s == 0:
        return frozenset()
    w = inst.weights
    _, _, ids = var_layout(s)
    bw = np.diag(w)
    useful = w < bw[:, None] + bw[None, :]
    np.fill_diagonal(useful, False)

    selected = []
    for comp in _components(useful):
        k = len(comp)
        if k == 1:
            i = comp[0]
            selected.append(int(ids[i, i]))
            continue
        local_edges = []
        for a in range(k):
            for b in range(a + 1, k):
                i, j = comp[a], comp[b]
                if useful[i, j]:
                    local_edges.append((a, b, int(w[i, j])))
            local_edges.append((a, k + a, int(w[comp[a], comp[a]])))
            for b in range(a + 1, k):
                local_edges.append((k + a, k + b, 0))
        for x, y in min_weight_perfect_matching(2 * k, local_edges):
            if x >= k:
                continue
            i = comp[x]
            j = comp[y] if y < k else i
            selected.append(int(ids[i, j]))
    return frozenset(selected)


def brute_force_mwpm(inst: MatchingInstance) -> tuple[frozenset, int]:
    """Enumerate every perfect matching; test oracle for ``s <= 10``.

    Boundary nodes pair among themselves at zero cost, so a perfect matching
    of the ``2s``-node graph is fixed by how each detection node is covered:
    by a partner detection node or by its own boundary node.
    """
    s = inst.s
    if s > MAX_BRUTE_FORCE:
        raise OverflowError(f"brute force limited to s <= {MAX_BRUTE_FORCE}, got {s}")
    w = inst.weights
    _, _, ids = var_layout(s)
    best_weight = None
    best: list[int] = []

    def rec(remaining: list[int], chosen: list[int], total: int):
        nonlocal best_weight, best
        if best_weight is not None and total >= best_weight and remaining:
            # Weights are non-negative, nothing below can improve.
            return
        if not remaining:
            if best_weight is None or total < best_weight:
                best_weight, best = total, list(chosen)
            return
        i, rest = remaining[0], remaining[1:]
        chosen.append(int(ids[i, i]))
        rec(rest, chosen, total + int(w[i, i]))
        chosen.pop()
        for pos, j in enumerate(rest):
            chosen.append(int(ids[i, j]))
            rec(rest[:pos] + rest[pos + 1:], chosen, total + int(w[i, j]))
            chosen.pop()

    rec(list(range(s)), [], 0)
    return frozenset(best), (best_weight or 0)
