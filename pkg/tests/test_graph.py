from __future__ import annotations

import itertools

import numpy as np
import pytest

from bpmatch.code import Syndrome, build_surface_code, syndrome
from bpmatch.graph import (
    build_decoding_graph,
    candidate_from_selection,
    edge_prior,
    graph_from_weights,
    n_pair_vars,
    precompute_metric,
    var_layout,
)

from conftest import enumerate_matchings


def floyd_warshall(h: np.ndarray):
    """Pair distances avoiding the boundary node, and distances to the boundary."""
    m = h.shape[0]
    inf = 10**9
    full = np.full((m + 1, m + 1), inf, dtype=np.int64)
    np.fill_diagonal(full, 0)
    for col in h.T:
        checks = np.flatnonzero(col)
        a, b = (checks[0], checks[1]) if len(checks) == 2 else (checks[0], m)
        full[a, b] = full[b, a] = 1
    inner = full[:m, :m].copy()
    for k in range(m):
        inner = np.minimum(inner, inner[:, [k]] + inner[[k], :])
    for k in range(m + 1):
        full = np.minimum(full, full[:, [k]] + full[[k], :])
    return inner, full[:m, m]


@pytest.mark.parametrize("d", [3, 5])
@pytest.mark.parametrize("ptype", ["Z", "X"])
def test_metric_matches_floyd_warshall(d, ptype):
    code = build_surface_code(d)
    metric = precompute_metric(code, ptype)
    inner, to_b = floyd_warshall(code.check_matrix(ptype))
    np.testing.assert_array_equal(metric.dist, inner)
    np.testing.assert_array_equal(metric.dist_boundary, to_b)


def test_d3_corner_checks():
    code = build_surface_code(3)
    metric = precompute_metric(code, "Z")
    inner, _ = floyd_warshall(code.h_x)
    # X checks at sites (1, 0) and (3, 4) are the opposite corners.
    assert metric.dist[0, 5] == inner[0, 5] == 3


@pytest.mark.parametrize("ptype", ["Z", "X"])
def test_paths_are_shortest_and_reproduce_syndromes(d5, ptype):
    code = d5[0]
    metric = precompute_metric(code, ptype)
    m = metric.n_checks
    for a, b in itertools.combinations(range(m), 2):
        path = metric.path(a, b)
        assert len(path) == metric.dist[a, b]
        e = np.zeros(code.n_qubits, dtype=np.uint8)
        e[list(path)] = 1
        assert syndrome(code, e, ptype).unsatisfied == (a, b)
        np.testing.assert_array_equal(metric.pair_bits[a, b], e)
    for a in range(m):
        path = metric.boundary_paths[a]
        assert len(path) == metric.dist_boundary[a]
        e = np.zeros(code.n_qubits, dtype=np.uint8)
        e[list(path)] = 1
        assert syndrome(code, e, ptype).unsatisfied == (a,)


def test_adjacent_checks_share_a_qubit(d3):
    code, metric, _ = d3
    # Bulk qubit 6 sits between X checks 1 and 4.
    assert metric.dist[1, 4] == 1
    assert metric.path(1, 4) == (6,)
    flagged = np.flatnonzero(code.boundary_checks("Z"))
    assert len(flagged) > 0
    assert np.all(metric.dist_boundary[flagged] == 1)


def test_paths_are_deterministic(d5):
    a = precompute_metric(d5[0], "Z")
    b = precompute_metric(d5[0], "Z")
    assert a.paths == b.paths
    assert a.boundary_paths == b.boundary_paths


def test_var_layout():
    rows, cols, ids = var_layout(3)
    assert list(zip(rows.tolist(), cols.tolist())) == [(0, 1), (0, 2), (1, 2), (0, 0), (1, 1), (2, 2)]
    assert ids[2, 1] == ids[1, 2] == 2
    assert ids[1, 1] == n_pair_vars(3) + 1


def test_edge_prior_value():
    assert edge_prior(2, 0.1) == pytest.approx((0.1 / 0.9) ** 2)
    assert edge_prior(2, 0.1) == pytest.approx(0.0123457, abs=1e-7)


def test_decoding_graph_sizes(d3):
    _, metric, _ = d3
    empty = build_decoding_graph(Syndrome.from_bits(np.zeros(6)), metric, 0.1)
    assert empty.s == 0 and empty.n_vars == 0 and empty.pair_edges == []
    g = build_decoding_graph(Syndrome.from_bits([1, 0, 1, 0, 0, 1]), metric, 0.1)
    assert g.n_nodes == 6
    assert len(g.pair_edges) == 3 and len(g.boundary_edges) == 3
    assert g.n_vars == 3 * 2 // 2 + 3
    for i, j, w, prior in g.pair_edges:
        assert w == metric.dist[g.detection_nodes[i], g.detection_nodes[j]]
        assert prior == pytest.approx((0.1 / 0.9) ** w)
    for i, w, _ in g.boundary_edges:
        assert w == metric.dist_boundary[g.detection_nodes[i]]


def test_decoding_graph_errors(d3):
    _, metric, _ = d3
    syn = Syndrome.from_bits([1, 0, 0, 0, 0, 0])
    with pytest.raises(ValueError):
        build_decoding_graph(syn, metric, 0.5)
    with pytest.raises(ValueError):
        build_decoding_graph(syn, metric, 0.0)
    with pytest.raises(ValueError):
        graph_from_weights([[1, 2], [3, 1]], 0.1)


def test_candidate_empty_and_boundary(d3):
    code, metric, _ = d3
    g = build_decoding_graph(Syndrome.from_bits([1, 0, 0, 0, 0, 0]), metric, 0.1)
    empty = candidate_from_selection(g, metric, set())
    assert empty.weight == 0 and not empty.e_hat.any()
    cand = candidate_from_selection(g, metric, {0})
    assert cand.weight == 1 and cand.e_hat.sum() == 1
    assert syndrome(code, cand.e_hat, "Z").unsatisfied == (0,)
    with pytest.raises(ValueError):
        candidate_from_selection(g, metric, {1})


@pytest.mark.parametrize("ptype", ["Z", "X"])
def test_every_matching_reproduces_syndrome(d3, rng, ptype):
    code = d3[0]
    metric = d3[1] if ptype == "Z" else d3[2]
    for _ in range(30):
        bits = rng.integers(0, 2, metric.n_checks)
        syn = Syndrome.from_bits(bits)
        if syn.s == 0 or syn.s > 5:
            continue
        g = build_decoding_graph(syn, metric, 0.1)
        _, _, ids = var_layout(g.s)
        for matching in enumerate_matchings(g.s):
            sel = {int(ids[i, i if j is None else j]) for i, j in matching}
            cand = candidate_from_selection(g, metric, sel)
            assert syndrome(code, cand.e_hat, ptype).unsatisfied == syn.unsatisfied
