import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dpnash.graphs import (Digraph, GraphSchedule, InsufficientHorizon, backward_product,
                           build_weight_matrix, check_d_strong_connectivity, estimate_mixing,
                           format_topology, is_strongly_connected, parse_topology)


def edge_sets(max_n=7):
    return st.integers(1, max_n).flatmap(lambda n: st.tuples(
        st.just(n),
        st.sets(st.tuples(st.integers(1, n), st.integers(1, n)), max_size=n * n)))


# -- weight matrices ----------------------------------------------------------

def test_complete_three_is_uniform():
    np.testing.assert_allclose(build_weight_matrix(Digraph.complete(3)), np.full((3, 3), 1 / 3))


def test_single_edge_hand_count():
    B = build_weight_matrix(Digraph.from_edges(2, [(1, 2)]))
    np.testing.assert_allclose(B, [[0.5, 0.0], [0.5, 1.0]])


def test_single_node_identity():
    np.testing.assert_array_equal(build_weight_matrix(Digraph(1)), [[1.0]])


@given(edge_sets())
def test_weights_match_out_degree_oracle(ne):
    n, edges = ne
    g = Digraph.from_edges(n, edges)
    B = build_weight_matrix(g)
    np.testing.assert_allclose(B.sum(axis=0), 1.0, atol=1e-12)
    for j in range(1, n + 1):
        out = g.out_neighbors(j)
        for i in range(1, n + 1):
            expect = 1 / len(out) if i in out else 0.0
            assert B[i - 1, j - 1] == pytest.approx(expect, abs=0)


def test_self_loops_are_dropped_and_bad_edges_rejected():
    assert Digraph.from_edges(3, [(1, 1), (1, 2)]).edges == {(1, 2)}
    with pytest.raises(ValueError):
        Digraph.from_edges(3, [(1, 4)])
    with pytest.raises(ValueError):
        Digraph(0)


# -- connectivity -------------------------------------------------------------

def test_strong_connectivity_examples():
    assert is_strongly_connected(Digraph.cycle(3))
    assert not is_strongly_connected(Digraph.from_edges(2, [(1, 2)]))
    assert is_strongly_connected(Digraph.complete(6))
    assert is_strongly_connected(Digraph(1))


@settings(max_examples=200)
@given(edge_sets())
def test_strong_connectivity_matches_networkx(ne):
    n, edges = ne
    ref = nx.DiGraph()
    ref.add_nodes_from(range(1, n + 1))
    ref.add_edges_from(edges)
    assert is_strongly_connected(Digraph.from_edges(n, edges)) == nx.is_strongly_connected(ref)


def test_fig1_schedule_is_jointly_connected(fig1):
    assert fig1.period == 4 and fig1.d_window == 4
    assert check_d_strong_connectivity(fig1)
    # no single phase is connected on its own
    assert not any(is_strongly_connected(g) for g in fig1.graphs)


def test_cycles_with_unit_window():
    s = GraphSchedule((Digraph.cycle(5), Digraph.from_edges(5, [(1, 5), (5, 4), (4, 3), (3, 2), (2, 1)])), 1)
    assert check_d_strong_connectivity(s)


def test_node_without_in_edges_fails():
    g1 = Digraph.from_edges(3, [(1, 2), (2, 3)])
    g2 = Digraph.from_edges(3, [(3, 2), (1, 3)])
    s = GraphSchedule((g1, g2), d_window=2)
    union = nx.DiGraph(list(g1.edges | g2.edges))
    assert not nx.is_strongly_connected(union)
    assert not check_d_strong_connectivity(s)


def test_windows_start_at_multiples_of_d():
    # phases 2 and 3 together form a cycle, but the aligned windows
    # (1,2) and (3,4) each miss half of it
    half = Digraph.from_edges(3, [(1, 2), (2, 3)])
    rest = Digraph.from_edges(3, [(3, 1)])
    e = Digraph(3)
    assert not check_d_strong_connectivity(GraphSchedule((e, half, rest, e), d_window=2))
    assert check_d_strong_connectivity(GraphSchedule((e, half, rest, e), d_window=4))


def test_full_period_union_implies_large_window(fig1):
    big = GraphSchedule(fig1.graphs, d_window=fig1.period * fig1.n)
    assert check_d_strong_connectivity(big)


# -- products -----------------------------------------------------------------

def test_backward_product_single_term(fig1):
    np.testing.assert_array_equal(backward_product(fig1, 5, 5), fig1.weight_at(5))


def test_backward_product_complete_graph():
    s = GraphSchedule.fixed(Digraph.complete(3))
    np.testing.assert_allclose(backward_product(s, 9, 2), np.full((3, 3), 1 / 3), atol=1e-15)


def test_backward_product_matches_naive(fig1):
    naive = np.eye(6)
    for k in range(8):
        naive = build_weight_matrix(fig1.graphs[k % 4]) @ naive
    np.testing.assert_allclose(backward_product(fig1, 7, 0), naive, rtol=0, atol=1e-15)


def test_backward_product_rejects_reversed_range(fig1):
    with pytest.raises(ValueError):
        backward_product(fig1, 2, 3)


@pytest.mark.parametrize("l,r", [(0, 0), (10, 3), (63, 0)])
def test_products_stay_column_stochastic(fig1, l, r):
    np.testing.assert_allclose(backward_product(fig1, l, r).sum(axis=0), 1.0, atol=1e-9)


# -- mixing -------------------------------------------------------------------

def test_mixing_complete_graph():
    est = estimate_mixing(GraphSchedule.fixed(Digraph.complete(3)), 20)
    np.testing.assert_allclose(est.psi[0], [1 / 3] * 3)
    assert est.deviation.max() < 1e-15


def test_mixing_single_node():
    est = estimate_mixing(GraphSchedule.fixed(Digraph(1)), 8)
    np.testing.assert_array_equal(est.psi[0], [1.0])
    assert est.delta_bar == 1.0


def test_mixing_fig1(fig1):
    est = estimate_mixing(fig1, 200)
    assert 0 < est.lambda_fit < 1
    assert est.delta_bar > 0
    l = np.arange(201)
    assert np.all(est.deviation <= est.bound(l) * (1 + 1e-12))
    np.testing.assert_allclose(est.psi.sum(axis=1), 1.0, atol=1e-9)
    assert np.all(est.psi >= 0)
    # row sums of every product stay above the reported infimum
    for k in (0, 17, 100, 200):
        assert backward_product(fig1, k, 0).sum(axis=1).min() >= est.delta_bar


def test_mixing_psi_is_limit_column(fig1):
    est = estimate_mixing(fig1, 200)
    far = backward_product(fig1, 400, 0)
    np.testing.assert_allclose(far, np.repeat(est.psi_at(400)[:, None], 6, axis=1), atol=1e-12)


def test_mixing_needs_horizon(fig1):
    with pytest.raises(InsufficientHorizon):
        estimate_mixing(fig1, 15)


# -- topology files -----------------------------------------------------------

def test_topology_round_trip(fig1):
    again = parse_topology(format_topology(fig1))
    assert again == fig1


def test_topology_comments_and_empty_blocks():
    s = parse_topology("# demo\nn 3 period 2 D 2\ngraph 2\nedge 1 2  # trailing\ngraph 1\n")
    assert s.graphs[0].edges == frozenset() and s.graphs[1].edges == {(1, 2)}


@pytest.mark.parametrize("text,where", [
    ("n 3 period 1 D 1\ngraph 1\nedge 1 9\n", ":3"),
    ("n 3 period 2 D 1\ngraph 1\n", "graph"),
    ("graph 1\n", ":1"),
    ("n 3 period 1 D 1\ngraph 1\nvertex 1 2\n", ":3"),
])
def test_topology_errors_carry_location(text, where):
    with pytest.raises(ValueError, match=where):
        parse_topology(text, source="t.txt")
