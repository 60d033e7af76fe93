import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qfrucht.autgroup import AutError, PermGroup, automorphism_group


def brute_count(adj, colours=None):
    n = adj.shape[0]
    colours = np.zeros(n, dtype=int) if colours is None else np.asarray(colours)
    count = 0
    for p in itertools.permutations(range(n)):
        p = np.array(p)
        if np.array_equal(colours[p], colours) and np.array_equal(adj[np.ix_(p, p)], adj):
            count += 1
    return count


def nx_count(graph):
    return sum(1 for _ in nx.algorithms.isomorphism.GraphMatcher(graph, graph).isomorphisms_iter())


def check_generators(adj, grp, colours=None):
    for gen in grp.generators:
        p = np.array(gen)
        assert sorted(gen) == list(range(adj.shape[0]))
        assert np.array_equal(adj[np.ix_(p, p)], adj)
        if colours is not None:
            assert np.array_equal(np.asarray(colours)[p], colours)


@settings(max_examples=120, deadline=None)
@given(st.integers(1, 7), st.booleans(), st.integers(0, 2**31))
def test_matches_brute_force(n, directed, seed):
    rng = np.random.default_rng(seed)
    adj = (rng.random((n, n)) < rng.uniform(0.2, 0.8)).astype(int)
    np.fill_diagonal(adj, 0)
    if not directed:
        adj = np.triu(adj, 1)
        adj = adj + adj.T
    grp = automorphism_group(adj)
    assert grp.order == brute_count(adj)
    check_generators(adj, grp)
    assert grp.closure_order() == grp.order


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31))
def test_coloured_matches_brute_force(n, seed):
    rng = np.random.default_rng(seed)
    adj = (rng.random((n, n)) < 0.5).astype(int)
    colours = rng.integers(0, 2, size=n)
    grp = automorphism_group(adj, colours)
    assert grp.order == brute_count(adj, colours)
    check_generators(adj, grp, colours)


@pytest.mark.parametrize("graph,order", [
    (nx.petersen_graph(), 120),
    (nx.hypercube_graph(4), 384),
    (nx.dodecahedral_graph(), 120),
    (nx.complete_bipartite_graph(4, 4), 1152),
    (nx.cycle_graph(12), 24),
])
def test_named_graphs_against_networkx(graph, order):
    adj = nx.to_numpy_array(graph, dtype=int)
    grp = automorphism_group(adj)
    assert grp.order == order
    if graph.number_of_nodes() <= 12:
        assert nx_count(graph) == order
    check_generators(adj, grp)
    assert grp.closure_order() == order


def test_frucht_graph_is_asymmetric_cubic():
    adj = nx.to_numpy_array(nx.frucht_graph(), dtype=int)
    assert set(adj.sum(axis=0)) == {3}
    assert automorphism_group(adj).order == 1


def test_directed_cycle():
    n = 7
    adj = np.zeros((n, n), dtype=int)
    adj[(np.arange(n) + 1) % n, np.arange(n)] = 1
    assert automorphism_group(adj).order == n


def test_empty_and_complete():
    assert automorphism_group(np.zeros((5, 5), dtype=int)).order == 120
    assert automorphism_group(np.ones((4, 4), dtype=int) - np.eye(4, dtype=int)).order == 24
    assert automorphism_group(np.zeros((0, 0), dtype=int)).order == 1


def test_vertex_cap():
    with pytest.raises(AutError):
        automorphism_group(np.zeros((10, 10), dtype=int), vertex_cap=5)


def test_closure_order_cap():
    grp = PermGroup(5, ((1, 2, 3, 4, 0), (1, 0, 2, 3, 4)), 120)
    assert grp.closure_order() == 120
    with pytest.raises(AutError):
        grp.closure_order(cap=50)
