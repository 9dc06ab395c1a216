"""Tests for the aggregated sparsity graph and its structural queries."""

import itertools

import numpy as np
import pytest

from biparsdp import (
    QcqpInstance,
    SparsityGraph,
    bipartition,
    build_graph,
    connected_components,
    cycle_basis,
    edge_signs,
    is_forest,
)


def _instance_from_pattern(M):
    """Instance with a single constraint carrying the given symmetric pattern."""
    M = np.asarray(M, dtype=float)
    return QcqpInstance(
        objective=np.zeros_like(M),
        constraint_matrices=(M,),
        rhs=np.array([1.0]),
    )


def test_build_graph_cycle4(cycle4):
    """The 4-variable instance aggregates to a 4-cycle."""
    g = build_graph(cycle4)
    assert g.n == 4
    assert g.edges == frozenset({(0, 1), (1, 2), (2, 3), (0, 3)})


def test_build_graph_union_over_all_matrices():
    """An edge appears if any matrix, including the objective, has the entry."""
    Q0 = np.array([[0.0, 1.0], [1.0, 0.0]])
    inst = QcqpInstance(
        objective=Q0, constraint_matrices=(np.eye(2),), rhs=np.array([1.0])
    )
    assert build_graph(inst).edges == frozenset({(0, 1)})


def test_build_graph_diagonal_only():
    """Diagonal data gives an empty edge set."""
    inst = _instance_from_pattern(np.diag([1.0, 2.0, 3.0]))
    g = build_graph(inst)
    assert g.edges == frozenset()
    assert is_forest(g)
    assert bipartition(g).parts == (frozenset({0, 1, 2}), frozenset())


def test_edge_signs(small, cycle4):
    """Signs are +1/-1 when all entries agree and 0 for mixed edges."""
    signs = edge_signs(small, build_graph(small))
    assert signs == {(0, 1): 0}  # -1 in the objective, +4 in the constraint

    signs = edge_signs(cycle4, build_graph(cycle4))
    assert signs[(0, 1)] == 0 and signs[(1, 2)] == 0

    M = np.array([[0.0, -2.0, 0.0], [-2.0, 0.0, 3.0], [0.0, 3.0, 0.0]])
    signs = edge_signs(_instance_from_pattern(M), build_graph(_instance_from_pattern(M)))
    assert signs == {(0, 1): -1, (1, 2): 1}


def test_bipartition_cycle4(cycle4):
    """The 4-cycle splits into {0, 2} and {1, 3}."""
    bip = bipartition(build_graph(cycle4))
    assert bip.bipartite
    assert set(map(frozenset, bip.parts)) == {frozenset({0, 2}), frozenset({1, 3})}


def test_bipartition_triangle_witness():
    """A triangle is rejected with a valid odd closed walk."""
    g = SparsityGraph(n=3, edges=frozenset({(0, 1), (1, 2), (0, 2)}))
    bip = bipartition(g)
    assert not bip.bipartite
    walk = bip.witness
    assert walk[0] == walk[-1]
    assert len(walk) % 2 == 0  # k+1 vertices listed for an odd closed walk
    for a, b in zip(walk, walk[1:]):
        assert (min(a, b), max(a, b)) in g.edges


def test_connected_components_ordering():
    """Components come back ordered by smallest vertex."""
    g = SparsityGraph(n=5, edges=frozenset({(1, 3), (0, 4)}))
    comps = connected_components(g)
    assert comps == [frozenset({0, 4}), frozenset({1, 3}), frozenset({2})]


def test_cycle_basis_counts():
    """|E| - n + #components fundamental cycles; each closes a non-tree edge."""
    k4 = SparsityGraph(
        n=4, edges=frozenset(itertools.combinations(range(4), 2))
    )
    basis = cycle_basis(k4)
    assert len(basis.cycles) == 3
    for cyc in basis.cycles:
        assert len(cyc) >= 3
        # consecutive edges chain into a closed walk: each vertex seen twice
        count = {}
        for a, b in cyc:
            count[a] = count.get(a, 0) + 1
            count[b] = count.get(b, 0) + 1
        assert all(c == 2 for c in count.values())

    tree = SparsityGraph(n=4, edges=frozenset({(0, 1), (1, 2), (1, 3)}))
    assert cycle_basis(tree).cycles == ()
    assert is_forest(tree)
    assert not is_forest(k4)


def test_bipartite_iff_even_basis_cycles():
    """A graph is bipartite exactly when every fundamental cycle is even."""
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(2, 9))
        edges = {
            (i, j)
            for i in range(n)
            for j in range(i + 1, n)
            if rng.random() < 0.35
        }
        g = SparsityGraph(n=n, edges=frozenset(edges))
        basis = cycle_basis(g)
        all_even = all(len(c) % 2 == 0 for c in basis.cycles)
        assert bipartition(g).bipartite == all_even


def _bipartite_by_exhaustion(g):
    """Brute-force 2-colorability over all colorings."""
    for bits in range(2 ** g.n):
        colors = [(bits >> v) & 1 for v in range(g.n)]
        if all(colors[a] != colors[b] for a, b in g.edges):
            return True
    return False


def test_bipartition_matches_exhaustive_coloring():
    """BFS 2-coloring agrees with exhaustive search on small random graphs."""
    rng = np.random.default_rng(5)
    for _ in range(60):
        n = int(rng.integers(1, 11))
        p = rng.uniform(0.1, 0.6)
        edges = {
            (i, j)
            for i in range(n)
            for j in range(i + 1, n)
            if rng.random() < p
        }
        g = SparsityGraph(n=n, edges=frozenset(edges))
        assert bipartition(g).bipartite == _bipartite_by_exhaustion(g)


def test_build_graph_zero_tol():
    """A positive zero_tol drops entries at or below it."""
    M = np.array([[0.0, 1e-12], [1e-12, 0.0]])
    inst = _instance_from_pattern(M)
    assert build_graph(inst).edges == frozenset({(0, 1)})
    assert build_graph(inst, zero_tol=1e-9).edges == frozenset()
    with pytest.raises(ValueError):
        build_graph(inst, zero_tol=-1.0)
