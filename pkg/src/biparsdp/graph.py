"""Aggregated sparsity pattern graph and its structural queries.

The graph has a vertex per variable and an edge (i, j) wherever some data
matrix has a nonzero off-diagonal entry at (i, j).  The queries implemented
here (edge signs, bipartition, connectivity, cycle basis, forest test) decide
which exactness condition applies to an instance.

Vertices are 0-based internally; the CLI layer converts to 1-based output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import QcqpInstance

Edge = tuple[int, int]


def _norm_edge(i: int, j: int) -> Edge:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class SparsityGraph:
    n: int
    edges: frozenset[Edge]

    def neighbors(self, i: int) -> list[int]:
        out = []
        for a, b in self.edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return sorted(out)

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for a, b in sorted(self.edges):
            adj[a].append(b)
            adj[b].append(a)
        for lst in adj:
            lst.sort()
        return adj


@dataclass(frozen=True)
class BipartitionResult:
    bipartite: bool
    parts: tuple[frozenset[int], frozenset[int]] | None
    witness: tuple[int, ...] | None  # odd closed walk v0, ..., vk = v0


@dataclass(frozen=True)
class CycleBasis:
    cycles: tuple[tuple[Edge, ...], ...]


def build_graph(inst: QcqpInstance, zero_tol: float = 0.0) -> SparsityGraph:
    """Edge (i, j) present iff |Qp_ij| > zero_tol for some p in 0..m.

    The default zero_tol = 0 treats the data exactly; a positive tolerance is
    only meaningful for instances produced by floating-point transformations.
    """
    if zero_tol < 0:
        raise ValueError("zero_tol must be >= 0")
    n = inst.n
    mask = np.zeros((n, n), dtype=bool)
    for Q in inst.all_matrices():
        mask |= np.abs(Q) > zero_tol
    edges = {
        (i, j) for i in range(n) for j in range(i + 1, n) if mask[i, j]
    }
    return SparsityGraph(n=n, edges=frozenset(edges))


def edge_signs(inst: QcqpInstance, graph: SparsityGraph) -> dict[Edge, int]:
    """Per-edge sign: +1 if every Qp_ij >= 0, -1 if every <= 0, else 0.

    The sign is nonzero exactly when {Q0_ij, ..., Qm_ij} is sign-definite.
    Exact sign tests are used; the data carries no tolerance.
    """
    signs: dict[Edge, int] = {}
    for (i, j) in sorted(graph.edges):
        vals = [Q[i, j] for Q in inst.all_matrices()]
        if all(v >= 0 for v in vals):
            signs[(i, j)] = 1
        elif all(v <= 0 for v in vals):
            signs[(i, j)] = -1
        else:
            signs[(i, j)] = 0
    return signs


def connected_components(graph: SparsityGraph) -> list[frozenset[int]]:
    """Components ordered by their smallest vertex."""
    adj = graph.adjacency()
    seen = [False] * graph.n
    comps = []
    for start in range(graph.n):
        if seen[start]:
            continue
        comp = []
        queue = [start]
        seen[start] = True
        while queue:
            v = queue.pop()
            comp.append(v)
            for w in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    queue.append(w)
        comps.append(frozenset(comp))
    return comps


def bipartition(graph: SparsityGraph) -> BipartitionResult:
    """BFS 2-coloring per component; parts, or an odd closed walk witness.

    Isolated vertices land in the left part, so an empty edge set gives
    parts (V, {}).
    """
    adj = graph.adjacency()
    color = [-1] * graph.n
    parent = [-1] * graph.n
    for start in range(graph.n):
        if color[start] != -1:
            continue
        color[start] = 0
        queue = [start]
        head = 0
        while head < len(queue):
            v = queue[head]
            head += 1
            for w in adj[v]:
                if color[w] == -1:
                    color[w] = 1 - color[v]
                    parent[w] = v
                    queue.append(w)
                elif color[w] == color[v]:
                    return BipartitionResult(
                        bipartite=False,
                        parts=None,
                        witness=_odd_walk(v, w, parent),
                    )
    left = frozenset(i for i in range(graph.n) if color[i] == 0)
    right = frozenset(i for i in range(graph.n) if color[i] == 1)
    return BipartitionResult(bipartite=True, parts=(left, right), witness=None)


def _odd_walk(v: int, w: int, parent: list[int]) -> tuple[int, ...]:
    """Odd closed walk through the offending edge (v, w) via BFS-tree paths."""
    path_v = _root_path(v, parent)
    path_w = _root_path(w, parent)
    # strip the common prefix down to the lowest common ancestor
    k = 0
    while k < min(len(path_v), len(path_w)) and path_v[k] == path_w[k]:
        k += 1
    lca_idx = k - 1
    up = path_v[lca_idx:]
    down = path_w[lca_idx:]
    cycle = list(reversed(up)) + down[1:] + [v]
    return tuple(cycle)


def _root_path(v: int, parent: list[int]) -> list[int]:
    path = [v]
    while parent[path[-1]] != -1:
        path.append(parent[path[-1]])
    path.reverse()
    return path


def cycle_basis(graph: SparsityGraph) -> CycleBasis:
    """Fundamental cycles of a BFS spanning forest.

    Each non-tree edge closes exactly one cycle against the forest, so the
    basis has |E| - n + (#components) cycles.
    """
    adj = graph.adjacency()
    parent = [-1] * graph.n
    visited = [False] * graph.n
    tree_edges: set[Edge] = set()
    order = []
    for start in range(graph.n):
        if visited[start]:
            continue
        visited[start] = True
        queue = [start]
        head = 0
        while head < len(queue):
            v = queue[head]
            head += 1
            order.append(v)
            for w in adj[v]:
                if not visited[w]:
                    visited[w] = True
                    parent[w] = v
                    tree_edges.add(_norm_edge(v, w))
                    queue.append(w)
    cycles = []
    for (a, b) in sorted(graph.edges):
        if (a, b) in tree_edges:
            continue
        path_a = _root_path(a, parent)
        path_b = _root_path(b, parent)
        k = 0
        while k < min(len(path_a), len(path_b)) and path_a[k] == path_b[k]:
            k += 1
        verts = path_a[k - 1 :][::-1] + path_b[k - 1 :][1:]
        cyc = [_norm_edge(verts[t], verts[t + 1]) for t in range(len(verts) - 1)]
        cyc.append(_norm_edge(b, a))
        cycles.append(tuple(cyc))
    return CycleBasis(cycles=tuple(cycles))


def is_forest(graph: SparsityGraph) -> bool:
    """True iff the graph has no cycles."""
    comps = connected_components(graph)
    return len(graph.edges) == graph.n - len(comps)
