"""Brute-force oracles and small-graph utilities for the test suite.

Everything here is deliberately naive: path enumeration for d-separation,
exhaustive orientation enumeration for equivalence classes, and simple-path
enumeration for causal-node sets. These stay independent of the package's
production implementations so they can arbitrate correctness.
"""

from __future__ import annotations

import itertools
import random

from snapcd.graphs import ARROW, TAIL, Dag, MixedGraph, ancestors


def all_simple_paths(adjacency: dict[int, set[int]], x: int, y: int) -> list[list[int]]:
    paths = []
    stack = [(x, [x])]
    while stack:
        node, path = stack.pop()
        if node == y:
            paths.append(path)
            continue
        for nxt in sorted(adjacency[node]):
            if nxt not in path:
                stack.append((nxt, path + [nxt]))
    return paths


def brute_force_d_separated(dag: Dag, x: int, y: int, s) -> bool:
    """Enumerate every skeleton path and test the blocking criterion."""
    s = set(s)
    adjacency = {v: set() for v in range(dag.n_vertices)}
    for u, v in dag.edges:
        adjacency[u].add(v)
        adjacency[v].add(u)
    from snapcd.graphs import descendants

    for path in all_simple_paths(adjacency, x, y):
        blocked = False
        for i in range(1, len(path) - 1):
            prev, node, nxt = path[i - 1], path[i], path[i + 1]
            into_prev = (prev, node) in dag.edges
            into_next = (nxt, node) in dag.edges
            collider = into_prev and into_next
            if collider:
                if not (descendants(dag, {node}) & s):
                    blocked = True
                    break
            else:
                if node in s:
                    blocked = True
                    break
        if not blocked:
            return False
    return True


def dag_vstructures(dag: Dag) -> set[tuple[int, int, int]]:
    out = set()
    for z in range(dag.n_vertices):
        for a, b in itertools.combinations(sorted(dag.parents(z)), 2):
            if not dag.adjacent(a, b):
                out.add((a, z, b))
    return out


def enumerate_mec(dag: Dag) -> list[Dag]:
    """All DAGs with the same skeleton and v-structures, by brute force."""
    skeleton = sorted({(min(u, v), max(u, v)) for u, v in dag.edges})
    reference = dag_vstructures(dag)
    members = []
    for orientation in itertools.product((0, 1), repeat=len(skeleton)):
        edges = [(u, v) if flip == 0 else (v, u)
                 for (u, v), flip in zip(skeleton, orientation)]
        try:
            candidate = Dag(dag.n_vertices, edges)
        except Exception:
            continue
        if dag_vstructures(candidate) == reference:
            members.append(candidate)
    return members


def brute_possible_ancestors(dag: Dag, targets) -> set[int]:
    """Union of ancestor sets over the brute-force equivalence class."""
    out = set()
    for member in enumerate_mec(dag):
        out |= ancestors(member, targets)
    return out


def random_small_dag(rng: random.Random, n: int, p: float) -> Dag:
    """Plain upper-triangular coin-flip DAG over a shuffled order."""
    order = list(range(n))
    rng.shuffle(order)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.append((order[i], order[j]))
    return Dag(n, edges)


def brute_causal_nodes(g: MixedGraph, x: int, y: int) -> set[int]:
    """Nodes on simple possibly directed paths from x to y, by enumeration."""
    found = set()
    stack = [(x, [x])]
    while stack:
        node, path = stack.pop()
        if node == y:
            found.update(path[1:])
            continue
        for nxt in g.adjacency(node):
            if nxt in path:
                continue
            if g.mark_at(node, nxt) != TAIL:
                continue
            stack.append((nxt, path + [nxt]))
    return found


def brute_is_amenable(g: MixedGraph, x: int, y: int) -> bool:
    """Enumerate proper possibly directed paths; none may start undirected."""
    stack = [(x, [x])]
    while stack:
        node, path = stack.pop()
        if node == y:
            first, second = path[0], path[1]
            if g.is_undirected(first, second):
                return False
            continue
        for nxt in g.adjacency(node):
            if nxt in path:
                continue
            if g.mark_at(node, nxt) != TAIL:
                continue
            stack.append((nxt, path + [nxt]))
    return True


def mixed_from_edges(n: int, directed=(), undirected=(), bidirected=()) -> MixedGraph:
    g = MixedGraph(n)
    for u, v in directed:
        g.add_edge(u, v, TAIL, ARROW)
    for u, v in undirected:
        g.add_edge(u, v, TAIL, TAIL)
    for u, v in bidirected:
        g.add_edge(u, v, ARROW, ARROW)
    return g
