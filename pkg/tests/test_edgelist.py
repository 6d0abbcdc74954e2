"""Edge-list round trips and format errors."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snapcd.edgelist import (
    EdgeListFormatError,
    format_mixed_graph,
    parse_dag,
    parse_mixed_graph,
)
from snapcd.graphs import ARROW, TAIL, MixedGraph


def test_parse_all_edge_kinds():
    g = parse_mixed_graph("A -> B\nB -- C\nC <-> D\n")
    assert g.labels == ["A", "B", "C", "D"]
    assert g.is_directed(0, 1)
    assert g.is_undirected(1, 2)
    assert g.is_bidirected(2, 3)


def test_comments_and_blank_lines():
    g = parse_mixed_graph("# a comment\n\nA -> B  # inline\n")
    assert g.n_edges() == 1


def test_vertex_header_forces_count():
    g = parse_mixed_graph("vertices: 5\nA -> B\n")
    assert g.n_vertices == 5
    assert g.labels[2:] == ["V2", "V3", "V4"]


def test_header_below_used_names_rejected():
    with pytest.raises(EdgeListFormatError):
        parse_mixed_graph("vertices: 1\nA -> B\n")


def test_reverse_arrow():
    g = parse_mixed_graph("A <- B\n")
    assert g.is_directed(1, 0)


def test_malformed_line():
    with pytest.raises(EdgeListFormatError):
        parse_mixed_graph("A => B\n")


def test_duplicate_edge_rejected():
    with pytest.raises(EdgeListFormatError):
        parse_mixed_graph("A -> B\nB -- A\n")


def test_dag_rejects_undirected():
    with pytest.raises(EdgeListFormatError):
        parse_dag("A -- B\n")


def test_dag_parse_reversed_edges():
    dag = parse_dag("A <- B\nB <- C\n")
    assert (1, 0) in dag.edges and (2, 1) in dag.edges


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=40, deadline=None)
def test_round_trip(seed):
    import random

    rng = random.Random(seed)
    n = rng.randint(1, 7)
    g = MixedGraph(n, labels=[f"N{i}" for i in range(n)])
    kinds = [(TAIL, TAIL), (TAIL, ARROW), (ARROW, TAIL), (ARROW, ARROW)]
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < 0.5:
                mu, mv = rng.choice(kinds)
                g.add_edge(u, v, mu, mv)
    parsed = parse_mixed_graph(format_mixed_graph(g))
    assert parsed.n_vertices == g.n_vertices

    def canonical(graph):
        out = set()
        for u, v, mu, mv in graph.edges():
            lu, lv = graph.labels[u], graph.labels[v]
            out.add((lu, mu, lv, mv) if lu < lv else (lv, mv, lu, mu))
        return out

    assert canonical(parsed) == canonical(g)
