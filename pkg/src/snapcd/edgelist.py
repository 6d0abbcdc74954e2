"""Plain-text edge list format for graphs.

One edge per line: ``A -> B``, ``A -- B`` or ``A <-> B``. Vertex names are
declared implicitly by first appearance; an optional header ``vertices: N``
forces the vertex count (useful for isolated vertices). ``#`` starts a
comment.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from .errors import SnapError
from .graphs import ARROW, TAIL, Dag, MixedGraph

_MARKS = {
    "--": (TAIL, TAIL),
    "->": (TAIL, ARROW),
    "<-": (ARROW, TAIL),
    "<->": (ARROW, ARROW),
}
_SYMBOL = {(TAIL, TAIL): "--", (TAIL, ARROW): "->", (ARROW, TAIL): "<-", (ARROW, ARROW): "<->"}


class EdgeListFormatError(SnapError):
    """Malformed edge-list text."""


def parse_mixed_graph(text: str) -> MixedGraph:
    """Parse edge-list text into a :class:`MixedGraph` with labels."""
    names: dict[str, int] = {}
    triples: list[tuple[str, str, str]] = []
    forced_n: Optional[int] = None

    def intern(name: str) -> int:
        if name not in names:
            names[name] = len(names)
        return names[name]

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower().startswith("vertices:"):
            try:
                forced_n = int(line.split(":", 1)[1])
            except ValueError:
                raise EdgeListFormatError(f"line {lineno}: bad vertex count in {raw!r}")
            continue
        parts = line.split()
        if len(parts) != 3 or parts[1] not in _MARKS:
            raise EdgeListFormatError(f"line {lineno}: expected 'A -> B', 'A -- B' or 'A <-> B', got {raw!r}")
        a, op, b = parts
        if a == b:
            raise EdgeListFormatError(f"line {lineno}: self-loop on {a!r}")
        intern(a)
        intern(b)
        triples.append((a, op, b))

    n = len(names)
    if forced_n is not None:
        if forced_n < n:
            raise EdgeListFormatError(f"vertices: {forced_n} is below the {n} names used")
        n = forced_n
    labels = [None] * n
    for name, idx in names.items():
        labels[idx] = name
    used = set(names)
    for i in range(n):
        if labels[i] is None:
            candidate = f"V{i}"
            while candidate in used:
                candidate += "_"
            used.add(candidate)
            labels[i] = candidate
    g = MixedGraph(n, labels=labels)
    for a, op, b in triples:
        mark_a, mark_b = _MARKS[op]
        u, v = names[a], names[b]
        if g.has_edge(u, v):
            raise EdgeListFormatError(f"duplicate edge between {a!r} and {b!r}")
        g.add_edge(u, v, mark_a, mark_b)
    return g


def parse_dag(text: str) -> Dag:
    """Parse edge-list text where every edge must be directed."""
    g = parse_mixed_graph(text)
    edges = []
    for u, v, mu, mv in g.edges():
        if (mu, mv) == (TAIL, ARROW):
            edges.append((u, v))
        elif (mu, mv) == (ARROW, TAIL):
            edges.append((v, u))
        else:
            raise EdgeListFormatError("a DAG file may only contain '->' edges")
    return Dag(g.n_vertices, edges, labels=g.labels)


def format_mixed_graph(g: MixedGraph) -> str:
    """Render a graph as edge-list text (stable, sorted output)."""
    labels = g.labels if g.labels is not None else [f"V{i}" for i in range(g.n_vertices)]
    lines = [f"vertices: {g.n_vertices}"]
    for u, v, mu, mv in g.edges():
        lines.append(f"{labels[u]} {_SYMBOL[(mu, mv)]} {labels[v]}")
    return "\n".join(lines) + "\n"


def format_dag(dag: Dag) -> str:
    return format_mixed_graph(dag.to_mixed())


def load_mixed_graph(path: str | Path) -> MixedGraph:
    return parse_mixed_graph(Path(path).read_text(encoding="utf-8"))


def load_dag(path: str | Path) -> Dag:
    return parse_dag(Path(path).read_text(encoding="utf-8"))


def save_mixed_graph(g: MixedGraph, path: str | Path) -> None:
    Path(path).write_text(format_mixed_graph(g), encoding="utf-8")


def save_dag(dag: Dag, path: str | Path) -> None:
    Path(path).write_text(format_dag(dag), encoding="utf-8")
