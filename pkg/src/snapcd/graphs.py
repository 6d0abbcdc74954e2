"""Graph representations and reachability queries for causal discovery.

Two graph types live here: :class:`Dag` for ground-truth directed acyclic
graphs, and :class:`MixedGraph` for skeletons, partially oriented graphs and
CPDAGs whose edges carry endpoint marks (tail or arrowhead). Vertices are
dense integer indices; labels are metadata only.
"""

from __future__ import annotations

import itertools
from collections import deque
from typing import Iterable, Iterator, Optional, Sequence

from .errors import (
    CyclicGraphError,
    EmptySelectionError,
    InvalidQueryError,
    SizeMismatchError,
)

# Endpoint marks. An edge {u, v} stores one mark per endpoint:
#   u -- v   tail/tail      u -> v   tail at u, arrow at v
#   u <-> v  arrow/arrow
TAIL = 0
ARROW = 1


class Dag:
    """Immutable directed acyclic graph over vertices ``0..n_vertices-1``.

    Raises :class:`CyclicGraphError` on construction if the edge set has a
    directed cycle. Self-loops and duplicate edges are rejected.
    """

    def __init__(
        self,
        n_vertices: int,
        edges: Iterable[tuple[int, int]] = (),
        labels: Optional[Sequence[str]] = None,
    ):
        self.n_vertices = int(n_vertices)
        if self.n_vertices < 0:
            raise ValueError("n_vertices must be nonnegative")
        edge_list = [(int(u), int(v)) for u, v in edges]
        seen: set[tuple[int, int]] = set()
        self._parents: list[list[int]] = [[] for _ in range(self.n_vertices)]
        self._children: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for u, v in edge_list:
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise ValueError(f"edge ({u}, {v}) out of range")
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
            self._children[u].append(v)
            self._parents[v].append(u)
        for adj in self._parents:
            adj.sort()
        for adj in self._children:
            adj.sort()
        self.edges: frozenset[tuple[int, int]] = frozenset(seen)
        self.labels = list(labels) if labels is not None else None
        if self.labels is not None and len(self.labels) != self.n_vertices:
            raise ValueError("labels length must match n_vertices")
        # Validates acyclicity as a side effect.
        self._topo = _kahn_order(self.n_vertices, self._parents, self._children)

    def parents(self, v: int) -> list[int]:
        return list(self._parents[v])

    def children(self, v: int) -> list[int]:
        return list(self._children[v])

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self.edges

    def adjacent(self, u: int, v: int) -> bool:
        return (u, v) in self.edges or (v, u) in self.edges

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def to_mixed(self) -> "MixedGraph":
        """View this DAG as a MixedGraph with all edges directed."""
        g = MixedGraph(self.n_vertices, labels=self.labels)
        for u, v in self.edges:
            g.add_edge(u, v, TAIL, ARROW)
        return g

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dag):
            return NotImplemented
        return self.n_vertices == other.n_vertices and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.n_vertices, self.edges))

    def __repr__(self) -> str:
        return f"Dag(n_vertices={self.n_vertices}, edges={sorted(self.edges)})"


def _kahn_order(n: int, parents: list[list[int]], children: list[list[int]]) -> list[int]:
    indeg = [len(parents[v]) for v in range(n)]
    ready = deque(v for v in range(n) if indeg[v] == 0)
    order: list[int] = []
    while ready:
        v = ready.popleft()
        order.append(v)
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
    if len(order) != n:
        raise CyclicGraphError("edge set contains a directed cycle")
    return order


def topological_order(dag: Dag) -> list[int]:
    """Return a topological order of ``dag`` (parents before children)."""
    return list(dag._topo)


def ancestors(dag: Dag, targets: Iterable[int]) -> set[int]:
    """All vertices with a directed path into ``targets``, targets included."""
    out = set(int(t) for t in targets)
    for t in out:
        if not 0 <= t < dag.n_vertices:
            raise ValueError(f"target {t} out of range")
    stack = list(out)
    while stack:
        v = stack.pop()
        for p in dag._parents[v]:
            if p not in out:
                out.add(p)
                stack.append(p)
    return out


def descendants(dag: Dag, sources: Iterable[int]) -> set[int]:
    """All vertices reachable by a directed path from ``sources``, sources included."""
    out = set(int(s) for s in sources)
    stack = list(out)
    while stack:
        v = stack.pop()
        for c in dag._children[v]:
            if c not in out:
                out.add(c)
                stack.append(c)
    return out


def d_separated(dag: Dag, x: int, y: int, s: Iterable[int] = ()) -> bool:
    """Decide whether ``x`` and ``y`` are d-separated given ``s`` in ``dag``.

    Uses reachability over an active-path state machine (Bayes-ball style):
    a vertex is explored in an "up" state (entered through a child) or a
    "down" state (entered through a parent), and collider traversal is
    allowed exactly when the collider has a conditioned descendant.

    Raises
    ------
    InvalidQueryError
        If ``x == y`` or either endpoint is inside ``s``.
    """
    cond = frozenset(int(v) for v in s)
    if x == y:
        raise InvalidQueryError("query endpoints must differ")
    if x in cond or y in cond:
        raise InvalidQueryError("endpoints may not appear in the conditioning set")
    for v in cond | {x, y}:
        if not 0 <= v < dag.n_vertices:
            raise ValueError(f"vertex {v} out of range")

    # Ancestors of the conditioning set; colliders are passable only there.
    cond_anc: set[int] = set(cond)
    stack = list(cond)
    while stack:
        v = stack.pop()
        for p in dag._parents[v]:
            if p not in cond_anc:
                cond_anc.add(p)
                stack.append(p)

    UP, DOWN = 0, 1
    queue: deque[tuple[int, int]] = deque([(x, UP)])
    visited: set[tuple[int, int]] = set()
    while queue:
        v, direction = queue.popleft()
        if (v, direction) in visited:
            continue
        visited.add((v, direction))
        if v == y:
            return False
        if direction == UP:
            if v not in cond:
                for p in dag._parents[v]:
                    queue.append((p, UP))
                for c in dag._children[v]:
                    queue.append((c, DOWN))
        else:
            if v not in cond:
                for c in dag._children[v]:
                    queue.append((c, DOWN))
            if v in cond_anc:
                for p in dag._parents[v]:
                    queue.append((p, UP))
    return True


class MixedGraph:
    """Mutable graph whose edges carry endpoint marks.

    At most one edge per unordered pair. ``mark_at(v, u)`` is the mark at
    the ``v`` end of the edge {u, v}; directed, undirected and bidirected
    edges are the three combinations of tail and arrowhead that arise here.
    """

    def __init__(self, n_vertices: int, labels: Optional[Sequence[str]] = None):
        self.n_vertices = int(n_vertices)
        # _end[v][u] = mark at vertex v on the edge {u, v}
        self._end: list[dict[int, int]] = [dict() for _ in range(self.n_vertices)]
        self.labels = list(labels) if labels is not None else None
        if self.labels is not None and len(self.labels) != self.n_vertices:
            raise ValueError("labels length must match n_vertices")

    # -- construction -----------------------------------------------------

    @classmethod
    def complete_undirected(cls, n_vertices: int, vertices: Optional[Iterable[int]] = None,
                            labels: Optional[Sequence[str]] = None) -> "MixedGraph":
        """Fully connected undirected graph over ``vertices`` (default: all)."""
        g = cls(n_vertices, labels=labels)
        verts = sorted(vertices) if vertices is not None else range(n_vertices)
        for u, v in itertools.combinations(verts, 2):
            g.add_edge(u, v, TAIL, TAIL)
        return g

    def add_edge(self, u: int, v: int, mark_u: int, mark_v: int) -> None:
        self._check(u)
        self._check(v)
        if u == v:
            raise ValueError(f"self-loop at vertex {u}")
        if v in self._end[u]:
            raise ValueError(f"edge {{{u}, {v}}} already present")
        self._end[u][v] = mark_u
        self._end[v][u] = mark_v

    def add_undirected_edge(self, u: int, v: int) -> None:
        self.add_edge(u, v, TAIL, TAIL)

    def add_directed_edge(self, u: int, v: int) -> None:
        self.add_edge(u, v, TAIL, ARROW)

    def remove_edge(self, u: int, v: int) -> None:
        if v not in self._end[u]:
            raise ValueError(f"no edge {{{u}, {v}}} to remove")
        del self._end[u][v]
        del self._end[v][u]

    def orient_into(self, u: int, v: int) -> None:
        """Place an arrowhead at ``v`` on the existing edge {u, v}.

        The mark at the ``u`` end is left untouched (wildcard orientation),
        so conflicting orientations accumulate into a bidirected edge.
        """
        if v not in self._end[u]:
            raise ValueError(f"no edge {{{u}, {v}}} to orient")
        self._end[v][u] = ARROW

    # -- queries ----------------------------------------------------------

    def _check(self, v: int) -> None:
        if not 0 <= v < self.n_vertices:
            raise ValueError(f"vertex {v} out of range")

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._end[u]

    def adjacent_pair(self, u: int, v: int) -> bool:
        return v in self._end[u]

    def mark_at(self, v: int, u: int) -> int:
        """Mark at the ``v`` end of the edge {u, v}."""
        return self._end[v][u]

    def adjacency(self, v: int) -> list[int]:
        """Neighbors of ``v`` in ascending order."""
        return sorted(self._end[v])

    def degree(self, v: int) -> int:
        return len(self._end[v])

    def is_undirected(self, u: int, v: int) -> bool:
        return self._end[u].get(v) == TAIL and self._end[v].get(u) == TAIL

    def is_directed(self, u: int, v: int) -> bool:
        """True iff the edge is exactly u -> v."""
        return self._end[u].get(v) == TAIL and self._end[v].get(u) == ARROW

    def is_bidirected(self, u: int, v: int) -> bool:
        return self._end[u].get(v) == ARROW and self._end[v].get(u) == ARROW

    def parents(self, v: int) -> list[int]:
        """Definite parents: u with u -> v."""
        return [u for u in self.adjacency(v) if self.is_directed(u, v)]

    def children(self, v: int) -> list[int]:
        return [u for u in self.adjacency(v) if self.is_directed(v, u)]

    def undirected_neighbors(self, v: int) -> list[int]:
        return [u for u in self.adjacency(v) if self.is_undirected(u, v)]

    def bidirected_neighbors(self, v: int) -> list[int]:
        return [u for u in self.adjacency(v) if self.is_bidirected(u, v)]

    def edges(self) -> Iterator[tuple[int, int, int, int]]:
        """Yield (u, v, mark_u, mark_v) with u < v, sorted."""
        for u in range(self.n_vertices):
            for v in sorted(self._end[u]):
                if u < v:
                    yield u, v, self._end[u][v], self._end[v][u]

    def n_edges(self) -> int:
        return sum(len(d) for d in self._end) // 2

    def copy(self) -> "MixedGraph":
        g = MixedGraph(self.n_vertices, labels=self.labels)
        g._end = [dict(d) for d in self._end]
        return g

    def undirected_copy(self) -> "MixedGraph":
        """Copy with every edge reset to undirected (the skeleton)."""
        g = MixedGraph(self.n_vertices, labels=self.labels)
        g._end = [{u: TAIL for u in d} for d in self._end]
        return g

    def retain_vertices(self, keep: Iterable[int]) -> None:
        """Drop every edge with an endpoint outside ``keep`` (in place)."""
        keep_set = set(keep)
        for v in range(self.n_vertices):
            if v not in keep_set:
                for u in list(self._end[v]):
                    self.remove_edge(u, v)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MixedGraph):
            return NotImplemented
        return self.n_vertices == other.n_vertices and self._end == other._end

    def __hash__(self) -> int:  # pragma: no cover - graphs are not dict keys
        return hash((self.n_vertices, tuple(tuple(sorted(d.items())) for d in self._end)))

    def __repr__(self) -> str:
        sym = {(TAIL, TAIL): "--", (TAIL, ARROW): "->", (ARROW, TAIL): "<-", (ARROW, ARROW): "<->"}
        parts = [f"{u}{sym[(mu, mv)]}{v}" for u, v, mu, mv in self.edges()]
        return f"MixedGraph({self.n_vertices}: {', '.join(parts)})"


class SepsetMap:
    """Symmetric map from unordered vertex pairs to separating sets."""

    def __init__(self) -> None:
        self._data: dict[tuple[int, int], frozenset[int]] = {}

    @staticmethod
    def _key(x: int, y: int) -> tuple[int, int]:
        if x == y:
            raise InvalidQueryError("a pair must consist of two distinct vertices")
        return (x, y) if x < y else (y, x)

    def set(self, x: int, y: int, s: Iterable[int]) -> None:
        sep = frozenset(int(v) for v in s)
        if x in sep or y in sep:
            raise InvalidQueryError("a separating set may not contain its own pair")
        self._data[self._key(x, y)] = sep

    def get(self, x: int, y: int) -> Optional[frozenset[int]]:
        return self._data.get(self._key(x, y))

    def __contains__(self, pair: tuple[int, int]) -> bool:
        return self._key(*pair) in self._data

    def __len__(self) -> int:
        return len(self._data)

    def items(self) -> list[tuple[tuple[int, int], frozenset[int]]]:
        return sorted(self._data.items())

    def copy(self) -> "SepsetMap":
        out = SepsetMap()
        out._data = dict(self._data)
        return out


# -- possibly directed reachability ---------------------------------------


def _possibly_reaching(g: MixedGraph, seeds: Iterable[int], forward: bool,
                       blocked: frozenset[int] = frozenset()) -> set[int]:
    """Vertices connected to ``seeds`` by a possibly directed path.

    ``forward=True`` walks source-to-descendant, ``forward=False`` walks
    ancestor-to-target. A step u -> v is traversable iff the mark at the u
    end is a tail, so bidirected edges are never traversable. ``blocked``
    vertices are not entered or expanded.
    """
    out = set(int(v) for v in seeds)
    for v in out:
        g._check(v)
    out -= set(blocked)
    stack = list(out)
    while stack:
        v = stack.pop()
        for u in g._end[v]:
            if u in out or u in blocked:
                continue
            if forward:
                # extend path ... v -> u: tail needed at v end
                traversable = g._end[v][u] == TAIL
            else:
                # prepend step u -> v: tail needed at u end
                traversable = g._end[u][v] == TAIL
            if traversable:
                out.add(u)
                stack.append(u)
    return out


def possible_ancestors(g: MixedGraph, targets: Iterable[int]) -> set[int]:
    """Vertices with a possibly directed path to some target, targets included.

    A possibly directed path uses only undirected edges or directed edges
    pointing toward the target; bidirected edges are not traversable.
    """
    return _possibly_reaching(g, targets, forward=False)


def possible_descendants(g: MixedGraph, sources: Iterable[int]) -> set[int]:
    """Mirror of :func:`possible_ancestors` with path direction reversed."""
    return _possibly_reaching(g, sources, forward=True)


def induced_subgraph(g: MixedGraph, keep: Iterable[int]) -> tuple[MixedGraph, dict[int, int]]:
    """Induced subgraph over ``keep``, re-indexed to ``0..len(keep)-1``.

    Returns the new graph together with the old-to-new index map. Vertices
    are re-indexed in ascending order of their old index.
    """
    keep_sorted = sorted(set(int(v) for v in keep))
    if not keep_sorted:
        raise EmptySelectionError("cannot induce a subgraph on an empty vertex set")
    for v in keep_sorted:
        g._check(v)
    index_map = {old: new for new, old in enumerate(keep_sorted)}
    labels = None
    if g.labels is not None:
        labels = [g.labels[v] for v in keep_sorted]
    sub = MixedGraph(len(keep_sorted), labels=labels)
    for old in keep_sorted:
        for other, mark_old in g._end[old].items():
            if other in index_map and old < other:
                sub.add_edge(index_map[old], index_map[other], mark_old, g._end[other][old])
    return sub, index_map


# -- equivalence class machinery -------------------------------------------


def meek_closure(g: MixedGraph) -> MixedGraph:
    """Apply the three Meek orientation rules until fixpoint.

    R1: x -> z - y with x, y non-adjacent orients z -> y.
    R2: x -> z -> y with x - y orients x -> y.
    R3: x -> z <- y with x - v - y, v - z, x, y non-adjacent orients v -> z.

    Bidirected edges match no rule pattern and are left untouched. The input
    is not modified; scan order is deterministic.
    """
    out = g.copy()
    changed = True
    while changed:
        changed = False
        for z in range(out.n_vertices):
            for y in out.undirected_neighbors(z):
                # R1
                if any(not out.adjacent_pair(x, y) for x in out.parents(z) if x != y):
                    out.orient_into(z, y)
                    changed = True
        for x in range(out.n_vertices):
            for y in out.undirected_neighbors(x):
                # R2
                if any(out.is_directed(z, y) for z in out.children(x)):
                    out.orient_into(x, y)
                    changed = True
        for v in range(out.n_vertices):
            for z in out.undirected_neighbors(v):
                # R3
                candidates = [w for w in out.undirected_neighbors(v)
                              if w != z and out.is_directed(w, z)]
                done = False
                for x, y in itertools.combinations(candidates, 2):
                    if not out.adjacent_pair(x, y):
                        out.orient_into(v, z)
                        changed = True
                        done = True
                        break
                if done:
                    continue
    return out


def vstructures(dag: Dag) -> set[tuple[int, int, int]]:
    """All (x, z, y) with x -> z <- y, x < y, and x, y non-adjacent."""
    out = set()
    for z in range(dag.n_vertices):
        for x, y in itertools.combinations(dag._parents[z], 2):
            if not dag.adjacent(x, y):
                out.add((x, z, y))
    return out


def cpdag_of(dag: Dag) -> MixedGraph:
    """The CPDAG of ``dag``: skeleton, v-structures, then Meek closure."""
    g = MixedGraph(dag.n_vertices, labels=dag.labels)
    for u, v in dag.sorted_edges():
        g.add_undirected_edge(u, v)
    for x, z, y in sorted(vstructures(dag)):
        g.orient_into(x, z)
        g.orient_into(y, z)
    return meek_closure(g)


def shd(g1: MixedGraph, g2: MixedGraph) -> int:
    """Structural Hamming distance between two mixed graphs.

    Each vertex pair whose edge status or endpoint marks differ costs one,
    regardless of the kind of difference.
    """
    if g1.n_vertices != g2.n_vertices:
        raise SizeMismatchError("graphs must share a vertex count")
    count = 0
    for u in range(g1.n_vertices):
        for v in range(u + 1, g1.n_vertices):
            m1 = (g1._end[u].get(v), g1._end[v].get(u))
            m2 = (g2._end[u].get(v), g2._end[v].get(u))
            if m1 != m2:
                count += 1
    return count
