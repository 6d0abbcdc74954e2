"""Constraint-based discovery: per-order skeleton search, v-structure
orientation (PC and RFCI variants), Meek closure, sequential non-ancestor
pruning (snap_k / snap_inf), and a full PC baseline.

All algorithms share one deterministic iteration discipline: vertices and
adjacency lists are scanned in ascending index order, conditioning sets are
enumerated lexicographically over the sorted adjacency of the first
endpoint, and the RFCI worklist is processed in lexicographic triple order
with newly created triples appended. Each run deduplicates CI queries
through a per-run cache, so a repeated query never reaches the tester twice
and counters report unique tests.
"""

from __future__ import annotations

import itertools
import json
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .citests import CITester, CounterSnapshot
from .edgelist import format_mixed_graph
from .errors import MissingSepsetError
from .graphs import (
    MixedGraph,
    SepsetMap,
    induced_subgraph,
    meek_closure,
    possible_ancestors,
)

__all__ = [
    "DiscoveryState",
    "DiscoveryResult",
    "RfciStats",
    "skeleton_step",
    "orient_vstructures_pc",
    "orient_vstructures_rfci",
    "prune_non_ancestors",
    "meek_closure",
    "snap_k",
    "snap_inf",
    "pc",
    "snap_prefilter_then",
]


class _QueryCache:
    """Per-run memo of CI verdicts keyed by the symmetric query.

    Queries are packed into a single integer (conditioning-set bitmask plus
    the sorted pair), so repeated queries never reach the tester and the
    memo stays compact even for runs with millions of unique tests.
    """

    def __init__(self, tester: CITester):
        self.tester = tester
        shift = getattr(tester, "n_vertices", 0).bit_length()
        self._shift = max(shift, 1)
        self._memo: dict[int, bool] = {}
        self.calls = 0
        self.misses = 0

    def test(self, x: int, y: int, s) -> bool:
        self.calls += 1
        if x > y:
            x, y = y, x
        mask = 0
        for v in s:
            mask |= 1 << v
        key = ((mask << self._shift | x) << self._shift) | y
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        verdict = self.tester.test(x, y, s)
        self.misses += 1
        self._memo[key] = verdict
        return verdict


@dataclass
class DiscoveryState:
    """Mutable state threaded through the per-order discovery loop."""

    remaining: set[int]
    skeleton: MixedGraph
    sepsets: SepsetMap
    oriented: Optional[MixedGraph] = None
    order: int = 0


@dataclass
class RfciStats:
    """Counters for the RFCI orientation phases of one run."""

    triples_processed: int = 0
    edges_deleted: int = 0
    max_sepset_size: int = 0
    queries: int = 0

    def merge(self, other: "RfciStats") -> None:
        self.triples_processed += other.triples_processed
        self.edges_deleted += other.edges_deleted
        self.max_sepset_size = max(self.max_sepset_size, other.max_sepset_size)
        self.queries += other.queries

    def budget(self) -> int:
        """Upper bound on the queries this phase is allowed to spend."""
        return 2 * self.triples_processed + self.edges_deleted * self.max_sepset_size ** 2


@dataclass
class DiscoveryResult:
    """Output of one discovery run.

    ``graph`` is re-indexed over ``remaining`` (ascending original index);
    ``index_map`` maps original to new indices. ``sepsets`` keeps original
    indices. ``counts`` is the tester counter snapshot at the end of the
    run, so a prefilter pipeline reports accumulated totals.
    """

    graph: MixedGraph
    remaining: list[int]
    index_map: dict[int, int]
    sepsets: SepsetMap
    counts: CounterSnapshot
    wall_ms: float
    rfci_stats: RfciStats = field(default_factory=RfciStats)

    def metrics_dict(self) -> dict:
        return {
            "ci_tests_total": self.counts.total,
            "ci_tests_by_order": {str(k): v for k, v in self.counts.by_order().items()},
            "remaining": list(self.remaining),
            "wall_ms": self.wall_ms,
        }

    def write(self, prefix: str | Path) -> tuple[Path, Path]:
        """Write ``<prefix>.edges`` and a ``<prefix>.json`` metrics sidecar."""
        prefix = Path(prefix)
        edges_path = prefix.with_suffix(".edges")
        json_path = prefix.with_suffix(".json")
        edges_path.write_text(format_mixed_graph(self.graph), encoding="utf-8")
        json_path.write_text(json.dumps(self.metrics_dict(), indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")
        return edges_path, json_path


def _as_vertices(vertices: Iterable[int] | int) -> list[int]:
    if isinstance(vertices, int):
        return list(range(vertices))
    return sorted(set(int(v) for v in vertices))


def skeleton_step(state: DiscoveryState, tester, order: int) -> DiscoveryState:
    """One order of PC-style skeleton search, in place.

    For every ordered pair (x, y adjacent to x), conditioning sets of size
    ``order`` are drawn lexicographically from the current adjacency of x
    minus y until one separates; the edge is then deleted and the set is
    recorded symmetrically.
    """
    skel = state.skeleton
    seps = state.sepsets
    for x in sorted(state.remaining):
        for y in skel.adjacency(x):
            if not skel.has_edge(x, y):
                continue
            candidates = [v for v in skel.adjacency(x) if v != y]
            if len(candidates) < order:
                continue
            for s in itertools.combinations(candidates, order):
                if tester.test(x, y, s):
                    skel.remove_edge(x, y)
                    seps.set(x, y, s)
                    break
    state.order = order
    return state


def _unshielded_triples(g: MixedGraph) -> list[tuple[int, int, int]]:
    """All (x, z, y) with x - z - y, x < y and x, y non-adjacent, sorted."""
    out: list[tuple[int, int, int]] = []
    for z in range(g.n_vertices):
        nbrs = g.adjacency(z)
        for x, y in itertools.combinations(nbrs, 2):
            if not g.has_edge(x, y):
                out.append((x, z, y))
    out.sort()
    return out


def _require_sepset(seps: SepsetMap, x: int, y: int) -> frozenset[int]:
    sep = seps.get(x, y)
    if sep is None:
        raise MissingSepsetError(f"no separating set recorded for pair ({x}, {y})")
    return sep


def orient_vstructures_pc(skeleton: MixedGraph, sepsets: SepsetMap) -> MixedGraph:
    """PC v-structure orientation.

    Every unshielded triple x - z - y with z outside sepset(x, y) gets
    arrowheads into z from both sides; marks already present at the far
    ends are preserved, so conflicting triples yield bidirected edges.
    """
    g = skeleton.copy()
    for x, z, y in _unshielded_triples(skeleton):
        sep = _require_sepset(sepsets, x, y)
        if z not in sep:
            g.orient_into(x, z)
            g.orient_into(y, z)
    return g


def orient_vstructures_rfci(
    skeleton: MixedGraph,
    sepsets: SepsetMap,
    tester,
) -> tuple[MixedGraph, SepsetMap, MixedGraph, RfciStats]:
    """RFCI v-structure orientation with sepset minimization.

    Unshielded triples (x, z, y) with z outside sepset(x, y) are kept only
    when both x and y remain dependent on z given that sepset. When one
    side turns out independent, the separating set is minimized by single
    element removal, recorded for the pair, and the spurious edge deleted;
    the worklist is extended with the triangles the deletion unshields and
    purged of triples that used the deleted edge.

    ``skeleton`` and ``sepsets`` are updated in place and also returned,
    together with the oriented graph and phase statistics.
    """
    counter = getattr(tester, "counter", None) or tester.tester.counter
    queries_before = counter.total
    stats = RfciStats()
    worklist: deque[tuple[int, int, int]] = deque(_unshielded_triples(skeleton))
    legitimate: list[tuple[int, int, int]] = []
    while worklist:
        x, z, y = worklist.popleft()
        sep = _require_sepset(sepsets, x, y)
        if z in sep:
            continue
        stats.triples_processed += 1
        x_dep = not tester.test(x, z, sep)
        y_dep = not tester.test(z, y, sep)
        if x_dep and y_dep:
            legitimate.append((x, z, y))
            continue
        for v, dependent in ((x, x_dep), (y, y_dep)):
            if dependent or not skeleton.has_edge(v, z):
                continue
            minimal = set(sep)
            shrunk = True
            while shrunk:
                shrunk = False
                for cand in sorted(minimal):
                    if tester.test(v, z, minimal - {cand}):
                        minimal.remove(cand)
                        shrunk = True
                        break
            sepsets.set(v, z, minimal)
            stats.edges_deleted += 1
            stats.max_sepset_size = max(stats.max_sepset_size, len(sep))
            lo, hi = (v, z) if v < z else (z, v)
            fresh = [(lo, w, hi)
                     for w in sorted(set(skeleton.adjacency(v)) & set(skeleton.adjacency(z)))]

            def stale(t: tuple[int, int, int]) -> bool:
                a, c, b = t
                return {a, c} == {v, z} or {c, b} == {v, z}

            worklist = deque(t for t in itertools.chain(worklist, fresh) if not stale(t))
            legitimate = [t for t in legitimate if not stale(t)]
            skeleton.remove_edge(v, z)
    g = skeleton.copy()
    for x, z, y in legitimate:
        g.orient_into(x, z)
        g.orient_into(y, z)
    stats.queries = counter.total - queries_before
    return g, sepsets, skeleton, stats


def prune_non_ancestors(g: MixedGraph, targets: Iterable[int]) -> set[int]:
    """Vertices with a possibly directed path to any target (targets included)."""
    return possible_ancestors(g, targets)


@dataclass
class _RunCore:
    """Internal state shared by the snap/pc drivers."""

    vertices: list[int]
    remaining: set[int]
    skeleton: MixedGraph
    sepsets: SepsetMap
    oriented: MixedGraph
    cache: _QueryCache
    rfci: RfciStats


def _init_core(vertices: list[int], tester: CITester) -> _RunCore:
    n = (max(vertices) + 1) if vertices else 0
    labels = None
    tester_n = getattr(tester, "n_vertices", None)
    if tester_n is not None and tester_n >= n:
        n = tester_n
    skeleton = MixedGraph.complete_undirected(n, vertices)
    return _RunCore(
        vertices=vertices,
        remaining=set(vertices),
        skeleton=skeleton,
        sepsets=SepsetMap(),
        oriented=skeleton.copy(),
        cache=_QueryCache(tester),
        rfci=RfciStats(),
    )


def _snap_loop(core: _RunCore, targets: set[int], k: int) -> None:
    """Iterations 0..k of the pruning loop, with a provable fixpoint exit."""
    state = DiscoveryState(core.remaining, core.skeleton, core.sepsets)
    for order in range(k + 1):
        calls_before = core.cache.calls
        skeleton_step(state, core.cache, order)
        enumerated = core.cache.calls > calls_before
        if order < 2:
            core.oriented = orient_vstructures_pc(core.skeleton, core.sepsets)
        else:
            core.oriented, _, _, phase = orient_vstructures_rfci(
                core.skeleton, core.sepsets, core.cache)
            core.rfci.merge(phase)
        new_remaining = prune_non_ancestors(core.oriented, targets)
        pruned = new_remaining != core.remaining
        core.remaining.intersection_update(new_remaining)
        state.remaining = core.remaining
        if pruned:
            core.skeleton.retain_vertices(core.remaining)
            core.oriented.retain_vertices(core.remaining)
        # Once no conditioning set can be enumerated, the skeleton is final;
        # after one RFCI pass on it, further iterations are no-ops.
        if not enumerated and order >= 2 and not pruned:
            break


def _pc_loop(core: _RunCore) -> None:
    state = DiscoveryState(core.remaining, core.skeleton, core.sepsets)
    order = 0
    while any(core.skeleton.degree(x) >= order + 1 for x in core.remaining):
        skeleton_step(state, core.cache, order)
        order += 1
    core.oriented = orient_vstructures_pc(core.skeleton, core.sepsets)
    core.oriented = meek_closure(core.oriented)


def _finish(core: _RunCore, tester: CITester, t0: float) -> DiscoveryResult:
    remaining = sorted(core.remaining)
    graph, index_map = induced_subgraph(core.oriented, remaining)
    wall_ms = (time.perf_counter() - t0) * 1000.0
    return DiscoveryResult(
        graph=graph,
        remaining=remaining,
        index_map=index_map,
        sepsets=core.sepsets,
        counts=tester.counter.snapshot(),
        wall_ms=wall_ms,
        rfci_stats=core.rfci,
    )


def _check_targets(vertices: list[int], targets: Iterable[int]) -> set[int]:
    tset = set(int(t) for t in targets)
    if not tset:
        raise ValueError("targets must be nonempty")
    if not tset.issubset(vertices):
        raise ValueError("targets must be a subset of the vertices")
    return tset


def snap_k(vertices: Iterable[int] | int, targets: Iterable[int], k: int,
           tester: CITester) -> DiscoveryResult:
    """Order-limited discovery with sequential non-ancestor pruning.

    Runs the skeleton step at orders 0..k, orienting v-structures after
    each order (PC rules below order 2, RFCI rules from order 2 on) and
    pruning every vertex without a possibly directed path to a target.
    Returns the surviving vertices and the induced oriented graph.
    """
    verts = _as_vertices(vertices)
    tset = _check_targets(verts, targets)
    if not 0 <= k <= max(len(verts) - 2, 0):
        raise ValueError(f"k must lie in [0, {max(len(verts) - 2, 0)}], got {k}")
    t0 = time.perf_counter()
    core = _init_core(verts, tester)
    _snap_loop(core, tset, k)
    return _finish(core, tester, t0)


def snap_inf(vertices: Iterable[int] | int, targets: Iterable[int],
             tester: CITester) -> DiscoveryResult:
    """Run the pruning loop to completion, then close with Meek's rules.

    Equivalent to :func:`snap_k` at the maximum order followed by Meek
    closure, one final prune and the induced restriction. With oracle
    tests the output is the true CPDAG restricted to the possible
    ancestors of the targets.
    """
    verts = _as_vertices(vertices)
    tset = _check_targets(verts, targets)
    t0 = time.perf_counter()
    core = _init_core(verts, tester)
    _snap_loop(core, tset, max(len(verts) - 2, 0))
    core.oriented = meek_closure(core.oriented)
    core.remaining.intersection_update(prune_non_ancestors(core.oriented, tset))
    core.skeleton.retain_vertices(core.remaining)
    core.oriented.retain_vertices(core.remaining)
    return _finish(core, tester, t0)


def pc(vertices: Iterable[int] | int, tester: CITester) -> DiscoveryResult:
    """Order-escalating PC over all given vertices (no pruning).

    Shares the skeleton step and its deterministic iteration order with
    :func:`snap_k`, then applies PC v-structure orientation and Meek
    closure.
    """
    verts = _as_vertices(vertices)
    t0 = time.perf_counter()
    core = _init_core(verts, tester)
    _pc_loop(core)
    return _finish(core, tester, t0)


def snap_prefilter_then(algorithm: str, vertices: Iterable[int] | int,
                        targets: Iterable[int], k: int,
                        tester: CITester) -> DiscoveryResult:
    """Prune with snap_k, then run a global algorithm on the survivors.

    The two phases share one tester and one query cache, so duplicated
    queries are counted once and the final counter reflects the whole
    pipeline.
    """
    if algorithm != "pc":
        raise ValueError(f"unsupported follow-up algorithm {algorithm!r}")
    verts = _as_vertices(vertices)
    tset = _check_targets(verts, targets)
    if not 0 <= k <= max(len(verts) - 2, 0):
        raise ValueError(f"k must lie in [0, {max(len(verts) - 2, 0)}], got {k}")
    t0 = time.perf_counter()
    core = _init_core(verts, tester)
    _snap_loop(core, tset, k)
    survivors = sorted(core.remaining)
    second = _RunCore(
        vertices=survivors,
        remaining=set(survivors),
        skeleton=MixedGraph.complete_undirected(core.skeleton.n_vertices, survivors),
        sepsets=SepsetMap(),
        oriented=core.oriented,
        cache=core.cache,
        rfci=core.rfci,
    )
    _pc_loop(second)
    return _finish(second, tester, t0)
