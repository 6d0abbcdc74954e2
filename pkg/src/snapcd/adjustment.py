"""Adjustment-set identification and causal effect estimation on CPDAGs.

Identifiability is decided by amenability: the effect of x on y is
estimable by covariate adjustment iff every proper possibly directed path
from x to y leaves x through a directed edge. Canonical and optimal
adjustment sets follow the standard set formulas over possible ancestors,
forbidden nodes and definite parents. Ancestor-based adjustment sets are
not provided.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

import numpy as np

from .citests import CONTINUOUS, Dataset
from .errors import (
    InsufficientSamplesError,
    InvalidQueryError,
    MissingPairError,
    NotContinuousError,
    NotIdentifiableError,
    SingularDesignError,
    UndirectedIncidenceError,
)
from .graphs import (
    TAIL,
    Dag,
    MixedGraph,
    _possibly_reaching,
    possible_ancestors,
    possible_descendants,
    topological_order,
)


@dataclass(frozen=True)
class EffectEstimate:
    """One pairwise effect: a single value when identifiable, else a set."""

    values: tuple[float, ...]
    identifiable: bool
    adjustment: Optional[frozenset[int]] = None

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("an effect estimate needs at least one value")
        if self.identifiable and len(self.values) != 1:
            raise ValueError("an identifiable effect must carry exactly one value")


def causal_nodes(g: MixedGraph, x: int, y: int) -> set[int]:
    """Vertices on proper possibly directed paths from x to y, excluding x.

    A vertex belongs to the set iff some simple possibly directed path from
    x to y passes through it; y is included exactly when such a path
    exists. Found by depth-first path enumeration pruned to vertices that
    are possible descendants of x and possible ancestors of y.
    """
    if x == y:
        raise InvalidQueryError("cause and outcome must differ")
    candidates = possible_descendants(g, {x}) & possible_ancestors(g, {y})
    if y not in candidates:
        return set()
    found: set[int] = set()
    on_path: set[int] = {x}
    path: list[int] = [x]

    def walk(u: int) -> None:
        if candidates <= found | {x}:
            return
        for w in g.adjacency(u):
            if w not in candidates or w in on_path:
                continue
            if g.mark_at(u, w) != TAIL:  # leaving u toward w needs a tail at u
                continue
            if w == y:
                found.update(path[1:])
                found.add(y)
                continue
            on_path.add(w)
            path.append(w)
            walk(w)
            path.pop()
            on_path.remove(w)

    walk(x)
    return found


def forbidden_set(g: MixedGraph, x: int, y: int) -> set[int]:
    """Possible descendants of the causal nodes of (x, y)."""
    cn = causal_nodes(g, x, y)
    if not cn:
        return set()
    return possible_descendants(g, cn)


def is_amenable(g: MixedGraph, x: int, y: int) -> bool:
    """True iff no proper possibly directed path from x to y starts undirected."""
    if x == y:
        raise InvalidQueryError("cause and outcome must differ")
    for w in g.undirected_neighbors(x):
        if w == y:
            return False
        reach = _possibly_reaching(g, {w}, forward=True, blocked=frozenset({x}))
        if y in reach:
            return False
    return True


def canonical_adjustment(g: MixedGraph, x: int, y: int) -> set[int]:
    """Possible ancestors of {x, y} minus the forbidden set and the pair."""
    if not is_amenable(g, x, y):
        raise NotIdentifiableError(f"effect of {x} on {y} is not identifiable by adjustment")
    return possible_ancestors(g, {x, y}) - forbidden_set(g, x, y) - {x, y}


def optimal_adjustment(g: MixedGraph, x: int, y: int) -> set[int]:
    """Definite parents of the causal nodes, minus forbidden nodes and x."""
    if not is_amenable(g, x, y):
        raise NotIdentifiableError(f"effect of {x} on {y} is not identifiable by adjustment")
    cn = causal_nodes(g, x, y)
    parents: set[int] = set()
    for c in cn:
        parents.update(g.parents(c))
    return parents - forbidden_set(g, x, y) - {x}


def parent_adjustment(g: MixedGraph, x: int) -> set[int]:
    """Definite parents of x; requires all incident edges of x oriented."""
    if g.undirected_neighbors(x):
        raise UndirectedIncidenceError(
            f"vertex {x} has undirected neighbors; its parent set is ambiguous")
    return set(g.parents(x))


def _ols_coefficient(data: Dataset, y: int, regressors: list[int]) -> np.ndarray:
    n = data.n_samples
    design = np.column_stack([np.ones(n)] + [data.column(c) for c in regressors])
    if n <= design.shape[1]:
        raise InsufficientSamplesError(
            f"need more than {design.shape[1]} samples, have {n}")
    coef, _, rank, _ = np.linalg.lstsq(design, data.column(y), rcond=None)
    if rank < design.shape[1]:
        raise SingularDesignError("regression design matrix is rank deficient")
    return coef


def estimate_effect_ols(data: Dataset, x: int, y: int, z: Iterable[int] = ()) -> float:
    """Coefficient of x when regressing y on {x} and z, with intercept."""
    zs = sorted(set(int(v) for v in z) - {x, y})
    coef = _ols_coefficient(data, y, [x] + zs)
    return float(coef[1])


def possible_effects_local(data: Dataset, g: MixedGraph, x: int, y: int) -> set[float]:
    """Enumerate locally valid parent assignments for x and their effects.

    Each subset S of the undirected neighbors of x is accepted as extra
    parents when S and the definite parents of x induce no new v-structure
    at x (members of S pairwise adjacent and adjacent to every definite
    parent). For each accepted S, the effect is the OLS coefficient of x
    regressing y on {x}, the definite parents and S; assignments that turn
    y into a parent of x contribute an effect of zero.
    """
    if data.kind != CONTINUOUS:
        raise NotContinuousError("effect regression expects continuous (or 0/1 coded) data")
    parents = g.parents(x)
    if y in parents:
        return {0.0}
    siblings = g.undirected_neighbors(x)
    effects: set[float] = set()
    for size in range(len(siblings) + 1):
        for subset in itertools.combinations(siblings, size):
            ok = all(g.adjacent_pair(a, b) for a, b in itertools.combinations(subset, 2))
            ok = ok and all(g.adjacent_pair(s, p) for s in subset for p in parents)
            if not ok:
                continue
            if y in subset:
                effects.add(0.0)
                continue
            regressors = sorted(set(parents) | set(subset))
            effects.add(estimate_effect_ols(data, x, y, regressors))
    return effects


def true_total_effect(dag: Dag, weights: Mapping[tuple[int, int], float],
                      x: int, y: int) -> float:
    """Total linear effect of x on y: the path sum of edge weight products."""
    if x == y:
        raise InvalidQueryError("cause and outcome must differ")
    eff = {x: 1.0}
    for v in topological_order(dag):
        if v == x:
            continue
        upstream = [p for p in dag.parents(v) if p in eff]
        if upstream:
            eff[v] = sum(eff[p] * weights[(p, v)] for p in upstream)
    return eff.get(y, 0.0)


def intervention_distance(
    true_effects: Mapping[tuple[int, int], float],
    estimates: Mapping[tuple[int, int], EffectEstimate],
    targets: Iterable[int],
) -> float:
    """Mean absolute gap between true and estimated pairwise effects.

    Averages |theta* - theta_hat| over every ordered target pair, with the
    inner average over the estimate set of that pair.
    """
    ts = sorted(set(int(t) for t in targets))
    if len(ts) < 2:
        raise ValueError("intervention distance needs at least two targets")
    total = 0.0
    n_pairs = 0
    for t in ts:
        for t2 in ts:
            if t == t2:
                continue
            n_pairs += 1
            if (t, t2) not in estimates:
                raise MissingPairError(f"no estimate for ordered pair ({t}, {t2})")
            if (t, t2) not in true_effects:
                raise MissingPairError(f"no true effect for ordered pair ({t}, {t2})")
            est = estimates[(t, t2)]
            truth = true_effects[(t, t2)]
            total += sum(abs(truth - v) for v in est.values) / len(est.values)
    return total / n_pairs
