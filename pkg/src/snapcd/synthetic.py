"""Random ground truth: DAG topologies, linear-Gaussian SEMs, binary CPT
networks, target sampling, and the expected-ancestor approximation.

Randomness is drawn from named Philox streams: every operation derives its
own counter-based generator from ``(seed, purpose [, indices...])``, so
graphs, parameters, data, targets and splits are independently reproducible
from a single seed. Purposes in use: graph, weights, cpt, data, targets,
split, truth.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .adjustment import is_amenable
from .citests import CATEGORICAL, CONTINUOUS, Dataset
from .errors import InfeasibleConfigError, NoIdentifiableSetError
from .graphs import Dag, MixedGraph, ancestors, cpdag_of, descendants, topological_order

_PURPOSES = {"graph": 0, "weights": 1, "cpt": 2, "data": 3, "targets": 4, "split": 5, "truth": 6}


def rng_stream(seed: int, purpose: str, *indices: int) -> np.random.Generator:
    """Counter-based generator for one named stream of a master seed."""
    code = _PURPOSES[purpose]
    ss = np.random.SeedSequence(entropy=(int(seed), code, *map(int, indices)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class GenConfig:
    """Parameters of the random-DAG family."""

    n_vertices: int
    expected_degree: float
    max_degree: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_vertices < 1:
            raise ValueError("n_vertices must be positive")
        if self.expected_degree < 0 or self.expected_degree >= self.n_vertices:
            raise ValueError("expected_degree must lie in [0, n_vertices)")
        if self.max_degree < self.expected_degree:
            raise ValueError("max_degree must be at least expected_degree")


@dataclass
class SemSpec:
    """Linear Gaussian structural equation model with unit noise."""

    dag: Dag
    weights: dict[tuple[int, int], float]
    noise_scale: float = 1.0

    def __post_init__(self) -> None:
        if set(self.weights) != set(self.dag.edges):
            raise ValueError("weights must be defined exactly on the DAG edges")
        for e, w in self.weights.items():
            if not 0.5 <= abs(w) <= 3.0:
                raise ValueError(f"weight magnitude for edge {e} outside [0.5, 3.0]")

    def to_json(self) -> str:
        payload = {
            "n_vertices": self.dag.n_vertices,
            "labels": self.dag.labels,
            "edges": [[u, v, self.weights[(u, v)]] for u, v in self.dag.sorted_edges()],
            "noise_scale": self.noise_scale,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SemSpec":
        payload = json.loads(text)
        dag = Dag(payload["n_vertices"], [(u, v) for u, v, _ in payload["edges"]],
                  labels=payload.get("labels"))
        weights = {(int(u), int(v)): float(w) for u, v, w in payload["edges"]}
        return cls(dag, weights, noise_scale=payload.get("noise_scale", 1.0))


@dataclass
class CptSpec:
    """Binary network: per-vertex conditional probability tables.

    ``tables[v][i]`` is P(v = 1 | parent configuration i), where the
    configuration index encodes the sorted parents of v in binary with the
    lowest-index parent as the least significant bit.
    """

    dag: Dag
    tables: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for v in range(self.dag.n_vertices):
            table = np.asarray(self.tables[v], dtype=np.float64)
            if table.shape != (2 ** len(self.dag.parents(v)),):
                raise ValueError(f"table for vertex {v} has the wrong shape")
            if table.min() < 0.0 or table.max() > 1.0:
                raise ValueError(f"table for vertex {v} has probabilities outside [0, 1]")
            self.tables[v] = table

    def to_json(self) -> str:
        payload = {
            "n_vertices": self.dag.n_vertices,
            "labels": self.dag.labels,
            "edges": [list(e) for e in self.dag.sorted_edges()],
            "tables": {str(v): self.tables[v].tolist() for v in range(self.dag.n_vertices)},
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CptSpec":
        payload = json.loads(text)
        dag = Dag(payload["n_vertices"], [tuple(e) for e in payload["edges"]],
                  labels=payload.get("labels"))
        tables = {int(v): np.asarray(t, dtype=np.float64) for v, t in payload["tables"].items()}
        return cls(dag, tables)


def random_dag(cfg: GenConfig) -> Dag:
    """Permuted upper-triangular Erdos-Renyi DAG with a degree cap.

    Each pair is edged independently with p = expected_degree / (n - 1)
    along a random topological permutation. Vertices exceeding the degree
    cap have their incident coin flips redrawn; a bounded number of rounds
    is attempted before giving up.
    """
    rng = rng_stream(cfg.seed, "graph")
    n = cfg.n_vertices
    if n == 1:
        return Dag(1, [])
    perm = [int(v) for v in rng.permutation(n)]
    p = cfg.expected_degree / (n - 1)
    flips = rng.random((n, n))
    present = lambda r, s: flips[r, s] < p  # noqa: E731 - rank pair r < s

    def degrees() -> list[int]:
        deg = [0] * n
        for r in range(n):
            for s in range(r + 1, n):
                if present(r, s):
                    deg[perm[r]] += 1
                    deg[perm[s]] += 1
        return deg

    budget = 100
    for _ in range(budget):
        deg = degrees()
        over = [v for v in range(n) if deg[v] > cfg.max_degree]
        if not over:
            break
        offender = max(over, key=lambda v: (deg[v], -v))
        r0 = perm.index(offender)
        fresh = rng.random(n)
        for s in range(n):
            if s < r0:
                flips[s, r0] = fresh[s]
            elif s > r0:
                flips[r0, s] = fresh[s]
    else:
        raise InfeasibleConfigError(
            f"could not satisfy max_degree={cfg.max_degree} within {budget} rounds")

    edges = []
    for r in range(n):
        for s in range(r + 1, n):
            if present(r, s):
                edges.append((perm[r], perm[s]))
    return Dag(n, edges)


def random_sem(dag: Dag, seed: int) -> SemSpec:
    """Edge weights drawn uniformly from [-3, -0.5] union [0.5, 3]."""
    rng = rng_stream(seed, "weights")
    weights = {}
    for u, v in dag.sorted_edges():
        magnitude = rng.uniform(0.5, 3.0)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        weights[(u, v)] = sign * magnitude
    return SemSpec(dag, weights)


def random_cpt(dag: Dag, seed: int) -> CptSpec:
    """Conditional probability tables drawn uniformly from [0, 1]."""
    rng = rng_stream(seed, "cpt")
    tables = {}
    for v in range(dag.n_vertices):
        tables[v] = rng.random(2 ** len(dag.parents(v)))
    return CptSpec(dag, tables)


def sample_linear_gaussian(spec: SemSpec, n: int, seed: int) -> Dataset:
    """Forward-sample the SEM along a topological order."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = rng_stream(seed, "data")
    p = spec.dag.n_vertices
    noise = rng.standard_normal((n, p)) * spec.noise_scale
    values = np.zeros((n, p))
    for v in topological_order(spec.dag):
        values[:, v] = noise[:, v]
        for parent in spec.dag.parents(v):
            values[:, v] += spec.weights[(parent, v)] * values[:, parent]
    names = spec.dag.labels or [f"V{i}" for i in range(p)]
    return Dataset(values, kind=CONTINUOUS, names=list(names))


def _config_index(values: np.ndarray, parents: list[int]) -> np.ndarray:
    idx = np.zeros(values.shape[0], dtype=np.int64)
    for bit, parent in enumerate(parents):
        idx |= values[:, parent].astype(np.int64) << bit
    return idx


def sample_binary(spec: CptSpec, n: int, seed: int,
                  do: Optional[dict[int, int]] = None) -> Dataset:
    """Forward-sample Bernoulli draws per CPT row.

    ``do`` clamps the given vertices to fixed values, cutting their
    dependence on parents (used for ground-truth interventional effects).
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = rng_stream(seed, "data")
    p = spec.dag.n_vertices
    uniforms = rng.random((n, p))
    values = np.zeros((n, p), dtype=np.int64)
    do = do or {}
    for v in topological_order(spec.dag):
        if v in do:
            values[:, v] = int(do[v])
            continue
        parents = sorted(spec.dag.parents(v))
        probs = spec.tables[v][_config_index(values, parents)]
        values[:, v] = (uniforms[:, v] < probs).astype(np.int64)
    names = spec.dag.labels or [f"V{i}" for i in range(p)]
    return Dataset(values, kind=CATEGORICAL, names=list(names), levels=[2] * p)


def true_binary_effect(spec: CptSpec, x: int, y: int, seed: int, n: int = 100_000) -> float:
    """Monte-Carlo linear-probability effect P(y=1 | do(x=1)) - P(y=1 | do(x=0))."""
    rng_seed = int(rng_stream(seed, "truth", x, y).integers(2 ** 32))
    on = sample_binary(spec, n, rng_seed, do={x: 1})
    off = sample_binary(spec, n, rng_seed, do={x: 0})
    return float(on.column(y).mean() - off.column(y).mean())


def sample_targets(dag: Dag, n_targets: int, mode: str, seed: int,
                   cpdag: Optional[MixedGraph] = None,
                   retry_budget: int = 10_000) -> frozenset[int]:
    """Draw a target set uniformly without replacement.

    ``mode="random"`` accepts any draw. ``mode="identifiable"`` rejection
    samples until every ordered pair of targets is amenable in the CPDAG of
    ``dag`` and every target is an ancestor or descendant of at least one
    other target; raises :class:`NoIdentifiableSetError` when the budget
    runs out.
    """
    if n_targets > dag.n_vertices:
        raise ValueError("cannot draw more targets than vertices")
    if mode not in ("random", "identifiable"):
        raise ValueError(f"unknown target mode {mode!r}")
    rng = rng_stream(seed, "targets")
    if mode == "random":
        picks = rng.choice(dag.n_vertices, size=n_targets, replace=False)
        return frozenset(int(v) for v in picks)

    if cpdag is None:
        cpdag = cpdag_of(dag)
    anc = [ancestors(dag, {v}) for v in range(dag.n_vertices)]
    desc = [descendants(dag, {v}) for v in range(dag.n_vertices)]
    for _ in range(retry_budget):
        picks = frozenset(int(v) for v in rng.choice(dag.n_vertices, size=n_targets,
                                                     replace=False))
        comparable = all(
            any(t2 in anc[t] or t2 in desc[t] for t2 in picks if t2 != t)
            for t in picks
        ) if n_targets > 1 else True
        if not comparable:
            continue
        if all(is_amenable(cpdag, a, b)
               for a in picks for b in picks if a != b):
            return picks
    raise NoIdentifiableSetError(
        f"no identifiable target set of size {n_targets} within {retry_budget} draws")


def expected_possible_ancestors(n_vertices: int, n_targets: int) -> float:
    """Expected rank of the highest of ``n_targets`` uniform draws.

    Exact evaluation of sum_i i * C(i-1, t-1) / C(n, t) over
    i = t..n with big-integer binomials; a loose upper bound on the
    expected number of possible ancestors of a random target set.
    """
    if not 1 <= n_targets <= n_vertices:
        raise ValueError("need 1 <= n_targets <= n_vertices")
    t = n_targets
    total = sum(i * math.comb(i - 1, t - 1) for i in range(t, n_vertices + 1))
    return float(Fraction(total, math.comb(n_vertices, t)))


def split_rows(n_samples: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded 50/50 row split: (discovery indices, estimation indices)."""
    rng = rng_stream(seed, "split")
    perm = rng.permutation(n_samples)
    half = n_samples // 2
    return np.sort(perm[:half]), np.sort(perm[half:])
