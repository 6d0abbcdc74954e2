"""Conditional independence tests behind one interface.

Every tester answers "is x independent of y given S?" deterministically and
counts each query it actually evaluates, bucketed by conditioning-set size
(the order). Testers are read-only after construction; the counter uses a
lock so a tester instance can be probed from several threads, but each
benchmark replicate must own its own tester.
"""

from __future__ import annotations

import csv
import io
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import stats

from .errors import (
    InsufficientSamplesError,
    InvalidQueryError,
    NotCategoricalError,
    NotContinuousError,
    SingularCovarianceError,
    BudgetExceededError,
)
from .graphs import Dag, d_separated

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"


@dataclass
class Dataset:
    """Column-indexed sample matrix aligned with graph vertex indices."""

    values: np.ndarray
    kind: str = CONTINUOUS
    names: Optional[list[str]] = None
    levels: Optional[list[int]] = None

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values)
        if self.values.ndim != 2:
            raise ValueError("values must be a 2-d array (samples x variables)")
        if self.kind not in (CONTINUOUS, CATEGORICAL):
            raise ValueError(f"unknown dataset kind {self.kind!r}")
        if self.kind == CATEGORICAL:
            self.values = self.values.astype(np.int64)
            if self.levels is None:
                self.levels = [max(2, int(self.values[:, j].max(initial=0)) + 1)
                               for j in range(self.values.shape[1])]
            if any(l < 2 for l in self.levels):
                raise ValueError("categorical levels must be at least 2")
        else:
            self.values = self.values.astype(np.float64)
        if self.names is not None and len(self.names) != self.values.shape[1]:
            raise ValueError("names length must match the column count")

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_vars(self) -> int:
        return self.values.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def select_columns(self, cols: Sequence[int]) -> "Dataset":
        """Dataset over a column subset, re-indexed in the given order."""
        cols = list(cols)
        return Dataset(
            self.values[:, cols],
            kind=self.kind,
            names=[self.names[c] for c in cols] if self.names is not None else None,
            levels=[self.levels[c] for c in cols] if self.levels is not None else None,
        )

    def split_rows(self, first: np.ndarray) -> tuple["Dataset", "Dataset"]:
        """Split into (rows in ``first``, remaining rows), preserving order."""
        mask = np.zeros(self.n_samples, dtype=bool)
        mask[np.asarray(first, dtype=np.intp)] = True
        a = Dataset(self.values[mask], kind=self.kind, names=self.names, levels=self.levels)
        b = Dataset(self.values[~mask], kind=self.kind, names=self.names, levels=self.levels)
        return a, b

    def to_csv(self, path: str | Path) -> None:
        names = self.names if self.names is not None else [f"V{i}" for i in range(self.n_vars)]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(names)
            if self.kind == CATEGORICAL:
                for row in self.values:
                    writer.writerow([int(v) for v in row])
            else:
                for row in self.values:
                    writer.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path: str | Path, kind: str = CONTINUOUS) -> "Dataset":
        """Read a CSV with a header row of vertex names."""
        text = Path(path).read_text(encoding="utf-8")
        reader = csv.reader(io.StringIO(text))
        rows = [row for row in reader if row]
        if not rows:
            raise ValueError(f"{path}: empty CSV")
        names = [c.strip() for c in rows[0]]
        body = np.array([[float(c) for c in row] for row in rows[1:]], dtype=np.float64)
        if body.size == 0:
            body = body.reshape(0, len(names))
        return cls(body, kind=kind, names=names)


class TestCounter:
    """Per-order tally of CI tests performed."""

    def __init__(self) -> None:
        self._counts: dict[int, int] = {}
        self._lock = threading.Lock()

    def record(self, order: int) -> None:
        with self._lock:
            self._counts[order] = self._counts.get(order, 0) + 1

    @property
    def counts(self) -> dict[int, int]:
        with self._lock:
            return dict(self._counts)

    @property
    def total(self) -> int:
        with self._lock:
            return sum(self._counts.values())

    def snapshot(self) -> "CounterSnapshot":
        return CounterSnapshot(self.counts)


@dataclass(frozen=True)
class CounterSnapshot:
    """Immutable copy of a counter's per-order tallies."""

    counts: dict[int, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def by_order(self) -> dict[int, int]:
        return dict(sorted(self.counts.items()))


class CITester(ABC):
    """Answers x independent-of y given S, counting every evaluated query."""

    def __init__(self) -> None:
        self.counter = TestCounter()

    @property
    @abstractmethod
    def n_vertices(self) -> int:
        """Number of variables this tester is defined over."""

    def test(self, x: int, y: int, s: Iterable[int] = ()) -> bool:
        """Return True iff x is judged independent of y given s."""
        cond = frozenset(int(v) for v in s)
        x = int(x)
        y = int(y)
        if x == y:
            raise InvalidQueryError("query endpoints must differ")
        if x in cond or y in cond:
            raise InvalidQueryError("endpoints may not appear in the conditioning set")
        verdict = self._decide(x, y, cond)
        self.counter.record(len(cond))
        return verdict

    @abstractmethod
    def _decide(self, x: int, y: int, s: frozenset[int]) -> bool:
        ...


class OracleTester(CITester):
    """d-separation oracle backed by a ground-truth DAG.

    Precomputes per-vertex ancestor bitmasks so the active-path reachability
    runs on integer bit operations; equivalent to
    :func:`snapcd.graphs.d_separated` on every query.
    """

    def __init__(self, dag: Dag):
        super().__init__()
        self.dag = dag
        n = dag.n_vertices
        self._parents = [tuple(dag.parents(v)) for v in range(n)]
        self._children = [tuple(dag.children(v)) for v in range(n)]
        from .graphs import topological_order

        self._anc_mask = [0] * n
        for v in topological_order(dag):
            mask = 1 << v
            for p in self._parents[v]:
                mask |= self._anc_mask[p]
            self._anc_mask[v] = mask
        # (source, conditioning-set bitmask) -> bitmask of actively reachable
        # vertices; one traversal answers the query for every opposite endpoint
        self._reach_cache: dict[int, int] = {}
        self._shift = max(n.bit_length(), 1)

    @property
    def n_vertices(self) -> int:
        return self.dag.n_vertices

    _REACH_CACHE_LIMIT = 400_000

    def _decide(self, x: int, y: int, s: frozenset[int]) -> bool:
        cond_mask = 0
        for v in s:
            cond_mask |= 1 << v
        packed = cond_mask << self._shift
        mask = self._reach_cache.get(packed | x)
        if mask is None:
            mask = self._reach_cache.get(packed | y)
            if mask is not None:
                return not mask >> x & 1
            mask = self._reachable_mask(x, s)
            if len(self._reach_cache) >= self._REACH_CACHE_LIMIT:
                self._reach_cache.clear()
            self._reach_cache[packed | x] = mask
        return not mask >> y & 1

    def _reachable_mask(self, x: int, s: frozenset[int]) -> int:
        cond_mask = 0
        cond_anc = 0
        for v in s:
            cond_mask |= 1 << v
            cond_anc |= self._anc_mask[v]
        parents = self._parents
        children = self._children
        # states: vertex entered through a child (up) or a parent (down)
        up_stack = [x]
        down_stack: list[int] = []
        seen_up = 1 << x
        seen_down = 0
        while up_stack or down_stack:
            if up_stack:
                v = up_stack.pop()
                if not cond_mask >> v & 1:
                    for p in parents[v]:
                        if not seen_up >> p & 1:
                            seen_up |= 1 << p
                            up_stack.append(p)
                    for c in children[v]:
                        if not seen_down >> c & 1:
                            seen_down |= 1 << c
                            down_stack.append(c)
            else:
                v = down_stack.pop()
                if not cond_mask >> v & 1:
                    for c in children[v]:
                        if not seen_down >> c & 1:
                            seen_down |= 1 << c
                            down_stack.append(c)
                if cond_anc >> v & 1:
                    for p in parents[v]:
                        if not seen_up >> p & 1:
                            seen_up |= 1 << p
                            up_stack.append(p)
        return (seen_up | seen_down) & ~(1 << x)


class FisherZTester(CITester):
    """Partial-correlation test for linear Gaussian data.

    The dataset covariance is computed once and cached; each query inverts
    the covariance submatrix over {x, y} and the conditioning set with an
    SVD and a relative rank tolerance of 1e-10, then compares the Fisher
    z statistic against the two-sided normal critical value.
    """

    RANK_TOL = 1e-10

    def __init__(self, data: Dataset, alpha: float = 0.05):
        super().__init__()
        if data.kind != CONTINUOUS:
            raise NotContinuousError("Fisher-Z requires continuous data")
        if not 0.0 < alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        self.data = data
        self.alpha = alpha
        self._n = data.n_samples
        self._cov = np.cov(data.values, rowvar=False, ddof=1)
        if self._cov.ndim == 0:
            self._cov = self._cov.reshape(1, 1)
        self._crit = float(stats.norm.ppf(1.0 - alpha / 2.0))

    @property
    def n_vertices(self) -> int:
        return self.data.n_vars

    def _decide(self, x: int, y: int, s: frozenset[int]) -> bool:
        k = len(s)
        if self._n <= k + 3:
            raise InsufficientSamplesError(
                f"need more than {k + 3} samples for order {k}, have {self._n}")
        idx = [x, y] + sorted(s)
        sub = self._cov[np.ix_(idx, idx)]
        u, sv, vt = np.linalg.svd(sub, hermitian=True)
        if sv[0] <= 0 or sv[-1] / sv[0] < self.RANK_TOL:
            raise SingularCovarianceError(
                f"covariance submatrix for ({x}, {y} | {sorted(s)}) is singular")
        prec = (u / sv) @ vt
        r = -prec[0, 1] / np.sqrt(prec[0, 0] * prec[1, 1])
        r = min(max(float(r), -1.0 + 1e-15), 1.0 - 1e-15)
        z = 0.5 * np.log1p(2.0 * r / (1.0 - r)) * np.sqrt(self._n - k - 3)
        return abs(z) <= self._crit


class ChiSquareTester(CITester):
    """Stratified Pearson chi-square test for categorical data.

    Samples are stratified by the joint configuration of the conditioning
    set. A stratum is skipped when it has fewer than 10 samples or any
    expected cell count below 5; skipped strata contribute neither to the
    statistic nor to the degrees of freedom. If every stratum is skipped
    the verdict is "independent".
    """

    MIN_SAMPLES = 10
    MIN_EXPECTED = 5.0

    def __init__(self, data: Dataset, alpha: float = 0.05):
        super().__init__()
        if data.kind != CATEGORICAL:
            raise NotCategoricalError("the chi-square test requires categorical data")
        if not 0.0 < alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        self.data = data
        self.alpha = alpha

    @property
    def n_vertices(self) -> int:
        return self.data.n_vars

    def _decide(self, x: int, y: int, s: frozenset[int]) -> bool:
        values = self.data.values
        levels = self.data.levels
        lx, ly = levels[x], levels[y]
        cols = sorted(s)
        if cols:
            key = np.zeros(values.shape[0], dtype=np.int64)
            radix = 1
            for c in cols:
                key += values[:, c] * radix
                radix *= levels[c]
            _, inverse = np.unique(key, return_inverse=True)
            n_strata = int(inverse.max()) + 1
        else:
            inverse = np.zeros(values.shape[0], dtype=np.int64)
            n_strata = 1

        stat = 0.0
        dof = 0
        vx = values[:, x]
        vy = values[:, y]
        for stratum in range(n_strata):
            mask = inverse == stratum
            n_s = int(mask.sum())
            if n_s < self.MIN_SAMPLES:
                continue
            table = np.bincount(vx[mask] * ly + vy[mask], minlength=lx * ly)
            table = table.reshape(lx, ly).astype(np.float64)
            expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / n_s
            if expected.min() < self.MIN_EXPECTED:
                continue
            stat += float(((table - expected) ** 2 / expected).sum())
            dof += (lx - 1) * (ly - 1)
        if dof == 0:
            return True
        p_value = float(stats.chi2.sf(stat, dof))
        return p_value > self.alpha


class BudgetedTester(CITester):
    """Delegating tester that aborts a run after ``max_tests`` queries.

    PC-style skeleton search is exponential on dense skeletons; a budget
    turns a pathological replicate into a clean failure instead of an
    unbounded run. The inner tester keeps the authoritative counter.
    """

    def __init__(self, inner: CITester, max_tests: int):
        super().__init__()
        if max_tests < 1:
            raise ValueError("max_tests must be positive")
        self.inner = inner
        self.max_tests = max_tests

    @property
    def n_vertices(self) -> int:
        return self.inner.n_vertices

    @property
    def counter(self) -> TestCounter:  # type: ignore[override]
        return self.inner.counter

    @counter.setter
    def counter(self, value) -> None:
        # CITester.__init__ assigns a fresh counter; the delegate wins.
        pass

    def _decide(self, x: int, y: int, s: frozenset[int]) -> bool:
        raise NotImplementedError

    def test(self, x: int, y: int, s: Iterable[int] = ()) -> bool:
        if self.inner.counter.total >= self.max_tests:
            raise BudgetExceededError(
                f"run exceeded the budget of {self.max_tests} CI tests")
        return self.inner.test(x, y, s)
