"""Experiment harness: configuration sweeps, per-replicate pipelines,
metrics aggregation and CSV emission.

Each replicate is a pure function of (config, grid point, replicate index),
so results are identical no matter how jobs are scheduled; rows are sorted
before writing and a failed replicate becomes an error row instead of
aborting the sweep.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .adjustment import (
    EffectEstimate,
    estimate_effect_ols,
    intervention_distance,
    is_amenable,
    optimal_adjustment,
    possible_effects_local,
    true_total_effect,
)
from .citests import BudgetedTester, ChiSquareTester, Dataset, FisherZTester, OracleTester
from .discovery import DiscoveryResult, pc, snap_inf, snap_prefilter_then
from .graphs import (
    MixedGraph,
    cpdag_of,
    induced_subgraph,
    possible_ancestors,
    possible_descendants,
    shd,
)
from .synthetic import (
    CptSpec,
    GenConfig,
    SemSpec,
    random_cpt,
    random_dag,
    random_sem,
    rng_stream,
    sample_binary,
    sample_linear_gaussian,
    sample_targets,
    split_rows,
    true_binary_effect,
)

ALGORITHMS = ("pc", "snap-inf", "snap-k+pc")
TESTERS = ("oracle", "fisher-z", "chi-sq")

CSV_COLUMNS = [
    "n_vertices", "expected_degree", "max_degree", "n_targets", "n_samples",
    "algorithm", "k", "tester", "alpha", "target_mode", "seed", "replicate",
    "ci_tests_total", "ci_tests_by_order", "wall_ms", "shd_on_possan",
    "intervention_distance", "n_remaining", "n_true_possan", "error",
]


@dataclass
class ExperimentConfig:
    """Sweep axes plus fixed knobs for one experiment."""

    n_vertices: list[int]
    expected_degree: list[float]
    n_targets: list[int]
    n_samples: list[int]
    algorithm: str = "snap-inf"
    k: int = 0
    tester: str = "oracle"
    alpha: float = 0.05
    max_degree: int = 10
    target_mode: str = "random"
    replicates: int = 1
    seed: int = 0
    trim: float = 0.05
    workers: Optional[int] = None
    max_tests: Optional[int] = None

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if self.tester not in TESTERS:
            raise ValueError(f"tester must be one of {TESTERS}")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if not 0.0 <= self.trim < 0.4:
            raise ValueError("trim must lie in [0, 0.4)")

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls(**json.loads(text))

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    def grid(self) -> list[dict]:
        points = []
        for nv in self.n_vertices:
            for deg in self.expected_degree:
                for nt in self.n_targets:
                    for ns in self.n_samples:
                        points.append({
                            "n_vertices": nv,
                            "expected_degree": deg,
                            "n_targets": nt,
                            "n_samples": ns,
                        })
        return points


@dataclass
class MetricsRow:
    """One replicate's outcome; ``error`` is nonempty on failure."""

    n_vertices: int
    expected_degree: float
    max_degree: int
    n_targets: int
    n_samples: int
    algorithm: str
    k: int
    tester: str
    alpha: float
    target_mode: str
    seed: int
    replicate: int
    ci_tests_total: int = 0
    ci_tests_by_order: dict[int, int] = field(default_factory=dict)
    wall_ms: float = 0.0
    shd_on_possan: int = 0
    intervention_distance: float = 0.0
    n_remaining: int = 0
    n_true_possan: int = 0
    error: str = ""

    def to_csv_fields(self) -> list[str]:
        by_order = json.dumps({str(k): v for k, v in sorted(self.ci_tests_by_order.items())},
                              sort_keys=True)
        record = {
            "n_vertices": self.n_vertices,
            "expected_degree": repr(float(self.expected_degree)),
            "max_degree": self.max_degree,
            "n_targets": self.n_targets,
            "n_samples": self.n_samples,
            "algorithm": self.algorithm,
            "k": self.k,
            "tester": self.tester,
            "alpha": repr(float(self.alpha)),
            "target_mode": self.target_mode,
            "seed": self.seed,
            "replicate": self.replicate,
            "ci_tests_total": self.ci_tests_total,
            "ci_tests_by_order": by_order,
            "wall_ms": repr(float(self.wall_ms)),
            "shd_on_possan": self.shd_on_possan,
            "intervention_distance": repr(float(self.intervention_distance)),
            "n_remaining": self.n_remaining,
            "n_true_possan": self.n_true_possan,
            "error": self.error,
        }
        return [str(record[c]) for c in CSV_COLUMNS]

    @classmethod
    def from_csv_fields(cls, fields: list[str]) -> "MetricsRow":
        record = dict(zip(CSV_COLUMNS, fields))
        return cls(
            n_vertices=int(record["n_vertices"]),
            expected_degree=float(record["expected_degree"]),
            max_degree=int(record["max_degree"]),
            n_targets=int(record["n_targets"]),
            n_samples=int(record["n_samples"]),
            algorithm=record["algorithm"],
            k=int(record["k"]),
            tester=record["tester"],
            alpha=float(record["alpha"]),
            target_mode=record["target_mode"],
            seed=int(record["seed"]),
            replicate=int(record["replicate"]),
            ci_tests_total=int(record["ci_tests_total"]),
            ci_tests_by_order={int(k): v for k, v in json.loads(record["ci_tests_by_order"]).items()},
            wall_ms=float(record["wall_ms"]),
            shd_on_possan=int(record["shd_on_possan"]),
            intervention_distance=float(record["intervention_distance"]),
            n_remaining=int(record["n_remaining"]),
            n_true_possan=int(record["n_true_possan"]),
            error=record["error"],
        )


def replicate_seed(master_seed: int, grid_index: int, replicate: int) -> int:
    """Stable per-replicate seed derived from the master seed."""
    ss = np.random.SeedSequence(entropy=(int(master_seed), int(grid_index), int(replicate)))
    return int(ss.generate_state(1)[0])


def _run_discovery(cfg: ExperimentConfig, tester, n_vertices: int,
                   targets: frozenset[int]) -> DiscoveryResult:
    if cfg.algorithm == "pc":
        return pc(n_vertices, tester)
    if cfg.algorithm == "snap-inf":
        return snap_inf(n_vertices, targets, tester)
    return snap_prefilter_then("pc", n_vertices, targets, cfg.k, tester)


def _estimate_pairs(result: DiscoveryResult, data_est: Dataset,
                    targets: frozenset[int]) -> dict[tuple[int, int], EffectEstimate]:
    """Adjustment-based pairwise estimates on the held-out half."""
    data_local = data_est.select_columns(result.remaining)
    graph = result.graph
    out: dict[tuple[int, int], EffectEstimate] = {}
    for cause in sorted(targets):
        for outcome in sorted(targets):
            if cause == outcome:
                continue
            ci = result.index_map[cause]
            oi = result.index_map[outcome]
            if is_amenable(graph, ci, oi):
                if oi not in possible_descendants(graph, {ci}):
                    # no possibly directed path: the effect is exactly zero
                    out[(cause, outcome)] = EffectEstimate((0.0,), identifiable=True,
                                                           adjustment=frozenset())
                    continue
                adj = optimal_adjustment(graph, ci, oi)
                value = estimate_effect_ols(data_local, ci, oi, adj)
                out[(cause, outcome)] = EffectEstimate(
                    (value,), identifiable=True,
                    adjustment=frozenset(result.remaining[a] for a in adj))
            else:
                values = possible_effects_local(data_local, graph, ci, oi)
                out[(cause, outcome)] = EffectEstimate(tuple(sorted(values)),
                                                       identifiable=False)
    return out


def _shd_on_possan(result: DiscoveryResult, true_cpdag: MixedGraph,
                   possan: set[int]) -> int:
    """SHD between truth and estimate, both restricted to possible ancestors."""
    keep = sorted(possan)
    true_sub, true_map = induced_subgraph(true_cpdag, keep)
    est_sub = MixedGraph(len(keep))
    for u_orig in keep:
        for v_orig in keep:
            if u_orig < v_orig and u_orig in result.index_map and v_orig in result.index_map:
                ui, vi = result.index_map[u_orig], result.index_map[v_orig]
                if result.graph.has_edge(ui, vi):
                    est_sub.add_edge(true_map[u_orig], true_map[v_orig],
                                     result.graph.mark_at(ui, vi),
                                     result.graph.mark_at(vi, ui))
    return shd(true_sub, est_sub)


def run_replicate(cfg: ExperimentConfig, grid_point: dict, grid_index: int,
                  rep: int) -> MetricsRow:
    row = MetricsRow(
        n_vertices=grid_point["n_vertices"],
        expected_degree=grid_point["expected_degree"],
        max_degree=cfg.max_degree,
        n_targets=grid_point["n_targets"],
        n_samples=grid_point["n_samples"],
        algorithm=cfg.algorithm,
        k=cfg.k,
        tester=cfg.tester,
        alpha=cfg.alpha,
        target_mode=cfg.target_mode,
        seed=cfg.seed,
        replicate=rep,
    )
    try:
        rseed = replicate_seed(cfg.seed, grid_index, rep)
        gen = GenConfig(grid_point["n_vertices"], grid_point["expected_degree"],
                        max_degree=cfg.max_degree, seed=rseed)
        dag = random_dag(gen)
        true_cpdag = cpdag_of(dag)
        binary = cfg.tester == "chi-sq"
        spec = random_cpt(dag, rseed) if binary else random_sem(dag, rseed)
        targets = sample_targets(dag, grid_point["n_targets"], cfg.target_mode, rseed,
                                 cpdag=true_cpdag)
        n_total = grid_point["n_samples"]
        data = (sample_binary(spec, n_total, rseed) if binary
                else sample_linear_gaussian(spec, n_total, rseed))
        disc_rows, _ = split_rows(n_total, rseed)
        data_disc, data_est = data.split_rows(disc_rows)

        if cfg.tester == "oracle":
            tester = OracleTester(dag)
        elif cfg.tester == "fisher-z":
            tester = FisherZTester(data_disc, alpha=cfg.alpha)
        else:
            tester = ChiSquareTester(data_disc, alpha=cfg.alpha)
        if cfg.max_tests is not None:
            tester = BudgetedTester(tester, cfg.max_tests)

        result = _run_discovery(cfg, tester, dag.n_vertices, targets)

        if binary:
            est_float = Dataset(data_est.values.astype(float), kind="continuous",
                                names=data_est.names)
            estimates = _estimate_pairs(result, est_float, targets)
            truths = {(a, b): true_binary_effect(spec, a, b, rseed)
                      for a in targets for b in targets if a != b}
        else:
            estimates = _estimate_pairs(result, data_est, targets)
            truths = {(a, b): true_total_effect(dag, spec.weights, a, b)
                      for a in targets for b in targets if a != b}

        possan = possible_ancestors(true_cpdag, targets)
        row.ci_tests_total = result.counts.total
        row.ci_tests_by_order = result.counts.by_order()
        row.wall_ms = result.wall_ms
        row.shd_on_possan = _shd_on_possan(result, true_cpdag, possan)
        if len(targets) >= 2:
            row.intervention_distance = intervention_distance(truths, estimates, targets)
        row.n_remaining = len(result.remaining)
        row.n_true_possan = len(possan)
    except Exception as exc:  # noqa: BLE001 - crash isolation is the contract
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def _job(args: tuple) -> MetricsRow:
    cfg_json, grid_point, grid_index, rep = args
    cfg = ExperimentConfig.from_json(cfg_json)
    return run_replicate(cfg, grid_point, grid_index, rep)


def run_experiment(cfg: ExperimentConfig) -> list[MetricsRow]:
    """Run every grid point x replicate; rows come back fully sorted."""
    grid = cfg.grid()
    jobs = [(cfg.to_json(), gp, gi, rep)
            for gi, gp in enumerate(grid)
            for rep in range(cfg.replicates)]
    workers = cfg.workers if cfg.workers is not None else (os.cpu_count() or 1)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_job, jobs))
    else:
        rows = [_job(j) for j in jobs]
    rows.sort(key=lambda r: (r.n_vertices, r.expected_degree, r.n_targets,
                             r.n_samples, r.replicate))
    return rows


_SUMMARY_METRICS = ["ci_tests_total", "wall_ms", "shd_on_possan",
                    "intervention_distance", "n_remaining", "n_true_possan"]


def trimmed_mean(values: list[float], trim: float) -> float:
    """Mean after dropping floor(trim * len) values at each end."""
    if not values:
        return math.nan
    drop = int(math.floor(trim * len(values)))
    kept = sorted(values)
    if drop:
        kept = kept[drop:-drop] if len(kept) > 2 * drop else []
    if not kept:
        return math.nan
    return sum(kept) / len(kept)


def summarize(rows: list[MetricsRow], trim: float) -> list[dict]:
    """Per grid point: trimmed mean of each metric over clean replicates."""
    groups: dict[tuple, list[MetricsRow]] = {}
    for row in rows:
        key = (row.n_vertices, row.expected_degree, row.n_targets, row.n_samples)
        groups.setdefault(key, []).append(row)
    out = []
    for key in sorted(groups):
        members = groups[key]
        clean = [r for r in members if not r.error]
        entry = {
            "n_vertices": key[0],
            "expected_degree": key[1],
            "n_targets": key[2],
            "n_samples": key[3],
            "n_ok": len(clean),
            "n_error": len(members) - len(clean),
        }
        for metric in _SUMMARY_METRICS:
            values = [float(getattr(r, metric)) for r in clean]
            entry[f"{metric}_trimmed_mean"] = trimmed_mean(values, trim)
        out.append(entry)
    return out


def write_results_csv(rows: Iterable[MetricsRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.to_csv_fields())


def read_results_csv(path: str | Path) -> list[MetricsRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_COLUMNS:
            raise ValueError("unexpected results CSV header")
        return [MetricsRow.from_csv_fields(fields) for fields in reader]


def write_summary_csv(summary: list[dict], path: str | Path) -> None:
    if not summary:
        Path(path).write_text("", encoding="utf-8")
        return
    columns = list(summary[0].keys())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for entry in summary:
            writer.writerow([repr(entry[c]) if isinstance(entry[c], float) else str(entry[c])
                             for c in columns])
