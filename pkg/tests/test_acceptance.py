"""Acceptance suite: one test per exit criterion, each printing a PASS line.

Shared across criteria: a 500-instance suite of small random ground-truth
DAGs with brute-force possible-ancestor sets derived by enumerating each
equivalence class, plus fixed golden graphs. Heavier criteria run the real
benchmark harness at the stated sizes.
"""

import csv
import io
import itertools
import math
import random
import time
from dataclasses import dataclass

import numpy as np
import pytest

from snapcd.bench import CSV_COLUMNS, ExperimentConfig, run_experiment, write_results_csv
from snapcd.citests import (
    BudgetedTester,
    ChiSquareTester,
    Dataset,
    FisherZTester,
    OracleTester,
)
from snapcd.discovery import (
    DiscoveryState,
    orient_vstructures_pc,
    orient_vstructures_rfci,
    pc,
    skeleton_step,
    snap_inf,
    snap_k,
    snap_prefilter_then,
)
from snapcd.errors import BudgetExceededError
from snapcd.graphs import (
    Dag,
    MixedGraph,
    SepsetMap,
    cpdag_of,
    induced_subgraph,
    possible_ancestors,
)
from snapcd.synthetic import (
    GenConfig,
    expected_possible_ancestors,
    random_dag,
    sample_targets,
)

from helpers import brute_possible_ancestors, mixed_from_edges


@dataclass
class Instance:
    dag: Dag
    targets: frozenset
    cpdag: MixedGraph
    possan: set


@pytest.fixture(scope="session")
def small_suite():
    """500 random ground-truth instances, at most 8 vertices each."""
    rng = random.Random(20_240)
    instances = []
    for seed in range(500):
        n = 4 + seed % 5
        degree = 2.0 if seed % 2 == 0 else 3.0
        dag = random_dag(GenConfig(n, degree, max_degree=10, seed=seed))
        n_targets = rng.randint(1, 3)
        targets = frozenset(rng.sample(range(n), n_targets))
        cpdag = cpdag_of(dag)
        possan = brute_possible_ancestors(dag, targets)
        instances.append(Instance(dag, targets, cpdag, possan))
    return instances


def test_c01_snap_k_soundness(small_suite):
    started = time.perf_counter()
    violations = 0
    runs = 0
    for inst in small_suite:
        n = inst.dag.n_vertices
        for k in sorted({0, 1, 2, n - 2}):
            res = snap_k(n, inst.targets, k, OracleTester(inst.dag))
            remaining = set(res.remaining)
            runs += 1
            if not inst.possan <= remaining:
                violations += 1
            if not possible_ancestors(inst.cpdag, remaining) <= remaining:
                violations += 1
    elapsed = time.perf_counter() - started
    assert violations == 0
    assert elapsed < 120.0, f"soundness sweep took {elapsed:.1f}s"
    print(f"ACCEPTANCE 01 PASS - soundness: {runs} pruned runs over 500 DAGs, "
          f"0 violations, {elapsed:.1f}s")


def test_c02_snap_inf_completeness(small_suite):
    mismatches = 0
    for inst in small_suite:
        res = snap_inf(inst.dag.n_vertices, inst.targets, OracleTester(inst.dag))
        expected, _ = induced_subgraph(inst.cpdag, sorted(inst.possan))
        if set(res.remaining) != inst.possan or res.graph != expected:
            mismatches += 1
    assert mismatches == 0
    print("ACCEPTANCE 02 PASS - completeness: snap_inf equals the restricted "
          "CPDAG on all 500 instances")


def test_c03_prefilter_equivalence(small_suite):
    mismatches = 0
    for inst in small_suite:
        res = snap_prefilter_then("pc", inst.dag.n_vertices, inst.targets, 0,
                                  OracleTester(inst.dag))
        expected, _ = induced_subgraph(inst.cpdag, res.remaining)
        if res.graph != expected:
            mismatches += 1
    assert mismatches == 0
    print("ACCEPTANCE 03 PASS - prefilter: snap_k(0)+pc equals the induced "
          "CPDAG on all 500 instances")


def test_c04_pc_baseline(small_suite):
    from snapcd.graphs import shd

    for inst in small_suite:
        res = pc(inst.dag.n_vertices, OracleTester(inst.dag))
        assert shd(res.graph, inst.cpdag) == 0
    print("ACCEPTANCE 04 PASS - pc baseline: SHD 0 against the CPDAG on all "
          "500 instances")


def test_c05_counterexample_one_extra_test():
    # X2->X1, X3->X2, X4->{X1,X3}, X5->{X2,X3}, X6->{X2,X4,X5}; targets X1, X2
    dag = Dag(6, [(1, 0), (2, 1), (3, 0), (3, 2), (4, 1), (4, 2),
                  (5, 1), (5, 3), (5, 4)],
              labels=[f"X{i + 1}" for i in range(6)])
    tester_pc = OracleTester(dag)
    total_pc = pc(6, tester_pc).counts.total
    tester_snap = OracleTester(dag)
    total_snap = snap_inf(6, {0, 1}, tester_snap).counts.total
    assert total_snap == total_pc + 1, (total_snap, total_pc)
    print(f"ACCEPTANCE 05 PASS - counter-example: snap_inf performed "
          f"{total_snap} tests, exactly one more than pc's {total_pc}")


# golden graph 1: U->A, C->A, D->A, C->B, D->B, V->B
A6, B6, C6, D6, U6, V6 = range(6)
GOLDEN_CONFLICT = Dag(6, [(U6, A6), (C6, A6), (D6, A6), (C6, B6), (D6, B6), (V6, B6)])

# golden graph 2 and its adversarial order-3 state (see test_golden_graphs)
A, B, C, E, G, U, V, X = range(8)
GOLDEN_EIGHT = Dag(8, [
    (C, A), (E, A), (U, A),
    (A, B), (G, B), (U, B), (V, B),
    (U, X),
    (X, G), (V, G),
    (V, C), (V, E),
])
EIGHT_SEPSETS = {
    (B, X): {G, U, V}, (A, G): {C, E, X}, (A, V): {C, E},
    (B, C): {A, U, V}, (B, E): {A, U, V}, (C, E): {V}, (C, G): {V},
    (C, U): set(), (C, X): set(), (E, G): {V}, (E, U): set(),
    (E, X): set(), (G, U): {X}, (U, V): set(), (V, X): set(),
}


def _adversarial_state():
    skel = MixedGraph(8)
    for u, v in GOLDEN_EIGHT.sorted_edges():
        skel.add_undirected_edge(u, v)
    skel.add_undirected_edge(A, X)
    seps = SepsetMap()
    for (a, b), s in EIGHT_SEPSETS.items():
        seps.set(a, b, s)
    return skel, seps


def test_c06_golden_orientations():
    # (a) order-0 orientation of the conflict graph bidirects the
    # marginally dependent pair
    state = DiscoveryState(set(range(6)), MixedGraph.complete_undirected(6),
                           SepsetMap())
    skeleton_step(state, OracleTester(GOLDEN_CONFLICT), 0)
    oriented = orient_vstructures_pc(state.skeleton, state.sepsets)
    expected_a = mixed_from_edges(
        6,
        directed=[(U6, A6), (C6, A6), (D6, A6), (C6, B6), (D6, B6), (V6, B6)],
        bidirected=[(A6, B6)],
    )
    assert oriented == expected_a

    # (b) the adversarial order-3 state: PC rules bidirect the true edge,
    # the RFCI rules delete the spurious edge and keep it directed
    skel, seps = _adversarial_state()
    pc_graph = orient_vstructures_pc(skel, seps)
    expected_pc = mixed_from_edges(
        8,
        directed=[(C, A), (E, A), (U, A), (X, A), (G, B), (U, B), (V, B),
                  (V, G), (X, G)],
        undirected=[(C, V), (E, V), (U, X)],
        bidirected=[(A, B)],
    )
    assert pc_graph == expected_pc

    skel, seps = _adversarial_state()
    rfci_graph, _, _, _ = orient_vstructures_rfci(skel, seps,
                                                  OracleTester(GOLDEN_EIGHT))
    expected_rfci = mixed_from_edges(
        8,
        directed=[(C, A), (E, A), (U, A), (A, B), (G, B), (U, B), (V, B),
                  (V, G), (X, G)],
        undirected=[(C, V), (E, V), (U, X)],
    )
    assert rfci_graph == expected_rfci
    print("ACCEPTANCE 06 PASS - golden graphs: order-0 conflict bidirects A<->B; "
          "order-3 replay gives A<->B under PC rules and A->B under RFCI rules")


def test_c07_expected_ancestors():
    table = {50: 40.8, 100: 80.8, 150: 120.8, 200: 160.8, 250: 200.8, 300: 240.8}
    for n, want in table.items():
        got = expected_possible_ancestors(n, 4)
        assert abs(got - want) <= 0.05, (n, got)
    total = 0.0
    for seed in range(100):
        dag = random_dag(GenConfig(50, 3.0, max_degree=10, seed=seed))
        targets = sample_targets(dag, 4, "random", seed)
        total += len(possible_ancestors(cpdag_of(dag), targets))
    empirical = total / 100
    assert 12.0 <= empirical <= 28.0, empirical
    assert expected_possible_ancestors(50, 4) >= empirical
    print(f"ACCEPTANCE 07 PASS - expected-ancestor formula matches the table; "
          f"empirical mean {empirical:.2f} inside [12, 28]")


def test_c08_test_reduction_trend():
    started = time.perf_counter()
    pc_totals, snap_totals = [], []
    budget_hits = 0
    snap_wins = 0
    for seed in range(100):
        dag = random_dag(GenConfig(100, 3.0, max_degree=10, seed=seed))
        targets = sample_targets(dag, 4, "random", seed)
        try:
            res_pc = pc(100, BudgetedTester(OracleTester(dag), 5_000_000))
        except BudgetExceededError:
            budget_hits += 1
            continue
        res_snap = snap_inf(100, targets,
                            BudgetedTester(OracleTester(dag), 5_000_000))
        pc_totals.append(res_pc.counts.total)
        snap_totals.append(res_snap.counts.total)
        if res_snap.counts.total <= res_pc.counts.total:
            snap_wins += 1
    elapsed = time.perf_counter() - started
    n = len(pc_totals)
    assert n >= 95, f"only {n} seeds finished under budget"
    mean_pc = sum(pc_totals) / n
    mean_snap = sum(snap_totals) / n
    assert mean_snap < 0.5 * mean_pc, (mean_snap, mean_pc)
    assert snap_wins >= 0.9 * n, snap_wins
    assert elapsed < 600.0, f"trend sweep took {elapsed:.1f}s"
    print(f"ACCEPTANCE 08 PASS - reduction: mean snap {mean_snap:.0f} vs pc "
          f"{mean_pc:.0f} tests ({mean_snap / mean_pc:.1%}), snap<=pc on "
          f"{snap_wins}/{n} seeds, {elapsed:.0f}s")


def test_c09_prefilter_order_trend():
    totals = {0: [], 1: []}
    paired = 0
    for seed in range(100):
        dag = random_dag(GenConfig(50, 5.0, max_degree=10, seed=seed))
        targets = sample_targets(dag, 4, "random", seed)
        row = {}
        for k in (0, 1):
            try:
                tester = BudgetedTester(OracleTester(dag), 1_500_000)
                row[k] = snap_prefilter_then("pc", 50, targets, k, tester).counts.total
            except BudgetExceededError:
                row[k] = None
        if row[0] is not None and row[1] is not None:
            paired += 1
            totals[0].append(row[0])
            totals[1].append(row[1])
    assert paired >= 80, f"only {paired} seeds finished under budget for both orders"
    mean0 = sum(totals[0]) / paired
    mean1 = sum(totals[1]) / paired
    assert mean1 < mean0, (mean1, mean0)
    print(f"ACCEPTANCE 09 PASS - prefilter orders: mean snap(1)+pc {mean1:.0f} "
          f"< snap(0)+pc {mean0:.0f} tests over {paired} paired seeds")


def test_c10_effect_estimation_accuracy():
    cfg = ExperimentConfig(
        n_vertices=[30], expected_degree=[3.0], n_targets=[2],
        n_samples=[20_000], algorithm="snap-inf", tester="oracle",
        target_mode="identifiable", replicates=70, seed=101, workers=1)
    rows = [r for r in run_experiment(cfg) if not r.error][:50]
    assert len(rows) == 50, "needed 50 clean replicates"
    mean_distance = sum(r.intervention_distance for r in rows) / len(rows)
    assert mean_distance < 0.05, mean_distance
    print(f"ACCEPTANCE 10 PASS - estimation: mean intervention distance "
          f"{mean_distance:.4f} < 0.05 over 50 oracle runs")


def test_c11_fisher_z_sanity():
    base = dict(n_vertices=[50], expected_degree=[3.0], n_targets=[4],
                n_samples=[1000], tester="fisher-z", alpha=0.05,
                target_mode="random", replicates=50, seed=77, workers=1,
                max_tests=2_000_000)
    rows_snap = run_experiment(ExperimentConfig(algorithm="snap-inf", **base))
    rows_pc = run_experiment(ExperimentConfig(algorithm="pc", **base))
    by_rep_snap = {r.replicate: r for r in rows_snap if not r.error}
    by_rep_pc = {r.replicate: r for r in rows_pc if not r.error}
    common = sorted(set(by_rep_snap) & set(by_rep_pc))
    assert len(common) >= 40, f"only {len(common)} paired clean replicates"
    mean_snap = sum(by_rep_snap[i].intervention_distance for i in common) / len(common)
    mean_pc = sum(by_rep_pc[i].intervention_distance for i in common) / len(common)
    assert mean_snap <= 1.5 * mean_pc, (mean_snap, mean_pc)
    print(f"ACCEPTANCE 11 PASS - finite-sample: snap distance {mean_snap:.4f} "
          f"within 1.5x of pc's {mean_pc:.4f} over {len(common)} seeds")


def test_c12_statistical_calibration():
    reps = 1000
    fisher_rejects = 0
    chi_rejects = 0
    for seed in range(reps):
        rng = np.random.default_rng(seed)
        cont = Dataset(rng.standard_normal((10_000, 2)))
        if not FisherZTester(cont, alpha=0.05).test(0, 1):
            fisher_rejects += 1
        cat = Dataset(rng.integers(0, 2, size=(10_000, 2)), kind="categorical")
        if not ChiSquareTester(cat, alpha=0.05).test(0, 1):
            chi_rejects += 1
    for name, rejects in (("fisher-z", fisher_rejects), ("chi-square", chi_rejects)):
        rate = rejects / reps
        assert 0.03 <= rate <= 0.07, (name, rate)
    print(f"ACCEPTANCE 12 PASS - calibration: type-I rates fisher-z "
          f"{fisher_rejects / reps:.3f}, chi-square {chi_rejects / reps:.3f} "
          f"inside 0.05 +/- 0.02")


def test_c13_rfci_budget(small_suite):
    checked = 0
    for inst in small_suite:
        res = snap_inf(inst.dag.n_vertices, inst.targets, OracleTester(inst.dag))
        stats = res.rfci_stats
        assert stats.queries <= 2 * stats.triples_processed + \
            stats.edges_deleted * stats.max_sepset_size ** 2
        checked += 1
    # the adversarial golden state exercises the deletion branch explicitly
    skel, seps = _adversarial_state()
    _, _, _, stats = orient_vstructures_rfci(skel, seps, OracleTester(GOLDEN_EIGHT))
    assert stats.edges_deleted == 1
    assert stats.queries <= stats.budget()
    print(f"ACCEPTANCE 13 PASS - RFCI budget respected on {checked} suite runs "
          f"plus the adversarial golden state")


def test_c14_bench_determinism(tmp_path):
    cfg = ExperimentConfig(
        n_vertices=[12, 16], expected_degree=[2.0], n_targets=[2],
        n_samples=[800], algorithm="snap-inf", tester="oracle",
        replicates=3, seed=5, workers=1)
    paths = []
    for name in ("first.csv", "second.csv"):
        path = tmp_path / name
        write_results_csv(run_experiment(cfg), path)
        paths.append(path)

    def strip_wall(path):
        wall = CSV_COLUMNS.index("wall_ms")
        out = io.StringIO()
        writer = csv.writer(out)
        with open(path, newline="") as fh:
            for cells in csv.reader(fh):
                del cells[wall]
                writer.writerow(cells)
        return out.getvalue().encode()

    assert strip_wall(paths[0]) == strip_wall(paths[1])
    print("ACCEPTANCE 14 PASS - determinism: repeated bench runs byte-identical "
          "excluding wall_ms")
