"""Generators: DAG family, SEM and CPT sampling, targets, expected ancestors."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snapcd.errors import NoIdentifiableSetError
from snapcd.graphs import Dag, ancestors, cpdag_of, descendants, topological_order
from snapcd.synthetic import (
    CptSpec,
    GenConfig,
    SemSpec,
    expected_possible_ancestors,
    random_cpt,
    random_dag,
    random_sem,
    sample_binary,
    sample_linear_gaussian,
    sample_targets,
    split_rows,
    true_binary_effect,
)


class TestRandomDag:
    def test_single_vertex(self):
        dag = random_dag(GenConfig(1, 0.0, seed=0))
        assert dag.n_vertices == 1 and not dag.edges

    def test_zero_degree_is_edgeless(self):
        dag = random_dag(GenConfig(30, 0.0, seed=1))
        assert not dag.edges

    def test_acyclic_and_capped(self):
        for seed in range(60):
            dag = random_dag(GenConfig(40, 3.0, max_degree=6, seed=seed))
            topological_order(dag)  # raises on a cycle
            degree = [0] * 40
            for u, v in dag.edges:
                degree[u] += 1
                degree[v] += 1
            assert max(degree) <= 6

    def test_mean_degree_near_expectation(self):
        total = 0.0
        for seed in range(100):
            dag = random_dag(GenConfig(200, 3.0, max_degree=10, seed=seed))
            total += 2 * len(dag.edges) / 200
        mean_degree = total / 100
        assert 2.7 <= mean_degree <= 3.3, mean_degree

    def test_deterministic_under_seed(self):
        a = random_dag(GenConfig(25, 3.0, seed=13))
        b = random_dag(GenConfig(25, 3.0, seed=13))
        assert a == b
        c = random_dag(GenConfig(25, 3.0, seed=14))
        assert a != c

    def test_config_validation(self):
        with pytest.raises(ValueError):
            GenConfig(5, 5.0)
        with pytest.raises(ValueError):
            GenConfig(5, 3.0, max_degree=2)


class TestSemSampling:
    def test_weight_range_enforced(self):
        dag = Dag(2, [(0, 1)])
        with pytest.raises(ValueError):
            SemSpec(dag, {(0, 1): 0.1})
        with pytest.raises(ValueError):
            SemSpec(dag, {})

    def test_random_sem_weights_in_band(self):
        dag = random_dag(GenConfig(30, 3.0, seed=2))
        spec = random_sem(dag, seed=5)
        assert set(spec.weights) == set(dag.edges)
        assert all(0.5 <= abs(w) <= 3.0 for w in spec.weights.values())

    def test_edgeless_columns_standard_normal(self):
        spec = SemSpec(Dag(4, []), {})
        data = sample_linear_gaussian(spec, 10_000, seed=3)
        assert np.all(np.abs(data.values.mean(axis=0)) < 0.05)
        assert np.all(np.abs(data.values.std(axis=0) - 1.0) < 0.05)

    def test_single_edge_covariance(self):
        spec = SemSpec(Dag(2, [(0, 1)]), {(0, 1): 2.0})
        data = sample_linear_gaussian(spec, 10_000, seed=4)
        cov = np.cov(data.values, rowvar=False)
        assert abs(cov[0, 1] - 2.0) < 0.1

    def test_seed_determinism(self):
        spec = random_sem(random_dag(GenConfig(10, 2.0, seed=0)), seed=1)
        a = sample_linear_gaussian(spec, 100, seed=9)
        b = sample_linear_gaussian(spec, 100, seed=9)
        assert np.array_equal(a.values, b.values)

    def test_analytic_covariance_convergence(self):
        for seed in range(5):
            dag = random_dag(GenConfig(6, 2.0, seed=seed))
            spec = random_sem(dag, seed=seed)
            data = sample_linear_gaussian(spec, 50_000, seed=seed)
            w = np.zeros((6, 6))
            for (u, v), weight in spec.weights.items():
                w[u, v] = weight
            inv = np.linalg.inv(np.eye(6) - w.T)
            analytic = inv @ inv.T
            empirical = np.cov(data.values, rowvar=False)
            rel = np.linalg.norm(empirical - analytic) / np.linalg.norm(analytic)
            assert rel < 0.05, (seed, rel)

    def test_json_round_trip(self):
        spec = random_sem(random_dag(GenConfig(8, 2.0, seed=3)), seed=3)
        back = SemSpec.from_json(spec.to_json())
        assert back.dag == spec.dag and back.weights == spec.weights


class TestBinarySampling:
    def test_all_ones_tables(self):
        dag = Dag(3, [(0, 1), (1, 2)])
        tables = {0: np.ones(1), 1: np.ones(2), 2: np.ones(2)}
        data = sample_binary(CptSpec(dag, tables), 500, seed=6)
        assert np.all(data.values == 1)

    def test_root_frequency(self):
        dag = Dag(1, [])
        data = sample_binary(CptSpec(dag, {0: np.array([0.5])}), 10_000, seed=7)
        assert abs(data.values.mean() - 0.5) < 0.02

    def test_seed_determinism(self):
        spec = random_cpt(random_dag(GenConfig(8, 2.0, seed=4)), seed=4)
        a = sample_binary(spec, 200, seed=8)
        b = sample_binary(spec, 200, seed=8)
        assert np.array_equal(a.values, b.values)

    def test_cpt_validation(self):
        dag = Dag(2, [(0, 1)])
        with pytest.raises(ValueError):
            CptSpec(dag, {0: np.array([0.5]), 1: np.array([0.2])})  # needs 2 rows
        with pytest.raises(ValueError):
            CptSpec(dag, {0: np.array([1.5]), 1: np.array([0.2, 0.3])})

    def test_true_binary_effect_sign(self):
        # p(child=1 | parent) rises from 0.1 to 0.9
        dag = Dag(2, [(0, 1)])
        spec = CptSpec(dag, {0: np.array([0.5]), 1: np.array([0.1, 0.9])})
        effect = true_binary_effect(spec, 0, 1, seed=11)
        assert abs(effect - 0.8) < 0.01
        assert true_binary_effect(spec, 1, 0, seed=11) == pytest.approx(0.0)

    def test_json_round_trip(self):
        spec = random_cpt(random_dag(GenConfig(6, 2.0, seed=5)), seed=5)
        back = CptSpec.from_json(spec.to_json())
        assert back.dag == spec.dag
        assert all(np.array_equal(back.tables[v], spec.tables[v]) for v in range(6))


class TestSampleTargets:
    def test_all_vertices(self):
        dag = Dag(5, [(0, 1)])
        assert sample_targets(dag, 5, "random", seed=0) == frozenset(range(5))

    def test_random_mode_deterministic(self):
        dag = random_dag(GenConfig(20, 2.0, seed=6))
        assert sample_targets(dag, 4, "random", seed=1) == \
            sample_targets(dag, 4, "random", seed=1)

    def test_chain_pairs_not_identifiable(self):
        # the chain CPDAG is fully undirected, so no ordered pair is amenable
        chain = Dag(3, [(0, 1), (1, 2)])
        with pytest.raises(NoIdentifiableSetError):
            sample_targets(chain, 2, "identifiable", seed=2, retry_budget=200)

    def test_fully_directed_cpdag_accepts_comparable_pairs(self):
        # collider-rich graph whose CPDAG is fully directed
        dag = Dag(4, [(0, 2), (1, 2), (2, 3)])
        targets = sample_targets(dag, 2, "identifiable", seed=3)
        a, b = sorted(targets)
        assert b in descendants(dag, {a}) or a in descendants(dag, {b})

    def test_identifiable_requirements_hold(self):
        from snapcd.adjustment import is_amenable

        found = 0
        for seed in range(40):
            dag = random_dag(GenConfig(15, 2.5, seed=seed))
            try:
                targets = sample_targets(dag, 3, "identifiable", seed=seed,
                                         retry_budget=2000)
            except NoIdentifiableSetError:
                continue
            found += 1
            g = cpdag_of(dag)
            for a in targets:
                assert any(t in ancestors(dag, {a}) or t in descendants(dag, {a})
                           for t in targets if t != a)
                for b in targets:
                    if a != b:
                        assert is_amenable(g, a, b)
        assert found > 0


class TestExpectedPossibleAncestors:
    def test_paper_table_values(self):
        expected = {50: 40.8, 100: 80.8, 150: 120.8, 200: 160.8, 250: 200.8, 300: 240.8}
        for n, value in expected.items():
            assert expected_possible_ancestors(n, 4) == pytest.approx(value, abs=0.05)

    def test_all_targets_is_n(self):
        for n in (1, 3, 10):
            assert expected_possible_ancestors(n, n) == pytest.approx(float(n))

    @given(st.integers(1, 60), st.integers(1, 60))
    @settings(max_examples=80, deadline=None)
    def test_closed_form_identity(self, n, t):
        if t > n:
            n, t = t, n
        value = expected_possible_ancestors(n, t)
        assert value == pytest.approx(t * (n + 1) / (t + 1))

    def test_overestimates_empirical_mean(self):
        from snapcd.graphs import possible_ancestors

        total = 0.0
        for seed in range(100):
            dag = random_dag(GenConfig(50, 3.0, seed=seed))
            targets = sample_targets(dag, 4, "random", seed=seed)
            total += len(possible_ancestors(cpdag_of(dag), targets))
        empirical = total / 100
        assert 12.0 <= empirical <= 28.0, empirical
        assert expected_possible_ancestors(50, 4) >= empirical


class TestSplitRows:
    def test_partition(self):
        first, second = split_rows(101, seed=3)
        assert len(first) == 50 and len(second) == 51
        assert sorted(set(first) | set(second)) == list(range(101))

    def test_deterministic(self):
        a = split_rows(100, seed=4)
        b = split_rows(100, seed=4)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
