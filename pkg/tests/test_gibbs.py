"""Gibbs sampler: conditionals, trapping, replication, chain accounting."""

import numpy as np
import pytest

from agentsynth.dataset import pool_to_codes
from agentsynth.errors import ConfigError, DataError, UnreachableContextError
from agentsynth.gibbs import (
    ChainConfig,
    estimate_conditionals,
    gibbs_step,
    run_chain,
    run_chains,
)

from conftest import categorical_schema, pool_from_codes, random_categorical_pool, toy_pool


class TestEstimateConditionals:
    def test_toy_point_mass_conditionals(self):
        tables = estimate_conditionals(toy_pool(500))
        # P(X | Y=0) puts all mass on X=0; P(X | Y=1) on X=1
        np.testing.assert_array_equal(tables[0].table[(0,)], [1.0, 0.0])
        np.testing.assert_array_equal(tables[0].table[(1,)], [0.0, 1.0])
        np.testing.assert_array_equal(tables[1].table[(0,)], [1.0, 0.0])

    def test_single_row_gives_point_masses(self, rng):
        pool = random_categorical_pool(rng, [3, 2, 4], 1)
        for table in estimate_conditionals(pool):
            assert len(table.table) == 1
            for vec in table.table.values():
                assert vec.max() == 1.0

    def test_matches_counting_oracle(self, rng):
        # Oracle: brute-force count-and-normalize over explicit loops.
        pool = random_categorical_pool(rng, [2, 3, 2], 200)
        codes = pool_to_codes(pool)
        tables = estimate_conditionals(pool)
        for i in range(3):
            others = [k for k in range(3) if k != i]
            for ctx, probs in tables[i].table.items():
                matching = [r for r in codes if tuple(r[others]) == ctx]
                counts = np.zeros(pool.schema.value_counts[i])
                for r in matching:
                    counts[r[i]] += 1
                np.testing.assert_allclose(probs, counts / counts.sum(), atol=1e-12)
                assert abs(probs.sum() - 1.0) < 1e-12

    def test_empty_pool_rejected(self):
        schema = categorical_schema([2, 2])
        from agentsynth.dataset import AgentPool
        with pytest.raises(DataError):
            estimate_conditionals(AgentPool(schema, (), "train"))


class TestGibbsStep:
    def test_toy_trapped_at_start(self, rng):
        tables = estimate_conditionals(toy_pool(500))
        row = (0, 0)
        for _ in range(50):
            row = gibbs_step(row, tables, rng)
            assert row == (0, 0)

    def test_point_mass_tables_are_identity(self, rng):
        pool = random_categorical_pool(rng, [3, 2, 4], 1)
        tables = estimate_conditionals(pool)
        start = tuple(int(v) for v in pool_to_codes(pool)[0])
        assert gibbs_step(start, tables, rng) == start

    def test_unreachable_context_raises(self, rng):
        # two prototypes over 3 variables: the context (0, 1) for the first
        # variable never occurs in training
        schema = categorical_schema([2, 2, 2])
        pool = pool_from_codes(schema, [[0, 0, 0]] * 5 + [[1, 1, 1]] * 5)
        tables = estimate_conditionals(pool)
        with pytest.raises(UnreachableContextError):
            gibbs_step((0, 0, 1), tables, rng)

    def test_single_variable_stationary_matches_marginal(self, rng):
        # chi-square goodness of fit against the training marginal;
        # critical value for dof=2 at p=0.01 is 9.21
        schema = categorical_schema([3])
        codes = rng.choice(3, size=2000, p=[0.5, 0.3, 0.2])[:, None]
        pool = pool_from_codes(schema, codes)
        tables = estimate_conditionals(pool)
        expected_probs = np.bincount(codes[:, 0], minlength=3) / 2000
        n_draws = 10 ** 5
        draws = np.zeros(3)
        row = (0,)
        for _ in range(n_draws):
            row = gibbs_step(row, tables, rng)
            draws[row[0]] += 1
        expected = expected_probs * n_draws
        chi2 = float(np.sum((draws - expected) ** 2 / expected))
        assert chi2 < 9.21


class TestRunChain:
    def test_iteration_accounting_with_stubbed_step(self):
        pool = toy_pool(5)
        config = ChainConfig(target_count=100000, warmup=20000, thinning=20, seed=0)
        _, diag = run_chain([], pool, config, step_fn=lambda row, rng: row)
        assert diag["iterations"] == 2020000

    def test_zero_target_empty_pool_after_warmup(self):
        pool = toy_pool(5)
        tables = estimate_conditionals(pool)
        out, diag = run_chain(tables, pool, ChainConfig(target_count=0, warmup=50, thinning=3))
        assert len(out) == 0
        assert diag["iterations"] == 50

    def test_replication_on_categorical_data(self, rng):
        pool = random_categorical_pool(rng, [3, 2, 2, 3], 150)
        tables = estimate_conditionals(pool)
        out, diag = run_chain(tables, pool,
                              ChainConfig(target_count=300, warmup=100, thinning=2, seed=4))
        train_rows = set(pool.rows)
        assert all(row in train_rows for row in out.rows)
        assert out.provenance == "generated"
        assert diag["restarts"] == 0

    def test_explicit_start_trapping(self):
        pool = toy_pool(100)
        tables = estimate_conditionals(pool)
        out, _ = run_chain(tables, pool,
                           ChainConfig(target_count=500, warmup=0, thinning=1,
                                       init=("0", "0"), seed=9))
        assert set(out.rows) == {("0", "0")}

    def test_deterministic_under_seed(self, rng):
        pool = random_categorical_pool(rng, [3, 3], 60)
        tables = estimate_conditionals(pool)
        config = ChainConfig(target_count=40, warmup=10, thinning=2, seed=33)
        a, _ = run_chain(tables, pool, config)
        b, _ = run_chain(tables, pool, config)
        assert a.rows == b.rows

    def _three_var_islands(self):
        schema = categorical_schema([2, 2, 2])
        return pool_from_codes(schema, [[0, 0, 0]] * 10 + [[1, 1, 1]] * 10)

    def test_restart_policy_counts(self):
        pool = self._three_var_islands()
        tables = estimate_conditionals(pool)
        # start off-distribution so the very first update hits a missing context
        config = ChainConfig(target_count=10, warmup=0, thinning=1,
                             init=("c0", "c0", "c1"), seed=1, restart_on_unreachable=True)
        out, diag = run_chain(tables, pool, config)
        assert diag["restarts"] >= 1
        assert set(out.rows) <= {("c0", "c0", "c0"), ("c1", "c1", "c1")}

    def test_without_restart_policy_raises(self):
        pool = self._three_var_islands()
        tables = estimate_conditionals(pool)
        config = ChainConfig(target_count=10, warmup=0, thinning=1,
                             init=("c0", "c0", "c1"), seed=1)
        with pytest.raises(UnreachableContextError):
            run_chain(tables, pool, config)

    def test_multiple_chains_concatenate(self, rng):
        pool = random_categorical_pool(rng, [2, 2], 50)
        tables = estimate_conditionals(pool)
        configs = [ChainConfig(target_count=20, warmup=5, thinning=1, seed=s) for s in (1, 2)]
        merged, diags = run_chains(tables, pool, configs)
        assert len(merged) == 40
        assert len(diags) == 2

    def test_invalid_config_rejected(self):
        with pytest.raises(ConfigError):
            ChainConfig(target_count=10, thinning=0)
