import numpy as np
import pytest

from conftest import bits_equal, make_matrix
from vecfuse.errors import InvalidRank, PlanMismatch
from vecfuse.labels import Standardizer
from vecfuse.rowmerge import (
    MergePlan,
    build_merge_plan,
    l1_normalize_columns,
    l2_normalize_columns,
    l2_normalize_rows,
    merge_standardized,
    zipf_weight,
)


class TestZipfWeight:
    def test_definition(self):
        assert zipf_weight(1) == 1.0
        assert zipf_weight(4) == 0.25

    def test_invalid_rank(self):
        with pytest.raises(InvalidRank):
            zipf_weight(0)


class TestBuildMergePlan:
    def test_groups_by_standardized_label(self):
        m = make_matrix(["Cat", "cat", "dog"], np.eye(3))
        plan, kept = build_merge_plan(m, Standardizer())
        assert list(kept) == [0, 1, 2]
        assert plan.groups["/c/en/cat"] == [(0, 1), (1, 2)]
        assert plan.groups["/c/en/dog"] == [(2, 3)]

    def test_drops_unstandardizable_rows(self):
        m = make_matrix(["cat", "...", "dog"], np.eye(3))
        plan, kept = build_merge_plan(m, Standardizer())
        assert list(kept) == [0, 2]
        # plan indexes rows of the kept subset
        assert plan.groups["/c/en/dog"] == [(1, 3)]


class TestMergeStandardized:
    def test_zipf_weighted_example(self):
        m = make_matrix(["Cat", "cat"], [[1.0, 0.0], [0.0, 1.0]], ranks=[1, 3])
        plan = MergePlan(groups={"/c/en/cat": [(0, 1), (1, 3)]})
        merged = merge_standardized(m, plan)
        assert merged.labels == ["/c/en/cat"]
        assert np.allclose(merged.data, [[0.75, 0.25]], atol=1e-7)
        assert list(merged.source_rank) == [1]

    def test_singleton_group_unchanged_bits(self):
        m = make_matrix(["cat"], [[0.1, 0.7]])
        plan = MergePlan(groups={"/c/en/cat": [(0, 1)]})
        merged = merge_standardized(m, plan)
        assert bits_equal(merged.data, m.data)

    def test_identical_vectors_are_fixed_point(self):
        v = [0.3, -0.4, 0.5]
        m = make_matrix(["A", "a"], [v, v], ranks=[2, 9])
        plan = MergePlan(groups={"/c/en/a": [(0, 2), (1, 9)]})
        merged = merge_standardized(m, plan)
        assert np.allclose(merged.data[0], v, atol=1e-7)

    def test_convex_envelope(self, rng):
        for _ in range(50):
            g = rng.randint(2, 6)
            rows = rng.randn(g, 4).astype(np.float32)
            ranks = sorted(rng.choice(np.arange(1, 100), size=g, replace=False))
            m = make_matrix([f"w{i}" for i in range(g)], rows, ranks=list(ranks))
            plan = MergePlan(groups={"/c/en/w": [(i, int(ranks[i])) for i in range(g)]})
            merged = merge_standardized(m, plan).data[0]
            lo = rows.min(axis=0) - 1e-6
            hi = rows.max(axis=0) + 1e-6
            assert np.all(merged >= lo) and np.all(merged <= hi)

    def test_group_processing_order_irrelevant(self):
        m = make_matrix(["b", "B", "a"], [[1, 0], [3, 0], [0, 2]], ranks=[1, 2, 3])
        g1 = {"/c/en/b": [(0, 1), (1, 2)], "/c/en/a": [(2, 3)]}
        g2 = {"/c/en/a": [(2, 3)], "/c/en/b": [(0, 1), (1, 2)]}
        m1 = merge_standardized(m, MergePlan(groups=g1))
        m2 = merge_standardized(m, MergePlan(groups=g2))
        assert m1.labels == m2.labels
        assert bits_equal(m1.data, m2.data)

    def test_output_order_by_min_rank_then_label(self):
        m = make_matrix(["x", "y", "z"], np.eye(3), ranks=[5, 2, 5])
        plan = MergePlan(groups={"/c/en/x": [(0, 5)], "/c/en/y": [(1, 2)],
                                 "/c/en/a": [(2, 5)]})
        merged = merge_standardized(m, plan)
        assert merged.labels == ["/c/en/y", "/c/en/a", "/c/en/x"]

    def test_strategies_differ_on_fixture(self):
        m = make_matrix(["A", "a"], [[1.0, 0.0], [0.0, 1.0]], ranks=[1, 3])
        plan = MergePlan(groups={"/c/en/a": [(0, 1), (1, 3)]})
        zipf = merge_standardized(m, plan, strategy="zipf").data[0]
        first = merge_standardized(m, plan, strategy="first").data[0]
        unweighted = merge_standardized(m, plan, strategy="unweighted").data[0]
        assert np.allclose(zipf, [0.75, 0.25])
        assert np.allclose(first, [1.0, 0.0])
        assert np.allclose(unweighted, [0.5, 0.5])

    def test_plan_mismatch(self):
        m = make_matrix(["a", "b"], np.eye(2))
        with pytest.raises(PlanMismatch):
            merge_standardized(m, MergePlan(groups={"/c/en/a": [(0, 1)]}))
        with pytest.raises(PlanMismatch):
            merge_standardized(m, MergePlan(groups={"/c/en/a": [(0, 1), (5, 2)]}))


class TestColumnNormalization:
    def test_l1_example(self):
        m = make_matrix(["a", "b", "c"], [[1.0], [-1.0], [2.0]])
        out = l1_normalize_columns(m)
        assert np.allclose(out.data[:, 0], [0.25, -0.25, 0.5])

    def test_l1_zero_column_unchanged(self):
        m = make_matrix(["a", "b"], [[0.0, 1.0], [0.0, 3.0]])
        out = l1_normalize_columns(m)
        assert np.all(out.data[:, 0] == 0.0)

    def test_l1_idempotent_bits(self, rng):
        m = make_matrix([f"w{i}" for i in range(6)], rng.randn(6, 4).astype(np.float32))
        once = l1_normalize_columns(m)
        twice = l1_normalize_columns(once)
        assert bits_equal(once.data, twice.data)
        sums = np.abs(once.data.astype(np.float64)).sum(axis=0)
        assert np.all(np.abs(sums - 1.0) < 1e-6)

    def test_l2_columns(self, rng):
        m = make_matrix([f"w{i}" for i in range(5)], rng.randn(5, 3).astype(np.float32))
        out = l2_normalize_columns(m)
        norms = np.sqrt((out.data.astype(np.float64) ** 2).sum(axis=0))
        assert np.all(np.abs(norms - 1.0) < 1e-6)


class TestRowNormalization:
    def test_example(self):
        m = make_matrix(["a"], [[3.0, 4.0]])
        out = l2_normalize_rows(m)
        assert np.allclose(out.data, [[0.6, 0.8]])

    def test_zero_row_unchanged(self):
        m = make_matrix(["a"], [[0.0, 0.0]])
        out = l2_normalize_rows(m)
        assert np.all(out.data == 0.0)

    def test_unit_row_unchanged_bits(self):
        m = make_matrix(["a"], [[0.6, 0.8]])
        out = l2_normalize_rows(m)
        assert bits_equal(out.data, m.data)

    def test_idempotent_bits(self, rng):
        m = make_matrix([f"w{i}" for i in range(8)], rng.randn(8, 5).astype(np.float32))
        once = l2_normalize_rows(m)
        twice = l2_normalize_rows(once)
        assert bits_equal(once.data, twice.data)
        norms = np.sqrt((once.data.astype(np.float64) ** 2).sum(axis=1))
        assert np.all(np.abs(norms - 1.0) < 1e-6)

    def test_cosine_ranking_invariance(self, rng):
        def cos(x, y):
            return float(x @ y / np.sqrt((x @ x) * (y @ y)))
        for _ in range(50):
            rows = rng.randn(3, 6).astype(np.float32) * rng.uniform(0.1, 9)
            m = make_matrix(["q", "a", "b"], rows)
            out = l2_normalize_rows(m).data.astype(np.float64)
            raw = m.data.astype(np.float64)
            before = cos(raw[0], raw[1]) > cos(raw[0], raw[2])
            after = cos(out[0], out[1]) > cos(out[0], out[2])
            assert before == after
