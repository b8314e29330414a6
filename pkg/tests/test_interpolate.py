import numpy as np
import pytest

from conftest import make_matrix
from vecfuse.errors import EmptyOverlap
from vecfuse.interpolate import (
    build_overlap,
    fuse,
    infer_missing,
    svd_discount,
    svd_factors,
)
from vecfuse.rowmerge import l2_normalize_rows


def unit_rows(labels, dims, rng):
    return l2_normalize_rows(
        make_matrix(labels, rng.randn(len(labels), dims).astype(np.float32)))


class TestBuildOverlap:
    def test_partition(self):
        a = make_matrix(["x", "s1", "y", "s2"], np.eye(4))
        b = make_matrix(["s2", "s1", "z"], np.eye(4)[:3, :3])
        idx = build_overlap(a, b)
        assert idx.shared == ["s1", "s2"]  # a's order
        assert idx.only_a == ["x", "y"]
        assert idx.only_b == ["z"]
        assert not set(idx.shared) & set(idx.only_a)
        assert not set(idx.shared) & set(idx.only_b)


class TestInferMissing:
    def test_identical_vector_single_neighbor(self, rng):
        have = make_matrix(["term", "t", "other"],
                           [[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        want = make_matrix(["t", "other"], [[5.0, 6.0, 7.0], [1.0, 1.0, 1.0]])
        idx = build_overlap(have, want)
        got = infer_missing("term", have, want, idx, k=1)
        assert np.allclose(got, [5.0, 6.0, 7.0], atol=1e-6)

    def test_equal_similarities_average(self):
        # two shared neighbors at the same angle from the query
        have = make_matrix(["term", "p", "q"],
                           [[1.0, 0.0], [1.0, 1.0], [1.0, -1.0]])
        want = make_matrix(["p", "q"], [[2.0, 0.0], [0.0, 4.0]])
        idx = build_overlap(have, want)
        got = infer_missing("term", have, want, idx, k=2)
        assert np.allclose(got, [1.0, 2.0], atol=1e-7)

    def test_all_negative_similarities_fall_back_to_mean(self):
        # both shared terms point away from the query
        have = make_matrix(["term", "p", "q"],
                           [[1.0, 0.0], [-1.0, 0.1], [-1.0, -0.1]])
        want = make_matrix(["p", "q"], [[2.0, 0.0], [0.0, 4.0]])
        idx = build_overlap(have, want)
        got = infer_missing("term", have, want, idx, k=2)
        assert np.allclose(got, [1.0, 2.0], atol=1e-7)

    def test_convex_combination(self, rng):
        have = unit_rows(["term"] + [f"s{i}" for i in range(8)], 5, rng)
        want = unit_rows([f"s{i}" for i in range(8)], 4, rng)
        idx = build_overlap(have, want)
        got = infer_missing("term", have, want, idx, k=4)
        lo = want.data.min(axis=0) - 1e-9
        hi = want.data.max(axis=0) + 1e-9
        assert np.all(got >= lo) and np.all(got <= hi)

    def test_empty_overlap(self):
        have = make_matrix(["term"], [[1.0, 0.0]])
        want = make_matrix(["other"], [[1.0, 0.0]])
        idx = build_overlap(have, want)
        with pytest.raises(EmptyOverlap):
            infer_missing("term", have, want, idx, k=1)


class TestSvdDiscount:
    def test_identity(self):
        feats, s = svd_discount(np.eye(2), 2)
        assert np.allclose(s, [1.0, 1.0])
        assert np.allclose(feats @ feats.T, np.eye(2), atol=1e-12)

    def test_rank_one(self):
        feats, s = svd_discount(np.array([[2.0, 0.0], [0.0, 0.0]]), 1)
        assert np.allclose(s, [2.0, 0.0])
        # sign convention pins the feature column to +sqrt(2)
        assert np.allclose(feats[:, 0], [np.sqrt(2.0), 0.0], atol=1e-12)

    def test_reconstruction_oracle(self, rng):
        m = rng.randn(20, 6)
        u, s, vt = svd_factors(m)
        assert np.linalg.norm(u @ np.diag(s) @ vt - m) < 1e-6 * np.linalg.norm(m)
        feats, _ = svd_discount(m, 6)
        gram = feats @ feats.T
        assert np.abs(gram - u @ np.diag(s) @ u.T).max() < 1e-6

    def test_spectrum_non_increasing_and_column_norms(self, rng):
        m = rng.randn(30, 8)
        feats, s = svd_discount(m, 8)
        assert np.all(np.diff(s) <= 1e-12)
        col_norms = np.sqrt((feats ** 2).sum(axis=0))
        assert np.allclose(col_norms, np.sqrt(s), atol=1e-6)

    def test_truncation_keeps_top_values(self, rng):
        m = rng.randn(30, 8)
        full, s = svd_discount(m, 8)
        cut, s_cut = svd_discount(m, 3)
        assert np.allclose(cut, full[:, :3])
        assert np.array_equal(s, s_cut)

    def test_out_dims_validation(self, rng):
        m = rng.randn(5, 3)
        with pytest.raises(ValueError):
            svd_discount(m, 0)
        with pytest.raises(ValueError):
            svd_discount(m, 4)

    def test_deterministic_signs(self, rng):
        m = rng.randn(12, 5)
        f1, _ = svd_discount(m, 5)
        f2, _ = svd_discount(m.copy(), 5)
        assert np.array_equal(f1, f2)


class TestFuse:
    def test_identical_vocab_concatenation(self, rng):
        a = unit_rows(["x", "y", "z"], 3, rng)
        b = unit_rows(["x", "y", "z"], 4, rng)
        result = fuse(a, b, k=2, discount=False)
        assert result.matrix.dims == 7
        assert result.matrix.labels == ["x", "y", "z"]
        assert np.array_equal(result.matrix.data[:, :3], a.data)
        assert np.array_equal(result.matrix.data[:, 3:], b.data)
        assert len(result.singular_values) == 0

    def test_concat_preserves_cosines_of_self_fusion(self, rng):
        a = unit_rows([f"w{i}" for i in range(10)], 5, rng)
        result = fuse(a, a, k=2, discount=False)
        d = result.matrix.data.astype(np.float64)
        raw = a.data.astype(np.float64)
        for i, j in [(0, 1), (2, 9), (4, 5)]:
            cos_raw = raw[i] @ raw[j] / np.sqrt((raw[i] @ raw[i]) * (raw[j] @ raw[j]))
            cos_cat = d[i] @ d[j] / np.sqrt((d[i] @ d[i]) * (d[j] @ d[j]))
            assert abs(cos_raw - cos_cat) < 1e-12

    def test_self_fusion_discount_matches_gram_oracle(self, rng):
        a = unit_rows([f"w{i}" for i in range(30)], 5, rng)
        result = fuse(a, a, k=3, out_dims=10, discount=True)
        concat = np.hstack([a.data, a.data]).astype(np.float64)
        u, s, _vt = svd_factors(concat)
        gram = result.matrix.data.astype(np.float64) @ \
            result.matrix.data.astype(np.float64).T
        assert np.abs(gram - u @ np.diag(s) @ u.T).max() < 1e-6
        # duplicated features halve the spectrum's support and the top
        # direction is discounted from sigma to sqrt(sigma)
        assert (s > 1e-9).sum() == 5
        top_feature_norm = np.sqrt((result.matrix.data[:, 0].astype(np.float64) ** 2).sum())
        assert abs(top_feature_norm - np.sqrt(s[0])) < 1e-6

    def test_union_ordering_and_inference(self, rng):
        a = unit_rows(["s1", "xa", "s2"], 3, rng)
        b = unit_rows(["s2", "s1", "xb"], 4, rng)
        result = fuse(a, b, k=2, discount=False)
        assert result.matrix.labels == ["s1", "s2", "xa", "xb"]
        row_xa = result.matrix.data[2]
        assert np.array_equal(row_xa[:3], a.data[1])
        assert np.isfinite(row_xa).all() and np.abs(row_xa[3:]).sum() > 0

    def test_requested_widths(self, rng):
        a = unit_rows([f"w{i}" for i in range(700)], 300, rng)
        b = unit_rows([f"w{i}" for i in range(700)], 300, rng)
        for width in (600, 450, 300):
            result = fuse(a, b, k=5, out_dims=width, discount=True)
            assert result.matrix.dims == width

    def test_disjoint_vocabularies_rejected(self, rng):
        a = unit_rows(["only_a"], 3, rng)
        b = unit_rows(["only_b"], 3, rng)
        with pytest.raises(EmptyOverlap):
            fuse(a, b, k=1)
