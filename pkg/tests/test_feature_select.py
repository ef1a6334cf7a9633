"""Correlation redundancy filter and mutual-information ranking."""

from __future__ import annotations

import math

import numpy as np
import pytest

import nfdlm as nf
from nfdlm.feature_select import DEFAULT_MI_BINS
from nfdlm.flow_data import NUMERIC


def numeric_ds(matrix, labels=None, names=None):
    matrix = np.asarray(matrix, dtype=float)
    names = names or [f"c{j}" for j in range(matrix.shape[1])]
    cols = [nf.ColumnDescriptor(n, NUMERIC, j) for j, n in enumerate(names)]
    return nf.FlowDataset(cols, matrix, labels=labels)


class TestPearsonR:
    def test_direct_proportionality(self):
        assert nf.pearson_r([1, 2, 3], [1, 2, 3]) == 1.0

    def test_inverse_link(self):
        assert nf.pearson_r([1, 2, 3], [3, 2, 1]) == -1.0

    def test_hand_computed_point_eight(self):
        assert abs(nf.pearson_r([1, 2, 3, 4], [1, 3, 2, 4]) - 0.8) < 1e-12

    def test_constant_vector_gives_zero(self):
        assert nf.pearson_r([5, 5, 5], [1, 2, 3]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(nf.DataError, match="equal-length"):
            nf.pearson_r([1, 2], [1, 2, 3])

    def test_matches_numpy_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            x = rng.standard_normal(50)
            y = rng.standard_normal(50) + 0.4 * x
            assert abs(nf.pearson_r(x, y) - np.corrcoef(x, y)[0, 1]) < 1e-12

    def test_symmetry_and_bounds(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            x, y = rng.standard_normal((2, 30))
            r = nf.pearson_r(x, y)
            assert r == nf.pearson_r(y, x)
            assert -1.0 <= r <= 1.0

    def test_affine_invariance(self):
        rng = np.random.default_rng(2)
        x, y = rng.standard_normal((2, 40))
        r = nf.pearson_r(x, y)
        assert abs(nf.pearson_r(3.5 * x + 2.0, y) - r) < 1e-12
        assert abs(nf.pearson_r(-3.5 * x + 2.0, y) + r) < 1e-12


class TestCorrelationMatrix:
    def test_identical_columns(self):
        ds = numeric_ds(np.tile(np.arange(5.0)[:, None], (1, 2)))
        m = nf.correlation_matrix(ds)
        assert m[0, 1] == 1.0 and m[1, 0] == 1.0

    def test_exactly_symmetric(self):
        rng = np.random.default_rng(3)
        ds = numeric_ds(rng.standard_normal((100, 12)))
        m = nf.correlation_matrix(ds)
        assert (m == m.T).all()

    def test_diagonal_and_constant_columns(self):
        ds = numeric_ds(np.column_stack([np.arange(4.0), np.full(4, 7.0)]))
        m = nf.correlation_matrix(ds)
        assert m[0, 0] == 1.0
        assert m[1, 1] == 0.0 and m[0, 1] == 0.0

    def test_planted_duplicates_exceed_099(self, surrogate):
        m = nf.correlation_matrix(surrogate)
        for t in range(5):
            assert abs(m[2 * t, 2 * t + 1]) > 0.99

    def test_needs_two_rows(self):
        with pytest.raises(nf.DataError, match="2 rows"):
            nf.correlation_matrix(numeric_ds([[1.0, 2.0]]))

    def test_entries_match_pearson_r_bitwise(self):
        rng = np.random.default_rng(12)
        ds = numeric_ds(rng.standard_normal((60, 5)))
        m = nf.correlation_matrix(ds)
        for i in range(5):
            for j in range(5):
                if i != j:
                    assert m[i, j] == nf.pearson_r(ds.matrix[:, i], ds.matrix[:, j])


def brute_force_filter(ds, threshold):
    """Independent oracle: the drop rule replayed on np.corrcoef values."""
    matrix = ds.matrix
    names = ds.feature_names
    stds = matrix.std(axis=0)
    corr = np.corrcoef(matrix, rowvar=False)
    corr = np.nan_to_num(corr)  # constant columns: treat r as 0
    dropped = set()
    for j in range(len(names)):
        for i in range(j):
            if abs(corr[i, j]) > threshold:
                dropped.add(names[j])
                break
    return [n for n in names if n not in dropped]


class TestCorrelationFilter:
    def test_drops_exactly_the_planted_copies(self, surrogate):
        selection = nf.correlation_filter(surrogate, 0.65)
        assert {d.name for d in selection.dropped} == {"f01", "f03", "f05", "f07", "f09"}
        for d in selection.dropped:
            assert d.partner == f"f{int(d.name[1:]) - 1:02d}"
        assert selection.kept == brute_force_filter(surrogate, 0.65)

    def test_vacuous_threshold_drops_nothing(self, surrogate):
        selection = nf.correlation_filter(surrogate, 0.999999)
        assert selection.dropped == []
        assert selection.kept == surrogate.feature_names

    def test_idempotent(self, surrogate):
        first = nf.correlation_filter(surrogate, 0.65)
        again = nf.correlation_filter(nf.select_features(surrogate, first.kept), 0.65)
        assert again.kept == first.kept
        assert again.dropped == []

    def test_survivors_within_threshold(self, surrogate):
        selection = nf.correlation_filter(surrogate, 0.65)
        kept = nf.select_features(surrogate, selection.kept)
        m = np.abs(nf.correlation_matrix(kept))
        np.fill_diagonal(m, 0.0)
        assert m.max() <= 0.65

    def test_chain_uses_earliest_partner(self):
        rng = np.random.default_rng(4)
        base = rng.standard_normal(400)
        ds = numeric_ds(
            np.column_stack([base, base + rng.normal(0, 0.01, 400), rng.standard_normal(400)])
        )
        selection = nf.correlation_filter(ds, 0.65)
        assert selection.kept == ["c0", "c2"]
        assert selection.dropped[0].partner == "c0"
        assert selection.scores[0] > 0.99  # c0 displaced c1
        assert selection.scores[1] == 0.0

    def test_bad_threshold(self, surrogate):
        with pytest.raises(nf.DataError, match="threshold"):
            nf.correlation_filter(surrogate, 1.5)


class TestMutualInformation:
    def test_constant_feature_gives_zero(self):
        labels = np.array([0, 1] * 10)
        assert nf.mutual_information(np.full(20, 3.0), labels) == 0.0

    def test_label_copy_is_ln2(self):
        labels = np.array([0, 1] * 500)
        mi = nf.mutual_information(labels.astype(float), labels)
        assert abs(mi - math.log(2.0)) < 1e-12

    def test_non_negative_and_small_under_permutation(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal(10_000)
        labels = rng.permutation(np.repeat([0, 1], 5_000))
        mi = nf.mutual_information(x, labels)
        assert 0.0 <= mi < 0.01

    def test_symmetric_for_binary_feature(self):
        rng = np.random.default_rng(6)
        x = rng.integers(0, 2, 400)
        y = (rng.random(400) < 0.3 + 0.4 * x).astype(int)
        assert nf.mutual_information(x.astype(float), y) == nf.mutual_information(
            y.astype(float), x
        )

    def test_invariant_under_strictly_increasing_transform(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal(3_000)
        labels = (x + rng.standard_normal(3_000) > 0).astype(int)
        base = nf.mutual_information(x, labels)
        assert nf.mutual_information(np.exp(x), labels) == base
        assert nf.mutual_information(x ** 3, labels) == base

    def test_length_mismatch(self):
        with pytest.raises(nf.DataError, match="equal-length"):
            nf.mutual_information(np.zeros(3), np.zeros(4, dtype=int))

    def test_bins_cap_respected(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal(1_000)
        labels = rng.integers(0, 2, 1_000)
        for bins in (2, 8, DEFAULT_MI_BINS):
            assert nf.mutual_information(x, labels, bins=bins) >= 0.0


class TestMiRankSelect:
    def noisy_ds(self, seed=9, n=2_000, n_features=6):
        rng = np.random.default_rng(seed)
        labels = rng.integers(0, 2, n)
        matrix = rng.standard_normal((n, n_features))
        matrix[:, 0] = labels  # perfect label copy
        return numeric_ds(matrix, labels=labels)

    def test_keeps_exactly_k(self, surrogate):
        selection = nf.mi_rank_select(surrogate, 11)
        assert len(selection.kept) == 11
        assert len(selection.dropped) == 19

    def test_label_copy_ranks_first(self):
        selection = nf.mi_rank_select(self.noisy_ds(), 3)
        assert selection.kept[0] == "c0"
        assert selection.scores[0] == max(selection.scores)

    def test_scores_descend(self, surrogate):
        selection = nf.mi_rank_select(surrogate, 30)
        assert selection.scores == sorted(selection.scores, reverse=True)

    def test_k_too_large(self, surrogate):
        with pytest.raises(nf.DataError, match="k must be"):
            nf.mi_rank_select(surrogate, 31)

    def test_unlabeled_errors(self):
        ds = numeric_ds(np.zeros((5, 2)) + np.arange(5)[:, None])
        with pytest.raises(nf.DataError, match="labels"):
            nf.mi_rank_select(ds, 1)

    def test_row_order_does_not_matter(self):
        ds = self.noisy_ds(seed=10)
        rng = np.random.default_rng(11)
        perm = rng.permutation(ds.row_count)
        from nfdlm.flow_data import take_rows

        shuffled = take_rows(ds, perm)
        a = nf.mi_rank_select(ds, 4)
        b = nf.mi_rank_select(shuffled, 4)
        assert a.kept == b.kept
        assert a.scores == b.scores


class TestSelectionReport:
    def test_serialization_round_trip(self, surrogate):
        for selection in (
            nf.correlation_filter(surrogate, 0.65),
            nf.mi_rank_select(surrogate, 11),
            nf.identity_selection(surrogate),
        ):
            back = nf.SelectedFeatures.from_dict(selection.to_dict())
            assert back == selection

    def test_report_carries_partners(self, surrogate):
        doc = nf.correlation_filter(surrogate, 0.65).to_dict()
        assert doc["method"] == "correlation"
        assert doc["parameter"] == 0.65
        assert all(entry["partner"] is not None for entry in doc["dropped"])
