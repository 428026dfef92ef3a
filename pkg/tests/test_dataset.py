from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hitpredict.dataset import (
    StandardizationParams,
    class_distribution,
    deduplicate,
    label_hit,
    round_half_up,
    split,
    split_two_way,
    standardize_apply,
    standardize_fit,
)
from hitpredict.errors import ValidationError

from .conftest import make_record


class TestLabelHit:
    def test_popularity_above_threshold_is_hit(self):
        assert label_hit(82, 47) == 1

    def test_threshold_itself_is_not_a_hit(self):
        assert label_hit(47, 47) == 0

    def test_minimum_popularity_is_not_a_hit(self):
        assert label_hit(0, 47) == 0

    def test_out_of_range_popularity_rejected(self):
        with pytest.raises(ValidationError, match="101"):
            label_hit(101)
        with pytest.raises(ValidationError, match="-1"):
            label_hit(-1)

    @given(st.integers(0, 100), st.integers(0, 100), st.integers(0, 100))
    def test_monotone_in_popularity(self, a, b, threshold):
        lo, hi = sorted((a, b))
        assert label_hit(lo, threshold) <= label_hit(hi, threshold)


class TestDeduplicate:
    def test_same_track_id_keeps_first(self):
        a = make_record("x", popularity=10)
        b = make_record("x", popularity=90)
        assert deduplicate([a, b]) == [a]

    def test_title_artist_clash_keeps_most_popular(self):
        # oracle: group by normalized key, keep max popularity
        low = make_record("a", title="Hit Song", artist="Artist", popularity=30)
        high = make_record("b", title="  hit  SONG ", artist="ARTIST", popularity=55)
        assert deduplicate([low, high]) == [high]

    def test_no_duplicates_is_identity(self):
        records = [make_record(f"t{i}", title=f"Song {i}") for i in range(50)]
        assert deduplicate(records) == records

    def test_popularity_tie_keeps_earliest(self):
        first = make_record("a", title="Same", popularity=40)
        second = make_record("b", title="Same", popularity=40)
        assert deduplicate([first, second]) == [first]

    def test_survivor_order_is_stable(self):
        r1 = make_record("1", title="One")
        r2 = make_record("2", title="Two", popularity=10)
        r3 = make_record("3", title="Two", popularity=20)
        r4 = make_record("4", title="Four")
        assert deduplicate([r1, r2, r3, r4]) == [r1, r3, r4]

    def test_idempotent(self):
        records = [
            make_record("a", title="X", popularity=10),
            make_record("b", title="X", popularity=20),
            make_record("c", title="Y"),
        ]
        once = deduplicate(records)
        assert deduplicate(once) == once


class TestSplit:
    def test_dataset_scale_sizes(self):
        # 0.20 * 2063 -> 413 (half-up), then 0.25 * 1650 -> 413, train 1237;
        # 413 matches the validation matrix total 369 + 2 + 41 + 1.
        parts = split(2063, seed=0)
        assert parts.sizes() == (1237, 413, 413)

    def test_deterministic_for_same_seed(self):
        assert split(10, 7) == split(10, 7)

    def test_seed_changes_membership(self):
        assert split(100, 1) != split(100, 2)

    def test_hundred_rows(self):
        assert split(100, 3).sizes() == (60, 20, 20)

    def test_too_few_rows(self):
        with pytest.raises(ValidationError):
            split(4, 0)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(5, 5000), st.integers(0, 2**32))
    def test_partition_properties(self, n, seed):
        parts = split(n, seed)
        train, val, test = set(parts.train), set(parts.validation), set(parts.test)
        assert train | val | test == set(range(n))
        assert len(parts.train) + len(parts.validation) + len(parts.test) == n
        assert not (train & val or train & test or val & test)
        n_test = round_half_up(0.20 * n)
        n_val = round_half_up(0.25 * (n - n_test))
        assert (len(parts.train), len(parts.validation), len(parts.test)) == (
            n - n_test - n_val,
            n_val,
            n_test,
        )
        assert split(n, seed) == parts

    def test_stratified_keeps_class_mix(self):
        labels = np.array([1 if i % 10 == 0 else 0 for i in range(500)])
        parts = split(500, 9, stratify_labels=labels)
        for part in (parts.train, parts.validation, parts.test):
            rate = labels[np.array(part)].mean()
            assert abs(rate - 0.1) < 0.02


class TestSplitTwoWay:
    def test_nn_scale_test_size(self):
        # 619 matches the two-way matrix total 542 + 6 + 65 + 6.
        assert len(split_two_way(2063, 0, 0.30).test) == 619

    def test_half_split(self):
        parts = split_two_way(10, 1, 0.5)
        assert (len(parts.train), len(parts.test)) == (5, 5)
        assert parts.validation == ()

    def test_same_rounding_rule_as_three_way(self):
        assert len(split_two_way(2063, 0, 0.20).test) == 413

    def test_fraction_bounds(self):
        for bad in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValidationError):
                split_two_way(10, 0, bad)

    def test_deterministic(self):
        assert split_two_way(50, 3, 0.3) == split_two_way(50, 3, 0.3)


class TestStandardize:
    def test_two_point_column(self):
        params = standardize_fit(np.array([[1.0], [3.0]]))
        assert params.mean == (2.0,)
        assert params.std == (1.0,)

    def test_constant_column_std_is_one(self):
        params = standardize_fit(np.array([[5.0], [5.0], [5.0]]))
        assert params.std == (1.0,)
        assert standardize_apply(params, np.array([[5.0]]))[0, 0] == 0.0

    def test_roundtrip_means_and_sds(self, rng_np):
        X = rng_np.normal(size=(100, 13)) * rng_np.uniform(0.5, 4.0, size=13)
        params = standardize_fit(X)
        Z = standardize_apply(params, X)
        assert np.abs(Z.mean(axis=0)).max() < 1e-9
        assert np.abs(Z.std(axis=0) - 1.0).max() < 1e-9

    def test_mean_maps_to_zero(self):
        params = standardize_fit(np.array([[1.0, 10.0], [3.0, 20.0]]))
        row = np.array([[2.0, 15.0]])
        assert np.allclose(standardize_apply(params, row), 0.0)

    def test_simple_affine_value(self):
        params = StandardizationParams(mean=(2.0,), std=(1.0,))
        assert standardize_apply(params, np.array([[3.0]]))[0, 0] == 1.0

    def test_apply_preserves_order_within_columns(self, rng_np):
        X = rng_np.normal(size=(30, 4))
        Z = standardize_apply(standardize_fit(X), X)
        for j in range(4):
            assert np.array_equal(np.argsort(X[:, j]), np.argsort(Z[:, j]))

    def test_needs_two_rows(self):
        with pytest.raises(ValidationError):
            standardize_fit(np.array([[1.0, 2.0]]))

    def test_column_count_mismatch(self):
        params = standardize_fit(np.array([[1.0, 2.0], [3.0, 4.0]]))
        with pytest.raises(ValidationError):
            standardize_apply(params, np.array([[1.0, 2.0, 3.0]]))

    def test_nonpositive_std_rejected(self):
        with pytest.raises(ValidationError):
            StandardizationParams(mean=(0.0,), std=(0.0,))


class TestClassDistribution:
    def test_empty(self):
        assert class_distribution([]) == (0, 0)

    def test_all_ones(self):
        assert class_distribution([1, 1, 1, 1, 1]) == (0, 5)

    def test_paper_scale_counts(self):
        labels = np.concatenate([np.zeros(1826, dtype=int), np.ones(237, dtype=int)])
        assert class_distribution(labels) == (1826, 237)

    def test_rejects_non_binary(self):
        with pytest.raises(ValidationError):
            class_distribution([0, 2])


class TestTrackRecordValidation:
    def test_valid_record_roundtrips_features(self):
        record = make_record()
        assert len(record.feature_vector()) == 13

    def test_popularity_bounds(self):
        with pytest.raises(ValidationError, match="popularity"):
            make_record(popularity=101)

    def test_unit_feature_bounds(self):
        with pytest.raises(ValidationError, match="danceability"):
            make_record(danceability=1.2)

    def test_key_and_mode(self):
        with pytest.raises(ValidationError, match="key"):
            make_record(key=12)
        with pytest.raises(ValidationError, match="mode"):
            make_record(mode=2)

    def test_unknown_year_allowed(self):
        assert make_record(release_year=None).release_year is None
