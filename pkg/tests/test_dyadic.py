"""Tests for dyadic intervals, Haar functions and weight trees."""

import math

import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from src.dyadic import (
    DyadicIndex,
    HaarSeries,
    WeightTree,
    chain_product,
    children,
    dyadic_at,
    evaluate,
    haar_coeffs_from_tree,
    haar_leaf_vector,
    haar_value,
    mean,
    mean_power,
    power_weight,
    tree_from_haar_coeffs,
)
from src.errors import (
    InvariantViolation,
    NotNested,
    OutOfRange,
    ParaexponentialBoundError,
    SizeLimit,
    SplitOutOfRange,
)
from tests.conftest import make_series, make_tree, nested_pairs, spine_tree, trees


class TestDyadicIndex:
    def test_children(self):
        assert children(DyadicIndex(0, 0)) == (DyadicIndex(1, 0), DyadicIndex(1, 1))
        assert children(DyadicIndex(1, 1)) == (DyadicIndex(2, 2), DyadicIndex(2, 3))
        assert children(DyadicIndex(3, 5)) == (DyadicIndex(4, 10), DyadicIndex(4, 11))

    def test_children_respect_depth_bound(self):
        with pytest.raises(OutOfRange):
            children(DyadicIndex(3, 0), max_level=3)

    def test_parent(self):
        assert DyadicIndex(4, 11).parent() == DyadicIndex(3, 5)
        with pytest.raises(OutOfRange):
            DyadicIndex.root().parent()

    def test_position_must_fit_level(self):
        with pytest.raises(OutOfRange):
            DyadicIndex(2, 4)
        with pytest.raises(OutOfRange):
            DyadicIndex(-1, 0)

    def test_flat_round_trip(self):
        for flat in range(63):
            assert DyadicIndex.from_flat(flat).flat == flat
        assert DyadicIndex(3, 5).flat == 12

    def test_endpoints_and_length(self):
        index = DyadicIndex(2, 1)
        assert index.length == 0.25
        assert (index.left, index.right) == (0.25, 0.5)

    def test_half_open_containment(self):
        index = DyadicIndex(1, 0)
        assert index.contains(0.5)
        assert not index.contains(0.0)
        assert not DyadicIndex(1, 1).contains(0.5)

    def test_contains_index(self):
        assert DyadicIndex(1, 1).contains_index(DyadicIndex(3, 5))
        assert not DyadicIndex(1, 0).contains_index(DyadicIndex(3, 5))
        assert not DyadicIndex(3, 5).contains_index(DyadicIndex(1, 1))

    def test_ancestors_from_root(self):
        assert DyadicIndex(3, 5).ancestors() == [DyadicIndex(0, 0), DyadicIndex(1, 1), DyadicIndex(2, 2)]

    def test_dyadic_at(self):
        assert dyadic_at(0.5, 1) == DyadicIndex(1, 0)
        assert dyadic_at(1.0, 3) == DyadicIndex(3, 7)
        with pytest.raises(OutOfRange):
            dyadic_at(0.0, 2)


class TestHaar:
    def test_root_values(self):
        assert haar_value(DyadicIndex(0, 0), 0.75) == 1.0
        assert haar_value(DyadicIndex(0, 0), 0.25) == -1.0

    def test_scaled_on_small_interval(self):
        assert haar_value(DyadicIndex(1, 0), 0.4) == pytest.approx(math.sqrt(2))
        assert haar_value(DyadicIndex(1, 0), 0.2) == pytest.approx(-math.sqrt(2))

    def test_zero_outside(self):
        assert haar_value(DyadicIndex(1, 0), 0.75) == 0.0

    def test_midpoint_belongs_to_left_half(self):
        assert haar_value(DyadicIndex(0, 0), 0.5) == -1.0

    def test_orthonormal_at_leaf_resolution(self):
        depth = 5
        vectors = np.array(
            [haar_leaf_vector(DyadicIndex.from_flat(f), depth) for f in range((1 << depth) - 1)]
        )
        gram = vectors @ vectors.T / (1 << depth)
        np.testing.assert_allclose(gram, np.eye(gram.shape[0]), atol=1e-12)

    def test_leaf_vector_matches_pointwise_values(self):
        index = DyadicIndex(2, 1)
        vector = haar_leaf_vector(index, 4)
        for leaf in range(16):
            x = (leaf + 0.5) / 16
            assert vector[leaf] == pytest.approx(haar_value(index, x))


class TestWeightTree:
    def test_rejects_split_out_of_range_naming_the_node(self):
        splits = np.full(7, 0.5)
        splits[DyadicIndex(2, 3).flat] = 1.0
        with pytest.raises(SplitOutOfRange, match="level=2, pos=3") as exc:
            WeightTree(3, splits)
        assert exc.value.index == DyadicIndex(2, 3)

    def test_rejects_nan(self):
        with pytest.raises(SplitOutOfRange):
            WeightTree(1, [float("nan")])

    def test_split_out_of_range_is_an_invariant_violation(self):
        assert issubclass(SplitOutOfRange, InvariantViolation)
        assert issubclass(SplitOutOfRange, ValueError)

    def test_rejects_wrong_length(self):
        with pytest.raises(InvariantViolation, match="needs 7 splits"):
            WeightTree(3, [0.5] * 6)

    def test_depth_cap(self):
        with pytest.raises(SizeLimit):
            WeightTree(40, [0.5])

    def test_splits_are_read_only(self):
        tree = make_tree(2)
        with pytest.raises(ValueError):
            tree.splits[0] = 0.3

    def test_mass_conservation(self, random_tree):
        levels = random_tree.log_mean_levels
        for parent, child in zip(levels, levels[1:]):
            masses = np.exp(child)
            np.testing.assert_allclose(0.5 * (masses[0::2] + masses[1::2]), np.exp(parent), rtol=1e-12)

    def test_leaf_masses_sum_to_one(self, random_tree):
        leaves = random_tree.leaf_values()
        assert leaves.sum() / leaves.size == pytest.approx(1.0, rel=1e-12)

    def test_truncated_keeps_coarse_means(self, random_tree):
        short = random_tree.truncated(4)
        for position in range(16):
            index = DyadicIndex(4, position)
            assert mean(short, index) == pytest.approx(mean(random_tree, index), rel=1e-12)

    def test_reflected_mirrors_leaves(self, random_tree):
        np.testing.assert_allclose(
            random_tree.reflected().leaf_values(), random_tree.leaf_values()[::-1], rtol=1e-12
        )


class TestMean:
    def test_uniform(self):
        tree = WeightTree.uniform(4)
        assert mean(tree, DyadicIndex(3, 5)) == 1.0

    def test_spine(self):
        tree = spine_tree([0.6, 0.7])
        assert mean(tree, DyadicIndex(1, 0)) == pytest.approx(1.2)
        assert mean(tree, DyadicIndex(2, 0)) == pytest.approx(1.68)

    def test_power_law_spine(self):
        tree = spine_tree([0.25] * 6)
        for i in range(7):
            assert mean(tree, DyadicIndex(i, 0)) == pytest.approx(2.0 ** -i)

    def test_deeper_than_tree(self):
        with pytest.raises(OutOfRange):
            mean(make_tree(2), DyadicIndex(3, 0))

    @settings(max_examples=60, deadline=None)
    @seed(20240611)
    @given(data=st.data())
    def test_chain_product_matches_mean_ratio(self, data):
        tree = data.draw(trees(max_depth=6))
        inner, outer = data.draw(nested_pairs(tree.depth))
        expected = mean(tree, inner) / mean(tree, outer)
        assert chain_product(tree, inner, outer) == pytest.approx(expected, rel=1e-12)

    def test_chain_product_needs_nesting(self):
        with pytest.raises(NotNested):
            chain_product(make_tree(3), DyadicIndex(2, 0), DyadicIndex(1, 1))


class TestHaarCoefficients:
    def test_uniform_has_zero_coefficients(self):
        assert not haar_coeffs_from_tree(WeightTree.uniform(4)).coeffs.any()

    def test_root_split(self):
        series = haar_coeffs_from_tree(make_tree(1, [0.6]))
        assert series.coefficient(DyadicIndex.root()) == pytest.approx(-0.2)

    def test_level_one_split(self):
        tree = make_tree(2, overrides={(1, 0): 0.25})
        series = haar_coeffs_from_tree(tree)
        assert series.coefficient(DyadicIndex(1, 0)) == pytest.approx(0.5 / math.sqrt(2))

    def test_partial_product_matches_splits(self):
        tree = make_tree(1, [0.6])
        b = haar_coeffs_from_tree(tree).coefficient(DyadicIndex.root())
        assert 1 + b * haar_value(DyadicIndex.root(), 0.25) == pytest.approx(1.2)
        assert 1 + b * haar_value(DyadicIndex.root(), 0.75) == pytest.approx(0.8)

    def test_inverse_of_single_coefficient(self):
        tree = tree_from_haar_coeffs(make_series(3, {(0, 0): -0.2}))
        assert tree.split(DyadicIndex.root()) == pytest.approx(0.6)
        assert np.all(tree.splits[1:] == 0.5)

    def test_zero_series_gives_uniform_tree(self):
        assert np.all(tree_from_haar_coeffs(HaarSeries.zeros(4)).splits == 0.5)

    @settings(max_examples=50, deadline=None)
    @seed(7)
    @given(tree=trees(max_depth=7))
    def test_round_trip(self, tree):
        back = tree_from_haar_coeffs(haar_coeffs_from_tree(tree))
        np.testing.assert_allclose(back.splits, tree.splits, rtol=1e-12)

    def test_out_of_range_coefficient(self):
        with pytest.raises(SplitOutOfRange):
            tree_from_haar_coeffs(make_series(1, {(0, 0): 1.5}))


class TestHaarSeries:
    def test_from_mapping_and_items(self):
        series = make_series(3, {(2, 1): 0.1, (0, 0): -0.3})
        assert list(series.items()) == [(DyadicIndex(0, 0), -0.3), (DyadicIndex(2, 1), 0.1)]

    def test_coefficient_below_depth_is_zero(self):
        assert make_series(2, {(0, 0): 0.1}).coefficient(DyadicIndex(5, 3)) == 0.0

    def test_rejects_out_of_depth_index(self):
        with pytest.raises(OutOfRange):
            make_series(2, {(2, 0): 0.1})

    def test_truncated_pads_and_cuts(self):
        series = make_series(2, {(1, 1): 0.2})
        assert series.truncated(4).coefficient(DyadicIndex(1, 1)) == 0.2
        assert series.truncated(4).coeffs.size == 15
        assert not series.truncated(1).coeffs.any()

    def test_sup_normalized(self):
        series = make_series(3, {(2, 0): 0.25, (0, 0): 0.3})
        assert series.sup_normalized() == pytest.approx(0.5)

    def test_paraexponential_bound(self):
        make_series(2, {(0, 0): 0.5}).check_paraexponential(1e-3)
        with pytest.raises(ParaexponentialBoundError):
            make_series(2, {(1, 0): 0.75}).check_paraexponential(1e-3)


class TestEvaluate:
    def test_uniform(self):
        assert evaluate(WeightTree.uniform(3), 0.3) == 1.0

    def test_two_leaves(self):
        tree = make_tree(1, [0.6])
        assert evaluate(tree, 0.25) == pytest.approx(1.2)
        assert evaluate(tree, 0.75) == pytest.approx(0.8)

    def test_rejects_point_outside(self):
        with pytest.raises(OutOfRange):
            evaluate(make_tree(1, [0.6]), 1.5)


class TestMeanPower:
    def test_uniform(self):
        tree = WeightTree.uniform(5)
        for r in (-3.0, 0.5, 2.0):
            assert mean_power(tree, DyadicIndex(2, 1), r) == 1.0

    def test_two_leaves(self):
        assert mean_power(make_tree(1, [0.6]), DyadicIndex.root(), 2.0) == pytest.approx(1.04)

    def test_first_power_is_mean(self, random_tree):
        for flat in (0, 3, 20, 100):
            index = DyadicIndex.from_flat(flat)
            assert mean_power(random_tree, index, 1.0) == pytest.approx(mean(random_tree, index), rel=1e-14)

    def test_leaf_index(self, random_tree):
        index = DyadicIndex(8, 17)
        assert mean_power(random_tree, index, 3.0) == pytest.approx(mean(random_tree, index) ** 3, rel=1e-12)


class TestPowerWeight:
    def test_identity(self, random_tree):
        assert power_weight(random_tree, 1.0) is random_tree

    def test_zero_gives_uniform(self, random_tree):
        assert np.all(power_weight(random_tree, 0.0).splits == 0.5)

    def test_square_root_split(self):
        tree = power_weight(make_tree(1, [0.6]), 0.5)
        expected = math.sqrt(1.2) / (math.sqrt(1.2) + math.sqrt(0.8))
        assert tree.split(DyadicIndex.root()) == pytest.approx(expected)
        assert tree.split(DyadicIndex.root()) == pytest.approx(0.5505, abs=1e-4)

    def test_leaves_are_renormalized_powers(self, random_tree):
        theta = 0.3
        powered = random_tree.leaf_values() ** theta
        np.testing.assert_allclose(
            power_weight(random_tree, theta).leaf_values(), powered / powered.mean(), rtol=1e-10
        )

    def test_rejects_power_outside_unit_interval(self, random_tree):
        with pytest.raises(OutOfRange):
            power_weight(random_tree, 1.5)
