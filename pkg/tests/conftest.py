"""Shared fixtures and builders for the dyadic-weights-lab test suite."""

import numpy as np
import pytest
from hypothesis import strategies as st

from src.dyadic import DyadicIndex, HaarSeries, WeightTree


def make_tree(depth=3, splits=None, overrides=None, seed=None, low=0.1, high=0.9) -> WeightTree:
    """Build a WeightTree: uniform by default, random in (low, high) with a seed,
    with `overrides` mapping (level, pos) to a split."""
    size = (1 << depth) - 1
    if splits is None:
        if seed is None:
            splits = np.full(size, 0.5)
        else:
            splits = np.random.default_rng(seed).uniform(low, high, size)
    splits = np.array(splits, dtype=float)
    for (level, pos), value in (overrides or {}).items():
        splits[DyadicIndex(level, pos).flat] = value
    return WeightTree(depth, splits)


def make_series(depth=3, mapping=None) -> HaarSeries:
    """Build a HaarSeries from {(level, pos): b}."""
    return HaarSeries.from_mapping(
        depth, {DyadicIndex(level, pos): b for (level, pos), b in (mapping or {}).items()}
    )


def spine_tree(splits) -> WeightTree:
    """Tree whose left-spine splits are given and every other split is 1/2."""
    depth = len(splits)
    values = np.full((1 << depth) - 1, 0.5)
    for k, s in enumerate(splits):
        values[(1 << k) - 1] = s
    return WeightTree(depth, values)


@st.composite
def trees(draw, min_depth=1, max_depth=6, low=0.1, high=0.9):
    depth = draw(st.integers(min_value=min_depth, max_value=max_depth))
    splits = draw(
        st.lists(
            st.floats(min_value=low, max_value=high),
            min_size=(1 << depth) - 1,
            max_size=(1 << depth) - 1,
        )
    )
    return WeightTree(depth, splits)


@st.composite
def nested_pairs(draw, depth):
    """(inner, outer) dyadic indices with inner inside outer, levels <= depth."""
    inner_level = draw(st.integers(min_value=0, max_value=depth))
    inner = DyadicIndex(inner_level, draw(st.integers(min_value=0, max_value=(1 << inner_level) - 1)))
    outer_level = draw(st.integers(min_value=0, max_value=inner_level))
    outer = DyadicIndex(outer_level, inner.position >> (inner_level - outer_level))
    return inner, outer


positive_tuples = st.lists(st.floats(min_value=0.05, max_value=20.0), min_size=1, max_size=8)


@pytest.fixture
def root():
    return DyadicIndex.root()


@pytest.fixture
def random_tree():
    return make_tree(depth=8, seed=7)
