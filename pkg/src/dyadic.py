"""Dyadic intervals, Haar functions and finite-depth weight trees.

A weight is stored as a depth-N tree of mass-split fractions: the split at an
internal node I is the fraction of I's mass carried by its left half. Node
arrays are kept in level order, so node (k, j) lives at flat index 2^k - 1 + j.
Products along chains and over leaves are accumulated in log-space.
"""

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterator, Mapping

import numpy as np
from scipy.special import logsumexp

from src.config import EPS_FLOOR, MAX_DEPTH, PARAEXP_EPS
from src.errors import (
    InvariantViolation,
    NotNested,
    OutOfRange,
    ParaexponentialBoundError,
    SizeLimit,
    SplitOutOfRange,
)


@dataclass(frozen=True, order=True)
class DyadicIndex:
    """The dyadic interval (j 2^-k, (j+1) 2^-k] as (level k, position j)."""

    level: int
    position: int

    def __post_init__(self) -> None:
        if self.level < 0:
            raise OutOfRange(f"Dyadic level must be non-negative, got {self.level}")
        if not 0 <= self.position < (1 << self.level):
            raise OutOfRange(
                f"Position {self.position} outside [0, {(1 << self.level) - 1}] "
                f"at level {self.level}"
            )

    @classmethod
    def root(cls) -> "DyadicIndex":
        return cls(0, 0)

    @classmethod
    def from_flat(cls, flat: int) -> "DyadicIndex":
        level = (flat + 1).bit_length() - 1
        return cls(level, flat - ((1 << level) - 1))

    @property
    def flat(self) -> int:
        return (1 << self.level) - 1 + self.position

    @property
    def length(self) -> float:
        return 2.0 ** -self.level

    @property
    def left(self) -> float:
        return self.position * self.length

    @property
    def right(self) -> float:
        return (self.position + 1) * self.length

    def children(self) -> tuple["DyadicIndex", "DyadicIndex"]:
        return (
            DyadicIndex(self.level + 1, 2 * self.position),
            DyadicIndex(self.level + 1, 2 * self.position + 1),
        )

    def parent(self) -> "DyadicIndex":
        if self.level == 0:
            raise OutOfRange("The root interval has no parent")
        return DyadicIndex(self.level - 1, self.position // 2)

    def ancestors(self) -> list["DyadicIndex"]:
        """Strict ancestors, from the root down."""
        return [
            DyadicIndex(k, self.position >> (self.level - k))
            for k in range(self.level)
        ]

    def contains(self, x: float) -> bool:
        # scaling by a power of two is exact, so the half-open test is exact too
        scaled = x * (1 << self.level)
        return self.position < scaled <= self.position + 1

    def contains_index(self, other: "DyadicIndex") -> bool:
        """True when `other` is a (not necessarily strict) subinterval."""
        if other.level < self.level:
            return False
        return other.position >> (other.level - self.level) == self.position


def children(index: DyadicIndex, max_level: int | None = None) -> tuple[DyadicIndex, DyadicIndex]:
    """Left and right halves of `index`."""
    if max_level is not None and index.level >= max_level:
        raise OutOfRange(
            f"Node at level {index.level} has no children within depth {max_level}"
        )
    return index.children()


def dyadic_at(x: float, level: int) -> DyadicIndex:
    """The level-`level` dyadic interval containing x in (0, 1]."""
    if not 0.0 < x <= 1.0:
        raise OutOfRange(f"Point must lie in (0, 1], got {x}")
    return DyadicIndex(level, math.ceil(x * (1 << level)) - 1)


def haar_value(index: DyadicIndex, x: float) -> float:
    """h_I(x): -|I|^{-1/2} on the left half, +|I|^{-1/2} on the right half, 0 elsewhere."""
    if not index.contains(x):
        return 0.0
    amplitude = 2.0 ** (index.level / 2)
    in_left = x * (1 << (index.level + 1)) <= 2 * index.position + 1
    return -amplitude if in_left else amplitude


def haar_leaf_vector(index: DyadicIndex, depth: int) -> np.ndarray:
    """h_I sampled on the 2^depth leaves."""
    if index.level >= depth:
        raise OutOfRange(f"Haar function at level {index.level} is not resolved at depth {depth}")
    values = np.zeros(1 << depth)
    width = 1 << (depth - index.level)
    start = index.position * width
    amplitude = 2.0 ** (index.level / 2)
    values[start:start + width // 2] = -amplitude
    values[start + width // 2:start + width] = amplitude
    return values


@lru_cache(maxsize=None)
def _flat_levels(depth: int) -> np.ndarray:
    """Level of every internal node, in level order."""
    levels = np.repeat(np.arange(depth), 1 << np.arange(depth))
    levels.setflags(write=False)
    return levels


def _check_depth(depth: int) -> None:
    if depth < 1:
        raise OutOfRange(f"Depth must be a positive integer, got {depth}")
    if depth > MAX_DEPTH:
        raise SizeLimit(f"Depth {depth} exceeds the configured cap of {MAX_DEPTH}")


def _log_pair_mean(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """log((e^left + e^right) / 2), exact when left == right."""
    top = np.maximum(left, right)
    return top + np.log(0.5 + 0.5 * np.exp(-np.abs(left - right)))


@dataclass(frozen=True, eq=False)
class WeightTree:
    """A depth-N dyadic weight of mean one, constant on each level-N leaf."""

    depth: int
    splits: np.ndarray
    eps_floor: float = EPS_FLOOR

    def __post_init__(self) -> None:
        _check_depth(self.depth)
        splits = np.array(self.splits, dtype=float)
        expected = (1 << self.depth) - 1
        if splits.shape != (expected,):
            raise InvariantViolation(
                f"A depth-{self.depth} tree needs {expected} splits, got shape {splits.shape}"
            )
        bad = ~((splits > self.eps_floor) & (splits < 1.0 - self.eps_floor))
        if bad.any():
            flat = int(np.argmax(bad))
            raise SplitOutOfRange(DyadicIndex.from_flat(flat), float(splits[flat]), self.eps_floor)
        splits.setflags(write=False)
        object.__setattr__(self, "splits", splits)

    @classmethod
    def uniform(cls, depth: int, eps_floor: float = EPS_FLOOR) -> "WeightTree":
        return cls(depth, np.full((1 << depth) - 1, 0.5), eps_floor)

    def split(self, index: DyadicIndex) -> float:
        if index.level >= self.depth:
            raise OutOfRange(f"No split at level {index.level} in a depth-{self.depth} tree")
        return float(self.splits[index.flat])

    def level_splits(self, level: int) -> np.ndarray:
        return self.splits[(1 << level) - 1:(1 << (level + 1)) - 1]

    def truncated(self, depth: int) -> "WeightTree":
        """The same weight averaged down to `depth` levels."""
        if depth > self.depth:
            raise OutOfRange(f"Cannot truncate a depth-{self.depth} tree to depth {depth}")
        return WeightTree(depth, self.splits[:(1 << depth) - 1], self.eps_floor)

    def reflected(self) -> "WeightTree":
        """The weight composed with x -> 1 - x."""
        mirrored = np.concatenate(
            [self.level_splits(k)[::-1] for k in range(self.depth)]
        )
        return WeightTree(self.depth, 1.0 - mirrored, self.eps_floor)

    @cached_property
    def log_mean_levels(self) -> list[np.ndarray]:
        """log m_I(w) for every node, one array per level 0..depth."""
        levels = [np.zeros(1)]
        for k in range(self.depth):
            s = self.level_splits(k)
            parent = levels[-1]
            child = np.empty(2 * parent.size)
            child[0::2] = parent + np.log(2.0 * s)
            child[1::2] = parent + np.log(2.0 * (1.0 - s))
            levels.append(child)
        return levels

    @property
    def log_leaf_values(self) -> np.ndarray:
        return self.log_mean_levels[-1]

    def leaf_values(self) -> np.ndarray:
        return np.exp(self.log_leaf_values)


def log_power_mean_levels(tree: WeightTree, r: float) -> list[np.ndarray]:
    """log((1/|I|) int_I w^r) for every node, one array per level 0..depth."""
    current = r * tree.log_leaf_values
    levels = [current]
    for _ in range(tree.depth):
        current = _log_pair_mean(current[0::2], current[1::2])
        levels.append(current)
    levels.reverse()
    return levels


def log_geometric_mean_levels(tree: WeightTree) -> list[np.ndarray]:
    """(1/|I|) int_I log w for every node, one array per level 0..depth."""
    current = tree.log_leaf_values
    levels = [current]
    for _ in range(tree.depth):
        current = 0.5 * (current[0::2] + current[1::2])
        levels.append(current)
    levels.reverse()
    return levels


@dataclass(frozen=True, eq=False)
class HaarSeries:
    """Normalized Haar coefficients b_I for levels 0..depth-1, in level order."""

    depth: int
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        _check_depth(self.depth)
        coeffs = np.array(self.coeffs, dtype=float)
        expected = (1 << self.depth) - 1
        if coeffs.shape != (expected,):
            raise InvariantViolation(
                f"A depth-{self.depth} series needs {expected} coefficients, got shape {coeffs.shape}"
            )
        if not np.isfinite(coeffs).all():
            raise InvariantViolation("Haar coefficients must be finite")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zeros(cls, depth: int) -> "HaarSeries":
        return cls(depth, np.zeros((1 << depth) - 1))

    @classmethod
    def from_mapping(cls, depth: int, mapping: Mapping[DyadicIndex, float]) -> "HaarSeries":
        coeffs = np.zeros((1 << depth) - 1)
        for index, value in mapping.items():
            if index.level >= depth:
                raise OutOfRange(
                    f"Coefficient at level {index.level} does not fit a depth-{depth} series"
                )
            coeffs[index.flat] = value
        return cls(depth, coeffs)

    def coefficient(self, index: DyadicIndex) -> float:
        if index.level >= self.depth:
            return 0.0
        return float(self.coeffs[index.flat])

    def items(self) -> Iterator[tuple[DyadicIndex, float]]:
        """Non-zero coefficients in level order."""
        for flat in np.flatnonzero(self.coeffs):
            yield DyadicIndex.from_flat(int(flat)), float(self.coeffs[flat])

    def level_coeffs(self, level: int) -> np.ndarray:
        return self.coeffs[(1 << level) - 1:(1 << (level + 1)) - 1]

    def scaled(self, factor: float) -> "HaarSeries":
        return HaarSeries(self.depth, factor * self.coeffs)

    def truncated(self, depth: int) -> "HaarSeries":
        """Keep levels below `depth`, padding with zeros when deeper than stored."""
        size = (1 << depth) - 1
        if size <= self.coeffs.size:
            return HaarSeries(depth, self.coeffs[:size])
        return HaarSeries(depth, np.concatenate([self.coeffs, np.zeros(size - self.coeffs.size)]))

    def sup_normalized(self) -> float:
        """sup_I |b_I| |I|^{-1/2}, i.e. sup |b_I h_I|."""
        return float(np.max(np.abs(self.coeffs) * 2.0 ** (_flat_levels(self.depth) / 2)))

    def check_paraexponential(self, eps: float = PARAEXP_EPS) -> None:
        bound = self.sup_normalized()
        if bound > 1.0 - eps:
            raise ParaexponentialBoundError(
                f"sup |b_I h_I| = {bound} exceeds 1 - eps = {1.0 - eps}"
            )


def mean(tree: WeightTree, index: DyadicIndex) -> float:
    """m_I(w) as the product of 2s or 2(1 - s) along the chain from the root."""
    if index.level > tree.depth:
        raise OutOfRange(f"Level {index.level} is deeper than the tree ({tree.depth})")
    log_mean = 0.0
    for k in range(index.level):
        node = index.position >> (index.level - k)
        went_right = (index.position >> (index.level - k - 1)) & 1
        s = tree.splits[(1 << k) - 1 + node]
        log_mean += math.log(2.0 * (1.0 - s)) if went_right else math.log(2.0 * s)
    return math.exp(log_mean)


def chain_product(tree: WeightTree, inner: DyadicIndex, outer: DyadicIndex) -> float:
    """m_inner(w) / m_outer(w) as the explicit product of 2s_K over the chain."""
    if not outer.contains_index(inner):
        raise NotNested(
            f"({inner.level}, {inner.position}) is not inside ({outer.level}, {outer.position})"
        )
    if inner.level > tree.depth:
        raise OutOfRange(f"Level {inner.level} is deeper than the tree ({tree.depth})")
    factors = []
    for k in range(outer.level, inner.level):
        node = inner.position >> (inner.level - k)
        went_right = (inner.position >> (inner.level - k - 1)) & 1
        s = float(tree.splits[(1 << k) - 1 + node])
        factors.append(2.0 * (1.0 - s) if went_right else 2.0 * s)
    return math.prod(factors)


def evaluate(tree: WeightTree, x: float) -> float:
    """The value of the weight at x: the mean of the depth-N leaf containing x."""
    leaf = dyadic_at(x, tree.depth)
    return float(math.exp(tree.log_leaf_values[leaf.position]))


def mean_power(tree: WeightTree, index: DyadicIndex, r: float) -> float:
    """(1/|I|) int_I w^r, summed exactly over the leaves under I."""
    if index.level > tree.depth:
        raise OutOfRange(f"Level {index.level} is deeper than the tree ({tree.depth})")
    width = 1 << (tree.depth - index.level)
    logs = tree.log_leaf_values[index.position * width:(index.position + 1) * width]
    return float(math.exp(logsumexp(r * logs) - math.log(width)))


def haar_coeffs_from_tree(tree: WeightTree) -> HaarSeries:
    """b_I such that 1 + b_I h_I is 2s_I on the left half and 2(1 - s_I) on the right."""
    lengths_sqrt = 2.0 ** (-_flat_levels(tree.depth) / 2)
    return HaarSeries(tree.depth, (1.0 - 2.0 * tree.splits) * lengths_sqrt)


def tree_from_haar_coeffs(series: HaarSeries, eps_floor: float = EPS_FLOOR) -> WeightTree:
    """The partial product of (1 + b_I h_I) over levels below the series depth."""
    splits = 0.5 * (1.0 - series.coeffs * 2.0 ** (_flat_levels(series.depth) / 2))
    return WeightTree(series.depth, splits, eps_floor)


def power_weight(tree: WeightTree, theta: float) -> WeightTree:
    """The pointwise power w^theta renormalized to mean one."""
    if not 0.0 <= theta <= 1.0:
        raise OutOfRange(f"Power must lie in [0, 1], got {theta}")
    if theta == 1.0:
        return tree
    if theta == 0.0:
        return WeightTree.uniform(tree.depth, tree.eps_floor)

    current = theta * tree.log_leaf_values
    per_level = []
    for _ in range(tree.depth):
        left, right = current[0::2], current[1::2]
        node = np.logaddexp(left, right)
        per_level.append(np.exp(left - node))
        current = node
    per_level.reverse()
    return WeightTree(tree.depth, np.concatenate(per_level), tree.eps_floor)
