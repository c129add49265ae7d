"""Dyadic paraproducts on mean-zero functions and their finite-depth resolvents.

Mean-zero depth-N functions are stored by their Haar coefficients in level
order. pi_b f = sum_I (m_I f) b_I h_I only couples I to strictly larger
intervals, so (I - lambda pi_b)^{-1} is the finite Neumann series.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from src.classes import rhp_functional
from src.config import (
    MAX_PARAPRODUCT_DEPTH,
    PARAEXP_EPS,
    POWER_ITERATIONS,
    SEED,
    TRIALS,
)
from src.dyadic import DyadicIndex, HaarSeries
from src.errors import InvariantViolation, OutOfRange, SizeLimit, VerificationFailed
from src.paraexp import LambdaParam, lambda_op_product

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10


def _level_slice(level: int) -> slice:
    return slice((1 << level) - 1, (1 << (level + 1)) - 1)


def _node_means(coeffs: np.ndarray, depth: int) -> np.ndarray:
    """m_I f for every node at levels 0..depth-1, from the Haar coefficients."""
    means = np.empty_like(coeffs)
    current = np.zeros(1)
    for k in range(depth):
        means[_level_slice(k)] = current
        step = coeffs[_level_slice(k)] * 2.0 ** (k / 2)
        child = np.empty(2 * current.size)
        child[0::2] = current - step
        child[1::2] = current + step
        current = child
    return means


@dataclass(frozen=True, eq=False)
class MeanZeroFunction:
    """A leaf-constant function on (0, 1] with integral zero."""

    depth: int
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise OutOfRange(f"Depth must be a positive integer, got {self.depth}")
        coeffs = np.array(self.coeffs, dtype=float)
        expected = (1 << self.depth) - 1
        if coeffs.shape != (expected,):
            raise InvariantViolation(
                f"A depth-{self.depth} function needs {expected} coefficients, got shape {coeffs.shape}"
            )
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zeros(cls, depth: int) -> "MeanZeroFunction":
        return cls(depth, np.zeros((1 << depth) - 1))

    @classmethod
    def haar(cls, index: DyadicIndex, depth: int) -> "MeanZeroFunction":
        if index.level >= depth:
            raise OutOfRange(f"h at level {index.level} is not resolved at depth {depth}")
        coeffs = np.zeros((1 << depth) - 1)
        coeffs[index.flat] = 1.0
        return cls(depth, coeffs)

    @classmethod
    def from_leaves(cls, values) -> "MeanZeroFunction":
        values = np.asarray(values, dtype=float)
        depth = values.size.bit_length() - 1
        if depth < 1 or values.size != 1 << depth:
            raise InvariantViolation(f"Leaf count must be a power of two >= 2, got {values.size}")
        scale = max(float(np.max(np.abs(values))), 1.0)
        if abs(float(np.mean(values))) > 1e-12 * scale:
            raise InvariantViolation(f"Leaf values integrate to {float(np.mean(values))}, not 0")
        coeffs = np.empty((1 << depth) - 1)
        integrals = values * 2.0 ** -depth
        for k in reversed(range(depth)):
            left, right = integrals[0::2], integrals[1::2]
            coeffs[_level_slice(k)] = 2.0 ** (k / 2) * (right - left)
            integrals = left + right
        return cls(depth, coeffs)

    @classmethod
    def spine_indicator(cls, level: int, depth: int) -> "MeanZeroFunction":
        """chi_{J_l} - |J_l| with J_l = (0, 2^-l]."""
        if not 1 <= level <= depth:
            raise OutOfRange(f"Spine level must lie in [1, {depth}], got {level}")
        values = np.full(1 << depth, -(2.0 ** -level))
        values[:1 << (depth - level)] += 1.0
        return cls.from_leaves(values)

    def to_leaves(self) -> np.ndarray:
        current = np.zeros(1)
        for k in range(self.depth):
            step = self.coeffs[_level_slice(k)] * 2.0 ** (k / 2)
            child = np.empty(2 * current.size)
            child[0::2] = current - step
            child[1::2] = current + step
            current = child
        return current

    def node_means(self) -> np.ndarray:
        return _node_means(self.coeffs, self.depth)

    def truncated(self, depth: int) -> "MeanZeroFunction":
        """Conditional expectation onto depth-`depth` leaves (or zero-padding when deeper)."""
        size = (1 << depth) - 1
        if size <= self.coeffs.size:
            return MeanZeroFunction(depth, self.coeffs[:size])
        return MeanZeroFunction(depth, np.concatenate([self.coeffs, np.zeros(size - self.coeffs.size)]))


def lp_norm(f: MeanZeroFunction, p: float) -> float:
    """(sum over leaves of |f|^p 2^-N)^{1/p}."""
    if p < 1.0:
        raise OutOfRange(f"p must be at least 1, got {p}")
    values = np.abs(f.to_leaves())
    scale = float(np.max(values))
    if scale == 0.0:
        return 0.0
    return scale * float(np.mean((values / scale) ** p)) ** (1.0 / p)


@dataclass(frozen=True, eq=False)
class HaarOperator:
    """A linear map on depth-N mean-zero functions, as a sparse matrix in the Haar basis."""

    depth: int
    matrix: sparse.csc_array

    def apply(self, f: MeanZeroFunction) -> MeanZeroFunction:
        self._check(f)
        return MeanZeroFunction(self.depth, self.matrix @ f.coeffs)

    def apply_transpose(self, f: MeanZeroFunction) -> MeanZeroFunction:
        self._check(f)
        return MeanZeroFunction(self.depth, self.matrix.T @ f.coeffs)

    def entry(self, row: DyadicIndex, column: DyadicIndex) -> float:
        return float(self.matrix[row.flat, column.flat])

    def _check(self, f: MeanZeroFunction) -> None:
        if f.depth != self.depth:
            raise OutOfRange(f"Operator has depth {self.depth}, function has depth {f.depth}")


def _check_paraproduct_depth(depth: int) -> None:
    if depth < 1:
        raise OutOfRange(f"Depth must be a positive integer, got {depth}")
    if depth > MAX_PARAPRODUCT_DEPTH:
        raise SizeLimit(f"Paraproduct depth {depth} exceeds the cap of {MAX_PARAPRODUCT_DEPTH}")


def paraproduct_matrix(series: HaarSeries, depth: int) -> HaarOperator:
    """Entry (I, J) = b_I h_J(I) for I strictly inside J."""
    _check_paraproduct_depth(depth)
    b = series.truncated(depth).coeffs
    size = (1 << depth) - 1
    rows, cols, vals = [], [], []
    for k in range(1, depth):
        positions = np.arange(1 << k)
        b_level = b[_level_slice(k)]
        for j in range(k):
            shift = k - j
            ancestor = positions >> shift
            on_right = (positions >> (shift - 1)) & 1
            values = b_level * np.where(on_right == 1, 1.0, -1.0) * 2.0 ** (j / 2)
            keep = values != 0.0
            rows.append((1 << k) - 1 + positions[keep])
            cols.append((1 << j) - 1 + ancestor[keep])
            vals.append(values[keep])
    if rows:
        rows, cols, vals = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    else:
        rows = cols = np.zeros(0, dtype=int)
        vals = np.zeros(0)
    matrix = sparse.csc_array((vals, (rows, cols)), shape=(size, size))
    return HaarOperator(depth, matrix)


def _paraproduct_coeffs(b: np.ndarray, coeffs: np.ndarray, depth: int) -> np.ndarray:
    return b * _node_means(coeffs, depth)


def apply_paraproduct(series: HaarSeries, f: MeanZeroFunction) -> MeanZeroFunction:
    """pi_b f without forming the matrix."""
    b = series.truncated(f.depth).coeffs
    return MeanZeroFunction(f.depth, _paraproduct_coeffs(b, f.coeffs, f.depth))


def _neumann(apply, lam: float, coeffs: np.ndarray, depth: int) -> np.ndarray:
    total = coeffs.copy()
    term = coeffs
    for _ in range(depth):
        term = lam * apply(term)
        if not term.any():
            break
        total = total + term
    return total


def apply_resolvent(
    series: HaarSeries, lam: float, f: MeanZeroFunction, check: bool = True
) -> MeanZeroFunction:
    """(I - lambda pi_b)^{-1} f as the finite Neumann series."""
    lam = LambdaParam.coerce(lam).value
    b = series.truncated(f.depth).coeffs

    def step(c: np.ndarray) -> np.ndarray:
        return _paraproduct_coeffs(b, c, f.depth)

    result = _neumann(step, lam, f.coeffs, f.depth)
    if check:
        residual = result - lam * step(result) - f.coeffs
        size = max(
            float(np.max(np.abs(f.to_leaves()))),
            float(np.max(np.abs(MeanZeroFunction(f.depth, result).to_leaves()))),
        )
        error = float(np.max(np.abs(MeanZeroFunction(f.depth, residual).to_leaves())))
        logger.debug("Resolvent residual %.3g at depth %d, lambda %s", error, f.depth, lam)
        if error > RESIDUAL_TOL * max(size, 1e-300):
            raise VerificationFailed(f"Resolvent residual {error} exceeds {RESIDUAL_TOL} relative")
    return MeanZeroFunction(f.depth, result)


def trial_functions(depth: int, trials: int = TRIALS, seed: int = SEED):
    """The trial family: spine Haar functions, re-centered spine indicators and
    seeded random Haar vectors cut at every level.

    Random vectors are drawn level by level, so the family at depth N is the
    conditional expectation of the family at any deeper depth.
    """
    if trials < 1:
        raise OutOfRange(f"Need at least one trial, got {trials}")
    for level in range(depth):
        yield MeanZeroFunction.haar(DyadicIndex(level, 0), depth)
    for level in range(1, depth + 1):
        yield MeanZeroFunction.spine_indicator(level, depth)
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        coeffs = np.concatenate([rng.standard_normal(1 << k) for k in range(depth)])
        for cut in range(1, depth + 1):
            truncated = coeffs.copy()
            truncated[(1 << cut) - 1:] = 0.0
            yield MeanZeroFunction(depth, truncated)


def resolvent_norm_lower_bound(
    series: HaarSeries,
    lam: float,
    p: float,
    depth: int,
    trials: int = TRIALS,
    seed: int = SEED,
) -> float:
    """max over the trial family of ||R f||_p / ||f||_p."""
    _check_paraproduct_depth(depth)
    best = 0.0
    for f in trial_functions(depth, trials, seed):
        norm = lp_norm(f, p)
        if norm == 0.0:
            continue
        ratio = lp_norm(apply_resolvent(series, lam, f, check=False), p) / norm
        best = max(best, ratio)
    return best


def resolvent_power_iteration(
    series: HaarSeries,
    lam: float,
    depth: int,
    iterations: int = POWER_ITERATIONS,
    seed: int = SEED,
) -> float:
    """Power iteration on R^T R for the L^2 norm of the resolvent R; a lower bound."""
    lam = LambdaParam.coerce(lam).value
    operator = paraproduct_matrix(series, depth)
    transpose = operator.matrix.T.tocsc()

    def forward(c: np.ndarray) -> np.ndarray:
        return operator.matrix @ c

    def backward(c: np.ndarray) -> np.ndarray:
        return transpose @ c

    rng = np.random.default_rng(seed)
    v = rng.standard_normal((1 << depth) - 1)
    v /= np.linalg.norm(v)
    for _ in range(iterations):
        w = _neumann(forward, lam, v, depth)
        v = _neumann(backward, lam, w, depth)
        v /= np.linalg.norm(v)
    return float(np.linalg.norm(_neumann(forward, lam, v, depth)))


@dataclass(frozen=True)
class SweepRow:
    depth: int
    lam: float
    p: float
    norm_lower_bound: float
    power_iter_bound_p2: float | None
    rhp_functional_omega_lambda: float

    def as_row(self) -> dict:
        return {
            "depth": self.depth,
            "lambda": self.lam,
            "p": self.p,
            "norm_lower_bound": self.norm_lower_bound,
            "power_iter_bound_p2": self.power_iter_bound_p2,
            "rhp_functional_omega_lambda": self.rhp_functional_omega_lambda,
        }


def resolvent_sweep(
    series: HaarSeries,
    p: float,
    depths: list[int],
    lambdas: list[float],
    trials: int = TRIALS,
    seed: int = SEED,
    eps: float = PARAEXP_EPS,
) -> list[SweepRow]:
    """Resolvent norm bounds next to the RH_p constant of w_lambda, per (depth, lambda)."""
    if not depths or not lambdas:
        raise OutOfRange("Depth and lambda grids must be non-empty")
    series.check_paraexponential(eps)
    rows = []
    for depth in depths:
        _check_paraproduct_depth(depth)
        truncated = series.truncated(depth)
        logger.info("Resolvent sweep at depth %d over %d lambda values", depth, len(lambdas))
        for lam in lambdas:
            # the power-iteration column is an L^2 estimate; empty for other p
            power = resolvent_power_iteration(truncated, lam, depth, seed=seed) if p == 2.0 else None
            rows.append(
                SweepRow(
                    depth=depth,
                    lam=lam,
                    p=p,
                    norm_lower_bound=resolvent_norm_lower_bound(truncated, lam, p, depth, trials, seed),
                    power_iter_bound_p2=power,
                    rhp_functional_omega_lambda=rhp_functional(lambda_op_product(truncated, lam), p),
                )
            )
    return rows
