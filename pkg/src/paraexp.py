"""The lambda-operation on dyadic weights and the convexity bounds behind it.

w_lambda = prod (1 + lambda b_I h_I) is computed at the split level, where it
is affine: s_I(lambda) = 1/2 + lambda (s_I - 1/2). The product form is kept as
a cross-check through the Haar coefficients.
"""

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from src.config import EPS_FLOOR, ORACLE_MAX_N
from src.dyadic import (
    DyadicIndex,
    HaarSeries,
    WeightTree,
    chain_product,
    tree_from_haar_coeffs,
)
from src.errors import OutOfRange, SizeLimit


@dataclass(frozen=True)
class LambdaParam:
    value: float

    def __post_init__(self) -> None:
        if not -1.0 <= self.value <= 1.0:
            raise OutOfRange(f"lambda must lie in [-1, 1], got {self.value}")

    @classmethod
    def coerce(cls, lam: "float | LambdaParam") -> "LambdaParam":
        return lam if isinstance(lam, LambdaParam) else cls(float(lam))

    def split(self, s):
        """Image of a split fraction (scalar or array)."""
        return 0.5 + self.value * (s - 0.5)


def lambda_op(tree: WeightTree, lam: float | LambdaParam) -> WeightTree:
    param = LambdaParam.coerce(lam)
    if param.value == 1.0:
        return tree
    return WeightTree(tree.depth, param.split(tree.splits), tree.eps_floor)


def lambda_op_product(
    series: HaarSeries, lam: float | LambdaParam, eps_floor: float = EPS_FLOOR
) -> WeightTree:
    """The partial product of (1 + lambda b_I h_I)."""
    param = LambdaParam.coerce(lam)
    return tree_from_haar_coeffs(series.scaled(param.value), eps_floor)


def _check_tuple(a) -> np.ndarray:
    values = np.asarray(a, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise OutOfRange("Expected a non-empty list of numbers")
    if not (values > 0).all():
        raise OutOfRange(f"All entries must be positive, got {values.tolist()}")
    return values


def _check_unit(lam: float) -> None:
    if not 0.0 <= lam <= 1.0:
        raise OutOfRange(f"lambda must lie in [0, 1] here, got {lam}")


def convexity_lower_bound(a, lam: float) -> tuple[float, float]:
    """(prod (1 + lambda (a_j - 1)), min(1, prod a_j)); the first never falls below the second."""
    values = _check_tuple(a)
    _check_unit(lam)
    lhs = float(np.prod(1.0 + lam * (values - 1.0)))
    rhs = min(1.0, float(np.prod(values)))
    return lhs, rhs


def binomial_lower_bound(a, lam: float) -> float:
    """(lambda G + 1 - lambda)^n with G the geometric mean of a.

    Sits between the product in convexity_lower_bound and min(1, prod a).
    """
    values = _check_tuple(a)
    _check_unit(lam)
    geometric = math.exp(float(np.mean(np.log(values))))
    return (lam * geometric + 1.0 - lam) ** values.size


def elementary_symmetric(a, i: int) -> float:
    """Sum over i-element subsets of the product of their entries."""
    values = [float(v) for v in a]
    return math.fsum(math.prod(subset) for subset in combinations(values, i))


def symmetric_expansion_oracle(a, lam: float, max_n: int = ORACLE_MAX_N) -> float:
    """prod (1 + lambda (a_j - 1)) expanded over all subsets:
    sum_i (1 - lambda)^{n-i} lambda^i e_i(a)."""
    values = _check_tuple(a)
    n = values.size
    if n > max_n:
        raise SizeLimit(f"Subset expansion over n={n} entries exceeds the cap of {max_n}")
    return math.fsum(
        (1.0 - lam) ** (n - i) * lam ** i * elementary_symmetric(values, i)
        for i in range(n + 1)
    )


def symmetric_amgm_bound(a, i: int) -> tuple[float, float]:
    """(e_i(a), C(n, i) (prod a)^{i/n}); AM-GM makes the first at least the second."""
    values = _check_tuple(a)
    n = values.size
    if not 0 <= i <= n:
        raise OutOfRange(f"Subset size must lie in [0, {n}], got {i}")
    geometric_power = math.exp(i * float(np.mean(np.log(values))))
    return elementary_symmetric(values, i), math.comb(n, i) * geometric_power


def ratio_comparison(
    tree: WeightTree,
    lam: float | LambdaParam,
    inner: DyadicIndex,
    outer: DyadicIndex,
    r: float,
) -> tuple[float, float]:
    """((m_I w_lambda / m_J w_lambda)^r, max(1, (m_I w / m_J w)^r)) for r < 0."""
    param = LambdaParam.coerce(lam)
    _check_unit(param.value)
    if not r < 0:
        raise OutOfRange(f"The comparison holds for negative exponents, got r={r}")
    lhs = chain_product(lambda_op(tree, param), inner, outer) ** r
    rhs = max(1.0, chain_product(tree, inner, outer) ** r)
    return lhs, rhs
