"""Finite-depth constants of the dyadic doubling, A_inf, RH_p, A_p and A_1 classes.

Every functional is a supremum over the dyadic intervals of level <= depth,
evaluated level by level on whole arrays. Suprema are reduced in level order
then position order, so the reported witness is the first interval (shallowest,
leftmost) attaining the value.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from src.config import REL_TOL
from src.dyadic import (
    DyadicIndex,
    HaarSeries,
    WeightTree,
    haar_coeffs_from_tree,
    log_geometric_mean_levels,
    log_power_mean_levels,
)
from src.errors import OutOfRange
from src.paraexp import lambda_op

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Supremum:
    value: float
    witness: DyadicIndex


def _sup_over_levels(levels: list[np.ndarray]) -> Supremum:
    best_value = -np.inf
    best_index = DyadicIndex.root()
    for level, values in enumerate(levels):
        if values.size == 0:
            continue
        position = int(np.argmax(values))
        if values[position] > best_value:
            best_value = float(values[position])
            best_index = DyadicIndex(level, position)
    return Supremum(best_value, best_index)


def _exp_sup(log_levels: list[np.ndarray]) -> Supremum:
    sup = _sup_over_levels(log_levels)
    return Supremum(float(np.exp(sup.value)), sup.witness)


def _check_exponent(p: float) -> None:
    if not p > 1.0:
        raise OutOfRange(f"Exponent p must be greater than 1, got {p}")


def doubling_sup(tree: WeightTree) -> Supremum:
    worst = np.maximum(1.0 / tree.splits, 1.0 / (1.0 - tree.splits))
    flat = int(np.argmax(worst))
    return Supremum(float(worst[flat]), DyadicIndex.from_flat(flat))


def doubling_constant(tree: WeightTree) -> float:
    """sup over parents of (parent mass) / (child mass)."""
    return doubling_sup(tree).value


def ainf_sup(tree: WeightTree) -> Supremum:
    geometric = log_geometric_mean_levels(tree)
    return _exp_sup([lm - lg for lm, lg in zip(tree.log_mean_levels, geometric)])


def ainf_functional(tree: WeightTree) -> float:
    """sup_I m_I(w) / exp(m_I(log w))."""
    return ainf_sup(tree).value


def rhp_sup(tree: WeightTree, p: float) -> Supremum:
    _check_exponent(p)
    powered = log_power_mean_levels(tree, p)
    return _exp_sup([lp / p - lm for lp, lm in zip(powered, tree.log_mean_levels)])


def rhp_functional(tree: WeightTree, p: float) -> float:
    """sup_I (m_I(w^p))^{1/p} / m_I(w)."""
    return rhp_sup(tree, p).value


def ap_sup(tree: WeightTree, p: float) -> Supremum:
    _check_exponent(p)
    dual = log_power_mean_levels(tree, -1.0 / (p - 1.0))
    return _exp_sup([lm + (p - 1.0) * ld for lm, ld in zip(tree.log_mean_levels, dual)])


def ap_functional(tree: WeightTree, p: float) -> float:
    """sup_I m_I(w) (m_I(w^{-1/(p-1)}))^{p-1}."""
    return ap_sup(tree, p).value


def a1_sup(tree: WeightTree) -> Supremum:
    # minimum leaf value below each node, built bottom-up
    current = tree.log_leaf_values
    minima = [current]
    for _ in range(tree.depth):
        current = np.minimum(current[0::2], current[1::2])
        minima.append(current)
    minima.reverse()
    return _exp_sup([lm - low for lm, low in zip(tree.log_mean_levels, minima)])


def a1_functional(tree: WeightTree) -> float:
    """sup over nested I in J of m_J(w) / m_I(w)."""
    return a1_sup(tree).value


def carleson_sums(series: HaarSeries) -> list[np.ndarray]:
    """(1/|J|) sum_{I in D(J)} b_I^2 for every J, one array per level 0..depth-1."""
    below = np.zeros(1 << series.depth)
    levels = []
    for k in reversed(range(series.depth)):
        b = series.level_coeffs(k)
        below = b * b * 2.0 ** k + 0.5 * (below[0::2] + below[1::2])
        levels.append(below)
    levels.reverse()
    return levels


def carleson_sup(series: HaarSeries) -> Supremum:
    return _sup_over_levels(carleson_sums(series))


def carleson_norm(series: HaarSeries) -> float:
    return carleson_sup(series).value


def buckley_sums(tree: WeightTree, p: float) -> list[np.ndarray]:
    """(1/|J|) sum_{I in D(J)} (m_I w / m_J w)^{-1/(p-1)} b_I^2, one array per level 0..depth-1.

    Intervals at level == depth carry no coefficient and are left out.
    """
    _check_exponent(p)
    r = -1.0 / (p - 1.0)
    series = haar_coeffs_from_tree(tree)
    below = np.zeros(1 << tree.depth)
    levels = []
    for k in reversed(range(tree.depth)):
        b = series.level_coeffs(k)
        s = tree.level_splits(k)
        weighted = (2.0 * s) ** r * below[0::2] + (2.0 * (1.0 - s)) ** r * below[1::2]
        below = b * b * 2.0 ** k + 0.5 * weighted
        levels.append(below)
    levels.reverse()
    return levels


def buckley_sup(tree: WeightTree, p: float) -> Supremum:
    return _sup_over_levels(buckley_sums(tree, p))


def buckley_functional(tree: WeightTree, p: float) -> float:
    return buckley_sup(tree, p).value


def proof_chain_holds(tree: WeightTree, lam: float, p: float, rel_tol: float = REL_TOL) -> bool:
    """Check, for every J, that the Buckley sum of w_lambda is bounded by the
    Carleson sum of w plus the Buckley sum of w."""
    if not 0.0 <= lam <= 1.0:
        raise OutOfRange(f"The chain bound is stated for lambda in [0, 1], got {lam}")
    lhs = buckley_sums(lambda_op(tree, lam), p)
    carleson = carleson_sums(haar_coeffs_from_tree(tree))
    rhs = buckley_sums(tree, p)
    for k, (left, c, right) in enumerate(zip(lhs, carleson, rhs)):
        bound = c + right
        if np.any(left > bound * (1.0 + rel_tol)):
            logger.debug("Chain bound fails at level %d for lambda=%s, p=%s", k, lam, p)
            return False
    return True


def bounded_trend(values: list[float], tolerance: float = 1.01, window: int = 3) -> bool:
    """True when every one of the last `window` successive ratios is below `tolerance`."""
    if len(values) < window + 1:
        raise OutOfRange(f"Need at least {window + 1} values to judge a trend, got {len(values)}")
    tail = values[-(window + 1):]
    return all(later / earlier < tolerance for earlier, later in zip(tail, tail[1:]))


@dataclass(frozen=True)
class ExponentEntry:
    p: float
    rhp_const: float
    ap_const: float
    buckley_const: float


@dataclass(frozen=True)
class ClassReport:
    """Every class constant of one tree, with the interval attaining each supremum."""

    depth: int
    doubling_const: float
    ainf_const: float
    carleson_norm: float
    a1_const: float
    per_exponent: tuple[ExponentEntry, ...]
    witnesses: dict[str, DyadicIndex] = field(default_factory=dict, compare=False)

    def entry(self, p: float) -> ExponentEntry:
        for entry in self.per_exponent:
            if entry.p == p:
                return entry
        raise KeyError(f"No entry for p={p}")

    def as_rows(self) -> list[dict]:
        """One flat row per exponent."""
        return [
            {
                "depth": self.depth,
                "p": entry.p,
                "doubling_const": self.doubling_const,
                "ainf_const": self.ainf_const,
                "carleson_norm": self.carleson_norm,
                "a1_const": self.a1_const,
                "rhp_const": entry.rhp_const,
                "ap_const": entry.ap_const,
                "buckley_const": entry.buckley_const,
            }
            for entry in self.per_exponent
        ]


def class_report(tree: WeightTree, ps: list[float]) -> ClassReport:
    witnesses = {}

    def record(name: str, sup: Supremum) -> float:
        witnesses[name] = sup.witness
        return sup.value

    doubling = record("doubling", doubling_sup(tree))
    ainf = record("ainf", ainf_sup(tree))
    carleson = record("carleson", carleson_sup(haar_coeffs_from_tree(tree)))
    a1 = record("a1", a1_sup(tree))

    entries = []
    for p in ps:
        entry = ExponentEntry(
            p=p,
            rhp_const=record(f"rhp[{p}]", rhp_sup(tree, p)),
            ap_const=record(f"ap[{p}]", ap_sup(tree, p)),
            buckley_const=record(f"buckley[{p}]", buckley_sup(tree, p)),
        )
        if entry.ap_const > a1 * (1.0 + REL_TOL):
            logger.warning("A_p constant %.6g exceeds A_1 constant %.6g at p=%s", entry.ap_const, a1, p)
        entries.append(entry)

    return ClassReport(
        depth=tree.depth,
        doubling_const=doubling,
        ainf_const=ainf,
        carleson_norm=carleson,
        a1_const=a1,
        per_exponent=tuple(entries),
        witnesses=witnesses,
    )
