"""Periodic weights on the left spine and the reverse Hölder counterexample.

An n-periodic weight splits the spine intervals J_{i-1} = (0, 2^{-i+1}] with
s_i (cycled with period n) and keeps every other split at 1/2, so the weight
is the constant c_i on I_i = (2^{-i}, 2^{-i+1}].
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect
from scipy.special import logsumexp

from src.config import (
    BISECT_MAXITER,
    BISECT_RESIDUAL,
    BISECT_XTOL,
    DELTA_MARGIN,
    EPS_FLOOR,
    OVERSHOOT,
    REL_TOL,
)
from src.dyadic import DyadicIndex, WeightTree
from src.errors import (
    BisectionFailed,
    DivergentSeries,
    OutOfRange,
    SplitOutOfRange,
    VerificationFailed,
)
from src.paraexp import LambdaParam

logger = logging.getLogger(__name__)

_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class PeriodicSpec:
    s: tuple[float, ...]
    eps_floor: float = EPS_FLOOR

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.s)
        if not values:
            raise OutOfRange("A periodic spec needs at least one split")
        for i, value in enumerate(values):
            if not self.eps_floor < value < 1.0 - self.eps_floor:
                raise SplitOutOfRange(DyadicIndex(i, 0), value, self.eps_floor)
        object.__setattr__(self, "s", values)

    @classmethod
    def power_law(cls, alpha: float, eps_floor: float = EPS_FLOOR) -> "PeriodicSpec":
        """The dyadic analogue of |x|^alpha: one split 2^{-alpha-1}."""
        return cls((2.0 ** (-alpha - 1.0),), eps_floor)

    @property
    def n(self) -> int:
        return len(self.s)

    @property
    def log_product(self) -> float:
        return math.fsum(math.log(v) for v in self.s)

    def canonical(self) -> "PeriodicSpec":
        """The same weight described by its minimal period."""
        for d in range(1, self.n + 1):
            if self.n % d == 0 and all(self.s[i] == self.s[i % d] for i in range(self.n)):
                return PeriodicSpec(self.s[:d], self.eps_floor)
        return self

    def split_at(self, i: int) -> float:
        """s_i for i >= 1, cycled."""
        if i < 1:
            raise OutOfRange(f"Spine splits are numbered from 1, got {i}")
        return self.s[(i - 1) % self.n]

    def log_spine_mean(self, i: int) -> float:
        """log m_{J_i} w = log(2^i s_1 ... s_i)."""
        full, rest = divmod(i, self.n)
        partial = math.fsum(math.log(v) for v in self.s[:rest])
        return i * _LOG2 + full * self.log_product + partial

    def log_c(self, i: int) -> float:
        """log c_i, where c_i = 2^i s_1 ... s_{i-1} (1 - s_i) is the value on I_i."""
        if i < 1:
            raise OutOfRange(f"Coefficients are numbered from 1, got {i}")
        return self.log_spine_mean(i - 1) + _LOG2 + math.log1p(-self.split_at(i))

    def c(self, i: int) -> float:
        return math.exp(self.log_c(i))


def periodic_weight(spec: PeriodicSpec, depth: int) -> WeightTree:
    if depth < spec.n:
        raise OutOfRange(f"Depth {depth} is shorter than the period {spec.n}")
    splits = np.full((1 << depth) - 1, 0.5)
    for k in range(depth):
        splits[(1 << k) - 1] = spec.split_at(k + 1)
    return WeightTree(depth, splits, spec.eps_floor)


def lambda_spec(spec: PeriodicSpec, lam: float | LambdaParam) -> PeriodicSpec:
    """The lambda-operation applied coordinatewise to the split pattern."""
    param = LambdaParam.coerce(lam)
    return PeriodicSpec(tuple(param.split(v) for v in spec.s), spec.eps_floor)


@dataclass(frozen=True)
class ConditionResult:
    holds: bool
    margin: float
    value: float
    threshold: float

    def __bool__(self) -> bool:
        return self.holds


def _check_exponent(p: float) -> None:
    if not p > 1.0:
        raise OutOfRange(f"Exponent p must be greater than 1, got {p}")


def rhp_condition(spec: PeriodicSpec, p: float) -> ConditionResult:
    """Whether 2^n s_1 ... s_n < 2^{n/p}, with the signed margin."""
    _check_exponent(p)
    value = math.exp(spec.n * _LOG2 + spec.log_product)
    threshold = 2.0 ** (spec.n / p)
    return ConditionResult(value < threshold, threshold - value, value, threshold)


def period_growth_ratio(spec: PeriodicSpec, p: float) -> float:
    """(2^n s_1 ... s_n)^p 2^{-n}: the ratio between successive periods of sum c_i^p 2^{-i}."""
    return math.exp(p * (spec.n * _LOG2 + spec.log_product) - spec.n * _LOG2)


def _log_d(spec: PeriodicSpec, p: float, m: int) -> float:
    terms = [p * spec.log_c(j + m) - (j + m) * _LOG2 for j in range(1, spec.n + 1)]
    return float(logsumexp(terms))


def rhp_ratio_closed_form(spec: PeriodicSpec, p: float, l: int) -> float:
    """m_{J_l}(w^p) / (m_{J_l} w)^p for the infinite-depth periodic weight."""
    if l < 0:
        raise OutOfRange(f"Spine level must be non-negative, got {l}")
    condition = rhp_condition(spec, p)
    if not condition.holds:
        raise DivergentSeries(
            f"2^n prod s = {condition.value} is not below 2^(n/p) = {condition.threshold}"
        )
    q, m = divmod(l, spec.n)
    log_ratio = (
        l * (1.0 - p) * _LOG2
        + _log_d(spec, p, m)
        - p * _log_d(spec, 1.0, m)
        + spec.n * (p - 1.0) * q * _LOG2
        + p * math.log1p(-math.exp(spec.log_product))
        - math.log1p(-period_growth_ratio(spec, p))
    )
    return math.exp(log_ratio)


def _log_spine_power_mean(spec: PeriodicSpec, r: float, l: int, depth: int) -> float:
    """log m_{J_l}(w^r) for the depth-`depth` truncation: the pieces I_{l+1}..I_depth plus J_depth."""
    terms = [r * spec.log_c(i) - i * _LOG2 for i in range(l + 1, depth + 1)]
    terms.append(r * spec.log_spine_mean(depth) - depth * _LOG2)
    return l * _LOG2 + float(logsumexp(terms))


def rhp_ratio_truncated(spec: PeriodicSpec, p: float, l: int, depth: int) -> float:
    """The same ratio for the depth-`depth` truncation, summed along the spine only."""
    if l < 0:
        raise OutOfRange(f"Spine level must be non-negative, got {l}")
    _check_exponent(p)
    if l >= depth:
        return 1.0
    return math.exp(_log_spine_power_mean(spec, p, l, depth) - p * spec.log_spine_mean(l))


def _check_truncation(spec: PeriodicSpec, depth: int) -> None:
    if depth < spec.n:
        raise OutOfRange(f"Depth {depth} is shorter than the period {spec.n}")


# Off the spine a periodic weight is constant on every interval, so each class
# functional of periodic_weight(spec, depth) is attained on some J_l, l < depth.
# These evaluate it from the spine alone, in O(depth^2) work.

def rhp_functional_periodic(spec: PeriodicSpec, p: float, depth: int) -> float:
    """rhp_functional(periodic_weight(spec, depth), p)."""
    _check_truncation(spec, depth)
    worst = max(rhp_ratio_truncated(spec, p, l, depth) for l in range(depth))
    return max(1.0, worst) ** (1.0 / p)


def ap_functional_periodic(spec: PeriodicSpec, p: float, depth: int) -> float:
    """ap_functional(periodic_weight(spec, depth), p)."""
    _check_exponent(p)
    _check_truncation(spec, depth)
    r = -1.0 / (p - 1.0)
    worst = max(
        spec.log_spine_mean(l) + (p - 1.0) * _log_spine_power_mean(spec, r, l, depth)
        for l in range(depth)
    )
    return max(1.0, math.exp(worst))


def a1_functional_periodic(spec: PeriodicSpec, depth: int) -> float:
    """a1_functional(periodic_weight(spec, depth))."""
    _check_truncation(spec, depth)
    # smallest value below J_l, for l = depth down to 0
    lowest = spec.log_spine_mean(depth)
    worst = 0.0
    for l in reversed(range(depth)):
        lowest = min(lowest, spec.log_c(l + 1))
        worst = max(worst, spec.log_spine_mean(l) - lowest)
    return math.exp(worst)


def rhp_constant_periodic(spec: PeriodicSpec, p: float) -> float:
    """The RH_p constant of the infinite-depth weight; only spine intervals exceed 1."""
    worst = max(rhp_ratio_closed_form(spec, p, m) for m in range(spec.n))
    return worst ** (1.0 / p)


def max_on_line(n: int, a: float) -> float:
    """h(a) = 2^n (n-1)^{n-1} (1-a)^n / (n^n (1-2a)^{n-1}), the maximum of g on its line."""
    log_h = (
        n * _LOG2
        + (n - 1) * math.log(n - 1)
        + n * math.log1p(-a)
        - n * math.log(n)
        - (n - 1) * math.log1p(-2.0 * a)
    )
    return math.exp(log_h)


@dataclass(frozen=True)
class LineGeometry:
    """The segment (a + (1/2 - a) t, 1 - t/2, ..., 1 - t/2) through the cube."""

    n: int
    a: float
    t_m: float
    g_max: float

    def g(self, t: float) -> float:
        """2^n times the product of the coordinates at t."""
        return (2.0 * self.a + (1.0 - 2.0 * self.a) * t) * (2.0 - t) ** (self.n - 1)

    def point(self, t: float) -> tuple[float, ...]:
        return (self.a + (0.5 - self.a) * t,) + (1.0 - 0.5 * t,) * (self.n - 1)


def line_geometry(n: int, a: float) -> LineGeometry:
    if n < 2:
        raise OutOfRange(f"The line construction needs n >= 2, got {n}")
    if not 0.0 < a < 1.0 / (n + 1):
        raise OutOfRange(f"a must lie in (0, 1/(n+1)) = (0, {1.0 / (n + 1)}), got {a}")
    t_m = 2.0 * (1.0 - (n + 1) * a) / (n * (1.0 - 2.0 * a))
    return LineGeometry(n=n, a=a, t_m=t_m, g_max=max_on_line(n, a))


def critical_p(n: int) -> float:
    """n log 2 / (n log 2 - log(n+1)); periodic counterexamples of period n exist above it."""
    if n < 2:
        raise OutOfRange(f"The critical exponent is defined for n >= 2, got {n}")
    return n / (n - math.log2(n + 1))


def minimal_period(p: float) -> int:
    """Smallest n >= 2 with 2^{n/p} < 2^n / (n+1)."""
    _check_exponent(p)
    n = 2
    while not n / p < n - math.log2(n + 1):
        n += 1
    return n


def _bisect(func, lo: float, hi: float, what: str, xtol: float, maxiter: int) -> float:
    root, result = bisect(func, lo, hi, xtol=xtol, maxiter=maxiter, full_output=True, disp=False)
    logger.debug("Bisection for %s: %d iterations, root %.15g", what, result.iterations, root)
    if not result.converged:
        raise BisectionFailed(f"Bisection for {what} did not converge in {maxiter} iterations")
    return root


def _check_residual(value: float, target: float, what: str, residual: float) -> None:
    if abs(value - target) > residual * max(1.0, abs(target)):
        raise BisectionFailed(
            f"Bisection for {what} stopped at residual {abs(value - target)}, above {residual}"
        )


@dataclass(frozen=True)
class CounterexampleCert:
    """A weight in RH_p whose lambda-image is not, for one p."""

    p: float
    n: int
    a_p: float
    t_P: float
    t_m: float
    lam: float
    spec_P: PeriodicSpec
    spec_P_lambda: PeriodicSpec
    f_P: float
    f_P_lambda: float
    threshold: float
    case: str
    delta_margin: float = DELTA_MARGIN
    overshoot: float = OVERSHOOT

    @property
    def margins(self) -> tuple[float, float]:
        """(threshold - f_P, f_P_lambda - threshold)."""
        return self.threshold - self.f_P, self.f_P_lambda - self.threshold

    def verify(self, rel_tol: float = REL_TOL) -> None:
        problems = []
        if not 0.0 < self.a_p < 1.0 / (self.n + 1):
            problems.append(f"a_p={self.a_p} outside (0, 1/(n+1))")
        if not 0.0 < self.t_P < self.t_m < 1.0:
            problems.append(f"need 0 < t_P < t_m < 1, got t_P={self.t_P}, t_m={self.t_m}")
        if not 0.0 < self.lam < 1.0:
            problems.append(f"lambda={self.lam} outside (0, 1)")
        expected_lam = (1.0 - self.t_m) / (1.0 - self.t_P)
        if abs(self.lam - expected_lam) > rel_tol * expected_lam:
            problems.append(f"lambda={self.lam} differs from (1 - t_m)/(1 - t_P)={expected_lam}")
        if not self.f_P < self.threshold:
            problems.append(f"f_P={self.f_P} is not below the threshold {self.threshold}")
        if self.f_P_lambda < self.threshold * (1.0 - rel_tol):
            problems.append(f"f_P_lambda={self.f_P_lambda} is below the threshold {self.threshold}")
        if not rhp_condition(self.spec_P, self.p).holds:
            problems.append("spec_P fails the reverse Hölder condition")
        mapped = np.array(lambda_spec(self.spec_P, self.lam).s)
        gap = float(np.max(np.abs(mapped - np.array(self.spec_P_lambda.s))))
        if gap > 1e-12:
            problems.append(f"lambda-image of spec_P misses spec_P_lambda by {gap}")
        if problems:
            raise VerificationFailed(f"Certificate for p={self.p}: " + "; ".join(problems))


def build_counterexample(
    p: float,
    delta_margin: float = DELTA_MARGIN,
    overshoot: float = OVERSHOOT,
    xtol: float = BISECT_XTOL,
    residual: float = BISECT_RESIDUAL,
    maxiter: int = BISECT_MAXITER,
    eps_floor: float = EPS_FLOOR,
) -> CounterexampleCert:
    """Construct P in RH_p and lambda in (0, 1) with P_lambda outside RH_p.

    `overshoot` moves a_p from the exact root of h(a) = 2^{n/p} towards
    a_* = 2^{n/p} / 2^n; zero puts P_lambda exactly on the boundary.
    """
    _check_exponent(p)
    if not 0.0 < delta_margin < 1.0:
        raise OutOfRange(f"delta_margin must lie in (0, 1), got {delta_margin}")
    if not 0.0 <= overshoot < 1.0:
        raise OutOfRange(f"overshoot must lie in [0, 1), got {overshoot}")

    n = minimal_period(p)
    threshold = 2.0 ** (n / p)
    logger.info("Building counterexample for p=%s: period n=%d, threshold %.12g", p, n, threshold)

    if max_on_line(n, 0.0) < threshold:
        case = "root"
        a_root = _bisect(
            lambda a: max_on_line(n, a) - threshold,
            0.0,
            1.0 / (n + 1),
            "h(a) = threshold",
            xtol,
            maxiter,
        )
        _check_residual(max_on_line(n, a_root), threshold, "h(a) = threshold", residual)
        a_star = threshold / 2.0 ** n
        a_p = a_root + overshoot * (a_star - a_root)
    else:
        case = "small"
        a_p = min(threshold / 2.0 ** (n + 1), 1.0 / (2.0 * (n + 1)))
    logger.info("Case %s: a_p=%.15g", case, a_p)

    geometry = line_geometry(n, a_p)
    g0 = geometry.g(0.0)
    target = g0 + delta_margin * (threshold - g0)
    t_P = _bisect(
        lambda t: geometry.g(t) - target, 0.0, geometry.t_m, "g(t) = target", xtol, maxiter
    )
    _check_residual(geometry.g(t_P), target, "g(t) = target", residual)
    lam = (1.0 - geometry.t_m) / (1.0 - t_P)
    logger.info("t_m=%.15g, t_P=%.15g, lambda=%.15g", geometry.t_m, t_P, lam)

    spec_P = PeriodicSpec(geometry.point(t_P), eps_floor)
    spec_P_lambda = PeriodicSpec(geometry.point(geometry.t_m), eps_floor)
    cert = CounterexampleCert(
        p=p,
        n=n,
        a_p=a_p,
        t_P=t_P,
        t_m=geometry.t_m,
        lam=lam,
        spec_P=spec_P,
        spec_P_lambda=spec_P_lambda,
        f_P=rhp_condition(spec_P, p).value,
        f_P_lambda=rhp_condition(spec_P_lambda, p).value,
        threshold=threshold,
        case=case,
        delta_margin=delta_margin,
        overshoot=overshoot,
    )
    cert.verify()
    return cert
