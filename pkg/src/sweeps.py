"""Depth and lambda sweeps that turn the class functionals into tables."""

import logging
from dataclasses import dataclass

from src.classes import ap_functional, buckley_functional, rhp_functional
from src.dyadic import WeightTree, power_weight
from src.errors import OutOfRange
from src.paraexp import lambda_op
from src.periodic import CounterexampleCert, rhp_constant_periodic, rhp_functional_periodic

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CounterexampleRow:
    p: float
    depth: int
    rhp_omega: float
    rhp_omega_lambda: float
    rhp_constant_omega: float

    def as_row(self) -> dict:
        return {
            "p": self.p,
            "depth": self.depth,
            "rhp_omega": self.rhp_omega,
            "rhp_omega_lambda": self.rhp_omega_lambda,
            "rhp_constant_omega": self.rhp_constant_omega,
        }


def default_depths(n: int, max_depth: int) -> list[int]:
    """n+2, 2n+2, ... up to max_depth, always ending at max_depth."""
    if max_depth < n + 2:
        raise OutOfRange(f"Depth {max_depth} is too shallow for period {n} (need at least {n + 2})")
    depths = list(range(n + 2, max_depth + 1, n))
    if depths[-1] != max_depth:
        depths.append(max_depth)
    return depths


def counterexample_table(
    cert: CounterexampleCert, depths: list[int] | None = None, max_depth: int = 24
) -> list[CounterexampleRow]:
    """RH_p constants of the truncated w and w_lambda, side by side.

    Evaluated along the spine, so depths up to the configured cap stay cheap.
    """
    if depths is None:
        depths = default_depths(cert.n, max_depth)
    constant = rhp_constant_periodic(cert.spec_P, cert.p)
    rows = []
    for depth in depths:
        logger.info("Counterexample table for p=%s at depth %d", cert.p, depth)
        rows.append(
            CounterexampleRow(
                p=cert.p,
                depth=depth,
                rhp_omega=rhp_functional_periodic(cert.spec_P, cert.p, depth),
                rhp_omega_lambda=rhp_functional_periodic(cert.spec_P_lambda, cert.p, depth),
                rhp_constant_omega=constant,
            )
        )
    return rows


def table_problems(rows: list[CounterexampleRow], abs_tol: float = 1e-6) -> list[str]:
    """Ways a counterexample table contradicts its certificate; empty when consistent."""
    problems = []
    for row in rows:
        if row.rhp_omega > row.rhp_constant_omega + abs_tol:
            problems.append(
                f"depth {row.depth}: RH_p constant {row.rhp_omega} of w exceeds its limit "
                f"{row.rhp_constant_omega}"
            )
    for earlier, later in zip(rows, rows[1:]):
        if later.rhp_omega_lambda < earlier.rhp_omega_lambda:
            problems.append(
                f"RH_p constant of w_lambda drops from depth {earlier.depth} to {later.depth}"
            )
    if len(rows) > 1 and not rows[-1].rhp_omega_lambda > rows[0].rhp_omega_lambda:
        problems.append("RH_p constant of w_lambda does not grow with depth")
    return problems


@dataclass(frozen=True)
class LambdaRow:
    lam: float
    p: float
    rhp_const: float
    ap_const: float
    buckley_const: float
    rhp_power: float | None = None
    ap_power: float | None = None

    def as_row(self) -> dict:
        row = {
            "lambda": self.lam,
            "p": self.p,
            "rhp_const": self.rhp_const,
            "ap_const": self.ap_const,
            "buckley_const": self.buckley_const,
        }
        if self.rhp_power is not None:
            row["rhp_power"] = self.rhp_power
            row["ap_power"] = self.ap_power
        return row


def lambda_sweep(
    tree: WeightTree, lambdas: list[float], ps: list[float], power_baseline: bool = False
) -> list[LambdaRow]:
    """Class constants of w_lambda per (lambda, p).

    With `power_baseline`, the same constants of the renormalized power w^lambda
    are added for lambda in [0, 1].
    """
    if not lambdas or not ps:
        raise OutOfRange("Lambda and exponent grids must be non-empty")
    rows = []
    for lam in lambdas:
        image = lambda_op(tree, lam)
        powered = power_weight(tree, lam) if power_baseline and 0.0 <= lam <= 1.0 else None
        for p in ps:
            rows.append(
                LambdaRow(
                    lam=lam,
                    p=p,
                    rhp_const=rhp_functional(image, p),
                    ap_const=ap_functional(image, p),
                    buckley_const=buckley_functional(image, p),
                    rhp_power=rhp_functional(powered, p) if powered is not None else None,
                    ap_power=ap_functional(powered, p) if powered is not None else None,
                )
            )
    return rows
