"""CLI entry point for the dyadic weights lab."""

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from src.classes import class_report
from src.config import (
    DELTA_MARGIN,
    EPS_FLOOR,
    MAX_DEPTH,
    MAX_PARAPRODUCT_DEPTH,
    OVERSHOOT,
    PARAEXP_EPS,
    SEED,
    TRIALS,
)
from src.dyadic import HaarSeries, WeightTree, haar_coeffs_from_tree, tree_from_haar_coeffs
from src.errors import InvariantViolation, VerificationFailed
from src.formats import (
    cert_from_json,
    cert_to_json,
    load_input,
    report_to_json,
    rows_to_csv,
    to_json_text,
    write_text,
)
from src.paraexp import lambda_op
from src.paraproduct import resolvent_sweep
from src.periodic import PeriodicSpec, build_counterexample, periodic_weight, rhp_condition, rhp_constant_periodic
from src.sweeps import counterexample_table, lambda_sweep, table_problems

EXIT_BAD_INPUT = 2
EXIT_INVARIANT = 3
EXIT_VERIFICATION = 4

# depth grids used when --depth is not given and the input has no depth of its own
DEFAULT_DEPTHS = {
    "check": (12,),
    "counterexample": (24,),
    "lambda-sweep": (12,),
    "paraproduct": (8, 10, 12),
}


def parse_float_list(value: str) -> list[float]:
    """Parse '1.5,2,4' into floats."""
    items = [item.strip() for item in value.split(",") if item.strip()]
    if not items:
        raise ValueError(f"Expected a comma-separated list of numbers, got '{value}'")
    return [float(item) for item in items]


def parse_int_list(value: str) -> list[int]:
    items = [item.strip() for item in value.split(",") if item.strip()]
    if not items:
        raise ValueError(f"Expected a comma-separated list of integers, got '{value}'")
    return [int(item) for item in items]


def parse_grid(value: str) -> list[float]:
    """Parse 'start:stop:step' (stop included) or a comma-separated list."""
    if ":" not in value:
        return parse_float_list(value)
    parts = value.split(":")
    if len(parts) != 3:
        raise ValueError(f"Grid must look like start:stop:step, got '{value}'")
    start, stop, step = (float(part) for part in parts)
    if step <= 0:
        raise ValueError(f"Grid step must be positive, got {step}")
    if stop < start:
        raise ValueError(f"Grid stop {stop} is below start {start}")
    count = math.floor((stop - start) / step + 1e-9)
    grid = [min(round(start + i * step, 12), stop) for i in range(count + 1)]
    if grid[-1] < stop - 1e-12:
        grid.append(stop)
    return grid


@dataclass
class RunConfig:
    command: str
    input_path: Path | None = None
    periodic: tuple[float, ...] | None = None
    depths: list[int] | None = None
    ps: list[float] = field(default_factory=lambda: [2.0])
    lambdas: list[float] = field(default_factory=lambda: [1.0])
    out: Path | None = None
    fmt: str = "json"
    seed: int = SEED
    eps_floor: float = EPS_FLOOR
    eps: float = PARAEXP_EPS
    trials: int = TRIALS
    delta_margin: float = DELTA_MARGIN
    overshoot: float = OVERSHOOT
    power_baseline: bool = False
    certificate: Path | None = None

    def __post_init__(self) -> None:
        limit = MAX_PARAPRODUCT_DEPTH if self.command == "paraproduct" else MAX_DEPTH
        for depth in self.depths or ():
            if not 1 <= depth <= limit:
                raise ValueError(f"Depth must lie in [1, {limit}], got {depth}")
        for p in self.ps:
            if not p > 1.0:
                raise ValueError(f"Every p must be greater than 1, got {p}")
        for lam in self.lambdas:
            if not -1.0 <= lam <= 1.0:
                raise ValueError(f"Every lambda must lie in [-1, 1], got {lam}")
        if self.trials < 1:
            raise ValueError(f"--trials must be at least 1, got {self.trials}")
        if self.seed < 0:
            raise ValueError(f"--seed must be non-negative, got {self.seed}")


def _load_source(config: RunConfig) -> WeightTree | HaarSeries | PeriodicSpec:
    if config.periodic is not None:
        return PeriodicSpec(config.periodic, config.eps_floor)
    if config.input_path is None:
        raise ValueError("Give a weight with --input PATH or --periodic s1,s2,...")
    return load_input(config.input_path.read_text(), config.eps_floor)


def _weight_at(source, depth: int, eps_floor: float) -> WeightTree:
    if isinstance(source, PeriodicSpec):
        return periodic_weight(source, depth)
    if isinstance(source, HaarSeries):
        return tree_from_haar_coeffs(source.truncated(depth), eps_floor)
    if depth > source.depth:
        raise ValueError(f"Depth {depth} exceeds the input tree's depth {source.depth}")
    return source.truncated(depth)


def _depths_for(config: RunConfig, source=None) -> list[int]:
    """--depth when given, else the input's own depth, else the command default."""
    if config.depths is not None:
        return config.depths
    if isinstance(source, (WeightTree, HaarSeries)) and config.command != "counterexample":
        limit = MAX_PARAPRODUCT_DEPTH if config.command == "paraproduct" else MAX_DEPTH
        return [min(source.depth, limit)]
    return list(DEFAULT_DEPTHS[config.command])


def _emit(config: RunConfig, json_data, rows: list[dict]) -> None:
    text = to_json_text(json_data) if config.fmt == "json" else rows_to_csv(rows)
    write_text(config.out, text)
    if config.out is not None:
        print(f"Wrote {len(rows)} rows to {config.out}", file=sys.stderr)


def cmd_check(config: RunConfig) -> None:
    source = _load_source(config)
    reports, rows = [], []
    for depth in _depths_for(config, source):
        for lam in config.lambdas:
            tree = lambda_op(_weight_at(source, depth, config.eps_floor), lam)
            report = class_report(tree, config.ps)
            entry = {"depth": depth, "lambda": lam, "report": report_to_json(report)}
            for row in report.as_rows():
                row = {"lambda": lam, **row}
                if isinstance(source, PeriodicSpec) and lam == 1.0 and rhp_condition(source, row["p"]).holds:
                    row["rhp_constant_periodic"] = rhp_constant_periodic(source, row["p"])
                rows.append(row)
            reports.append(entry)
    _emit(config, {"reports": reports}, rows)


def cmd_counterexample(config: RunConfig) -> None:
    max_depth = max(_depths_for(config))
    certificates, rows = [], []
    for p in config.ps:
        cert = build_counterexample(p, config.delta_margin, config.overshoot, eps_floor=config.eps_floor)
        table = counterexample_table(cert, max_depth=max_depth)
        problems = table_problems(table)
        if problems:
            raise VerificationFailed(f"Counterexample table for p={p}: " + "; ".join(problems))
        print(f"p={p}: n={cert.n}, lambda={cert.lam:.6f}, verification PASS", file=sys.stderr)
        certificates.append(
            {
                "certificate": cert_to_json(cert),
                "verification": "PASS",
                "table": [row.as_row() for row in table],
            }
        )
        rows.extend(row.as_row() for row in table)
    _emit(config, {"certificates": certificates}, rows)


def cmd_lambda_sweep(config: RunConfig) -> None:
    source = _load_source(config)
    rows = []
    for depth in _depths_for(config, source):
        tree = _weight_at(source, depth, config.eps_floor)
        for row in lambda_sweep(tree, config.lambdas, config.ps, config.power_baseline):
            rows.append({"depth": depth, **row.as_row()})
    _emit(config, {"rows": rows}, rows)


def cmd_paraproduct(config: RunConfig) -> None:
    lambdas = list(config.lambdas)
    if config.certificate is not None:
        data = json.loads(config.certificate.read_text())
        # accept the whole 'counterexample' output; its first certificate is used
        if "certificates" in data:
            if not data["certificates"]:
                raise ValueError(f"{config.certificate} contains no certificates")
            data = data["certificates"][0]["certificate"]
        cert = cert_from_json(data, config.eps_floor)
        source = cert.spec_P
        if cert.lam not in lambdas:
            lambdas.append(cert.lam)
    else:
        source = _load_source(config)

    depths = _depths_for(config, source)
    deepest = max(depths)
    if isinstance(source, HaarSeries):
        series = source
    else:
        series = haar_coeffs_from_tree(_weight_at(source, deepest, config.eps_floor))

    rows = []
    for p in config.ps:
        sweep = resolvent_sweep(series, p, depths, lambdas, config.trials, config.seed, config.eps)
        rows.extend(row.as_row() for row in sweep)
    _emit(config, {"rows": rows}, rows)


COMMANDS = {
    "check": cmd_check,
    "counterexample": cmd_counterexample,
    "lambda-sweep": cmd_lambda_sweep,
    "paraproduct": cmd_paraproduct,
}


def _add_common(p: argparse.ArgumentParser, depth_help: str, fmt_default: str) -> None:
    source = p.add_mutually_exclusive_group()
    source.add_argument("--input", type=Path, help="JSON weight tree, Haar series or periodic spec")
    source.add_argument("--periodic", help="Inline periodic spec, e.g. 0.6,0.7")
    p.add_argument("--depth", help=f"Depth or comma-separated depths (default: {depth_help})")
    p.add_argument("--p", default="2", dest="p", help="Comma-separated exponents (default: 2)")
    p.add_argument("--lambda", default="1", dest="lam", help="Grid start:stop:step or list (default: 1)")
    p.add_argument("--out", type=Path, help="Output file (default: stdout)")
    p.add_argument("--format", choices=["json", "csv"], default=fmt_default, dest="fmt")
    p.add_argument("--seed", type=int, default=SEED)
    p.add_argument("--eps-floor", type=float, default=EPS_FLOOR, dest="eps_floor")
    p.add_argument("--eps", type=float, default=PARAEXP_EPS)
    p.add_argument("--verbose", action="store_true", help="Log progress to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Dyadic weights lab: class constants, lambda-sweeps, RH_p counterexamples and paraproduct resolvents"
    )
    sub = parser.add_subparsers(dest="command")

    # check
    p_check = sub.add_parser("check", help="Class report for a weight")
    _add_common(p_check, "the input's depth, 12 for --periodic", "json")

    # counterexample
    p_counter = sub.add_parser("counterexample", help="Build and verify RH_p counterexamples")
    _add_common(p_counter, "24", "json")
    p_counter.add_argument("--delta-margin", type=float, default=DELTA_MARGIN, dest="delta_margin")
    p_counter.add_argument("--overshoot", type=float, default=OVERSHOOT)

    # lambda-sweep
    p_sweep = sub.add_parser("lambda-sweep", help="Class constants of w_lambda over a lambda grid")
    _add_common(p_sweep, "the input's depth, 12 for --periodic", "csv")
    p_sweep.add_argument(
        "--power-baseline",
        action="store_true",
        dest="power_baseline",
        help="Add the renormalized power w^lambda for comparison",
    )

    # paraproduct
    p_para = sub.add_parser("paraproduct", help="Resolvent norm bounds next to RH_p of w_lambda")
    _add_common(p_para, "the input's depth up to 14, 8,10,12 for --periodic", "csv")
    p_para.add_argument("--trials", type=int, default=TRIALS)
    p_para.add_argument(
        "--from-certificate",
        type=Path,
        dest="certificate",
        help="Use the weight and lambda of a certificate written by 'counterexample'",
    )
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=args.command,
        input_path=args.input,
        periodic=tuple(parse_float_list(args.periodic)) if args.periodic else None,
        depths=parse_int_list(args.depth) if args.depth else None,
        ps=parse_float_list(args.p),
        lambdas=parse_grid(args.lam),
        out=args.out,
        fmt=args.fmt,
        seed=args.seed,
        eps_floor=args.eps_floor,
        eps=args.eps,
        trials=getattr(args, "trials", TRIALS),
        delta_margin=getattr(args, "delta_margin", DELTA_MARGIN),
        overshoot=getattr(args, "overshoot", OVERSHOOT),
        power_baseline=getattr(args, "power_baseline", False),
        certificate=getattr(args, "certificate", None),
    )


def main(argv: list[str] | None = None) -> None:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_help()
        sys.exit(1)

    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    try:
        config = _config_from_args(args)
        COMMANDS[args.command](config)
    except InvariantViolation as e:
        print(f"Invariant violation: {e}", file=sys.stderr)
        sys.exit(EXIT_INVARIANT)
    except VerificationFailed as e:
        print(f"Verification failed: {e}", file=sys.stderr)
        sys.exit(EXIT_VERIFICATION)
    except ArithmeticError as e:
        print(f"Numerical failure: {e}", file=sys.stderr)
        sys.exit(EXIT_VERIFICATION)
    except (ValueError, KeyError, TypeError, OSError) as e:
        print(f"Bad input: {e}", file=sys.stderr)
        sys.exit(EXIT_BAD_INPUT)


if __name__ == "__main__":
    main()
