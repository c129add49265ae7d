"""JSON and CSV readers/writers for trees, series, specs, certificates and tables."""

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

from src.classes import ClassReport
from src.config import EPS_FLOOR
from src.dyadic import DyadicIndex, HaarSeries, WeightTree
from src.errors import VerificationFailed
from src.periodic import CounterexampleCert, PeriodicSpec


def tree_to_json(tree: WeightTree) -> dict:
    return {"depth": tree.depth, "splits": tree.splits.tolist()}


def tree_from_json(data: dict, eps_floor: float = EPS_FLOOR) -> WeightTree:
    return WeightTree(int(data["depth"]), data["splits"], eps_floor)


def series_to_json(series: HaarSeries) -> dict:
    return {
        "depth": series.depth,
        "coeffs": [
            {"level": index.level, "pos": index.position, "b": value}
            for index, value in series.items()
        ],
    }


def series_from_json(data: dict) -> HaarSeries:
    mapping = {}
    for entry in data["coeffs"]:
        mapping[DyadicIndex(int(entry["level"]), int(entry["pos"]))] = float(entry["b"])
    return HaarSeries.from_mapping(int(data["depth"]), mapping)


def spec_to_json(spec: PeriodicSpec) -> dict:
    return {"period": spec.n, "s": list(spec.s)}


def spec_from_json(data: dict, eps_floor: float = EPS_FLOOR) -> PeriodicSpec:
    values = [float(v) for v in data["s"]]
    if int(data["period"]) != len(values):
        raise ValueError(f"period is {data['period']} but {len(values)} splits were given")
    return PeriodicSpec(tuple(values), eps_floor)


def cert_to_json(cert: CounterexampleCert) -> dict:
    margin_P, margin_P_lambda = cert.margins
    return {
        "p": cert.p,
        "n": cert.n,
        "case": cert.case,
        "a_p": cert.a_p,
        "t_P": cert.t_P,
        "t_m": cert.t_m,
        "lambda": cert.lam,
        "delta_margin": cert.delta_margin,
        "overshoot": cert.overshoot,
        "threshold": cert.threshold,
        "f_P": cert.f_P,
        "f_P_lambda": cert.f_P_lambda,
        "margin_P": margin_P,
        "margin_P_lambda": margin_P_lambda,
        "spec_P": spec_to_json(cert.spec_P),
        "spec_P_lambda": spec_to_json(cert.spec_P_lambda),
    }


def cert_from_json(data: dict, eps_floor: float = EPS_FLOOR) -> CounterexampleCert:
    cert = CounterexampleCert(
        p=float(data["p"]),
        n=int(data["n"]),
        a_p=float(data["a_p"]),
        t_P=float(data["t_P"]),
        t_m=float(data["t_m"]),
        lam=float(data["lambda"]),
        spec_P=spec_from_json(data["spec_P"], eps_floor),
        spec_P_lambda=spec_from_json(data["spec_P_lambda"], eps_floor),
        f_P=float(data["f_P"]),
        f_P_lambda=float(data["f_P_lambda"]),
        threshold=float(data["threshold"]),
        case=str(data["case"]),
        delta_margin=float(data["delta_margin"]),
        overshoot=float(data["overshoot"]),
    )
    cert.verify()
    return cert


def load_input(text: str, eps_floor: float = EPS_FLOOR) -> WeightTree | HaarSeries | PeriodicSpec:
    """Parse a weight tree, Haar series or periodic spec, recognized by its keys."""
    data = json.loads(text)
    if not isinstance(data, dict):
        raise ValueError("Input must be a JSON object")
    if "splits" in data:
        return tree_from_json(data, eps_floor)
    if "coeffs" in data:
        return series_from_json(data)
    if "period" in data:
        return spec_from_json(data, eps_floor)
    raise ValueError("Input needs one of the keys 'splits', 'coeffs' or 'period'")


def format_number(value) -> str:
    """17 significant digits, '.' decimal point; refuses NaN and infinities."""
    if value is None:
        return ""
    if isinstance(value, bool) or isinstance(value, (int, str)):
        return str(value)
    if not math.isfinite(value):
        raise VerificationFailed(f"Refusing to emit non-finite value {value}")
    return format(float(value), ".17g")


def rows_to_csv(rows: list[dict]) -> str:
    columns = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_number(row.get(column)) for column in columns])
    return buffer.getvalue()


def to_json_text(data) -> str:
    try:
        return json.dumps(data, indent=2, allow_nan=False) + "\n"
    except ValueError as e:
        raise VerificationFailed(f"Refusing to emit non-finite JSON: {e}") from e


def _file_mode() -> int:
    """The mode a plain open() would give a new file under the current umask."""
    umask = os.umask(0)
    os.umask(umask)
    return 0o666 & ~umask


def write_text(path: Path | None, text: str) -> None:
    """Write atomically (temp file in the same directory, then rename); stdout when path is None."""
    if path is None:
        print(text, end="")
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        # mkstemp creates the file owner-only
        os.chmod(tmp_name, _file_mode())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def report_to_json(report: ClassReport) -> dict:
    return {
        "depth": report.depth,
        "doubling_const": report.doubling_const,
        "ainf_const": report.ainf_const,
        "carleson_norm": report.carleson_norm,
        "a1_const": report.a1_const,
        "per_exponent": [
            {
                "p": entry.p,
                "rhp_const": entry.rhp_const,
                "ap_const": entry.ap_const,
                "buckley_const": entry.buckley_const,
            }
            for entry in report.per_exponent
        ],
        "witnesses": {
            name: {"level": index.level, "pos": index.position}
            for name, index in report.witnesses.items()
        },
    }
