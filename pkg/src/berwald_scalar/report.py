"""Curvature dumps at user points, point-file parsing and report serialization."""

from __future__ import annotations

import csv
import io
import itertools
import json
from collections.abc import Sequence
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import ValidationError

from .classify import ClassificationResult
from .errors import DomainError, ParseError
from .indicatrix2d import laplace1_residuals, residual_rows
from .metric_core import MIN_FIBER_NORM, MetricSpec, PointOnTM, require_domain
from .spray_curvature import CurvatureBundle, curvature_bundle
from .verify import VerificationReport, VerificationRun
from .volume_scurv import VolumeForm

OutputFormat = Literal["json", "csv"]

# bundle fields written per point, in column order
REPORT_FIELDS = (
    "F",
    "g",
    "ginv",
    "A",
    "C",
    "h",
    "G",
    "N",
    "Gjk",
    "B",
    "Gamma",
    "L",
    "J",
    "E",
    "e",
    "tau",
    "S",
    "Stilde",
    "relation",
    "isotropy",
)


def expected_header(n: int) -> list[str]:
    return [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)]


def parse_points(text: str, n: int) -> PointOnTM:
    """
    Parse a CSV point file with header ``x1..xn,y1..yn``.

    Args:
        text: File contents
        n: Dimension of the metric

    Returns:
        Batched PointOnTM, one point per data row

    Raises:
        ParseError: On a wrong header or a malformed row, naming the line
        DomainError: On a fiber vector of norm below 1e-8, naming the point and line
    """
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ParseError("point file is empty")
    header = [cell.strip() for cell in rows[0]]
    if header != expected_header(n):
        raise ParseError(f"expected header {','.join(expected_header(n))}", line=1)

    values: list[list[float]] = []
    lines: list[int] = []
    for line, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 2 * n:
            raise ParseError(f"expected {2 * n} columns, got {len(row)}", line=line)
        try:
            values.append([float(cell) for cell in row])
        except ValueError as e:
            raise ParseError(f"not a number: {e}", line=line) from e
        lines.append(line)
    if not values:
        raise ParseError("point file has no points")
    data = np.asarray(values)
    if not np.all(np.isfinite(data)):
        raise ParseError("point file contains non-finite values")
    short = np.flatnonzero(np.linalg.norm(data[:, n:], axis=1) < MIN_FIBER_NORM)
    if short.size:
        index = int(short[0])
        raise DomainError(
            f"point {index} (line {lines[index]}): fiber vector below {MIN_FIBER_NORM} in norm"
        )
    return PointOnTM(data[:, :n], data[:, n:])


def read_points(path: Path, n: int) -> PointOnTM:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read point file {path}: {e}") from e
    return parse_points(text, n)


def _check_points(m: MetricSpec, points: PointOnTM) -> None:
    for index in range(points.count):
        try:
            require_domain(m, points.take(index))
        except DomainError as e:
            raise DomainError(f"point {index}: {e}") from e


def _field(bundle: CurvatureBundle, name: str) -> np.ndarray | None:
    value = getattr(bundle, name)
    return None if value is None else np.asarray(value)


def _point_record(bundle: CurvatureBundle, index: int) -> dict[str, Any]:
    record: dict[str, Any] = {
        "index": index,
        "x": bundle.point.x[index].tolist(),
        "y": bundle.point.y[index].tolist(),
    }
    for name in REPORT_FIELDS:
        value = _field(bundle, name)
        if value is not None:
            record[name] = value[index].tolist()
    return record


def _columns(bundle: CurvatureBundle) -> list[tuple[str, str, tuple[int, ...]]]:
    """(column, field, tensor index) triples; tensor indices are written 1-based."""
    columns = []
    for name in REPORT_FIELDS:
        value = _field(bundle, name)
        if value is None:
            continue
        shape = value.shape[1:]
        for idx in itertools.product(*(range(size) for size in shape)):
            suffix = "_" + "".join(str(i + 1) for i in idx) if idx else ""
            columns.append((name + suffix, name, idx))
    return columns


def report(
    m: MetricSpec, vf: VolumeForm | None, points: PointOnTM, fmt: OutputFormat = "json"
) -> str:
    """
    Curvature dump at every point, as JSON or CSV.

    Args:
        m: Metric
        vf: Volume form; tau and S columns are omitted without one
        points: Batched points
        fmt: "json" or "csv"

    Returns:
        Report text

    Raises:
        DomainError: Naming the index of the first point outside the domain
    """
    _check_points(m, points)
    bundle = curvature_bundle(m, points, vf)

    if fmt == "json":
        document = {
            "metric": m.label,
            "volume": None if vf is None else vf.label,
            "points": [_point_record(bundle, i) for i in range(points.count)],
        }
        return json.dumps(document, indent=2) + "\n"

    n = m.dimension
    columns = _columns(bundle)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(expected_header(n) + [column for column, _, _ in columns])
    for i in range(points.count):
        row: list[Any] = [*bundle.point.x[i].tolist(), *bundle.point.y[i].tolist()]
        for _, name, idx in columns:
            value = _field(bundle, name)
            assert value is not None
            row.append(repr(float(value[(i, *idx)])))
        writer.writerow(row)
    return buffer.getvalue()


def residual_csv(m: MetricSpec, vf: VolumeForm, x: Any, N: int | None = None) -> str:
    """(theta, residual) rows of the fiber equation of S at one base point (n = 2)."""
    curve, residual = laplace1_residuals(m, vf, x, N)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["theta", "residual"])
    for theta, value in residual_rows(curve, residual):
        writer.writerow([repr(theta), repr(value)])
    return buffer.getvalue()


# -----------------------------------------------------------------------------
# Serialization
# -----------------------------------------------------------------------------


def dump_verification(run: VerificationRun, fmt: OutputFormat = "json") -> str:
    if fmt == "json":
        return run.model_dump_json(indent=2) + "\n"
    buffer = io.StringIO()
    fields = list(VerificationReport.model_fields)
    writer = csv.DictWriter(buffer, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for item in run.reports:
        row = item.model_dump(mode="json")
        row["resolutions"] = ";".join(f"{k}={v}" for k, v in row["resolutions"].items())
        writer.writerow(row)
    return buffer.getvalue()


def load_verification(text: str) -> VerificationRun:
    """Parse a JSON verification run."""
    try:
        return VerificationRun.model_validate_json(text)
    except ValidationError as e:
        raise ParseError(f"invalid verification report: {e.errors()[0]['msg']}") from e


def dump_classification(result: ClassificationResult, fmt: OutputFormat = "json") -> str:
    if fmt == "json":
        return result.model_dump_json(indent=2) + "\n"
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["label", "residual", "present"])
    for label, residual in result.residuals.items():
        writer.writerow([label, repr(residual), label in result.labels])
    return buffer.getvalue()


def failed_identities(reports: Sequence[VerificationReport]) -> list[str]:
    return sorted({f"{r.identity} on {r.metric}" for r in reports if r.verdict == "fail"})
