"""Run reports: per-index comparison rows, summaries, and their JSON/CSV serializations.

JSON floats use Python's shortest round-trip repr; CSV floats are written with 17
significant digits. Neither format carries a timestamp or wall time unless the run
asked for one, so identical runs produce identical files.
"""

import csv
import json
import math
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass, field
from typing import IO, Any, Literal

import numpy as np

BOUND_SLACK = 1e-12

ReportFormat = Literal["json", "csv"]


@dataclass(frozen=True)
class ReportRow:
    index: int
    quantum_estimate: float
    classical_value: float
    abs_error: float
    error_bound: float
    within_bound: bool
    m_hat: int
    oracle_calls: int
    t: int | None = None
    array_id: int | None = None
    raw_estimate: float | None = None
    raw_classical: float | None = None
    peak_theory: tuple[float, float] | None = None
    samples: int | None = None
    low_coverage: bool | None = None


def compare_row(
    index: int,
    estimate: float,
    classical: float,
    bound: float,
    m_hat: int,
    oracle_calls: int,
    **extra: Any,
) -> ReportRow:
    abs_error = abs(float(estimate) - float(classical))
    return ReportRow(
        index=int(index),
        quantum_estimate=float(estimate),
        classical_value=float(classical),
        abs_error=abs_error,
        error_bound=float(bound),
        within_bound=abs_error <= float(bound) + BOUND_SLACK,
        m_hat=int(m_hat),
        oracle_calls=int(oracle_calls),
        **extra,
    )


@dataclass(frozen=True)
class ReportSummary:
    max_abs_error: float
    mean_abs_error: float
    fraction_within_bound: float
    total_oracle_calls: int
    wall_time_ms: float | None = None
    low_coverage_rows: int | None = None


def summarize(
    rows: Sequence[ReportRow], total_oracle_calls: int, wall_time_ms: float | None = None
) -> ReportSummary:
    if not rows:
        return ReportSummary(0.0, 0.0, 1.0, total_oracle_calls, wall_time_ms)
    errors = np.array([row.abs_error for row in rows])
    within = sum(1 for row in rows if row.within_bound)
    sampled = [row for row in rows if row.samples is not None]
    return ReportSummary(
        max_abs_error=float(errors.max()),
        mean_abs_error=float(errors.mean()),
        fraction_within_bound=within / len(rows),
        total_oracle_calls=int(total_oracle_calls),
        wall_time_ms=wall_time_ms,
        low_coverage_rows=sum(1 for row in sampled if row.low_coverage) if sampled else None,
    )


@dataclass(frozen=True)
class SweepRow:
    n: int
    m: int
    alpha: float | None
    max_abs_error: float
    mean_abs_error: float
    mean_error_bound: float
    oracle_calls_per_run: int
    total_oracle_calls: int
    classical_cost: float


@dataclass
class RunReport:
    metadata: dict[str, Any]
    rows: list[Any]
    summary: ReportSummary | None = None
    convergence: list[dict[str, Any]] = field(default_factory=list)

    @property
    def all_within_bound(self) -> bool:
        return all(getattr(row, "within_bound", True) for row in self.rows)

    def to_dict(self) -> dict[str, Any]:
        document: dict[str, Any] = {
            "metadata": _clean(self.metadata),
            "rows": [_row_dict(row) for row in self.rows],
        }
        if self.summary is not None:
            document["summary"] = _row_dict(self.summary)
        if self.convergence:
            document["convergence"] = [_clean(row) for row in self.convergence]
        return document


def _plain(value: Any) -> Any:
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _clean(mapping: dict[str, Any]) -> dict[str, Any]:
    return {key: _plain(value) for key, value in mapping.items() if value is not None}


def _row_dict(row: Any) -> dict[str, Any]:
    return _clean(asdict(row))


def write_json(report: RunReport, stream: IO[str]) -> None:
    json.dump(report.to_dict(), stream, indent=2, allow_nan=False)
    stream.write("\n")


def _format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g") if math.isfinite(value) else str(value)
    if isinstance(value, (list, tuple)):
        return " ".join(_format_cell(v) for v in value)
    return str(value)


def _columns(rows: Iterable[dict[str, Any]]) -> list[str]:
    seen: dict[str, None] = {}
    for row in rows:
        for key in row:
            seen.setdefault(key, None)
    return list(seen)


def _write_table(rows: list[dict[str, Any]], stream: IO[str]) -> None:
    columns = _columns(rows)
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_format_cell(row.get(column)) for column in columns])


def write_csv(report: RunReport, stream: IO[str]) -> None:
    """One line per row; columns absent from every row (e.g. ``t`` for 1D runs) are omitted."""
    _write_table([_row_dict(row) for row in report.rows], stream)


def write_convergence_csv(report: RunReport, stream: IO[str]) -> None:
    _write_table([_clean(row) for row in report.convergence], stream)


def write_report(report: RunReport, stream: IO[str], fmt: ReportFormat = "json") -> None:
    if fmt == "csv":
        write_csv(report, stream)
    else:
        write_json(report, stream)
