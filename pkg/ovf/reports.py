"""
Check records, verification reports and the run report written by every command.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .encoders import write_json, write_text

logger = logging.getLogger(__name__)

# Failing entries kept per record, worst first.
MAX_WITNESSES = 5


@dataclass
class CheckRecord:
    """Outcome of one named check: worst residual against the tolerance used."""

    name: str
    max_residual: float
    tolerance: float
    witnesses: list[dict[str, Any]] = field(default_factory=list)
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.max_residual <= self.tolerance)

    def as_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "name": self.name,
            "max_residual": float(self.max_residual),
            "tolerance": float(self.tolerance),
            "passed": self.passed,
            "witnesses": self.witnesses,
        }
        if self.details:
            payload["details"] = self.details
        return payload


def check_record(
    name: str,
    residuals: Any,
    tolerance: float,
    describe: Callable[[int], dict[str, Any]],
    details: dict[str, Any] | None = None,
) -> CheckRecord:
    """Build a record from a residual array.

    ``describe`` maps a flat index of ``residuals`` to the witness fields for that entry;
    it is called only for failing entries.
    """
    flat = np.asarray(residuals, dtype=float).reshape(-1)
    worst = float(flat.max(initial=0.0))
    failing = np.flatnonzero(flat > tolerance)
    order = failing[np.argsort(-flat[failing], kind="stable")][:MAX_WITNESSES]
    witnesses = [{**describe(int(index)), "residual": float(flat[index])} for index in order]
    return CheckRecord(
        name=name,
        max_residual=worst,
        tolerance=float(tolerance),
        witnesses=witnesses,
        details=details or {},
    )


@dataclass
class VerificationReport:
    """Ordered collection of check records; passes iff every record passes."""

    records: list[CheckRecord] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(record.passed for record in self.records)

    def add(self, record: CheckRecord) -> CheckRecord:
        self.records.append(record)
        return record

    def extend(self, records: Iterable[CheckRecord]) -> None:
        self.records.extend(records)

    def get(self, name: str) -> CheckRecord:
        for record in self.records:
            if record.name == name:
                return record
        raise KeyError(name)

    def names(self) -> list[str]:
        return [record.name for record in self.records]

    @property
    def max_residuals(self) -> dict[str, float]:
        return {record.name: record.max_residual for record in self.records}

    def failures(self) -> list[CheckRecord]:
        return [record for record in self.records if not record.passed]

    def as_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "records": [record.as_dict() for record in self.records],
        }


@dataclass(frozen=True)
class RunConfig:
    """Validated parameters of one command run, echoed into its report."""

    command: str
    input: str | None = None
    output: str | None = None
    tolerance: float | None = None
    samples: int | None = None
    trials: int | None = None
    seed: int | None = None
    levels: tuple[int, ...] | None = None
    options: dict[str, Any] = field(default_factory=dict)

    def as_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {"command": self.command}
        for name in ("input", "output", "tolerance", "samples", "trials", "seed"):
            value = getattr(self, name)
            if value is not None:
                payload[name] = value
        if self.levels is not None:
            payload["levels"] = list(self.levels)
        payload.update(self.options)
        return payload


@dataclass
class Report:
    """The file a command writes: command echo, config echo, records and outputs."""

    command: str
    config: dict[str, Any]
    records: list[CheckRecord] = field(default_factory=list)
    outputs: dict[str, Any] = field(default_factory=dict)
    wall_time: float | None = None

    @property
    def passed(self) -> bool:
        return all(record.passed for record in self.records)

    def extend(self, records: Iterable[CheckRecord]) -> None:
        self.records.extend(records)

    def as_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "command": self.command,
            "config": self.config,
            "passed": self.passed,
            "records": [record.as_dict() for record in self.records],
        }
        if self.outputs:
            payload["outputs"] = self.outputs
        if self.wall_time is not None:
            payload["wall_time"] = float(self.wall_time)
        return payload


def write_report(path: Any, report: Report) -> None:
    write_json(path, report.as_dict())
    logger.info("Wrote %s report to %s (passed=%s)", report.command, path, report.passed)


def summary_table(records: Sequence[CheckRecord]) -> str:
    """Fixed-width table of record name, worst residual, tolerance and verdict."""
    width = max([len(record.name) for record in records] + [5])
    lines = [f"{'check':<{width}}  {'max_residual':>12}  {'tolerance':>9}  result"]
    for record in records:
        verdict = "PASS" if record.passed else "FAIL"
        lines.append(
            f"{record.name:<{width}}  {record.max_residual:>12.3e}  "
            f"{record.tolerance:>9.1e}  {verdict}"
        )
    return "\n".join(lines)


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(
            [format(value, "#.17g") if isinstance(value, float) else value for value in row]
        )
    return buffer.getvalue()


def write_csv(path: Any, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    write_text(path, render_csv(header, rows))
