"""
Shared plumbing of the ovf management commands.

Exit codes: 0 when every check passes, 1 for a mathematical failure (the report names
the witness), 2 for malformed input or invalid parameters.
"""
import io
import logging
import time
from pathlib import Path
from typing import Any, NoReturn

from django.core.exceptions import ValidationError as DjangoValidationError
from django.core.management.base import BaseCommand, CommandError
from rest_framework.exceptions import ParseError
from rest_framework.exceptions import ValidationError as DRFValidationError
from rest_framework.parsers import JSONParser

from ..encoders import read_json, write_json
from ..reports import CheckRecord, Report, RunConfig, summary_table, write_report
from ..serializers import RunConfigSerializer

logger = logging.getLogger(__name__)

MATH_FAILURE = 1
MALFORMED_INPUT = 2


def _describe(exc: Exception) -> str:
    if isinstance(exc, DRFValidationError):
        return str(exc.detail)
    if isinstance(exc, DjangoValidationError):
        return "; ".join(exc.messages)
    return str(exc)


class OvfCommand(BaseCommand):
    """Base class: input loading, run config validation and report emission."""

    requires_system_checks: list[str] = []

    def add_seed_argument(self, parser):
        parser.add_argument("--seed", type=int, default=None, help="RNG seed (64-bit unsigned)")

    def add_tolerance_argument(self, parser):
        parser.add_argument("--tol", type=float, default=None, help="Residual tolerance")

    def add_timing_argument(self, parser):
        parser.add_argument(
            "--timing",
            action="store_true",
            help="Record wall time in the report (breaks byte-identical reruns)",
        )

    def malformed(self, message: str) -> CommandError:
        return CommandError(message, returncode=MALFORMED_INPUT)

    def run_config(self, command: str, **values: Any) -> RunConfig:
        serializer = RunConfigSerializer(data={"command": command, **values})
        if not serializer.is_valid():
            raise self.malformed(f"Invalid parameters: {dict(serializer.errors)}")
        return serializer.save()

    def load(
        self, serializer_class: Any, path: str | None = None, data: str | None = None, **context: Any
    ) -> Any:
        """Parse and validate one JSON input; any problem exits with code 2."""
        try:
            if data is not None:
                payload = JSONParser().parse(io.BytesIO(data.encode("utf-8")))
            else:
                payload = read_json(path)
            serializer = serializer_class(data=payload, context=context)
            serializer.is_valid(raise_exception=True)
            loaded = serializer.save()
            logger.debug("Loaded %s from %s", type(loaded).__name__, path or "inline data")
            return loaded
        except OSError as exc:
            raise self.malformed(f"Cannot read {path}: {exc}")
        except (ParseError, DRFValidationError, DjangoValidationError) as exc:
            source = path if path is not None else "inline data"
            raise self.malformed(f"Malformed input in {source}: {_describe(exc)}")

    def write_output(self, path: str, payload: Any) -> None:
        write_json(path, payload)
        self.stdout.write(f"Wrote {path}")

    def start_timer(self) -> None:
        self._started = time.perf_counter()

    def emit(
        self,
        config: RunConfig,
        records: list[CheckRecord],
        report_path: str | None,
        outputs: dict[str, Any] | None = None,
        timing: bool = False,
    ) -> Report:
        """Print the summary table and write the report."""
        report = Report(command=config.command, config=config.as_dict(), records=list(records))
        if outputs:
            report.outputs = outputs
        if timing:
            report.wall_time = time.perf_counter() - getattr(self, "_started", time.perf_counter())
        if records:
            self.stdout.write(summary_table(records))
        if report_path:
            write_report(report_path, report)
        return report

    def fail_with(
        self,
        config: RunConfig,
        records: list[CheckRecord],
        report_path: str | None,
        timing: bool = False,
    ) -> NoReturn:
        self.emit(config, records, report_path, timing=timing)
        failed = [record for record in records if not record.passed]
        for record in failed:
            if record.witnesses:
                self.stderr.write(f"{record.name}: {record.witnesses[0]}")
        names = ", ".join(record.name for record in failed) or "unknown"
        raise CommandError(f"Checks failed: {names}", returncode=MATH_FAILURE)

    def finish(
        self,
        config: RunConfig,
        records: list[CheckRecord],
        report_path: str | None,
        outputs: dict[str, Any] | None = None,
        timing: bool = False,
    ) -> Report:
        """Emit the report; exit with code 1 unless every record passed."""
        if not all(record.passed for record in records):
            self.fail_with(config, records, report_path, timing=timing)
        report = self.emit(config, records, report_path, outputs=outputs, timing=timing)
        self.stdout.write(self.style.SUCCESS(f"{config.command}: all checks passed"))
        return report


def error_record(exc: DjangoValidationError) -> CheckRecord:
    """A failed record standing for an error raised before any residual was computed."""
    params = getattr(exc, "params", None) or {}
    return CheckRecord(
        name=exc.code or "error",
        max_residual=1.0,
        tolerance=0.0,
        details={"message": "; ".join(exc.messages), **{k: str(v) for k, v in params.items()}},
    )


def report_path_for(output: str) -> str:
    """``pair.json`` -> ``pair.report.json``."""
    path = Path(output)
    return str(path.with_name(f"{path.stem}.report{path.suffix or '.json'}"))
