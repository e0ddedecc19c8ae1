from django.core.exceptions import ValidationError

from ...refinement import (
    BUILTIN_PROFILES,
    CSV_COLUMNS,
    ScalarFieldProfile,
    builtin_profile,
    convergence_report,
)
from ...reports import write_csv
from ...serializers import ScalarFieldProfileSerializer
from ..base import OvfCommand


class Command(OvfCommand):
    help = "Level-set refinement: error of the partition approximants against the pointwise limit."

    def add_arguments(self, parser):
        source = parser.add_mutually_exclusive_group()
        source.add_argument("--profile", choices=sorted(BUILTIN_PROFILES), default=None)
        source.add_argument("--profile-file", default=None, help="Profile JSON path")
        parser.add_argument("--levels", type=int, nargs="+", default=None, help="Ascending levels n")
        parser.add_argument("--grid", type=int, default=None, help="Dense sampling grid size")
        parser.add_argument("--csv", default=None, help="Error-vs-level CSV path")
        self.add_timing_argument(parser)
        parser.add_argument("-o", "--out", default=None, help="Report JSON path")

    def handle(self, *args, **options):
        self.start_timer()
        if options["grid"] is not None and options["grid"] < 2:
            raise self.malformed("The sampling grid needs at least two points.")
        config = self.run_config(
            "refine",
            input=options["profile_file"],
            output=options["out"],
            levels=options["levels"],
            options={"profile": options["profile"], "csv": options["csv"], "grid": options["grid"]},
        )
        if options["csv"] and options["csv"] in (options["out"], options["profile_file"]):
            raise self.malformed("CSV path must differ from the other paths.")
        profile = self.profile(options)
        report = convergence_report(profile, levels=config.levels, grid=options["grid"])
        for result in report.levels:
            self.stdout.write(
                f"n={result.level:>4}  cells={result.cells:>5}  sup={result.sup_error:.6e}  "
                f"l1={result.l1_error:.6e}"
            )
        constant, spread = report.fitted_rate()
        self.stdout.write(f"fitted C={constant:.6g} (spread {spread:.3g})")
        if options["csv"]:
            write_csv(options["csv"], CSV_COLUMNS, [result.row() for result in report.levels])
        self.finish(
            config,
            report.records(),
            options["out"],
            outputs=report.as_dict(),
            timing=options["timing"],
        )

    def profile(self, options) -> ScalarFieldProfile:
        if options["profile_file"]:
            return self.load(ScalarFieldProfileSerializer, options["profile_file"])
        try:
            return builtin_profile(options["profile"] or "linear")
        except ValidationError as exc:
            raise self.malformed("; ".join(exc.messages))
