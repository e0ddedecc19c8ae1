from ...exceptions import InconsistencyError
from ...serializers import StationaryPairSerializer, VectorFieldTableSerializer
from ...stationarity import solve
from ..base import OvfCommand, error_record, report_path_for


class Command(OvfCommand):
    help = "Compute a stationary pair (phi, psi) for an instance and verify it."

    def add_arguments(self, parser):
        parser.add_argument("instance", help="Instance JSON path")
        parser.add_argument("-o", "--out", required=True, help="Pair JSON path")
        parser.add_argument("--report", default=None, help="Report JSON path (default: <out>.report.json)")
        parser.add_argument("--skip-verify", action="store_true", help="Do not verify the input first")
        parser.add_argument("--samples", type=int, default=None)
        parser.add_argument("--trials", type=int, default=None)
        parser.add_argument(
            "--identity-tol", type=float, default=None, help="Tolerance of the input verification"
        )
        self.add_seed_argument(parser)
        self.add_tolerance_argument(parser)
        self.add_timing_argument(parser)

    def handle(self, *args, **options):
        self.start_timer()
        report_path = options["report"] or report_path_for(options["out"])
        config = self.run_config(
            "stationarize",
            input=options["instance"],
            output=options["out"],
            tolerance=options["tol"],
            samples=options["samples"],
            trials=options["trials"],
            seed=options["seed"],
            options={"skip_verify": options["skip_verify"], "identity_tol": options["identity_tol"]},
        )
        if report_path == config.input:
            raise self.malformed("Report path must differ from the input path.")
        instance = self.load(VectorFieldTableSerializer, options["instance"])
        try:
            outcome = solve(
                instance,
                verify=not options["skip_verify"],
                samples=config.samples,
                trials=config.trials,
                seed=config.seed,
                identity_tol=options["identity_tol"],
                tol=config.tolerance,
            )
        except InconsistencyError as exc:
            self.stderr.write(self.style.ERROR("; ".join(exc.messages)))
            records = exc.report.records if exc.report is not None else [error_record(exc)]
            self.fail_with(config, records, report_path, timing=options["timing"])

        records = list(outcome.report.records)
        if outcome.verification is not None:
            records = outcome.verification.records + records
        self.write_output(options["out"], StationaryPairSerializer(outcome.pair).data)
        self.finish(
            config,
            records,
            report_path,
            outputs={"pair": options["out"], "factors": outcome.factor_table()},
            timing=options["timing"],
        )
