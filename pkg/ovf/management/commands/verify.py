from ...ovf_core import verify_field
from ...serializers import VectorFieldTableSerializer
from ..base import OvfCommand


class Command(OvfCommand):
    help = "Run the orthogonality and structural identity suite on an instance."

    def add_arguments(self, parser):
        parser.add_argument("instance", help="Instance JSON path")
        parser.add_argument("--samples", type=int, default=None, help="Sampled orthogonal pairs")
        parser.add_argument("--trials", type=int, default=None, help="Random center elements")
        self.add_seed_argument(parser)
        self.add_tolerance_argument(parser)
        self.add_timing_argument(parser)
        parser.add_argument("-o", "--out", default=None, help="Report JSON path")

    def handle(self, *args, **options):
        self.start_timer()
        config = self.run_config(
            "verify",
            input=options["instance"],
            output=options["out"],
            tolerance=options["tol"],
            samples=options["samples"],
            trials=options["trials"],
            seed=options["seed"],
        )
        instance = self.load(VectorFieldTableSerializer, options["instance"])
        report = verify_field(
            instance,
            samples=config.samples,
            trials=config.trials,
            seed=config.seed,
            tol=config.tolerance,
        )
        self.finish(config, report.records, options["out"], timing=options["timing"])
