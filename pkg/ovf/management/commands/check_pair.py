from ...serializers import StationaryPairSerializer, VectorFieldTableSerializer
from ...stationarity import check_stationarity
from ..base import OvfCommand


class Command(OvfCommand):
    help = "Check a given (phi, psi) pair file against an instance."

    def add_arguments(self, parser):
        parser.add_argument("instance", help="Instance JSON path")
        parser.add_argument("pair", help="Pair JSON path")
        self.add_tolerance_argument(parser)
        self.add_timing_argument(parser)
        parser.add_argument("-o", "--out", default=None, help="Report JSON path")

    def handle(self, *args, **options):
        self.start_timer()
        config = self.run_config(
            "check_pair",
            input=options["instance"],
            output=options["out"],
            tolerance=options["tol"],
            options={"pair": options["pair"]},
        )
        if options["out"] and options["out"] == options["pair"]:
            raise self.malformed("Report path must differ from the pair path.")
        instance = self.load(VectorFieldTableSerializer, options["instance"])
        pair = self.load(StationaryPairSerializer, options["pair"])
        if not instance.space.same_as(pair.space):
            raise self.malformed("Instance and pair live on different measure spaces.")
        report = check_stationarity(instance, pair, config.tolerance)
        self.finish(config, report.records, options["out"], timing=options["timing"])
