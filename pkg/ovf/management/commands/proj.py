from django.core.exceptions import ValidationError

from ...encoders import dumps
from ...measure_algebra import decompose_projection, materialize, orthogonality_conditions
from ...serializers import (
    BlockElementSerializer,
    CanonicalProjectionSerializer,
    ProjectionPairSerializer,
)
from ..base import OvfCommand

BUILD, PARSE, ORTH = "build", "parse", "orth"


class Command(OvfCommand):
    help = "Canonical projection tools: build a block, parse a block, check orthogonality."

    def add_arguments(self, parser):
        parser.add_argument("action", choices=(BUILD, PARSE, ORTH))
        parser.add_argument("input", nargs="?", default=None, help="Input JSON path")
        parser.add_argument("--data", default=None, help="Inline JSON instead of an input file")
        self.add_tolerance_argument(parser)
        parser.add_argument("-o", "--out", default=None, help="Output JSON path (default: stdout)")

    def handle(self, *args, **options):
        if (options["input"] is None) == (options["data"] is None):
            raise self.malformed("Give exactly one of an input path or --data.")
        config = self.run_config(
            "proj",
            input=options["input"],
            output=options["out"],
            tolerance=options["tol"],
            options={"action": options["action"]},
        )
        source = {"path": options["input"], "data": options["data"]}
        action = options["action"]
        if action == BUILD:
            projection = self.load(CanonicalProjectionSerializer, **source)
            payload = BlockElementSerializer(materialize(projection)).data
        elif action == PARSE:
            block = self.load(BlockElementSerializer, **source)
            try:
                projection = decompose_projection(block, tol=config.tolerance)
            except ValidationError as exc:
                raise self.malformed("; ".join(exc.messages))
            payload = CanonicalProjectionSerializer(projection).data
        else:
            p, q = self.load(ProjectionPairSerializer, **source)
            orthogonal, witnesses = orthogonality_conditions(p, q, tol=config.tolerance)
            product = materialize(p) @ materialize(q)
            payload = {
                "orthogonal": orthogonal,
                "product_residual": product.max_abs(),
                "witnesses": [
                    {"atom": w.atom, "condition": w.condition, "value": w.value} for w in witnesses
                ],
            }
        if options["out"]:
            self.write_output(options["out"], payload)
        else:
            self.stdout.write(dumps(payload), ending="")
