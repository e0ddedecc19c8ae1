from django.core.exceptions import ValidationError

from ...serializers import GeneratorSpecSerializer, VectorFieldTableSerializer
from ...synthesis import CASES, DIM_POLICIES, DIRECT_SUM, MIXED, assemble
from ..base import OvfCommand


class Command(OvfCommand):
    help = "Generate an orthogonal vector field instance from per-atom factor fields."

    def add_arguments(self, parser):
        parser.add_argument("--atoms", type=int, required=True, help="Number of atoms")
        parser.add_argument("--case", choices=CASES + (MIXED,), default=MIXED)
        parser.add_argument("--split", type=float, default=None, help="Rank-one split in [0, 1]")
        parser.add_argument("--weights", type=float, nargs="+", default=None, help="Atom masses")
        parser.add_argument("--twist", action="store_true", help="Apply a random unitary twist per atom")
        parser.add_argument("--dim-policy", choices=DIM_POLICIES, default=DIRECT_SUM)
        self.add_seed_argument(parser)
        parser.add_argument("-o", "--out", required=True, help="Instance JSON path")

    def handle(self, *args, **options):
        seed = options["seed"] if options["seed"] is not None else 0
        self.run_config("gen", output=options["out"], seed=seed)
        serializer = GeneratorSpecSerializer(
            data={
                "atoms": options["atoms"],
                "case": options["case"],
                "split": options["split"],
                "seed": seed,
                "twist": options["twist"],
                "weights": options["weights"],
                "dim_policy": options["dim_policy"],
            }
        )
        if not serializer.is_valid():
            raise self.malformed(f"Invalid generator options: {dict(serializer.errors)}")
        try:
            spec = serializer.save()
            instance = assemble(spec)
        except ValidationError as exc:
            raise self.malformed("; ".join(exc.messages))
        self.write_output(options["out"], VectorFieldTableSerializer(instance).data)
        self.stdout.write(
            self.style.SUCCESS(
                f"Generated {spec.atoms} atoms ({', '.join(spec.cases)}) in dimension {instance.hilbert_dim}"
            )
        )
