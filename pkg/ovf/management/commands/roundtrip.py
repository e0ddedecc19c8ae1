import numpy as np

from ...conf import resolve
from ...exceptions import SynthesisError
from ...measure_algebra import (
    BlockElement,
    decompose_projection,
    materialize,
    orthogonality_conditions,
    sample_orthogonal_blocks,
)
from ...ovf_core import reductions
from ...reports import CheckRecord, check_record
from ...serializers import VectorFieldTableSerializer
from ...synthesis import synthesize
from ..base import OvfCommand, error_record


class Command(OvfCommand):
    help = "Check synthesize(reductions(F)) == F bit-exactly and the projection round trip."

    def add_arguments(self, parser):
        parser.add_argument("instance", help="Instance JSON path")
        parser.add_argument("--samples", type=int, default=None, help="Sampled projection pairs")
        self.add_seed_argument(parser)
        self.add_tolerance_argument(parser)
        self.add_timing_argument(parser)
        parser.add_argument("-o", "--out", default=None, help="Report JSON path")

    def handle(self, *args, **options):
        self.start_timer()
        config = self.run_config(
            "roundtrip",
            input=options["instance"],
            output=options["out"],
            tolerance=options["tol"],
            samples=options["samples"],
            seed=options["seed"],
        )
        instance = self.load(VectorFieldTableSerializer, options["instance"])
        records = [self.synthesis_record(instance)]
        records.extend(self.projection_records(instance, config))
        self.finish(config, records, options["out"], timing=options["timing"])

    def synthesis_record(self, instance):
        try:
            rebuilt = synthesize(reductions(instance))
        except SynthesisError as exc:
            return error_record(exc)
        gap = np.abs(rebuilt.values - instance.values)
        record = check_record(
            "synthesis_roundtrip",
            gap.reshape(instance.space.size, -1).max(axis=1),
            0.0,
            lambda k: {"atom": k},
        )
        record.details["bit_exact"] = rebuilt.equals(instance)
        return record

    def projection_records(self, instance, config) -> list[CheckRecord]:
        samples = resolve(config.samples, "DEFAULT_SAMPLES")
        tol = resolve(config.tolerance, "PROJECTION_TOLERANCE")
        rng = np.random.default_rng(resolve(config.seed, "DEFAULT_SEED"))
        p, q = sample_orthogonal_blocks(instance.space, rng, samples)
        gaps = np.zeros(samples)
        broken = np.zeros(samples)
        for index in range(samples):
            parsed = decompose_projection(BlockElement(p[index]), tol=1e-9)
            rebuilt = materialize(parsed)
            gaps[index] = np.abs(rebuilt.blocks - p[index]).max()
            if not decompose_projection(rebuilt, tol=1e-9).same_as(parsed, atol=tol):
                gaps[index] = max(gaps[index], 1.0)
            orthogonal, _witnesses = orthogonality_conditions(
                parsed, decompose_projection(BlockElement(q[index]), tol=1e-9), tol=1e-9
            )
            broken[index] = 0.0 if orthogonal else 1.0

        def sample(index: int) -> dict:
            return {"sample": index}

        return [
            check_record("projection_roundtrip", gaps, tol, sample, details={"samples": samples}),
            check_record("orthogonality_conditions", broken, 0.0, sample, details={"samples": samples}),
        ]
