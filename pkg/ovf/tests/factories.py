import factory
import numpy as np

from ovf.measure_algebra import CanonicalProjection, MeasureSpace
from ovf.refinement import ScalarFieldProfile, builtin_profile
from ovf.synthesis import DIRECT_SUM, MIXED, FactorCoordinates, GeneratorSpec, sample_coordinates


class MeasureSpaceFactory(factory.Factory):
    """Factory for MeasureSpace."""

    class Meta:
        model = MeasureSpace

    class Params:
        size = 3

    atoms = factory.LazyAttribute(lambda obj: tuple(f"w{k}" for k in range(obj.size)))
    weights = factory.LazyAttribute(lambda obj: np.linspace(0.5, 1.5, obj.size))


class GeneratorSpecFactory(factory.Factory):
    """Factory for GeneratorSpec; parameters are drawn from the seed."""

    class Meta:
        model = GeneratorSpec

    atoms = 4
    case = MIXED
    seed = factory.Sequence(lambda n: n)
    twist = True
    split = None
    dim_policy = DIRECT_SUM

    @classmethod
    def _create(cls, model_class, *args, **kwargs):
        return model_class.sampled(*args, **kwargs)

    _build = _create


class CanonicalProjectionFactory(factory.Factory):
    """Factory for CanonicalProjection: atom 0 in π₁, the others in π."""

    class Meta:
        model = CanonicalProjection

    class Params:
        size = 3

    pi1 = factory.LazyAttribute(lambda obj: [1] + [0] * (obj.size - 1))
    pi2 = factory.LazyAttribute(lambda obj: [0] * obj.size)
    pi3 = factory.LazyAttribute(lambda obj: [0] + [1] * (obj.size - 1))
    a = factory.LazyAttribute(lambda obj: [0.0] + list(np.linspace(0.2, 0.8, obj.size - 1)))
    v = factory.LazyAttribute(
        lambda obj: [1.0] + list(np.exp(1j * np.linspace(0.3, 2.5, obj.size - 1)))
    )

    @classmethod
    def _create(cls, model_class, *args, **kwargs):
        return model_class.build(**kwargs)

    _build = _create


class FactorCoordinatesFactory(factory.Factory):
    """Factory for FactorCoordinates drawn by the coordinate sampler."""

    class Meta:
        model = FactorCoordinates

    seed = factory.Sequence(lambda n: n)

    @classmethod
    def _create(cls, model_class, *args, **kwargs):
        return sample_coordinates(np.random.default_rng(kwargs["seed"]))

    _build = _create


class ScalarFieldProfileFactory(factory.Factory):
    """Factory for the built-in refinement profiles."""

    class Meta:
        model = ScalarFieldProfile

    name = "linear"

    @classmethod
    def _create(cls, model_class, *args, **kwargs):
        return builtin_profile(kwargs["name"])

    _build = _create
