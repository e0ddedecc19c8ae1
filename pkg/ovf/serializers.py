"""
JSON schemas of every persisted type.

Serializers validate raw payloads field by field and ``create()`` the domain object;
``to_representation`` gives the plain structure the deterministic writer dumps.
Complex numbers travel as ``[re, im]``.
"""
import math
from typing import Any

import numpy as np
from django.utils.translation import gettext_lazy as _
from rest_framework import serializers

from .measure_algebra import BlockElement, CanonicalProjection, MeasureSpace
from .ovf_core import FunctionalDensity, VectorFieldTable
from .refinement import PiecewisePolynomial, ScalarFieldProfile
from .reports import RunConfig
from .stationarity import StationaryPair
from .synthesis import CASES, DIM_POLICIES, DIRECT_SUM, MIXED, GeneratorSpec

UINT64_MAX = 2**64 - 1


def complex_pair(value: Any) -> list[float]:
    z = complex(value)
    return [float(z.real), float(z.imag)]


class ComplexField(serializers.Field):
    """A complex number as ``[re, im]``; a bare real number is accepted on input."""

    default_error_messages = {
        "invalid": _("Expected a number or an [re, im] pair."),
        "non_finite": _("Complex entries must be finite."),
    }

    def to_internal_value(self, data):
        if isinstance(data, bool):
            self.fail("invalid")
        if isinstance(data, (int, float)):
            parts = [data, 0.0]
        elif isinstance(data, (list, tuple)) and len(data) == 2:
            parts = list(data)
        else:
            self.fail("invalid")
        if any(isinstance(part, bool) or not isinstance(part, (int, float)) for part in parts):
            self.fail("invalid")
        if not all(math.isfinite(part) for part in parts):
            self.fail("non_finite")
        return complex(float(parts[0]), float(parts[1]))

    def to_representation(self, value):
        return complex_pair(value)


def complex_matrix_field(**kwargs: Any) -> serializers.ListField:
    """A 2×2 complex matrix as nested lists."""
    row = serializers.ListField(child=ComplexField(), min_length=2, max_length=2)
    return serializers.ListField(child=row, min_length=2, max_length=2, **kwargs)


def _matrix(blocks: Any) -> list[list[list[list[float]]]]:
    return [[[complex_pair(z) for z in row] for row in block] for block in np.asarray(blocks)]


class MeasureSpaceSerializer(serializers.Serializer):
    """Serializer for MeasureSpace."""

    atoms = serializers.ListField(child=serializers.CharField(), min_length=1)
    weights = serializers.ListField(child=serializers.FloatField(), min_length=1)

    def validate_atoms(self, value):
        if len(set(value)) != len(value):
            raise serializers.ValidationError(_("Atom identifiers must be unique."))
        return value

    def validate_weights(self, value):
        if any(not math.isfinite(w) or w <= 0 for w in value):
            raise serializers.ValidationError(_("Atom weights must be finite and positive."))
        return value

    def validate(self, attrs):
        if len(attrs["atoms"]) != len(attrs["weights"]):
            raise serializers.ValidationError(
                {"weights": _("Expected one weight per atom.")}
            )
        return attrs

    def create(self, validated_data):
        return MeasureSpace(
            atoms=tuple(validated_data["atoms"]),
            weights=np.asarray(validated_data["weights"]),
        )

    def to_representation(self, instance):
        return {"atoms": list(instance.atoms), "weights": instance.weights.tolist()}


class VectorFieldTableSerializer(serializers.Serializer):
    """An instance: the basis table F(π_k ε_ij), pairs in the order 11, 12, 21, 22."""

    space = MeasureSpaceSerializer()
    hilbert_dim = serializers.IntegerField(min_value=1)
    values = serializers.ListField(
        child=serializers.ListField(
            child=serializers.ListField(child=ComplexField(), min_length=1),
            min_length=4,
            max_length=4,
        ),
        min_length=1,
    )

    def validate(self, attrs):
        atoms = len(attrs["space"]["atoms"])
        if len(attrs["values"]) != atoms:
            raise serializers.ValidationError(
                {"values": _("Expected one row of vectors per atom (%(atoms)s).") % {"atoms": atoms}}
            )
        dim = attrs["hilbert_dim"]
        for row in attrs["values"]:
            if any(len(vector) != dim for vector in row):
                raise serializers.ValidationError(
                    {"values": _("Every vector must have hilbert_dim = %(dim)s entries.") % {"dim": dim}}
                )
        return attrs

    def create(self, validated_data):
        space = MeasureSpaceSerializer().create(validated_data["space"])
        values = np.array(validated_data["values"], dtype=complex)
        return VectorFieldTable(space, values.reshape(space.size, 2, 2, validated_data["hilbert_dim"]))

    def to_representation(self, instance):
        return {
            "space": MeasureSpaceSerializer(instance.space).data,
            "hilbert_dim": instance.hilbert_dim,
            "values": [
                [[complex_pair(z) for z in vector] for vector in row] for row in instance.flat
            ],
        }


class StationaryPairSerializer(serializers.Serializer):
    """Serializer for the pair (φ, ψ) written by ``stationarize``."""

    space = MeasureSpaceSerializer()
    phi = serializers.ListField(child=complex_matrix_field(), min_length=1)
    psi = serializers.ListField(child=complex_matrix_field(), min_length=1)

    def validate(self, attrs):
        atoms = len(attrs["space"]["atoms"])
        for name in ("phi", "psi"):
            if len(attrs[name]) != atoms:
                raise serializers.ValidationError(
                    {name: _("Expected one density matrix per atom (%(atoms)s).") % {"atoms": atoms}}
                )
        return attrs

    def create(self, validated_data):
        space = MeasureSpaceSerializer().create(validated_data["space"])
        return StationaryPair(
            phi=FunctionalDensity(space, np.array(validated_data["phi"], dtype=complex)),
            psi=FunctionalDensity(space, np.array(validated_data["psi"], dtype=complex)),
        )

    def to_representation(self, instance):
        return {
            "space": MeasureSpaceSerializer(instance.space).data,
            "phi": _matrix(instance.phi.entries),
            "psi": _matrix(instance.psi.entries),
        }


class BlockElementSerializer(serializers.Serializer):
    blocks = serializers.ListField(child=complex_matrix_field(), min_length=1)

    def create(self, validated_data):
        return BlockElement(np.array(validated_data["blocks"], dtype=complex))

    def to_representation(self, instance):
        return {"blocks": _matrix(instance.blocks)}


class CanonicalProjectionSerializer(serializers.Serializer):
    """Serializer for CanonicalProjection (π₁, π₂, π, a, v)."""

    pi1 = serializers.ListField(child=serializers.IntegerField(min_value=0, max_value=1), min_length=1)
    pi2 = serializers.ListField(child=serializers.IntegerField(min_value=0, max_value=1), min_length=1)
    pi3 = serializers.ListField(child=serializers.IntegerField(min_value=0, max_value=1), min_length=1)
    a = serializers.ListField(child=serializers.FloatField(), min_length=1)
    v = serializers.ListField(child=ComplexField(), min_length=1)

    def validate(self, attrs):
        sizes = {len(attrs[name]) for name in ("pi1", "pi2", "pi3", "a", "v")}
        if len(sizes) != 1:
            raise serializers.ValidationError(_("All parts must have one entry per atom."))
        return attrs

    def create(self, validated_data):
        return CanonicalProjection.build(
            validated_data["pi1"],
            validated_data["pi2"],
            validated_data["pi3"],
            validated_data["a"],
            validated_data["v"],
        )

    def to_representation(self, instance):
        return instance.as_dict()


class PiecewisePolynomialSerializer(serializers.Serializer):
    breakpoints = serializers.ListField(child=serializers.FloatField(), min_length=2)
    coefficients = serializers.ListField(
        child=serializers.ListField(child=serializers.FloatField(), min_length=1), min_length=1
    )

    def validate_breakpoints(self, value):
        if any(b <= a for a, b in zip(value, value[1:])):
            raise serializers.ValidationError(_("Breakpoints must be strictly increasing."))
        return value

    def validate(self, attrs):
        if len(attrs["coefficients"]) != len(attrs["breakpoints"]) - 1:
            raise serializers.ValidationError(
                {"coefficients": _("Expected one coefficient row per piece.")}
            )
        width = max(len(row) for row in attrs["coefficients"])
        attrs["coefficients"] = [row + [0.0] * (width - len(row)) for row in attrs["coefficients"]]
        return attrs

    def create(self, validated_data):
        return PiecewisePolynomial(
            np.asarray(validated_data["breakpoints"]), np.asarray(validated_data["coefficients"])
        )

    def to_representation(self, instance):
        return instance.as_dict()


class ComplexPolynomialSerializer(serializers.Serializer):
    real = PiecewisePolynomialSerializer()
    imag = PiecewisePolynomialSerializer(required=False)


class ScalarFieldProfileSerializer(serializers.Serializer):
    """Serializer for refinement profiles; every field lives on [0, 1]."""

    name = serializers.CharField(default="custom")
    rho11 = PiecewisePolynomialSerializer()
    rho22 = PiecewisePolynomialSerializer()
    r21 = PiecewisePolynomialSerializer()
    r12 = PiecewisePolynomialSerializer()
    phi12 = ComplexPolynomialSerializer()

    def create(self, validated_data):
        def build(data):
            return PiecewisePolynomialSerializer().create(data)

        phi12 = validated_data["phi12"]
        return ScalarFieldProfile(
            rho11=build(validated_data["rho11"]),
            rho22=build(validated_data["rho22"]),
            r21=build(validated_data["r21"]),
            r12=build(validated_data["r12"]),
            phi12_real=build(phi12["real"]),
            phi12_imag=build(phi12["imag"]) if "imag" in phi12 else PiecewisePolynomial.constant(0.0),
            name=validated_data["name"],
        )

    def to_representation(self, instance):
        return instance.as_dict()


class GeneratorSpecSerializer(serializers.Serializer):
    """The options of ``gen``; ``create()`` draws the per-atom parameters from the seed."""

    atoms = serializers.IntegerField(min_value=1)
    case = serializers.ChoiceField(choices=CASES + (MIXED,), default=MIXED)
    split = serializers.FloatField(min_value=0.0, max_value=1.0, required=False, allow_null=True)
    seed = serializers.IntegerField(min_value=0, max_value=UINT64_MAX, default=0)
    twist = serializers.BooleanField(default=False)
    weights = serializers.ListField(child=serializers.FloatField(), required=False, allow_null=True)
    dim_policy = serializers.ChoiceField(choices=DIM_POLICIES, default=DIRECT_SUM)

    def validate(self, attrs):
        weights = attrs.get("weights")
        if weights is not None:
            if len(weights) != attrs["atoms"]:
                raise serializers.ValidationError({"weights": _("Expected one weight per atom.")})
            if any(w <= 0 for w in weights):
                raise serializers.ValidationError({"weights": _("Atom weights must be positive.")})
        return attrs

    def create(self, validated_data):
        return GeneratorSpec.sampled(
            validated_data["atoms"],
            case=validated_data["case"],
            seed=validated_data["seed"],
            twist=validated_data["twist"],
            split=validated_data.get("split"),
            weights=validated_data.get("weights"),
            dim_policy=validated_data["dim_policy"],
        )


class RunConfigSerializer(serializers.Serializer):
    """Serializer for the parameters shared by every command."""

    command = serializers.CharField()
    input = serializers.CharField(required=False, allow_null=True)
    output = serializers.CharField(required=False, allow_null=True)
    tolerance = serializers.FloatField(required=False, allow_null=True)
    samples = serializers.IntegerField(min_value=1, required=False, allow_null=True)
    trials = serializers.IntegerField(min_value=1, required=False, allow_null=True)
    seed = serializers.IntegerField(min_value=0, max_value=UINT64_MAX, required=False, allow_null=True)
    levels = serializers.ListField(
        child=serializers.IntegerField(min_value=1), required=False, allow_null=True, min_length=1
    )
    options = serializers.DictField(required=False)

    def validate_tolerance(self, value):
        if value is not None and not value > 0:
            raise serializers.ValidationError(_("Tolerances must be positive."))
        return value

    def validate_levels(self, value):
        if value is not None and any(b <= a for a, b in zip(value, value[1:])):
            raise serializers.ValidationError(_("Levels must be strictly ascending."))
        return value

    def validate(self, attrs):
        source, target = attrs.get("input"), attrs.get("output")
        if source and target and source == target:
            raise serializers.ValidationError({"output": _("Output path must differ from the input path.")})
        return attrs

    def create(self, validated_data):
        levels = validated_data.get("levels")
        return RunConfig(
            command=validated_data["command"],
            input=validated_data.get("input"),
            output=validated_data.get("output"),
            tolerance=validated_data.get("tolerance"),
            samples=validated_data.get("samples"),
            trials=validated_data.get("trials"),
            seed=validated_data.get("seed"),
            levels=tuple(levels) if levels is not None else None,
            options=validated_data.get("options", {}),
        )


class ProjectionPairSerializer(serializers.Serializer):
    """Two canonical projections on the same atoms, for the orthogonality check."""

    p = CanonicalProjectionSerializer()
    q = CanonicalProjectionSerializer()

    def validate(self, attrs):
        if len(attrs["p"]["pi1"]) != len(attrs["q"]["pi1"]):
            raise serializers.ValidationError(_("p and q must have the same number of atoms."))
        return attrs

    def create(self, validated_data):
        build = CanonicalProjectionSerializer().create
        return build(validated_data["p"]), build(validated_data["q"])
