import numpy as np
import pytest

from ovf.exceptions import ConstructionError, DomainError, SynthesisError
from ovf.ovf_core import FunctionalDensity, reductions, verify_field
from ovf.stationarity import StationaryPair, check_stationarity, solve
from ovf.synthesis import (
    COMPACT,
    RANK1,
    RANK2,
    FactorCoordinates,
    GeneratorSpec,
    assemble,
    coordinate_estimate,
    generate_from_stationary_pair,
    generate_rank1_atom,
    generate_rank2_atom,
    haar_unitary,
    synthesize,
)

from .factories import FactorCoordinatesFactory, GeneratorSpecFactory, MeasureSpaceFactory


def random_psd(rng, count):
    z = rng.standard_normal((count, 2, 2)) + 1j * rng.standard_normal((count, 2, 2))
    return z @ np.conj(np.swapaxes(z, 1, 2)) / 4.0


class TestCoordinates:
    """Test cases for the rank-two coordinate family."""

    @pytest.mark.parametrize("seed", range(25))
    def test_sampled_coordinates_satisfy_constraints(self, seed):
        c = FactorCoordinatesFactory(seed=seed)

        assert 0.05 <= c.alpha <= 0.95
        assert abs(abs(c.omega) - 1.0) <= 1e-14
        assert c.norm_residual <= 1e-14
        assert c.bilinear_residual <= 1e-14
        assert coordinate_estimate(c) >= -1e-12

    def test_rejects_alpha_out_of_range(self):
        with pytest.raises(ConstructionError) as exc:
            FactorCoordinates(alpha=1.0, omega=1, xi=0, xi3=1, xi4=0, eta3=0, eta4=0)
        assert exc.value.code == "alpha_range"

    def test_rejects_non_unimodular_omega(self):
        with pytest.raises(ConstructionError) as exc:
            FactorCoordinates(alpha=0.5, omega=0.5, xi=0, xi3=1, xi4=0, eta3=0, eta4=0)
        assert exc.value.code == "omega_modulus"

    def test_rejects_broken_norm(self):
        with pytest.raises(ConstructionError) as exc:
            FactorCoordinates(alpha=0.5, omega=1, xi=0, xi3=0.5, xi4=0, eta3=0, eta4=0)
        assert exc.value.code == "norm_constraint"

    def test_rejects_norm_residual_above_precision(self):
        xi3 = np.sqrt(1.0 + 1e-13)

        with pytest.raises(ConstructionError) as exc:
            FactorCoordinates(alpha=0.5, omega=1, xi=0, xi3=xi3, xi4=0, eta3=0, eta4=0)
        assert exc.value.code == "norm_constraint"

    def test_rank2_atom_unit(self):
        atom = generate_rank2_atom(FactorCoordinatesFactory(seed=3))

        assert np.allclose(atom.f11 + atom.f22, atom.unit)
        assert atom.table().shape == (2, 2, 4)

    def test_rank1_atom(self):
        atom = generate_rank1_atom(0.3)

        assert np.vdot(atom.f12, atom.f12).real == pytest.approx(0.3)
        assert np.vdot(atom.f21, atom.f21).real == pytest.approx(0.7)
        assert np.allclose(atom.f22, 0.0)

    def test_rank1_split_range(self):
        with pytest.raises(DomainError) as exc:
            generate_rank1_atom(1.5)
        assert exc.value.code == "split_range"

    def test_haar_unitary(self, rng):
        u = haar_unitary(rng)

        assert np.allclose(u.conj().T @ u, np.eye(2))


class TestGeneratorSpec:
    """Test cases for GeneratorSpec and assemble."""

    @pytest.mark.parametrize(
        "kwargs,code",
        [
            ({"cases": ()}, "atoms"),
            ({"cases": ("rank3",)}, "case"),
            ({"cases": (RANK1,), "dim_policy": "sparse"}, "dim_policy"),
            ({"cases": (RANK1,), "seed": -1}, "seed"),
            ({"cases": (RANK1, RANK2), "weights": (1.0,)}, "length"),
            ({"cases": (RANK1,), "splits": (1.2,)}, "split_range"),
            ({"cases": (RANK1,), "twists": (2 * np.eye(2),)}, "twist"),
        ],
    )
    def test_invalid_spec(self, kwargs, code):
        with pytest.raises(ConstructionError) as exc:
            GeneratorSpec(**kwargs)
        assert exc.value.code == code

    def test_sampled_is_deterministic(self):
        first = assemble(GeneratorSpecFactory(atoms=3, seed=9))
        second = assemble(GeneratorSpecFactory(atoms=3, seed=9))
        other = assemble(GeneratorSpecFactory(atoms=3, seed=10))

        assert first.equals(second)
        assert not first.equals(other)

    def test_direct_sum_layout(self):
        field_table = assemble(GeneratorSpecFactory(atoms=3, twist=False, case=RANK2, seed=2))

        assert field_table.hilbert_dim == 12
        assert np.allclose(field_table.values[0, :, :, 4:], 0.0)
        assert np.allclose(field_table.values[2, :, :, :8], 0.0)

    def test_weights_scale_atoms(self):
        spec = GeneratorSpec(cases=(RANK1, RANK1), weights=(1.0, 4.0), splits=(0.5, 0.5))
        field_table = assemble(spec)

        assert np.linalg.norm(field_table.values[1, 0, 0]) == pytest.approx(2.0)
        assert np.linalg.norm(field_table.values[0, 0, 0]) == pytest.approx(1.0)

    def test_compact_policy(self):
        field_table = assemble(GeneratorSpecFactory(atoms=3, seed=4, dim_policy=COMPACT))

        assert field_table.hilbert_dim <= 12
        assert verify_field(field_table, samples=100, trials=20, seed=0).passed

    @pytest.mark.parametrize("case", [RANK1, RANK2])
    def test_assembled_instance_is_orthogonal(self, case):
        field_table = assemble(GeneratorSpecFactory(atoms=5, case=case, seed=21))

        assert verify_field(field_table, samples=200, trials=40, seed=5, tol=1e-9).passed


class TestSynthesize:
    """Test cases for gluing four reductions into a field."""

    def test_round_trip_is_bit_exact(self, instance):
        rebuilt = synthesize(reductions(instance))

        assert rebuilt.equals(instance)

    def test_accepts_ordered_sequence(self, instance):
        ordered = list(reductions(instance).values())

        assert synthesize(ordered).equals(instance)

    def test_rejects_wrong_count(self, instance):
        with pytest.raises(DomainError) as exc:
            synthesize(list(reductions(instance).values())[:3])
        assert exc.value.code == "reduction_count"

    def test_rejects_mismatched_spaces(self, instance):
        tables = reductions(instance)
        other = reductions(assemble(GeneratorSpecFactory(atoms=2, seed=1)))
        tables[(2, 2)] = other[(2, 2)]

        with pytest.raises(DomainError):
            synthesize(tables)

    def test_violation_names_identity_and_atom(self, rank2_instance):
        values = np.array(rank2_instance.values)
        values[0, 0, 1] *= 1.5

        with pytest.raises(SynthesisError) as exc:
            synthesize(reductions(rank2_instance.with_values(values)))

        assert exc.value.code == "reduction_norm_balance_basis"
        assert exc.value.params["atom"] == 0

    def test_unchecked_synthesis(self, rank2_instance):
        values = np.array(rank2_instance.values)
        values[0, 0, 1] *= 1.5
        broken = rank2_instance.with_values(values)

        assert synthesize(reductions(broken), check=False).equals(broken)


class TestStationaryPairGenerator:
    """Test cases for fields built from a stationary pair."""

    def test_generated_field_is_orthogonal_and_stationary(self, rng):
        space = MeasureSpaceFactory(size=4)
        phi = FunctionalDensity(space, random_psd(rng, 4))
        psi = FunctionalDensity(space, random_psd(rng, 4))

        field_table = generate_from_stationary_pair(phi, psi)

        assert verify_field(field_table, samples=200, trials=40, seed=6, tol=1e-9).passed
        assert check_stationarity(field_table, StationaryPair(phi, psi)).passed

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(30))
    def test_generated_fields_stationarize(self, seed):
        rng = np.random.default_rng(seed)
        atoms = 1 + seed % 5
        space = MeasureSpaceFactory(size=atoms)
        phi = FunctionalDensity(space, random_psd(rng, atoms))
        psi = FunctionalDensity(space, random_psd(rng, atoms))

        field_table = generate_from_stationary_pair(phi, psi)

        outcome = solve(field_table, samples=200, trials=40, seed=seed, identity_tol=1e-9)

        assert outcome.verification.passed
        assert outcome.report.passed
        assert np.allclose(outcome.pair.total.entries, (phi + psi).entries, rtol=0, atol=1e-10)

    def test_rank_deficient_pair(self):
        space = MeasureSpaceFactory(size=2)
        phi = FunctionalDensity(space, np.array([np.diag([1.0, 0.0]), np.zeros((2, 2))]))
        psi = FunctionalDensity(space, np.array([np.zeros((2, 2)), np.diag([0.0, 0.5])]))

        field_table = generate_from_stationary_pair(phi, psi)

        assert check_stationarity(field_table, StationaryPair(phi, psi)).passed

    def test_rejects_indefinite_density(self):
        space = MeasureSpaceFactory(size=1)
        phi = FunctionalDensity(space, np.array([np.diag([1.0, -0.5])]))

        with pytest.raises(DomainError) as exc:
            generate_from_stationary_pair(phi, FunctionalDensity.zeros(space))
        assert exc.value.code == "not_psd"
