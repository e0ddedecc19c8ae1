import numpy as np
import pytest

from ovf.exceptions import ConstructionError, DomainError
from ovf.measure_algebra import BlockElement, CenterElement, embed_center, matrix_unit
from ovf.ovf_core import (
    FunctionalDensity,
    VectorFieldTable,
    basis_identity_checks,
    commutative_orthogonality,
    compact,
    difference_identity,
    evaluate,
    gram_matrix,
    inner,
    phase_identity,
    r_densities,
    reconstruct_inner,
    reduction,
    rho_functional,
    sum_identity,
    twist,
    verify_field,
    verify_identities,
    verify_orthogonality,
)
from ovf.synthesis import assemble, haar_unitary

from .factories import GeneratorSpecFactory, MeasureSpaceFactory


def random_unitaries(rng, count):
    return np.array([haar_unitary(rng) for _ in range(count)])


def random_center(rng, count):
    return CenterElement(rng.standard_normal(count) + 1j * rng.standard_normal(count))


class TestVectorFieldTable:
    """Test cases for VectorFieldTable."""

    def test_rejects_bad_shape(self):
        with pytest.raises(ConstructionError) as exc:
            VectorFieldTable(MeasureSpaceFactory(), np.zeros((2, 2, 2, 4)))
        assert exc.value.code == "table_shape"

    def test_rejects_non_finite(self):
        values = np.zeros((3, 2, 2, 4))
        values[1, 0, 1, 2] = np.nan
        with pytest.raises(ConstructionError) as exc:
            VectorFieldTable(MeasureSpaceFactory(), values)
        assert exc.value.code == "non_finite"

    def test_table_is_read_only(self, instance):
        with pytest.raises(ValueError):
            instance.values[0, 0, 0, 0] = 1.0

    def test_unit_value_sums_diagonal(self, instance):
        expected = instance.values[:, 0, 0].sum(axis=0) + instance.values[:, 1, 1].sum(axis=0)

        assert np.allclose(instance.unit_value(), expected)
        assert np.allclose(evaluate(instance, BlockElement.identity(instance.space.size)), expected)

    def test_perturbed_copy(self, instance):
        delta = np.ones(instance.hilbert_dim)
        changed = instance.perturbed(1, (2, 1), delta)

        assert not changed.equals(instance)
        assert np.allclose(changed.basis_vector(1, (2, 1)) - instance.basis_vector(1, (2, 1)), delta)
        assert instance.equals(VectorFieldTable(instance.space, np.array(instance.values)))


class TestEvaluation:
    """Test cases for evaluation, reductions and the Gram table."""

    def test_matrix_unit(self, instance):
        value = evaluate(instance, matrix_unit((1, 2), instance.space))

        assert np.allclose(value, instance.values[:, 0, 1].sum(axis=0))

    def test_reduction_matches_embedding(self, instance, rng):
        a = random_center(rng, instance.space.size)

        for which in ((1, 1), (1, 2), (2, 1), (2, 2)):
            assert np.allclose(
                reduction(instance, which).evaluate(a), evaluate(instance, embed_center(a, which))
            )

    def test_bad_index(self, instance):
        with pytest.raises(DomainError) as exc:
            reduction(instance, (3, 1))
        assert exc.value.code == "bad_index"

    def test_dimension_mismatch(self, instance):
        with pytest.raises(DomainError):
            evaluate(instance, BlockElement.identity(instance.space.size + 1))

    def test_gram_matrix_is_hermitian(self, instance):
        n = instance.space.size
        gram = gram_matrix(instance).reshape(4 * n, 4 * n)

        assert np.allclose(gram, gram.conj().T)
        assert np.linalg.eigvalsh(gram).min() > -1e-12


class TestDensities:
    """Test cases for ϱ, the r densities and the inner-product reconstruction."""

    def test_rank_one_densities(self, rank1_instance):
        report = r_densities(rank1_instance)

        assert np.allclose(report.rho.entries[0], np.diag([1.0, 0.0]), atol=1e-12)
        assert report.density((1, 2)) == pytest.approx([0.3])
        assert report.density((2, 1)) == pytest.approx([0.7])
        assert not report.flagged()

    def test_trace_identity_on_generated_instance(self, instance):
        report = r_densities(instance)
        rho = report.rho.entries

        assert np.allclose(report.r[:, 0, 1] + report.r[:, 1, 0], (rho[:, 0, 0] + rho[:, 1, 1]).real)
        assert all(record.passed for record in report.records())

    def test_rho_is_positive(self, instance):
        rho = rho_functional(instance)

        assert rho.hermitian_residual() < 1e-10
        assert rho.is_positive()

    def test_rho_pairing(self, instance, rng):
        n = instance.space.size
        x = BlockElement(rng.standard_normal((n, 2, 2)) + 1j * rng.standard_normal((n, 2, 2)))
        expected = inner(evaluate(instance, x), instance.unit_value())

        assert rho_functional(instance).pair(x) == pytest.approx(expected, abs=1e-10)

    def test_reconstruct_inner(self, instance, rng):
        n = instance.space.size
        report = r_densities(instance)
        a, b = random_center(rng, n), random_center(rng, n)
        expected = inner(reduction(instance, (1, 2)).evaluate(a), reduction(instance, (2, 1)).evaluate(b))

        assert reconstruct_inner(report, a, b, (1, 2), (2, 1)) == pytest.approx(expected, abs=1e-10)

    def test_density_shape(self):
        with pytest.raises(ConstructionError) as exc:
            FunctionalDensity(MeasureSpaceFactory(), np.zeros((2, 2, 2)))
        assert exc.value.code == "density_shape"


class TestTransformations:
    """Test cases for twists and compaction."""

    def test_twist_round_trip(self, instance, rng):
        u = random_unitaries(rng, instance.space.size)
        twisted = twist(instance, u)
        restored = twist(twisted, np.conj(np.swapaxes(u, 1, 2)))

        assert np.allclose(restored.values, instance.values)

    def test_twist_keeps_orthogonality(self, instance, rng):
        twisted = twist(instance, random_unitaries(rng, instance.space.size))

        assert verify_field(twisted, samples=100, trials=20, seed=1).passed

    def test_twist_rejects_non_unitary(self, instance):
        blocks = 2.0 * np.tile(np.eye(2), (instance.space.size, 1, 1))
        with pytest.raises(DomainError) as exc:
            twist(instance, blocks)
        assert exc.value.code == "not_unitary"

    def test_compact_preserves_gram(self, instance):
        compressed = compact(instance)

        assert compressed.hilbert_dim <= instance.hilbert_dim
        assert np.allclose(gram_matrix(compressed), gram_matrix(instance), atol=1e-12)

    def test_compact_rank_one(self, rank1_instance):
        assert compact(rank1_instance).hilbert_dim == 3


class TestVerification:
    """Test cases for the orthogonality and identity suites."""

    def test_generated_instance_passes(self, instance):
        report = verify_field(instance, samples=200, trials=50, seed=3)

        assert report.passed, report.failures()
        assert {"orthogonality_sampled", "orthogonality_sweep", "center_transfer"} <= set(report.names())

    @pytest.mark.parametrize("fixture", ["rank1_instance", "rank2_instance"])
    def test_single_factor_passes(self, fixture, request):
        field_table = request.getfixturevalue(fixture)

        assert verify_identities(field_table, trials=50, seed=2).passed
        assert verify_orthogonality(field_table, samples=100, seed=2).passed

    def test_cross_atom_leak_is_witnessed(self, instance):
        leak = 0.1 * instance.values[1, 0, 0]
        broken = instance.perturbed(0, (1, 1), leak)

        report = verify_field(broken, samples=100, trials=20, seed=3)
        sweep = report.get("orthogonality_sweep")

        assert not report.passed
        assert not sweep.passed
        assert any((w["atom_p"], w["atom_q"]) == (0, 1) for w in sweep.witnesses)
        assert not report.get("cross_atom_orthogonal_basis").passed

    def test_basis_checks_name_the_atom(self, rank2_instance):
        values = np.array(rank2_instance.values)
        values[0, 0, 1] *= 1.5
        broken = rank2_instance.with_values(values)

        report = basis_identity_checks(broken)
        balance = report.get("reduction_norm_balance_basis")

        assert not balance.passed
        assert balance.witnesses[0]["atom"] == 0

    def test_commutative_orthogonality(self, instance):
        record = commutative_orthogonality(instance, trials=50, seed=4)

        assert record.name == "reduction_orthogonality"
        assert record.passed

    def test_phase_identities(self, instance, rng):
        n = instance.space.size
        pi = CenterElement(rng.integers(0, 2, size=n).astype(float))
        a = random_center(rng, n)

        for lhs, rhs in (
            phase_identity(instance, a, pi),
            sum_identity(instance, pi),
            difference_identity(instance, pi),
        ):
            assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_report_is_deterministic(self, instance):
        first = verify_field(instance, samples=50, trials=10, seed=8)
        second = verify_field(instance, samples=50, trials=10, seed=8)

        assert first.as_dict() == second.as_dict()

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(50))
    def test_generated_instances_pass_full_suite(self, seed):
        """Test that fifty generated instances over 1, 4 and 16 atoms pass 10³ pairs and 100 trials."""
        atoms = (1, 4, 16)[seed % 3]
        field_table = assemble(GeneratorSpecFactory(atoms=atoms, seed=seed, twist=True))

        report = verify_field(field_table, samples=1000, trials=100, seed=seed)

        assert report.passed, report.failures()
        assert report.get("orthogonality_sampled").details["samples"] == 1000
