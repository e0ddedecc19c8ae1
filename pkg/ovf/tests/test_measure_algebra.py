import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ovf.exceptions import ConstructionError, DomainError
from ovf.measure_algebra import (
    BlockElement,
    CanonicalProjection,
    CenterElement,
    MeasureSpace,
    block_adjoint,
    block_product,
    block_scale,
    block_sum,
    center_to_block,
    decompose_projection,
    embed_center,
    is_block_unitary,
    materialize,
    matrix_unit,
    orthogonality_conditions,
    phase_projection,
    range_projection,
    sample_orthogonal_blocks,
    sample_orthogonal_pair,
    unit_decomposition,
)

from .factories import CanonicalProjectionFactory, MeasureSpaceFactory

weights_in_range = st.floats(min_value=0.05, max_value=0.95)
phases = st.floats(min_value=0.0, max_value=2 * np.pi)


class TestMeasureSpace:
    """Test cases for MeasureSpace."""

    def test_from_weights(self):
        space = MeasureSpace.from_weights([0.5, 1.0, 2.0])

        assert space.atoms == ("w0", "w1", "w2")
        assert space.size == 3
        assert space.total == pytest.approx(3.5)

    def test_rejects_nonpositive_weight(self):
        with pytest.raises(ConstructionError) as exc:
            MeasureSpace(atoms=("a", "b"), weights=np.array([1.0, 0.0]))
        assert exc.value.code == "weight_sign"

    def test_rejects_duplicate_atoms(self):
        with pytest.raises(ConstructionError) as exc:
            MeasureSpace(atoms=("a", "a"), weights=np.array([1.0, 1.0]))
        assert exc.value.code == "duplicate_atom"

    def test_rejects_weight_count_mismatch(self):
        with pytest.raises(ConstructionError):
            MeasureSpace(atoms=("a", "b"), weights=np.array([1.0]))

    def test_require_same(self):
        space = MeasureSpaceFactory()
        space.require_same(MeasureSpaceFactory())
        with pytest.raises(DomainError):
            space.require_same(MeasureSpaceFactory(size=2))


class TestBlockAlgebra:
    """Test cases for atom-wise block operations."""

    def test_matrix_units_multiply(self):
        space = MeasureSpaceFactory()
        e12 = matrix_unit((1, 2), space)
        e21 = matrix_unit((2, 1), space)

        assert block_product(e12, e21).allclose(matrix_unit((1, 1), space))
        assert block_product(e12, e12).allclose(BlockElement.zeros(space.size))
        assert block_adjoint(e12).allclose(e21)

    def test_bad_index(self):
        with pytest.raises(DomainError):
            matrix_unit((1, 3), MeasureSpaceFactory())

    def test_identity_from_units(self):
        space = MeasureSpaceFactory()
        total = block_sum(matrix_unit((1, 1), space), matrix_unit((2, 2), space))

        assert total.allclose(BlockElement.identity(space.size))
        assert center_to_block(CenterElement.constant(space.size)).allclose(total)

    def test_embed_center_and_entry(self):
        a = CenterElement(np.array([1.0, 2j, -3.0]))
        x = embed_center(a, (2, 1))

        assert np.array_equal(x.entry((2, 1)).values, a.values)
        assert np.array_equal(x.entry((1, 1)).values, np.zeros(3))

    def test_scale_and_unitary(self, rng):
        z = rng.standard_normal((3, 2, 2)) + 1j * rng.standard_normal((3, 2, 2))
        q, _r = np.linalg.qr(z)
        u = BlockElement(q)

        assert is_block_unitary(u)
        assert not is_block_unitary(block_scale(u, 2.0))


class TestProjections:
    """Test cases for range projections, phase projections and the canonical form."""

    def test_range_projection(self):
        rp = range_projection(CenterElement(np.array([0.0, 0.5, 2.0])))

        assert np.array_equal(rp.values.real, [0.0, 1.0, 1.0])
        assert rp.is_projection()

    def test_range_projection_negative(self):
        with pytest.raises(DomainError) as exc:
            range_projection(CenterElement(np.array([1.0, -0.5])))
        assert exc.value.code == "negative"

    @pytest.mark.parametrize("omega", [1.0, -1.0, 1j, -1j, np.exp(0.7j)])
    def test_phase_projection_is_projection(self, omega):
        sigma = CenterElement(np.array([1.0, 0.0, 1.0]))

        assert phase_projection(sigma, omega).is_projection()

    @pytest.mark.parametrize("which", [(1, 2), (2, 1)])
    def test_unit_decomposition(self, which):
        sigma = CenterElement(np.array([1.0, 0.0, 1.0]))
        rebuilt = BlockElement.zeros(3)
        for coefficient, h in unit_decomposition(sigma, which):
            rebuilt = rebuilt + h * coefficient

        assert rebuilt.allclose(embed_center(sigma, which))

    def test_unit_decomposition_diagonal(self):
        with pytest.raises(DomainError):
            unit_decomposition(CenterElement.constant(2), (1, 1))

    def test_build_example(self):
        r = CanonicalProjection.build([0], [0], [1], [0.5], [1.0])

        assert np.allclose(materialize(r).blocks[0], [[0.5, 0.5], [0.5, 0.5]])

    def test_materialize_is_projection(self):
        assert materialize(CanonicalProjectionFactory(size=5)).is_projection()

    @pytest.mark.parametrize(
        "parts,code",
        [
            (([1], [0], [1], [0.5], [1.0]), "overlap"),
            (([0], [0], [1], [1.0], [1.0]), "a_range"),
            (([0], [0], [1], [0.5], [0.5]), "v_modulus"),
            (([0.5], [0], [0], [0.0], [1.0]), "not_projection"),
            (([0, 0], [0], [1], [0.5], [1.0]), "length"),
        ],
    )
    def test_invalid_canonical_projection(self, parts, code):
        with pytest.raises(ConstructionError) as exc:
            CanonicalProjection.build(*parts)
        assert exc.value.code == code

    @given(a=weights_in_range, theta=phases)
    @settings(max_examples=50, deadline=None)
    def test_decompose_inverts_materialize(self, a, theta):
        r = CanonicalProjection.build(
            [1, 0, 0], [1, 1, 0], [0, 0, 1], [0.0, 0.0, a], [1, 1, np.exp(1j * theta)]
        )

        assert decompose_projection(materialize(r)).same_as(r, atol=1e-10)

    @pytest.mark.parametrize("a,part", [(1e-12, "pi2"), (1.0 - 1e-12, "pi1")])
    def test_decompose_near_diagonal_rank_one(self, a, part):
        """Test that a rank-one block with a inside the strictness margin lands on π₁ or π₂."""
        off = np.sqrt(a * (1.0 - a))
        block = BlockElement(np.array([[[a, off], [off, 1.0 - a]]], dtype=complex))

        parsed = decompose_projection(block)

        assert getattr(parsed, part).values.real.tolist() == [1.0]
        assert parsed.pi3.values.real.tolist() == [0.0]
        assert (materialize(parsed) - block).max_abs() < 1e-5

    def test_decompose_non_projection(self):
        with pytest.raises(DomainError) as exc:
            decompose_projection(BlockElement(np.array([[[0.5, 0.0], [0.0, 0.0]]])))
        assert exc.value.code == "not_projection"


class TestOrthogonality:
    """Test cases for the lattice conditions equivalent to pq = 0."""

    @given(a=weights_in_range, theta=phases)
    @settings(max_examples=50, deadline=None)
    def test_complementary_rank_one_pair(self, a, theta):
        v = np.exp(1j * theta)
        p = CanonicalProjection.build([0], [0], [1], [a], [v])
        q = CanonicalProjection.build([0], [0], [1], [1 - a], [-v])

        orthogonal, witnesses = orthogonality_conditions(p, q, tol=1e-9)

        assert orthogonal
        assert witnesses == []
        assert (materialize(p) @ materialize(q)).max_abs() < 1e-12

    def test_wrong_phase_is_reported(self):
        p = CanonicalProjection.build([0], [0], [1], [0.3], [1.0])
        q = CanonicalProjection.build([0], [0], [1], [0.7], [1.0])

        orthogonal, witnesses = orthogonality_conditions(p, q)

        assert not orthogonal
        assert witnesses[0].condition == "w = -v on pi"
        assert witnesses[0].atom == 0

    def test_overlapping_lattice_parts(self):
        p = CanonicalProjection.build([1, 0], [0, 0], [0, 1], [0.0, 0.5], [1, 1])
        q = CanonicalProjection.build([1, 0], [0, 0], [0, 0], [0.0, 0.0], [1, 1])

        orthogonal, witnesses = orthogonality_conditions(p, q)

        assert not orthogonal
        assert {w.condition for w in witnesses} == {"tau1*sigma1"}

    def test_sampled_pairs_are_orthogonal(self, rng):
        space = MeasureSpaceFactory(size=4)
        p, q = sample_orthogonal_blocks(space, rng, 200)

        assert np.abs(p @ q).max() < 1e-12
        assert BlockElement(p.reshape(-1, 2, 2)).is_projection()
        assert BlockElement(q.reshape(-1, 2, 2)).is_projection()

    def test_sampled_pair_matches_conditions(self):
        space = MeasureSpaceFactory(size=6)
        p, q = sample_orthogonal_pair(space, 3)

        orthogonal, _witnesses = orthogonality_conditions(
            decompose_projection(p, tol=1e-9), decompose_projection(q, tol=1e-9), tol=1e-9
        )

        assert orthogonal

    def test_sampled_pair_deterministic(self):
        space = MeasureSpaceFactory(size=3)
        first = sample_orthogonal_pair(space, 5)
        second = sample_orthogonal_pair(space, 5)

        assert np.array_equal(first[0].blocks, second[0].blocks)
        assert np.array_equal(first[1].blocks, second[1].blocks)

    @pytest.mark.slow
    def test_conditions_agree_with_block_product(self, rng):
        """Test the lattice conditions against pq = 0 on sampled and independently drawn pairs."""
        space = MeasureSpaceFactory(size=3)
        p, q = sample_orthogonal_blocks(space, rng, 5000)
        other, _unused = sample_orthogonal_blocks(space, rng, 5000)
        pairs = [*zip(p, q), *zip(p, other)]
        verdicts = []

        for left, right in pairs:
            orthogonal, witnesses = orthogonality_conditions(
                decompose_projection(BlockElement(left), tol=1e-9),
                decompose_projection(BlockElement(right), tol=1e-9),
                tol=1e-9,
            )
            assert orthogonal == (np.abs(left @ right).max() < 1e-9)
            assert orthogonal == (not witnesses)
            verdicts.append(orthogonal)

        assert len(verdicts) == 10000
        assert all(verdicts[:5000])
        assert not all(verdicts[5000:])
