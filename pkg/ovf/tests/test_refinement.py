import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ovf.exceptions import ConstructionError, DomainError
from ovf.refinement import (
    BUILTIN_PROFILES,
    CSV_COLUMNS,
    PiecewisePolynomial,
    ScalarFieldProfile,
    build_partition,
    builtin_profile,
    convergence_report,
    phi_delta,
    profile_from_json,
)

from .factories import ScalarFieldProfileFactory

LINEAR_SUP_ERRORS = [0.1, 0.1, 0.0625, 0.03125, 0.015625, 0.0078125]
FAST_LEVELS = [2, 8, 32]
FAST_GRID = 2001

unit_points = st.floats(min_value=0.0, max_value=1.0)


def constant(value):
    return PiecewisePolynomial.constant(value)


def profile_with(**overrides):
    fields = {
        "rho11": constant(0.5),
        "rho22": constant(0.5),
        "r21": constant(0.5),
        "r12": constant(0.5),
        "phi12_real": constant(0.1),
        "phi12_imag": constant(0.0),
    }
    fields.update(overrides)
    return ScalarFieldProfile(**fields)


class TestPiecewisePolynomial:
    """Test cases for PiecewisePolynomial."""

    def test_rejects_unsorted_breakpoints(self):
        with pytest.raises(ConstructionError) as exc:
            PiecewisePolynomial(np.array([0.0, 0.6, 0.4]), np.ones((2, 1)))
        assert exc.value.code == "breakpoints"

    def test_rejects_coefficient_shape(self):
        with pytest.raises(ConstructionError) as exc:
            PiecewisePolynomial(np.array([0.0, 0.5, 1.0]), np.ones((1, 2)))
        assert exc.value.code == "coefficients"

    def test_local_coordinates(self):
        p = PiecewisePolynomial(np.array([0.0, 0.5, 1.0]), np.array([[0.0, 1.0], [0.5, -1.0]]))

        assert p(0.25) == pytest.approx(0.25)
        assert p(0.75) == pytest.approx(0.25)
        assert p.pieces == 2
        assert p.degree == 1

    @given(x=unit_points)
    @settings(max_examples=50, deadline=None)
    def test_refinement_keeps_values(self, x):
        p = PiecewisePolynomial(np.array([0.0, 0.5, 1.0]), np.array([[0.1, 1.0, -2.0], [0.3, 0.0, 1.0]]))

        assert p.on([0.2, 0.7, 0.9])(x) == pytest.approx(p(x), abs=1e-14)

    @given(x=unit_points)
    @settings(max_examples=50, deadline=None)
    def test_arithmetic(self, x):
        a = PiecewisePolynomial.linear(0.2, 0.5)
        b = PiecewisePolynomial(np.array([0.0, 0.4, 1.0]), np.array([[1.0], [-1.0]]))

        assert (a + b)(x) == pytest.approx(a(x) + b(x))
        assert (a - b)(x) == pytest.approx(a(x) - b(x))
        assert (a * b)(x) == pytest.approx(a(x) * b(x))
        assert (2.0 * a + 1.0)(x) == pytest.approx(2 * a(x) + 1)

    def test_integrate(self):
        square = PiecewisePolynomial.linear(0.0, 1.0) * PiecewisePolynomial.linear(0.0, 1.0)

        assert square.integrate(0.0, 1.0) == pytest.approx(1 / 3)
        assert np.allclose(square.integrate(np.array([0.0, 0.5]), np.array([0.5, 1.0])), [1 / 24, 7 / 24])

    def test_solve(self):
        assert np.allclose(PiecewisePolynomial.linear(0.0, 1.0).solve(0.25), [0.25])
        assert PiecewisePolynomial.linear(0.0, 1.0).solve(2.0).size == 0

    def test_range_on_finds_interior_minimum(self):
        centred = PiecewisePolynomial.linear(-0.5, 1.0)
        low, high = (centred * centred).range_on(0.0, 1.0)

        assert low == pytest.approx(0.0, abs=1e-15)
        assert high == pytest.approx(0.25)

    def test_is_constant(self):
        assert constant(0.3).is_constant()
        assert not PiecewisePolynomial.linear(0.0, 1e-6).is_constant()

    def test_as_dict(self):
        p = PiecewisePolynomial.linear(0.2, 0.5)

        assert p.as_dict() == {"breakpoints": [0.0, 1.0], "coefficients": [[0.2, 0.5]]}


class TestScalarFieldProfile:
    """Test cases for profiles and their invariants."""

    @pytest.mark.parametrize("name", sorted(BUILTIN_PROFILES))
    def test_builtin_invariants(self, name):
        profile = ScalarFieldProfileFactory(name=name)
        x = np.linspace(0.0, 1.0, 101)

        assert profile.name == name
        assert np.allclose(profile.r12(x) + profile.r21(x), profile.trace(x))
        assert np.all(profile.limit(x) >= 0.0)
        assert np.all(profile.limit(x) <= np.minimum(profile.rho11(x), profile.r21(x)) + 1e-12)

    def test_unknown_builtin(self):
        with pytest.raises(DomainError) as exc:
            builtin_profile("staircase")
        assert exc.value.code == "profile"

    @pytest.mark.parametrize(
        "overrides,code",
        [
            ({"r21": constant(0.6)}, "trace_identity"),
            ({"rho11": constant(1.1), "rho22": constant(-0.1)}, "negative"),
            ({"phi12_real": constant(0.6)}, "estimate"),
            ({"r12": PiecewisePolynomial.constant(0.5, (0.0, 2.0))}, "domain"),
        ],
    )
    def test_invalid_profile(self, overrides, code):
        with pytest.raises(ConstructionError) as exc:
            profile_with(**overrides)
        assert exc.value.code == code

    def test_fields_share_breakpoints(self):
        profile = ScalarFieldProfileFactory(name="two_piece")

        assert np.array_equal(profile.breakpoints, [0.0, 0.4, 1.0])
        assert np.array_equal(profile.r21.breakpoints, profile.breakpoints)

    def test_rotating_phase_modulus(self):
        profile = ScalarFieldProfileFactory(name="rotating_phase")

        assert profile.abs_phi12(1.0) == pytest.approx(np.hypot(0.05, 0.05))
        assert profile.phi12(1.0) == pytest.approx(0.05 + 0.05j)

    @pytest.mark.parametrize("name", sorted(BUILTIN_PROFILES))
    def test_from_json(self, name):
        profile = ScalarFieldProfileFactory(name=name)
        rebuilt = profile_from_json(profile.as_dict())
        x = np.linspace(0.0, 1.0, 11)

        assert rebuilt.name == name
        assert np.allclose(rebuilt.limit(x), profile.limit(x))


class TestPartition:
    """Test cases for level-set partitions."""

    def test_linear_level_two(self):
        partition = build_partition(ScalarFieldProfileFactory(name="linear"), 2)

        assert len(partition.cells) == 2
        assert not partition.trace_binned
        assert partition.total_measure == pytest.approx(1.0)
        assert partition.cells[0].rho11 == pytest.approx(0.4)
        assert partition.cells[1].rho11 == pytest.approx(0.6)
        [(start, end)] = partition.level_set("rho11", 1)
        assert (start, end) == pytest.approx((0.5, 1.0))
        assert partition.cell_at(0.25) == 0
        assert partition.cell_at(0.75) == 1

    def test_trace_binning(self):
        assert build_partition(ScalarFieldProfileFactory(name="rotating_phase"), 4).trace_binned
        assert build_partition(ScalarFieldProfileFactory(name="linear"), 4, trace_binning=True).trace_binned

    @pytest.mark.parametrize("name", sorted(BUILTIN_PROFILES))
    @pytest.mark.parametrize("n", [1, 3, 16])
    def test_cells_cover_and_settle(self, name, n):
        partition = build_partition(ScalarFieldProfileFactory(name=name), n)

        assert partition.total_measure == pytest.approx(1.0, abs=1e-12)
        assert partition.oscillation_violations() == 0
        assert phi_delta(partition).bound_violations == 0

    def test_cell_values_solve_the_quadratic(self):
        partition = build_partition(ScalarFieldProfileFactory(name="tent"), 8)

        for slacks in phi_delta(partition).cell_slacks():
            assert abs(slacks["quadratic_slack"]) <= 1e-12

    def test_cell_value_uses_modulus_of_average(self):
        """Test that a phase flip inside one cell averages phi12 out before phi0."""
        flip = PiecewisePolynomial(np.array([0.0, 0.5, 1.0]), np.array([[0.2], [-0.2]]))
        partition = build_partition(profile_with(phi12_real=flip), 1)
        [cell] = partition.cells

        assert cell.phi12 == pytest.approx(0.0, abs=1e-15)
        assert cell.abs_phi12 == pytest.approx(0.2)
        assert phi_delta(partition).values[0] == pytest.approx(0.0, abs=1e-12)
        assert phi_delta(partition).cell_slacks()[0]["quadratic_slack"] == pytest.approx(0.0, abs=1e-12)

    def test_rejects_level_zero(self):
        with pytest.raises(DomainError) as exc:
            build_partition(ScalarFieldProfileFactory(name="linear"), 0)
        assert exc.value.code == "level"


class TestConvergenceReport:
    """Test cases for the convergence report."""

    def test_linear_profile_errors(self):
        report = convergence_report(ScalarFieldProfileFactory(name="linear"), grid=FAST_GRID)

        assert [r.level for r in report.levels] == [2, 4, 8, 16, 32, 64]
        assert report.sup_errors == pytest.approx(LINEAR_SUP_ERRORS, abs=1e-12)
        assert report.monotone_gap <= 1e-12
        assert report.fitted_rate()[1] == pytest.approx(2.5)
        assert report.passed

    def test_l1_error_below_sup_error(self):
        report = convergence_report(ScalarFieldProfileFactory(name="linear"), FAST_LEVELS, FAST_GRID)

        assert np.all(report.l1_errors <= report.sup_errors + 1e-12)
        assert np.all(report.l1_errors > 0.0)

    def test_constant_profile_is_exact(self):
        report = convergence_report(ScalarFieldProfileFactory(name="constant"), FAST_LEVELS, FAST_GRID)

        assert np.all(report.sup_errors <= 1e-14)
        assert report.as_dict()["fitted_constant"] <= 1e-12
        assert report.passed

    @pytest.mark.slow
    @pytest.mark.parametrize("name", sorted(BUILTIN_PROFILES))
    def test_builtin_profiles_keep_their_bounds(self, name):
        report = convergence_report(ScalarFieldProfileFactory(name=name), FAST_LEVELS, FAST_GRID)
        records = {record.name: record for record in report.records()}

        checks = ("cell_bound", "dominating_bound", "oscillation", "limit_feasibility", "limit_integrability")
        for check in checks:
            assert records[check].passed, records[check]

    @pytest.mark.parametrize("levels", [[4, 2], [0, 2], []])
    def test_rejects_bad_levels(self, levels):
        with pytest.raises(DomainError) as exc:
            convergence_report(ScalarFieldProfileFactory(name="linear"), levels, FAST_GRID)
        assert exc.value.code == "levels"

    def test_rows_match_csv_columns(self):
        report = convergence_report(ScalarFieldProfileFactory(name="linear"), [2], FAST_GRID)

        assert len(report.levels[0].row()) == len(CSV_COLUMNS)
        assert report.as_dict()["levels"][0]["level"] == 2
