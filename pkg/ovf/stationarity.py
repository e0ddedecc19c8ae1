"""
Stationary pairs (φ, ψ) with ⟨F(x), F(y)⟩ = φ(y*x) + ψ(xy*).

Each atom is a 2×2 factor problem. ϱ is first diagonalised by a unitary, the closed
form solution is taken in that basis and conjugated back, and the assembled pair is
verified on every pair of basis elements.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Iterator

import numpy as np
from django.utils.translation import gettext_lazy as _

from .conf import resolve
from .exceptions import InconsistencyError
from .measure_algebra import MeasureSpace
from .ovf_core import (
    P21,
    P22,
    PAIR_LABELS,
    FunctionalDensity,
    VectorFieldTable,
    gram_matrix,
    r_densities,
    twist,
    verify_field,
)
from .reports import CheckRecord, VerificationReport, check_record

logger = logging.getLogger(__name__)

CASE_ZERO = "zero"
CASE_ONE = "rank1"
CASE_TWO = "rank2"


def phi0(r21: Any, rho22: Any, phi12_abs: Any) -> Any:
    """The "+" root of φ(φ + ϱ₂₂ − r₂₁) = |φ₁₂|².

    Equal to ½[r₂₁ − ϱ₂₂ + √((r₂₁ − ϱ₂₂)² + 4|φ₁₂|²)], evaluated without cancellation
    when r₂₁ < ϱ₂₂. Accepts scalars or arrays.
    """
    b = np.asarray(r21, dtype=float) - np.asarray(rho22, dtype=float)
    c = np.abs(np.asarray(phi12_abs))
    root = np.hypot(b, 2.0 * c)
    denominator = root - b
    small = np.divide(
        2.0 * c**2, denominator, out=np.zeros_like(root), where=denominator > 0
    )
    result = np.where(b >= 0, 0.5 * (b + root), small)
    return float(result) if result.ndim == 0 else result


@dataclass(frozen=True, eq=False)
class FactorData:
    """The densities of one atom that the factor solution depends on."""

    rho11: float
    rho22: float
    rho12: complex
    r12: float
    r21: float
    phi12: complex
    basis_unitary: np.ndarray = field(default_factory=lambda: np.eye(2, dtype=complex))
    atom: int | None = None

    @property
    def trace(self) -> float:
        return self.rho11 + self.rho22

    @property
    def rho(self) -> np.ndarray:
        return np.array(
            [[self.rho11, self.rho12], [np.conj(self.rho12), self.rho22]], dtype=complex
        )

    @property
    def trace_residual(self) -> float:
        return abs(self.r12 + self.r21 - self.rho11 - self.rho22)

    @property
    def estimate_slack(self) -> float:
        """r₁₂r₂₁ϱ₁₁ϱ₂₂ − |φ₁₂|²t², t = ϱ₁₁ + ϱ₂₂; nonnegative for OVF data."""
        return (
            self.r12 * self.r21 * self.rho11 * self.rho22
            - abs(self.phi12) ** 2 * self.trace**2
        )

    def as_dict(self) -> dict[str, Any]:
        return {
            "atom": self.atom,
            "rho11": self.rho11,
            "rho22": self.rho22,
            "rho12": [float(np.real(self.rho12)), float(np.imag(self.rho12))],
            "r12": self.r12,
            "r21": self.r21,
            "phi12": [float(np.real(self.phi12)), float(np.imag(self.phi12))],
        }


@dataclass(frozen=True)
class FeasibilityReport:
    """Slacks of the box, quadratic and coupling inequalities at a trial φ."""

    phi: float
    lower_slack: float
    upper_slack: float
    quadratic_slack: float
    coupling_slack: float
    scale: float
    tolerance: float

    @property
    def feasible(self) -> bool:
        box = min(self.lower_slack, self.upper_slack) >= -self.tolerance * self.scale
        quadratic = (
            min(self.quadratic_slack, self.coupling_slack)
            >= -self.tolerance * self.scale**2
        )
        return bool(box and quadratic)

    @property
    def worst(self) -> float:
        """Most negative slack, normalised by the atom's trace (0 when all hold)."""
        scale = max(self.scale, 1e-300)
        return min(
            0.0,
            self.lower_slack / scale,
            self.upper_slack / scale,
            self.quadratic_slack / scale**2,
            self.coupling_slack / scale**2,
        )

    @property
    def records(self) -> list[CheckRecord]:
        """One record per inequality; the residual is the normalised violation."""
        scale = max(self.scale, 1e-300)
        deficits = (
            ("feasibility_lower", self.lower_slack / scale),
            ("feasibility_upper", self.upper_slack / scale),
            ("feasibility_quadratic", self.quadratic_slack / scale**2),
            ("feasibility_coupling", self.coupling_slack / scale**2),
        )
        return [
            CheckRecord(
                name=name,
                max_residual=max(0.0, -slack),
                tolerance=self.tolerance,
                details={"phi": self.phi},
            )
            for name, slack in deficits
        ]

    def as_dict(self) -> dict[str, Any]:
        return {
            "phi": self.phi,
            "lower_slack": self.lower_slack,
            "upper_slack": self.upper_slack,
            "quadratic_slack": self.quadratic_slack,
            "coupling_slack": self.coupling_slack,
            "feasible": self.feasible,
        }


def feasibility_slacks(
    rho11: Any, rho22: Any, rho12: Any, r21: Any, phi12: Any, phi: Any
) -> tuple[Any, Any, Any, Any]:
    """Box, quadratic and coupling slacks; broadcasts over arrays."""
    lower = phi - np.maximum(0.0, r21 - rho22)
    upper = np.minimum(rho11, r21) - phi
    quadratic = phi * (phi + rho22 - r21) - np.abs(phi12) ** 2
    coupling = (rho11 - phi) * (r21 - phi) - np.abs(rho12 - phi12) ** 2
    return lower, upper, quadratic, coupling


def _slacks(f: FactorData, phi: Any) -> tuple[Any, Any, Any, Any]:
    return feasibility_slacks(f.rho11, f.rho22, f.rho12, f.r21, f.phi12, phi)


def check_feasibility(f: FactorData, phi: float, tol: float | None = None) -> FeasibilityReport:
    """Evaluate max{0, r₂₁ − ϱ₂₂} ≤ φ ≤ min{ϱ₁₁, r₂₁}, |φ₁₂|² ≤ φ(φ + ϱ₂₂ − r₂₁)
    and |ϱ₁₂ − φ₁₂|² ≤ (ϱ₁₁ − φ)(r₂₁ − φ)."""
    tol = resolve(tol, "FEASIBILITY_TOLERANCE")
    if abs(f.rho12) > resolve(None, "RANK_THRESHOLD") * max(f.trace, 1e-300):
        logger.warning(
            "Coupling inequality evaluated with nonzero rho12 (%.3e); diagonalise first.",
            abs(f.rho12),
        )
    lower, upper, quadratic, coupling = _slacks(f, phi)
    return FeasibilityReport(
        phi=float(phi),
        lower_slack=float(lower),
        upper_slack=float(upper),
        quadratic_slack=float(quadratic),
        coupling_slack=float(coupling),
        scale=float(f.trace),
        tolerance=float(tol),
    )


@dataclass(frozen=True)
class FeasibleInterval:
    lower: float
    upper: float
    points: int
    step: float

    def contains(self, phi: float, slack: float | None = None) -> bool:
        slack = self.step if slack is None else slack
        return self.points > 0 and self.lower - slack <= phi <= self.upper + slack


def feasible_interval(f: FactorData, step: float = 1e-4, tol: float = 1e-12) -> FeasibleInterval:
    """Scan φ over the box with ``step`` and report the span of feasible grid points.

    The box is always included at both ends; a point counts as feasible when both
    quadratic slacks are ≥ −tol·t².
    """
    low = max(0.0, f.r21 - f.rho22)
    high = min(f.rho11, f.r21)
    if high < low:
        return FeasibleInterval(lower=low, upper=high, points=0, step=step)
    grid = np.append(np.arange(low, high, step), high)
    _lower, _upper, quadratic, coupling = _slacks(f, grid)
    floor = -tol * max(f.trace, 1e-300) ** 2
    feasible = grid[(quadratic >= floor) & (coupling >= floor)]
    if feasible.size == 0:
        return FeasibleInterval(lower=low, upper=high, points=0, step=step)
    return FeasibleInterval(
        lower=float(feasible.min()), upper=float(feasible.max()), points=int(feasible.size), step=step
    )


@dataclass(frozen=True, eq=False)
class FactorSolution:
    phi: np.ndarray
    psi: np.ndarray
    case: str
    phi0: float | None
    feasibility: FeasibilityReport

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter((self.phi, self.psi))


def stationarize_factor(f: FactorData, tol: float | None = None) -> FactorSolution:
    """Closed-form stationary pair of one factor, in the original basis.

    ``f`` is expected in the basis where ϱ is diagonal; rank one takes the unique pair,
    rank two takes φ = φ₀ from :func:`phi0`.
    """
    threshold = resolve(None, "RANK_THRESHOLD")
    t = f.trace
    u = np.asarray(f.basis_unitary, dtype=complex)
    if t <= 0:
        zero = np.zeros((2, 2), dtype=complex)
        return FactorSolution(zero, zero.copy(), CASE_ZERO, None, check_feasibility(f, 0.0, tol))
    if min(f.rho11, f.rho22) <= threshold * t:
        case = CASE_ONE
        if f.rho11 >= f.rho22:
            phi_value = f.r21
            phi = np.diag([f.r21, 0.0]).astype(complex)
            psi = np.diag([f.r12, 0.0]).astype(complex)
        else:
            phi_value = 0.0
            phi = np.diag([0.0, f.r12]).astype(complex)
            psi = np.diag([0.0, f.r21]).astype(complex)
    else:
        case = CASE_TWO
        phi_value = phi0(f.r21, f.rho22, abs(f.phi12))
        phi = np.array(
            [[phi_value, f.phi12], [np.conj(f.phi12), phi_value + f.rho22 - f.r21]],
            dtype=complex,
        )
        psi = np.array(
            [
                [f.rho11 - phi_value, f.rho12 - f.phi12],
                [np.conj(f.rho12 - f.phi12), f.r21 - phi_value],
            ],
            dtype=complex,
        )
    feasibility = check_feasibility(f, phi_value, tol)
    if case == CASE_TWO and not feasibility.feasible:
        raise InconsistencyError(
            _("Factor data of atom %(atom)s admit no feasible φ₀ (worst slack %(slack)s)."),
            code="infeasible",
            params={"atom": f.atom, "slack": feasibility.worst},
            report=feasibility,
        )
    logger.debug("Atom %s solved as %s, phi0=%s", f.atom, case, phi_value)
    u_adjoint = u.conj().T
    return FactorSolution(u @ phi @ u_adjoint, u @ psi @ u_adjoint, case, float(phi_value), feasibility)


def _diagonalizing_unitary(rho: np.ndarray, threshold: float) -> np.ndarray:
    """Eigenvectors of ϱ in descending order, each with a real nonnegative first component.

    A diagonal ϱ is handled without eigh: the identity when ϱ₁₁ ≥ ϱ₂₂, the swap otherwise.
    """
    rho11, rho22 = rho[0, 0].real, rho[1, 1].real
    t = rho11 + rho22
    if abs(rho[0, 1]) <= threshold * max(t, 1e-300):
        if rho11 >= rho22:
            return np.eye(2, dtype=complex)
        return np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    hermitian = 0.5 * (rho + rho.conj().T)
    _eigenvalues, vectors = np.linalg.eigh(hermitian)
    vectors = vectors[:, ::-1]
    for column in range(2):
        pivot = 0 if abs(vectors[0, column]) > 1e-15 else 1
        phase = vectors[pivot, column] / abs(vectors[pivot, column])
        vectors[:, column] = vectors[:, column] / phase
    return vectors


def factor_data(F: VectorFieldTable) -> list[FactorData]:
    """Per-atom factor data in the basis that diagonalises ϱ."""
    threshold = resolve(None, "RANK_THRESHOLD")
    rho = r_densities(F).rho.entries
    unitaries = np.array([_diagonalizing_unitary(block, threshold) for block in rho])
    rotated = twist(F, unitaries)
    report = r_densities(rotated)
    entries = report.rho.entries
    data = []
    for k in range(F.space.size):
        data.append(
            FactorData(
                rho11=float(entries[k, 0, 0].real),
                rho22=float(entries[k, 1, 1].real),
                rho12=complex(entries[k, 0, 1]),
                r12=float(report.r[k, 0, 1]),
                r21=float(report.r[k, 1, 0]),
                phi12=complex(report.cross[k, P21, P22]),
                basis_unitary=unitaries[k],
                atom=k,
            )
        )
    return data


@dataclass(frozen=True, eq=False)
class StationaryPair:
    phi: FunctionalDensity
    psi: FunctionalDensity

    def __post_init__(self) -> None:
        self.phi.space.require_same(self.psi.space)

    @property
    def space(self) -> MeasureSpace:
        return self.phi.space

    @property
    def total(self) -> FunctionalDensity:
        return self.phi + self.psi


def stationary_gram(space: MeasureSpace, phi: FunctionalDensity, psi: FunctionalDensity) -> np.ndarray:
    """Per-atom Gram table (atoms, 4, 4) predicted by φ(y*x) + ψ(xy*).

    For x = π_k ε_ij and y = π_k ε_i'j' the entry is ν_k(δ_ii' φ_jj' + δ_jj' ψ_i'i);
    entries between different atoms vanish.
    """
    space.require_same(phi.space)
    space.require_same(psi.space)
    eye = np.eye(2)
    left = np.einsum("ac,kbd->kabcd", eye, phi.entries)
    right = np.einsum("bd,kca->kabcd", eye, psi.entries)
    gram = (left + right).reshape(space.size, 4, 4)
    return space.weights[:, None, None] * gram


def check_stationarity(
    F: VectorFieldTable,
    pair: StationaryPair,
    tol: float | None = None,
    decomposition_tol: float | None = None,
) -> VerificationReport:
    """Residuals of ⟨F(x), F(y)⟩ = φ(y*x) + ψ(xy*) over all basis pairs, of φ + ψ = ϱ and of
    positivity."""
    tol = resolve(tol, "STATIONARITY_TOLERANCE")
    decomposition_tol = resolve(decomposition_tol, "DECOMPOSITION_TOLERANCE")
    floor = resolve(None, "PSD_FLOOR")
    F.space.require_same(pair.space)
    n = F.space.size
    actual = gram_matrix(F)
    predicted = np.zeros_like(actual)
    blocks = stationary_gram(F.space, pair.phi, pair.psi)
    predicted[np.arange(n), :, np.arange(n), :] = blocks
    residual = np.abs(actual - predicted)

    def describe_basis(index: int) -> dict[str, Any]:
        k, a, k2, b = np.unravel_index(index, residual.shape)
        return {
            "atom": int(k),
            "pair": PAIR_LABELS[a],
            "atom_b": int(k2),
            "pair_b": PAIR_LABELS[b],
        }

    rho = r_densities(F).rho
    decomposition = np.abs(pair.total.entries - rho.entries)

    def describe_entry(index: int) -> dict[str, Any]:
        k, i, j = np.unravel_index(index, decomposition.shape)
        return {"atom": int(k), "entry": f"{i + 1}{j + 1}"}

    report = VerificationReport(
        [
            check_record("stationary_identity", residual, tol, describe_basis),
            check_record("rho_decomposition", decomposition, decomposition_tol, describe_entry),
        ]
    )
    for name, density in (("phi_positive", pair.phi), ("psi_positive", pair.psi)):
        deficit = np.maximum(0.0, -density.min_eigenvalues())
        report.add(
            check_record(
                name,
                deficit,
                -floor,
                lambda k: {"atom": k},
                details={"min_eigenvalue": float(density.min_eigenvalues().min())},
            )
        )
    logger.info(
        "Stationarity check: passed=%s worst=%.3e", report.passed, float(residual.max(initial=0.0))
    )
    return report


@dataclass
class StationarityOutcome:
    pair: StationaryPair
    factors: list[FactorData]
    solutions: list[FactorSolution]
    report: VerificationReport
    verification: VerificationReport | None = None

    def factor_table(self) -> list[dict[str, Any]]:
        rows = []
        for data, solution in zip(self.factors, self.solutions):
            rows.append(
                {
                    **data.as_dict(),
                    "case": solution.case,
                    "phi0": solution.phi0,
                    "feasibility": solution.feasibility.as_dict(),
                }
            )
        return rows


def solve(
    F: VectorFieldTable,
    verify: bool = True,
    samples: int | None = None,
    trials: int | None = None,
    seed: int | None = None,
    identity_tol: float | None = None,
    tol: float | None = None,
) -> StationarityOutcome:
    """Stationarize ``F`` and keep every intermediate result.

    Raises ``InconsistencyError`` when the input fails verification, when an atom is
    infeasible, or when the assembled pair fails its own check.
    """
    verification = None
    if verify:
        verification = verify_field(F, samples=samples, trials=trials, seed=seed, tol=identity_tol)
        if not verification.passed:
            raise InconsistencyError(
                _("Input is not an orthogonal vector field: %(checks)s failed."),
                code="not_an_ovf",
                params={"checks": ", ".join(record.name for record in verification.failures())},
                report=verification,
            )
    factors = factor_data(F)
    solutions = [stationarize_factor(f) for f in factors]
    pair = StationaryPair(
        phi=FunctionalDensity(F.space, np.array([solution.phi for solution in solutions])),
        psi=FunctionalDensity(F.space, np.array([solution.psi for solution in solutions])),
    )
    report = check_stationarity(F, pair, tol)
    if not report.passed:
        raise InconsistencyError(
            _("Computed pair fails verification: %(checks)s."),
            code="stationarity_failed",
            params={"checks": ", ".join(record.name for record in report.failures())},
            report=report,
        )
    cases = [solution.case for solution in solutions]
    logger.info(
        "Stationarized %d atoms (%d rank-one, %d rank-two)",
        len(cases),
        cases.count(CASE_ONE),
        cases.count(CASE_TWO),
    )
    return StationarityOutcome(pair, factors, solutions, report, verification)


def stationarize(F: VectorFieldTable, verify: bool = True, **options: Any) -> StationaryPair:
    """A stationary pair for ``F``; see :func:`solve` for the options and errors."""
    return solve(F, verify=verify, **options).pair
