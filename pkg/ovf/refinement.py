"""
Level-set refinement on a simulated non-atomic Ω = [0, 1].

The density fields are piecewise polynomials. A level-n partition bins ϱ₁₁, r₂₁ and
|φ₁₂| (and the trace ϱ₁₁ + ϱ₂₂ when it is not constant) into half-open bins of width
1/n. Cells are unions of the elementary intervals with the same bin indices, and each
cell gets the closed-form φ₀ of its averaged densities. The approximants are compared
with the pointwise limit φ(ω) = φ₀(r₂₁(ω), ϱ₂₂(ω), |φ₁₂(ω)|).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Sequence

import numpy as np
from django.utils.translation import gettext_lazy as _
from numpy.polynomial import polynomial as P
from scipy.integrate import quad
from scipy.interpolate import PPoly

from .conf import resolve
from .exceptions import ConstructionError, DomainError
from .reports import CheckRecord, check_record
from .stationarity import feasibility_slacks, phi0

logger = logging.getLogger(__name__)

# Crossing points closer than this are merged.
EDGE_TOLERANCE = 1e-13
# Profile invariants are checked on the dense grid at this tolerance.
PROFILE_TOLERANCE = 1e-12
# Per-cell bound and oscillation checks allow this much rounding.
BOUND_TOLERANCE = 1e-12

CSV_COLUMNS = ("level", "cells", "sup_error", "l1_error", "bound_violations", "dominating_violations")


def _horner(coefficients: Sequence[float], s: float) -> float:
    value = 0.0
    for c in reversed(coefficients):
        value = value * s + c
    return value


@dataclass(frozen=True, eq=False)
class PiecewisePolynomial:
    """A real piecewise polynomial; ``coefficients[i]`` holds ascending powers of
    (x − breakpoints[i]) on piece i."""

    breakpoints: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        x = np.array(self.breakpoints, dtype=float).reshape(-1)
        c = np.array(self.coefficients, dtype=float)
        if x.size < 2 or np.any(np.diff(x) <= 0):
            raise ConstructionError(_("Breakpoints must be strictly increasing."), code="breakpoints")
        if c.ndim != 2 or c.shape[0] != x.size - 1 or c.shape[1] < 1:
            raise ConstructionError(
                _("Expected coefficients for %(pieces)s pieces, got shape %(shape)s."),
                code="coefficients",
                params={"pieces": x.size - 1, "shape": c.shape},
            )
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(c))):
            raise ConstructionError(_("Profile data must be finite."), code="non_finite")
        x.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "breakpoints", x)
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def constant(cls, value: float, breakpoints: Sequence[float] = (0.0, 1.0)) -> PiecewisePolynomial:
        x = np.asarray(breakpoints, dtype=float)
        return cls(x, np.full((x.size - 1, 1), float(value)))

    @classmethod
    def linear(cls, intercept: float, slope: float) -> PiecewisePolynomial:
        """intercept + slope·ω on [0, 1]."""
        return cls(np.array([0.0, 1.0]), np.array([[intercept, slope]]))

    @cached_property
    def ppoly(self) -> PPoly:
        return PPoly(self.coefficients[:, ::-1].T, self.breakpoints)

    @cached_property
    def antiderivative(self) -> PPoly:
        return self.ppoly.antiderivative()

    @property
    def degree(self) -> int:
        return int(self.coefficients.shape[1] - 1)

    @property
    def pieces(self) -> int:
        return int(self.coefficients.shape[0])

    def __call__(self, x: Any) -> Any:
        return self.ppoly(x)

    def on(self, breakpoints: Sequence[float]) -> PiecewisePolynomial:
        """The same function re-expanded on a refinement of its breakpoints."""
        x = np.union1d(self.breakpoints, np.asarray(breakpoints, dtype=float))
        left = x[:-1]
        coefficients = np.stack(
            [self.ppoly(left, nu=m) / math.factorial(m) for m in range(self.degree + 1)], axis=1
        )
        return PiecewisePolynomial(x, coefficients)

    def _aligned(self, other: PiecewisePolynomial) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = np.union1d(self.breakpoints, other.breakpoints)
        return x, self.on(x).coefficients, other.on(x).coefficients

    def __add__(self, other: PiecewisePolynomial | float) -> PiecewisePolynomial:
        if not isinstance(other, PiecewisePolynomial):
            coefficients = np.array(self.coefficients)
            coefficients[:, 0] += float(other)
            return PiecewisePolynomial(self.breakpoints, coefficients)
        x, a, b = self._aligned(other)
        width = max(a.shape[1], b.shape[1])
        a = np.pad(a, ((0, 0), (0, width - a.shape[1])))
        b = np.pad(b, ((0, 0), (0, width - b.shape[1])))
        return PiecewisePolynomial(x, a + b)

    __radd__ = __add__

    def __neg__(self) -> PiecewisePolynomial:
        return PiecewisePolynomial(self.breakpoints, -self.coefficients)

    def __sub__(self, other: PiecewisePolynomial | float) -> PiecewisePolynomial:
        return self + (-other)

    def __rsub__(self, other: float) -> PiecewisePolynomial:
        return (-self) + other

    def __mul__(self, other: PiecewisePolynomial | float) -> PiecewisePolynomial:
        if not isinstance(other, PiecewisePolynomial):
            return PiecewisePolynomial(self.breakpoints, self.coefficients * float(other))
        x, a, b = self._aligned(other)
        return PiecewisePolynomial(x, np.array([np.convolve(p, q) for p, q in zip(a, b)]))

    __rmul__ = __mul__

    def integrate(self, a: Any, b: Any) -> Any:
        """∫_a^b, vectorised over interval arrays."""
        return self.antiderivative(b) - self.antiderivative(a)

    def solve(self, y: float) -> np.ndarray:
        """Points where the field crosses ``y``; pieces identically equal to y are skipped."""
        roots = self.ppoly.solve(y, discontinuity=False, extrapolate=False)
        return np.unique(roots[np.isfinite(roots)])

    def piece_of(self, x: float) -> int:
        index = int(np.searchsorted(self.breakpoints, x, side="right")) - 1
        return min(max(index, 0), self.pieces - 1)

    def range_on(self, a: float, b: float) -> tuple[float, float]:
        """Minimum and maximum over [a, b], which must lie inside one piece."""
        i = self.piece_of(0.5 * (a + b))
        c = self.coefficients[i]
        origin = self.breakpoints[i]
        candidates = [a - origin, b - origin]
        slope = P.polytrim(P.polyder(c)) if c.size > 1 else np.zeros(1)
        if slope.size >= 2:
            for root in P.polyroots(slope):
                if abs(root.imag) < 1e-12 and a - origin < root.real < b - origin:
                    candidates.append(root.real)
        values = P.polyval(np.array(candidates), c)
        return float(values.min()), float(values.max())

    def local(self, a: float, b: float) -> Callable[[float], float]:
        """Fast scalar evaluator on [a, b] inside one piece."""
        i = self.piece_of(0.5 * (a + b))
        coefficients = [float(c) for c in self.coefficients[i]]
        origin = float(self.breakpoints[i])
        return lambda x: _horner(coefficients, x - origin)

    def bounds(self) -> tuple[float, float]:
        ranges = [
            self.range_on(self.breakpoints[i], self.breakpoints[i + 1]) for i in range(self.pieces)
        ]
        return min(r[0] for r in ranges), max(r[1] for r in ranges)

    def is_constant(self, tol: float = PROFILE_TOLERANCE) -> bool:
        low, high = self.bounds()
        return high - low <= tol

    def as_dict(self) -> dict[str, Any]:
        return {
            "breakpoints": self.breakpoints.tolist(),
            "coefficients": self.coefficients.tolist(),
        }


PROFILE_FIELDS = ("rho11", "rho22", "r21", "r12", "phi12_real", "phi12_imag")


@dataclass(frozen=True, eq=False)
class ScalarFieldProfile:
    """Densities ϱ₁₁, ϱ₂₂, r₂₁, r₁₂ and φ₁₂ on [0, 1] with Lebesgue measure."""

    rho11: PiecewisePolynomial
    rho22: PiecewisePolynomial
    r21: PiecewisePolynomial
    r12: PiecewisePolynomial
    phi12_real: PiecewisePolynomial
    phi12_imag: PiecewisePolynomial
    name: str = "custom"
    total_measure: float = field(default=1.0, init=False)

    def __post_init__(self) -> None:
        for name in PROFILE_FIELDS:
            x = getattr(self, name).breakpoints
            if x[0] != 0.0 or x[-1] != 1.0:
                raise ConstructionError(
                    _("Field %(name)s must be defined on [0, 1]."), code="domain", params={"name": name}
                )
        common = np.unique(np.concatenate([getattr(self, name).breakpoints for name in PROFILE_FIELDS]))
        for name in PROFILE_FIELDS:
            object.__setattr__(self, name, getattr(self, name).on(common))
        self._check_invariants()

    def _check_invariants(self) -> None:
        grid = np.union1d(np.linspace(0.0, 1.0, resolve(None, "REFINEMENT_GRID")), self.breakpoints)
        rho11, rho22 = self.rho11(grid), self.rho22(grid)
        r21, r12 = self.r21(grid), self.r12(grid)
        trace_gap = float(np.abs(r12 + r21 - rho11 - rho22).max())
        if trace_gap > PROFILE_TOLERANCE:
            raise ConstructionError(
                _("r12 + r21 = rho11 + rho22 fails by %(gap)s."),
                code="trace_identity",
                params={"gap": trace_gap},
            )
        for name, values in (("rho11", rho11), ("rho22", rho22), ("r21", r21), ("r12", r12)):
            if values.min() < -PROFILE_TOLERANCE:
                raise ConstructionError(
                    _("Field %(name)s takes the negative value %(value)s."),
                    code="negative",
                    params={"name": name, "value": float(values.min())},
                )
        phi_squared = self.abs_phi12_squared(grid)
        slack = r12 * r21 * rho11 * rho22 - phi_squared * (rho11 + rho22) ** 2
        if slack.min() < -PROFILE_TOLERANCE:
            raise ConstructionError(
                _("|phi12|² t² ≤ r12 r21 rho11 rho22 fails at ω = %(point)s."),
                code="estimate",
                params={"point": float(grid[int(np.argmin(slack))])},
            )

    @property
    def breakpoints(self) -> np.ndarray:
        return self.rho11.breakpoints

    @cached_property
    def abs_phi12_squared(self) -> PiecewisePolynomial:
        return self.phi12_real * self.phi12_real + self.phi12_imag * self.phi12_imag

    @cached_property
    def trace(self) -> PiecewisePolynomial:
        return self.rho11 + self.rho22

    def phi12(self, x: Any) -> Any:
        return self.phi12_real(x) + 1j * self.phi12_imag(x)

    def abs_phi12(self, x: Any) -> Any:
        return np.sqrt(np.clip(self.abs_phi12_squared(x), 0.0, None))

    def limit(self, x: Any) -> Any:
        """φ(ω) = φ₀(r₂₁(ω), ϱ₂₂(ω), |φ₁₂(ω)|)."""
        return phi0(self.r21(x), self.rho22(x), self.abs_phi12(x))

    def as_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "rho11": self.rho11.as_dict(),
            "rho22": self.rho22.as_dict(),
            "r21": self.r21.as_dict(),
            "r12": self.r12.as_dict(),
            "phi12": {"real": self.phi12_real.as_dict(), "imag": self.phi12_imag.as_dict()},
        }


def _linear(intercept: float, slope: float) -> PiecewisePolynomial:
    return PiecewisePolynomial.linear(intercept, slope)


def _constant(value: float) -> PiecewisePolynomial:
    return PiecewisePolynomial.constant(value)


def _builtin_constant() -> ScalarFieldProfile:
    return ScalarFieldProfile(
        rho11=_constant(0.6),
        rho22=_constant(0.4),
        r21=_constant(0.5),
        r12=_constant(0.5),
        phi12_real=_constant(0.1),
        phi12_imag=_constant(0.0),
        name="constant",
    )


def _builtin_linear() -> ScalarFieldProfile:
    return ScalarFieldProfile(
        rho11=_linear(0.3, 0.4),
        rho22=_linear(0.7, -0.4),
        r21=_constant(0.5),
        r12=_constant(0.5),
        phi12_real=_constant(0.0),
        phi12_imag=_constant(0.0),
        name="linear",
    )


def _builtin_tent() -> ScalarFieldProfile:
    breaks = np.array([0.0, 0.5, 1.0])
    return ScalarFieldProfile(
        rho11=PiecewisePolynomial(breaks, np.array([[0.2, 1.2], [0.8, -1.2]])),
        rho22=PiecewisePolynomial(breaks, np.array([[0.8, -1.2], [0.2, 1.2]])),
        r21=_linear(0.3, 0.4),
        r12=_linear(0.7, -0.4),
        phi12_real=_constant(0.05),
        phi12_imag=_constant(0.05),
        name="tent",
    )


def _builtin_two_piece() -> ScalarFieldProfile:
    breaks = np.array([0.0, 0.4, 1.0])
    return ScalarFieldProfile(
        rho11=PiecewisePolynomial(breaks, np.array([[0.5, 0.5], [0.7, -0.5]])),
        rho22=PiecewisePolynomial(breaks, np.array([[0.5, -0.5], [0.3, 0.5]])),
        r21=_linear(0.6, -0.3),
        r12=_linear(0.4, 0.3),
        phi12_real=_linear(0.0, 0.1),
        phi12_imag=_constant(0.0),
        name="two_piece",
    )


def _builtin_rotating_phase() -> ScalarFieldProfile:
    return ScalarFieldProfile(
        rho11=_linear(0.4, 0.2),
        rho22=_linear(0.3, 0.3),
        r21=_linear(0.35, 0.25),
        r12=_linear(0.35, 0.25),
        phi12_real=_constant(0.05),
        phi12_imag=_linear(0.0, 0.05),
        name="rotating_phase",
    )


BUILTIN_PROFILES: dict[str, Callable[[], ScalarFieldProfile]] = {
    "constant": _builtin_constant,
    "linear": _builtin_linear,
    "tent": _builtin_tent,
    "two_piece": _builtin_two_piece,
    "rotating_phase": _builtin_rotating_phase,
}


def builtin_profile(name: str) -> ScalarFieldProfile:
    try:
        return BUILTIN_PROFILES[name]()
    except KeyError:
        raise DomainError(
            _("Unknown profile %(name)s; choose one of %(choices)s."),
            code="profile",
            params={"name": name, "choices": ", ".join(BUILTIN_PROFILES)},
        ) from None


def profile_from_json(payload: Any) -> ScalarFieldProfile:
    """Validate a profile payload and build the profile; invalid data raise DRF
    ``ValidationError`` or ``ConstructionError``."""
    from .serializers import ScalarFieldProfileSerializer

    serializer = ScalarFieldProfileSerializer(data=payload)
    serializer.is_valid(raise_exception=True)
    return serializer.save()


@dataclass(frozen=True)
class BinnedFamily:
    name: str
    squared: bool

    def value(self, profile: ScalarFieldProfile, x: Any) -> Any:
        if self.squared:
            return profile.abs_phi12(x)
        return getattr(profile, self.name)(x)

    def field(self, profile: ScalarFieldProfile) -> PiecewisePolynomial:
        return profile.abs_phi12_squared if self.squared else getattr(profile, self.name)


BASE_FAMILIES = (
    BinnedFamily("rho11", squared=False),
    BinnedFamily("r21", squared=False),
    BinnedFamily("abs_phi12", squared=True),
)
TRACE_FAMILY = BinnedFamily("trace", squared=False)


@dataclass(frozen=True, eq=False)
class Cell:
    """One cell of a level-n partition: the elementary intervals sharing every bin index."""

    key: tuple[int, ...]
    intervals: tuple[tuple[float, float], ...]
    measure: float
    rho11: float
    rho22: float
    r21: float
    r12: float
    phi12: complex
    abs_phi12: float
    oscillation: dict[str, float]

    def as_dict(self) -> dict[str, Any]:
        return {
            "key": list(self.key),
            "measure": self.measure,
            "rho11": self.rho11,
            "rho22": self.rho22,
            "r21": self.r21,
            "r12": self.r12,
            "phi12": [self.phi12.real, self.phi12.imag],
            "abs_phi12": self.abs_phi12,
        }


@dataclass(frozen=True, eq=False)
class Partition:
    level: int
    cells: tuple[Cell, ...]
    families: tuple[BinnedFamily, ...]
    endpoints: np.ndarray
    interval_cell: np.ndarray

    @property
    def trace_binned(self) -> bool:
        return TRACE_FAMILY in self.families

    @property
    def total_measure(self) -> float:
        return float(sum(cell.measure for cell in self.cells))

    def cell_at(self, x: Any) -> Any:
        index = np.clip(np.searchsorted(self.endpoints, x, side="right") - 1, 0, self.interval_cell.size - 1)
        return self.interval_cell[index]

    def level_set(self, family: str, t: int) -> list[tuple[float, float]]:
        """Where ``family`` falls in bin t, as merged intervals."""
        position = [f.name for f in self.families].index(family)
        pieces = sorted(
            interval for cell in self.cells if cell.key[position] == t for interval in cell.intervals
        )
        merged: list[tuple[float, float]] = []
        for a, b in pieces:
            if merged and abs(merged[-1][1] - a) <= EDGE_TOLERANCE:
                merged[-1] = (merged[-1][0], b)
            else:
                merged.append((a, b))
        return merged

    def oscillation_violations(self) -> int:
        bound = 1.0 / self.level + BOUND_TOLERANCE
        return sum(1 for cell in self.cells for value in cell.oscillation.values() if value >= bound)


def _crossings(field_poly: PiecewisePolynomial, n: int, squared: bool) -> list[np.ndarray]:
    low, high = field_poly.bounds()
    if squared:
        low, high = math.sqrt(max(low, 0.0)), math.sqrt(max(high, 0.0))
    points = []
    for t in range(max(int(math.floor(low * n)), 0), int(math.ceil(high * n)) + 1):
        level = t / n
        points.append(field_poly.solve(level * level if squared else level))
    return points


def _endpoints(profile: ScalarFieldProfile, n: int, families: Sequence[BinnedFamily]) -> np.ndarray:
    points = [profile.breakpoints]
    for family in families:
        points.extend(_crossings(family.field(profile), n, family.squared))
    merged = np.unique(np.concatenate(points))
    interior = merged[(merged > EDGE_TOLERANCE) & (merged < 1.0 - EDGE_TOLERANCE)]
    kept: list[float] = [0.0]
    for x in interior:
        if x - kept[-1] > EDGE_TOLERANCE:
            kept.append(float(x))
    kept.append(1.0)
    return np.array(kept)


def _abs_phi12_integral(profile: ScalarFieldProfile, a: float, b: float) -> float:
    squared = profile.abs_phi12_squared
    if squared.degree == 0:
        return math.sqrt(max(float(squared.coefficients[squared.piece_of(a)][0]), 0.0)) * (b - a)
    evaluate = squared.local(a, b)
    value = quad(
        lambda x: math.sqrt(max(evaluate(x), 0.0)), a, b, epsabs=1e-14, epsrel=1e-12, limit=200
    )
    return float(value[0])


def build_partition(
    profile: ScalarFieldProfile, n: int, trace_binning: bool | None = None
) -> Partition:
    """The level-n partition with exact per-cell averages.

    The trace is binned as a fourth family when it is not constant (or when
    ``trace_binning`` forces it), so that ϱ₂₂ and r₁₂ also settle within 2/n.
    """
    if n < 1:
        raise DomainError(_("Partition level must be at least 1."), code="level")
    if trace_binning is None:
        trace_binning = not profile.trace.is_constant()
    families = BASE_FAMILIES + ((TRACE_FAMILY,) if trace_binning else ())
    endpoints = _endpoints(profile, n, families)
    left, right = endpoints[:-1], endpoints[1:]
    middle = 0.5 * (left + right)
    levels = [np.asarray(family.value(profile, middle), dtype=float) for family in families]
    keys = np.stack([np.floor(n * level).astype(int) for level in levels], axis=1)
    order: dict[tuple[int, ...], list[int]] = {}
    for index, key in enumerate(map(tuple, keys)):
        order.setdefault(key, []).append(index)

    integrals = {
        name: getattr(profile, name).integrate(left, right)
        for name in ("rho11", "rho22", "r21", "r12", "phi12_real", "phi12_imag")
    }
    interval_cell = np.empty(left.size, dtype=int)
    cells = []
    for position, key in enumerate(sorted(order)):
        members = order[key]
        interval_cell[members] = position
        measure = float(np.sum(right[members] - left[members]))
        averages = {name: float(np.sum(values[members])) / measure for name, values in integrals.items()}
        abs_average = sum(_abs_phi12_integral(profile, left[i], right[i]) for i in members) / measure
        cell_values = {
            "rho11": averages["rho11"],
            "r21": averages["r21"],
            "abs_phi12": abs_average,
            "trace": averages["rho11"] + averages["rho22"],
        }
        oscillation = {}
        for family in families:
            field_poly = family.field(profile)
            ranges = [field_poly.range_on(left[i], right[i]) for i in members]
            low, high = min(r[0] for r in ranges), max(r[1] for r in ranges)
            if family.squared:
                low, high = math.sqrt(max(low, 0.0)), math.sqrt(max(high, 0.0))
            average = cell_values[family.name]
            oscillation[family.name] = max(high - average, average - low)
        cells.append(
            Cell(
                key=tuple(int(k) for k in key),
                intervals=tuple((float(left[i]), float(right[i])) for i in members),
                measure=measure,
                rho11=averages["rho11"],
                rho22=averages["rho22"],
                r21=averages["r21"],
                r12=averages["r12"],
                phi12=complex(averages["phi12_real"], averages["phi12_imag"]),
                abs_phi12=abs_average,
                oscillation=oscillation,
            )
        )
    logger.debug("Level %d: %d intervals, %d cells", n, left.size, len(cells))
    return Partition(
        level=n,
        cells=tuple(cells),
        families=families,
        endpoints=endpoints,
        interval_cell=interval_cell,
    )


@dataclass(frozen=True, eq=False)
class PhiDelta:
    """The level-n approximant: one value per cell, with the box bounds of each cell."""

    partition: Partition
    values: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __call__(self, x: Any) -> Any:
        return self.values[self.partition.cell_at(x)]

    @property
    def bound_violations(self) -> int:
        slack = BOUND_TOLERANCE * (1.0 + np.abs(self.upper))
        return int(np.sum((self.values < self.lower - slack) | (self.values > self.upper + slack)))

    def cell_slacks(self) -> list[dict[str, float]]:
        """Quadratic and coupling slacks of every cell at its own value."""
        rows = []
        for cell, value in zip(self.partition.cells, self.values):
            slacks = feasibility_slacks(
                cell.rho11, cell.rho22, 0.0, cell.r21, abs(cell.phi12), value
            )
            rows.append({"quadratic_slack": float(slacks[2]), "coupling_slack": float(slacks[3])})
        return rows


def phi_delta(partition: Partition) -> PhiDelta:
    cells = partition.cells
    rho11 = np.array([cell.rho11 for cell in cells])
    rho22 = np.array([cell.rho22 for cell in cells])
    r21 = np.array([cell.r21 for cell in cells])
    # modulus of the averaged phi12, not the average modulus
    coupling = np.array([abs(cell.phi12) for cell in cells])
    values = np.atleast_1d(phi0(r21, rho22, coupling))
    return PhiDelta(
        partition=partition,
        values=values,
        lower=np.maximum(0.0, r21 - rho22),
        upper=np.minimum(rho11, r21),
    )


@dataclass(frozen=True)
class LevelResult:
    level: int
    cells: int
    sup_error: float
    l1_error: float
    bound_violations: int
    dominating_violations: int
    oscillation_violations: int
    trace_binned: bool

    def row(self) -> tuple[Any, ...]:
        return (
            self.level,
            self.cells,
            self.sup_error,
            self.l1_error,
            self.bound_violations,
            self.dominating_violations,
        )

    def as_dict(self) -> dict[str, Any]:
        return {
            "level": self.level,
            "cells": self.cells,
            "sup_error": self.sup_error,
            "l1_error": self.l1_error,
            "bound_violations": self.bound_violations,
            "dominating_violations": self.dominating_violations,
            "oscillation_violations": self.oscillation_violations,
            "trace_binned": self.trace_binned,
        }


@dataclass
class ConvergenceReport:
    profile: str
    levels: list[LevelResult]
    limit_integral: float
    dominating_integral: float
    limit_feasibility_violations: int
    grid_points: int

    @property
    def sup_errors(self) -> np.ndarray:
        return np.array([result.sup_error for result in self.levels])

    @property
    def l1_errors(self) -> np.ndarray:
        return np.array([result.l1_error for result in self.levels])

    @property
    def monotone_gap(self) -> float:
        """Largest increase of the sup error from one level to the next (0 if none)."""
        errors = self.sup_errors
        if errors.size < 2:
            return 0.0
        return float(max(np.max(np.diff(errors)), 0.0))

    def fitted_rate(self) -> tuple[float, float]:
        """C of err ≈ C/n (geometric mean of n·err) and the spread max/min of n·err."""
        scaled = np.array([r.level * r.sup_error for r in self.levels if r.sup_error > 0])
        if scaled.size == 0:
            return 0.0, 1.0
        return float(np.exp(np.mean(np.log(scaled)))), float(scaled.max() / scaled.min())

    def records(self) -> list[CheckRecord]:
        def level_of(index: int) -> dict[str, Any]:
            return {"level": self.levels[index].level}

        return [
            check_record("cell_bound", [r.bound_violations for r in self.levels], 0, level_of),
            check_record("monotone_sup_error", [self.monotone_gap], BOUND_TOLERANCE, lambda i: {}),
            check_record("dominating_bound", [r.dominating_violations for r in self.levels], 0, level_of),
            check_record("oscillation", [r.oscillation_violations for r in self.levels], 0, level_of),
            check_record("limit_feasibility", [self.limit_feasibility_violations], 0, lambda i: {}),
            check_record(
                "limit_integrability",
                [max(0.0, self.limit_integral - self.dominating_integral)],
                BOUND_TOLERANCE,
                lambda i: {},
            ),
        ]

    @property
    def passed(self) -> bool:
        return all(record.passed for record in self.records())

    def as_dict(self) -> dict[str, Any]:
        constant, spread = self.fitted_rate()
        return {
            "profile": self.profile,
            "levels": [result.as_dict() for result in self.levels],
            "fitted_constant": constant,
            "rate_spread": spread,
            "limit_integral": self.limit_integral,
            "dominating_integral": self.dominating_integral,
            "limit_feasibility_violations": self.limit_feasibility_violations,
            "grid_points": self.grid_points,
        }


def _l1_error(profile: ScalarFieldProfile, partition: Partition, delta: PhiDelta) -> float:
    total = 0.0
    endpoints = partition.endpoints
    for index in range(endpoints.size - 1):
        a, b = float(endpoints[index]), float(endpoints[index + 1])
        value = float(delta.values[partition.interval_cell[index]])
        r21 = profile.r21.local(a, b)
        rho22 = profile.rho22.local(a, b)
        squared = profile.abs_phi12_squared.local(a, b)

        def gap(x: float) -> float:
            limit = phi0(r21(x), rho22(x), math.sqrt(max(squared(x), 0.0)))
            return abs(value - limit)

        total += quad(gap, a, b, epsabs=1e-14, epsrel=1e-10, limit=200)[0]
    return total


def convergence_report(
    profile: ScalarFieldProfile, levels: Sequence[int] | None = None, grid: int | None = None
) -> ConvergenceReport:
    """Sup and L¹ distance between the level-n approximant and the pointwise limit."""
    levels = list(resolve(levels, "DEFAULT_LEVELS"))
    if not levels or any(n < 1 for n in levels) or any(b <= a for a, b in zip(levels, levels[1:])):
        raise DomainError(
            _("Levels must be positive and strictly ascending, got %(levels)s."),
            code="levels",
            params={"levels": levels},
        )
    points = np.union1d(np.linspace(0.0, 1.0, resolve(grid, "REFINEMENT_GRID")), profile.breakpoints)
    limit = profile.limit(points)
    rho11, r21 = profile.rho11(points), profile.r21(points)
    dominating = np.minimum(rho11, r21)

    results = []
    for n in levels:
        partition = build_partition(profile, n)
        delta = phi_delta(partition)
        sup_grid = float(np.max(np.abs(delta(points) - limit)))
        ends = partition.endpoints
        own = delta.values[partition.interval_cell]
        sup_ends = float(
            max(
                np.max(np.abs(own - profile.limit(ends[:-1]))),
                np.max(np.abs(own - profile.limit(ends[1:]))),
            )
        )
        results.append(
            LevelResult(
                level=n,
                cells=len(partition.cells),
                sup_error=max(sup_grid, sup_ends),
                l1_error=_l1_error(profile, partition, delta),
                bound_violations=delta.bound_violations,
                dominating_violations=int(
                    np.sum(delta(points) > dominating + 2.0 / n + BOUND_TOLERANCE)
                ),
                oscillation_violations=partition.oscillation_violations(),
                trace_binned=partition.trace_binned,
            )
        )
        logger.info("Level %d: %d cells, sup error %.3e", n, len(partition.cells), results[-1].sup_error)

    trace = profile.trace(points)
    lower, upper, quadratic, coupling = feasibility_slacks(
        rho11, profile.rho22(points), 0.0, r21, profile.abs_phi12(points), limit
    )
    tol = resolve(None, "FEASIBILITY_TOLERANCE")
    infeasible = (
        (np.minimum(lower, upper) < -tol * trace)
        | (np.minimum(quadratic, coupling) < -tol * trace**2)
    )
    breaks = profile.breakpoints[1:-1]
    limit_integral = quad(
        lambda x: float(profile.limit(x)), 0.0, 1.0, points=breaks if breaks.size else None, limit=500
    )
    dominating_integral = quad(
        lambda x: float(min(profile.rho11(x), profile.r21(x))),
        0.0,
        1.0,
        points=breaks if breaks.size else None,
        limit=500,
    )
    return ConvergenceReport(
        profile=profile.name,
        levels=results,
        limit_integral=float(limit_integral[0]),
        dominating_integral=float(dominating_integral[0]),
        limit_feasibility_violations=int(np.sum(infeasible)),
        grid_points=int(points.size),
    )
