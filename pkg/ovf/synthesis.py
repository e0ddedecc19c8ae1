"""
Building orthogonal vector fields: synthesis from four reductions, the coordinate
families of a single factor, direct-sum assembly over atoms and the Gram
factorisation of a stationary pair.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from django.utils.translation import gettext_lazy as _

from .conf import resolve
from .exceptions import ConstructionError, DomainError, InconsistencyError, SynthesisError
from .measure_algebra import INDEX_PAIRS, IndexPair, MeasureSpace
from .ovf_core import (
    FunctionalDensity,
    ReducedField,
    VectorFieldTable,
    basis_identity_checks,
    compact,
)
from .stationarity import stationary_gram

logger = logging.getLogger(__name__)

RANK1 = "rank1"
RANK2 = "rank2"
MIXED = "mixed"
CASES = (RANK1, RANK2)

DIRECT_SUM = "direct-sum"
COMPACT = "compact"
DIM_POLICIES = (DIRECT_SUM, COMPACT)

# Coordinate constraints are enforced at this absolute tolerance.
COORDINATE_TOLERANCE = 1e-14


@dataclass(frozen=True)
class FactorCoordinates:
    """Parameters of a rank-two factor field in ℂ⁴."""

    alpha: float
    omega: complex
    xi: complex
    xi3: complex
    xi4: complex
    eta3: complex
    eta4: complex

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ConstructionError(
                _("alpha must lie in (0, 1), got %(alpha)s."),
                code="alpha_range",
                params={"alpha": self.alpha},
            )
        if abs(abs(self.omega) - 1.0) > COORDINATE_TOLERANCE:
            raise ConstructionError(_("omega must be unimodular."), code="omega_modulus")
        if self.norm_residual > COORDINATE_TOLERANCE:
            raise ConstructionError(
                _("Coordinate norms do not sum to 1 (residual %(residual)s)."),
                code="norm_constraint",
                params={"residual": self.norm_residual},
            )
        if self.bilinear_residual > COORDINATE_TOLERANCE:
            raise ConstructionError(
                _("ξ₃η̄₃ + ξ₄η̄₄ = ω̄²ξ² fails (residual %(residual)s)."),
                code="bilinear_constraint",
                params={"residual": self.bilinear_residual},
            )

    @property
    def zeta(self) -> complex:
        return complex(self.omega * np.sqrt(self.alpha - self.alpha**2))

    @property
    def norm_residual(self) -> float:
        total = 2 * abs(self.xi) ** 2 + sum(
            abs(z) ** 2 for z in (self.xi3, self.xi4, self.eta3, self.eta4)
        )
        return abs(total - 1.0)

    @property
    def bilinear_residual(self) -> float:
        lhs = self.xi3 * np.conj(self.eta3) + self.xi4 * np.conj(self.eta4)
        return float(abs(lhs - np.conj(self.omega) ** 2 * self.xi**2))


@dataclass(frozen=True, eq=False)
class AtomVectors:
    """F(I), F₁₁, F₂₂, F₁₂, F₂₁ of one factor, each a vector of ℂ⁴."""

    unit: np.ndarray
    f11: np.ndarray
    f22: np.ndarray
    f12: np.ndarray
    f21: np.ndarray

    def table(self) -> np.ndarray:
        """The (2, 2, 4) block ``[[F₁₁, F₁₂], [F₂₁, F₂₂]]``."""
        return np.array([[self.f11, self.f12], [self.f21, self.f22]], dtype=complex)


def generate_rank2_atom(c: FactorCoordinates) -> AtomVectors:
    zeta = c.zeta
    return AtomVectors(
        unit=np.array([1, 0, 0, 0], dtype=complex),
        f11=np.array([c.alpha, zeta, 0, 0], dtype=complex),
        f22=np.array([1 - c.alpha, -zeta, 0, 0], dtype=complex),
        f12=np.array([0, c.xi, c.xi3, c.xi4], dtype=complex),
        f21=np.array([0, -(c.omega**2) * np.conj(c.xi), c.eta3, c.eta4], dtype=complex),
    )


def generate_rank1_atom(split: float) -> AtomVectors:
    """A factor field with ϱ of rank one: F(I) = F₁₁, ‖F₁₂‖² = split, ‖F₂₁‖² = 1 − split."""
    if not 0.0 <= split <= 1.0:
        raise DomainError(
            _("Rank-one split must lie in [0, 1], got %(split)s."),
            code="split_range",
            params={"split": split},
        )
    return AtomVectors(
        unit=np.array([1, 0, 0, 0], dtype=complex),
        f11=np.array([1, 0, 0, 0], dtype=complex),
        f22=np.zeros(4, dtype=complex),
        f12=np.array([0, np.sqrt(split), 0, 0], dtype=complex),
        f21=np.array([0, 0, np.sqrt(1 - split), 0], dtype=complex),
    )


def _unimodular(rng: np.random.Generator) -> complex:
    return complex(np.exp(2j * np.pi * rng.random()))


def sample_coordinates(
    rng: np.random.Generator, max_retries: int | None = None
) -> FactorCoordinates:
    """Draw coordinates: α uniform on [0.05, 0.95], magnitudes on the simplex.

    The phases of ξ₃η̄₃ and ξ₄η̄₄ are solved so that their sum equals ω̄²ξ²; this is
    possible exactly when the two moduli and |ξ|² satisfy the triangle inequality,
    otherwise the draw is rejected.
    """
    max_retries = resolve(max_retries, "MAX_COORDINATE_RETRIES")
    for attempt in range(max_retries):
        alpha = float(rng.uniform(0.05, 0.95))
        omega = _unimodular(rng)
        weights = rng.dirichlet(np.ones(5))
        xi = np.sqrt(weights[0] / 2) * _unimodular(rng)
        xi3_abs, xi4_abs, eta3_abs, eta4_abs = np.sqrt(weights[1:])
        target = np.conj(omega) ** 2 * xi**2
        t = abs(target)
        m1 = xi3_abs * eta3_abs
        m2 = xi4_abs * eta4_abs
        if t == 0 or m1 == 0 or m2 == 0 or not abs(m1 - m2) <= t <= m1 + m2:
            logger.debug("Coordinate draw %d rejected (triangle inequality)", attempt)
            continue
        cos_angle = np.clip((m1**2 + t**2 - m2**2) / (2 * m1 * t), -1.0, 1.0)
        z1 = m1 * np.exp(1j * (np.angle(target) + np.arccos(cos_angle)))
        z2 = target - z1
        xi3 = xi3_abs * _unimodular(rng)
        xi4 = xi4_abs * _unimodular(rng)
        # ξη̄ = z gives η = conj(z / ξ).
        eta3 = np.conj(z1 / xi3)
        eta4 = np.conj(z2 / xi4)
        # a common scale leaves the bilinear constraint intact
        scale = 1.0 / np.sqrt(2 * abs(xi) ** 2 + sum(abs(z) ** 2 for z in (xi3, xi4, eta3, eta4)))
        xi, xi3, xi4, eta3, eta4 = (scale * z for z in (xi, xi3, xi4, eta3, eta4))
        try:
            return FactorCoordinates(
                alpha=alpha,
                omega=omega,
                xi=complex(xi),
                xi3=complex(xi3),
                xi4=complex(xi4),
                eta3=complex(eta3),
                eta4=complex(eta4),
            )
        except ConstructionError:
            logger.debug("Coordinate draw %d rejected (rounding)", attempt)
    raise ConstructionError(
        _("No feasible coordinate draw after %(retries)s attempts."),
        code="coordinate_retries",
        params={"retries": max_retries},
    )


def coordinate_estimate(c: FactorCoordinates) -> float:
    """r₁₂r₂₁ − |ξ|² for the factor field of ``c``; nonnegative by Cauchy–Schwarz."""
    atom = generate_rank2_atom(c)
    r12 = float(np.vdot(atom.f12, atom.f12).real)
    r21 = float(np.vdot(atom.f21, atom.f21).real)
    return r12 * r21 - abs(c.xi) ** 2


def haar_unitary(rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diagonal = np.diag(r)
    return q * (diagonal / np.abs(diagonal))


@dataclass(frozen=True, eq=False)
class GeneratorSpec:
    """Everything ``assemble`` needs; it is a pure function of this value."""

    cases: tuple[str, ...]
    seed: int = 0
    weights: tuple[float, ...] | None = None
    splits: tuple[float, ...] | None = None
    twists: tuple[np.ndarray | None, ...] | None = None
    coordinates: tuple[FactorCoordinates | None, ...] | None = None
    dim_policy: str = DIRECT_SUM
    atom_ids: tuple[str, ...] | None = field(default=None)

    def __post_init__(self) -> None:
        n = len(self.cases)
        if n < 1:
            raise ConstructionError(_("A generator needs at least one atom."), code="atoms")
        for case in self.cases:
            if case not in CASES:
                raise ConstructionError(
                    _("Unknown case tag %(case)s."), code="case", params={"case": case}
                )
        if self.dim_policy not in DIM_POLICIES:
            raise ConstructionError(
                _("Unknown dimension policy %(policy)s."),
                code="dim_policy",
                params={"policy": self.dim_policy},
            )
        if not 0 <= self.seed < 2**64:
            raise ConstructionError(_("Seed must be a 64-bit unsigned integer."), code="seed")
        for name in ("weights", "splits", "twists", "coordinates", "atom_ids"):
            value = getattr(self, name)
            if value is not None and len(value) != n:
                raise ConstructionError(
                    _("%(name)s has %(got)s entries for %(atoms)s atoms."),
                    code="length",
                    params={"name": name, "got": len(value), "atoms": n},
                )
        if self.splits is not None:
            for split in self.splits:
                if not 0.0 <= split <= 1.0:
                    raise ConstructionError(
                        _("Rank-one split must lie in [0, 1], got %(split)s."),
                        code="split_range",
                        params={"split": split},
                    )
        if self.twists is not None:
            for u in self.twists:
                if u is None:
                    continue
                u = np.asarray(u, dtype=complex)
                if u.shape != (2, 2) or not np.allclose(u.conj().T @ u, np.eye(2), atol=1e-10):
                    raise ConstructionError(_("Twists must be 2×2 unitaries."), code="twist")

    @property
    def atoms(self) -> int:
        return len(self.cases)

    @classmethod
    def sampled(
        cls,
        atoms: int,
        case: str = MIXED,
        seed: int = 0,
        twist: bool = False,
        split: float | None = None,
        weights: Sequence[float] | None = None,
        dim_policy: str = DIRECT_SUM,
    ) -> GeneratorSpec:
        """Draw case tags, masses, splits and twists from the seed.

        Masses are uniform on [0.5, 1.5] unless given; the split is uniform on [0, 1]
        unless given.
        """
        if atoms < 1:
            raise ConstructionError(_("A generator needs at least one atom."), code="atoms")
        if case not in CASES + (MIXED,):
            raise ConstructionError(_("Unknown case tag %(case)s."), code="case", params={"case": case})
        rng = np.random.default_rng([seed, 0])
        if case == MIXED:
            cases = tuple(CASES[i] for i in rng.integers(0, 2, size=atoms))
        else:
            cases = (case,) * atoms
        drawn_weights = rng.uniform(0.5, 1.5, size=atoms)
        drawn_splits = rng.uniform(0.0, 1.0, size=atoms)
        twists = tuple(haar_unitary(rng) for _ in range(atoms)) if twist else None
        return cls(
            cases=cases,
            seed=seed,
            weights=tuple(float(w) for w in (weights if weights is not None else drawn_weights)),
            splits=tuple(float(split) if split is not None else float(s) for s in drawn_splits),
            twists=twists,
            dim_policy=dim_policy,
        )

    def space(self) -> MeasureSpace:
        weights = self.weights if self.weights is not None else (1.0,) * self.atoms
        ids = self.atom_ids if self.atom_ids is not None else tuple(f"w{k}" for k in range(self.atoms))
        return MeasureSpace(atoms=ids, weights=np.asarray(weights))


def assemble(spec: GeneratorSpec) -> VectorFieldTable:
    """Direct sum of per-atom factor fields, each in its own block of four coordinates.

    Atom k is scaled by √ν_k and optionally twisted to x ↦ F(u_k x u_k*).
    """
    space = spec.space()
    n = spec.atoms
    rng = np.random.default_rng([spec.seed, 1])
    values = np.zeros((n, 2, 2, 4 * n), dtype=complex)
    for k, case in enumerate(spec.cases):
        if case == RANK2:
            given = spec.coordinates[k] if spec.coordinates is not None else None
            coordinates = given if given is not None else sample_coordinates(rng)
            atom = generate_rank2_atom(coordinates)
        else:
            atom = generate_rank1_atom(spec.splits[k] if spec.splits is not None else 0.5)
        block = np.sqrt(space.weights[k]) * atom.table()
        if spec.twists is not None and spec.twists[k] is not None:
            u = np.asarray(spec.twists[k], dtype=complex)
            block = np.einsum("ai,bj,abd->ijd", u, u.conj(), block)
        values[k, :, :, 4 * k : 4 * k + 4] = block
        logger.debug("Atom %d: %s, twisted=%s", k, case, spec.twists is not None)
    field_table = VectorFieldTable(space, values)
    if spec.dim_policy == COMPACT:
        field_table = compact(field_table)
    logger.info("Assembled %d-atom field in dimension %d", n, field_table.hilbert_dim)
    return field_table


def synthesize(
    tables: Mapping[IndexPair, ReducedField] | Sequence[ReducedField],
    check: bool = True,
    tol: float | None = None,
) -> VectorFieldTable:
    """Glue four commutative fields into F with F(π_k ε_ij) = F_ij(π_k).

    With ``check`` the reduction identities are verified first and a failure raises
    ``SynthesisError`` naming the identity and atom.
    """
    if isinstance(tables, Mapping):
        ordered = [tables[which] for which in INDEX_PAIRS]
    else:
        ordered = list(tables)
    if len(ordered) != 4:
        raise DomainError(_("Synthesis needs exactly four reductions."), code="reduction_count")
    space = ordered[0].space
    for reduced in ordered[1:]:
        space.require_same(reduced.space)
        if reduced.hilbert_dim != ordered[0].hilbert_dim:
            raise DomainError(_("Reductions take values in different dimensions."), code="dimension")
    values = np.stack([reduced.values for reduced in ordered], axis=1)
    F = VectorFieldTable(space, values.reshape(space.size, 2, 2, -1))
    if check:
        report = basis_identity_checks(F, tol)
        for record in report.failures():
            witness = record.witnesses[0]
            raise SynthesisError(
                _("Reductions violate %(identity)s at atom %(atom)s (residual %(residual)s)."),
                code=record.name,
                params={
                    "identity": record.name,
                    "atom": witness["atom"],
                    "residual": witness["residual"],
                },
            )
    return F


def generate_from_stationary_pair(phi: FunctionalDensity, psi: FunctionalDensity) -> VectorFieldTable:
    """A field whose inner products are φ(y*x) + ψ(xy*), by factoring the basis Gram table."""
    phi.space.require_same(psi.space)
    floor = resolve(None, "PSD_FLOOR")
    for name, density in (("phi", phi), ("psi", psi)):
        if not density.is_positive(floor):
            raise DomainError(
                _("%(name)s is not positive semidefinite (minimum eigenvalue %(value)s)."),
                code="not_psd",
                params={"name": name, "value": float(density.min_eigenvalues().min())},
            )
    space = phi.space
    gram = stationary_gram(space, phi, psi)
    clip = resolve(None, "GRAM_CLIP")
    psd_floor = resolve(None, "GRAM_PSD_FLOOR")
    n = space.size
    values = np.zeros((n, 4, 4 * n), dtype=complex)
    for k in range(n):
        eigenvalues, vectors = np.linalg.eigh(gram[k])
        top = max(float(np.abs(eigenvalues).max()), 0.0)
        if top > 0 and eigenvalues[0] < psd_floor * top:
            raise InconsistencyError(
                _("Gram table of atom %(atom)s is not positive (eigenvalue %(value)s)."),
                code="gram_not_psd",
                params={"atom": k, "value": float(eigenvalues[0])},
            )
        eigenvalues = np.where(eigenvalues < clip * top, 0.0, eigenvalues)
        values[k, :, 4 * k : 4 * k + 4] = vectors * np.sqrt(eigenvalues)
    logger.info("Factored stationary Gram table over %d atoms", n)
    return VectorFieldTable(space, values.reshape(n, 2, 2, 4 * n))
