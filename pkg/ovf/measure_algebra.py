"""
Finite atomic model of the commutative algebra M = L∞(Ω, ν) and of the block
algebra N = M ⊗ M₂.

Every element of M is one complex number per atom, every element of N is one 2×2
complex matrix per atom, and all algebra operations are atom-wise. Projections of N
are handled through the canonical form ``π₁ ⊕ π₂ + p(a, v, π)``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np
from django.utils.translation import gettext_lazy as _

from .conf import resolve
from .exceptions import ConstructionError, DomainError

logger = logging.getLogger(__name__)

IndexPair = tuple[int, int]

# Basis order used for tables, Gram matrices and serialization.
INDEX_PAIRS: tuple[IndexPair, ...] = ((1, 1), (1, 2), (2, 1), (2, 2))

PHASES: tuple[complex, ...] = (1.0, 1j, -1.0, -1j)


def _check_pair(which: IndexPair) -> tuple[int, int]:
    i, j = which
    if i not in (1, 2) or j not in (1, 2):
        raise DomainError(
            _("Matrix unit indices must lie in {1, 2}, got (%(i)s, %(j)s)."),
            code="bad_index",
            params={"i": i, "j": j},
        )
    return i - 1, j - 1


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class MeasureSpace:
    """A finite atomic measure space: ordered atoms with positive masses."""

    atoms: tuple[str, ...]
    weights: np.ndarray

    def __post_init__(self) -> None:
        atoms = tuple(str(atom) for atom in self.atoms)
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if len(atoms) == 0:
            raise ConstructionError(_("A measure space needs at least one atom."), code="empty")
        if len(set(atoms)) != len(atoms):
            raise ConstructionError(_("Atom identifiers must be unique."), code="duplicate_atom")
        if weights.shape != (len(atoms),):
            raise ConstructionError(
                _("Got %(weights)s weights for %(atoms)s atoms."),
                code="weight_count",
                params={"weights": weights.size, "atoms": len(atoms)},
            )
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise ConstructionError(_("Atom weights must be finite and positive."), code="weight_sign")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", _frozen(weights))

    @classmethod
    def from_weights(cls, weights: Sequence[float]) -> MeasureSpace:
        return cls(atoms=tuple(f"w{k}" for k in range(len(weights))), weights=np.asarray(weights))

    @classmethod
    def uniform(cls, count: int, mass: float = 1.0) -> MeasureSpace:
        return cls.from_weights([mass] * count)

    @property
    def size(self) -> int:
        return len(self.atoms)

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def same_as(self, other: MeasureSpace) -> bool:
        return self.atoms == other.atoms and np.array_equal(self.weights, other.weights)

    def require_same(self, other: MeasureSpace) -> None:
        if not self.same_as(other):
            raise DomainError(_("Operands live on different measure spaces."), code="space_mismatch")


@dataclass(frozen=True, eq=False)
class CenterElement:
    """An element a ∈ M: one complex value per atom."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=complex).reshape(-1)
        object.__setattr__(self, "values", _frozen(values))

    @classmethod
    def constant(cls, count: int, value: complex = 1.0) -> CenterElement:
        return cls(np.full(count, value, dtype=complex))

    @classmethod
    def indicator(cls, count: int, members: Iterable[int]) -> CenterElement:
        values = np.zeros(count, dtype=complex)
        values[list(members)] = 1.0
        return cls(values)

    @property
    def size(self) -> int:
        return int(self.values.size)

    def is_projection(self) -> bool:
        return bool(np.all((self.values == 0) | (self.values == 1)))

    def is_selfadjoint(self) -> bool:
        return bool(np.all(self.values.imag == 0))

    def conj(self) -> CenterElement:
        return CenterElement(self.values.conj())

    def __mul__(self, other: CenterElement) -> CenterElement:
        return CenterElement(self.values * other.values)

    def __add__(self, other: CenterElement) -> CenterElement:
        return CenterElement(self.values + other.values)

    def __sub__(self, other: CenterElement) -> CenterElement:
        return CenterElement(self.values - other.values)

    def complement(self) -> CenterElement:
        """1 − a."""
        return CenterElement(1.0 - self.values)

    def support(self) -> np.ndarray:
        """Boolean mask of atoms where the value is 1 (for projections)."""
        return self.values.real > 0.5


@dataclass(frozen=True, eq=False)
class BlockElement:
    """An element x ∈ N: one 2×2 complex matrix per atom."""

    blocks: np.ndarray

    def __post_init__(self) -> None:
        blocks = np.array(self.blocks, dtype=complex)
        if blocks.ndim != 3 or blocks.shape[1:] != (2, 2):
            raise ConstructionError(
                _("Block elements need shape (atoms, 2, 2), got %(shape)s."),
                code="block_shape",
                params={"shape": blocks.shape},
            )
        object.__setattr__(self, "blocks", _frozen(blocks))

    @classmethod
    def zeros(cls, count: int) -> BlockElement:
        return cls(np.zeros((count, 2, 2), dtype=complex))

    @classmethod
    def identity(cls, count: int) -> BlockElement:
        return cls(np.broadcast_to(np.eye(2, dtype=complex), (count, 2, 2)))

    @property
    def size(self) -> int:
        return int(self.blocks.shape[0])

    def product(self, other: BlockElement) -> BlockElement:
        return BlockElement(self.blocks @ other.blocks)

    def adjoint(self) -> BlockElement:
        return BlockElement(np.conj(np.swapaxes(self.blocks, 1, 2)))

    def __matmul__(self, other: BlockElement) -> BlockElement:
        return self.product(other)

    def __add__(self, other: BlockElement) -> BlockElement:
        return BlockElement(self.blocks + other.blocks)

    def __sub__(self, other: BlockElement) -> BlockElement:
        return BlockElement(self.blocks - other.blocks)

    def __mul__(self, scalar: complex) -> BlockElement:
        return BlockElement(self.blocks * scalar)

    __rmul__ = __mul__

    def entry(self, which: IndexPair) -> CenterElement:
        """The center element x_ij."""
        i, j = _check_pair(which)
        return CenterElement(self.blocks[:, i, j])

    def max_abs(self) -> float:
        return float(np.abs(self.blocks).max(initial=0.0))

    def projection_residual(self) -> float:
        """max over atoms of ‖x² − x‖ and ‖x − x*‖ (entry-wise maximum)."""
        square = np.abs(self.blocks @ self.blocks - self.blocks).max(initial=0.0)
        hermitian = np.abs(self.blocks - np.conj(np.swapaxes(self.blocks, 1, 2))).max(initial=0.0)
        return float(max(square, hermitian))

    def is_projection(self, tol: float | None = None) -> bool:
        return self.projection_residual() <= resolve(tol, "PROJECTION_TOLERANCE")

    def unitary_residual(self) -> float:
        eye = np.eye(2)
        return float(np.abs(self.adjoint().blocks @ self.blocks - eye).max(initial=0.0))

    def allclose(self, other: BlockElement, atol: float = 1e-12) -> bool:
        return self.blocks.shape == other.blocks.shape and bool(
            np.allclose(self.blocks, other.blocks, rtol=0.0, atol=atol)
        )


def block_product(x: BlockElement, y: BlockElement) -> BlockElement:
    return x @ y


def block_sum(x: BlockElement, y: BlockElement) -> BlockElement:
    return x + y


def block_adjoint(x: BlockElement) -> BlockElement:
    return x.adjoint()


def block_scale(x: BlockElement, scalar: complex) -> BlockElement:
    return x * scalar


def is_block_unitary(u: BlockElement, tol: float = 1e-12) -> bool:
    return u.unitary_residual() <= tol


def matrix_unit(which: IndexPair, space: MeasureSpace) -> BlockElement:
    """ε_ij: 1 at entry (i, j) of every atom's block."""
    i, j = _check_pair(which)
    blocks = np.zeros((space.size, 2, 2), dtype=complex)
    blocks[:, i, j] = 1.0
    return BlockElement(blocks)


def embed_center(a: CenterElement, which: IndexPair) -> BlockElement:
    """a·ε_ij: the block with a at entry (i, j) and zeros elsewhere."""
    i, j = _check_pair(which)
    blocks = np.zeros((a.size, 2, 2), dtype=complex)
    blocks[:, i, j] = a.values
    return BlockElement(blocks)


def center_to_block(a: CenterElement) -> BlockElement:
    """a·I, the center embedding."""
    return embed_center(a, (1, 1)) + embed_center(a, (2, 2))


def range_projection(a: CenterElement, tol: float | None = None) -> CenterElement:
    """rp(a) for a ≥ 0: the indicator of the atoms where a exceeds the support tolerance."""
    tol = resolve(tol, "SUPPORT_TOLERANCE")
    values = a.values
    if np.any(np.abs(values.imag) > tol) or np.any(values.real < -tol):
        raise DomainError(
            _("Range projection needs a nonnegative element; minimum value is %(value)s."),
            code="negative",
            params={"value": float(values.real.min())},
        )
    return CenterElement((values.real > tol).astype(complex))


def kappa(a: np.ndarray) -> np.ndarray:
    return np.sqrt(np.clip(a * (1.0 - a), 0.0, None))


def phase_projection(sigma: CenterElement, omega: complex) -> BlockElement:
    """½[[σ, ω̄σ], [ωσ, σ]]; a projection for every unimodular ω."""
    s = sigma.values
    blocks = np.empty((s.size, 2, 2), dtype=complex)
    blocks[:, 0, 0] = 0.5 * s
    blocks[:, 0, 1] = 0.5 * np.conj(omega) * s
    blocks[:, 1, 0] = 0.5 * omega * s
    blocks[:, 1, 1] = 0.5 * s
    return BlockElement(blocks)


def unit_decomposition(sigma: CenterElement, which: IndexPair) -> list[tuple[complex, BlockElement]]:
    """Coefficients and projections with σε₁₂ (or σε₂₁) = Σ c·h_ω.

    σε₁₂ = ½ Σ_ω ω·h_ω and σε₂₁ = ½ Σ_ω ω̄·h_ω over ω ∈ {±1, ±i}.
    """
    if which == (1, 2):
        return [(0.5 * omega, phase_projection(sigma, omega)) for omega in PHASES]
    if which == (2, 1):
        return [(0.5 * np.conj(omega), phase_projection(sigma, omega)) for omega in PHASES]
    raise DomainError(_("Only off-diagonal units decompose into phase projections."), code="bad_index")


@dataclass(frozen=True, eq=False)
class CanonicalProjection:
    """A projection of N in the form π₁ ⊕ π₂ + p(a, v, π), with π stored as ``pi3``."""

    pi1: CenterElement
    pi2: CenterElement
    pi3: CenterElement
    a: CenterElement
    v: CenterElement

    def __post_init__(self) -> None:
        sizes = {self.pi1.size, self.pi2.size, self.pi3.size, self.a.size, self.v.size}
        if len(sizes) != 1:
            raise ConstructionError(_("Canonical projection parts have different lengths."), code="length")
        for name in ("pi1", "pi2", "pi3"):
            if not getattr(self, name).is_projection():
                raise ConstructionError(
                    _("%(name)s must be a projection of M (values in {0, 1})."),
                    code="not_projection",
                    params={"name": name},
                )
        on_pi = self.pi3.support()
        for name in ("pi1", "pi2"):
            clash = np.flatnonzero(getattr(self, name).support() & on_pi)
            if clash.size:
                raise ConstructionError(
                    _("%(name)s ≤ 1 − π fails at atom %(atom)s."),
                    code="overlap",
                    params={"name": name, "atom": int(clash[0])},
                )
        strictness = resolve(None, "STRICTNESS")
        a = self.a.values
        if np.any(np.abs(a.imag[on_pi]) > 0):
            raise ConstructionError(_("a must be real on π."), code="a_not_real")
        margin = np.minimum(a.real, 1.0 - a.real)
        bad = np.flatnonzero(on_pi & ~(margin > strictness))
        if bad.size:
            raise ConstructionError(
                _("0 < a < 1 on π fails at atom %(atom)s (a = %(value)s)."),
                code="a_range",
                params={"atom": int(bad[0]), "value": float(a.real[bad[0]])},
            )
        phase_tol = resolve(None, "PHASE_TOLERANCE")
        bad = np.flatnonzero(on_pi & (np.abs(np.abs(self.v.values) - 1.0) > phase_tol))
        if bad.size:
            raise ConstructionError(
                _("|v| = 1 on π fails at atom %(atom)s."),
                code="v_modulus",
                params={"atom": int(bad[0])},
            )

    @classmethod
    def build(
        cls,
        pi1: Sequence[int],
        pi2: Sequence[int],
        pi3: Sequence[int],
        a: Sequence[float],
        v: Sequence[complex],
    ) -> CanonicalProjection:
        return cls(
            pi1=CenterElement(pi1),
            pi2=CenterElement(pi2),
            pi3=CenterElement(pi3),
            a=CenterElement(a),
            v=CenterElement(v),
        )

    @property
    def size(self) -> int:
        return self.pi1.size

    def same_as(self, other: CanonicalProjection, atol: float = 1e-12) -> bool:
        """Equality of the lattice parts everywhere and of (a, v) on π."""
        if self.size != other.size:
            return False
        for name in ("pi1", "pi2", "pi3"):
            if not np.array_equal(getattr(self, name).values, getattr(other, name).values):
                return False
        on_pi = self.pi3.support()
        return bool(
            np.allclose(self.a.values[on_pi], other.a.values[on_pi], rtol=0.0, atol=atol)
            and np.allclose(self.v.values[on_pi], other.v.values[on_pi], rtol=0.0, atol=atol)
        )

    def as_dict(self) -> dict[str, Any]:
        return {
            "pi1": self.pi1.values.real.astype(int).tolist(),
            "pi2": self.pi2.values.real.astype(int).tolist(),
            "pi3": self.pi3.values.real.astype(int).tolist(),
            "a": self.a.values.real.tolist(),
            "v": [[float(z.real), float(z.imag)] for z in self.v.values],
        }


def materialize(r: CanonicalProjection) -> BlockElement:
    """π₁ ⊕ π₂ + p(a, v, π) as a block element."""
    pi = r.pi3.values.real
    a = r.a.values.real
    v = r.v.values
    k = kappa(a)
    blocks = np.zeros((r.size, 2, 2), dtype=complex)
    blocks[:, 0, 0] = r.pi1.values.real + a * pi
    blocks[:, 1, 1] = r.pi2.values.real + (1.0 - a) * pi
    blocks[:, 0, 1] = v * pi * k
    blocks[:, 1, 0] = np.conj(v) * pi * k
    return BlockElement(blocks)


def decompose_projection(p: BlockElement, tol: float | None = None) -> CanonicalProjection:
    """Inverse of :func:`materialize`: classify each atom's block of a projection."""
    tol = resolve(tol, "PROJECTION_TOLERANCE")
    residual = p.projection_residual()
    if residual > tol:
        raise DomainError(
            _("Not a projection: max residual %(residual)s exceeds %(tol)s."),
            code="not_projection",
            params={"residual": residual, "tol": tol},
        )
    phase_tol = resolve(None, "PHASE_TOLERANCE")
    strictness = resolve(None, "STRICTNESS")
    n = p.size
    pi1 = np.zeros(n)
    pi2 = np.zeros(n)
    pi3 = np.zeros(n)
    a = np.zeros(n)
    v = np.ones(n, dtype=complex)
    snapped = 0.0
    for k, block in enumerate(p.blocks):
        rank = int(round(float(np.trace(block).real)))
        if rank == 2:
            pi1[k] = pi2[k] = 1.0
        elif rank == 1:
            off = block[0, 1]
            diagonal = block[0, 0].real
            # a must clear the same margin CanonicalProjection enforces on π
            if abs(off) <= phase_tol or min(diagonal, 1.0 - diagonal) <= strictness:
                snapped = max(snapped, abs(off))
                if diagonal > 0.5:
                    pi1[k] = 1.0
                else:
                    pi2[k] = 1.0
            else:
                pi3[k] = 1.0
                a[k] = diagonal
                v[k] = off / abs(off)
    if snapped > phase_tol:
        logger.info("Snapped near-diagonal atoms onto π₁/π₂, dropping off-diagonal mass %.3g", snapped)
    logger.debug("Decomposed projection: |π₁|=%d |π₂|=%d |π|=%d", pi1.sum(), pi2.sum(), pi3.sum())
    return CanonicalProjection.build(pi1, pi2, pi3, a, v)


@dataclass(frozen=True)
class OrthogonalityWitness:
    atom: int
    condition: str
    value: float


def orthogonality_conditions(
    p: CanonicalProjection, q: CanonicalProjection, tol: float | None = None
) -> tuple[bool, list[OrthogonalityWitness]]:
    """Evaluate the lattice conditions equivalent to pq = 0.

    τᵢσᵢ = τᵢτ₃ = σᵢσ₃ = τ₃σᵢ = τᵢσ₃ = 0 (i = 1, 2) and, on π = σ₃τ₃,
    wπ = −vπ and bπ = (1 − a)π. Returns the verdict and the failing conditions.
    """
    tol = resolve(tol, "PROJECTION_TOLERANCE")
    tau = [p.pi1.support(), p.pi2.support(), p.pi3.support()]
    sigma = [q.pi1.support(), q.pi2.support(), q.pi3.support()]
    witnesses: list[OrthogonalityWitness] = []

    disjoint = {
        "tau1*sigma1": tau[0] & sigma[0],
        "tau2*sigma2": tau[1] & sigma[1],
        "tau1*tau3": tau[0] & tau[2],
        "tau2*tau3": tau[1] & tau[2],
        "sigma1*sigma3": sigma[0] & sigma[2],
        "sigma2*sigma3": sigma[1] & sigma[2],
        "tau3*sigma1": tau[2] & sigma[0],
        "tau3*sigma2": tau[2] & sigma[1],
        "tau1*sigma3": tau[0] & sigma[2],
        "tau2*sigma3": tau[1] & sigma[2],
    }
    for condition, overlap in disjoint.items():
        witnesses.extend(OrthogonalityWitness(int(k), condition, 1.0) for k in np.flatnonzero(overlap))

    common = tau[2] & sigma[2]
    phase_gap = np.abs(q.v.values + p.v.values)
    weight_gap = np.abs(q.a.values.real - (1.0 - p.a.values.real))
    for k in np.flatnonzero(common & (phase_gap > tol)):
        witnesses.append(OrthogonalityWitness(int(k), "w = -v on pi", float(phase_gap[k])))
    for k in np.flatnonzero(common & (weight_gap > tol)):
        witnesses.append(OrthogonalityWitness(int(k), "b = 1 - a on pi", float(weight_gap[k])))
    return not witnesses, witnesses


def _rank_one_blocks(a: np.ndarray, v: np.ndarray) -> np.ndarray:
    k = kappa(a)
    blocks = np.empty(a.shape + (2, 2), dtype=complex)
    blocks[..., 0, 0] = a
    blocks[..., 0, 1] = v * k
    blocks[..., 1, 0] = np.conj(v) * k
    blocks[..., 1, 1] = 1.0 - a
    return blocks


# Per-atom shapes drawn by the orthogonal-pair sampler.
ZERO, IDENTITY, E11, E22, RANK_ONE = range(5)


def sample_orthogonal_blocks(
    space: MeasureSpace, rng: np.random.Generator, count: int
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``count`` projection pairs (p, q) with pq = 0, as arrays (count, atoms, 2, 2).

    Each atom of p is 0, I, ε₁₁, ε₂₂ or a generic rank-one block p(a, v); the atom of q
    is then drawn among the projections orthogonal to it (for p = 0, any of the five).
    """
    shape = (count, space.size)
    eye = np.eye(2, dtype=complex)
    e11 = np.diag([1.0, 0.0]).astype(complex)
    e22 = np.diag([0.0, 1.0]).astype(complex)

    p_kind = rng.integers(0, 5, size=shape)
    q_free = rng.integers(0, 5, size=shape)
    keep = rng.integers(0, 2, size=shape).astype(bool)
    a = rng.uniform(1e-3, 1.0 - 1e-3, size=shape)
    v = np.exp(2j * np.pi * rng.random(size=shape))
    b = rng.uniform(1e-3, 1.0 - 1e-3, size=shape)
    w = np.exp(2j * np.pi * rng.random(size=shape))

    p = np.zeros(shape + (2, 2), dtype=complex)
    p[p_kind == IDENTITY] = eye
    p[p_kind == E11] = e11
    p[p_kind == E22] = e22
    generic = p_kind == RANK_ONE
    p[generic] = _rank_one_blocks(a[generic], v[generic])

    q = np.zeros_like(p)
    free = p_kind == ZERO
    q[free & (q_free == IDENTITY)] = eye
    q[free & (q_free == E11)] = e11
    q[free & (q_free == E22)] = e22
    mask = free & (q_free == RANK_ONE)
    q[mask] = _rank_one_blocks(b[mask], w[mask])
    q[(p_kind == E11) & keep] = e22
    q[(p_kind == E22) & keep] = e11
    mask = generic & keep
    q[mask] = _rank_one_blocks(1.0 - a[mask], -v[mask])
    return p, q


def sample_orthogonal_pair(
    space: MeasureSpace, rng: np.random.Generator | int | None = None
) -> tuple[BlockElement, BlockElement]:
    """One projection pair (p, q) with pq = 0, deterministic for a fixed seed."""
    generator = np.random.default_rng(rng)
    p, q = sample_orthogonal_blocks(space, generator, 1)
    return BlockElement(p[0]), BlockElement(q[0])
