"""
Orthogonal vector fields F: N → H given by their basis table.

A field is stored as ``values[k, i, j] = F(π_k ε_ij)`` (zero-based i, j), which fixes
F by linearity. The inner product ⟨u, v⟩ is linear in the first argument. The module
also computes the ρ functional with all Radon–Nikodym densities and runs the
orthogonality and structural identity checks that characterise OVFs.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np
from django.utils.translation import gettext_lazy as _

from .conf import resolve
from .exceptions import ConstructionError, DomainError
from .measure_algebra import (
    INDEX_PAIRS,
    BlockElement,
    CenterElement,
    IndexPair,
    MeasureSpace,
    decompose_projection,
    phase_projection,
    sample_orthogonal_blocks,
)
from .reports import CheckRecord, VerificationReport, check_record

logger = logging.getLogger(__name__)

# Residual denominators never drop below this.
ABSOLUTE_FLOOR = 1e-12

# Positions of the index pairs along the flattened (i, j) axis.
P11, P12, P21, P22 = range(4)
PAIR_LABELS = ("11", "12", "21", "22")

# Elementary projections of the deterministic orthogonality sweep.
SWEEP_LABELS = ("e11", "e22", "h+1", "h-1", "h+i", "h-i", "I")
SWEEP_PAIRS = ((0, 1), (2, 3), (4, 5))


def inner(u: np.ndarray, v: np.ndarray) -> complex:
    """⟨u, v⟩, linear in ``u``."""
    return complex(np.vdot(v, u))


def _inner(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.sum(u * np.conj(v), axis=-1)


def _norm(u: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.abs(u) ** 2, axis=-1))


def _pair_index(which: IndexPair) -> int:
    try:
        return INDEX_PAIRS.index(tuple(which))  # type: ignore[arg-type]
    except ValueError:
        raise DomainError(
            _("Index pair %(pair)s is not one of 11, 12, 21, 22."),
            code="bad_index",
            params={"pair": which},
        )


@dataclass(frozen=True, eq=False)
class VectorFieldTable:
    """A field F given by one Hilbert vector per (atom, i, j)."""

    space: MeasureSpace
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=complex)
        n = self.space.size
        if values.ndim != 4 or values.shape[:3] != (n, 2, 2) or values.shape[3] < 1:
            raise ConstructionError(
                _("Field table needs shape (%(atoms)s, 2, 2, dim), got %(shape)s."),
                code="table_shape",
                params={"atoms": n, "shape": values.shape},
            )
        if not np.all(np.isfinite(values)):
            raise ConstructionError(_("Field table contains non-finite entries."), code="non_finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, space: MeasureSpace, hilbert_dim: int = 4) -> VectorFieldTable:
        return cls(space, np.zeros((space.size, 2, 2, hilbert_dim), dtype=complex))

    @property
    def hilbert_dim(self) -> int:
        return int(self.values.shape[3])

    @property
    def flat(self) -> np.ndarray:
        """Table as (atoms, 4, dim) in the order 11, 12, 21, 22."""
        return self.values.reshape(self.space.size, 4, self.hilbert_dim)

    def basis_vector(self, atom: int, which: IndexPair) -> np.ndarray:
        i, j = which
        return self.values[atom, i - 1, j - 1]

    def unit_value(self) -> np.ndarray:
        """F(I)."""
        return self.values[:, 0, 0].sum(axis=0) + self.values[:, 1, 1].sum(axis=0)

    def scale(self) -> float:
        """Largest squared norm of a table vector, floored; the residual denominator."""
        return max(float(np.max(np.sum(np.abs(self.values) ** 2, axis=-1))), ABSOLUTE_FLOOR)

    def with_values(self, values: np.ndarray) -> VectorFieldTable:
        return VectorFieldTable(self.space, values)

    def perturbed(self, atom: int, which: IndexPair, delta: np.ndarray) -> VectorFieldTable:
        values = np.array(self.values)
        i, j = which
        values[atom, i - 1, j - 1] += delta
        return VectorFieldTable(self.space, values)

    def equals(self, other: VectorFieldTable) -> bool:
        """Bit-exact equality of space and table."""
        return self.space.same_as(other.space) and np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class ReducedField:
    """A commutative field a ↦ F_ij(a), stored as F_ij(π_k) per atom."""

    space: MeasureSpace
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=complex)
        if values.ndim != 2 or values.shape[0] != self.space.size:
            raise ConstructionError(
                _("Reduced field needs shape (%(atoms)s, dim), got %(shape)s."),
                code="table_shape",
                params={"atoms": self.space.size, "shape": values.shape},
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def hilbert_dim(self) -> int:
        return int(self.values.shape[1])

    def evaluate(self, a: CenterElement) -> np.ndarray:
        if a.size != self.space.size:
            raise DomainError(_("Center element length does not match the atom count."), code="dimension")
        return a.values @ self.values

    def at_unit(self) -> np.ndarray:
        return self.values.sum(axis=0)


@dataclass(frozen=True, eq=False)
class FunctionalDensity:
    """A normal functional of N as a 2×2 density matrix per atom.

    ``entries[k, i, j]`` is φ_ij at atom k; the action is the trace pairing
    φ(x) = Σ_k ν_k tr(φ_k x_k).
    """

    space: MeasureSpace
    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.array(self.entries, dtype=complex)
        if entries.shape != (self.space.size, 2, 2):
            raise ConstructionError(
                _("Density needs shape (%(atoms)s, 2, 2), got %(shape)s."),
                code="density_shape",
                params={"atoms": self.space.size, "shape": entries.shape},
            )
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def zeros(cls, space: MeasureSpace) -> FunctionalDensity:
        return cls(space, np.zeros((space.size, 2, 2), dtype=complex))

    def __add__(self, other: FunctionalDensity) -> FunctionalDensity:
        self.space.require_same(other.space)
        return FunctionalDensity(self.space, self.entries + other.entries)

    def __sub__(self, other: FunctionalDensity) -> FunctionalDensity:
        self.space.require_same(other.space)
        return FunctionalDensity(self.space, self.entries - other.entries)

    def pair(self, x: BlockElement) -> complex:
        return rho_pairing(self, x)

    def hermitian_residual(self) -> float:
        return float(np.abs(self.entries - np.conj(np.swapaxes(self.entries, 1, 2))).max())

    def min_eigenvalues(self) -> np.ndarray:
        hermitian = 0.5 * (self.entries + np.conj(np.swapaxes(self.entries, 1, 2)))
        return np.linalg.eigvalsh(hermitian)[:, 0]

    def is_positive(self, floor: float | None = None, tol: float = 1e-12) -> bool:
        floor = resolve(floor, "PSD_FLOOR")
        return self.hermitian_residual() <= tol and bool(np.all(self.min_eigenvalues() >= floor))

    def conjugated(self, u: np.ndarray) -> FunctionalDensity:
        """Atom-wise u φ u*."""
        return FunctionalDensity(self.space, u @ self.entries @ np.conj(np.swapaxes(u, 1, 2)))

    def scaled_by_weights(self) -> np.ndarray:
        """ν_k φ_k: the functional's values on the atoms rather than its density."""
        return self.space.weights[:, None, None] * self.entries


@dataclass(frozen=True, eq=False)
class DensityReport:
    """ϱ, the r_ij densities and the 16 cross densities, with the identity residuals."""

    rho: FunctionalDensity
    r: np.ndarray
    cross: np.ndarray
    r_imaginary: np.ndarray
    diagonal_residual: np.ndarray
    trace_residual: np.ndarray

    def records(self, tol: float | None = None) -> list[CheckRecord]:
        tol = resolve(tol, "IDENTITY_TOLERANCE")

        def atom_pair(index: int) -> dict[str, Any]:
            atom, pair = divmod(index, 4)
            return {"atom": atom, "pair": PAIR_LABELS[pair]}

        def atom(index: int) -> dict[str, Any]:
            return {"atom": index}

        return [
            check_record("r_real", self.r_imaginary, tol, atom_pair),
            check_record("r_diagonal_equals_rho", self.diagonal_residual, tol, atom),
            check_record("r_trace_identity", self.trace_residual, tol, atom),
        ]

    def flagged(self, tol: float | None = None) -> bool:
        return not all(record.passed for record in self.records(tol))

    def density(self, which: IndexPair) -> np.ndarray:
        i, j = which
        return self.r[:, i - 1, j - 1]


def evaluate(F: VectorFieldTable, x: BlockElement) -> np.ndarray:
    """F(x) = Σ_k Σ_ij x_ij(ω_k) F(π_k ε_ij)."""
    if x.size != F.space.size:
        raise DomainError(
            _("Block element has %(got)s atoms, the field has %(expected)s."),
            code="dimension",
            params={"got": x.size, "expected": F.space.size},
        )
    return np.einsum("kij,kijd->d", x.blocks, F.values)


def _evaluate_batch(F: VectorFieldTable, blocks: np.ndarray) -> np.ndarray:
    return np.einsum("tkij,kijd->td", blocks, F.values)


def reduction(F: VectorFieldTable, which: IndexPair) -> ReducedField:
    """The reduction F_ij(a) = F(a ε_ij)."""
    return ReducedField(F.space, F.flat[:, _pair_index(which), :])


def reductions(F: VectorFieldTable) -> dict[IndexPair, ReducedField]:
    return {which: reduction(F, which) for which in INDEX_PAIRS}


def gram_matrix(F: VectorFieldTable) -> np.ndarray:
    """G[k, a, k', b] = ⟨F_a(π_k), F_b(π_k')⟩ over the basis table."""
    n, d = F.space.size, F.hilbert_dim
    flat = F.flat.reshape(4 * n, d)
    return (flat @ flat.conj().T).reshape(n, 4, n, 4)


def cross_densities(F: VectorFieldTable) -> np.ndarray:
    """d[k, a, b] = ⟨F_a(π_k), F_b(1)⟩ / ν_k."""
    at_unit = F.flat.sum(axis=0)
    products = np.einsum("kad,bd->kab", F.flat, at_unit.conj())
    return products / F.space.weights[:, None, None]


def _rho_from_cross(space: MeasureSpace, cross: np.ndarray) -> FunctionalDensity:
    entries = np.empty((space.size, 2, 2), dtype=complex)
    entries[:, 0, 0] = cross[:, P11, P11]
    entries[:, 1, 1] = cross[:, P22, P22]
    # ϱ_ij is read off F_ji.
    entries[:, 0, 1] = cross[:, P21, P11] + cross[:, P21, P22]
    entries[:, 1, 0] = cross[:, P12, P11] + cross[:, P12, P22]
    return FunctionalDensity(space, entries)


def rho_functional(F: VectorFieldTable) -> FunctionalDensity:
    """Densities of ϱ(x) = ⟨F(x), F(I)⟩."""
    return _rho_from_cross(F.space, cross_densities(F))


def phi12_density(F: VectorFieldTable) -> np.ndarray:
    """⟨F₂₁(π_k), F₂₂(1)⟩ / ν_k."""
    return cross_densities(F)[:, P21, P22]


def rho_pairing(rho: FunctionalDensity, x: BlockElement) -> complex:
    """φ(x) = Σ_k ν_k (φ₁₁x₁₁ + φ₁₂x₂₁ + φ₂₁x₁₂ + φ₂₂x₂₂)(ω_k)."""
    if x.size != rho.space.size:
        raise DomainError(_("Block element and density live on different atom counts."), code="dimension")
    return complex(np.einsum("k,kij,kji->", rho.space.weights, rho.entries, x.blocks))


def _pairing_batch(rho: FunctionalDensity, blocks: np.ndarray) -> np.ndarray:
    return np.einsum("k,kij,tkji->t", rho.space.weights, rho.entries, blocks)


def density_scale(F: VectorFieldTable) -> float:
    """Largest per-atom density of ‖F(π_k ε_ij)‖², floored."""
    norms = np.sum(np.abs(F.values) ** 2, axis=(2, 3)).sum(axis=1) / F.space.weights
    return max(float(norms.max()), ABSOLUTE_FLOOR)


def r_densities(F: VectorFieldTable, tol: float | None = None) -> DensityReport:
    """r_ij(ω_k) = ⟨F_ij(π_k), F_ij(1)⟩ / ν_k together with ϱ and the cross densities."""
    cross = cross_densities(F)
    rho = _rho_from_cross(F.space, cross)
    diagonal = np.stack([cross[:, a, a] for a in range(4)], axis=1)
    scale = density_scale(F)
    r = diagonal.real.reshape(-1, 2, 2)
    report = DensityReport(
        rho=rho,
        r=r,
        cross=cross,
        r_imaginary=np.abs(diagonal.imag) / scale,
        diagonal_residual=np.maximum(
            np.abs(r[:, 0, 0] - rho.entries[:, 0, 0]), np.abs(r[:, 1, 1] - rho.entries[:, 1, 1])
        )
        / scale,
        trace_residual=np.abs(
            r[:, 0, 1] + r[:, 1, 0] - rho.entries[:, 0, 0] - rho.entries[:, 1, 1]
        )
        / scale,
    )
    if report.flagged(tol):
        logger.warning("Density identities fail; the table is not an orthogonal vector field.")
    return report


def reconstruct_inner(
    report: DensityReport, a: CenterElement, b: CenterElement, left: IndexPair, right: IndexPair
) -> complex:
    """⟨F_ij(a), F_kl(b)⟩ rebuilt from the cross densities as ⟨F_ij(b*a), F_kl(1)⟩."""
    weights = report.rho.space.weights
    d = report.cross[:, _pair_index(left), _pair_index(right)]
    return complex(np.sum(weights * np.conj(b.values) * a.values * d))


def twist(F: VectorFieldTable, u: np.ndarray | BlockElement) -> VectorFieldTable:
    """The field x ↦ F(u x u*) for a block unitary u."""
    blocks = u.blocks if isinstance(u, BlockElement) else np.asarray(u, dtype=complex)
    if blocks.shape != (F.space.size, 2, 2):
        raise DomainError(_("Twist unitary must have one 2×2 block per atom."), code="dimension")
    residual = BlockElement(blocks).unitary_residual()
    if residual > 1e-10:
        raise DomainError(
            _("Twist is not unitary (residual %(residual)s)."),
            code="not_unitary",
            params={"residual": residual},
        )
    values = np.einsum("kai,kbj,kabd->kijd", blocks, blocks.conj(), F.values)
    return F.with_values(values)


def compact(F: VectorFieldTable, tol: float = 1e-12) -> VectorFieldTable:
    """Isometric compression of H onto the span of the table vectors."""
    n, d = F.space.size, F.hilbert_dim
    flat = F.values.reshape(4 * n, d)
    _left, singular, rows = np.linalg.svd(flat, full_matrices=False)
    top = singular[0] if singular.size else 0.0
    rank = int(np.sum(singular > tol * top)) if top > 0 else 0
    if rank == 0:
        return F.with_values(np.zeros((n, 2, 2, 1), dtype=complex))
    coordinates = flat @ rows[:rank].conj().T
    logger.debug("Compressed Hilbert dimension %d -> %d", d, rank)
    return F.with_values(coordinates.reshape(n, 2, 2, rank))


def _sweep_projections() -> np.ndarray:
    """Per-atom elementary projections, shape (7, 2, 2)."""
    ones = CenterElement.constant(1)
    blocks = [
        np.diag([1.0, 0.0]),
        np.diag([0.0, 1.0]),
        phase_projection(ones, 1.0).blocks[0],
        phase_projection(ones, -1.0).blocks[0],
        phase_projection(ones, 1j).blocks[0],
        phase_projection(ones, -1j).blocks[0],
        np.eye(2),
    ]
    return np.array(blocks, dtype=complex)


def orthogonality_sweep(
    F: VectorFieldTable, scale: float | None = None
) -> tuple[np.ndarray, list[tuple[int, int, int, int]]]:
    """Normalised |⟨F(p), F(q)⟩| over the matrix-unit-derived orthogonal pairs.

    p and q run over π_k e for the elementary projections e; all cross-atom pairs are
    orthogonal, and within an atom (e11, e22), (h+1, h-1) and (h+i, h-i) are.
    """
    n = F.space.size
    scale = F.scale() if scale is None else scale
    projections = _sweep_projections()
    vectors = np.einsum("mij,kijd->kmd", projections, F.values).reshape(n * 7, -1)
    gram = vectors @ vectors.conj().T
    norms = np.sqrt(np.abs(np.diag(gram)))
    residual = np.abs(gram) / np.maximum(np.outer(norms, norms), scale)

    pairs: list[tuple[int, int, int, int]] = []
    for k in range(n):
        for m, m2 in SWEEP_PAIRS:
            pairs.append((k, m, k, m2))
        for k2 in range(k + 1, n):
            for m in range(7):
                for m2 in range(7):
                    pairs.append((k, m, k2, m2))
    if not pairs:
        return np.zeros(0), pairs
    index = np.array(pairs)
    values = residual[index[:, 0] * 7 + index[:, 1], index[:, 2] * 7 + index[:, 3]]
    return values, pairs


def verify_orthogonality(
    F: VectorFieldTable,
    samples: int | None = None,
    seed: int | None = None,
    tol: float | None = None,
) -> VerificationReport:
    """Check ⟨F(p), F(q)⟩ = 0 for pq = 0 on sampled and swept projection pairs.

    A pair fails when |⟨F(p), F(q)⟩| exceeds tol·max(‖F(p)‖‖F(q)‖, s), s being the
    instance scale.
    """
    samples = resolve(samples, "DEFAULT_SAMPLES")
    seed = resolve(seed, "DEFAULT_SEED")
    tol = resolve(tol, "IDENTITY_TOLERANCE")
    rng = np.random.default_rng(seed)
    scale = F.scale()

    p, q = sample_orthogonal_blocks(F.space, rng, samples)
    fp = _evaluate_batch(F, p)
    fq = _evaluate_batch(F, q)
    sampled = np.abs(_inner(fp, fq)) / np.maximum(_norm(fp) * _norm(fq), scale)

    def describe_sample(index: int) -> dict[str, Any]:
        return {
            "kind": "sampled",
            "sample": index,
            "p": decompose_projection(BlockElement(p[index]), tol=1e-9).as_dict(),
            "q": decompose_projection(BlockElement(q[index]), tol=1e-9).as_dict(),
            "value": float(abs(_inner(fp[index], fq[index]))),
        }

    swept, pairs = orthogonality_sweep(F, scale)

    def describe_sweep(index: int) -> dict[str, Any]:
        k, m, k2, m2 = pairs[index]
        return {
            "kind": "sweep",
            "atom_p": k,
            "p": SWEEP_LABELS[m],
            "atom_q": k2,
            "q": SWEEP_LABELS[m2],
        }

    report = VerificationReport()
    report.add(
        check_record(
            "orthogonality_sampled", sampled, tol, describe_sample, details={"samples": samples, "seed": seed}
        )
    )
    report.add(check_record("orthogonality_sweep", swept, tol, describe_sweep, details={"pairs": len(pairs)}))
    logger.info(
        "Orthogonality check: passed=%s worst=%.3e",
        report.passed,
        max(report.max_residuals.values()),
    )
    return report


def basis_identity_checks(F: VectorFieldTable, tol: float | None = None) -> VerificationReport:
    """The reduction identities on basis projections, giving atom-level witnesses.

    With a = π_k and b = π_k' these identities are equivalent to the general ones by
    sesquilinearity.
    """
    tol = resolve(tol, "IDENTITY_TOLERANCE")
    scale = F.scale()
    n = F.space.size
    gram = gram_matrix(F)
    norms = np.sqrt(np.abs(np.einsum("kaka->ka", gram)))
    at_unit = F.flat.sum(axis=0)
    unit_norms = _norm(at_unit)

    def pair_residual(a: int, b: int) -> np.ndarray:
        return np.abs(gram[:, a, :, b]) / np.maximum(np.outer(norms[:, a], norms[:, b]), scale)

    opposite = np.stack([pair_residual(P11, P22), pair_residual(P12, P21)])

    def describe_opposite(index: int) -> dict[str, Any]:
        which, k, k2 = np.unravel_index(index, opposite.shape)
        names = ("<F11,F22>", "<F12,F21>")
        return {"identity": names[which], "atom": int(k), "atom_b": int(k2)}

    squares = norms**2
    balance = np.abs(squares[:, P12] + squares[:, P21] - squares[:, P11] - squares[:, P22]) / np.maximum(
        squares.sum(axis=1), scale
    )

    cross_atom = np.abs(gram) / np.maximum(np.einsum("ka,lb->kalb", norms, norms), scale)
    cross_atom[np.arange(n), :, np.arange(n), :] = 0.0

    def describe_cross_atom(index: int) -> dict[str, Any]:
        k, a, k2, b = np.unravel_index(index, cross_atom.shape)
        return {
            "atom": int(k),
            "pair": PAIR_LABELS[a],
            "atom_b": int(k2),
            "pair_b": PAIR_LABELS[b],
        }

    flat = F.flat
    first_lhs = _inner(flat[:, P12], at_unit[P11])
    first_rhs = _inner(at_unit[P22], flat[:, P21])
    second_lhs = _inner(flat[:, P21], at_unit[P11])
    second_rhs = _inner(at_unit[P22], flat[:, P12])
    denominator = np.maximum(
        _norm(flat[:, P12]) * unit_norms[P11] + unit_norms[P22] * _norm(flat[:, P21]), scale
    )
    exchange = np.stack([np.abs(first_lhs - first_rhs), np.abs(second_lhs - second_rhs)]) / denominator

    def describe_exchange(index: int) -> dict[str, Any]:
        which, k = np.unravel_index(index, exchange.shape)
        names = ("<F12(pi),F11(1)> = <F22(1),F21(pi)>", "<F21(pi),F11(1)> = <F22(1),F12(pi)>")
        return {"identity": names[which], "atom": int(k)}

    return VerificationReport(
        [
            check_record("opposite_reductions_orthogonal_basis", opposite, tol, describe_opposite),
            check_record("reduction_norm_balance_basis", balance, tol, lambda k: {"atom": k}),
            check_record("cross_atom_orthogonal_basis", cross_atom, tol, describe_cross_atom),
            check_record("unit_exchange_basis", exchange, tol, describe_exchange),
        ]
    )


def _complex_gaussian(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _hermitian_blocks(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    raw = _complex_gaussian(rng, shape + (2, 2))
    return 0.5 * (raw + np.conj(np.swapaxes(raw, -1, -2)))


def _reduced_batch(F: VectorFieldTable, a: np.ndarray) -> np.ndarray:
    """F_m(a) for a batch of center elements a (T, atoms); result (T, 4, dim)."""
    return np.einsum("tk,kmd->tmd", a, F.flat)


def _phase_identity_batch(F: VectorFieldTable, a: np.ndarray, pi: np.ndarray) -> tuple[np.ndarray, ...]:
    ap = _reduced_batch(F, a * pi)
    conj_ap = _reduced_batch(F, np.conj(a) * pi)
    on_pi = _reduced_batch(F, pi.astype(complex))
    f = ap[:, P12] + conj_ap[:, P21]
    lhs = _inner(f, on_pi[:, P11])
    rhs = _inner(on_pi[:, P22], f)
    norm = _norm(f) * (_norm(on_pi[:, P11]) + _norm(on_pi[:, P22]))
    return lhs, rhs, norm


def phase_identity(F: VectorFieldTable, a: CenterElement, pi: CenterElement) -> tuple[complex, complex]:
    """Both sides of ⟨F₁₂(aπ) + F₂₁(a*π), F₁₁(π)⟩ = ⟨F₂₂(π), F₁₂(aπ) + F₂₁(a*π)⟩."""
    lhs, rhs, _scale = _phase_identity_batch(F, a.values[None, :], pi.values.real[None, :])
    return complex(lhs[0]), complex(rhs[0])


def sum_identity(F: VectorFieldTable, pi: CenterElement) -> tuple[complex, complex]:
    """Both sides of ⟨F₁₂(π) + F₂₁(π), F₁₁(π)⟩ = ⟨F₂₂(π), F₁₂(π) + F₂₁(π)⟩."""
    on_pi = _reduced_batch(F, pi.values[None, :])[0]
    f = on_pi[P12] + on_pi[P21]
    return inner(f, on_pi[P11]), inner(on_pi[P22], f)


def difference_identity(F: VectorFieldTable, pi: CenterElement) -> tuple[complex, complex]:
    """Both sides of i⟨F₁₂(π) − F₂₁(π), F₁₁(π)⟩ = −i⟨F₂₂(π), F₁₂(π) − F₂₁(π)⟩."""
    on_pi = _reduced_batch(F, pi.values[None, :])[0]
    f = on_pi[P12] - on_pi[P21]
    return 1j * inner(f, on_pi[P11]), -1j * inner(on_pi[P22], f)


def _reduction_orthogonality(
    fs: np.ndarray, ft: np.ndarray, scale: float, tol: float
) -> CheckRecord:
    """⟨F_ij(σ), F_ij(τ)⟩ = 0 for every trial of disjoint σ, τ (arrays (trials, 4, d))."""
    trials = fs.shape[0]
    ns, nt = _norm(fs), _norm(ft)
    residual = np.stack(
        [np.abs(_inner(fs[:, m], ft[:, m])) / np.maximum(ns[:, m] * nt[:, m], scale) for m in range(4)]
    )

    def describe(index: int) -> dict[str, Any]:
        which, t = divmod(index, trials)
        return {"trial": t, "reduction": f"F{PAIR_LABELS[which]}"}

    return check_record("reduction_orthogonality", residual, tol, describe)


def commutative_orthogonality(
    F: VectorFieldTable,
    trials: int | None = None,
    seed: int | None = None,
    tol: float | None = None,
) -> CheckRecord:
    """Each reduction F_ij is an OVF over M: disjoint projections σ, τ of M give
    orthogonal vectors."""
    trials = resolve(trials, "DEFAULT_TRIALS")
    rng = np.random.default_rng(resolve(seed, "DEFAULT_SEED"))
    labels = rng.integers(0, 3, size=(trials, F.space.size))
    sigma = (labels == 0).astype(complex)
    tau = (labels == 1).astype(complex)
    return _reduction_orthogonality(
        _reduced_batch(F, sigma), _reduced_batch(F, tau), F.scale(), resolve(tol, "IDENTITY_TOLERANCE")
    )


def verify_identities(
    F: VectorFieldTable,
    trials: int | None = None,
    seed: int | None = None,
    tol: float | None = None,
) -> VerificationReport:
    """The structural identity suite on random center elements and on the basis.

    Covers orthogonality of F₁₁ to F₂₂ and of F₁₂ to F₂₁, the norm balance, the
    center transfer ⟨F_ij(a), F_kl(b)⟩ = ⟨F_ij(b*a), F_kl(1)⟩, ‖F(x)‖² = ϱ(x²) and
    Re⟨F(x), F(y)⟩ = ½ϱ(xy + yx) on selfadjoint x, y, annihilation on disjoint
    projections, the unit exchange identity at random a and at a = 1, i, orthogonality
    of each reduction over M, and reconstruction of inner products from the cross
    densities.
    """
    trials = resolve(trials, "DEFAULT_TRIALS")
    seed = resolve(seed, "DEFAULT_SEED")
    tol = resolve(tol, "IDENTITY_TOLERANCE")
    rng = np.random.default_rng(seed)
    n = F.space.size
    scale = F.scale()
    report = VerificationReport()

    a = _complex_gaussian(rng, (trials, n))
    b = _complex_gaussian(rng, (trials, n))
    fa = _reduced_batch(F, a)
    fb = _reduced_batch(F, b)
    na, nb = _norm(fa), _norm(fb)

    def trial(index: int) -> dict[str, Any]:
        return {"trial": index}

    def trial_identity(names: tuple[str, ...]) -> Any:
        def describe(index: int) -> dict[str, Any]:
            which, t = divmod(index, trials)
            return {"trial": t, "identity": names[which]}

        return describe

    opposite = np.stack(
        [
            np.abs(_inner(fa[:, P11], fb[:, P22])) / np.maximum(na[:, P11] * nb[:, P22], scale),
            np.abs(_inner(fa[:, P12], fb[:, P21])) / np.maximum(na[:, P12] * nb[:, P21], scale),
        ]
    )
    report.add(
        check_record(
            "opposite_reductions_orthogonal", opposite, tol, trial_identity(("<F11,F22>", "<F12,F21>"))
        )
    )

    squares = na**2
    balance = np.abs(squares[:, P12] + squares[:, P21] - squares[:, P11] - squares[:, P22]) / np.maximum(
        squares.sum(axis=1), scale
    )
    report.add(check_record("reduction_norm_balance", balance, tol, trial))

    at_unit = F.flat.sum(axis=0)
    fc = _reduced_batch(F, np.conj(b) * a)
    lhs = np.einsum("tad,tbd->tab", fa, fb.conj())
    rhs = np.einsum("tad,bd->tab", fc, at_unit.conj())
    denominator = np.maximum(
        np.einsum("ta,tb->tab", na, nb) + np.einsum("ta,b->tab", _norm(fc), _norm(at_unit)), scale
    )
    transfer = np.abs(lhs - rhs) / denominator

    def describe_transfer(index: int) -> dict[str, Any]:
        t, m, m2 = np.unravel_index(index, transfer.shape)
        return {"trial": int(t), "pair": PAIR_LABELS[m], "pair_b": PAIR_LABELS[m2]}

    report.add(check_record("center_transfer", transfer, tol, describe_transfer))

    basis = basis_identity_checks(F, tol)
    report.extend(basis.records)

    rho = rho_functional(F)
    x = _hermitian_blocks(rng, (trials, n))
    y = _hermitian_blocks(rng, (trials, n))
    fx = _evaluate_batch(F, x)
    fy = _evaluate_batch(F, y)
    norm_x = _norm(fx) ** 2
    norm_residual = np.abs(norm_x - _pairing_batch(rho, x @ x)) / (scale + norm_x)
    report.add(check_record("norm_equals_rho_of_square", norm_residual, tol, trial))

    symmetric = 0.5 * _pairing_batch(rho, x @ y + y @ x)
    symmetric_residual = np.abs(_inner(fx, fy).real - symmetric) / (scale + _norm(fx) * _norm(fy))
    report.add(check_record("real_part_equals_symmetric_rho", symmetric_residual, tol, trial))

    labels = rng.integers(0, 3, size=(trials, n))
    sigma = (labels == 0).astype(complex)
    tau = (labels == 1).astype(complex)
    fs = _reduced_batch(F, sigma)
    ft = _reduced_batch(F, tau)
    ns, nt = _norm(fs), _norm(ft)
    annihilation = np.stack(
        [
            np.abs(_inner(fs[:, i], ft[:, j])) / np.maximum(ns[:, i] * nt[:, j], scale)
            for i in (P11, P22)
            for j in (P12, P21)
        ]
    )
    report.add(
        check_record(
            "disjoint_annihilation",
            annihilation,
            tol,
            trial_identity(("<F11,F12>", "<F11,F21>", "<F22,F12>", "<F22,F21>")),
        )
    )

    report.add(_reduction_orthogonality(fs, ft, scale, tol))

    pi = rng.integers(0, 2, size=(trials, n)).astype(float)
    for name, coefficient in (
        ("phase_identity_random", _complex_gaussian(rng, (trials, n))),
        ("phase_identity_one", np.ones((trials, n), dtype=complex)),
        ("phase_identity_i", np.full((trials, n), 1j)),
    ):
        lhs, rhs, norms = _phase_identity_batch(F, coefficient, pi)
        report.add(check_record(name, np.abs(lhs - rhs) / np.maximum(norms, scale), tol, trial))

    densities = r_densities(F, tol)
    report.extend(densities.records(tol))
    picks = rng.integers(0, 4, size=(trials, 2))
    rebuilt = np.einsum(
        "k,tk,tk,tk->t",
        F.space.weights,
        np.conj(b),
        a,
        densities.cross[:, picks[:, 0], picks[:, 1]].T,
    )
    direct = _inner(fa[np.arange(trials), picks[:, 0]], fb[np.arange(trials), picks[:, 1]])
    reconstruction = np.abs(rebuilt - direct) / np.maximum(
        na[np.arange(trials), picks[:, 0]] * nb[np.arange(trials), picks[:, 1]], scale
    )
    report.add(check_record("cross_density_reconstruction", reconstruction, tol, trial))

    logger.info(
        "Structural identity suite: passed=%s worst=%.3e",
        report.passed,
        max(report.max_residuals.values(), default=0.0),
    )
    return report


def verify_field(
    F: VectorFieldTable,
    samples: int | None = None,
    trials: int | None = None,
    seed: int | None = None,
    tol: float | None = None,
) -> VerificationReport:
    """Orthogonality plus the structural identity suite, in one report."""
    report = verify_orthogonality(F, samples=samples, seed=seed, tol=tol)
    report.extend(verify_identities(F, trials=trials, seed=seed, tol=tol).records)
    return report
