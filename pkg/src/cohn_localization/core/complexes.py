"""Bounded chain complexes of free modules, homology and Tor."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Iterator, Optional, Sequence, Union

from .localize import CohnTriple, SigmaSet, triple_add, triple_eq, triple_from_scalar, triple_mul
from .matrix import (
    Matrix,
    ShapeMismatchError,
    block_matrix,
    field_rank,
    kernel_basis,
    row_reduce,
    solve_field,
    smith_normal_form,
)
from .rings import (
    DomainError,
    RingDescriptor,
    RingKind,
    RingMismatchError,
    UnsupportedBackendError,
)


logger = logging.getLogger(__name__)


class ComplexValidationError(DomainError):
    """Raised when a complex has inconsistent shapes or d^2 != 0."""

    kind = "complex-validation"

    def __init__(self, degree: int, reason: str):
        self.degree = degree
        self.reason = reason
        super().__init__(f"{reason} at degree {degree}")


class ChainMapError(DomainError):
    """Raised when a chain map does not commute with the differentials."""

    kind = "chain-map"

    def __init__(self, degree: int, reason: str):
        self.degree = degree
        self.reason = reason
        super().__init__(f"{reason} at degree {degree}")


# =============================================================================
# Complexes and maps
# =============================================================================


@dataclass(frozen=True)
class ChainComplex:
    """
    Homological complex C_lo <- ... <- C_hi of free modules.

    diffs[i] is the matrix of d_{lo+i+1}: C_{lo+i+1} -> C_{lo+i}, with shape
    ranks[i] x ranks[i+1]. Degrees outside [lo, hi] are zero.
    """

    ring: RingDescriptor
    lo: int
    ranks: tuple[int, ...]
    diffs: tuple[Matrix, ...]

    def __post_init__(self):
        if len(self.diffs) != max(len(self.ranks) - 1, 0):
            raise ComplexValidationError(self.lo, f"expected {max(len(self.ranks) - 1, 0)} differentials")
        for d in self.diffs:
            if d.ring != self.ring:
                raise RingMismatchError(self.ring, d.ring)

    @classmethod
    def from_differentials(cls, ring: RingDescriptor, lo: int, diffs: Sequence[Matrix]) -> ChainComplex:
        """Complex whose ranks are read off the differentials (at least one)."""
        ranks = [diffs[0].rows] + [d.cols for d in diffs]
        return cls(ring, lo, tuple(ranks), tuple(diffs))

    @classmethod
    def concentrated(cls, ring: RingDescriptor, degree: int, rank: int) -> ChainComplex:
        return cls(ring, degree, (rank,), ())

    @classmethod
    def zero(cls, ring: RingDescriptor) -> ChainComplex:
        return cls(ring, 0, (), ())

    @property
    def hi(self) -> int:
        return self.lo + len(self.ranks) - 1

    @property
    def degrees(self) -> range:
        return range(self.lo, self.hi + 1)

    def rank(self, n: int) -> int:
        if self.lo <= n <= self.hi:
            return self.ranks[n - self.lo]
        return 0

    def differential(self, n: int) -> Matrix:
        """d_n: C_n -> C_{n-1}."""
        if self.lo < n <= self.hi:
            return self.diffs[n - self.lo - 1]
        return Matrix.zeros(self.ring, self.rank(n - 1), self.rank(n))

    def is_zero(self) -> bool:
        return all(r == 0 for r in self.ranks)

    def support(self) -> Optional[tuple[int, int]]:
        """Smallest and largest degree with nonzero rank."""
        nonzero = [n for n in self.degrees if self.rank(n)]
        return (nonzero[0], nonzero[-1]) if nonzero else None

    def restrict(self, lo: int, hi: int) -> ChainComplex:
        """The complex re-indexed on [lo, hi] (brutal truncation outside)."""
        if hi < lo:
            return ChainComplex.zero(self.ring)
        ranks = tuple(self.rank(n) for n in range(lo, hi + 1))
        diffs = tuple(self.differential(n) for n in range(lo + 1, hi + 1))
        return ChainComplex(self.ring, lo, ranks, diffs)

    def map_entries(self, ring: RingDescriptor) -> ChainComplex:
        return ChainComplex(ring, self.lo, self.ranks, tuple(d.change_ring(ring) for d in self.diffs))

    def to_dict(self) -> dict:
        return {
            "lo": self.lo,
            "ranks": list(self.ranks),
            "diffs": [d.to_strings() for d in self.diffs],
        }


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    degree: Optional[int] = None
    reason: str = ""

    def to_dict(self) -> dict:
        if self.ok:
            return {"ok": True}
        return {"ok": False, "degree": self.degree, "reason": self.reason, "message": f"{self.reason} at degree {self.degree}"}


def validate_complex(c: ChainComplex) -> ValidationReport:
    """Check shapes of every differential and d_n d_{n+1} = 0."""
    for n in range(c.lo + 1, c.hi + 1):
        d = c.differential(n)
        if d.shape != (c.rank(n - 1), c.rank(n)):
            return ValidationReport(False, n, "shape-mismatch")
    for n in range(c.lo + 1, c.hi):
        if not (c.differential(n) @ c.differential(n + 1)).is_zero():
            return ValidationReport(False, n, "d2-nonzero")
    return ValidationReport(True)


def require_valid(c: ChainComplex) -> ChainComplex:
    report = validate_complex(c)
    if not report.ok:
        raise ComplexValidationError(report.degree, report.reason)
    return c


@dataclass(frozen=True)
class ChainMap:
    """f: C -> D; components[i] is f_{lo+i}: C_{lo+i} -> D_{lo+i}."""

    source: ChainComplex
    target: ChainComplex
    lo: int
    components: tuple[Matrix, ...]

    @classmethod
    def identity(cls, c: ChainComplex) -> ChainMap:
        return cls(c, c, c.lo, tuple(Matrix.identity(c.ring, r) for r in c.ranks))

    @classmethod
    def zero(cls, source: ChainComplex, target: ChainComplex) -> ChainMap:
        return cls(source, target, 0, ())

    def component(self, n: int) -> Matrix:
        index = n - self.lo
        if 0 <= index < len(self.components):
            return self.components[index]
        return Matrix.zeros(self.source.ring, self.target.rank(n), self.source.rank(n))

    def degrees(self) -> range:
        lo = min(self.source.lo, self.target.lo)
        hi = max(self.source.hi, self.target.hi)
        return range(lo, hi + 1)

    def to_dict(self) -> dict:
        return {
            "source": self.source.to_dict(),
            "target": self.target.to_dict(),
            "lo": self.lo,
            "components": [m.to_strings() for m in self.components],
        }


def validate_chain_map(f: ChainMap) -> ChainMap:
    """
    Check shapes and d^D f = f d^C in every degree.

    Raises:
        ChainMapError: Naming the first failing degree.
    """
    if f.source.ring != f.target.ring:
        raise RingMismatchError(f.source.ring, f.target.ring)
    for i, m in enumerate(f.components):
        n = f.lo + i
        if m.shape != (f.target.rank(n), f.source.rank(n)):
            raise ChainMapError(n, "shape-mismatch")
        if m.ring != f.source.ring:
            raise RingMismatchError(f.source.ring, m.ring)
    for n in f.degrees():
        left = f.target.differential(n) @ f.component(n)
        right = f.component(n - 1) @ f.source.differential(n)
        if left != right:
            raise ChainMapError(n, "does not commute with differentials")
    return f


def cone(f: ChainMap) -> ChainComplex:
    """
    Mapping cone: C(f)_n = C_{n-1} + D_n, d = [[-d^C_{n-1}, 0], [f_{n-1}, d^D_n]].
    """
    validate_chain_map(f)
    c, d = f.source, f.target
    ring = c.ring
    bounds = [(c.lo + 1, c.hi + 1)] if c.ranks else []
    if d.ranks:
        bounds.append((d.lo, d.hi))
    if not bounds:
        return ChainComplex.zero(ring)
    lo = min(b[0] for b in bounds)
    hi = max(b[1] for b in bounds)
    ranks = tuple(c.rank(n - 1) + d.rank(n) for n in range(lo, hi + 1))
    diffs = []
    for n in range(lo + 1, hi + 1):
        diffs.append(block_matrix(ring, [
            [-c.differential(n - 1), Matrix.zeros(ring, c.rank(n - 2), d.rank(n))],
            [f.component(n - 1), d.differential(n)],
        ]))
    return ChainComplex(ring, lo, ranks, tuple(diffs))


def shift(c: ChainComplex, k: int) -> ChainComplex:
    """Raise degrees by k; differentials are multiplied by (-1)^k."""
    sign = -1 if k % 2 else 1
    return ChainComplex(c.ring, c.lo + k, c.ranks, tuple(d.scale(sign) for d in c.diffs))


# =============================================================================
# Homology
# =============================================================================


@dataclass(frozen=True)
class GroupDescription:
    """
    A finitely generated module over Z, Z[1/m] or a field.

    free is the rank (or dimension); torsion lists invariant factors > 1
    in divisibility order.
    """

    free: int = 0
    torsion: tuple[int, ...] = ()

    @property
    def is_zero(self) -> bool:
        return self.free == 0 and not self.torsion

    @property
    def order(self) -> Optional[int]:
        """Cardinality when finite, else None."""
        if self.free:
            return None
        order = 1
        for t in self.torsion:
            order *= t
        return order

    def to_dict(self) -> dict:
        return {"free": self.free, "torsion": list(self.torsion)}

    def __str__(self) -> str:
        parts = [f"Z/{t}" for t in self.torsion]
        if self.free:
            parts.insert(0, "Z" if self.free == 1 else f"Z^{self.free}")
        return " + ".join(parts) if parts else "0"


@dataclass(frozen=True)
class HomologyResult:
    ring: RingDescriptor
    groups: dict[int, GroupDescription] = field(default_factory=dict)

    def __getitem__(self, n: int) -> GroupDescription:
        return self.groups.get(n, GroupDescription())

    def __iter__(self) -> Iterator[tuple[int, GroupDescription]]:
        return iter(sorted(self.groups.items()))

    @property
    def is_acyclic(self) -> bool:
        return all(g.is_zero for g in self.groups.values())

    def betti(self) -> dict[int, int]:
        return {n: g.free for n, g in self}

    def to_dict(self) -> dict:
        return {"H": [{"deg": n, **g.to_dict()} for n, g in self]}


def _strip_primes(d: int, primes: tuple[int, ...]) -> int:
    for q in primes:
        while d % q == 0:
            d //= q
    return d


def integral_view(m: Matrix) -> Matrix:
    """An integer matrix with the same image as m over Z[1/m] (denominators cleared)."""
    if m.ring.kind is RingKind.INTEGERS:
        return m
    if m.ring.kind is not RingKind.LOCALIZED_INTEGERS:
        raise UnsupportedBackendError("integral_view", m.ring)
    scale = 1
    for row in m.entries:
        for e in row:
            scale = lcm(scale, Fraction(e.value).denominator)
    z = RingDescriptor.integers()
    return Matrix.from_rows(z, [[int(Fraction(e.value) * scale) for e in row] for row in m.entries], cols=m.cols)


def rank_and_torsion(m: Matrix) -> tuple[int, tuple[int, ...]]:
    """Rank of m and the invariant factors > 1 of its cokernel."""
    ring = m.ring
    if ring.is_field:
        return field_rank(m), ()
    if ring.is_integral:
        form = smith_normal_form(integral_view(m))
        factors = tuple(_strip_primes(d, ring.primes) for d in form.invariant_factors)
        return form.rank, tuple(d for d in factors if d > 1)
    raise UnsupportedBackendError("homology", ring)


def homology(c: ChainComplex) -> HomologyResult:
    """
    H_n = ker d_n / im d_{n+1} for every degree in the support.

    Over Z and Z[1/m] the torsion part comes from the Smith form of d_{n+1};
    over fields only dimensions are reported.

    Raises:
        UnsupportedBackendError: For the free algebra.
    """
    if c.ring.is_free_algebra:
        raise UnsupportedBackendError("homology", c.ring)
    groups = {}
    for n in c.degrees:
        out_rank, _ = rank_and_torsion(c.differential(n))
        in_rank, torsion = rank_and_torsion(c.differential(n + 1))
        groups[n] = GroupDescription(c.rank(n) - out_rank - in_rank, torsion)
    logger.debug("Homology over %s in degrees %s..%s", c.ring, c.lo, c.hi)
    return HomologyResult(c.ring, groups)


def betti_numbers(c: ChainComplex) -> dict[int, int]:
    """Dimensions of homology over a field, zero degrees omitted."""
    if not c.ring.is_field:
        raise UnsupportedBackendError("betti_numbers", c.ring)
    return {n: b for n, b in homology(c).betti().items() if b}


def homology_map_rank(f: ChainMap, n: int) -> int:
    """Rank of H_n(f) over a field: dim (f(Z_n C) + B_n D) - dim B_n D."""
    ring = f.source.ring
    if not ring.is_field:
        raise UnsupportedBackendError("homology_map_rank", ring)
    cycles = kernel_basis(f.source.differential(n))
    boundaries = f.target.differential(n + 1)
    images = f.component(n) @ cycles
    return field_rank(images.hstack(boundaries)) - field_rank(boundaries)


def _integer_kernel(a: Matrix) -> Matrix:
    """Columns form a Z-basis of ker a."""
    form = smith_normal_form(a)
    return form.v.submatrix(0, a.cols, form.rank, a.cols)


def lattice_quotient(big: Matrix, small: Matrix) -> GroupDescription:
    """
    span(big) / span(small) for integer column spans with span(small) in span(big).
    """
    form = smith_normal_form(big)
    basis = (big @ form.v).submatrix(0, big.rows, 0, form.rank)
    if not basis.cols:
        return GroupDescription()
    if not small.cols:
        return GroupDescription(free=basis.cols)
    q = RingDescriptor.rationals()
    coordinates = solve_field(basis.change_ring(q), small.change_ring(q)).solution
    z = RingDescriptor.integers()
    rank, torsion = rank_and_torsion(coordinates.map(lambda e: z.scalar(e.value), z))
    return GroupDescription(basis.cols - rank, torsion)


def induced_homology_map(f: ChainMap, n: int) -> tuple[GroupDescription, GroupDescription]:
    """
    Kernel and image of H_n(f) over Z.

    The image is (f(Z_n C) + B_n D) / B_n D; the kernel is K / B_n C where
    K holds the cycles z with f(z) in B_n D.
    """
    ring = f.source.ring
    if ring.kind is not RingKind.INTEGERS:
        raise UnsupportedBackendError("induced_homology_map", ring)
    validate_chain_map(f)
    cycles = _integer_kernel(f.source.differential(n))
    images = f.component(n) @ cycles
    target_boundaries = f.target.differential(n + 1)
    image = lattice_quotient(images.hstack(target_boundaries), target_boundaries)

    relations = _integer_kernel(images.hstack(target_boundaries.scale(-1)))
    preimage = cycles @ relations.submatrix(0, cycles.cols, 0, relations.cols)
    source_boundaries = f.source.differential(n + 1)
    kernel = lattice_quotient(preimage.hstack(source_boundaries), source_boundaries)
    return kernel, image


def is_quasi_iso(f: ChainMap) -> bool:
    """True iff the cone of f is acyclic (field backends)."""
    if not f.source.ring.is_field:
        raise UnsupportedBackendError("is_quasi_iso", f.source.ring)
    return homology(cone(f)).is_acyclic


# =============================================================================
# Localization of complexes
# =============================================================================


@dataclass(frozen=True)
class TripleComplex:
    """A complex over the free-algebra localization with Cohn-triple entries."""

    sigma: SigmaSet
    lo: int
    ranks: tuple[int, ...]
    diffs: tuple[tuple[tuple[CohnTriple, ...], ...], ...]

    def d_squared_failure(self) -> Optional[int]:
        """First degree n with d_n d_{n+1} != 0 under triple_eq, or None."""
        zero = CohnTriple.zero(self.sigma)
        for i in range(len(self.diffs) - 1):
            left, right = self.diffs[i], self.diffs[i + 1]
            for row in left:
                for j in range(self.ranks[i + 2]):
                    total = zero
                    for k, a in enumerate(row):
                        total = triple_add(total, triple_mul(a, right[k][j]))
                    if not triple_eq(total, zero):
                        return self.lo + i + 1
        return None

    def to_dict(self) -> dict:
        return {
            "lo": self.lo,
            "ranks": list(self.ranks),
            "diffs": [[[t.to_dict() for t in row] for row in d] for d in self.diffs],
        }


def localize_complex(c: ChainComplex, sigma: SigmaSet) -> Union[ChainComplex, TripleComplex]:
    """
    sigma^-1 C: entries r -> r/1.

    Central sigma yields a complex over the concrete localized ring; the
    augmentation set over a free algebra yields a TripleComplex.
    """
    if c.ring != sigma.ring:
        raise RingMismatchError(sigma.ring, c.ring)
    if sigma.is_central:
        return c.map_entries(sigma.localized_ring())
    if c.ring.is_free_algebra:
        diffs = tuple(
            tuple(tuple(triple_from_scalar(sigma, e) for e in row) for row in d.entries)
            for d in c.diffs
        )
        return TripleComplex(sigma, c.lo, c.ranks, diffs)
    raise UnsupportedBackendError("localize_complex", c.ring)


# =============================================================================
# Tensor products and Tor
# =============================================================================


def tensor_blocks(c: ChainComplex, d: ChainComplex, n: int) -> list[tuple[int, int, int, int]]:
    """(p, q, offset, size) for the summands C_p (x) D_q of degree n, p ascending."""
    blocks = []
    offset = 0
    for p in c.degrees:
        q = n - p
        size = c.rank(p) * d.rank(q)
        if d.lo <= q <= d.hi:
            blocks.append((p, q, offset, size))
            offset += size
    return blocks


def tensor_product(c: ChainComplex, d: ChainComplex) -> ChainComplex:
    """
    C (x) D with d(x (x) y) = dx (x) y + (-1)^p x (x) dy.

    Basis of C_p (x) D_q: e_i (x) f_j at index i * rank(D_q) + j.
    """
    if c.ring != d.ring:
        raise RingMismatchError(c.ring, d.ring)
    ring = c.ring
    if not ring.is_commutative:
        raise UnsupportedBackendError("tensor_product", ring)
    if not c.ranks or not d.ranks:
        return ChainComplex.zero(ring)
    lo, hi = c.lo + d.lo, c.hi + d.hi
    ranks = tuple(sum(b[3] for b in tensor_blocks(c, d, n)) for n in range(lo, hi + 1))
    diffs = []
    for n in range(lo + 1, hi + 1):
        rows = [[ring.zero()] * ranks[n - lo] for _ in range(ranks[n - 1 - lo])]
        targets = {(p, q): offset for p, q, offset, _ in tensor_blocks(c, d, n - 1)}
        for p, q, col_offset, _ in tensor_blocks(c, d, n):
            pieces = []
            if (p - 1, q) in targets:
                pieces.append((targets[(p - 1, q)], c.differential(p).kron(Matrix.identity(ring, d.rank(q)))))
            if (p, q - 1) in targets:
                sign = -1 if p % 2 else 1
                pieces.append((targets[(p, q - 1)], Matrix.identity(ring, c.rank(p)).kron(d.differential(q)).scale(sign)))
            for row_offset, block in pieces:
                for i in range(block.rows):
                    for j in range(block.cols):
                        rows[row_offset + i][col_offset + j] = block[i, j]
        diffs.append(Matrix.from_rows(ring, rows, cols=ranks[n - lo]))
    return ChainComplex(ring, lo, ranks, tuple(diffs))


@dataclass(frozen=True)
class ModulePresentation:
    """coker(relations: R^r -> R^g) for a g x r relation matrix."""

    ring: RingDescriptor
    generators: int
    relations: Matrix

    def __post_init__(self):
        if self.relations.rows != self.generators:
            raise ShapeMismatchError("presentation", self.relations.shape, (self.generators, self.relations.cols))
        if self.relations.ring != self.ring:
            raise RingMismatchError(self.ring, self.relations.ring)

    @classmethod
    def cyclic(cls, ring: RingDescriptor, n: int) -> ModulePresentation:
        return cls(ring, 1, Matrix.from_rows(ring, [[n]]))

    @classmethod
    def free(cls, ring: RingDescriptor, rank: int) -> ModulePresentation:
        return cls(ring, rank, Matrix.zeros(ring, rank, 0))

    @classmethod
    def from_invariants(cls, ring: RingDescriptor, factors: Sequence[int]) -> ModulePresentation:
        return cls(ring, len(factors), Matrix.diagonal(ring, list(factors)))

    def describe(self) -> GroupDescription:
        rank, torsion = rank_and_torsion(self.relations)
        return GroupDescription(self.generators - rank, torsion)

    def resolution(self) -> ChainComplex:
        """Length-one free resolution 0 -> R^rank -> R^g with injective differential."""
        relations = self.relations
        if self.ring.kind is RingKind.INTEGERS:
            form = smith_normal_form(relations)
            relations = (relations @ form.v).submatrix(0, self.generators, 0, form.rank)
        elif self.ring.is_field:
            relations = _independent_columns(relations)
        else:
            raise UnsupportedBackendError("resolution", self.ring)
        return ChainComplex(self.ring, 0, (self.generators, relations.cols), (relations,))

    def to_dict(self) -> dict:
        return {"generators": self.generators, "relations": self.relations.to_strings()}


def _independent_columns(m: Matrix) -> Matrix:
    _, pivots = row_reduce(m)
    columns = [m.column_vector(j) for j in pivots]
    result = Matrix.zeros(m.ring, m.rows, 0)
    for col in columns:
        result = result.hstack(col)
    return result


def tor(
    m: ModulePresentation,
    n: Union[ModulePresentation, SigmaSet],
    max_i: int = 1,
) -> list[GroupDescription]:
    """
    Tor_i(M, N) for i = 0..max_i.

    N is either a presented module or the localization sigma^-1 R of a
    central sigma, in which case the resolution of M is localized. Z has
    global dimension one, so Tor_i vanishes structurally for i >= 2.

    Raises:
        UnsupportedBackendError: Outside Z and fields.
    """
    if not (m.ring.kind is RingKind.INTEGERS or m.ring.is_field):
        raise UnsupportedBackendError("tor", m.ring)
    resolution = m.resolution()
    if isinstance(n, SigmaSet):
        total = localize_complex(resolution, n)
    else:
        if n.ring != m.ring:
            raise RingMismatchError(m.ring, n.ring)
        total = tensor_product(resolution, n.resolution())
    h = homology(total)
    groups = [h[i] if i <= 1 else GroupDescription() for i in range(max_i + 1)]
    logger.debug("Tor computed up to degree %d: %s", max_i, [str(g) for g in groups])
    return groups


@dataclass(frozen=True)
class FlatnessReport:
    """Tor instances probing (stable) flatness of sigma^-1 Z."""

    localized_ring: RingDescriptor
    tor0: dict[int, GroupDescription]
    tor1: dict[int, GroupDescription]
    self_tor0: GroupDescription
    self_tor1: GroupDescription
    stage_multipliers: tuple[int, ...] = ()

    @property
    def flat(self) -> bool:
        return all(g.is_zero for g in self.tor1.values())

    @property
    def stably_flat(self) -> bool:
        return self.flat and self.self_tor1.is_zero and self.self_tor0 == GroupDescription(free=1)

    def to_dict(self) -> dict:
        return {
            "ring": str(self.localized_ring),
            "flat": self.flat,
            "stably_flat": self.stably_flat,
            "self_tor0": self.self_tor0.to_dict(),
            "self_tor1": self.self_tor1.to_dict(),
            "stage_multipliers": list(self.stage_multipliers),
            "instances": [
                {"n": n, "tor0": self.tor0[n].to_dict(), "tor1": self.tor1[n].to_dict()}
                for n in sorted(self.tor0)
            ],
        }


def telescope_presentation(ring: RingDescriptor, multipliers: Sequence[int]) -> ModulePresentation:
    """
    The truncated colimit of Z -m_1-> Z -m_2-> ... -m_k-> Z.

    Generators e_0..e_k (one per stage) with relations e_{i-1} = m_i e_i.
    """
    k = len(multipliers)
    rows = [[0] * k for _ in range(k + 1)]
    for i, m in enumerate(multipliers):
        rows[i][i] = 1
        rows[i + 1][i] = -m
    if not k:
        return ModulePresentation.free(ring, 1)
    return ModulePresentation(ring, k + 1, Matrix.from_rows(ring, rows))


def flatness_instances(sigma: SigmaSet, moduli: Sequence[int]) -> FlatnessReport:
    """
    Tor_0 and Tor_1 of (Z/n, sigma^-1 Z) for each modulus.

    Tor_i(sigma^-1 Z, sigma^-1 Z) is the colimit of Tor_i(Z_k, sigma^-1 Z)
    over the truncated stages Z_k of Z -m-> Z -m-> ..., with m running over
    the generators of sigma (the moduli when sigma is every nonzero
    integer). The transition maps act on sigma^-1 Z as multiplication by
    units, so the colimit is read off the last stage.
    """
    ring = sigma.ring
    if ring.kind is not RingKind.INTEGERS:
        raise UnsupportedBackendError("flatness_instances", ring)
    tor0, tor1 = {}, {}
    for n in moduli:
        groups = tor(ModulePresentation.cyclic(ring, n), sigma, max_i=1)
        tor0[n], tor1[n] = groups[0], groups[1]
    if sigma.all_nonzero:
        multipliers = tuple(abs(n) for n in moduli if abs(n) > 1)
    else:
        multipliers = tuple(abs(int(g.value)) for g in sigma.generators)
    stage = tor(telescope_presentation(ring, multipliers), sigma, max_i=1)
    logger.info(
        "Flatness instances over %s: %d moduli, %d colimit stages",
        sigma.localized_ring(), len(moduli), len(multipliers),
    )
    return FlatnessReport(sigma.localized_ring(), tor0, tor1, stage[0], stage[1], multipliers)


def dual_complex(c: ChainComplex, n: int) -> ChainComplex:
    """
    C^{n-*}: degree r holds C_{n-r}^*, differential (-1)^r d_{n-r+1}^*.
    """
    if c.is_zero():
        return ChainComplex.zero(c.ring)
    lo, hi = n - c.hi, n - c.lo
    ranks = tuple(c.rank(n - r) for r in range(lo, hi + 1))
    diffs = tuple(c.differential(n - r + 1).star().scale(-1 if r % 2 else 1) for r in range(lo + 1, hi + 1))
    return ChainComplex(c.ring, lo, ranks, diffs)
