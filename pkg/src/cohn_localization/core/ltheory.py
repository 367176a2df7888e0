"""
Symmetric and quadratic structures, torsion duality and linking forms.

Structures live in C (x) C with the transposition
T(x (x) y) = (-1)^{pq} eps y (x) x. An element of (C (x) C)_m is stored as a
column vector over the blocks C_p (x) C_q (p ascending), the coefficient of
e_i (x) e_j sitting at i * rank(C_q) + j inside its block; equivalently each
block is a rank(C_p) x rank(C_q) matrix read row by row.

Linking forms are restricted to R = Z with sigma = Z \\ {0}: a module
M = coker(s) for square s with det(s) != 0 and a Q/Z-valued pairing given by
a rational matrix on the generators.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, isqrt
from typing import Optional, Sequence

from .complexes import (
    ChainComplex,
    ChainMap,
    GroupDescription,
    cone,
    dual_complex,
    homology,
    localize_complex,
    tensor_blocks,
    tensor_product,
    validate_chain_map,
)
from .localize import SigmaSet
from .matrix import (
    Matrix,
    ShapeMismatchError,
    block_matrix,
    direct_sum,
    integer_span_contains,
    inverse_field,
    smith_normal_form,
    unimodular_inverse,
)
from .rings import (
    DomainError,
    RingDescriptor,
    RingKind,
    Scalar,
    UnsupportedBackendError,
)


logger = logging.getLogger(__name__)

DEFAULT_WITT_BOUND = 10_000


class InvalidStructureError(DomainError):
    """Raised when a structure, form or presentation violates its invariants."""

    kind = "invalid-structure"

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(f"Invalid structure: {reason}")


class NotPoincareError(DomainError):
    """Raised when a form is degenerate after localization (det = 0)."""

    kind = "not-poincare"

    def __init__(self, determinant: object):
        self.determinant = determinant
        super().__init__(f"Form with determinant {determinant} is not Poincare over the localization")


class WittBoundExceededError(DomainError):
    """Raised when subgroup enumeration would exceed the configured bound."""

    kind = "witt-bound-exceeded"

    def __init__(self, order: int, bound: int):
        self.order = order
        self.bound = bound
        super().__init__(f"Module of order {order} exceeds the Witt search bound {bound}")


# =============================================================================
# Epsilon and the transposition
# =============================================================================


@dataclass(frozen=True)
class EpsilonUnit:
    """A central unit with involute(eps) * eps = 1."""

    value: Scalar

    def __post_init__(self):
        if not self.value.ring.is_commutative:
            raise UnsupportedBackendError("epsilon", self.value.ring)
        if not (self.value.involute() * self.value).is_one():
            raise InvalidStructureError(f"eps = {self.value} does not satisfy eps * involute(eps) = 1")

    @classmethod
    def of(cls, ring: RingDescriptor, value: int) -> EpsilonUnit:
        return cls(ring.scalar(value))

    @property
    def ring(self) -> RingDescriptor:
        return self.value.ring

    def __str__(self) -> str:
        return str(self.value)


def _require_commutative(c: ChainComplex, operation: str) -> None:
    if not c.ring.is_commutative:
        raise UnsupportedBackendError(operation, c.ring)


def transposition(c: ChainComplex, eps: EpsilonUnit, m: int) -> Matrix:
    """Matrix of T on (C (x) C)_m."""
    ring = c.ring
    blocks = tensor_blocks(c, c, m)
    size = sum(b[3] for b in blocks)
    offsets = {(p, q): offset for p, q, offset, _ in blocks}
    rows = [[ring.zero()] * size for _ in range(size)]
    for p, q, offset, _ in blocks:
        rp, rq = c.rank(p), c.rank(q)
        sign = eps.value if (p * q) % 2 == 0 else -eps.value
        target = offsets[(q, p)]
        for i in range(rp):
            for j in range(rq):
                rows[target + j * rp + i][offset + i * rq + j] = sign
    return Matrix.from_rows(ring, rows, cols=size)


def blocks_to_vector(c: ChainComplex, m: int, blocks: dict[tuple[int, int], Matrix]) -> Matrix:
    """Column vector in (C (x) C)_m from per-block matrices (missing blocks are zero)."""
    ring = c.ring
    entries: list[Scalar] = []
    for p, q, _, _ in tensor_blocks(c, c, m):
        block = blocks.get((p, q), Matrix.zeros(ring, c.rank(p), c.rank(q)))
        if block.shape != (c.rank(p), c.rank(q)):
            raise ShapeMismatchError(f"block ({p},{q})", block.shape, (c.rank(p), c.rank(q)))
        entries.extend(e for row in block.entries for e in row)
    unknown = set(blocks) - {(p, q) for p, q, _, _ in tensor_blocks(c, c, m)}
    nonzero_unknown = [key for key in unknown if not blocks[key].is_zero()]
    if nonzero_unknown:
        raise InvalidStructureError(f"blocks {sorted(nonzero_unknown)} are not in degree {m}")
    return Matrix.column(ring, entries) if entries else Matrix.zeros(ring, 0, 1)


def vector_to_blocks(c: ChainComplex, m: int, vector: Matrix) -> dict[tuple[int, int], Matrix]:
    blocks = {}
    for p, q, offset, size in tensor_blocks(c, c, m):
        rp, rq = c.rank(p), c.rank(q)
        values = [vector[offset + k, 0] for k in range(size)]
        blocks[(p, q)] = Matrix.from_rows(c.ring, [values[i * rq:(i + 1) * rq] for i in range(rp)], cols=rq)
    return blocks


# =============================================================================
# Q-groups
# =============================================================================


def _symmetric_slots(c: ChainComplex, m: int) -> list[int]:
    """Slots s >= 0 with (C (x) C)_{m+s} inside the support."""
    return list(range(max(0, 2 * c.lo - m), 2 * c.hi - m + 1))


def _quadratic_slots(c: ChainComplex, m: int) -> list[int]:
    """Slots s >= 0 with (C (x) C)_{m-s} inside the support."""
    return list(range(max(0, m - 2 * c.hi), m - 2 * c.lo + 1))


def _assemble(
    ring: RingDescriptor,
    row_sizes: list[int],
    col_sizes: list[int],
    pieces: dict[tuple[int, int], Matrix],
) -> Matrix:
    if not sum(row_sizes) or not sum(col_sizes):
        return Matrix.zeros(ring, sum(row_sizes), sum(col_sizes))
    grid = [
        [pieces.get((i, j), Matrix.zeros(ring, row_sizes[i], col_sizes[j])) for j in range(len(col_sizes))]
        for i in range(len(row_sizes))
    ]
    return block_matrix(ring, grid)


def _one_plus(sign: int, t: Matrix) -> Matrix:
    """1 + sign * T."""
    return Matrix.identity(t.ring, t.rows) + t.scale(sign)


class _TensorSquare:
    """C (x) C with its transposition, cached per degree."""

    def __init__(self, c: ChainComplex, eps: EpsilonUnit):
        _require_commutative(c, "Q-groups")
        if eps.ring != c.ring:
            raise InvalidStructureError(f"eps over {eps.ring} for a complex over {c.ring}")
        self.c = c
        self.eps = eps
        self.k = tensor_product(c, c)
        self._t: dict[int, Matrix] = {}

    def rank(self, m: int) -> int:
        return self.k.rank(m)

    def d(self, m: int) -> Matrix:
        return self.k.differential(m)

    def t(self, m: int) -> Matrix:
        if m not in self._t:
            self._t[m] = transposition(self.c, self.eps, m)
        return self._t[m]

    def symmetric_differential(self, n: int) -> Matrix:
        """(D phi)_s = d phi_s - (-1)^n (1 + (-1)^s T) phi_{s-1}, Tot_n -> Tot_{n-1}."""
        src = _symmetric_slots(self.c, n)
        dst = _symmetric_slots(self.c, n - 1)
        pieces = {}
        sign_n = -1 if n % 2 == 0 else 1
        for j, s in enumerate(src):
            for i, target in enumerate(dst):
                if target == s:
                    pieces[(i, j)] = self.d(n + s)
                elif target == s + 1:
                    parity = 1 if target % 2 == 0 else -1
                    pieces[(i, j)] = _one_plus(parity, self.t(n + s)).scale(sign_n)
        return _assemble(
            self.c.ring,
            [self.rank(n - 1 + s) for s in dst],
            [self.rank(n + s) for s in src],
            pieces,
        )

    def quadratic_differential(self, n: int) -> Matrix:
        """d psi_s = (-1)^s d psi_s in slot s plus (1 + (-1)^s T) psi_s in slot s-1."""
        src = _quadratic_slots(self.c, n)
        dst = _quadratic_slots(self.c, n - 1)
        pieces = {}
        for j, s in enumerate(src):
            for i, target in enumerate(dst):
                if target == s:
                    pieces[(i, j)] = self.d(n - s).scale(-1 if s % 2 else 1)
                elif target == s - 1:
                    pieces[(i, j)] = _one_plus(1 if s % 2 == 0 else -1, self.t(n - s))
        return _assemble(
            self.c.ring,
            [self.rank(n - 1 - s) for s in dst],
            [self.rank(n - s) for s in src],
            pieces,
        )

    def total_rank(self, n: int, symmetric: bool) -> int:
        if symmetric:
            return sum(self.rank(n + s) for s in _symmetric_slots(self.c, n))
        return sum(self.rank(n - s) for s in _quadratic_slots(self.c, n))


def q_group(c: ChainComplex, eps: EpsilonUnit, n: int, side: str = "symmetric") -> GroupDescription:
    """
    Q^n(C, eps) (side="symmetric") or Q_n(C, eps) (side="quadratic").

    Computed as H_n of the Hom (resp. tensor) complex over the standard
    resolution of Z over Z[Z/2]; every total degree is a finite sum because
    C (x) C is bounded.
    """
    if side not in ("symmetric", "quadratic"):
        raise ValueError(f"Unknown Q-group side: {side}")
    if c.ring.is_free_algebra:
        raise UnsupportedBackendError("q_group", c.ring)
    square = _TensorSquare(c, eps)
    symmetric = side == "symmetric"
    differential = square.symmetric_differential if symmetric else square.quadratic_differential
    ranks = tuple(square.total_rank(m, symmetric) for m in (n - 1, n, n + 1))
    window = ChainComplex(c.ring, n - 1, ranks, (differential(n), differential(n + 1)))
    group = homology(window)[n]
    logger.debug("Q-group %s n=%d eps=%s: %s", side, n, eps, group)
    return group


# =============================================================================
# Structures
# =============================================================================


@dataclass(frozen=True)
class SymmetricStructure:
    """phi = (phi_s) with phi_s in (C (x) C)_{n+s}, stored as column vectors."""

    complex: ChainComplex
    n: int
    eps: EpsilonUnit
    phis: tuple[Matrix, ...]

    @classmethod
    def from_blocks(
        cls,
        c: ChainComplex,
        n: int,
        eps: EpsilonUnit,
        components: Sequence[dict[tuple[int, int], Matrix]],
    ) -> SymmetricStructure:
        return cls(c, n, eps, tuple(blocks_to_vector(c, n + s, blocks) for s, blocks in enumerate(components)))

    @classmethod
    def from_form(cls, form: Matrix, eps: EpsilonUnit) -> SymmetricStructure:
        """The 0-dimensional structure on [R^k in degree 0] given by a k x k form."""
        c = ChainComplex.concentrated(form.ring, 0, form.rows)
        return cls.from_blocks(c, 0, eps, [{(0, 0): form}])

    def is_cycle(self) -> bool:
        square = _TensorSquare(self.complex, self.eps)
        vector = _to_tot(square, self.n, self.phis, _symmetric_slots(self.complex, self.n), lambda s: self.n + s)
        return (square.symmetric_differential(self.n) @ vector).is_zero()

    def check(self) -> SymmetricStructure:
        if not self.is_cycle():
            raise InvalidStructureError("symmetric structure is not a cycle")
        return self

    def blocks(self, s: int) -> dict[tuple[int, int], Matrix]:
        return vector_to_blocks(self.complex, self.n + s, self.phis[s])

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "eps": str(self.eps),
            "phis": [
                [{"p": p, "q": q, "matrix": m.to_strings()} for (p, q), m in sorted(self.blocks(s).items())]
                for s in range(len(self.phis))
            ],
        }


@dataclass(frozen=True)
class QuadraticStructure:
    """psi = (psi_s) with psi_s in (C (x) C)_{n-s}, stored as column vectors."""

    complex: ChainComplex
    n: int
    eps: EpsilonUnit
    psis: tuple[Matrix, ...]

    @classmethod
    def from_blocks(
        cls,
        c: ChainComplex,
        n: int,
        eps: EpsilonUnit,
        components: Sequence[dict[tuple[int, int], Matrix]],
    ) -> QuadraticStructure:
        return cls(c, n, eps, tuple(blocks_to_vector(c, n - s, blocks) for s, blocks in enumerate(components)))

    @classmethod
    def from_form(cls, form: Matrix, eps: EpsilonUnit) -> QuadraticStructure:
        c = ChainComplex.concentrated(form.ring, 0, form.rows)
        return cls.from_blocks(c, 0, eps, [{(0, 0): form}])

    def is_cycle(self) -> bool:
        square = _TensorSquare(self.complex, self.eps)
        vector = _to_tot(square, self.n, self.psis, _quadratic_slots(self.complex, self.n), lambda s: self.n - s)
        return (square.quadratic_differential(self.n) @ vector).is_zero()

    def check(self) -> QuadraticStructure:
        if not self.is_cycle():
            raise InvalidStructureError("quadratic structure is not a cycle")
        return self


def _to_tot(square: _TensorSquare, n: int, parts: Sequence[Matrix], slots: list[int], degree) -> Matrix:
    ring = square.c.ring
    for s, part in enumerate(parts):
        if s not in slots and not part.is_zero():
            raise InvalidStructureError(f"component {s} lies outside the support")
    column: Optional[Matrix] = None
    for s in slots:
        size = square.rank(degree(s))
        piece = parts[s] if s < len(parts) else Matrix.zeros(ring, size, 1)
        if piece.shape != (size, 1):
            raise ShapeMismatchError(f"component {s}", piece.shape, (size, 1))
        column = piece if column is None else column.vstack(piece)
    return column if column is not None else Matrix.zeros(ring, 0, 1)


def symmetrize(psi: QuadraticStructure) -> SymmetricStructure:
    """phi_0 = (1 + T) psi_0 and phi_s = 0 for s >= 1."""
    psi.check()
    square = _TensorSquare(psi.complex, psi.eps)
    psi0 = psi.psis[0] if psi.psis else Matrix.zeros(psi.complex.ring, square.rank(psi.n), 1)
    phi0 = _one_plus(1, square.t(psi.n)) @ psi0
    return SymmetricStructure(psi.complex, psi.n, psi.eps, (phi0,))


def forget_to_phi0(phi: SymmetricStructure) -> dict[tuple[int, int], Matrix]:
    """The image of phi in H_n(C (x) C): the cycle phi_0, by blocks."""
    phi.check()
    return phi.blocks(0)


def phi0_chain_map(phi: SymmetricStructure) -> ChainMap:
    """phi_0 as a chain map C^{n-*} -> C with components phi_0^{(r, n-r)}."""
    c, n = phi.complex, phi.n
    dual = dual_complex(c, n)
    blocks = phi.blocks(0)
    components = tuple(
        blocks.get((r, n - r), Matrix.zeros(c.ring, c.rank(r), c.rank(n - r))) for r in dual.degrees
    )
    return validate_chain_map(ChainMap(dual, c, dual.lo, components))


def is_poincare(phi: SymmetricStructure, sigma: Optional[SigmaSet] = None) -> bool:
    """
    True iff phi_0: C^{n-*} -> C is a chain equivalence, integrally or
    after localizing at a central sigma.
    """
    phi.check()
    mapping_cone = cone(phi0_chain_map(phi))
    if sigma is not None:
        mapping_cone = localize_complex(mapping_cone, sigma)
        if not isinstance(mapping_cone, ChainComplex):
            raise UnsupportedBackendError("is_poincare", sigma.ring)
    return homology(mapping_cone).is_acyclic


# =============================================================================
# Torsion modules and linking forms
# =============================================================================


def _require_integers(m: Matrix, operation: str) -> None:
    if m.ring.kind is not RingKind.INTEGERS:
        raise UnsupportedBackendError(operation, m.ring)


@dataclass(frozen=True)
class TorsionModulePresentation:
    """M = coker(s) for a square integer matrix s with det(s) != 0."""

    s: Matrix

    def __post_init__(self):
        _require_integers(self.s, "torsion presentation")
        if not self.s.is_square:
            raise ShapeMismatchError("torsion presentation", self.s.shape, (self.s.rows, self.s.rows))
        if self.s.determinant().is_zero():
            raise InvalidStructureError("presentation matrix has determinant 0")

    @classmethod
    def from_invariants(cls, factors: Sequence[int]) -> TorsionModulePresentation:
        z = RingDescriptor.integers()
        if not factors:
            return cls(Matrix.identity(z, 1))
        return cls(Matrix.diagonal(z, list(factors)))

    @property
    def size(self) -> int:
        return self.s.rows

    @property
    def order(self) -> int:
        return abs(self.s.determinant().value)

    @property
    def invariant_factors(self) -> list[int]:
        return smith_normal_form(self.s).invariant_factors

    def to_dict(self) -> dict:
        return {"s": self.s.to_strings(), "invariants": self.invariant_factors}


def torsion_dual(m: TorsionModulePresentation) -> TorsionModulePresentation:
    """M^ = Ext^1(M, R), presented by the star transpose of s."""
    return TorsionModulePresentation(m.s.star())


def double_dual_check(m: TorsionModulePresentation) -> bool:
    return torsion_dual(torsion_dual(m)).invariant_factors == m.invariant_factors


def _mod_one(x: Fraction) -> Fraction:
    return x - (x.numerator // x.denominator)


def linking_pairing(m: TorsionModulePresentation, f: Matrix, g: Matrix) -> Fraction:
    """f s^-1 g reduced into [0, 1)."""
    n = m.size
    if f.shape != (1, n):
        raise ShapeMismatchError("pairing f", f.shape, (1, n))
    if g.shape != (n, 1):
        raise ShapeMismatchError("pairing g", g.shape, (n, 1))
    q = RingDescriptor.rationals()
    value = (f.change_ring(q) @ inverse_field(m.s.change_ring(q)) @ g.change_ring(q))[0, 0].value
    return _mod_one(value)


@dataclass(frozen=True)
class LinkingForm:
    """
    lambda(e_i, e_j) = pairing[i][j] mod Z on M = coker(s).

    Well-defined when s^t Lambda and Lambda s are integral; eps-symmetric
    when Lambda - eps Lambda^t is integral.
    """

    module: TorsionModulePresentation
    pairing: Matrix
    eps: int = 1

    def __post_init__(self):
        q = RingDescriptor.rationals()
        if self.pairing.ring != q:
            object.__setattr__(self, "pairing", self.pairing.change_ring(q))
        n = self.module.size
        if self.pairing.shape != (n, n):
            raise ShapeMismatchError("linking pairing", self.pairing.shape, (n, n))
        if self.eps not in (1, -1):
            raise InvalidStructureError(f"eps must be +1 or -1, got {self.eps}")
        s = self.module.s.change_ring(q)
        if not _integral(s.transpose() @ self.pairing) or not _integral(self.pairing @ s):
            raise InvalidStructureError("pairing is not well defined modulo the relations")
        if not _integral(self.pairing - self.pairing.transpose().scale(self.eps)):
            raise InvalidStructureError(f"pairing is not {self.eps:+d}-symmetric modulo Z")

    def value(self, x: Sequence[int], y: Sequence[int]) -> Fraction:
        total = Fraction(0)
        for i, xi in enumerate(x):
            if not xi:
                continue
            for j, yj in enumerate(y):
                if yj:
                    total += xi * yj * self.pairing[i, j].value
        return _mod_one(total)

    def reduced_pairing(self) -> list[list[Fraction]]:
        return [[_mod_one(e.value) for e in row] for row in self.pairing.entries]

    def to_dict(self) -> dict:
        return {
            "module": self.module.invariant_factors,
            "s": self.module.s.to_strings(),
            "pairing": [[str(v) for v in row] for row in self.reduced_pairing()],
            "eps": self.eps,
        }


def _integral(m: Matrix) -> bool:
    return all(e.value.denominator == 1 for row in m.entries for e in row)


def normalize_form(form: LinkingForm) -> LinkingForm:
    """
    The same form on the Smith generators of M, with trivial summands dropped.

    With U s V = D, x' = U x identifies coker(s) with coker(D), and the
    pairing becomes (U^-1)^t Lambda U^-1.
    """
    s = form.module.s
    smith = smith_normal_form(s)
    q = RingDescriptor.rationals()
    u_inv = unimodular_inverse(smith.u).change_ring(q)
    pairing = u_inv.transpose() @ form.pairing @ u_inv
    keep = [i for i, d in enumerate(smith.diagonal) if d > 1]
    module = TorsionModulePresentation.from_invariants([smith.diagonal[i] for i in keep])
    if not keep:
        return LinkingForm(module, Matrix.zeros(q, 1, 1), form.eps)
    rows = [[_mod_one(pairing[i, j].value) for j in keep] for i in keep]
    return LinkingForm(module, Matrix.from_rows(q, rows), form.eps)


def linking_nonsingular(form: LinkingForm) -> bool:
    """
    The adjoint M -> M^ is an isomorphism.

    On presentations the adjoint is A = s^t Lambda^t: Z^n -> Z^n; since
    |M| = |M^| it is an isomorphism iff the columns of [A | s^t] generate Z^n.
    """
    s = form.module.s
    q = RingDescriptor.rationals()
    adjoint = s.change_ring(q).transpose() @ form.pairing.transpose()
    z = s.ring
    a = adjoint.map(lambda e: z.scalar(e.value), z)
    smith = smith_normal_form(a.hstack(s.star()))
    return smith.rank == s.rows and all(d == 1 for d in smith.diagonal)


def boundary_linking_form(form: Matrix, eps: int = 1) -> LinkingForm:
    """
    Linking form on coker(S) with pairing S^-1 mod Z, the boundary of a
    0-dimensional eps-symmetric form that is Poincare over Q.

    Raises:
        InvalidStructureError: If S is not eps-symmetric.
        NotPoincareError: If det(S) = 0.
    """
    _require_integers(form, "boundary_linking_form")
    if not form.is_square:
        raise ShapeMismatchError("boundary form", form.shape, (form.rows, form.rows))
    if form.transpose().scale(eps) != form:
        raise InvalidStructureError(f"form is not {eps:+d}-symmetric")
    det = form.determinant()
    if det.is_zero():
        raise NotPoincareError(det)
    q = RingDescriptor.rationals()
    inverse = inverse_field(form.change_ring(q))
    boundary = LinkingForm(TorsionModulePresentation(form), inverse, eps)
    logger.debug("Boundary of a rank %d form with determinant %s", form.rows, det)
    return normalize_form(boundary)


def _elements(factors: Sequence[int]) -> list[tuple[int, ...]]:
    elements: list[tuple[int, ...]] = [()]
    for d in factors:
        elements = [e + (a,) for e in elements for a in range(d)]
    return elements


def _span(generators: Sequence[tuple[int, ...]], factors: Sequence[int]) -> frozenset[tuple[int, ...]]:
    span = {tuple(0 for _ in factors)}
    for g in generators:
        current = set(span)
        multiple = tuple(0 for _ in factors)
        while True:
            multiple = tuple((m + x) % d for m, x, d in zip(multiple, g, factors))
            if all(v == 0 for v in multiple):
                break
            current |= {tuple((a + b) % d for a, b, d in zip(e, multiple, factors)) for e in span}
        span = current
    return frozenset(span)


def witt_metabolic_test(form: LinkingForm, bound: int = DEFAULT_WITT_BOUND) -> bool:
    """
    True iff some subgroup N with lambda(N, N) = 0 has |N|^2 = |M|.

    Subgroups are explored by adjoining isotropic elements orthogonal to
    the current generators, each subgroup visited once.

    Raises:
        WittBoundExceededError: If |M| exceeds bound.
    """
    order = form.module.order
    if order > bound:
        raise WittBoundExceededError(order, bound)
    root = isqrt(order)
    if root * root != order:
        return False
    if order == 1:
        return True

    normal = normalize_form(form)
    factors = normal.module.invariant_factors
    candidates = [x for x in _elements(factors) if any(x) and normal.value(x, x) == 0]
    seen: set[frozenset[tuple[int, ...]]] = set()
    stack: list[tuple[list[tuple[int, ...]], frozenset[tuple[int, ...]]]] = [([], _span([], factors))]
    while stack:
        generators, subgroup = stack.pop()
        if len(subgroup) == root:
            logger.debug("Metabolizer of order %d generated by %s", root, generators)
            return True
        for x in candidates:
            if x in subgroup or any(normal.value(x, g) != 0 for g in generators):
                continue
            bigger = _span(generators + [x], factors)
            if len(bigger) > root or bigger in seen:
                continue
            seen.add(bigger)
            stack.append((generators + [x], bigger))
    return False


def orthogonal_sum(a: LinkingForm, b: LinkingForm) -> LinkingForm:
    if a.eps != b.eps:
        raise InvalidStructureError("orthogonal sum of forms with different eps")
    module = TorsionModulePresentation(direct_sum(a.module.s, b.module.s))
    return LinkingForm(module, direct_sum(a.pairing, b.pairing), a.eps)


def negate(form: LinkingForm) -> LinkingForm:
    return LinkingForm(form.module, -form.pairing, form.eps)


def witt_equivalent(a: LinkingForm, b: LinkingForm, bound: int = DEFAULT_WITT_BOUND) -> bool:
    """a and b have the same Witt class iff a + (-b) is metabolic."""
    return witt_metabolic_test(orthogonal_sum(a, negate(b)), bound)


def hom_order(m: TorsionModulePresentation, n: TorsionModulePresentation) -> int:
    """|Hom(M^, N)| = product of gcd(d_i, e_j) over invariant factors."""
    order = 1
    for d in torsion_dual(m).invariant_factors:
        for e in n.invariant_factors:
            order *= gcd(d, e)
    return order


# =============================================================================
# Extensions
# =============================================================================


@dataclass
class ExtensionResult:
    """L = coker(u) with the checks certifying 0 -> N -> L -> (M^)^k -> 0."""

    extension: TorsionModulePresentation
    order: int
    expected_order: int
    killed: list[bool] = field(default_factory=list)

    @property
    def order_matches(self) -> bool:
        return self.order == self.expected_order

    @property
    def verified(self) -> bool:
        return self.order_matches and all(self.killed)

    def to_dict(self) -> dict:
        return {
            "u": self.extension.s.to_strings(),
            "module": self.extension.invariant_factors,
            "order": self.order,
            "expected_order": self.expected_order,
            "order_matches": self.order_matches,
            "killed": self.killed,
            "verified": self.verified,
        }


def cokernel_order(s: Matrix) -> int:
    """|coker s| as the product of the Smith diagonal; 0 when infinite."""
    order = 1
    for d in smith_normal_form(s).diagonal:
        order *= abs(d)
    if s.rows > s.cols:
        return 0
    return order


def extension_iv(
    m: TorsionModulePresentation,
    n: TorsionModulePresentation,
    vs: Sequence[Matrix],
) -> ExtensionResult:
    """
    The extension with u = [[s*, ..., 0], [v_1, ..., v_k, t]].

    Each v_i is an n x m matrix (a map P_0^* -> Q_0). The certificate
    compares |L|, read off the Smith form of u, with |N| |M^|^k and checks
    that every v_i, read as an element of P_0 (x) Q_0 in P_0 (x) L_0,
    vanishes in M (x) L.
    """
    s, t = m.s, n.s
    ring = s.ring
    size_m, size_n, k = s.rows, t.rows, len(vs)
    for v in vs:
        if v.shape != (size_n, size_m):
            raise ShapeMismatchError("extension v", v.shape, (size_n, size_m))

    top = Matrix.zeros(ring, 0, k * size_m + size_n)
    dual = s.star()
    for i in range(k):
        row = Matrix.zeros(ring, size_m, i * size_m).hstack(dual)
        row = row.hstack(Matrix.zeros(ring, size_m, (k - i - 1) * size_m + size_n))
        top = top.vstack(row)
    bottom = Matrix.zeros(ring, size_n, 0)
    for v in vs:
        bottom = bottom.hstack(v)
    u = top.vstack(bottom.hstack(t))
    extension = TorsionModulePresentation(u)

    order = cokernel_order(u)
    expected = cokernel_order(t) * cokernel_order(dual) ** k
    width = u.rows
    relations = s.kron(Matrix.identity(ring, width)).hstack(Matrix.identity(ring, size_m).kron(u))
    killed = []
    for v in vs:
        entries = [ring.zero()] * (size_m * width)
        for a in range(size_m):
            for b in range(size_n):
                entries[a * width + k * size_m + b] = v[b, a]
        killed.append(integer_span_contains(relations, Matrix.column(ring, entries)))
    logger.info("Extension of order %d (expected %d) built from %d lifts", order, expected, k)
    return ExtensionResult(extension, order, expected, killed)
