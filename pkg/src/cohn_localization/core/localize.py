"""
Arithmetic in localized rings.

Three representations of elements of the localization:

- OreFraction: r/s for a central multiplicative set over Z, Z[1/m] or a field.
- CohnTriple: (f, s, g) standing for f * s^-1 * g, for any sigma.
- LinearRepresentation: a weighted automaton realizing the rational
  noncommutative series of a triple over the free algebra.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence, Union

from .matrix import (
    Matrix,
    NoSolutionError,
    ShapeMismatchError,
    SingularMatrixError,
    block_matrix,
    direct_sum,
    inverse_field,
    solve_field,
)
from .rings import (
    DomainError,
    NonUnitError,
    RingDescriptor,
    RingKind,
    RingMismatchError,
    Scalar,
    UnsupportedBackendError,
    Word,
    prime_support,
)


logger = logging.getLogger(__name__)


class SigmaMembershipError(DomainError):
    """Raised when a denominator or matrix is not inverted by sigma."""

    kind = "sigma-membership"

    def __init__(self, value: object, sigma: SigmaSet, reason: str = ""):
        self.value = value
        self.sigma = sigma
        detail = f" ({reason})" if reason else ""
        super().__init__(f"{value} is not inverted by {sigma}{detail}")


class SigmaMismatchError(DomainError):
    """Raised when operands are localized at different sets."""

    kind = "sigma-mismatch"

    def __init__(self, left: SigmaSet, right: SigmaSet):
        self.left = left
        self.right = right
        super().__init__(f"Sigma mismatch: {left} vs {right}")


class LetterOutOfRangeError(DomainError):
    """Raised when a word uses a letter outside the alphabet."""

    kind = "letter-out-of-range"

    def __init__(self, letter: int, alphabet: int):
        self.letter = letter
        self.alphabet = alphabet
        super().__init__(f"Letter x{letter} is outside the alphabet x1..x{alphabet}")


# =============================================================================
# Sigma sets
# =============================================================================


class SigmaMode(str, Enum):
    CENTRAL = "central"
    MATRICES = "matrices"
    AUGMENTATION = "augmentation"


@dataclass(frozen=True)
class SigmaSet:
    """
    The set of matrices to invert.

    CENTRAL is the multiplicative set generated by central scalars (or all
    nonzero elements); membership is saturated, so any divisor of a product
    of generators counts. AUGMENTATION is the free-algebra case where every
    square matrix with invertible constant part is inverted. MATRICES is an
    explicit finite list.
    """

    ring: RingDescriptor
    mode: SigmaMode
    generators: tuple[Scalar, ...] = ()
    all_nonzero: bool = False
    matrices: tuple[Matrix, ...] = ()

    def __post_init__(self):
        if self.mode is SigmaMode.CENTRAL:
            if not self.ring.is_commutative:
                raise UnsupportedBackendError("central sigma", self.ring)
            for gen in self.generators:
                if gen.ring != self.ring:
                    raise RingMismatchError(self.ring, gen.ring)
                if gen.is_zero():
                    raise SigmaMembershipError(gen, self, "zero cannot be inverted")
        elif self.mode is SigmaMode.AUGMENTATION:
            if not self.ring.is_free_algebra:
                raise UnsupportedBackendError("augmentation sigma", self.ring)
        else:
            for m in self.matrices:
                if m.ring != self.ring:
                    raise RingMismatchError(self.ring, m.ring)
                if not m.is_square:
                    raise ShapeMismatchError("sigma", m.shape, (m.cols, m.rows))

    @classmethod
    def central(cls, ring: RingDescriptor, generators: Sequence[Union[Scalar, int, str]]) -> SigmaSet:
        return cls(ring, SigmaMode.CENTRAL, generators=tuple(ring.scalar(g) for g in generators))

    @classmethod
    def nonzero(cls, ring: RingDescriptor) -> SigmaSet:
        return cls(ring, SigmaMode.CENTRAL, all_nonzero=True)

    @classmethod
    def augmentation(cls, ring: RingDescriptor) -> SigmaSet:
        return cls(ring, SigmaMode.AUGMENTATION)

    @classmethod
    def matrix_set(cls, ring: RingDescriptor, matrices: Sequence[Matrix]) -> SigmaSet:
        return cls(ring, SigmaMode.MATRICES, matrices=tuple(matrices))

    @property
    def is_central(self) -> bool:
        return self.mode is SigmaMode.CENTRAL

    @property
    def generator_primes(self) -> tuple[int, ...]:
        primes: set[int] = set()
        if self.ring.kind in (RingKind.INTEGERS, RingKind.LOCALIZED_INTEGERS):
            for gen in self.generators:
                primes.update(prime_support(Fraction(gen.value).numerator))
        return tuple(sorted(primes))

    def contains(self, s: Scalar) -> bool:
        """Membership of a scalar in the saturated multiplicative set."""
        if not self.is_central:
            raise UnsupportedBackendError("scalar membership", self.ring)
        if s.ring != self.ring:
            raise RingMismatchError(self.ring, s.ring)
        if s.is_zero():
            return False
        if self.ring.is_field or self.all_nonzero:
            return True
        allowed = set(self.generator_primes) | set(self.ring.primes)
        return all(q in allowed for q in prime_support(Fraction(s.value).numerator))

    def localized_ring(self) -> RingDescriptor:
        """The concrete commutative ring sigma^-1 R for a central sigma."""
        if not self.is_central:
            raise UnsupportedBackendError("localized_ring", self.ring)
        if self.ring.is_field:
            return self.ring
        if self.all_nonzero:
            return RingDescriptor.rationals()
        primes = sorted(set(self.generator_primes) | set(self.ring.primes))
        if not primes:
            return self.ring
        return RingDescriptor.localized_integers(primes)

    def to_dict(self) -> dict:
        if self.mode is SigmaMode.CENTRAL:
            if self.all_nonzero:
                return {"central": "nonzero"}
            return {"central": [str(g) for g in self.generators]}
        if self.mode is SigmaMode.AUGMENTATION:
            return {"augmentation": True}
        return {"matrices": [m.to_strings() for m in self.matrices]}

    @classmethod
    def from_dict(cls, ring: RingDescriptor, data: dict) -> SigmaSet:
        if "central" in data:
            if data["central"] == "nonzero":
                return cls.nonzero(ring)
            return cls.central(ring, list(data["central"]))
        if data.get("augmentation"):
            return cls.augmentation(ring)
        if "matrices" in data:
            return cls.matrix_set(ring, [Matrix.from_rows(ring, rows) for rows in data["matrices"]])
        raise ValueError(f"Unrecognized sigma description: {data!r}")

    def __str__(self) -> str:
        if self.mode is SigmaMode.CENTRAL:
            if self.all_nonzero:
                return f"{self.ring}\\{{0}}"
            return "{" + ", ".join(str(g) for g in self.generators) + "}"
        if self.mode is SigmaMode.AUGMENTATION:
            return f"augmentation-invertible matrices over {self.ring}"
        return f"{len(self.matrices)} listed matrices over {self.ring}"


@dataclass(frozen=True)
class CertifiedInvertible:
    """s is inverted by sigma; certificate is the inverse that proves it."""

    matrix: Matrix
    certificate: Optional[Matrix] = None

    accepted = True

    def to_dict(self) -> dict:
        data = {"accepted": True}
        if self.certificate is not None:
            data["certificate"] = self.certificate.to_strings()
        return data


@dataclass(frozen=True)
class Rejected:
    matrix: Matrix
    reason: str

    accepted = False

    def to_dict(self) -> dict:
        return {"accepted": False, "reason": self.reason}


def augment_matrix(m: Matrix) -> Matrix:
    """Entrywise constant term of a free-algebra matrix."""
    return m.map(lambda e: e.augment(), m.ring.base)


def _match_listed(sigma: SigmaSet, s: Matrix, start: int) -> bool:
    n = s.rows
    if start == n:
        return True
    for block in sigma.matrices + (None,):
        size = 1 if block is None else block.rows
        end = start + size
        if size == 0 or end > n:
            continue
        diag = s.submatrix(start, end, start, end)
        if block is None:
            if not diag[0, 0].is_unit():
                continue
        elif diag != block:
            continue
        if not s.submatrix(end, n, start, end).is_zero():
            continue
        if _match_listed(sigma, s, end):
            return True
    return False


def sigma_validate(sigma: SigmaSet, s: Matrix) -> Union[CertifiedInvertible, Rejected]:
    """
    Decide whether s is inverted in the localization.

    Central sets accept s when det(s) lies in the saturated closure; the
    certificate is the inverse over the localized ring. The augmentation set
    accepts s when its constant part is invertible over the base field, with
    that inverse as certificate. A listed set accepts block upper triangular
    matrices whose diagonal blocks are listed matrices or units.

    Raises:
        ShapeMismatchError: If s is not square.
    """
    if s.ring != sigma.ring:
        raise RingMismatchError(sigma.ring, s.ring)
    if not s.is_square:
        raise ShapeMismatchError("sigma_validate", s.shape, (s.cols, s.rows))

    if sigma.mode is SigmaMode.CENTRAL:
        det = s.determinant()
        if not sigma.contains(det):
            return Rejected(s, f"determinant {det} is not in the multiplicative set")
        return CertifiedInvertible(s, localized_inverse(sigma, s))

    if sigma.mode is SigmaMode.AUGMENTATION:
        try:
            inverse = inverse_field(augment_matrix(s))
        except SingularMatrixError:
            return Rejected(s, "augmentation is singular")
        return CertifiedInvertible(s, inverse)

    if _match_listed(sigma, s, 0):
        return CertifiedInvertible(s)
    return Rejected(s, "not block triangular over the listed matrices")


def localized_inverse(sigma: SigmaSet, s: Matrix) -> Matrix:
    """Inverse of s over sigma^-1 R for a central sigma."""
    target = sigma.localized_ring()
    fraction_field = target if target.is_field else RingDescriptor.rationals()
    inverse = inverse_field(s.change_ring(fraction_field))
    if target == fraction_field:
        return inverse
    return inverse.map(lambda e: target.scalar(e.value), target)


# =============================================================================
# Ore fractions
# =============================================================================


@dataclass(frozen=True)
class OreFraction:
    """
    A fraction num/den with den in a central sigma.

    Normalized on construction: reduced with positive denominator over Z,
    inverted primes moved into the numerator over Z[1/m], and den = 1 over
    a field.
    """

    sigma: SigmaSet
    num: Scalar
    den: Scalar

    def __post_init__(self):
        sigma = self.sigma
        ring = sigma.ring
        if not sigma.is_central:
            raise UnsupportedBackendError("Ore fractions", ring)
        for part in (self.num, self.den):
            if part.ring != ring:
                raise RingMismatchError(ring, part.ring)
        if not sigma.contains(self.den):
            raise SigmaMembershipError(self.den, sigma, "denominator")

        if ring.is_field:
            num, den = self.num * self.den.invert(), ring.one()
        else:
            value = Fraction(self.num.value) / Fraction(self.den.value)
            inverted, outside = 1, value.denominator
            for q in ring.primes:
                while outside % q == 0:
                    outside //= q
                    inverted *= q
            num = ring.scalar(Fraction(value.numerator, inverted))
            den = ring.scalar(outside)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @classmethod
    def from_value(cls, sigma: SigmaSet, value: Union[Fraction, int, Scalar]) -> OreFraction:
        """Fraction from a rational number (or field element) whose denominator lies in sigma."""
        ring = sigma.ring
        if isinstance(value, Scalar):
            if value.ring.is_field and value.ring == ring:
                return cls(sigma, value, ring.one())
            value = value.to_fraction()
        value = Fraction(value)
        if ring.is_field:
            return cls(sigma, ring.scalar(value), ring.one())
        return cls(sigma, ring.scalar(value.numerator), ring.scalar(value.denominator))

    @property
    def value(self) -> Union[Fraction, Scalar]:
        if self.sigma.ring.is_field:
            return self.num
        return Fraction(self.num.value) / Fraction(self.den.value)

    def __str__(self) -> str:
        if self.den.is_one():
            return str(self.num)
        return f"{self.num}/{self.den}"


def _check_same_sigma(a: object, b: object) -> None:
    if a.sigma != b.sigma:
        if a.sigma.ring != b.sigma.ring:
            raise RingMismatchError(a.sigma.ring, b.sigma.ring)
        raise SigmaMismatchError(a.sigma, b.sigma)


def ore_op(op: str, a: OreFraction, b: OreFraction) -> Union[OreFraction, bool]:
    """add, mul or eq on Ore fractions over a shared sigma."""
    _check_same_sigma(a, b)
    if op == "add":
        return OreFraction(a.sigma, a.num * b.den + b.num * a.den, a.den * b.den)
    if op == "mul":
        return OreFraction(a.sigma, a.num * b.num, a.den * b.den)
    if op == "eq":
        return a.num * b.den == b.num * a.den
    raise ValueError(f"Unknown Ore operation: {op}")


def ore_neg(a: OreFraction) -> OreFraction:
    return OreFraction(a.sigma, -a.num, a.den)


def ore_invert(a: OreFraction) -> OreFraction:
    """s/r for r/s, defined when r lies in the saturation of sigma."""
    if not a.sigma.contains(a.num):
        raise NonUnitError(a, a.sigma.localized_ring())
    return OreFraction(a.sigma, a.den, a.num)


# =============================================================================
# Cohn triples
# =============================================================================


@dataclass(frozen=True)
class CohnTriple:
    """(f, s, g) with f 1xn, s nxn, g nx1, standing for f s^-1 g. n = 0 is zero."""

    sigma: SigmaSet
    f: Matrix
    s: Matrix
    g: Matrix

    def __post_init__(self):
        ring = self.sigma.ring
        for part in (self.f, self.s, self.g):
            if part.ring != ring:
                raise RingMismatchError(ring, part.ring)
        n = self.s.rows
        if not self.s.is_square:
            raise ShapeMismatchError("triple s", self.s.shape, (n, n))
        if self.f.shape != (1, n):
            raise ShapeMismatchError("triple f", self.f.shape, (1, n))
        if self.g.shape != (n, 1):
            raise ShapeMismatchError("triple g", self.g.shape, (n, 1))

    @property
    def size(self) -> int:
        return self.s.rows

    @property
    def ring(self) -> RingDescriptor:
        return self.sigma.ring

    @classmethod
    def zero(cls, sigma: SigmaSet) -> CohnTriple:
        ring = sigma.ring
        return cls(sigma, Matrix.zeros(ring, 1, 0), Matrix.zeros(ring, 0, 0), Matrix.zeros(ring, 0, 1))

    def validate(self) -> Union[CertifiedInvertible, Rejected]:
        return sigma_validate(self.sigma, self.s)

    def check(self) -> CohnTriple:
        """Return self, or raise SigmaMembershipError if s is not inverted."""
        result = self.validate()
        if not result.accepted:
            raise SigmaMembershipError(self.s, self.sigma, result.reason)
        return self

    def to_dict(self) -> dict:
        return {"f": self.f.to_strings(), "s": self.s.to_strings(), "g": self.g.to_strings()}


def triple_from_scalar(sigma: SigmaSet, r: Union[Scalar, int, str]) -> CohnTriple:
    ring = sigma.ring
    r = ring.scalar(r)
    if r.is_zero():
        return CohnTriple.zero(sigma)
    one = Matrix.identity(ring, 1)
    return CohnTriple(sigma, Matrix.from_rows(ring, [[r]]), one, one)


def triple_add(a: CohnTriple, b: CohnTriple) -> CohnTriple:
    _check_same_sigma(a, b)
    return CohnTriple(a.sigma, a.f.hstack(b.f), direct_sum(a.s, b.s), a.g.vstack(b.g))


def triple_mul(a: CohnTriple, b: CohnTriple) -> CohnTriple:
    """[f 0] [[s, -g f'], [0, s']]^-1 [0; g']."""
    _check_same_sigma(a, b)
    if a.size == 0 or b.size == 0:
        return CohnTriple.zero(a.sigma)
    ring = a.ring
    n, m = a.size, b.size
    s = block_matrix(ring, [
        [a.s, -(a.g @ b.f)],
        [Matrix.zeros(ring, m, n), b.s],
    ])
    f = a.f.hstack(Matrix.zeros(ring, 1, m))
    g = Matrix.zeros(ring, n, 1).vstack(b.g)
    return CohnTriple(a.sigma, f, s, g)


def triple_neg(a: CohnTriple) -> CohnTriple:
    return CohnTriple(a.sigma, -a.f, a.s, a.g)


def triple_op(op: str, a: CohnTriple, b: Optional[CohnTriple] = None) -> CohnTriple:
    if op == "add":
        return triple_add(a, b)
    if op == "mul":
        return triple_mul(a, b)
    if op == "neg":
        return triple_neg(a)
    if op == "invert":
        return triple_invert(a)
    raise ValueError(f"Unknown triple operation: {op}")


def triple_invert(a: CohnTriple) -> CohnTriple:
    """
    Inverse of f s^-1 g through the bordered matrix [[s, g], [f, 0]].

    The bordered matrix is inverted by sigma exactly when f s^-1 g is a unit
    of the localization (for the augmentation set: when its constant term
    is nonzero).

    Raises:
        NonUnitError: If the element is not invertible.
    """
    ring = a.ring
    if a.size == 0:
        raise NonUnitError("0", ring)
    bordered = block_matrix(ring, [[a.s, a.g], [a.f, Matrix.zeros(ring, 1, 1)]])
    if not sigma_validate(a.sigma, bordered).accepted:
        raise NonUnitError(a.to_dict(), ring)
    n = a.size
    f = Matrix.zeros(ring, 1, n).hstack(Matrix.from_rows(ring, [[-1]]))
    g = Matrix.zeros(ring, n, 1).vstack(Matrix.identity(ring, 1))
    return CohnTriple(a.sigma, f, bordered, g)


def triple_eval_ore(t: CohnTriple) -> OreFraction:
    """
    The Ore fraction f s^-1 g over a central sigma.

    Raises:
        UnsupportedBackendError: If sigma is not central.
        SingularMatrixError: If s is singular over the fraction field.
        SigmaMembershipError: If the resulting denominator is not in sigma.
    """
    sigma = t.sigma
    if not sigma.is_central:
        raise UnsupportedBackendError("triple_eval_ore", t.ring)
    if t.size == 0:
        return OreFraction(sigma, t.ring.zero(), t.ring.one())
    fraction_field = t.ring if t.ring.is_field else RingDescriptor.rationals()
    try:
        solved = solve_field(t.s.change_ring(fraction_field), t.g.change_ring(fraction_field))
    except NoSolutionError:
        raise SingularMatrixError(t.size)
    if solved.rank < t.size:
        raise SingularMatrixError(t.size)
    value = (t.f.change_ring(fraction_field) @ solved.solution)[0, 0]
    return OreFraction.from_value(sigma, value)


# =============================================================================
# Rational series over the free algebra
# =============================================================================


@dataclass(frozen=True)
class LinearRepresentation:
    """
    A weighted automaton (initial, letters, final) over a field.

    The coefficient of the word x_{a1}...x_{ak} is
    initial @ letters[a1-1] @ ... @ letters[ak-1] @ final.
    """

    field: RingDescriptor
    alphabet: int
    dim: int
    initial: Matrix
    letters: tuple[Matrix, ...]
    final: Matrix

    def __post_init__(self):
        if len(self.letters) != self.alphabet:
            raise ShapeMismatchError("letters", (len(self.letters), 0), (self.alphabet, 0))
        if self.initial.shape != (1, self.dim):
            raise ShapeMismatchError("initial", self.initial.shape, (1, self.dim))
        if self.final.shape != (self.dim, 1):
            raise ShapeMismatchError("final", self.final.shape, (self.dim, 1))
        for letter in self.letters:
            if letter.shape != (self.dim, self.dim):
                raise ShapeMismatchError("letter", letter.shape, (self.dim, self.dim))

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "initial": self.initial.to_strings(),
            "letters": [m.to_strings() for m in self.letters],
            "final": self.final.to_strings(),
        }


@dataclass
class _AutomatonBuilder:
    base: RingDescriptor
    states: int
    edges: dict[tuple[int, int, int], Scalar] = field(default_factory=dict)

    def fresh(self) -> int:
        self.states += 1
        return self.states - 1

    def add_edge(self, letter: int, source: int, target: int, weight: Scalar) -> None:
        key = (letter, source, target)
        self.edges[key] = self.edges[key] + weight if key in self.edges else weight

    def add_chain(self, source: int, target: int, word: Word, weight: Scalar) -> None:
        """Path reading word from source to target, weight on the first edge."""
        current = source
        one = self.base.one()
        for position, letter in enumerate(word):
            last = position == len(word) - 1
            nxt = target if last else self.fresh()
            self.add_edge(letter, current, nxt, weight if position == 0 else one)
            current = nxt


def _lift_constants(m: Matrix, ring: RingDescriptor) -> Matrix:
    return m.change_ring(ring)


def triple_to_linrep(t: CohnTriple) -> LinearRepresentation:
    """
    Realize f s^-1 g over the free algebra as a linear representation.

    With s0 the constant part of s, A = I - s0^-1 s has no constant terms and
    f s^-1 g = f (sum_m A^m) h for h = s0^-1 g. States are: a start state,
    the n core states, an end state and one fresh state per inner letter of
    each monomial of f, A and h.

    Raises:
        UnsupportedBackendError: If the backend is not a free algebra.
        SigmaMembershipError: If the constant part of s is singular.
    """
    ring = t.ring
    if not ring.is_free_algebra:
        raise UnsupportedBackendError("triple_to_linrep", ring)
    k = ring.base
    n = t.size
    try:
        s0_inv = inverse_field(augment_matrix(t.s))
    except SingularMatrixError:
        raise SigmaMembershipError(t.s, t.sigma, "augmentation is singular")
    s0_inv_lifted = _lift_constants(s0_inv, ring)
    a = Matrix.identity(ring, n) - s0_inv_lifted @ t.s
    h = s0_inv_lifted @ t.g

    start, end = 0, n + 1
    core = list(range(1, n + 1))
    builder = _AutomatonBuilder(k, states=n + 2)
    initial_weights: dict[int, Scalar] = {start: k.one()}
    final_weights: dict[int, Scalar] = {end: k.one()}

    for i in range(n):
        for word, coeff in t.f[0, i].terms:
            if word:
                builder.add_chain(start, core[i], word, coeff)
            else:
                initial_weights[core[i]] = initial_weights.get(core[i], k.zero()) + coeff
        for j in range(n):
            for word, coeff in a[i, j].terms:
                builder.add_chain(core[i], core[j], word, coeff)
        for word, coeff in h[i, 0].terms:
            if word:
                builder.add_chain(core[i], end, word, coeff)
            else:
                final_weights[core[i]] = final_weights.get(core[i], k.zero()) + coeff

    dim = builder.states
    letters = []
    for letter in range(1, ring.num_vars + 1):
        rows = [[k.zero()] * dim for _ in range(dim)]
        for (x, p, q), weight in builder.edges.items():
            if x == letter:
                rows[p][q] = weight
        letters.append(Matrix.from_rows(k, rows, cols=dim))
    initial = Matrix.from_rows(k, [[initial_weights.get(q, k.zero()) for q in range(dim)]], cols=dim)
    final = Matrix.from_rows(k, [[final_weights.get(q, k.zero())] for q in range(dim)], cols=1)
    logger.debug("Triple of size %d realized with %d states", n, dim)
    return LinearRepresentation(k, ring.num_vars, dim, initial, tuple(letters), final)


def linrep_coefficient(rep: LinearRepresentation, word: Sequence[int]) -> Scalar:
    """Coefficient of a word given as 1-based letter indices."""
    vector = rep.initial
    for letter in word:
        if not 1 <= letter <= rep.alphabet:
            raise LetterOutOfRangeError(letter, rep.alphabet)
        vector = vector @ rep.letters[letter - 1]
    return (vector @ rep.final)[0, 0]


def reachable_basis(rep: LinearRepresentation) -> list[list[Scalar]]:
    """
    Echelon basis of span{initial @ letters(w)} by forward closure.

    Each basis vector is reduced against the earlier ones, so a single
    pass in insertion order reduces any candidate.
    """
    basis: list[tuple[int, list[Scalar]]] = []

    def reduce(vector: list[Scalar]) -> Optional[tuple[int, list[Scalar]]]:
        for pivot, b in basis:
            if not vector[pivot].is_zero():
                c = vector[pivot]
                vector = [x - c * y for x, y in zip(vector, b)]
        pivot = next((i for i, x in enumerate(vector) if not x.is_zero()), None)
        if pivot is None:
            return None
        inv = vector[pivot].invert()
        return pivot, [inv * x for x in vector]

    queue = []
    first = reduce(list(rep.initial.entries[0]))
    if first is not None:
        basis.append(first)
        queue.append(first[1])
    while queue:
        vector = queue.pop(0)
        row = Matrix.from_rows(rep.field, [vector], cols=rep.dim)
        for letter in rep.letters:
            reduced = reduce(list((row @ letter).entries[0]))
            if reduced is not None:
                basis.append(reduced)
                queue.append(reduced[1])
    return [b for _, b in basis]


def linrep_is_zero(rep: LinearRepresentation) -> bool:
    """True iff every coefficient of the represented series vanishes."""
    for vector in reachable_basis(rep):
        row = Matrix.from_rows(rep.field, [vector], cols=rep.dim)
        if not (row @ rep.final).is_zero():
            return False
    return True


def triple_eq(a: CohnTriple, b: CohnTriple) -> bool:
    """
    Decide equality of two triples.

    Raises:
        UnsupportedBackendError: If sigma is neither central nor the
            augmentation set of a free algebra.
    """
    _check_same_sigma(a, b)
    if a.sigma.is_central:
        return ore_op("eq", triple_eval_ore(a), triple_eval_ore(b))
    if a.ring.is_free_algebra:
        return linrep_is_zero(triple_to_linrep(triple_add(a, triple_neg(b))))
    raise UnsupportedBackendError("triple_eq", a.ring)


def _truncate(m: Matrix, degree: int) -> Matrix:
    return m.map(lambda e: e.truncate(degree))


def series_inverse(s: Matrix, degree: int) -> Matrix:
    """
    Inverse of s modulo words longer than degree, (sum_{m<=degree} A^m) s0^-1.

    Raises:
        SingularMatrixError: If the constant part of s is singular.
    """
    ring = s.ring
    if not ring.is_free_algebra:
        raise UnsupportedBackendError("series_inverse", ring)
    s0_inv = _lift_constants(inverse_field(augment_matrix(s)), ring)
    n = s.rows
    a = Matrix.identity(ring, n) - s0_inv @ s
    power = Matrix.identity(ring, n)
    total = Matrix.identity(ring, n)
    for _ in range(degree):
        power = _truncate(power @ a, degree)
        total = total + power
    return _truncate(total @ s0_inv, degree)


def series_expand(t: CohnTriple, degree: int) -> Scalar:
    """f s^-1 g with all words longer than degree dropped."""
    if t.size == 0:
        return t.ring.zero()
    inverse = series_inverse(t.s, degree)
    return _truncate(_truncate(t.f @ inverse, degree) @ t.g, degree)[0, 0]
