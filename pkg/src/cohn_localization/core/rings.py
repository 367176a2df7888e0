"""Backend rings and exact scalar arithmetic."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional, Union

from sympy import factorint, isprime


logger = logging.getLogger(__name__)


class DomainError(Exception):
    """Base class for mathematical errors raised by the core modules."""

    kind = "domain"


class InvalidRingError(DomainError):
    """Raised when a ring descriptor violates its invariants."""

    kind = "invalid-ring"

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(f"Invalid ring: {reason}")


class RingMismatchError(DomainError):
    """Raised when operands live over different rings."""

    kind = "ring-mismatch"

    def __init__(self, left: RingDescriptor, right: RingDescriptor):
        self.left = left
        self.right = right
        super().__init__(f"Ring mismatch: {left} vs {right}")


class NonUnitError(DomainError):
    """Raised when inverting an element that is not a unit."""

    kind = "non-unit"

    def __init__(self, element: object, ring: RingDescriptor):
        self.element = element
        self.ring = ring
        super().__init__(f"Not a unit in {ring}: {element}")


class NotInRingError(DomainError):
    """Raised when a value cannot be represented in the target ring."""

    kind = "not-in-ring"

    def __init__(self, value: object, ring: RingDescriptor):
        self.value = value
        self.ring = ring
        super().__init__(f"{value} is not an element of {ring}")


class UnsupportedBackendError(DomainError):
    """Raised when an operation has no algorithm for the given backend."""

    kind = "unsupported-backend"

    def __init__(self, operation: str, ring: RingDescriptor):
        self.operation = operation
        self.ring = ring
        super().__init__(f"{operation} is not supported over {ring}")


class ElementSyntaxError(ValueError):
    """Raised when an element string does not follow the element grammar."""

    def __init__(self, text: str, position: int, reason: str):
        self.text = text
        self.position = position
        self.reason = reason
        super().__init__(f"Cannot parse element {text!r} at offset {position}: {reason}")


class RingKind(str, Enum):
    INTEGERS = "Z"
    RATIONALS = "Q"
    PRIME_FIELD = "Fp"
    LOCALIZED_INTEGERS = "Zloc"
    FREE_ALGEBRA = "free"


# A word is a tuple of 1-based letter indices; () is the empty word.
Word = tuple[int, ...]
RawValue = Union[int, Fraction]


def word_key(word: Word) -> tuple[int, Word]:
    """Length-then-lex monomial order."""
    return (len(word), word)


@dataclass(frozen=True)
class RingDescriptor:
    """
    One of the supported backend rings.

    Kinds:
        Z, Q, F_p, the localized integers Z[1/m] (given by the inverted
        primes) and the free associative algebra k<x1..x_mu> over Q or F_p.
    """

    kind: RingKind
    p: Optional[int] = None
    primes: tuple[int, ...] = ()
    base: Optional[RingDescriptor] = None
    num_vars: int = 0

    def __post_init__(self):
        if self.kind is RingKind.PRIME_FIELD:
            if self.p is None or not isprime(self.p):
                raise InvalidRingError(f"p={self.p} is not prime")
        elif self.kind is RingKind.LOCALIZED_INTEGERS:
            if not self.primes:
                raise InvalidRingError("Z[1/m] needs at least one inverted prime")
            if tuple(sorted(set(self.primes))) != self.primes:
                raise InvalidRingError("inverted primes must be sorted and distinct")
            for q in self.primes:
                if not isprime(q):
                    raise InvalidRingError(f"{q} is not prime")
        elif self.kind is RingKind.FREE_ALGEBRA:
            if self.base is None or self.base.kind not in (RingKind.RATIONALS, RingKind.PRIME_FIELD):
                raise InvalidRingError("free algebra base must be Q or F_p")
            if self.num_vars < 1:
                raise InvalidRingError("free algebra needs at least one variable")

    # -- constructors -------------------------------------------------------

    @classmethod
    def integers(cls) -> RingDescriptor:
        return cls(RingKind.INTEGERS)

    @classmethod
    def rationals(cls) -> RingDescriptor:
        return cls(RingKind.RATIONALS)

    @classmethod
    def prime_field(cls, p: int) -> RingDescriptor:
        return cls(RingKind.PRIME_FIELD, p=p)

    @classmethod
    def localized_integers(cls, primes: tuple[int, ...] | list[int]) -> RingDescriptor:
        return cls(RingKind.LOCALIZED_INTEGERS, primes=tuple(sorted(set(primes))))

    @classmethod
    def free_algebra(cls, base: RingDescriptor, num_vars: int) -> RingDescriptor:
        return cls(RingKind.FREE_ALGEBRA, base=base, num_vars=num_vars)

    # -- properties ---------------------------------------------------------

    @property
    def is_field(self) -> bool:
        return self.kind in (RingKind.RATIONALS, RingKind.PRIME_FIELD)

    @property
    def is_commutative(self) -> bool:
        return self.kind is not RingKind.FREE_ALGEBRA

    @property
    def is_free_algebra(self) -> bool:
        return self.kind is RingKind.FREE_ALGEBRA

    @property
    def is_integral(self) -> bool:
        """Z or Z[1/m]: principal ideal domains handled through SNF."""
        return self.kind in (RingKind.INTEGERS, RingKind.LOCALIZED_INTEGERS)

    # -- elements -----------------------------------------------------------

    def zero(self) -> Scalar:
        return self.scalar(0)

    def one(self) -> Scalar:
        return self.scalar(1)

    def scalar(self, value: Union[RawValue, str, Scalar]) -> Scalar:
        """Build the canonical element for an int, Fraction or element string."""
        if isinstance(value, Scalar):
            if value.ring != self:
                raise RingMismatchError(self, value.ring)
            return value
        if isinstance(value, str):
            return parse_element(self, value)
        if isinstance(value, bool) or not isinstance(value, (int, Fraction)):
            raise NotInRingError(value, self)

        kind = self.kind
        if kind is RingKind.INTEGERS:
            if isinstance(value, Fraction):
                if value.denominator != 1:
                    raise NotInRingError(value, self)
                value = value.numerator
            return Scalar(self, int(value))
        if kind is RingKind.RATIONALS:
            return Scalar(self, Fraction(value))
        if kind is RingKind.PRIME_FIELD:
            value = Fraction(value)
            if value.denominator % self.p == 0:
                raise NotInRingError(value, self)
            residue = value.numerator * pow(value.denominator, -1, self.p)
            return Scalar(self, residue % self.p)
        if kind is RingKind.LOCALIZED_INTEGERS:
            value = Fraction(value)
            if not _supported_on(value.denominator, self.primes):
                raise NotInRingError(value, self)
            return Scalar(self, value)
        return self.polynomial({(): self.base.scalar(value)})

    def variable(self, index: int) -> Scalar:
        """The generator x_index (1-based) of a free algebra."""
        if self.kind is not RingKind.FREE_ALGEBRA:
            raise UnsupportedBackendError("variables", self)
        if not 1 <= index <= self.num_vars:
            raise NotInRingError(f"x{index}", self)
        return self.polynomial({(index,): self.base.one()})

    def polynomial(self, terms: dict[Word, Scalar]) -> Scalar:
        """Canonical free-algebra element from a word -> coefficient mapping."""
        if self.kind is not RingKind.FREE_ALGEBRA:
            raise UnsupportedBackendError("polynomial", self)
        cleaned = []
        for word, coeff in terms.items():
            if coeff.ring != self.base:
                raise RingMismatchError(self.base, coeff.ring)
            if any(not 1 <= letter <= self.num_vars for letter in word):
                raise NotInRingError(word, self)
            if not coeff.is_zero():
                cleaned.append((tuple(word), coeff))
        cleaned.sort(key=lambda item: word_key(item[0]))
        return Scalar(self, tuple(cleaned))

    def embed(self, element: Scalar) -> Scalar:
        """Map an element of a subring (Z into Q, Z[1/m], F_p) into this ring."""
        if element.ring == self:
            return element
        if element.ring.kind in (RingKind.INTEGERS, RingKind.RATIONALS, RingKind.LOCALIZED_INTEGERS):
            return self.scalar(element.value)
        if self.kind is RingKind.FREE_ALGEBRA and element.ring == self.base:
            return self.polynomial({(): element})
        raise RingMismatchError(self, element.ring)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        data: dict = {"kind": self.kind.value}
        if self.kind is RingKind.PRIME_FIELD:
            data["p"] = self.p
        elif self.kind is RingKind.LOCALIZED_INTEGERS:
            data["primes"] = list(self.primes)
        elif self.kind is RingKind.FREE_ALGEBRA:
            data["base"] = self.base.to_dict()
            data["vars"] = self.num_vars
        return data

    @classmethod
    def from_dict(cls, data: dict) -> RingDescriptor:
        try:
            kind = RingKind(data["kind"])
        except (KeyError, ValueError, TypeError) as e:
            raise InvalidRingError(f"unknown ring kind in {data!r}") from e
        if kind is RingKind.PRIME_FIELD:
            return cls.prime_field(int(data.get("p", 0)))
        if kind is RingKind.LOCALIZED_INTEGERS:
            return cls.localized_integers([int(q) for q in data.get("primes", [])])
        if kind is RingKind.FREE_ALGEBRA:
            if "base" not in data:
                raise InvalidRingError("free algebra needs a base ring")
            return cls.free_algebra(cls.from_dict(data["base"]), int(data.get("vars", 0)))
        return cls(kind)

    def __str__(self) -> str:
        if self.kind is RingKind.PRIME_FIELD:
            return f"F_{self.p}"
        if self.kind is RingKind.LOCALIZED_INTEGERS:
            m = 1
            for q in self.primes:
                m *= q
            return f"Z[1/{m}]"
        if self.kind is RingKind.FREE_ALGEBRA:
            names = ",".join(f"x{i}" for i in range(1, self.num_vars + 1))
            return f"{self.base}<{names}>"
        return self.kind.value


def _supported_on(n: int, primes: tuple[int, ...]) -> bool:
    """True if every prime factor of n lies in primes."""
    n = abs(n)
    if n == 0:
        return False
    for q in primes:
        while n % q == 0:
            n //= q
    return n == 1


def prime_support(n: int) -> tuple[int, ...]:
    """Sorted prime factors of a nonzero integer."""
    return tuple(sorted(int(q) for q in factorint(abs(n))))


@dataclass(frozen=True)
class Scalar:
    """
    An exact element of a backend ring in canonical form.

    Values: int for Z and F_p (residue in [0, p)), reduced Fraction for Q and
    Z[1/m], and for the free algebra a tuple of (word, coefficient) pairs in
    length-then-lex order with nonzero base-field coefficients. Two scalars
    are equal as ring elements iff their representations are equal.
    """

    ring: RingDescriptor
    value: object

    # -- predicates ---------------------------------------------------------

    def is_zero(self) -> bool:
        if self.ring.kind is RingKind.FREE_ALGEBRA:
            return not self.value
        return self.value == 0

    def is_one(self) -> bool:
        return self == self.ring.one()

    def is_unit(self) -> bool:
        try:
            self.invert()
        except NonUnitError:
            return False
        return True

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other: object) -> Optional[Scalar]:
        if isinstance(other, Scalar):
            if other.ring != self.ring:
                raise RingMismatchError(self.ring, other.ring)
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.ring.scalar(other)
        return None

    def __add__(self, other: object) -> Scalar:
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if self.ring.kind is RingKind.FREE_ALGEBRA:
            terms = dict(self.value)
            for word, coeff in other.value:
                terms[word] = terms[word] + coeff if word in terms else coeff
            return self.ring.polynomial(terms)
        return self.ring.scalar(self.value + other.value)

    __radd__ = __add__

    def __neg__(self) -> Scalar:
        if self.ring.kind is RingKind.FREE_ALGEBRA:
            return Scalar(self.ring, tuple((word, -coeff) for word, coeff in self.value))
        return self.ring.scalar(-self.value)

    def __sub__(self, other: object) -> Scalar:
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other: object) -> Scalar:
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other - self

    def __mul__(self, other: object) -> Scalar:
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self._times(other)

    def __rmul__(self, other: object) -> Scalar:
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other._times(self)

    def _times(self, other: Scalar) -> Scalar:
        if self.ring.kind is RingKind.FREE_ALGEBRA:
            terms: dict[Word, Scalar] = {}
            for w1, c1 in self.value:
                for w2, c2 in other.value:
                    word = w1 + w2
                    prod = c1 * c2
                    terms[word] = terms[word] + prod if word in terms else prod
            return self.ring.polynomial(terms)
        return self.ring.scalar(self.value * other.value)

    def invert(self) -> Scalar:
        """Multiplicative inverse; raises NonUnitError when none exists."""
        kind = self.ring.kind
        if self.is_zero():
            raise NonUnitError(self, self.ring)
        if kind is RingKind.INTEGERS:
            if self.value not in (1, -1):
                raise NonUnitError(self, self.ring)
            return self
        if kind is RingKind.RATIONALS:
            return self.ring.scalar(1 / self.value)
        if kind is RingKind.PRIME_FIELD:
            return self.ring.scalar(pow(self.value, -1, self.ring.p))
        if kind is RingKind.LOCALIZED_INTEGERS:
            if not _supported_on(self.value.numerator, self.ring.primes):
                raise NonUnitError(self, self.ring)
            return self.ring.scalar(1 / self.value)
        if self.degree() != 0:
            raise NonUnitError(self, self.ring)
        return self.ring.polynomial({(): self.value[0][1].invert()})

    def involute(self) -> Scalar:
        """The anti-automorphism: identity on commutative rings, word reversal otherwise."""
        if self.ring.kind is not RingKind.FREE_ALGEBRA:
            return self
        return self.ring.polynomial({word[::-1]: coeff.involute() for word, coeff in self.value})

    # -- free algebra helpers ----------------------------------------------

    @property
    def terms(self) -> tuple[tuple[Word, Scalar], ...]:
        if self.ring.kind is not RingKind.FREE_ALGEBRA:
            raise UnsupportedBackendError("terms", self.ring)
        return self.value

    def coefficient(self, word: Word) -> Scalar:
        for w, coeff in self.terms:
            if w == tuple(word):
                return coeff
        return self.ring.base.zero()

    def augment(self) -> Scalar:
        """Constant term, the augmentation R -> k of the free algebra."""
        if self.ring.kind is not RingKind.FREE_ALGEBRA:
            raise UnsupportedBackendError("augment", self.ring)
        return self.coefficient(())

    def degree(self) -> int:
        """Maximal word length; -1 for zero."""
        if self.ring.kind is not RingKind.FREE_ALGEBRA:
            return -1 if self.is_zero() else 0
        return max((len(word) for word, _ in self.value), default=-1)

    def truncate(self, degree: int) -> Scalar:
        """Drop every monomial longer than degree."""
        if self.ring.kind is not RingKind.FREE_ALGEBRA:
            return self
        return Scalar(self.ring, tuple((w, c) for w, c in self.value if len(w) <= degree))

    def to_fraction(self) -> Fraction:
        if self.ring.kind not in (RingKind.INTEGERS, RingKind.RATIONALS, RingKind.LOCALIZED_INTEGERS):
            raise UnsupportedBackendError("to_fraction", self.ring)
        return Fraction(self.value)

    def __str__(self) -> str:
        return format_scalar(self)

    def __repr__(self) -> str:
        return f"Scalar({self.ring}, {format_scalar(self)!r})"


def scalar_op(op: str, a: Scalar, b: Optional[Scalar] = None) -> Scalar:
    """Dispatch one of add, mul, neg, involute."""
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "neg":
        return -a
    if op == "involute":
        return a.involute()
    raise ValueError(f"Unknown scalar operation: {op}")


def augment(a: Scalar) -> Scalar:
    return a.augment()


def scalar_invert(a: Scalar) -> Scalar:
    return a.invert()


# =============================================================================
# Element grammar
# =============================================================================

_ELEMENT_TOKEN_RE = re.compile(r"\s*(?:(?P<num>\d+)|(?P<var>x[1-9])|(?P<op>[-+*/]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    stripped_end = len(text.rstrip())
    while pos < stripped_end:
        match = _ELEMENT_TOKEN_RE.match(text, pos)
        if match is None or match.end() == pos:
            raise ElementSyntaxError(text, pos, "unexpected character")
        kind = match.lastgroup
        tokens.append((kind, match.group(kind), match.start(kind)))
        pos = match.end()
    return tokens


class _ElementParser:
    """Recursive-descent parser for `2*x1*x2 - x2 + 1`-style elements."""

    def __init__(self, ring: RingDescriptor, text: str):
        self.ring = ring
        self.text = text
        self.tokens = _tokenize(text)
        self.index = 0

    def _peek(self) -> Optional[tuple[str, str, int]]:
        return self.tokens[self.index] if self.index < len(self.tokens) else None

    def _fail(self, reason: str) -> ElementSyntaxError:
        token = self._peek()
        position = token[2] if token else len(self.text)
        return ElementSyntaxError(self.text, position, reason)

    def parse(self) -> dict[Word, Fraction]:
        if not self.tokens:
            raise self._fail("empty element")
        terms: dict[Word, Fraction] = {}
        sign = 1
        token = self._peek()
        if token[0] == "op" and token[1] in "+-":
            sign = -1 if token[1] == "-" else 1
            self.index += 1
        while True:
            coeff, word = self._term()
            terms[word] = terms.get(word, Fraction(0)) + sign * coeff
            token = self._peek()
            if token is None:
                return terms
            if token[0] != "op" or token[1] not in "+-":
                raise self._fail("expected '+', '-' or '*' (juxtaposition is not allowed)")
            sign = -1 if token[1] == "-" else 1
            self.index += 1

    def _term(self) -> tuple[Fraction, Word]:
        coeff = Fraction(1)
        word: list[int] = []
        while True:
            token = self._peek()
            if token is None:
                raise self._fail("expected a number or variable")
            kind, text, _ = token
            if kind == "num":
                self.index += 1
                value = Fraction(int(text))
                nxt = self._peek()
                if nxt is not None and nxt[0] == "op" and nxt[1] == "/":
                    self.index += 1
                    den = self._peek()
                    if den is None or den[0] != "num":
                        raise self._fail("expected a denominator")
                    if int(den[1]) == 0:
                        raise self._fail("zero denominator")
                    self.index += 1
                    value /= int(den[1])
                coeff *= value
            elif kind == "var":
                self.index += 1
                index = int(text[1:])
                if not self.ring.is_free_algebra:
                    raise ElementSyntaxError(self.text, token[2], f"variables are not allowed over {self.ring}")
                if index > self.ring.num_vars:
                    raise ElementSyntaxError(self.text, token[2], f"{text} exceeds {self.ring.num_vars} variables")
                word.append(index)
            else:
                raise self._fail("expected a number or variable")
            nxt = self._peek()
            if nxt is not None and nxt[0] == "op" and nxt[1] == "*":
                self.index += 1
                continue
            return coeff, tuple(word)


def parse_element(ring: RingDescriptor, text: str) -> Scalar:
    """Parse an element string under the given ring."""
    terms = _ElementParser(ring, text).parse()
    try:
        if ring.is_free_algebra:
            return ring.polynomial({word: ring.base.scalar(c) for word, c in terms.items()})
        total = sum(terms.values(), Fraction(0))
        return ring.scalar(total)
    except DomainError as e:
        raise ElementSyntaxError(text, 0, str(e)) from e


def format_scalar(a: Scalar) -> str:
    """Print an element in the grammar accepted by parse_element."""
    ring = a.ring
    if ring.kind is not RingKind.FREE_ALGEBRA:
        return str(a.value)
    if not a.value:
        return "0"
    parts = []
    for word, coeff in a.value:
        negative = coeff.ring.kind is RingKind.RATIONALS and coeff.value < 0
        magnitude = -coeff if negative else coeff
        monomial = "*".join(f"x{letter}" for letter in word)
        if not word:
            body = str(magnitude)
        elif magnitude.is_one():
            body = monomial
        else:
            body = f"{magnitude}*{monomial}"
        if not parts:
            parts.append(("-" if negative else "") + body)
        else:
            parts.append((" - " if negative else " + ") + body)
    return "".join(parts)
