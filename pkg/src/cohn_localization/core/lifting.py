"""
Lifting complexes from the localization back to the ground ring.

lift_by_clearing solves the lifting problem for central (Ore) sigma by
scaling each differential with a common denominator. shorten_left assembles
the shortened complex from explicit data and reports whether it still
localizes to the input. toda_obstruction reports the obstruction for
four-term complexes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import lcm
from typing import Optional, Union

from .complexes import (
    ChainComplex,
    ChainMap,
    ComplexValidationError,
    GroupDescription,
    TripleComplex,
    betti_numbers,
    homology,
    is_quasi_iso,
    localize_complex,
    require_valid,
)
from .localize import SigmaMismatchError, SigmaSet
from .matrix import Matrix, ShapeMismatchError, block_matrix
from .rings import (
    DomainError,
    RingDescriptor,
    RingMismatchError,
    Scalar,
    UnsupportedBackendError,
)


logger = logging.getLogger(__name__)


class NonCentralSigmaError(DomainError):
    """Raised when clearing denominators is attempted for a non-central sigma."""

    kind = "non-central-sigma"

    def __init__(self, sigma: SigmaSet):
        self.sigma = sigma
        super().__init__(f"Clearing denominators needs a central sigma, got {sigma}")


class LengthError(DomainError):
    """Raised when a complex has the wrong number of terms."""

    kind = "length"

    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(f"Expected a complex with {expected} terms, got {actual}")


class LiftStatus(str, Enum):
    VERIFIED = "verified"
    UNVERIFIED = "unverified"


class ObstructionStatus(str, Enum):
    ZERO_WITH_REASON = "zero-with-reason"


@dataclass
class LiftResult:
    """A complex over R together with the evidence that it lifts the input."""

    lifted: ChainComplex
    status: LiftStatus
    denominators: list[Scalar] = field(default_factory=list)
    units: list[Fraction] = field(default_factory=list)
    report: str = ""

    @property
    def verified(self) -> bool:
        return self.status is LiftStatus.VERIFIED

    def to_dict(self) -> dict:
        data = {
            "status": self.status.value,
            "lifted": self.lifted.to_dict(),
            "report": self.report,
        }
        if self.denominators:
            data["denominators"] = [str(c) for c in self.denominators]
            data["units"] = [str(e) for e in self.units]
        return data


@dataclass
class ObstructionReport:
    target_group: GroupDescription
    class_status: ObstructionStatus
    reason: str

    def to_dict(self) -> dict:
        data = {
            "target_group": self.target_group.to_dict(),
            "class_status": self.class_status.value,
            "reason": self.reason,
        }
        if self.class_status is ObstructionStatus.ZERO_WITH_REASON:
            data["theta"] = "0"
        return data


# =============================================================================
# Clearing denominators
# =============================================================================


def _common_denominator(d: Matrix, sigma: SigmaSet) -> int:
    """Least c in sigma such that c * d has entries in the ground ring."""
    ring = sigma.ring
    if ring.is_field:
        return 1
    den = 1
    for row in d.entries:
        for e in row:
            den = lcm(den, Fraction(e.value).denominator)
    for q in ring.primes:
        while den % q == 0:
            den //= q
    if sigma.all_nonzero or den == 1:
        return den
    product = 1
    for gen in sigma.generators:
        product *= abs(Fraction(gen.value).numerator)
    c = 1
    while c % den:
        c *= product
    return c


def lift_by_clearing(d: ChainComplex, sigma: SigmaSet) -> LiftResult:
    """
    Lift a complex over sigma^-1 R to R by clearing denominators.

    The lifted differentials are d'_i = c_i d_i with c_i in sigma. The
    scalars e_0 = 1, e_{i+1} = c_i e_i satisfy d_i e_{i+1} = e_i d'_i,
    so they form an isomorphism sigma^-1 C' -> D.

    Raises:
        NonCentralSigmaError: If sigma is not central.
        RingMismatchError: If D is not a complex over sigma^-1 R.
    """
    if not sigma.is_central:
        raise NonCentralSigmaError(sigma)
    localized = sigma.localized_ring()
    if d.ring != localized:
        raise RingMismatchError(localized, d.ring)
    require_valid(d)
    ring = sigma.ring

    denominators: list[Scalar] = []
    lifted_diffs: list[Matrix] = []
    units = [Fraction(1)]
    for diff in d.diffs:
        c = _common_denominator(diff, sigma)
        denominators.append(ring.scalar(c))
        lifted_diffs.append(diff.map(lambda e, c=c: ring.scalar(e.value * c), ring))
        units.append(units[-1] * c)
    lifted = ChainComplex(ring, d.lo, d.ranks, tuple(lifted_diffs))

    for i, (diff, lifted_diff) in enumerate(zip(d.diffs, lifted_diffs)):
        left = diff.scale(localized.scalar(units[i + 1]))
        right = lifted_diff.change_ring(localized).scale(localized.scalar(units[i]))
        if left != right:
            return LiftResult(lifted, LiftStatus.UNVERIFIED, denominators, units, f"witness fails at differential {i}")

    status, report = LiftStatus.VERIFIED, "diagonal units give an isomorphism"
    if localized.is_field and not verify_lift(lifted, d, sigma):
        status, report = LiftStatus.UNVERIFIED, "Betti numbers differ"
    logger.info("Lifted complex with denominators %s: %s", [str(c) for c in denominators], status.value)
    return LiftResult(lifted, status, denominators, units, report)


def _require_same_complex(role: str, actual: ChainComplex, expected: ChainComplex) -> None:
    if actual.ring != expected.ring:
        raise RingMismatchError(expected.ring, actual.ring)
    for n in range(min(actual.lo, expected.lo), max(actual.hi, expected.hi) + 2):
        a, e = actual.differential(n), expected.differential(n)
        if a.shape != e.shape or a != e:
            raise ShapeMismatchError(f"lift map {role} at degree {n}", a.shape, e.shape)


def verify_lift(
    c: ChainComplex,
    d: ChainComplex,
    sigma: SigmaSet,
    phi: Optional[ChainMap] = None,
) -> bool:
    """
    Check that sigma^-1 C is chain equivalent to D.

    With phi (a map sigma^-1 C -> D) the cone of phi must be acyclic;
    without it, Betti numbers are compared, which suffices over a field.

    Raises:
        UnsupportedBackendError: If sigma^-1 R is not a field.
        ShapeMismatchError: If phi does not run from sigma^-1 C to D.
    """
    localized = localize_complex(c, sigma)
    if not isinstance(localized, ChainComplex) or not localized.ring.is_field:
        raise UnsupportedBackendError("verify_lift", sigma.ring)
    if phi is not None:
        _require_same_complex("source", phi.source, localized)
        _require_same_complex("target", phi.target, d)
        return is_quasi_iso(phi)
    if d.ring != localized.ring:
        raise RingMismatchError(localized.ring, d.ring)
    return betti_numbers(localized) == betti_numbers(d)


def minimal_model_field(d: ChainComplex) -> ChainComplex:
    """Zero-differential complex with ranks equal to the Betti numbers of D."""
    if not d.ring.is_field:
        raise UnsupportedBackendError("minimal_model_field", d.ring)
    betti = homology(d).betti()
    if not any(betti.values()):
        return ChainComplex.zero(d.ring)
    ranks = tuple(betti[n] for n in d.degrees)
    diffs = tuple(Matrix.zeros(d.ring, ranks[i], ranks[i + 1]) for i in range(len(ranks) - 1))
    return ChainComplex(d.ring, d.lo, ranks, diffs)


# =============================================================================
# Shortening
# =============================================================================


def _localized_invariants(c: ChainComplex, sigma: SigmaSet) -> dict[int, GroupDescription]:
    h = homology(localize_complex(c, sigma))
    return {n: g for n, g in h if not g.is_zero}


def shorten_left(
    c: ChainComplex,
    x: int,
    y: int,
    r: Matrix,
    g: Matrix,
    sigma: SigmaSet,
) -> LiftResult:
    """
    Replace the top of C by the data (X, Y, r, g).

    C is homological with support in [-n, 1] (cochain degrees negated).
    B_0 = C_0 + X, B_-1 = C_-1 + Y with d_0 = [[d^C_0, 0], [g, r]]; Y maps
    to zero in B_-2, lower degrees are copied and degree 1 is dropped. The
    result is verified when B and C have the same homology after
    localization; otherwise it is returned unverified with a report.

    Raises:
        ShapeMismatchError: If r is not Y x X or g is not Y x C_0.
        ComplexValidationError: If C has a nonzero module above degree 1, or
            the assembled complex has d^2 != 0.
    """
    ring = c.ring
    if c.ring != sigma.ring:
        raise RingMismatchError(sigma.ring, c.ring)
    if r.shape != (y, x):
        raise ShapeMismatchError("shorten r", r.shape, (y, x))
    if g.shape != (y, c.rank(0)):
        raise ShapeMismatchError("shorten g", g.shape, (y, c.rank(0)))
    require_valid(c)
    support = c.support()
    if support is not None and support[1] > 1:
        raise ComplexValidationError(support[1], "outside-support")

    lo = min(c.lo, -1)
    ranks = []
    for n in range(lo, 1):
        extra = x if n == 0 else y if n == -1 else 0
        ranks.append(c.rank(n) + extra)
    diffs = []
    for n in range(lo + 1, 1):
        if n == 0:
            diffs.append(block_matrix(ring, [
                [c.differential(0), Matrix.zeros(ring, c.rank(-1), x)],
                [g, r],
            ]))
        elif n == -1:
            diffs.append(c.differential(-1).hstack(Matrix.zeros(ring, c.rank(-2), y)))
        else:
            diffs.append(c.differential(n))
    b = require_valid(ChainComplex(ring, lo, tuple(ranks), tuple(diffs)))

    before = _localized_invariants(c, sigma)
    after = _localized_invariants(b, sigma)
    if before == after:
        return LiftResult(b, LiftStatus.VERIFIED, report="localized homology agrees")
    report = (
        f"localized homology differs: input {_describe(before)}, shortened {_describe(after)}; "
        "the data does not satisfy the shortening hypotheses"
    )
    logger.info("Shortening left unverified: %s", report)
    return LiftResult(b, LiftStatus.UNVERIFIED, report=report)


def _describe(groups: dict[int, GroupDescription]) -> str:
    if not groups:
        return "acyclic"
    return ", ".join(f"H_{n}={g}" for n, g in sorted(groups.items()))


# =============================================================================
# Toda obstruction
# =============================================================================


def global_dimension(ring: RingDescriptor) -> int:
    """Global dimension of a backend ring: fields 0, Z, Z[1/m] and free algebras 1."""
    return 0 if ring.is_field else 1


def _require_localized(d: Union[ChainComplex, TripleComplex], sigma: SigmaSet) -> None:
    if isinstance(d, TripleComplex):
        if d.sigma != sigma:
            raise SigmaMismatchError(sigma, d.sigma)
        return
    if not sigma.is_central:
        raise UnsupportedBackendError("toda_obstruction over a non-central sigma with ring entries", sigma.ring)
    expected = sigma.localized_ring()
    if d.ring != expected:
        raise RingMismatchError(expected, d.ring)


def toda_obstruction(d: Union[ChainComplex, TripleComplex], sigma: SigmaSet) -> ObstructionReport:
    """
    Obstruction to lifting a four-term complex x0 -> x1 -> x2 -> x3 over sigma^-1 R.

    The obstruction lives in a quotient of Tor_2^R((x0)^*, x3) of the
    localized end modules. Every backend ring has global dimension at most
    one, so Tor_2 vanishes, the class is zero and the complex lifts.

    Raises:
        LengthError: If D does not have exactly four terms.
        RingMismatchError: If a complex with ring entries is not over sigma^-1 R.
        SigmaMismatchError: If a triple complex is localized at another sigma.
    """
    _require_localized(d, sigma)
    terms = len(d.ranks)
    if terms != 4:
        raise LengthError(4, terms)
    if isinstance(d, ChainComplex):
        require_valid(d)
    else:
        failure = d.d_squared_failure()
        if failure is not None:
            raise ComplexValidationError(failure, "d2-nonzero")
    dimension = global_dimension(sigma.ring)
    reason = f"{sigma.ring} has global dimension {dimension} <= 1, so Tor_2 vanishes and the class is zero"
    logger.debug("Toda obstruction: %s", reason)
    return ObstructionReport(GroupDescription(), ObstructionStatus.ZERO_WITH_REASON, reason)
