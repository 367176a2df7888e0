"""Tests for lifting, shortening and the Toda obstruction (core/lifting.py)."""

from __future__ import annotations

import random

import pytest

from cohn_localization.core.complexes import (
    ChainComplex,
    ChainMap,
    ComplexValidationError,
    betti_numbers,
    localize_complex,
    validate_chain_map,
)
from cohn_localization.core.lifting import (
    LengthError,
    LiftStatus,
    NonCentralSigmaError,
    ObstructionStatus,
    global_dimension,
    lift_by_clearing,
    minimal_model_field,
    shorten_left,
    toda_obstruction,
    verify_lift,
)
from cohn_localization.core.localize import SigmaMismatchError, SigmaSet
from cohn_localization.core.matrix import Matrix, ShapeMismatchError
from cohn_localization.core.rings import RingDescriptor, RingMismatchError, UnsupportedBackendError


def _complex(ring: RingDescriptor, lo: int, *diffs) -> ChainComplex:
    return ChainComplex.from_differentials(ring, lo, [Matrix.from_rows(ring, d) for d in diffs])


# =============================================================================
# Clearing Denominators
# =============================================================================


class TestLiftByClearing:
    """Central sigma: multiply each differential by an element of sigma."""

    def test_rational_half(self, q, sigma_nonzero):
        result = lift_by_clearing(_complex(q, 0, [["1/2"]]), sigma_nonzero)
        assert result.verified
        assert result.lifted.ring.kind.value == "Z"
        assert result.to_dict()["lifted"]["diffs"] == [[["1"]]]
        assert result.to_dict()["denominators"] == ["2"]
        assert result.to_dict()["units"] == ["1", "2"]

    def test_column_with_zero(self, q, sigma_nonzero):
        result = lift_by_clearing(_complex(q, 0, [["2/3"], ["0"]]), sigma_nonzero)
        assert result.lifted.diffs[0].to_ints() == [[2], [0]]
        assert [str(c) for c in result.denominators] == ["3"]

    def test_dyadic_denominator_is_a_power_of_two(self, sigma_two):
        ring = RingDescriptor.localized_integers([2])
        result = lift_by_clearing(_complex(ring, 0, [["1/4"]]), sigma_two)
        assert result.status is LiftStatus.VERIFIED
        assert [str(c) for c in result.denominators] == ["4"]
        assert result.lifted.diffs[0].to_ints() == [[1]]

    def test_two_generators(self, sigma_two_three):
        ring = RingDescriptor.localized_integers([2, 3])
        result = lift_by_clearing(_complex(ring, 0, [["1/6"]]), sigma_two_three)
        assert [str(c) for c in result.denominators] == ["6"]

    def test_integral_input_needs_no_clearing(self, q, sigma_nonzero):
        result = lift_by_clearing(_complex(q, 0, [["3"]], [["0"]]), sigma_nonzero)
        assert [str(c) for c in result.denominators] == ["1", "1"]
        assert result.verified

    def test_non_central_sigma_rejected(self, qx1, sigma_aug):
        with pytest.raises(NonCentralSigmaError):
            lift_by_clearing(ChainComplex.zero(qx1), sigma_aug)

    def test_complex_over_wrong_ring(self, z, sigma_two):
        with pytest.raises(RingMismatchError):
            lift_by_clearing(_complex(z, 0, [[1]]), sigma_two)


class TestVerifyLift:
    """Comparison of sigma^-1 C with D over a field."""

    def test_betti_numbers_match(self, z, q, sigma_nonzero):
        assert verify_lift(_complex(z, 0, [[1]]), _complex(q, 0, [["1/2"]]), sigma_nonzero)

    def test_degree_mismatch(self, z, q, sigma_nonzero):
        c = ChainComplex.concentrated(z, 0, 1)
        d = ChainComplex.concentrated(q, 1, 1)
        assert not verify_lift(c, d, sigma_nonzero)

    def test_zero_complexes(self, z, q, sigma_nonzero):
        assert verify_lift(ChainComplex.zero(z), ChainComplex.zero(q), sigma_nonzero)

    def test_needs_field_localization(self, z, sigma_two):
        ring = RingDescriptor.localized_integers([2])
        with pytest.raises(UnsupportedBackendError):
            verify_lift(ChainComplex.zero(z), ChainComplex.zero(ring), sigma_two)

    def test_map_from_localized_source(self, z, q, sigma_nonzero):
        c = _complex(z, 0, [[2]])
        d = _complex(q, 0, [["1"]])
        phi = ChainMap(localize_complex(c, sigma_nonzero), d, 0, (Matrix.identity(q, 1), Matrix.from_rows(q, [["2"]])))
        assert verify_lift(c, d, sigma_nonzero, phi)

    def test_map_with_wrong_source(self, z, q, sigma_nonzero):
        c = _complex(z, 0, [[2]])
        d = _complex(q, 0, [["1"]])
        with pytest.raises(ShapeMismatchError):
            verify_lift(c, d, sigma_nonzero, ChainMap.identity(d))

    def test_map_with_wrong_target(self, z, q, sigma_nonzero):
        c = _complex(z, 0, [[2]])
        d = ChainComplex.concentrated(q, 0, 1)
        localized = localize_complex(c, sigma_nonzero)
        with pytest.raises(ShapeMismatchError):
            verify_lift(c, d, sigma_nonzero, ChainMap.identity(localized))


class TestMinimalModel:
    """Zero-differential complexes with the same Betti numbers."""

    def test_acyclic_becomes_zero(self, q):
        assert minimal_model_field(_complex(q, 0, [["1"]])).is_zero()

    def test_zero_differential_is_fixed(self, q):
        c = _complex(q, 0, [["0"]])
        assert minimal_model_field(c).to_dict() == c.to_dict()

    def test_ranks_are_betti_numbers(self, q):
        model = minimal_model_field(_complex(q, 0, [["1", "0"]]))
        assert model.ranks == (0, 1)
        assert all(d.is_zero() for d in model.diffs)

    def test_integers_rejected(self, z):
        with pytest.raises(UnsupportedBackendError):
            minimal_model_field(_complex(z, 0, [[1]]))


# =============================================================================
# Shortening
# =============================================================================


class TestShortenLeft:
    """Assembling B from (X, Y, r, g)."""

    def test_unit_block_keeps_localized_homology(self, z, sigma_two):
        c = _complex(z, -1, [[3]])
        result = shorten_left(c, 1, 1, Matrix.from_rows(z, [[1]]), Matrix.from_rows(z, [[0]]), sigma_two)
        assert result.verified
        assert result.lifted.ranks == (2, 2)
        assert result.lifted.diffs[0].to_ints() == [[3, 0], [0, 1]]

    def test_empty_data_returns_input(self, z, sigma_nonzero):
        c = _complex(z, -1, [[3]])
        result = shorten_left(c, 0, 0, Matrix.zeros(z, 0, 0), Matrix.zeros(z, 0, 1), sigma_nonzero)
        assert result.verified
        assert result.lifted.to_dict() == c.to_dict()

    def test_bad_data_is_reported_unverified(self, z, sigma_nonzero):
        c = _complex(z, -1, [[3]])
        result = shorten_left(c, 1, 1, Matrix.from_rows(z, [[0]]), Matrix.from_rows(z, [[0]]), sigma_nonzero)
        assert result.status is LiftStatus.UNVERIFIED
        assert "localized homology differs" in result.report
        assert "input acyclic" in result.report

    def test_r_shape_checked(self, z, sigma_two):
        c = _complex(z, -1, [[3]])
        with pytest.raises(ShapeMismatchError):
            shorten_left(c, 1, 1, Matrix.zeros(z, 2, 1), Matrix.from_rows(z, [[0]]), sigma_two)

    def test_g_shape_checked(self, z, sigma_two):
        c = _complex(z, -1, [[3]])
        with pytest.raises(ShapeMismatchError):
            shorten_left(c, 1, 1, Matrix.from_rows(z, [[1]]), Matrix.zeros(z, 1, 2), sigma_two)

    def test_lower_degrees_are_copied(self, z, sigma_two):
        c = _complex(z, -2, [[1]], [[0]])
        result = shorten_left(c, 0, 1, Matrix.zeros(z, 1, 0), Matrix.from_rows(z, [[1]]), sigma_two)
        assert result.lifted.ranks == (1, 2, 1)
        assert result.lifted.diffs[0].to_ints() == [[1, 0]]
        assert result.lifted.diffs[1].to_ints() == [[0], [1]]

    def test_support_above_degree_one_rejected(self, z, sigma_two):
        c = _complex(z, 0, [[0]], [[0]])
        with pytest.raises(ComplexValidationError) as exc:
            shorten_left(c, 0, 0, Matrix.zeros(z, 0, 0), Matrix.zeros(z, 0, 1), sigma_two)
        assert exc.value.degree == 2
        assert exc.value.kind == "complex-validation"


# =============================================================================
# Toda Obstruction
# =============================================================================


class TestTodaObstruction:
    """Four-term complexes over rings of small global dimension."""

    def test_integers_report_zero(self, sigma_two):
        ring = RingDescriptor.localized_integers([2])
        d = _complex(ring, 0, [["0"]], [["0"]], [["1/2"]])
        report = toda_obstruction(d, sigma_two).to_dict()
        assert report["class_status"] == ObstructionStatus.ZERO_WITH_REASON.value
        assert report["theta"] == "0"
        assert "global dimension 1" in report["reason"]

    def test_free_algebra_triple_complex(self, qx1, sigma_aug):
        d = localize_complex(_complex(qx1, 0, [["0"]], [["0"]], [["0"]]), sigma_aug)
        report = toda_obstruction(d, sigma_aug)
        assert report.class_status is ObstructionStatus.ZERO_WITH_REASON

    def test_wrong_length(self, sigma_two):
        ring = RingDescriptor.localized_integers([2])
        with pytest.raises(LengthError):
            toda_obstruction(_complex(ring, 0, [["2"]]), sigma_two)

    def test_complex_over_ground_ring_rejected(self, z, sigma_two):
        with pytest.raises(RingMismatchError):
            toda_obstruction(_complex(z, 0, [[0]], [[0]], [[0]]), sigma_two)

    def test_triple_complex_localized_elsewhere(self, qx1, sigma_aug):
        d = localize_complex(_complex(qx1, 0, [["0"]], [["0"]], [["0"]]), sigma_aug)
        other = SigmaSet.matrix_set(qx1, [Matrix.from_rows(qx1, [["1 - x1"]])])
        with pytest.raises(SigmaMismatchError):
            toda_obstruction(d, other)

    def test_ring_entries_need_central_sigma(self, qx1, sigma_aug):
        with pytest.raises(UnsupportedBackendError):
            toda_obstruction(_complex(qx1, 0, [["0"]], [["0"]], [["0"]]), sigma_aug)

    def test_global_dimensions(self, z, q, f5, qx1):
        assert global_dimension(q) == 0
        assert global_dimension(f5) == 0
        assert global_dimension(z) == 1
        assert global_dimension(RingDescriptor.localized_integers([3])) == 1
        assert global_dimension(qx1) == 1


# =============================================================================
# Property Suites
# =============================================================================


def _random_rational_complex(rng: random.Random, q: RingDescriptor) -> ChainComplex:
    length = rng.randint(1, 3)
    ranks = [rng.randint(0, 3) for _ in range(length + 1)]
    diffs = []
    for i in range(length):
        rows, cols = ranks[i], ranks[i + 1]
        entries = [[f"{rng.randint(-4, 4)}/{rng.randint(1, 9)}" for _ in range(cols)] for _ in range(rows)]
        candidate = Matrix.from_rows(q, entries, cols=cols)
        if diffs and not (diffs[-1] @ candidate).is_zero():
            candidate = Matrix.zeros(q, rows, cols)
        diffs.append(candidate)
    return ChainComplex(q, 0, tuple(ranks), tuple(diffs))


def _random_integer_complex(rng: random.Random, z: RingDescriptor, lo: int, hi: int) -> ChainComplex:
    ranks = [rng.randint(0, 2) for _ in range(hi - lo + 1)]
    diffs = []
    for i in range(hi - lo):
        rows, cols = ranks[i], ranks[i + 1]
        candidate = Matrix.from_rows(z, [[rng.randint(-3, 3) for _ in range(cols)] for _ in range(rows)], cols=cols)
        if diffs and not (diffs[-1] @ candidate).is_zero():
            candidate = Matrix.zeros(z, rows, cols)
        diffs.append(candidate)
    return ChainComplex(z, lo, tuple(ranks), tuple(diffs))


class TestLiftRoundTrip:
    """Random complexes over Q lift and verify against themselves."""

    @pytest.mark.slow
    def test_random_induced_complexes(self, q, sigma_nonzero, rng):
        for _ in range(200):
            d = _random_rational_complex(rng, q)
            result = lift_by_clearing(d, sigma_nonzero)
            assert result.verified
            assert verify_lift(result.lifted, d, sigma_nonzero)

            units = [q.scalar(e) for e in result.units]
            for i, (diff, lifted_diff) in enumerate(zip(d.diffs, result.lifted.diffs)):
                assert diff.scale(units[i + 1]) == lifted_diff.change_ring(q).scale(units[i])

            source = localize_complex(result.lifted, sigma_nonzero)
            components = tuple(Matrix.identity(q, r).scale(units[i]) for i, r in enumerate(d.ranks))
            phi = validate_chain_map(ChainMap(source, d, d.lo, components))
            assert verify_lift(result.lifted, d, sigma_nonzero, phi)

    @pytest.mark.slow
    def test_minimal_models_keep_betti_numbers(self, q, rng):
        for _ in range(200):
            d = _random_rational_complex(rng, q)
            model = minimal_model_field(d)
            assert all(m.is_zero() for m in model.diffs)
            assert betti_numbers(model) == betti_numbers(d)

    @pytest.mark.slow
    def test_verified_shortenings_stay_in_range(self, z, sigma_nonzero, rng):
        verified = 0
        for _ in range(200):
            n = rng.randint(1, 2)
            c = _random_integer_complex(rng, z, -n, rng.randint(0, 1))
            k = rng.randint(0, 2)
            r = Matrix.diagonal(z, [rng.choice([-2, -1, 1, 3]) for _ in range(k)]) if k else Matrix.zeros(z, 0, 0)
            g = Matrix.from_rows(z, [[rng.randint(-3, 3) for _ in range(c.rank(0))] for _ in range(k)], cols=c.rank(0))
            result = shorten_left(c, k, k, r, g, sigma_nonzero)
            if not result.verified:
                continue
            verified += 1
            support = result.lifted.support()
            assert support is None or (support[0] >= -n and support[1] <= 0)
            assert betti_numbers(localize_complex(result.lifted, sigma_nonzero)) == betti_numbers(
                localize_complex(c, sigma_nonzero)
            )
        assert verified > 0
