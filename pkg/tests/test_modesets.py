from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resonant_nls.errors import StructuralError
from resonant_nls.modesets import (ModeSet, construct_lemma5, construct_lemma6, lemma6_window,
                                   parse_modeset, validate_modeset)


def _oracle(s):
    """Integer-only feasibility and nondegeneracy, scanning every candidate k."""
    n, M = len(s), sum(m * m for m in s)
    feasible = all((4 * n - 1) * m * m < 4 * M for m in s)
    hits = [k for k in range(1, 2 * max(s) + 2) if (4 * n - 1) * k * k == 4 * M and k not in s]
    return feasible, not hits


def test_pair_78_amplitudes():
    rep = validate_modeset((7, 8))
    assert rep.valid
    assert rep.amplitude_squares == {7: Fraction(109, 7), 8: Fraction(4, 7)}


def test_1_100_infeasible():
    rep = validate_modeset((1, 100))
    assert not rep.feasible
    assert rep.amplitude_squares[100] == Fraction(40004, 7) - 10000


def test_singleton_three_is_valid():
    rep = validate_modeset((3,))
    assert rep.valid
    assert rep.four_norm_sq == 12
    assert rep.nondegeneracy_kind == "non-square"


def test_singleton_two_nondegenerate_by_integrality():
    # 4 * 4 / 3 is not an integer
    assert validate_modeset((2,)).nondegeneracy_kind == "non-integer"


def test_singleton_six_has_integer_non_square_norm():
    # 4||a||^2 = 4 m0^2 / 3 is an integer exactly when 3 | m0
    rep = validate_modeset((6,))
    assert rep.four_norm_sq == 48 and rep.valid


@given(st.lists(st.integers(1, 60), min_size=1, max_size=5, unique=True).map(sorted))
@settings(max_examples=200, deadline=None)
def test_validate_matches_integer_oracle(s):
    rep = validate_modeset(s)
    feasible, nondeg = _oracle(s)
    assert rep.feasible == feasible
    assert rep.nondegenerate == nondeg


@pytest.mark.parametrize("bad", [(), (0, 3), (3, 3), (5, 2), (-1,)])
def test_structural_errors(bad):
    with pytest.raises(StructuralError):
        validate_modeset(bad)


def test_construct_lemma5_n2_is_7_8():
    s, j = construct_lemma5(2)
    assert s.m_plus == (7, 8) and j == 0


def test_construct_lemma5_n3_squares():
    s, _ = construct_lemma5(3)
    assert s.m_plus == (22, 23, 24)
    assert s.report().amplitude_squares == {22: Fraction(1032, 11), 23: Fraction(537, 11),
                                            24: Fraction(20, 11)}


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_construct_lemma5_outputs_are_consecutive_and_valid(n):
    s, _ = construct_lemma5(n)
    assert s.report().valid
    assert list(s.m_plus) == list(range(s.m_plus[0], s.m_plus[0] + n))
    assert (4 * s.weight) % (4 * n - 1) != 0


GAPS = [(2, (1,)), (2, (3,)), (3, (1, 2)), (3, (1, 3)), (3, (2, 5)), (4, (1, 2, 4))]


@pytest.mark.parametrize("n,gaps", GAPS)
def test_construct_lemma6_valid_minimal_and_packet_shaped(n, gaps):
    s = construct_lemma6(n, gaps)
    top = s.m_plus[-1]
    assert s.report().valid
    assert set(s.m_plus) == {top} | {top - g for g in gaps}
    assert s.m_plus[-1] - s.m_plus[0] == max(gaps)
    # one step down the same shape fails, unless that runs out of positive modes
    lower = tuple(sorted(top - 1 - g for g in gaps + (0,)))
    if lower[0] >= 1:
        assert not validate_modeset(lower).valid


@pytest.mark.parametrize("n,gaps", GAPS)
def test_construct_lemma6_window_is_ordered(n, gaps):
    lo, hi = lemma6_window(n, gaps)
    assert lo <= hi
    s = construct_lemma6(n, gaps)
    assert s.m_plus[-1] <= hi


@pytest.mark.parametrize("gaps", [(0,), (2, 1), (1, 1), (1,)])
def test_construct_lemma6_rejects_bad_gaps(gaps):
    with pytest.raises(StructuralError):
        construct_lemma6(3, gaps)


def test_construct_lemma5_needs_two_modes():
    with pytest.raises(StructuralError):
        construct_lemma5(1)


def test_modeset_rejects_invalid_sets():
    with pytest.raises(StructuralError):
        ModeSet((1, 100))


def test_parse_modeset_forms():
    assert parse_modeset([7, 8]).m_plus == (7, 8)
    assert parse_modeset({"m_plus": [7, 8]}).m_plus == (7, 8)
    assert parse_modeset(3).m_plus == (3,)
    with pytest.raises(StructuralError):
        parse_modeset("7,8")
    with pytest.raises(StructuralError):
        parse_modeset({"modes": [7]})


def test_report_serializes_rationals_as_strings():
    d = ModeSet((7, 8)).report().to_dict()
    assert d["amplitude_squares"] == {"7": "109/7", "8": "4/7"}
    assert d["M"] == 113 and d["N"] == 2
