import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resonant_nls.amplitudes import (LinearizationMatrix, build_linearization, det_D,
                                     invert_resonant_block, odd_extension, q_residual,
                                     q_residual_eps0, solve_amplitudes)
from resonant_nls.errors import StructuralError
from resonant_nls.modesets import ModeSet, construct_lemma5, construct_lemma6
from resonant_nls.surds import Surd
from resonant_nls.verify import fd_jacobian

SETS = [ModeSet.single(1), ModeSet.single(3), ModeSet((7, 8)), construct_lemma5(3)[0],
        construct_lemma6(3, (1, 3)), construct_lemma5(4)[0]]


def test_one_mode_alpha():
    av = solve_amplitudes(ModeSet.single(1))
    assert av.alpha == Fraction(1, 3)
    assert av.a[1] == pytest.approx(1 / math.sqrt(3))


def test_alpha_only_for_one_mode():
    with pytest.raises(StructuralError):
        solve_amplitudes(ModeSet((7, 8))).alpha


@pytest.mark.parametrize("s", SETS, ids=lambda s: str(s.m_plus))
def test_squares_follow_norm_identity(s):
    av = solve_amplitudes(s)
    n = s.n_count
    assert av.norm_sq == Fraction(s.weight, 4 * n - 1)
    for m in s.m_plus:
        assert av.squares[m] == 4 * av.norm_sq - m * m


@pytest.mark.parametrize("s", SETS, ids=lambda s: str(s.m_plus))
def test_q_residual_exactly_zero(s):
    res = q_residual_eps0(solve_amplitudes(s), exact=True)
    assert all(v.is_zero() for v in res.values())


@pytest.mark.parametrize("s", SETS, ids=lambda s: str(s.m_plus))
def test_q_residual_float_agrees_with_bruteforce(s):
    av = solve_amplitudes(s)
    fast = q_residual_eps0(av)
    slow = q_residual(dict(av.a))
    scale = max(m * m * av.a[m] for m in av.modes)
    for m in av.modes:
        assert abs(fast[m] - slow[m]) <= 1e-13 * scale


def test_q_residual_is_nonzero_off_solution():
    res = q_residual({7: 3.9, 8: 0.75})
    assert max(abs(v) for v in res.values()) > 1e-2


@given(st.integers(1, 8), st.floats(-10, 10), st.floats(-10, 10))
@settings(max_examples=150, deadline=None)
def test_det_D_matches_numpy(n, p, q):
    mat = np.full((n, n), q)
    np.fill_diagonal(mat, p)
    direct = np.linalg.det(mat)
    assert det_D(n, p, q) == pytest.approx(direct, rel=1e-9, abs=1e-9 * max(1.0, abs(p) + n * abs(q)) ** n)


def test_det_D_3_6_8():
    assert det_D(3, 6, 8) == 88


def test_det_D_rejects_empty():
    with pytest.raises(StructuralError):
        det_D(0, 1, 1)


def test_det_78_from_both_routes():
    lm = build_linearization(solve_amplitudes(ModeSet((7, 8))))
    target = -28 * Fraction(109, 7) * Fraction(4, 7)
    assert lm.det_exact == target == Fraction(-1744, 7)
    assert lm.det == pytest.approx(float(target), rel=1e-12)


@pytest.mark.parametrize("s", SETS, ids=lambda s: str(s.m_plus))
def test_block_entries_and_closed_form(s):
    av = solve_amplitudes(s)
    lm = build_linearization(av)
    for i, m in enumerate(av.modes):
        assert lm.block[i, i] == pytest.approx(-6 * float(av.squares[m]))
        for j, mp in enumerate(av.modes):
            if i != j:
                assert lm.block[i, j] == pytest.approx(-8 * av.a[m] * av.a[mp])
    assert lm.det == pytest.approx(float(lm.det_exact), rel=1e-10)


@pytest.mark.parametrize("s", SETS, ids=lambda s: str(s.m_plus))
def test_block_matches_finite_differences(s):
    av = solve_amplitudes(s)
    block = build_linearization(av).block
    err = np.max(np.abs(fd_jacobian(av) - block))
    assert err <= 1e-6 * max(1.0, np.max(np.abs(block)))


def test_tail_entries():
    lm = build_linearization(solve_amplitudes(ModeSet((7, 8))), m_tail_max=10)
    assert set(lm.tail) == {1, 2, 3, 4, 5, 6, 9, 10}
    assert lm.tail[9] == 81 - Fraction(452, 7)


def test_odd_extension_acts_on_odd_sources():
    av = solve_amplitudes(ModeSet((7, 8)))
    inv = invert_resonant_block(build_linearization(av))
    full, ext = odd_extension(inv, av.modes)
    assert full == (-8, -7, 7, 8)
    g_plus = np.array([0.3, -1.1])
    g = np.array([-g_plus[1], -g_plus[0], g_plus[0], g_plus[1]])
    v = ext @ g
    v_plus = inv @ g_plus
    np.testing.assert_allclose(v, [-v_plus[1], -v_plus[0], v_plus[0], v_plus[1]], atol=1e-14)


def test_singular_block_is_structural():
    lm = LinearizationMatrix((1, 2), np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(StructuralError):
        invert_resonant_block(lm)


def test_linearization_to_dict():
    d = build_linearization(solve_amplitudes(ModeSet((7, 8)))).to_dict()
    assert d["det_exact"] == "-1744/7"
    assert d["modes"] == [7, 8]


# ---------------------------------------------------------------- surds

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=20)
SQ = (Fraction(109, 7), Fraction(4, 7), Fraction(2))


@st.composite
def surds(draw):
    terms = {}
    for key in draw(st.lists(st.sets(st.integers(0, 2)).map(frozenset), max_size=4)):
        terms[key] = draw(rationals)
    return Surd(SQ, terms)


@given(surds(), surds(), surds())
@settings(max_examples=100, deadline=None)
def test_surd_ring_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert (a * b) * c == a * (b * c)
    assert a - a == 0


@given(surds(), surds())
@settings(max_examples=100, deadline=None)
def test_surd_float_is_homomorphic(a, b):
    assert float(a * b) == pytest.approx(float(a) * float(b), rel=1e-9, abs=1e-9)


def test_surd_generator_squares():
    r = Surd.generator(SQ, 0)
    assert r * r == Fraction(109, 7)
    assert not (r * r - Fraction(109, 7)).terms
