import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resonant_nls.diophantine import (CountertermModel, DiophantineParams, ExcludedInterval,
                                      check_all, check_base, check_melnikov, default_n_max,
                                      excluded_mass_exponent, scan_epsilon, second_pairs)
from resonant_nls.errors import InsufficientData, StructuralError
from resonant_nls.lindstedt import FrequencyState
from resonant_nls.modesets import ModeSet
from resonant_nls.solver import frequency_iteration

P = DiophantineParams()


def _base_brute(eps, p, n_max):
    for n in range(p.base_n_min, n_max + 1):
        for m in range(1, 2 * n + 3):
            if m != n and abs((1 + eps) * n - m) < p.c * p.C0 * n ** -p.tau0:
                return (n, m)
    return None


def _first_brute(eps, fs, p, n_max):
    bad = []
    for n in range(1, n_max + 1):
        for m in range(1, math.isqrt(2 * n) + 3):
            if n != m * m and abs((1 + eps) * n - (m * m - fs.nu_at(m))) < p.C0 * n ** -p.tau:
                bad.append((n, m))
    return bad


def test_params_validation():
    for kwargs in ({"C0": 0.6}, {"tau0": 1.0}, {"tau": 2.5}, {"c": 1.0}, {"base_n_min": 0}):
        with pytest.raises(StructuralError):
            DiophantineParams(**kwargs)


def test_base_examples():
    res = check_base(0.01)
    assert not res.passed and res.witness == (100, 101)
    res = check_base(1 / 300)
    assert not res.passed and res.witness == (300, 301)
    assert check_base(0.00331234567).passed
    assert check_base(0.0).passed


def test_base_first_row_always_fails():
    # with c C0 = 1 the n = 1 row needs |eps - 1| >= 1
    p = DiophantineParams(base_n_min=1)
    for eps in (1e-4, 0.1, 0.5):
        assert check_base(eps, p, 10).witness == (1, 2)


@given(st.floats(1e-4, 0.2))
@settings(max_examples=60, deadline=None)
def test_base_matches_bruteforce(eps):
    res = check_base(eps, P, 60)
    assert res.witness == _base_brute(eps, P, 60)


@given(st.floats(1e-4, 0.2), st.floats(-0.05, 0.05))
@settings(max_examples=40, deadline=None)
def test_first_matches_bruteforce(eps, nu1):
    fs = FrequencyState.from_nu(eps, {1: nu1, 2: -nu1})
    res = check_melnikov(eps, fs, P, 80)
    bad = _first_brute(eps, fs, P, 80)
    assert res.passed == (not bad)
    if bad:
        assert res.witness == min(bad)


def test_melnikov_order_validation():
    with pytest.raises(StructuralError):
        check_melnikov(0.01, order="third")


@given(st.integers(1, 400))
@settings(max_examples=30, deadline=None)
def test_second_pairs_match_enumeration(d_max):
    m, mp, sg = second_pairs(d_max)
    got = set(zip(m.tolist(), mp.tolist(), sg.tolist()))
    top = math.isqrt(d_max) + d_max
    want = set()
    for a in range(1, math.isqrt(d_max) + 1):
        for b in range(a, math.isqrt(d_max) + 1):
            if a * a + b * b <= d_max:
                want.add((a, b, 1))
    for a in range(2, top):
        for b in range(1, a):
            if 0 < a * a - b * b <= d_max:
                want.add((a, b, -1))
    assert got == want


def test_second_condition_witness_shape():
    res = check_melnikov(0.01, None, P, 300, "second")
    if not res.passed:
        n, m, mp, s = res.witness
        d = m * m + s * mp * mp
        assert abs(1.01 * n - d) < P.C0 * n ** -P.tau


def test_check_all_reports_first_failing_family():
    assert check_all(0.01, None, P, 1000).condition == "base"
    assert check_all(0.00331234567, None, P, 300).passed


# ---------------------------------------------------------------- scans


@pytest.fixture(scope="module")
def scan_1e2():
    return scan_epsilon(1e-2, 1000, P, 1000)


def test_known_resonance_is_excised(scan_1e2):
    assert scan_1e2.is_excluded(0.01)
    iv = next(iv for iv in scan_1e2.excluded_intervals if iv.contains(0.01))
    assert iv.lo < 0.01 < iv.hi


def test_grid_labels_agree_with_pointwise_checks(scan_1e2):
    for eps, good in zip(scan_1e2.grid_eps.tolist(), scan_1e2.grid_good.tolist()):
        assert check_all(eps, None, P, scan_1e2.n_max).passed == good


def _witness_residual(iv, eps, model):
    """``(|f(eps)|, threshold, |df/deps|)`` for the witness of ``iv``."""
    n, m = iv.witness
    if iv.condition == "base":
        return abs((1 + eps) * n - m), float(P.base_threshold(n)), n
    lam = float(model.slope(m))
    return abs((1 + eps) * n - (m * m - lam * eps)), float(P.melnikov_threshold(n)), abs(n + lam)


def test_interval_witnesses_recheck(scan_1e2):
    model = CountertermModel()
    checked = 0
    for iv in scan_1e2.excluded_intervals:
        _, t, slope = _witness_residual(iv, iv.lo, model)
        # a quarter of the way into the witness's own window of width 2 t / slope
        eps = iv.lo + 0.5 * t / slope
        if 0 < eps <= scan_1e2.eps0:
            value, t, _ = _witness_residual(iv, eps, model)
            assert value < t
            checked += 1
    assert checked > 10


def test_intervals_are_disjoint_and_sorted(scan_1e2):
    ivs = scan_1e2.excluded_intervals
    assert all(a.hi < b.lo for a, b in zip(ivs, ivs[1:]))
    assert scan_1e2.excluded_measure == pytest.approx(sum(scan_1e2.measure_by_family.values()),
                                                      rel=0.05)


def test_excluded_measure_grows_with_truncation():
    measures = [scan_epsilon(1e-2, 200, P, n).excluded_measure for n in (100, 300, 1000, 3000)]
    assert all(b >= a for a, b in zip(measures, measures[1:]))


def test_second_family_scan_matches_pointwise():
    rep = scan_epsilon(2e-2, 200, P, 150, families=("second",))
    for eps, good in zip(rep.grid_eps.tolist(), rep.grid_good.tolist()):
        assert check_melnikov(eps, None, P, 150, "second").passed == good


def test_refined_scan_with_solver_counterterms():
    fs = frequency_iteration(ModeSet.single(1), 1e-3)
    model = CountertermModel.from_state(fs)
    assert float(model.slope(1)) == pytest.approx(-3.0, rel=1e-3)
    rep = scan_epsilon(1e-2, 500, P, 1000, model)
    for eps, good in zip(rep.grid_eps[::10].tolist(), rep.grid_good[::10].tolist()):
        assert check_all(eps, model.at(eps), P, 1000).passed == good


def test_derivative_bound_with_solver_counterterms():
    s = ModeSet.single(1)
    eps, h = 1.1e-3, 1e-6
    lo, hi = frequency_iteration(s, eps - h), frequency_iteration(s, eps + h)
    for n in (10, 50, 200):
        for m in (1, 3, 5):
            slope = ((1 + eps + h) * n - hi.omega_tilde_sq(m) - (1 + eps - h) * n + lo.omega_tilde_sq(m)) / (2 * h)
            assert abs(slope) >= n / 2


def test_measure_trend_three_decades():
    reports = [scan_epsilon(e, 1000, P, default_n_max(e)) for e in (1e-2, 1e-3, 1e-4)]
    good = [r.good_fraction for r in reports]
    assert good[0] <= good[1] <= good[2]
    slope, delta = excluded_mass_exponent(reports)
    assert delta > 0


def test_exponent_needs_two_points(scan_1e2):
    with pytest.raises(InsufficientData):
        excluded_mass_exponent([scan_1e2])


def test_scan_validation():
    with pytest.raises(StructuralError):
        scan_epsilon(1e-2, 10)
    with pytest.raises(StructuralError):
        scan_epsilon(1.5)
    with pytest.raises(StructuralError):
        scan_epsilon(1e-2, families=("third",))


def test_interval_helpers():
    iv = ExcludedInterval(-0.1, 0.3, "base", (1, 2))
    assert iv.length(0.2) == pytest.approx(0.2)
    assert iv.contains(0.0) and not iv.contains(0.3)


def test_report_outputs(scan_1e2):
    d = scan_1e2.to_dict()
    assert d["interval_count"] == len(scan_1e2.excluded_intervals)
    rows = list(scan_1e2.csv_rows())
    assert rows[0] == ("eps", "good") and len(rows) == 1001
    assert 0 < scan_1e2.good_fraction < 1


def test_default_n_max():
    assert default_n_max(1e-3) == 10000
