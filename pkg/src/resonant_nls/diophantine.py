"""Diophantine screens on ``eps`` and the measure of the admissible set.

Three families of conditions, all with ``omega = 1 + eps`` and ``n >= 1``
(negative ``n`` is symmetric and the ``+`` sign choices are trivially far from
zero):

``base``    ``|omega n - m| >= c C0 n^-tau0``            for ``m != n``;
``first``   ``|omega n - wt_m^2| >= C0 n^-tau``          for ``n != m^2``;
``second``  ``|omega n - (wt_m^2 +- wt_m'^2)| >= C0 n^-tau`` for ``n != |m^2 +- m'^2|``,

where ``wt_m^2 = m^2 - nu_m``.  For the scan the counterterms are modelled as
linear in ``eps`` (``nu_m = lambda_m eps``), so each violated inequality
excises an explicit open interval of ``eps``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import InsufficientData, StructuralError
from .lindstedt.frequencies import FrequencyState

FAMILIES = ("base", "first", "second")


@dataclass(frozen=True)
class DiophantineParams:
    """Constants of the three condition families.

    ``base_n_min`` is the first time harmonic screened by the base family.
    With ``c C0 = 1`` the ``n = 1`` row fails for every ``eps > 0`` by exactly
    ``eps`` (``|1 + eps - 2| = 1 - eps``), so it is skipped by default.
    """

    C0: float = 0.5
    tau: float = 3.5
    tau0: float = 2.0
    c: float = 2.0
    base_n_min: int = 2

    def __post_init__(self):
        if not 0 < self.C0 <= 0.5:
            raise StructuralError(f"C0 must lie in (0, 1/2], got {self.C0}")
        if not self.tau0 > 1:
            raise StructuralError(f"tau0 must exceed 1, got {self.tau0}")
        if not self.tau > self.tau0 + 1:
            raise StructuralError(f"tau must exceed tau0 + 1, got tau={self.tau}, tau0={self.tau0}")
        if not self.c > 1:
            raise StructuralError(f"c must exceed 1, got {self.c}")
        if self.base_n_min < 1:
            raise StructuralError("base_n_min must be >= 1")

    def base_threshold(self, n):
        return self.c * self.C0 * np.asarray(n, dtype=float) ** (-self.tau0)

    def melnikov_threshold(self, n):
        return self.C0 * np.asarray(n, dtype=float) ** (-self.tau)

    def to_dict(self) -> dict:
        return {"C0": self.C0, "tau": self.tau, "tau0": self.tau0, "c": self.c,
                "base_n_min": self.base_n_min}


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    condition: str
    witness: tuple | None = None
    value: float | None = None
    threshold: float | None = None
    checked: int = 0

    def __bool__(self):
        return self.passed

    def to_dict(self) -> dict:
        return {"passed": self.passed, "condition": self.condition,
                "witness": None if self.witness is None else list(self.witness),
                "value": self.value, "threshold": self.threshold, "checked": self.checked}


def _first_violation(condition, witnesses, values, thresholds) -> CheckResult:
    bad = np.flatnonzero(values < thresholds)
    if bad.size == 0:
        return CheckResult(True, condition, checked=int(values.size))
    i = bad[np.lexsort(witnesses[bad].T[::-1])[0]]
    return CheckResult(False, condition, tuple(int(x) for x in witnesses[i]),
                       float(values[i]), float(thresholds[i]), int(values.size))


def check_base(eps: float, p: DiophantineParams = DiophantineParams(), n_max: int = 1000) -> CheckResult:
    """``|omega n - m| >= c C0 n^-tau0`` for ``base_n_min <= n <= n_max``, ``m != n``.

    Only the two integers bracketing ``omega n`` can come close, so those are
    the candidates.  The witness is ``(n, m)`` with the smallest ``n``.
    """
    if not 0 <= eps < 1:
        raise StructuralError(f"eps must lie in [0, 1), got {eps}")
    omega = 1.0 + eps
    n = np.arange(p.base_n_min, n_max + 1, dtype=np.int64)
    if n.size == 0:
        return CheckResult(True, "base")
    lo = np.floor(omega * n).astype(np.int64)
    nn = np.concatenate([n, n])
    mm = np.concatenate([lo, lo + 1])
    keep = (mm != nn) & (mm >= 1)
    nn, mm = nn[keep], mm[keep]
    values = np.abs(omega * nn - mm)
    return _first_violation("base", np.stack([nn, mm], axis=1), values, p.base_threshold(nn))


def _nu_table(fs: FrequencyState, m_top: int) -> np.ndarray:
    table = np.zeros(m_top + 1)
    for m in range(1, m_top + 1):
        table[m] = fs.nu_at(m)
    return table


def check_first(eps: float, fs: FrequencyState, p: DiophantineParams, n_max: int) -> CheckResult:
    omega = 1.0 + eps
    n = np.arange(1, n_max + 1, dtype=np.int64)
    r = np.array([math.isqrt(int(x)) for x in np.floor(omega * n)], dtype=np.int64)
    m_top = int(r.max()) + 3
    nu = _nu_table(fs, m_top)
    nn = np.concatenate([n] * 4)
    mm = np.concatenate([r - 1, r, r + 1, r + 2])
    keep = (mm >= 1) & (nn != mm * mm)
    nn, mm = nn[keep], mm[keep]
    values = np.abs(omega * nn - (mm * mm - nu[mm]))
    return _first_violation("first", np.stack([nn, mm], axis=1), values, p.melnikov_threshold(nn))


def second_pairs(d_max: float):
    """All ``(m, m', s)`` with ``1 <= m, m'``, ``D = m^2 + s m'^2`` in ``(0, d_max]``.

    Sums are taken with ``m <= m'``, differences with ``m > m'``; for a
    difference ``(m - m')(m + m') <= d_max`` bounds ``m + m'`` by ``d_max``.
    """
    ms, mps, signs = [], [], []
    top = math.isqrt(int(d_max))
    a = np.arange(1, top + 1, dtype=np.int64)
    A, B = np.meshgrid(a, a, indexing="ij")
    sel = (A <= B) & (A * A + B * B <= d_max)
    ms.append(A[sel]); mps.append(B[sel]); signs.append(np.ones(int(sel.sum()), dtype=np.int64))
    d = 1
    while d * (d + 2) <= d_max:
        s = np.arange(d + 2, int(d_max // d) + 1, 2, dtype=np.int64)
        if s.size:
            ms.append((s + d) // 2); mps.append((s - d) // 2)
            signs.append(-np.ones(s.size, dtype=np.int64))
        d += 1
    m = np.concatenate(ms)
    mp = np.concatenate(mps)
    sg = np.concatenate(signs)
    return m, mp, sg


def check_second(eps: float, fs: FrequencyState, p: DiophantineParams, n_max: int,
                 margin: int = 2) -> CheckResult:
    omega = 1.0 + eps
    m, mp, sg = second_pairs(n_max * omega + margin)
    nu = _nu_table(fs, int(max(m.max(initial=1), mp.max(initial=1))))
    d_exact = m * m + sg * mp * mp
    d_tilde = d_exact - (nu[m] + sg * nu[mp])
    lo = np.floor(d_tilde / omega).astype(np.int64)
    rows = []
    for cand in (lo, lo + 1):
        keep = (cand >= 1) & (cand <= n_max) & (cand != d_exact)
        rows.append((cand[keep], m[keep], mp[keep], sg[keep], d_tilde[keep]))
    nn = np.concatenate([r[0] for r in rows])
    values = np.abs(omega * nn - np.concatenate([r[4] for r in rows]))
    wit = np.stack([nn] + [np.concatenate([r[i] for r in rows]) for i in (1, 2, 3)], axis=1)
    return _first_violation("second", wit, values, p.melnikov_threshold(nn))


def check_melnikov(eps: float, fs: FrequencyState | None = None,
                   p: DiophantineParams = DiophantineParams(), n_max: int = 1000,
                   order: str = "first") -> CheckResult:
    """First or second Melnikov screen up to ``n_max``.

    Second-condition witnesses are ``(n, m, m', s)`` with ``s = +-1`` the
    inner sign.
    """
    fs = fs or FrequencyState.bare(eps)
    if order == "first":
        return check_first(eps, fs, p, n_max)
    if order == "second":
        return check_second(eps, fs, p, n_max)
    raise StructuralError(f"order must be 'first' or 'second', got {order!r}")


def check_all(eps: float, fs: FrequencyState | None, p: DiophantineParams, n_max: int,
              families=("base", "first")) -> CheckResult:
    for fam in families:
        res = check_base(eps, p, n_max) if fam == "base" else check_melnikov(eps, fs, p, n_max, fam)
        if not res.passed:
            return res
    return CheckResult(True, "+".join(families))


# --------------------------------------------------------------------------- scan


@dataclass(frozen=True)
class CountertermModel:
    """``nu_m(eps) = lambda_m eps``; wave numbers not listed use ``tail``."""

    slopes: Mapping[int, float] = field(default_factory=dict)
    tail: float = 0.0

    @classmethod
    def from_state(cls, fs: FrequencyState) -> "CountertermModel":
        if fs.eps == 0:
            return cls()
        return cls({m: v / fs.eps for m, v in fs.nu.items()}, fs.nu_tail / fs.eps)

    def slope(self, m) -> np.ndarray:
        m = np.asarray(m)
        out = np.full(m.shape, self.tail, dtype=float)
        for k, v in self.slopes.items():
            out[np.abs(m) == k] = v
        return out

    def at(self, eps: float) -> FrequencyState:
        return FrequencyState.from_nu(eps, {m: v * eps for m, v in self.slopes.items()}, self.tail * eps)


@dataclass(frozen=True)
class ExcludedInterval:
    """Open interval ``(lo, hi)``; it may stick out of ``(0, eps0]``."""

    lo: float
    hi: float
    condition: str
    witness: tuple

    def length(self, eps0: float = math.inf) -> float:
        return max(0.0, min(self.hi, eps0) - max(self.lo, 0.0))

    def contains(self, eps: float) -> bool:
        return self.lo < eps < self.hi


@dataclass(frozen=True)
class ScanReport:
    eps0: float
    grid: int
    n_max: int
    families: tuple[str, ...]
    excluded_intervals: tuple[ExcludedInterval, ...]
    measure_by_family: Mapping[str, float]
    grid_eps: np.ndarray
    grid_good: np.ndarray

    @property
    def excluded_measure(self) -> float:
        return sum(iv.length(self.eps0) for iv in self.excluded_intervals)

    @property
    def good_fraction(self) -> float:
        return min(1.0, max(0.0, 1.0 - self.excluded_measure / self.eps0))

    @property
    def grid_good_fraction(self) -> float:
        return float(np.mean(self.grid_good))

    def is_excluded(self, eps: float) -> bool:
        return any(iv.contains(eps) for iv in self.excluded_intervals)

    def to_dict(self, max_intervals: int = 200) -> dict:
        return {
            "eps0": self.eps0,
            "grid": self.grid,
            "n_max": self.n_max,
            "families": list(self.families),
            "good_fraction": self.good_fraction,
            "grid_good_fraction": self.grid_good_fraction,
            "excluded_measure": self.excluded_measure,
            "measure_by_family": dict(self.measure_by_family),
            "interval_count": len(self.excluded_intervals),
            "excluded_intervals": [
                {"lo": iv.lo, "hi": iv.hi, "condition": iv.condition, "witness": list(iv.witness)}
                for iv in self.excluded_intervals[:max_intervals]],
        }

    def csv_rows(self):
        yield ("eps", "good")
        for e, g in zip(self.grid_eps.tolist(), self.grid_good.tolist()):
            yield (repr(e), int(g))


def _linear_intervals(a, b, t):
    """Open set ``|a + b eps| < t`` as ``(lo, hi)``; rows with ``b = 0`` are dropped."""
    ok = b != 0
    centre = -a[ok] / b[ok]
    half = t[ok] / np.abs(b[ok])
    return ok, centre - half, centre + half


def _base_intervals(eps0, p, n_max):
    n = np.arange(p.base_n_min, n_max + 1, dtype=np.int64)
    t = p.base_threshold(n)
    k_max = np.floor(eps0 * n + t).astype(np.int64)
    reps = np.maximum(k_max, 0)
    nn = np.repeat(n, reps)
    kk = np.concatenate([np.arange(1, r + 1) for r in reps]) if reps.sum() else np.zeros(0, np.int64)
    mm = nn + kk
    a = (nn - mm).astype(float)
    ok, lo, hi = _linear_intervals(a, nn.astype(float), p.base_threshold(nn))
    wit = np.stack([nn[ok], mm[ok]], axis=1)
    return lo, hi, wit


def _first_intervals(eps0, p, n_max, model):
    m_top = math.isqrt(int(n_max * (1 + eps0))) + 2
    rows_n, rows_m = [], []
    for m in range(1, m_top + 1):
        lam = float(model.slope(m))
        # (n - m^2) + eps (n + lam) crosses zero inside (0, eps0] only near m^2 / (1 + eps)
        n_lo = max(1, int(math.floor((m * m - eps0 * lam) / (1 + eps0))) - 1)
        n_hi = min(n_max, m * m + 1)
        if n_lo > n_hi:
            continue
        n = np.arange(n_lo, n_hi + 1, dtype=np.int64)
        n = n[n != m * m]
        rows_n.append(n)
        rows_m.append(np.full(n.size, m, dtype=np.int64))
    if not rows_n:
        return np.zeros(0), np.zeros(0), np.zeros((0, 2), np.int64)
    nn = np.concatenate(rows_n)
    mm = np.concatenate(rows_m)
    lam = model.slope(mm)
    ok, lo, hi = _linear_intervals((nn - mm * mm).astype(float), nn + lam, p.melnikov_threshold(nn))
    return lo, hi, np.stack([nn[ok], mm[ok]], axis=1)


def _second_intervals(eps0, p, n_max, model, margin=2):
    m, mp, sg = second_pairs(n_max * (1 + eps0) + margin)
    d = m * m + sg * mp * mp
    lam = model.slope(m) + sg * model.slope(mp)
    n_lo = np.maximum(1, np.floor((d - eps0 * np.abs(lam)) / (1 + eps0)).astype(np.int64) - 1)
    n_hi = np.minimum(n_max, d + 1)
    reps = np.maximum(n_hi - n_lo + 1, 0)
    idx = np.repeat(np.arange(d.size), reps)
    offs = np.arange(idx.size) - np.repeat(np.cumsum(reps) - reps, reps)
    nn = n_lo[idx] + offs
    keep = nn != d[idx]
    nn, idx = nn[keep], idx[keep]
    ok, lo, hi = _linear_intervals((nn - d[idx]).astype(float), nn + lam[idx], p.melnikov_threshold(nn))
    wit = np.stack([nn[ok], m[idx][ok], mp[idx][ok], sg[idx][ok]], axis=1)
    return lo, hi, wit


def _merge_arrays(lo, hi, eps0):
    """Sort, drop intervals missing ``(0, eps0]`` and merge overlaps.

    Returns merged ``(lo, hi)`` and the index (into the input) of the
    interval that opens each merged group.
    """
    keep = np.flatnonzero((hi > 0) & (lo < eps0) & (hi > lo))
    if keep.size == 0:
        return np.zeros(0), np.zeros(0), np.zeros(0, dtype=np.int64)
    order = keep[np.argsort(lo[keep], kind="stable")]
    lo_s, hi_s = lo[order], hi[order]
    reach = np.maximum.accumulate(hi_s)
    start = np.concatenate([[True], lo_s[1:] > reach[:-1]])
    first = np.flatnonzero(start)
    return lo_s[first], np.maximum.reduceat(hi_s, first), order[first]


def _measure(lo, hi, eps0) -> float:
    mlo, mhi, _ = _merge_arrays(lo, hi, eps0)
    return float(np.sum(np.minimum(mhi, eps0) - np.maximum(mlo, 0.0)))


def scan_epsilon(eps0: float, grid: int = 1000, p: DiophantineParams = DiophantineParams(),
                 n_max: int = 1000, model: CountertermModel | None = None,
                 families=("base", "first")) -> ScanReport:
    """Excise every resonance window inside ``(0, eps0]`` and sample a grid.

    ``model`` supplies ``nu_m(eps)`` (bare frequencies by default).  The grid
    is ``eps0 * i / grid`` for ``i = 1 .. grid``.
    """
    if grid < 100:
        raise StructuralError("grid must be >= 100")
    if not 0 < eps0 < 1:
        raise StructuralError(f"eps0 must lie in (0, 1), got {eps0}")
    for fam in families:
        if fam not in FAMILIES:
            raise StructuralError(f"unknown condition family {fam!r}")
    model = model or CountertermModel()
    all_lo, all_hi, tags = [], [], []
    by_family = {}
    for fam in families:
        if fam == "base":
            lo, hi, wit = _base_intervals(eps0, p, n_max)
        elif fam == "first":
            lo, hi, wit = _first_intervals(eps0, p, n_max, model)
        else:
            lo, hi, wit = _second_intervals(eps0, p, n_max, model)
        by_family[fam] = _measure(lo, hi, eps0)
        all_lo.append(lo)
        all_hi.append(hi)
        tags.extend(zip([fam] * len(wit), map(tuple, wit.tolist())))
    lo = np.concatenate(all_lo) if all_lo else np.zeros(0)
    hi = np.concatenate(all_hi) if all_hi else np.zeros(0)
    mlo, mhi, first = _merge_arrays(lo, hi, eps0)
    intervals = tuple(ExcludedInterval(float(a), float(b), *tags[i])
                      for a, b, i in zip(mlo, mhi, first.tolist()))

    eps_grid = eps0 * np.arange(1, grid + 1) / grid
    good = np.ones(grid, dtype=bool)
    if intervals:
        los = np.array([iv.lo for iv in intervals])
        his = np.array([iv.hi for iv in intervals])
        j = np.searchsorted(los, eps_grid, side="left") - 1
        inside = (j >= 0) & (eps_grid < his[np.maximum(j, 0)])
        good = ~inside
    return ScanReport(eps0, grid, n_max, tuple(families), intervals, by_family, eps_grid, good)


def excluded_mass_exponent(reports) -> tuple[float, float]:
    """Least-squares slope ``1 + delta`` of ``log(excluded mass)`` against ``log(eps0)``.

    Returns ``(slope, delta)``.
    """
    pts = [(r.eps0, r.excluded_measure) for r in reports if r.excluded_measure > 0]
    if len(pts) < 2:
        raise InsufficientData("need excluded mass at two or more eps0 values")
    x = np.log([e for e, _ in pts])
    y = np.log([m for _, m in pts])
    slope = float(np.polyfit(x, y, 1)[0])
    return slope, slope - 1.0


def default_n_max(eps0: float, kappa: float = 10.0) -> int:
    """Truncation that resolves the first resonances, which sit at ``n ~ 1 / eps``."""
    return int(math.ceil(kappa / eps0))
