"""Newton solution of the truncated Q/P system and the frequency iteration.

The unknowns are the real coefficients ``u[n, m]`` with ``m > 0`` on the
orbit of the packet support under ``(p1, p2, p3) -> -p1 + p2 + p3``; that
orbit is a coset of an integer lattice, so the truncated system is closed
on its intersection with the lattice box.  Every mode equation

    F[n, m] = (omega n - m^2) u[n, m] - eps [conj(u) u u][n, m]

is solved at once.  On ``n = m^2`` this is ``eps`` times the Q equation, off
it the P equation, so one Newton step applies the resonant-block inverse on
the diagonal and the scalar divisors elsewhere through the same Jacobian.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .amplitudes import solve_amplitudes
from .diophantine import DiophantineParams, check_base, check_melnikov
from .errors import DiophantineViolation, ExcludedEpsilon, InsufficientData, StructuralError
from .fourier import (FourierField, Lattice, NormParams, encode_keys, pair_product,
                      pde_residual, weighted_norm)
from .lindstedt.frequencies import FrequencyState
from .lindstedt.series import measure_counterterms, series_ladder, series_sum
from .modesets import ModeSet

log = logging.getLogger(__name__)


def default_lattice(modeset: ModeSet) -> Lattice:
    top = max(modeset.m_plus)
    return Lattice(max(400, 6 * top * top), max(24, 3 * top))


def default_radius(modeset: ModeSet) -> float:
    """Norm radius ``0.05 / max(M_+)``; keeps ``exp(r n)`` moderate at ``n ~ m^2``."""
    return 0.05 / max(modeset.m_plus)


def _hermite_2d(vectors) -> tuple[int, int, int]:
    """Basis ``{(a, b), (0, c)}`` of the integer lattice spanned by 2-vectors."""
    rows = [list(v) for v in vectors if v[0] or v[1]]
    if not rows:
        return 0, 0, 0
    # Euclid on the first column
    while sum(1 for r in rows if r[0]) > 1:
        rows.sort(key=lambda r: (r[0] == 0, abs(r[0])))
        pivot = rows[0]
        for r in rows[1:]:
            if r[0]:
                q = r[0] // pivot[0]
                r[0] -= q * pivot[0]
                r[1] -= q * pivot[1]
    lead = [r for r in rows if r[0]]
    a, b = (abs(lead[0][0]), lead[0][1] * (1 if lead[0][0] > 0 else -1)) if lead else (0, 0)
    c = 0
    for r in rows:
        if not r[0]:
            c = math.gcd(c, r[1])
    if c:
        b %= c
    return a, b, c


def coset_points(modeset: ModeSet, lattice: Lattice) -> tuple[np.ndarray, np.ndarray]:
    """All lattice-box points reachable from the packet support, sorted by ``(n, m)``."""
    pts = [(m * m, s * m) for m in modeset.m_plus for s in (1, -1)]
    p0 = pts[0]
    a, b, c = _hermite_2d([(p[0] - p0[0], p[1] - p0[1]) for p in pts[1:]])
    ns, ms = [], []
    if a == 0:
        i_range = [0]
    else:
        i_lo = -((lattice.n_max + p0[0]) // a)
        i_hi = (lattice.n_max - p0[0]) // a
        i_range = range(i_lo, i_hi + 1)
    for i in i_range:
        n = p0[0] + a * i
        if abs(n) > lattice.n_max:
            continue
        base = p0[1] + b * i
        if c == 0:
            cand = np.array([base]) if abs(base) <= lattice.m_max else np.zeros(0, dtype=np.int64)
        else:
            start = base - c * ((base + lattice.m_max) // c)
            cand = np.arange(start, lattice.m_max + 1, c)
        ns.append(np.full(cand.size, n, dtype=np.int64))
        ms.append(cand.astype(np.int64))
    n = np.concatenate(ns)
    m = np.concatenate(ms)
    order = np.lexsort((m, n))
    return n[order], m[order]


@dataclass
class SolveReport:
    eps: float
    converged: bool
    iterations: int
    residual_norm: float
    distance: float
    nu_out: Mapping[int, float]
    divisor_min: float
    residual_history: list = field(default_factory=list)
    norm_radius: float = 0.05
    unknowns: int = 0
    lattice: Lattice | None = None
    quadratic_constant: float | None = None
    max_abs_residual: float = 0.0
    oddness_defect: float = 0.0
    max_imag: float = 0.0

    @property
    def C(self) -> float:
        """``distance / eps^(3/2)``."""
        return self.distance / self.eps ** 1.5 if self.eps > 0 else 0.0

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "converged": self.converged,
            "iterations": self.iterations,
            "residual_norm": self.residual_norm,
            "max_abs_residual": self.max_abs_residual,
            "distance": self.distance,
            "C": self.C,
            "nu_out": {str(m): v for m, v in self.nu_out.items()},
            "max_nu_over_eps": (max((abs(v) for v in self.nu_out.values()), default=0.0) / self.eps
                                if self.eps > 0 else 0.0),
            "divisor_min": self.divisor_min,
            "residual_history": list(self.residual_history),
            "quadratic_constant": self.quadratic_constant,
            "norm_radius": self.norm_radius,
            "unknowns": self.unknowns,
            "lattice": None if self.lattice is None else [self.lattice.n_max, self.lattice.m_max],
            "oddness_defect": self.oddness_defect,
            "max_imag": self.max_imag,
        }


def screen_epsilon(eps: float, lattice: Lattice, params: DiophantineParams = DiophantineParams()):
    """Raise :class:`ExcludedEpsilon` if the base screen fails up to ``lattice.n_max``."""
    res = check_base(eps, params, lattice.n_max)
    if not res.passed:
        raise ExcludedEpsilon(f"eps={eps} excluded by the base condition at {res.witness}",
                              res.witness, "base")
    return res


class _System:
    """Index bookkeeping for the odd real unknowns on the coset."""

    def __init__(self, modeset: ModeSet, lattice: Lattice):
        n, m = coset_points(modeset, lattice)
        pos = m > 0
        self.n, self.m = n[pos], m[pos]
        keys = encode_keys(n, m)
        mirror = encode_keys(self.n, -self.m)
        if not np.all(np.isin(mirror, keys)):
            raise StructuralError("coset is not symmetric under m -> -m")
        self.lattice = lattice
        self.size = self.n.size
        self.keys = encode_keys(self.n, self.m)
        self.diag = self.n == self.m * self.m

    def field(self, x) -> FourierField:
        n = np.concatenate([self.n, self.n])
        m = np.concatenate([self.m, -self.m])
        v = np.concatenate([x, -x])
        return FourierField.from_arrays(self.lattice, n, m, v)

    def vector(self, f: FourierField) -> np.ndarray:
        return np.array([f.get(int(a), int(b)).real for a, b in zip(self.n, self.m)])

    def residual(self, x, eps) -> np.ndarray:
        r = pde_residual(self.field(x), eps, self.lattice)
        return self.vector(r)

    def jacobian(self, x, eps) -> np.ndarray:
        u = self.field(x)
        k1, v1 = pair_product(u, u, conjugate_first=True)
        k2, v2 = pair_product(u, u)
        n, m = self.n, self.m
        dn = n[:, None] - n[None, :]
        sn = n[:, None] + n[None, :]
        dm_a = m[:, None] - m[None, :]
        dm_b = m[:, None] + m[None, :]
        c1a = _lookup(k1, v1, encode_keys(dn, dm_a))
        c1b = _lookup(k1, v1, encode_keys(dn, dm_b))
        c2a = _lookup(k2, v2, encode_keys(sn, dm_b))
        c2b = _lookup(k2, v2, encode_keys(sn, dm_a))
        jac = -eps * (2 * c1a + c2a - 2 * c1b - c2b)
        jac[np.diag_indices_from(jac)] += (1 + eps) * n - m * m
        return jac


def _lookup(keys, values, query):
    idx = np.searchsorted(keys, query)
    idx = np.clip(idx, 0, max(keys.size - 1, 0))
    hit = keys[idx] == query if keys.size else np.zeros(query.shape, dtype=bool)
    return np.where(hit, values.real[idx] if keys.size else 0.0, 0.0)


def newton_solve(lattice: Lattice | None, modeset: ModeSet, eps: float, tol: float = 1e-11,
                 max_iter: int = 30, r: float | None = None,
                 params: DiophantineParams = DiophantineParams(),
                 initial: FourierField | None = None) -> tuple[SolveReport, FourierField]:
    """Solve the rescaled truncated equation starting from the packet.

    Returns the report and the rescaled solution ``u``; the physical field is
    ``sqrt(eps) u`` and ``distance`` is measured in physical units.
    """
    if eps < 0:
        raise StructuralError(f"eps must be >= 0, got {eps}")
    lattice = lattice or default_lattice(modeset)
    r = default_radius(modeset) if r is None else r
    norm = NormParams(r)
    av = solve_amplitudes(modeset)
    system = _System(modeset, lattice)
    u0 = av.packet(lattice)
    x0 = system.vector(u0)
    m_track = sorted(set(range(1, lattice.m_max + 1)))

    if eps == 0:
        rep = SolveReport(0.0, True, 0, 0.0, 0.0, {m: 0.0 for m in m_track}, math.inf, [0.0], r,
                          system.size, lattice)
        return rep, u0

    screen_epsilon(eps, lattice, params)
    div = np.abs((1 + eps) * system.n - system.m ** 2)[~system.diag]
    divisor_min = float(div.min()) if div.size else math.inf
    if divisor_min < eps ** 1.1:
        i = int(np.argmin(div))
        wit = (int(system.n[~system.diag][i]), int(system.m[~system.diag][i]))
        raise ExcludedEpsilon(f"small divisor {divisor_min:.3e} < eps^1.1 at {wit}", wit, "safety")

    x = x0.copy() if initial is None else system.vector(initial)
    history = []
    converged = False
    last_step = math.inf
    it = 0
    for it in range(max_iter + 1):
        F = system.residual(x, eps)
        res = weighted_norm(system.field(F), norm)
        history.append(res)
        log.debug("newton eps=%g it=%d residual=%.3e", eps, it, res)
        # diagonal rows carry a factor eps, so keep polishing until the step is at rounding level
        if res <= tol and last_step <= 1e-13 * max(1.0, float(np.max(np.abs(x)))):
            converged = True
            break
        if it == max_iter:
            break
        if len(history) > 3 and res >= 0.5 * history[-2] and res < 1e3 * tol:
            # rounding floor reached
            converged = res <= tol
            break
        step = np.linalg.solve(system.jacobian(x, eps), -F)
        damping = 0.5 if it == 0 else 1.0
        last_step = damping * float(np.max(np.abs(step)))
        x = x + damping * step

    u = system.field(x)
    resid = pde_residual(u, eps, lattice)
    res_norm = weighted_norm(resid, norm)
    converged = converged or res_norm <= tol
    distance = math.sqrt(eps) * weighted_norm(u - u0, norm)
    nu = measure_counterterms(u, eps, m_track).nu
    # quadratic tail r_{j+1} <= c r_j^2: skip the damped first step, and stop judging once
    # r_j nears rounding level (below ~1e-10 the step itself is rounding-limited)
    floor = min(history)
    tail = [(a, b) for a, b in zip(history[1:], history[2:]) if 1e-10 <= a < 1e-4 and b > 10 * floor]
    qc = max((b / a ** 2 for a, b in tail), default=None)
    report = SolveReport(eps, converged, it, res_norm, distance, nu, divisor_min, history, r,
                         system.size, lattice, qc, resid.max_abs(), u.oddness_defect(), u.max_imag())
    return report, u


# ------------------------------------------------------------------ frequencies


def frequency_iteration(modeset: ModeSet, eps: float, order: int = 4, tol: float = 1e-10,
                        max_steps: int = 10, split: str = "a",
                        params: DiophantineParams = DiophantineParams()) -> FrequencyState:
    """Fixed point ``nu -> measured nu(series built with nu)``.

    Each step builds the ladder to ``order`` with the current counterterms,
    sums it at ``mu = 1`` and reads the counterterms off the linearization.
    ``split`` selects how the total ``nu`` is fed back: ``"a"`` (all in
    ``nu^a``), ``"b"`` (all in ``nu^b``) or ``"measured"`` (the two channels
    as measured).  The returned state records ``C3 = 9.9 ||a||^2`` as the
    diagnostic bound (leading order gives ``|nu_m| <= 9 ||a||^2 eps``), the
    number of steps and the last increment.
    """
    if split not in ("a", "b", "measured"):
        raise StructuralError(f"unknown split {split!r}")
    av = solve_amplitudes(modeset)
    c3 = 9.9 * float(av.norm_sq)
    fs = FrequencyState(eps, c3_bound=c3)
    if eps == 0:
        return fs
    increment = math.inf
    for step in range(1, max_steps + 1):
        try:
            ladder = series_ladder(av, fs, order)
        except DiophantineViolation as exc:
            raise ExcludedEpsilon(f"iterate hit a zero divisor at {exc.witness}", exc.witness,
                                  exc.condition) from exc
        u = series_sum(ladder, 1.0)
        measured = measure_counterterms(u, eps, range(1, ladder.lattice.m_max + 1))
        if split == "measured":
            new = FrequencyState(eps, measured.nu_a, measured.nu_b, measured.tail_a, measured.tail_b, c3)
        else:
            new = FrequencyState.from_nu(eps, measured.nu, measured.nu_tail, split)
            new = FrequencyState(eps, new.nu_a, new.nu_b, new.tail_a, new.tail_b, c3)
        keys = set(new.tracked) | set(fs.tracked)
        increment = max([abs(new.nu_at(m) - fs.nu_at(m)) for m in keys] + [abs(new.nu_tail - fs.nu_tail)])
        fs = new
        check = check_melnikov(eps, fs, params, ladder.lattice.n_max, "first")
        if not check.passed:
            raise ExcludedEpsilon(f"iterate violates the first Melnikov condition at {check.witness}",
                                  check.witness, "first")
        if increment <= tol:
            break
    return replace(fs, iterations=step, increment=increment)


# ------------------------------------------------------------------ sweeps


@dataclass
class SweepReport:
    modeset: tuple[int, ...]
    reports: list
    slope: float
    intercept: float

    @property
    def C_values(self) -> list[float]:
        return [r.C for r in self.reports]

    def csv_rows(self):
        yield ("eps", "residual", "distance", "C", "slope_so_far")
        pts = []
        for r in self.reports:
            pts.append((r.eps, r.distance))
            slope = _fit(pts)[0] if len(pts) >= 2 else float("nan")
            yield (repr(r.eps), repr(r.residual_norm), repr(r.distance), repr(r.C), repr(slope))

    def to_dict(self) -> dict:
        return {
            "m_plus": list(self.modeset),
            "slope": self.slope,
            "intercept": self.intercept,
            "C": self.C_values,
            "points": [r.to_dict() for r in self.reports],
        }


def _fit(points):
    x = np.log([p[0] for p in points])
    y = np.log([p[1] for p in points])
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def scaling_sweep(modeset: ModeSet, eps_list: Sequence[float], lattice: Lattice | None = None,
                  tol: float = 1e-11, r: float | None = None,
                  params: DiophantineParams = DiophantineParams()) -> SweepReport:
    """Solve at each ``eps`` and fit ``log(distance)`` against ``log(eps)``.

    Excluded values are skipped; fewer than four converged points raise
    :class:`InsufficientData`.
    """
    reports = []
    for eps in sorted(eps_list):
        try:
            rep, _ = newton_solve(lattice, modeset, eps, tol=tol, r=r, params=params)
        except ExcludedEpsilon as exc:
            log.info("sweep skips excluded eps=%g (%s)", eps, exc)
            continue
        if rep.converged and rep.distance > 0:
            reports.append(rep)
    if len(reports) < 4:
        raise InsufficientData(f"only {len(reports)} converged points; need at least 4")
    slope, intercept = _fit([(r.eps, r.distance) for r in reports])
    return SweepReport(modeset.m_plus, reports, slope, intercept)
