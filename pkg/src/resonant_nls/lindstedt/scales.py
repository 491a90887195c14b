"""Dyadic scale labels of small divisors (sharp indicators).

A point with divisor ``x = |omega n - omega_tilde_m^2|`` has scale ``-1`` when
``x > C0`` and otherwise the ``h >= 0`` with ``2^(-h-1) C0 < x <= 2^(-h) C0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import StructuralError
from ..fourier import Lattice
from .frequencies import FrequencyState

ZERO_DIVISOR_SCALE = np.iinfo(np.int64).max


def scale_threshold(eps: float, C0: float = 0.5) -> int:
    """``h0`` with ``2^h0 < 16 C0 / sqrt(eps) <= 2^(h0 + 1)``."""
    if not eps > 0:
        raise StructuralError("eps must be positive")
    x = 16.0 * C0 / math.sqrt(eps)
    h0 = math.ceil(math.log2(x)) - 1
    # guard the float log against off-by-one at exact powers of two
    while 2.0 ** h0 >= x:
        h0 -= 1
    while 2.0 ** (h0 + 1) < x:
        h0 += 1
    return h0


def dyadic_scale(x, C0: float = 0.5):
    """Vectorized scale of divisor magnitudes ``x``."""
    x = np.abs(np.asarray(x, dtype=float))
    h = np.full(x.shape, -1, dtype=np.int64)
    small = (x <= C0) & (x > 0)
    h[small] = np.floor(np.log2(C0 / x[small])).astype(np.int64)
    # sharp boundaries: enforce 2^(-h-1) C0 < x <= 2^(-h) C0 exactly
    hs = h[small]
    xs = x[small]
    hs = np.where(xs > C0 * 2.0 ** (-hs), hs - 1, hs)
    hs = np.where(xs <= C0 * 2.0 ** (-hs - 1), hs + 1, hs)
    h[small] = hs
    h[x == 0] = ZERO_DIVISOR_SCALE
    return h


@dataclass(frozen=True)
class ScaleAssignment:
    """Scale of every off-diagonal point plus small-divisor separation diagnostics."""

    eps: float
    C0: float
    h0: int
    n: np.ndarray
    m: np.ndarray
    divisor: np.ndarray
    h: np.ndarray
    separation_violations: tuple[tuple[int, int], ...]

    @property
    def separation_ok(self) -> bool:
        return not self.separation_violations

    def scale_of(self, n: int, m: int) -> int:
        idx = np.flatnonzero((self.n == n) & (self.m == m))
        if idx.size == 0:
            raise KeyError((n, m))
        return int(self.h[idx[0]])

    def histogram(self) -> dict[int, int]:
        finite = self.h[self.h != ZERO_DIVISOR_SCALE]
        values, counts = np.unique(finite, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}

    def count_at_least(self, h: int) -> int:
        return int(np.count_nonzero(self.h >= h))

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "C0": self.C0,
            "h0": self.h0,
            "points": int(self.h.size),
            "histogram": {str(k): v for k, v in self.histogram().items()},
            "zero_divisors": int(np.count_nonzero(self.h == ZERO_DIVISOR_SCALE)),
            "separation_ok": self.separation_ok,
            "separation_violations": [list(p) for p in self.separation_violations[:20]],
        }


def _nu_of(fs: FrequencyState, m):
    table = {mm: fs.nu_at(mm) if mm else 0.0 for mm in set(np.abs(m).tolist())}
    return np.array([table[abs(x)] for x in m.tolist()])


def assign_scales(lattice: Lattice, fs: FrequencyState, C0: float = 0.5,
                  points=None) -> ScaleAssignment:
    """Scales over the full lattice box, or over ``points`` (an ``(n, m)`` list).

    The separation report flags every off-diagonal point with divisor below 1/2
    whose ``min(|n|, m^2)`` is not above ``1 / (4 eps)``.
    """
    if not fs.eps > 0:
        raise StructuralError("assign_scales needs eps > 0")
    if points is None:
        n, m = np.meshgrid(np.arange(-lattice.n_max, lattice.n_max + 1),
                           np.arange(-lattice.m_max, lattice.m_max + 1), indexing="ij")
        n, m = n.ravel(), m.ravel()
    else:
        pts = np.asarray(list(points), dtype=np.int64).reshape(-1, 2)
        n, m = pts[:, 0], pts[:, 1]
    off = n != m * m
    n, m = n[off], m[off]
    divisor = fs.omega * n - (m * m - _nu_of(fs, m))
    h = dyadic_scale(divisor, C0)
    near = np.abs(divisor) < 0.5
    bad = near & ~(np.minimum(np.abs(n), m * m) > 1.0 / (4.0 * fs.eps))
    violations = tuple((int(a), int(b)) for a, b in zip(n[bad], m[bad]))
    return ScaleAssignment(fs.eps, C0, scale_threshold(fs.eps, C0), n, m, divisor, h, violations)
