"""Sparse Fourier fields on the (time, space) frequency lattice.

A field is stored as a finite map ``(n, m) -> complex`` where ``n`` is the
harmonic of the ``2*pi/omega`` time period and ``m`` the spatial wave number,

    u(x, t) = sum_{n, m} u[n, m] * exp(i*n*omega*t + i*m*x).

The cubic nonlinearity ``|u|^2 u`` becomes the triple convolution in which the
first factor is conjugated and its momentum negated.  Everything here is a pure
function of its inputs; fields are immutable once built.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from types import MappingProxyType
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import StructuralError

_SHIFT = 21
_HALF = 1 << (_SHIFT - 1)


def encode_keys(n, m):
    """Pack integer momenta into a single sortable int64 key."""
    n = np.asarray(n, dtype=np.int64)
    m = np.asarray(m, dtype=np.int64)
    return (n << _SHIFT) + m


def decode_keys(keys):
    keys = np.asarray(keys, dtype=np.int64)
    n = (keys + _HALF) >> _SHIFT
    return n, keys - (n << _SHIFT)


@dataclass(frozen=True)
class Lattice:
    """Truncation box ``|n| <= n_max``, ``|m| <= m_max``."""

    n_max: int
    m_max: int

    def __post_init__(self):
        if int(self.n_max) != self.n_max or int(self.m_max) != self.m_max:
            raise StructuralError("lattice cutoffs must be integers")
        if self.n_max <= 0 or self.m_max <= 0:
            raise StructuralError(
                f"lattice cutoffs must be positive, got ({self.n_max}, {self.m_max})")
        if max(self.n_max, self.m_max) >= _HALF:
            raise StructuralError("lattice cutoff too large for key packing")

    @classmethod
    def diagonal_complete(cls, n_max: int, m_max: int) -> "Lattice":
        """Lattice guaranteed to hold every diagonal mode ``(m^2, m)``, ``|m| <= m_max``."""
        if n_max < m_max * m_max:
            raise StructuralError(
                f"n_max={n_max} < m_max^2={m_max * m_max}: diagonal modes would be cut")
        return cls(n_max, m_max)

    def contains(self, n: int, m: int) -> bool:
        return abs(n) <= self.n_max and abs(m) <= self.m_max

    def mask(self, n, m):
        return (np.abs(n) <= self.n_max) & (np.abs(m) <= self.m_max)

    def enlarged(self, factor: int = 2) -> "Lattice":
        return Lattice(self.n_max * factor, self.m_max * factor)


@dataclass(frozen=True)
class NormParams:
    """Analyticity radius ``r`` of the weighted l1 norm."""

    r: float = 0.05

    def __post_init__(self):
        if not self.r > 0:
            raise StructuralError(f"norm radius must be positive, got {self.r}")


class FourierField:
    """Immutable sparse field on a :class:`Lattice`."""

    __slots__ = ("lattice", "_coeffs")

    def __init__(self, lattice: Lattice, coeffs: Mapping[tuple[int, int], complex] | None = None):
        data = {}
        for (n, m), value in (coeffs or {}).items():
            n, m = int(n), int(m)
            if not lattice.contains(n, m):
                raise StructuralError(f"coefficient ({n}, {m}) outside {lattice}")
            data[(n, m)] = complex(value)
        self.lattice = lattice
        self._coeffs = MappingProxyType(data)

    # construction -----------------------------------------------------------
    @classmethod
    def zeros(cls, lattice: Lattice) -> "FourierField":
        return cls(lattice, {})

    @classmethod
    def from_arrays(cls, lattice: Lattice, n, m, values, truncate: bool = False) -> "FourierField":
        n = np.asarray(n, dtype=np.int64)
        m = np.asarray(m, dtype=np.int64)
        values = np.asarray(values, dtype=complex)
        if truncate:
            keep = lattice.mask(n, m)
            n, m, values = n[keep], m[keep], values[keep]
        return cls(lattice, dict(zip(zip(n.tolist(), m.tolist()), values.tolist())))

    def to_arrays(self):
        """Return ``(n, m, values)`` sorted by ``(n, m)``."""
        if not self._coeffs:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty.copy(), np.zeros(0, dtype=complex)
        keys = sorted(self._coeffs)
        n = np.fromiter((k[0] for k in keys), dtype=np.int64, count=len(keys))
        m = np.fromiter((k[1] for k in keys), dtype=np.int64, count=len(keys))
        v = np.fromiter((self._coeffs[k] for k in keys), dtype=complex, count=len(keys))
        return n, m, v

    # mapping protocol -------------------------------------------------------
    @property
    def coeffs(self) -> Mapping[tuple[int, int], complex]:
        return self._coeffs

    def __getitem__(self, key):
        return self._coeffs.get((int(key[0]), int(key[1])), 0j)

    def get(self, n: int, m: int) -> complex:
        return self._coeffs.get((n, m), 0j)

    def __len__(self):
        return len(self._coeffs)

    def __iter__(self):
        return iter(self._coeffs)

    def items(self):
        return self._coeffs.items()

    @property
    def support(self) -> frozenset:
        return frozenset(k for k, v in self._coeffs.items() if v != 0)

    def __repr__(self):
        return f"FourierField({self.lattice}, {len(self)} coefficients)"

    # arithmetic -------------------------------------------------------------
    def _combine(self, other: "FourierField", op: Callable) -> "FourierField":
        if not isinstance(other, FourierField):
            return NotImplemented
        lattice = self.lattice if self.lattice == other.lattice else _join(self.lattice, other.lattice)
        keys = set(self._coeffs) | set(other._coeffs)
        return FourierField(lattice, {k: op(self.get(*k), other.get(*k)) for k in keys})

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b)

    def __mul__(self, scalar):
        if isinstance(scalar, FourierField):
            return NotImplemented
        return FourierField(self.lattice, {k: scalar * v for k, v in self._coeffs.items()})

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def restrict(self, lattice: Lattice) -> "FourierField":
        """Drop every coefficient outside ``lattice``."""
        return FourierField(lattice, {k: v for k, v in self._coeffs.items() if lattice.contains(*k)})

    def max_abs(self) -> float:
        return max((abs(v) for v in self._coeffs.values()), default=0.0)

    def oddness_defect(self) -> float:
        """``max |u[n, m] + u[n, -m]|`` (with ``u[n, 0]`` counted once)."""
        worst = 0.0
        for (n, m), v in self._coeffs.items():
            worst = max(worst, abs(v + self.get(n, -m)) if m else abs(v))
        return worst

    def is_odd(self, tol: float = 0.0) -> bool:
        return self.oddness_defect() <= tol

    def max_imag(self) -> float:
        return max((abs(v.imag) for v in self._coeffs.values()), default=0.0)

    # serialization ----------------------------------------------------------
    def to_records(self) -> list[dict]:
        return [{"n": n, "m": m, "re": v.real, "im": v.imag}
                for (n, m), v in sorted(self._coeffs.items())]

    def to_json(self) -> str:
        return json.dumps(self.to_records())

    @classmethod
    def from_records(cls, lattice: Lattice, records: Iterable[Mapping]) -> "FourierField":
        coeffs = {}
        for rec in records:
            try:
                coeffs[(int(rec["n"]), int(rec["m"]))] = complex(float(rec["re"]), float(rec["im"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise StructuralError(f"bad field record {rec!r}") from exc
        return cls(lattice, coeffs)

    @classmethod
    def from_json(cls, lattice: Lattice, text: str) -> "FourierField":
        return cls.from_records(lattice, json.loads(text))


def _join(a: Lattice, b: Lattice) -> Lattice:
    return Lattice(max(a.n_max, b.n_max), max(a.m_max, b.m_max))


def _group(keys, values):
    """Sum ``values`` sharing a key; deterministic (sorted keys, fixed order)."""
    if keys.size == 0:
        return keys, values
    uniq, inverse = np.unique(keys, return_inverse=True)
    re = np.bincount(inverse, weights=values.real, minlength=uniq.size)
    im = np.bincount(inverse, weights=values.imag, minlength=uniq.size)
    return uniq, re + 1j * im


def _check_compatible(*fields: FourierField):
    first = fields[0].lattice
    for f in fields[1:]:
        if f.lattice != first:
            raise StructuralError(f"incompatible lattices {first} and {f.lattice}")


def pair_product(f: FourierField, g: FourierField, conjugate_first: bool = False):
    """Convolution ``f * g`` (or ``conj(f)^- * g``) as sorted ``(keys, values)``.

    No truncation is applied; the caller decides where to cut.
    """
    fn, fm, fv = f.to_arrays()
    gn, gm, gv = g.to_arrays()
    if conjugate_first:
        fn, fm, fv = -fn, -fm, fv.conj()
    keys = (encode_keys(fn, fm)[:, None] + encode_keys(gn, gm)[None, :]).ravel()
    values = (fv[:, None] * gv[None, :]).ravel()
    return _group(keys, values)


def cubic_term(conj_factor: FourierField, f2: FourierField, f3: FourierField,
               lattice: Lattice | None = None) -> FourierField:
    """Triple convolution ``[conj(f1) f2 f3]`` truncated to ``lattice``.

    Sums ``conj(f1[n1, m1]) f2[n2, m2] f3[n3, m3]`` over
    ``-n1 + n2 + n3 = n`` and ``-m1 + m2 + m3 = m``.  The full convolution
    of the supports is formed first and only then truncated, so no
    wraparound can occur.
    """
    _check_compatible(conj_factor, f2, f3)
    lattice = lattice or conj_factor.lattice
    pkeys, pvals = pair_product(f2, f3)
    an, am, av = conj_factor.to_arrays()
    if pkeys.size == 0 or an.size == 0:
        return FourierField.zeros(lattice)
    # keys are additive, so -k1 + k_pair encodes -p1 + p2 + p3
    keys = (-encode_keys(an, am)[:, None] + pkeys[None, :]).ravel()
    values = (av.conj()[:, None] * pvals[None, :]).ravel()
    n, m = decode_keys(keys)
    keep = lattice.mask(n, m)
    keys, values = _group(keys[keep], values[keep])
    n, m = decode_keys(keys)
    return FourierField.from_arrays(lattice, n, m, values)


def cubic_term_bruteforce(f1: Mapping, f2: Mapping, f3: Mapping,
                          conj: Callable = lambda z: z.conjugate(), zero=0):
    """Direct O(S^3) triple loop over supports, generic in the value type.

    ``f1``, ``f2``, ``f3`` are plain mappings ``(n, m) -> value``.  Used as an
    oracle for :func:`cubic_term` and for exact arithmetic.
    """
    out: dict = {}
    for (n1, m1), v1 in f1.items():
        c1 = conj(v1)
        for (n2, m2), v2 in f2.items():
            c12 = c1 * v2
            for (n3, m3), v3 in f3.items():
                key = (-n1 + n2 + n3, -m1 + m2 + m3)
                out[key] = out.get(key, zero) + c12 * v3
    return out


def weighted_norm(f: FourierField, p: NormParams = NormParams()) -> float:
    """``sum |f[n, m]| exp(r (|n| + |m|))``."""
    n, m, v = f.to_arrays()
    if v.size == 0:
        return 0.0
    return float(np.sum(np.abs(v) * np.exp(p.r * (np.abs(n) + np.abs(m)))))


def linear_symbol(n, m, eps: float):
    """Per-mode linear operator ``omega*n - m^2`` with ``omega = 1 + eps``."""
    return (1.0 + eps) * np.asarray(n, dtype=float) - np.asarray(m, dtype=float) ** 2


def pde_residual(u: FourierField, eps: float, lattice: Lattice | None = None) -> FourierField:
    """Residual of ``-i u_t + u_xx = eps |u|^2 u`` mode by mode.

    ``R[n, m] = (omega n - m^2) u[n, m] - eps [|u|^2 u][n, m]`` with
    ``omega = 1 + eps``, on the lattice.
    """
    lattice = lattice or u.lattice
    u = u if u.lattice == lattice else FourierField(lattice, u.restrict(lattice).coeffs)
    n, m, v = u.to_arrays()
    lin = {k: s * val for k, s, val in zip(zip(n.tolist(), m.tolist()), linear_symbol(n, m, eps), v)}
    if eps == 0:
        return FourierField(lattice, lin)
    cub = cubic_term(u, u, u, lattice)
    out = dict(lin)
    for k, val in cub.items():
        out[k] = out.get(k, 0j) - eps * val
    return FourierField(lattice, out)


def enforce_oddness(f: FourierField) -> FourierField:
    """Antisymmetrize in ``m`` keeping the ``m > 0`` value as master."""
    out = {}
    for (n, m), v in f.items():
        if m > 0:
            out[(n, m)] = v
            out[(n, -m)] = -v
        elif m < 0 and (n, -m) not in f.coeffs:
            out[(n, m)] = 0j
    return FourierField(f.lattice, out)


def is_diagonal(n: int, m: int) -> bool:
    return n == m * m


def packet_field(lattice: Lattice, amplitudes: Mapping[int, float], scale: float = 1.0) -> FourierField:
    """Odd wave packet ``a(t, x) - a(t, -x)`` with ``a = sum a_m e^{i m^2 t + i m x}``."""
    coeffs = {}
    for m, a in amplitudes.items():
        if m <= 0:
            raise StructuralError("packet wave numbers must be positive")
        coeffs[(m * m, m)] = scale * a
        coeffs[(m * m, -m)] = -scale * a
    return FourierField(lattice, coeffs)

