"""Resonant index sets for multi-mode wave packets.

A mode set is a strictly increasing list ``m_1 < ... < m_N`` of positive wave
numbers.  With ``M = sum m_k^2`` the unperturbed amplitudes are

    a_k^2 = 4 M / (4N - 1) - m_k^2,

so the set is usable when every ``a_k^2`` is positive (feasibility) and
``4 M / (4N - 1)`` is not the square of a wave number outside the set
(nondegeneracy).  All checks here use exact integers and fractions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Sequence

from .errors import InternalContradiction, StructuralError


def _is_square(x: Fraction) -> tuple[bool, int | None]:
    if x.denominator != 1 or x < 0:
        return False, None
    r = isqrt(x.numerator)
    return r * r == x.numerator, r


@dataclass(frozen=True)
class ModesetReport:
    """Outcome of :func:`validate_modeset`."""

    m_plus: tuple[int, ...]
    n_count: int
    weight: int
    four_norm_sq: Fraction
    amplitude_squares: dict[int, Fraction]
    feasible: bool
    nondegenerate: bool
    nondegeneracy_kind: str
    offending_square: int | None = None

    @property
    def valid(self) -> bool:
        return self.feasible and self.nondegenerate

    def to_dict(self) -> dict:
        return {
            "m_plus": list(self.m_plus),
            "N": self.n_count,
            "M": self.weight,
            "four_norm_sq": _frac_str(self.four_norm_sq),
            "amplitude_squares": {str(m): _frac_str(a) for m, a in self.amplitude_squares.items()},
            "checks": {
                "feasible": self.feasible,
                "nondegenerate": self.nondegenerate,
                "nondegeneracy_kind": self.nondegeneracy_kind,
                "offending_square": self.offending_square,
                "valid": self.valid,
            },
        }


def _frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def validate_modeset(s: Sequence[int]) -> ModesetReport:
    """Exact feasibility and nondegeneracy report for a candidate set.

    Raises :class:`StructuralError` if ``s`` is empty, contains non-positive
    entries, or is not strictly increasing.
    """
    s = tuple(s)
    if not s:
        raise StructuralError("mode set must be nonempty")
    if any(int(m) != m for m in s):
        raise StructuralError(f"mode set entries must be integers: {s}")
    s = tuple(int(m) for m in s)
    if any(m <= 0 for m in s):
        raise StructuralError(f"mode set entries must be positive: {s}")
    if any(b <= a for a, b in zip(s, s[1:])):
        raise StructuralError(f"mode set must be strictly increasing: {s}")

    n_count = len(s)
    weight = sum(m * m for m in s)
    four_norm_sq = Fraction(4 * weight, 4 * n_count - 1)
    squares = {m: four_norm_sq - m * m for m in s}
    # a zero amplitude would drop the mode from the set, so feasibility is strict
    feasible = all(a > 0 for a in squares.values())

    if four_norm_sq.denominator != 1:
        kind, nondeg, offending = "non-integer", True, None
    else:
        is_sq, root = _is_square(four_norm_sq)
        if not is_sq:
            kind, nondeg, offending = "non-square", True, None
        else:
            # root in the set means a vanishing amplitude, caught by feasibility
            kind, nondeg, offending = "square", root in s, (None if root in s else root)
    return ModesetReport(s, n_count, weight, four_norm_sq, squares, feasible, nondeg, kind, offending)


@dataclass(frozen=True)
class ModeSet:
    """Validated resonant set ``M_+`` with ``N = |M_+|`` and ``M = sum m^2``."""

    m_plus: tuple[int, ...]
    n_count: int = field(init=False)
    weight: int = field(init=False)
    construction: str = "explicit"

    def __post_init__(self):
        report = validate_modeset(self.m_plus)
        if not report.valid:
            raise StructuralError(f"invalid mode set {self.m_plus}: {report.to_dict()['checks']}")
        object.__setattr__(self, "m_plus", report.m_plus)
        object.__setattr__(self, "n_count", report.n_count)
        object.__setattr__(self, "weight", report.weight)

    @classmethod
    def single(cls, m0: int) -> "ModeSet":
        return cls((m0,), construction="single")

    @property
    def full(self) -> tuple[int, ...]:
        """``M = M_+ u (-M_+)`` in increasing order."""
        return tuple(sorted(set(self.m_plus) | {-m for m in self.m_plus}))

    @property
    def norm_sq(self) -> Fraction:
        """``||a||^2 = M / (4N - 1)``."""
        return Fraction(self.weight, 4 * self.n_count - 1)

    def report(self) -> ModesetReport:
        return validate_modeset(self.m_plus)

    def __contains__(self, m) -> bool:
        return abs(m) in self.m_plus


def construct_lemma5(n_count: int) -> tuple[ModeSet, int]:
    """Consecutive block ending at ``m_N = (4N + j)(N - 1)``.

    Returns the set and the chosen ``j`` (the smallest of ``{0, 1}`` for which
    ``4M`` is not a multiple of ``4N - 1``).
    """
    if n_count < 2:
        raise StructuralError("construct_lemma5 needs n_count >= 2")
    for j in (0, 1):
        top = (4 * n_count + j) * (n_count - 1)
        block = tuple(top - (n_count - k) for k in range(1, n_count + 1))
        weight = sum(m * m for m in block)
        if (4 * weight) % (4 * n_count - 1) == 0:
            continue
        if validate_modeset(block).valid:
            return ModeSet(block, construction=f"consecutive(j={j})"), j
    raise InternalContradiction(f"neither j=0 nor j=1 works for N={n_count}")


def lemma6_window(n_count: int, gaps: Sequence[int]) -> tuple[int, int]:
    """Integer range ``[lo, hi]`` of top wave numbers inside the proof window.

    ``lo`` is the first ``m_N`` with ``M - (N - 1/4) m_N^2 > 0`` and ``hi`` the
    last with ``M - (N - 1/4)(m_N + 1)^2 < 0``.  Inside the window ``4||a||^2``
    sits strictly between ``m_N^2`` and ``(m_N + 1)^2``.
    """
    offsets = (0,) + tuple(gaps)
    s1 = sum(offsets)
    s2 = sum(i * i for i in offsets)

    # 4 f1(x) = x^2 - 8 s1 x + 4 s2 ; 4 f2(x) = 4 f1(x) - (4N - 1)(2x + 1)
    def f1(x):
        return x * x - 8 * s1 * x + 4 * s2

    def f2(x):
        return f1(x) - (4 * n_count - 1) * (2 * x + 1)

    lo = max(offsets) + 1
    # larger root of f1 is below 8 s1 + 1; step past it
    x = max(lo, 4 * s1 + isqrt(max(16 * s1 * s1 - 4 * s2, 0)) - 1)
    while f1(x) <= 0:
        x += 1
    lo = max(lo, x)
    b = 8 * s1 + 2 * (4 * n_count - 1)
    c = 4 * s2 - (4 * n_count - 1)
    hi = (b + isqrt(max(b * b - 4 * c, 0)) + 1) // 2 + 1
    while hi > lo and f2(hi) >= 0:
        hi -= 1
    return lo, hi


def construct_lemma6(n_count: int, gaps: Sequence[int]) -> ModeSet:
    """Smallest valid set ``{m_N - i_{N-1}, ..., m_N - i_1, m_N}``.

    ``gaps`` is a strictly increasing list of ``n_count - 1`` positive
    integers.  The scan walks the proof window; exhausting it is a bug, not a
    property of the input.
    """
    gaps = tuple(int(g) for g in gaps)
    if n_count < 2:
        raise StructuralError("construct_lemma6 needs n_count >= 2")
    if len(gaps) != n_count - 1:
        raise StructuralError(f"expected {n_count - 1} gaps, got {len(gaps)}")
    if any(g <= 0 for g in gaps) or any(b <= a for a, b in zip(gaps, gaps[1:])):
        raise StructuralError(f"gaps must be positive and strictly increasing: {gaps}")

    lo, hi = lemma6_window(n_count, gaps)
    for top in range(max(gaps) + 1, hi + 1):
        candidate = tuple(sorted(top - g for g in gaps + (0,)))
        if validate_modeset(candidate).valid:
            return ModeSet(candidate, construction=f"gaps({list(gaps)})")
    raise InternalContradiction(f"no valid top wave number in window [{lo}, {hi}] for gaps {gaps}")


def parse_modeset(spec) -> ModeSet:
    """Accept ``[7, 8]``, ``{"m_plus": [7, 8]}`` or a bare integer."""
    if isinstance(spec, ModeSet):
        return spec
    if isinstance(spec, int):
        return ModeSet.single(spec)
    if isinstance(spec, dict):
        if "m_plus" not in spec:
            raise StructuralError("mode set object needs an 'm_plus' key")
        spec = spec["m_plus"]
    if not isinstance(spec, (list, tuple)):
        raise StructuralError(f"cannot read a mode set from {spec!r}")
    return ModeSet(tuple(spec))
