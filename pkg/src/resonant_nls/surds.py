"""Exact arithmetic over Q[sqrt(s_1), ..., sqrt(s_N)] for positive rationals s_i.

Elements are sums ``q * prod_{i in S} sqrt(s_i)`` with rational ``q`` and
``S`` a subset of generators.  Generators are treated as independent; a
representation with all-zero coefficients is therefore exactly zero, which
is the only direction the residual checks need.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence


class Surd:
    __slots__ = ("squares", "terms")

    def __init__(self, squares: Sequence[Fraction], terms: Mapping[frozenset, Fraction] | None = None):
        self.squares = tuple(squares)
        self.terms = {k: Fraction(v) for k, v in (terms or {}).items() if v != 0}

    @classmethod
    def rational(cls, squares, q) -> "Surd":
        return cls(squares, {frozenset(): Fraction(q)})

    @classmethod
    def generator(cls, squares, i: int, coeff=1) -> "Surd":
        """``coeff * sqrt(squares[i])``."""
        return cls(squares, {frozenset((i,)): Fraction(coeff)})

    def _coerce(self, other) -> "Surd":
        if isinstance(other, Surd):
            return other
        return Surd.rational(self.squares, other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return Surd(self.squares, out)

    __radd__ = __add__

    def __neg__(self):
        return Surd(self.squares, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out: dict = {}
        for ka, va in self.terms.items():
            for kb, vb in other.terms.items():
                coeff = va * vb
                for i in ka & kb:
                    coeff *= self.squares[i]
                key = ka ^ kb
                out[key] = out.get(key, 0) + coeff
        return Surd(self.squares, out)

    __rmul__ = __mul__

    def conjugate(self):
        return self

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        return (self - other).is_zero()

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __float__(self):
        total = 0.0
        for key, q in self.terms.items():
            term = float(q)
            for i in key:
                term *= float(self.squares[i]) ** 0.5
            total += term
        return total

    def __repr__(self):
        if not self.terms:
            return "Surd(0)"
        parts = []
        for key, q in sorted(self.terms.items(), key=lambda kv: sorted(kv[0])):
            roots = "*".join(f"sqrt({self.squares[i]})" for i in sorted(key))
            parts.append(f"{q}" + (f"*{roots}" if roots else ""))
        return "Surd(" + " + ".join(parts) + ")"
