"""Unperturbed wave-packet amplitudes and the resonant linearization.

At ``eps = 0`` the Q equation on an odd packet supported on ``+-M_+`` reduces
to ``a_m^2 = 4||a||^2 - m^2`` with ``||a||^2 = M / (4N - 1)``.  Linearizing
the same equation in the real amplitudes gives the N x N block

    A[m, m]  = m^2 - 4||a||^2 - 5 a_m^2 = -6 a_m^2,
    A[m, m'] = -8 a_m a_m',

and the scalar ``m^2 - 4||a||^2`` on every mode outside the set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .errors import StructuralError
from .fourier import FourierField, Lattice, cubic_term, cubic_term_bruteforce, packet_field
from .modesets import ModeSet
from .surds import Surd


@dataclass(frozen=True)
class AmplitudeVector:
    """Positive real amplitudes of the ``eps = 0`` packet, with exact squares."""

    modeset: ModeSet
    squares: Mapping[int, Fraction]
    a: Mapping[int, float]

    @property
    def modes(self) -> tuple[int, ...]:
        return self.modeset.m_plus

    @property
    def norm_sq(self) -> Fraction:
        return sum(self.squares.values(), Fraction(0))

    @property
    def alpha(self) -> Fraction:
        """``|A|^2`` of the one-mode packet (only meaningful for N = 1)."""
        if self.modeset.n_count != 1:
            raise StructuralError("alpha is defined for one-mode packets only")
        return self.squares[self.modes[0]]

    def amplitude(self, m: int) -> float:
        """Signed packet coefficient at wave number ``m`` (``sgn(m) a_|m|``)."""
        return math.copysign(self.a.get(abs(m), 0.0), m) if m else 0.0

    def packet(self, lattice: Lattice, scale: float = 1.0) -> FourierField:
        return packet_field(lattice, self.a, scale)

    def exact_packet(self) -> tuple[dict, tuple]:
        """Packet as ``{(n, m): Surd}`` with one generator per amplitude."""
        sq = tuple(self.squares[m] for m in self.modes)
        out = {}
        for i, m in enumerate(self.modes):
            out[(m * m, m)] = Surd.generator(sq, i, 1)
            out[(m * m, -m)] = Surd.generator(sq, i, -1)
        return out, sq

    def default_lattice(self, generations: int = 1) -> Lattice:
        top = max(self.modes)
        k = 2 * generations + 1
        return Lattice(k * top * top, k * top)


def solve_amplitudes(s: ModeSet) -> AmplitudeVector:
    """Exact ``a_m^2 = 4||a||^2 - m^2``; real amplitudes taken positive."""
    norm_sq = s.norm_sq
    squares = {m: 4 * norm_sq - m * m for m in s.m_plus}
    bad = [m for m, q in squares.items() if q <= 0]
    if bad:
        raise StructuralError(f"infeasible mode set {s.m_plus}: nonpositive a^2 at {bad}")
    return AmplitudeVector(s, squares, {m: math.sqrt(q) for m, q in squares.items()})


def q_residual_eps0(av: AmplitudeVector, exact: bool = False,
                    lattice: Lattice | None = None) -> dict[int, object]:
    """Residual ``m^2 v_m - [|v|^2 v]_m`` at every diagonal output ``(m^2, m)``.

    The cubic term is the full convolution of the 2N-point packet (numpy path
    in floating point, brute-force triple loop over surds when ``exact``).
    Keys are signed wave numbers; values are floats or :class:`Surd`.
    """
    if exact:
        field, sq = av.exact_packet()
        zero = Surd(sq)
        cub = cubic_term_bruteforce(field, field, field, conj=lambda z: z, zero=zero)
        keys = {m for (n, m) in cub if n == m * m} | {m for (_, m) in field}
        return {m: field.get((m * m, m), zero) * (m * m) - cub.get((m * m, m), zero)
                for m in sorted(keys)}
    lattice = lattice or av.default_lattice()
    v = av.packet(lattice)
    cub = cubic_term(v, v, v, lattice)
    keys = {m for (n, m) in cub.coeffs if n == m * m} | {m for (_, m) in v.coeffs}
    return {m: (m * m * v.get(m * m, m) - cub.get(m * m, m)).real for m in sorted(keys)}


def q_residual(amplitudes: Mapping[int, float]) -> dict[int, float]:
    """Brute-force Q residual for arbitrary positive-m amplitudes (floats).

    Used for finite-difference checks of the linearization away from the
    exact solution.
    """
    field = {}
    for m, a in amplitudes.items():
        field[(m * m, m)] = a
        field[(m * m, -m)] = -a
    cub = cubic_term_bruteforce(field, field, field, conj=lambda z: z, zero=0.0)
    return {m: m * m * a - cub.get((m * m, m), 0.0) for m, a in amplitudes.items()}


def det_D(n_count: int, p: float, q: float) -> float:
    """Determinant of the N x N matrix with ``p`` on the diagonal and ``q`` elsewhere."""
    if n_count < 1:
        raise StructuralError("n_count must be >= 1")
    return (p - q) ** (n_count - 1) * (p + (n_count - 1) * q)


@dataclass(frozen=True)
class LinearizationMatrix:
    """Resonant block over ``modes`` plus the scalar tail on other wave numbers."""

    modes: tuple[int, ...]
    block: np.ndarray
    tail: Mapping[int, Fraction] = field(default_factory=dict)
    diag_exact: tuple[Fraction, ...] | None = None
    det_exact: Fraction | None = None

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.block))

    @property
    def condition_number(self) -> float:
        return float(np.linalg.cond(self.block))

    def to_dict(self) -> dict:
        return {
            "modes": list(self.modes),
            "block": self.block.tolist(),
            "det": self.det,
            "det_exact": None if self.det_exact is None else f"{self.det_exact.numerator}/{self.det_exact.denominator}",
            "condition_number": self.condition_number,
        }


def build_linearization(av: AmplitudeVector, m_tail_max: int = 0) -> LinearizationMatrix:
    """Resonant block and the tail diagonal ``m^2 - 4||a||^2`` for ``m <= m_tail_max``."""
    modes = av.modes
    norm_sq = av.norm_sq
    diag = tuple(m * m - 4 * norm_sq - 5 * av.squares[m] for m in modes)
    for m, d in zip(modes, diag):
        if d != -6 * av.squares[m]:
            raise StructuralError(f"diagonal identity fails at m={m}: {d}")
    a = np.array([av.a[m] for m in modes])
    block = -8.0 * np.outer(a, a)
    np.fill_diagonal(block, [float(d) for d in diag])
    n_count = len(modes)
    prod = Fraction(1)
    for m in modes:
        prod *= av.squares[m]
    det_exact = (-1) ** n_count * Fraction((-2) ** (n_count - 1) * (6 + 8 * (n_count - 1))) * prod
    tail = {m: m * m - 4 * norm_sq for m in range(1, m_tail_max + 1) if m not in modes}
    return LinearizationMatrix(modes, block, tail, diag, det_exact)


def invert_resonant_block(lm: LinearizationMatrix) -> np.ndarray:
    """Inverse of the resonant block; singular input means a bad mode set."""
    block = np.asarray(lm.block, dtype=float)
    scale = np.max(np.abs(block)) if block.size else 0.0
    if scale == 0 or abs(np.linalg.det(block / scale)) < 1e-13:
        raise StructuralError(f"resonant block is singular for modes {lm.modes}")
    return np.linalg.inv(block)


def odd_extension(inverse: np.ndarray, modes: tuple[int, ...]) -> tuple[tuple[int, ...], np.ndarray]:
    """Lift an N x N inverse to the 2N x 2N map acting on odd sources.

    For odd ``G`` (``G_{-m} = -G_m``) the result ``V = D2 @ G`` equals
    ``sgn(m) * (inverse @ G_+)_{|m|}``.
    """
    full = tuple(sorted({-m for m in modes} | set(modes)))
    index = {m: i for i, m in enumerate(modes)}
    out = np.empty((len(full), len(full)))
    for i, m in enumerate(full):
        for j, mp in enumerate(full):
            out[i, j] = 0.5 * np.sign(m) * np.sign(mp) * inverse[index[abs(m)], index[abs(mp)]]
    return full, out
