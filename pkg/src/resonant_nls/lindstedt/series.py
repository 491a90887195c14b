"""Order-by-order Lindstedt coefficients.

With ``u = sum_k mu^k u^(k)`` the off-diagonal part obeys

    w^(k)[n, m] = g(n, m) (nu^a_m w^(k-1)[n, m] + nu^b_m w^(k-1)[n, -m]
                           + eps [conj(u) u u]^(k-1)[n, m]),

``g(n, m) = 1 / (omega n - omega_tilde_m^2)``, while the diagonal part solves
the linearized Q equation against the starred order-k cubic sum (every term
except the ones linear in ``V^(k)``).  ``w^(k)`` is built before ``V^(k)``
because the starred sum contains it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..amplitudes import AmplitudeVector, build_linearization, invert_resonant_block
from ..errors import DiophantineViolation, StructuralError
from ..fourier import (FourierField, Lattice, _group, decode_keys, encode_keys,
                       enforce_oddness, pair_product)
from .frequencies import FrequencyState


def propagator(n: int, m: int, fs: FrequencyState) -> float:
    """Off-diagonal propagator ``1 / (omega n - omega_tilde_m^2)``."""
    if n == m * m:
        raise ValueError(f"({n}, {m}) is diagonal; use diagonal_propagator")
    d = fs.omega * n - fs.omega_tilde_sq(m)
    if d == 0:
        raise DiophantineViolation(f"zero divisor at (n, m) = ({n}, {m})", (n, m), "first")
    return 1.0 / d


def diagonal_propagator(m: int, av: AmplitudeVector) -> float:
    """Diagonal entry of the Q-equation inverse at wave number ``m``.

    On the mode set this is ``(A^-1)[m, m]`` (``-1/(2 m0^2)`` for one mode);
    elsewhere it is ``1 / (m^2 - 4||a||^2)``.
    """
    m = abs(m)
    if m in av.modes:
        inv = _block_inverse(av)
        i = av.modes.index(m)
        return float(inv[i, i])
    d = m * m - 4 * av.norm_sq
    if d == 0:
        raise StructuralError(f"degenerate tail at m={m}")
    return 1.0 / float(d)


_INVERSES: dict = {}


def _block_inverse(av: AmplitudeVector) -> np.ndarray:
    key = av.modes
    if key not in _INVERSES:
        _INVERSES[key] = invert_resonant_block(build_linearization(av))
    return _INVERSES[key]


def ladder_lattice(av: AmplitudeVector, order: int) -> Lattice:
    """Box holding every coefficient up to ``order`` without truncation."""
    top = max(av.modes)
    k = 2 * order + 1
    return Lattice(k * top * top, k * top)


@dataclass(frozen=True)
class SeriesLadder:
    """Coefficient fields ``u^(0) .. u^(K)`` on a common lattice."""

    amplitudes: AmplitudeVector
    fs: FrequencyState
    per_k: tuple[FourierField, ...]
    min_divisor: float = float("inf")

    @property
    def order(self) -> int:
        return len(self.per_k) - 1

    @property
    def lattice(self) -> Lattice:
        return self.per_k[-1].lattice

    def off_diagonal(self, k: int) -> FourierField:
        f = self.per_k[k]
        return FourierField(f.lattice, {(n, m): v for (n, m), v in f.items() if n != m * m})

    def diagonal(self, k: int) -> FourierField:
        f = self.per_k[k]
        return FourierField(f.lattice, {(n, m): v for (n, m), v in f.items() if n == m * m})

    def coefficient(self, k: int, n: int, m: int) -> float:
        return self.per_k[k].get(n, m).real

    def norms(self) -> list[float]:
        return [f.max_abs() for f in self.per_k]

    def to_dict(self, coefficients: bool = False) -> dict:
        out = {
            "order": self.order,
            "eps": self.fs.eps,
            "m_plus": list(self.amplitudes.modes),
            "max_abs_per_order": self.norms(),
            "support_per_order": [len(f) for f in self.per_k],
            "min_divisor": self.min_divisor,
        }
        if coefficients:
            out["coefficients"] = [f.to_records() for f in self.per_k]
        return out


def series_start(av: AmplitudeVector, fs: FrequencyState) -> SeriesLadder:
    return SeriesLadder(av, fs, (av.packet(ladder_lattice(av, 0)),))


def _sum_keyed(parts):
    parts = [p for p in parts if p[0].size]
    if not parts:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=complex)
    return _group(np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def cubic_at_order(fields, k: int, lattice: Lattice) -> FourierField:
    """``sum_{k1+k2+k3=k} [conj(f_k1) f_k2 f_k3]`` truncated to ``lattice``."""
    pairs = {}
    for j in range(k + 1):
        pairs[j] = _sum_keyed([pair_product(fields[a], fields[j - a]) for a in range(j + 1)])
    parts = []
    for k1 in range(k + 1):
        an, am, av = fields[k1].to_arrays()
        pk, pv = pairs[k - k1]
        if an.size == 0 or pk.size == 0:
            continue
        keys = (-encode_keys(an, am)[:, None] + pk[None, :]).ravel()
        vals = (av.conj()[:, None] * pv[None, :]).ravel()
        n, m = decode_keys(keys)
        keep = lattice.mask(n, m)
        parts.append((keys[keep], vals[keep]))
    keys, vals = _sum_keyed(parts)
    n, m = decode_keys(keys)
    return FourierField.from_arrays(lattice, n, m, vals)


def _nu_arrays(fs: FrequencyState, m):
    lookup_a = {mm: fs.nu_a_at(mm) for mm in set(np.abs(m).tolist())}
    lookup_b = {mm: fs.nu_b_at(mm) for mm in lookup_a}
    nu_a = np.array([lookup_a[abs(x)] for x in m.tolist()])
    nu_b = np.array([lookup_b[abs(x)] for x in m.tolist()])
    return nu_a, nu_b


def series_extend(ladder: SeriesLadder, fs: FrequencyState | None = None) -> SeriesLadder:
    """Append ``u^(K+1)``; raises :class:`DiophantineViolation` on a zero divisor."""
    fs = fs or ladder.fs
    av = ladder.amplitudes
    k = ladder.order + 1
    lattice = ladder_lattice(av, k)
    fields = [FourierField(lattice, f.coeffs) for f in ladder.per_k]

    # off-diagonal block
    cub = cubic_at_order(fields, k - 1, lattice)
    prev = fields[k - 1]
    keys = {key for key in cub.coeffs if key[0] != key[1] ** 2}
    if k >= 2:
        keys |= {key for key in prev.coeffs if key[0] != key[1] ** 2}
    keys = sorted(key for key in keys if key[1] > 0)
    min_div = ladder.min_divisor
    w = {}
    if keys:
        n = np.array([key[0] for key in keys])
        m = np.array([key[1] for key in keys])
        nu_a, nu_b = _nu_arrays(fs, m)
        div = fs.omega * n - (m * m - (nu_a - nu_b))
        zero = np.flatnonzero(div == 0)
        if zero.size:
            i = zero[0]
            raise DiophantineViolation(f"zero divisor at (n, m) = ({n[i]}, {m[i]})",
                                       (int(n[i]), int(m[i])), "first")
        src = np.array([nu_a[i] * prev.get(*kk) + nu_b[i] * prev.get(kk[0], -kk[1])
                        + fs.eps * cub.get(*kk) for i, kk in enumerate(keys)])
        vals = src / div
        min_div = min(min_div, float(np.min(np.abs(div))))
        w = {kk: v for kk, v in zip(keys, vals.tolist())}
    w_field = enforce_oddness(FourierField(lattice, w))

    # diagonal block: starred sum with V^(k) left out
    star = cubic_at_order(fields + [w_field], k, lattice)
    diag = {}
    top_m = lattice.m_max
    modes = av.modes
    inv = _block_inverse(av)
    g_modes = np.array([star.get(m * m, m) for m in modes])
    v_modes = inv @ g_modes
    for m, v in zip(modes, v_modes.tolist()):
        diag[(m * m, m)] = v
    for m in range(1, top_m + 1):
        if m in modes or m * m > lattice.n_max:
            continue
        s = star.get(m * m, m)
        if s != 0:
            diag[(m * m, m)] = s / float(m * m - 4 * av.norm_sq)
    coeffs = dict(w_field.coeffs)
    for (n, m), v in diag.items():
        coeffs[(n, m)] = v
        coeffs[(n, -m)] = -v
    new = FourierField(lattice, coeffs)
    return SeriesLadder(av, fs, tuple(fields) + (new,), min_div)


def series_ladder(av: AmplitudeVector, fs: FrequencyState, order: int) -> SeriesLadder:
    ladder = series_start(av, fs)
    for _ in range(order):
        ladder = series_extend(ladder)
    return ladder


def series_sum(ladder: SeriesLadder, mu: float = 1.0, order: int | None = None) -> FourierField:
    """``sum_{k <= order} mu^k u^(k)`` on the ladder lattice."""
    order = ladder.order if order is None else order
    lattice = ladder.lattice
    out: dict = {}
    for k in range(order + 1):
        scale = mu ** k
        if scale == 0:
            continue
        for key, v in ladder.per_k[k].items():
            out[key] = out.get(key, 0j) + scale * v
    return FourierField(lattice, out)


class _PairTables:
    """``C1 = conj(u) * u`` and ``C2 = u * u`` as lookup tables."""

    def __init__(self, u: FourierField):
        k1, v1 = pair_product(u, u, conjugate_first=True)
        k2, v2 = pair_product(u, u)
        self.c1 = dict(zip(k1.tolist(), v1.tolist()))
        self.c2 = dict(zip(k2.tolist(), v2.tolist()))

    def get(self, table, n, m) -> float:
        return getattr(self, table).get(int(encode_keys(n, m)), 0j).real

    def sigma(self, eps: float, m: int) -> tuple[float, float]:
        """``(sigma_a, sigma_b)`` at the signed wave number ``m``."""
        sa = eps * (2 * self.get("c1", 0, 0) + self.get("c2", 2 * m * m, 2 * m))
        sb = eps * (2 * self.get("c1", 0, 2 * m) + self.get("c2", 2 * m * m, 0))
        return sa, sb


def measure_counterterms(u: FourierField, eps: float, m_list) -> FrequencyState:
    """Counterterms read off the linearization of ``eps [conj(u) u u]`` at ``u``.

    At ``(m^2, m)`` the derivative with respect to ``u[n, m]`` is
    ``sigma_a = eps (2 C1[0, 0] + C2[2m^2, 2m])`` and with respect to
    ``u[n, -m]`` it is ``sigma_b = eps (2 C1[0, 2m] + C2[2m^2, 0])``, where
    ``C1 = conj(u) * u`` and ``C2 = u * u``.  The odd-mode frequency shift is
    ``nu = -(sigma_a - sigma_b)`` with ``nu^a = -sigma_a``, ``nu^b = -sigma_b``.
    Wave numbers beyond the support see only ``nu^a = -2 eps C1[0, 0]``.
    """
    tables = _PairTables(u)
    nu_a, nu_b = {}, {}
    for m in sorted({abs(int(x)) for x in m_list} - {0}):
        sa, sb = tables.sigma(eps, m)
        nu_a[m], nu_b[m] = -sa, -sb
    return FrequencyState(eps, nu_a, nu_b, -2 * eps * tables.get("c1", 0, 0), 0.0)


def signed_counterterms(u: FourierField, eps: float, m_list) -> dict[int, float]:
    """``nu`` evaluated separately at each signed wave number (for symmetry checks)."""
    tables = _PairTables(u)
    out = {}
    for m in m_list:
        sa, sb = tables.sigma(eps, int(m))
        out[int(m)] = -(sa - sb)
    return out
