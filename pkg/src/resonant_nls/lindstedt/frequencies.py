"""Renormalized frequencies and counterterms.

``omega_tilde_m^2 = m^2 - nu_m`` with ``nu_m = nu_m^a - nu_m^b``.  The maps
are keyed by ``|m| >= 1`` (counterterms are even in ``m``); wave numbers not
tracked explicitly use the tail values.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

from ..errors import StructuralError


@dataclass(frozen=True)
class FrequencyState:
    """``eps``, ``omega = 1 + eps`` and the counterterm sequences."""

    eps: float
    nu_a: Mapping[int, float] = field(default_factory=dict)
    nu_b: Mapping[int, float] = field(default_factory=dict)
    tail_a: float = 0.0
    tail_b: float = 0.0
    c3_bound: float | None = None
    iterations: int = 0
    increment: float | None = None

    def __post_init__(self):
        if not self.eps >= 0:
            raise StructuralError(f"eps must be >= 0, got {self.eps}")
        for name in ("nu_a", "nu_b"):
            data = dict(getattr(self, name))
            if any(int(m) != m or m <= 0 for m in data):
                raise StructuralError(f"{name} must be keyed by positive wave numbers")
            object.__setattr__(self, name, MappingProxyType({int(m): float(v) for m, v in data.items()}))

    @classmethod
    def bare(cls, eps: float) -> "FrequencyState":
        """Zeroth iterate: ``nu = 0`` everywhere."""
        return cls(eps)

    @classmethod
    def from_nu(cls, eps: float, nu: Mapping[int, float], tail: float = 0.0,
                split: str = "a") -> "FrequencyState":
        """Build from the total counterterm, placing it all in one channel.

        ``split='a'`` gives ``nu^a = nu, nu^b = 0``; ``split='b'`` gives
        ``nu^a = 0, nu^b = -nu``.
        """
        nu = {abs(int(m)): float(v) for m, v in nu.items()}
        if split == "a":
            return cls(eps, nu, {}, tail, 0.0)
        if split == "b":
            return cls(eps, {}, {m: -v for m, v in nu.items()}, 0.0, -tail)
        raise StructuralError(f"unknown split {split!r}")

    @property
    def omega(self) -> float:
        return 1.0 + self.eps

    @property
    def tracked(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.nu_a) | set(self.nu_b)))

    def nu_a_at(self, m: int) -> float:
        return self.nu_a.get(abs(m), self.tail_a)

    def nu_b_at(self, m: int) -> float:
        return self.nu_b.get(abs(m), self.tail_b)

    def nu_at(self, m: int) -> float:
        return self.nu_a_at(m) - self.nu_b_at(m)

    @property
    def nu(self) -> dict[int, float]:
        return {m: self.nu_at(m) for m in self.tracked}

    @property
    def nu_tail(self) -> float:
        return self.tail_a - self.tail_b

    def omega_tilde_sq(self, m: int) -> float:
        return m * m - self.nu_at(m)

    @property
    def max_nu_over_eps(self) -> float:
        if self.eps == 0:
            return 0.0
        values = list(self.nu.values()) + [self.nu_tail]
        return max(abs(v) for v in values) / self.eps

    def c3_ok(self) -> bool | None:
        """Diagnostic ``|nu_m| <= C3 eps``; ``None`` when no bound is recorded."""
        if self.c3_bound is None:
            return None
        return self.max_nu_over_eps <= self.c3_bound

    def with_eps(self, eps: float) -> "FrequencyState":
        """Same ``nu / eps`` profile transported to another ``eps``."""
        if self.eps == 0:
            return FrequencyState(eps, c3_bound=self.c3_bound)
        s = eps / self.eps
        return FrequencyState(eps, {m: s * v for m, v in self.nu_a.items()},
                              {m: s * v for m, v in self.nu_b.items()},
                              s * self.tail_a, s * self.tail_b, self.c3_bound)

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "omega": self.omega,
            "nu": {str(m): v for m, v in self.nu.items()},
            "nu_a": {str(m): v for m, v in self.nu_a.items()},
            "nu_b": {str(m): v for m, v in self.nu_b.items()},
            "nu_tail": self.nu_tail,
            "max_nu_over_eps": self.max_nu_over_eps,
            "c3_bound": self.c3_bound,
            "c3_ok": self.c3_ok(),
            "iterations": self.iterations,
            "increment": self.increment,
        }
