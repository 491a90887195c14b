"""Periodic solutions of the cubic Schroedinger equation on an interval.

Submodules cover resonant mode sets, the unperturbed packet amplitudes, the
Lindstedt series with its tree oracle, a truncated Newton solver, the
small-divisor conditions and the command-line driver.
"""

__version__ = "0.1.0"
