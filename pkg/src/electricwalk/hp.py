"""Arbitrary-precision helpers shared by the dynamics and localization code.

All high-precision arithmetic goes through mpmath.  Phases are always
derived from exact fractions of a full turn, so repeated field
applications never accumulate argument error.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import mpmath

__all__ = [
    "unit_phase",
    "rational_phase_table",
    "mpc_of",
    "norm_hp",
    "workdps",
]

workdps = mpmath.mp.workdps


def mpc_of(z) -> mpmath.mpc:
    """Promote a python/numpy complex to mpc (exact binary promotion)."""
    if isinstance(z, mpmath.mpc):
        return z
    return mpmath.mpc(float(z.real), float(z.imag))


def unit_phase(turns: Fraction) -> mpmath.mpc:
    """exp(2*pi*i*turns) at the current working precision.

    ``turns`` is an exact fraction of a full turn; reduction mod 1 is done
    in integer arithmetic before any rounding.
    """
    t = turns % 1
    arg = mpmath.mpf(2 * t.numerator) / t.denominator
    return mpmath.expjpi(arg)


@lru_cache(maxsize=64)
def _phase_table(num: int, den: int, dps: int) -> tuple:
    with workdps(dps):
        return tuple(unit_phase(Fraction(num * j, den)) for j in range(den))


def rational_phase_table(nu: Fraction, dps: int) -> tuple:
    """Table of exp(2*pi*i*nu*x) for x = 0..den-1, periodic in x."""
    return _phase_table(nu.numerator % nu.denominator, nu.denominator, dps)


def norm_hp(values) -> mpmath.mpf:
    """l2 norm of an iterable of mpc/complex values."""
    total = mpmath.fsum(abs(v) ** 2 for v in values)
    return mpmath.sqrt(total)
