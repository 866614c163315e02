"""Hurwitz-Kronecker class numbers and Zagier's weight 3/2 Eisenstein series."""
from __future__ import annotations

import math
from fractions import Fraction

import mpmath

from .errors import DomainError
from .qforms import class_reps
from .traces import beta_function


def hurwitz(D: int) -> Fraction:
    """``H(D)``: classes of discriminant ``-D`` weighted by ``1/|PSL2(Z)_Q|``; ``H(0) = -1/12``."""
    if D < 0:
        raise DomainError("hurwitz needs D >= 0")
    if D == 0:
        return Fraction(-1, 12)
    return sum((Fraction(1, r.stabilizer_order) for r in class_reps(D)), Fraction(0))


def hurwitz_bruteforce(D: int) -> Fraction:
    """Independent count: loop over all reduced ``(a, b, c)`` and weight by the symmetry of the form."""
    if D < 0:
        raise DomainError("hurwitz needs D >= 0")
    if D == 0:
        return Fraction(-1, 12)
    total = Fraction(0)
    for a in range(1, math.isqrt(D) + 1):
        for b in range(-a + 1, a + 1):
            for c in range(a, (D + b * b) // (4 * a) + 1):
                if b * b - 4 * a * c != -D or (a == c and b < 0):
                    continue
                if a == b == c:
                    total += Fraction(1, 3)
                elif b == 0 and a == c:
                    total += Fraction(1, 2)
                else:
                    total += 1
    return total


def hurwitz_table(dmax: int) -> dict[int, Fraction]:
    return {D: hurwitz(D) for D in range(dmax + 1)}


def zagier_holomorphic_part(dmax: int) -> dict[int, Fraction]:
    """Nonzero ``H(D)`` for ``0 <= D <= dmax``."""
    if dmax < 0:
        raise DomainError("dmax must be non-negative")
    return {D: h for D, h in hurwitz_table(dmax).items() if h}


def zagier_nonholo_value(N: int, v, ctx=None):
    """``beta(4 pi N^2 v) / (16 pi sqrt(v))``, the coefficient of ``q^(-N^2)`` for one sign of ``N``."""
    ctx = ctx or mpmath.mp
    v = ctx.mpf(v)
    if v <= 0:
        raise DomainError("v must be positive")
    return beta_function(4 * ctx.pi * N * N * v, ctx) / (16 * ctx.pi * ctx.sqrt(v))
