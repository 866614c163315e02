"""Arbitrary-precision Dedekind eta, j-invariant and eta-quotient values.

Every point is first moved into the standard fundamental domain (exactly, when
the point is a CM point with known form), where the q-series converge fast.
The eta multiplier is applied exactly through Dedekind sums.

Values come back as :class:`Approx` pairs.  The error is obtained by running
the computation at two precisions and taking their difference, padded by a
few ulps of the finer result.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Any, Callable, NamedTuple

import mpmath

from .errors import DomainError, PrecisionError
from .qforms import CMPoint, GroupElement, reduce

if TYPE_CHECKING:
    from .funcdsl import FunctionSpec


@dataclass(frozen=True)
class PrecisionPolicy:
    """Working-precision knobs shared by all numerical routines.

    ``base_bits`` is the target accuracy (relative for single values, absolute
    for traces), ``guard_bits`` the extra working bits, and ``max_doublings``
    how often the working precision may double before giving up.
    """

    base_bits: int = 64
    guard_bits: int = 32
    max_doublings: int = 4

    def __post_init__(self):
        if self.base_bits < 64:
            raise DomainError("base_bits must be at least 64")
        if self.max_doublings < 1:
            raise DomainError("max_doublings must be at least 1")
        if self.guard_bits < 0:
            raise DomainError("guard_bits must be non-negative")


DEFAULT_POLICY = PrecisionPolicy()


class Approx(NamedTuple):
    """A numerical value together with an absolute error bound."""

    value: Any
    error: Any

    def __float__(self) -> float:
        return float(mpmath.re(self.value))


def make_context(prec: int) -> mpmath.MPContext:
    """A private mpmath context, so concurrent callers never share precision state."""
    ctx = mpmath.MPContext()
    ctx.prec = prec
    return ctx


def portable(x):
    """Copy of ``x`` in the global mpmath context without rounding (picklable)."""
    if isinstance(x, mpmath.mpf):
        return x
    with mpmath.workprec(max(53, x.context.prec)):
        return mpmath.mpf(x)


def exact_fraction(x) -> Fraction:
    """The binary float ``x`` as an exact rational."""
    sign, man, exp, _ = x._mpf_ if hasattr(x, "_mpf_") else mpmath.mpf(x)._mpf_
    if not man and exp:
        raise DomainError("not a finite number")
    v = Fraction(int(man)) * Fraction(2) ** int(exp)
    return -v if sign else v


def _to_mpf(ctx, x):
    if isinstance(x, Fraction):
        return ctx.mpf(x.numerator) / x.denominator
    return ctx.mpf(x)


@dataclass(frozen=True)
class UpperHalfPoint:
    """A point of the upper half plane.

    Either ``scale * (real + i imag)`` with parts given as ints, Fractions,
    decimal strings or mpf values (re-read at every working precision), or,
    preferably, an exact :class:`CMPoint`.
    """

    real: Any = 0
    imag: Any = 1
    cm: CMPoint | None = None
    scale: int = 1

    def __post_init__(self):
        if self.cm is None and not mpmath.mpf(self.imag) > 0:
            raise DomainError("imaginary part must be positive")
        if self.scale < 1:
            raise DomainError("scale must be a positive integer")

    @classmethod
    def from_cm(cls, point: CMPoint) -> "UpperHalfPoint":
        return cls(Fraction(-point.b, 2 * point.a), None, point)

    @classmethod
    def from_complex(cls, z) -> "UpperHalfPoint":
        z = mpmath.mpmathify(z)
        return cls(mpmath.re(z), mpmath.im(z))

    def value(self, ctx):
        if self.cm is not None:
            return self.cm.value(ctx)
        return self.scale * ctx.mpc(_to_mpf(ctx, self.real), _to_mpf(ctx, self.imag))

    def scaled(self, k: int) -> "UpperHalfPoint":
        """The point ``k z`` for a positive integer ``k``."""
        if self.cm is not None:
            return UpperHalfPoint.from_cm(self.cm.scaled(k))
        return UpperHalfPoint(self.real, self.imag, None, self.scale * k)


# ---------------------------------------------------------------------------
# reduction
# ---------------------------------------------------------------------------

def _reduce_numeric(ctx, z, max_steps: int = 100000):
    """Reduce ``z`` into the fundamental domain; returns ``(z', g)`` with ``g z = z'``."""
    g = GroupElement.identity()
    eps = ctx.mpf(2) ** (-(ctx.prec - 8))
    for _ in range(max_steps):
        n = int(ctx.nint(ctx.re(z)))
        if n:
            z = z - n
            g = GroupElement.T(-n) @ g
        if abs(z) ** 2 < 1 - eps:
            z = -1 / z
            g = GroupElement.S() @ g
            continue
        return z, g
    raise PrecisionError("fundamental-domain reduction did not terminate",
                         achieved=float(abs(ctx.re(z)) - 0.5))


def _reduce_at(ctx, point: UpperHalfPoint):
    """Reduced value at the precision of ``ctx`` plus the exact transform."""
    if point.cm is not None:
        r, g = reduce(point.cm.form())
        return CMPoint(r.a, r.b, r.D).value(ctx), g
    z = point.value(ctx)
    if not ctx.im(z) > 0:
        raise DomainError("point is not in the upper half plane")
    return _reduce_numeric(ctx, z)


def reduce_to_fd(z: UpperHalfPoint, precision: PrecisionPolicy = DEFAULT_POLICY
                 ) -> tuple[UpperHalfPoint, GroupElement]:
    """Move ``z`` into ``|Re z'| <= 1/2``, ``|z'| >= 1``; returns ``(z', g)`` with ``g z = z'``."""
    ctx = make_context(precision.base_bits + precision.guard_bits)
    if z.cm is not None:
        r, g = reduce(z.cm.form())
        return UpperHalfPoint.from_cm(CMPoint(r.a, r.b, r.D)), g
    w, g = _reduce_at(ctx, z)
    return UpperHalfPoint(ctx.re(w), ctx.im(w)), g


def apply_transform(ctx, g: GroupElement, z):
    return (g.a * z + g.b) / (g.c * z + g.d)


# ---------------------------------------------------------------------------
# Dedekind sums and the eta multiplier
# ---------------------------------------------------------------------------

def dedekind_sum(d: int, c: int) -> Fraction:
    """Exact Dedekind sum ``s(d, c)`` for ``c > 0`` and ``gcd(c, d) = 1``, via reciprocity."""
    if c <= 0:
        raise DomainError("dedekind_sum needs c > 0")
    if math.gcd(c, d) != 1:
        raise DomainError(f"gcd({d}, {c}) != 1")
    total = Fraction(0)
    sign = 1
    while True:
        d %= c
        if d == 0:          # only possible for c == 1
            return total
        # s(d,c) = -s(c,d) - 1/4 + (c/d + d/c + 1/(cd))/12
        total += sign * (Fraction(-1, 4) + (Fraction(c, d) + Fraction(d, c) + Fraction(1, c * d)) / 12)
        sign = -sign
        c, d = d, c


def dedekind_sum_direct(d: int, c: int) -> Fraction:
    """The defining finite sum of ``((k/c)) ((kd/c))``; quadratic time."""
    def saw(x: Fraction) -> Fraction:
        if x.denominator == 1:
            return Fraction(0)
        return x - math.floor(x) - Fraction(1, 2)
    return sum((saw(Fraction(k, c)) * saw(Fraction(k * d, c)) for k in range(1, c)), Fraction(0))


def eta_multiplier(ctx, g: GroupElement, z):
    """The factor ``m`` with ``eta(g z) = m * eta(z)`` (root of unity times ``sqrt(-i(cz+d))``)."""
    if g.c < 0 or (g.c == 0 and g.d < 0):
        g = -g
    if g.c == 0:
        return ctx.expjpi(ctx.mpf(g.b) / 12)
    phase = Fraction(g.a + g.d, 12 * g.c) - dedekind_sum(g.d, g.c)
    root = ctx.expjpi(ctx.mpf(phase.numerator) / phase.denominator)
    return root * ctx.sqrt(-1j * (g.c * z + g.d))


# ---------------------------------------------------------------------------
# q-series at reduced points
# ---------------------------------------------------------------------------

def _eta_series(ctx, z):
    """``eta(z)`` by the pentagonal-number series; intended for ``Im z >= sqrt(3)/2``."""
    q = ctx.expjpi(2 * z)
    tol = ctx.mpf(2) ** (-ctx.prec - 4)
    total = ctx.mpc(1)
    k = 1
    while True:
        e1 = k * (3 * k - 1) // 2
        term = q ** e1 * (1 + q ** k)         # exponents k(3k-1)/2 and k(3k+1)/2
        total += -term if k % 2 else term
        if abs(q) ** e1 < tol:
            break
        k += 1
    return ctx.expjpi(z / 12) * total


def _e4_series(ctx, z):
    q = ctx.expjpi(2 * z)
    tol = ctx.mpf(2) ** (-ctx.prec - 4)
    total = ctx.mpc(0)
    qn = q
    n = 1
    while True:
        term = n ** 3 * qn / (1 - qn)
        total += term
        if abs(term) < tol:
            break
        n += 1
        qn *= q
    return 1 + 240 * total


def _eta_at(ctx, point: UpperHalfPoint):
    w, g = _reduce_at(ctx, point)
    gi = g.inverse()
    return eta_multiplier(ctx, gi, w) * _eta_series(ctx, w)


def _j_at(ctx, point: UpperHalfPoint):
    w, _ = _reduce_at(ctx, point)
    e4 = _e4_series(ctx, w)
    delta = _eta_series(ctx, w) ** 24
    return e4 ** 3 / delta


def adaptive(fn: Callable[[Any], Any], policy: PrecisionPolicy, extra_bits: int = 0,
             absolute: bool = False) -> Approx:
    """Evaluate ``fn(ctx)`` at doubling precisions until two runs agree to the target.

    The target is ``2^-base_bits``, relative to ``max(1, |value|)`` unless
    ``absolute`` is set.
    """
    prec = policy.base_bits + policy.guard_bits + max(0, int(extra_bits))
    prev = None
    err = None
    for _ in range(policy.max_doublings + 1):
        ctx = make_context(prec)
        v = fn(ctx)
        if prev is not None:
            scale = max(ctx.mpf(1), abs(v))
            err = abs(v - prev) + ctx.mpf(2) ** (-(prec - 8)) * scale
            target = ctx.mpf(2) ** (-policy.base_bits) * (1 if absolute else scale)
            if err <= target:
                return Approx(v, err)
        prev = v
        prec *= 2
    raise PrecisionError("working precision exhausted", achieved=float(err) if err is not None else None)


def _extra_bits(point: UpperHalfPoint) -> int:
    if point.cm is not None:
        return math.ceil(math.pi * math.sqrt(point.cm.D) / math.log(2))
    return 0


def eta(z: UpperHalfPoint, precision: PrecisionPolicy = DEFAULT_POLICY) -> Approx:
    return adaptive(lambda ctx: _eta_at(ctx, z), precision)


def j_invariant(z: UpperHalfPoint, precision: PrecisionPolicy = DEFAULT_POLICY) -> Approx:
    return adaptive(lambda ctx: _j_at(ctx, z), precision, _extra_bits(z))


def eval_function(spec: "FunctionSpec", z: UpperHalfPoint,
                  precision: PrecisionPolicy = DEFAULT_POLICY) -> Approx:
    """Value of the function described by ``spec`` at ``z``."""
    extra = _extra_bits(z) * max(1, spec.max_pole_order())
    return adaptive(lambda ctx: evaluate_spec(ctx, spec, z), precision, extra)


def evaluate_spec(ctx, spec: "FunctionSpec", z: UpperHalfPoint):
    """Single evaluation of ``spec`` at ``z`` in the working precision of ``ctx``."""
    cache: dict[tuple[str, int], Any] = {}

    def factor(kind: str, delta: int):
        key = (kind, delta)
        if key not in cache:
            point = z.scaled(delta) if delta != 1 else z
            cache[key] = _eta_at(ctx, point) if kind == "eta" else _j_at(ctx, point)
        return cache[key]

    total = ctx.mpc(0)
    for coeff, mono in spec.terms:
        term = ctx.mpf(coeff.numerator) / coeff.denominator
        for kind, delta, exp in mono:
            if kind == "eta":
                term *= factor("eta", delta) ** exp
            elif kind == "j":
                term *= factor("j", delta) ** exp
            else:
                term *= (factor("j", delta) - 744) ** exp
        total += term
    return total
