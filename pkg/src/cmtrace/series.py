"""Exact truncated Laurent series in a fractional power of q.

A :class:`LaurentSeries` stores ``sum c(n) q^(n/den)`` for ``n < prec`` with
exact :class:`~fractions.Fraction` coefficients.  Everything the q-expansion
engine needs lives here: ring operations, powers (including negative ones),
rescaling ``q -> q^k``, and the product/Eisenstein building blocks used for
eta quotients and the j-invariant.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Union

Number = Union[int, Fraction]


def _frac(x: Number) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


class LaurentSeries:
    """Immutable truncated Laurent series ``sum_{n >= val} c[n-val] q^(n/den) + O(q^(prec/den))``.

    Exponents are kept as integers in units of ``1/den``.  The truncation
    ``prec`` is strictly greater than every stored exponent.
    """

    __slots__ = ("den", "val", "coeffs", "prec")

    def __init__(self, coeffs: Mapping[int, Number] | Iterable[Number], prec: int,
                 den: int = 1, val: int | None = None):
        if den < 1:
            raise ValueError("den must be a positive integer")
        if isinstance(coeffs, Mapping):
            items = {int(n): _frac(c) for n, c in coeffs.items() if c}
            if val is None:
                val = min(items, default=prec)
            length = max(prec - val, 0)
            dense = [Fraction(0)] * length
            for n, c in items.items():
                if n >= prec:
                    raise ValueError(f"exponent {n} is not below the truncation {prec}")
                if n < val:
                    raise ValueError(f"exponent {n} is below the stated valuation {val}")
                dense[n - val] = c
        else:
            if val is None:
                raise ValueError("dense coefficients need an explicit starting exponent")
            dense = [_frac(c) for c in coeffs][: max(prec - val, 0)]
            if val + len(dense) > prec:
                raise ValueError("more coefficients than the truncation allows")
        # strip leading zeros so that val is the true valuation
        k = 0
        while k < len(dense) and dense[k] == 0:
            k += 1
        self.den = den
        self.val = min(val + k, prec)
        self.coeffs = tuple(dense[k:] + [Fraction(0)] * (prec - val - len(dense)))
        self.prec = prec

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, c: Number, prec: int, den: int = 1) -> "LaurentSeries":
        return cls({0: c}, prec, den)

    @classmethod
    def monomial(cls, exponent: int, prec: int, c: Number = 1, den: int = 1) -> "LaurentSeries":
        return cls({exponent: c}, prec, den)

    # -- access -----------------------------------------------------------
    def __getitem__(self, n: int) -> Fraction:
        """Coefficient of ``q^(n/den)``; raises if ``n`` lies beyond the truncation."""
        if n >= self.prec:
            raise IndexError(f"coefficient {n} is beyond the truncation {self.prec}")
        if n < self.val:
            return Fraction(0)
        return self.coeffs[n - self.val]

    def coefficient(self, exponent: Fraction | int) -> Fraction:
        """Coefficient of ``q^exponent`` for a rational exponent; zero off the lattice."""
        e = _frac(exponent) * self.den
        if e.denominator != 1:
            return Fraction(0)
        return self[int(e)]

    def items(self) -> Iterator[tuple[int, Fraction]]:
        for i, c in enumerate(self.coeffs):
            if c:
                yield self.val + i, c

    def to_dict(self) -> dict[int, Fraction]:
        return dict(self.items())

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def valuation(self) -> int:
        return self.val

    def principal_part(self) -> list[tuple[Fraction, Fraction]]:
        """All ``(exponent, coefficient)`` pairs with negative exponent and nonzero coefficient."""
        return [(Fraction(n, self.den), c) for n, c in self.items() if n < 0]

    # -- lattice changes --------------------------------------------------
    def rebase(self, den: int) -> "LaurentSeries":
        """Same series written over the finer lattice ``q^(1/den)``."""
        if den % self.den:
            raise ValueError(f"cannot rebase from 1/{self.den} to 1/{den}")
        k = den // self.den
        return LaurentSeries({n * k: c for n, c in self.items()}, self.prec * k, den)

    def substitute_power(self, k: int) -> "LaurentSeries":
        """The series in ``q^k`` (i.e. ``f(kz)`` for a q-expansion ``f(z)``)."""
        if k < 1:
            raise ValueError("k must be positive")
        return LaurentSeries({n * k: c for n, c in self.items()}, self.prec * k, self.den)

    def with_den(self, den: int) -> "LaurentSeries":
        """Reinterpret the exponent unit: ``q^(n/self.den)`` becomes ``q^(n/den)``."""
        return LaurentSeries(self.to_dict(), self.prec, den)

    def shift(self, n: int) -> "LaurentSeries":
        """Multiply by ``q^(n/den)``."""
        return LaurentSeries(self.coeffs, self.prec + n, self.den, self.val + n)

    def truncate(self, prec: int) -> "LaurentSeries":
        if prec > self.prec:
            raise ValueError("cannot raise the truncation of a series")
        return LaurentSeries({n: c for n, c in self.items() if n < prec}, prec, self.den,
                             val=min(self.val, prec))

    def _align(self, other: "LaurentSeries") -> tuple["LaurentSeries", "LaurentSeries"]:
        if self.den == other.den:
            return self, other
        den = math.lcm(self.den, other.den)
        return self.rebase(den), other.rebase(den)

    # -- ring operations --------------------------------------------------
    def __neg__(self) -> "LaurentSeries":
        return LaurentSeries([-c for c in self.coeffs], self.prec, self.den, self.val)

    def __add__(self, other: "LaurentSeries | Number") -> "LaurentSeries":
        if not isinstance(other, LaurentSeries):
            other = LaurentSeries.constant(other, self.prec, self.den)
        a, b = self._align(other)
        prec = min(a.prec, b.prec)
        out: dict[int, Fraction] = {}
        for n, c in a.items():
            if n < prec:
                out[n] = c
        for n, c in b.items():
            if n < prec:
                out[n] = out.get(n, Fraction(0)) + c
        return LaurentSeries(out, prec, a.den, val=min(a.val, b.val, prec))

    __radd__ = __add__

    def __sub__(self, other: "LaurentSeries | Number") -> "LaurentSeries":
        return self + (-other)

    def __rsub__(self, other: Number) -> "LaurentSeries":
        return (-self) + other

    def scale(self, c: Number) -> "LaurentSeries":
        c = _frac(c)
        if c == 0:
            return LaurentSeries({}, self.prec, self.den)
        return LaurentSeries([c * x for x in self.coeffs], self.prec, self.den, self.val)

    def __mul__(self, other: "LaurentSeries | Number") -> "LaurentSeries":
        if not isinstance(other, LaurentSeries):
            return self.scale(other)
        a, b = self._align(other)
        if a.is_zero() or b.is_zero():
            prec = min(a.prec + b.val, b.prec + a.val)
            return LaurentSeries({}, prec, a.den)
        val = a.val + b.val
        prec = min(a.prec + b.val, b.prec + a.val)
        length = prec - val
        out = [Fraction(0)] * length
        bc = b.coeffs
        for i, x in enumerate(a.coeffs[:length]):
            if not x:
                continue
            for j in range(min(len(bc), length - i)):
                y = bc[j]
                if y:
                    out[i + j] += x * y
        return LaurentSeries(out, prec, a.den, val)

    __rmul__ = __mul__

    def inverse(self) -> "LaurentSeries":
        if self.is_zero():
            raise ZeroDivisionError("series is zero to the known precision")
        c0 = self.coeffs[0]
        rel = self.prec - self.val
        inv = [Fraction(0)] * rel
        inv[0] = 1 / c0
        for n in range(1, rel):
            s = Fraction(0)
            for k in range(1, n + 1):
                if self.coeffs[k]:
                    s += self.coeffs[k] * inv[n - k]
            inv[n] = -s / c0
        return LaurentSeries(inv, -self.val + rel, self.den, -self.val)

    def __truediv__(self, other: "LaurentSeries | Number") -> "LaurentSeries":
        if isinstance(other, LaurentSeries):
            return self * other.inverse()
        return self.scale(1 / _frac(other))

    def __pow__(self, k: int) -> "LaurentSeries":
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        result = LaurentSeries.constant(1, self.prec - self.val, self.den) if k == 0 else None
        if k == 0:
            return result
        base, acc = self, None
        while k:
            if k & 1:
                acc = base if acc is None else acc * base
            k >>= 1
            if k:
                base = base * base
        return acc

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        a, b = self._align(other)
        return a.prec == b.prec and a.to_dict() == b.to_dict()

    def __hash__(self) -> int:
        return hash((self.den, self.prec, tuple(self.items())))

    def agrees_with(self, other: "LaurentSeries") -> bool:
        """Equality up to the smaller of the two truncations."""
        a, b = self._align(other)
        prec = min(a.prec, b.prec)
        return a.truncate(prec) == b.truncate(prec)

    def __repr__(self) -> str:
        terms = []
        for n, c in self.items():
            e = Fraction(n, self.den)
            terms.append(f"{c}*q^{e}" if e else f"{c}")
        body = " + ".join(terms) if terms else "0"
        return f"LaurentSeries({body} + O(q^{Fraction(self.prec, self.den)}))"

    # -- numerics ---------------------------------------------------------
    def evaluate(self, z, ctx):
        """Evaluate the truncated sum at ``z`` in the upper half plane using mpmath context ``ctx``."""
        z = ctx.mpc(z)
        qd = ctx.expjpi(2 * z / self.den)
        total = ctx.mpc(0)
        for n, c in self.items():
            total += ctx.mpf(c.numerator) / c.denominator * qd ** n
        return total

    def tail_bound(self, z, ctx, growth: float = 24.0):
        """Crude bound for the omitted tail, assuming |c(n)| <= exp(growth*sqrt(n+1))."""
        y = ctx.im(ctx.mpc(z))
        r = ctx.exp(-2 * ctx.pi * y / self.den)
        n0 = self.prec
        bound = ctx.mpf(0)
        for n in range(n0, n0 + 4000):
            term = ctx.exp(growth * ctx.sqrt(abs(n) / self.den + 1)) * r ** n
            bound += term
            if n > n0 + 10 and term < bound * ctx.mpf(2) ** (-ctx.prec):
                break
        return bound


# -- product and Eisenstein engines -------------------------------------

@lru_cache(maxsize=None)
def _pentagonal(n_terms: int) -> tuple[int, ...]:
    """Coefficients of prod_{n>=1} (1 - q^n) below q^n_terms (Euler's pentagonal theorem)."""
    e = [0] * n_terms
    k = 0
    while True:
        done = True
        for m in (k, -k) if k else (0,):
            g = m * (3 * m - 1) // 2
            if g < n_terms:
                e[g] = -1 if m % 2 else 1
                done = False
        if done:
            break
        k += 1
    return tuple(e)


@lru_cache(maxsize=256)
def euler_product_power(r: int, n_terms: int) -> tuple[int, ...]:
    """Integer coefficients of ``prod_{n>=1} (1 - q^n)^r`` below ``q^n_terms``.

    Uses the logarithmic-derivative recurrence on the sparse pentagonal series,
    so each coefficient costs O(sqrt(n)) operations.
    """
    if n_terms <= 0:
        return ()
    e = _pentagonal(n_terms)
    support = [k for k in range(1, n_terms) if e[k]]
    p = [0] * n_terms
    p[0] = 1
    for n in range(1, n_terms):
        s = 0
        for k in support:
            if k > n:
                break
            s += (k * (r + 1) - n) * e[k] * p[n - k]
        q, rem = divmod(s, n)
        if rem:
            raise ArithmeticError("non-integral coefficient in an Euler product power")
        p[n] = q
    return tuple(p)


def eta_power_series(r: int, n_terms: int) -> LaurentSeries:
    """``prod (1 - q^n)^r`` as a LaurentSeries (no ``q^(r/24)`` prefactor)."""
    return LaurentSeries(euler_product_power(r, n_terms), n_terms, 1, 0)


def sigma(k: int, n: int) -> int:
    return sum(d ** k for d in divisors(n))


def divisors(n: int) -> list[int]:
    small, large = [], []
    d = 1
    while d * d <= n:
        if n % d == 0:
            small.append(d)
            if d * d != n:
                large.append(n // d)
        d += 1
    return small + large[::-1]


def eisenstein_series(k: int, n_terms: int) -> LaurentSeries:
    """Normalized ``E_4`` or ``E_6`` (constant term 1) below ``q^n_terms``."""
    factor = {4: 240, 6: -504}[k]
    coeffs = [1] + [factor * sigma(k - 1, n) for n in range(1, n_terms)]
    return LaurentSeries(coeffs[:n_terms], n_terms, 1, 0)


@lru_cache(maxsize=64)
def j_series(order: int) -> LaurentSeries:
    """``j(z) = q^-1 + 744 + 196884 q + ...`` with all exponents below ``order`` exact."""
    n = max(order + 1, 1)
    e4 = eisenstein_series(4, n + 1)
    delta_unit = eta_power_series(24, n + 1)      # Delta = q * delta_unit
    return (e4 ** 3 / delta_unit).shift(-1).truncate(order)
