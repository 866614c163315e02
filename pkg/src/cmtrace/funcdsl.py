"""Eta-quotient function descriptions and their exact expansions at the cusps.

Grammar (whitespace is insignificant)::

    expr     := ["+" | "-"] term (("+" | "-") term)*
    term     := factor ("*" factor)*
    factor   := "eta(" int ")" ["^" int]
              | ("j" | "J") ["(" int ")"] ["^" int]
              | rational
    rational := int ["/" int]

``eta(d)`` stands for ``eta(d z)``; ``j(d)`` for ``j(d z)`` and ``J = j - 744``.
The level is supplied separately (or inferred from the ``d`` arguments).
"""
from __future__ import annotations

import hashlib
import math
import re
import threading
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction

from .errors import InsufficientOrderError, SpecError, UnsupportedLevelError
from .qforms import check_level
from .series import LaurentSeries, eta_power_series, j_series

Factor = tuple[str, int, int]            # (kind, delta, exponent); kind in {"eta", "j", "J"}
Monomial = tuple[Factor, ...]
Term = tuple[Fraction, Monomial]

_KIND_ORDER = {"eta": 0, "j": 1, "J": 2}


@dataclass(frozen=True)
class FunctionSpec:
    """A rational combination of monomials in ``eta(d z)``, ``j(d z)`` and ``J(d z)``, ``d | level``.

    Terms are normalized: monomials merged, zero coefficients dropped, sorted.
    """

    level: int
    terms: tuple[Term, ...]

    @property
    def builtin(self) -> str | None:
        """``"const"``, ``"J"`` or ``"j"`` for the corresponding plain builtins, else None."""
        if not self.terms:
            return "const"
        if len(self.terms) == 1:
            coeff, mono = self.terms[0]
            if not mono:
                return "const"
            if coeff == 1 and len(mono) == 1 and mono[0][1:] == (1, 1) and mono[0][0] in "jJ":
                return mono[0][0]
        return None

    def is_constant(self) -> bool:
        return all(not mono for _, mono in self.terms)

    def constant_value(self) -> Fraction:
        return sum((c for c, mono in self.terms if not mono), Fraction(0))

    def has_eta(self) -> bool:
        return any(kind == "eta" for _, mono in self.terms for kind, _, _ in mono)

    def coefficient_lcm(self) -> int:
        return math.lcm(1, *(c.denominator for c, _ in self.terms))

    def canonical(self) -> str:
        """Canonical DSL text; parsing it at the same level gives back this spec."""
        if not self.terms:
            return "0"
        parts = []
        for coeff, mono in self.terms:
            factors = [_factor_text(f) for f in mono]
            if not factors:
                body = str(abs(coeff))
            elif abs(coeff) == 1:
                body = " * ".join(factors)
            else:
                body = " * ".join([str(abs(coeff))] + factors)
            sign = "-" if coeff < 0 else "+"
            parts.append((sign, body))
        first_sign, first = parts[0]
        text = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text

    def digest(self) -> str:
        return hashlib.sha256(f"{self.level}|{self.canonical()}".encode()).hexdigest()[:16]

    def __str__(self) -> str:
        return self.canonical()

    def __add__(self, other: "FunctionSpec") -> "FunctionSpec":
        _same_level(self, other)
        return _normalize(self.level, list(self.terms) + list(other.terms))

    def __sub__(self, other: "FunctionSpec") -> "FunctionSpec":
        return self + other.scale(-1)

    def scale(self, c) -> "FunctionSpec":
        c = Fraction(c)
        return _normalize(self.level, [(c * k, m) for k, m in self.terms])

    def __mul__(self, other: "FunctionSpec") -> "FunctionSpec":
        _same_level(self, other)
        out = []
        for c1, m1 in self.terms:
            for c2, m2 in other.terms:
                out.append((c1 * c2, _merge(m1 + m2)))
        return _normalize(self.level, out)

    def max_pole_order(self) -> int:
        """Largest pole order (in units of q) of the expansions at both cusps."""
        pair = cusp_expansions(self, 1)
        orders = [-e for e, _ in pair.at_infinity.principal_part() + pair.at_zero.principal_part()]
        return math.ceil(max(orders, default=0))


def _same_level(a: FunctionSpec, b: FunctionSpec) -> None:
    if a.level != b.level:
        raise SpecError(f"level mismatch: {a.level} vs {b.level}")


def _factor_text(f: Factor) -> str:
    kind, delta, exp = f
    if kind == "eta":
        return f"eta({delta})^{exp}"
    base = kind if delta == 1 else f"{kind}({delta})"
    return base if exp == 1 else f"{base}^{exp}"


def _merge(factors) -> Monomial:
    acc: dict[tuple[str, int], int] = defaultdict(int)
    for kind, delta, exp in factors:
        acc[(kind, delta)] += exp
    merged = [(k, d, e) for (k, d), e in acc.items() if e]
    return tuple(sorted(merged, key=lambda f: (_KIND_ORDER[f[0]], f[1])))


def _normalize(level: int, terms) -> FunctionSpec:
    acc: dict[Monomial, Fraction] = defaultdict(Fraction)
    for coeff, mono in terms:
        acc[_merge(mono)] += Fraction(coeff)
    out = [(c, m) for m, c in acc.items() if c]
    out.sort(key=lambda t: (len(t[1]), t[1]))
    return FunctionSpec(level, tuple(out))


def constant(c, level: int = 1) -> FunctionSpec:
    return _normalize(level, [(Fraction(c), ())])


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+)|(eta|j|J)|([-+*/^()]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise SpecError(f"unexpected character {text[pos:].lstrip()[:1]!r}",
                            len(text) - len(text[pos:].lstrip()))
        start = m.start(m.lastindex)
        if m.group(1):
            out.append(("int", m.group(1), start))
        elif m.group(2):
            out.append(("name", m.group(2), start))
        else:
            out.append(("op", m.group(3), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        tok = self.take()
        if tok[1] != value or tok[0] == "int":
            raise SpecError(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok[2])
        return tok

    def integer(self, signed: bool = False) -> int:
        sign = 1
        if signed and self.peek()[1] in "+-" and self.peek()[0] == "op":
            sign = -1 if self.take()[1] == "-" else 1
        tok = self.take()
        if tok[0] != "int":
            raise SpecError(f"expected an integer, found {tok[1] or 'end of input'!r}", tok[2])
        return sign * int(tok[1])

    def expr(self) -> list[Term]:
        terms = []
        sign = 1
        tok = self.peek()
        if tok[0] == "op" and tok[1] in "+-":
            self.take()
            sign = -1 if tok[1] == "-" else 1
        terms.append(self.term(sign))
        while True:
            tok = self.peek()
            if tok[0] == "end":
                return terms
            if tok[0] == "op" and tok[1] in "+-":
                self.take()
                terms.append(self.term(-1 if tok[1] == "-" else 1))
            else:
                raise SpecError(f"unexpected {tok[1]!r}", tok[2])

    def term(self, sign: int) -> Term:
        coeff = Fraction(sign)
        factors: list[Factor] = []
        while True:
            tok = self.peek()
            if tok[0] == "int":
                coeff *= self.rational()
            elif tok[0] == "name":
                factors.append(self.factor())
            else:
                raise SpecError(f"expected a factor, found {tok[1] or 'end of input'!r}", tok[2])
            if self.peek()[1] == "*" and self.peek()[0] == "op":
                self.take()
                continue
            return coeff, tuple(factors)

    def rational(self) -> Fraction:
        num = self.integer()
        if self.peek()[1] == "/" and self.peek()[0] == "op":
            tok = self.take()
            den = self.integer()
            if den == 0:
                raise SpecError("division by zero", tok[2])
            return Fraction(num, den)
        return Fraction(num)

    def factor(self) -> Factor:
        kind, name, pos = self.take()
        delta = 1
        if name == "eta":
            self.expect("(")
            delta = self.integer()
            self.expect(")")
        elif self.peek()[1] == "(":
            self.take()
            delta = self.integer()
            self.expect(")")
        if delta < 1:
            raise SpecError("the argument multiplier must be a positive integer", pos)
        exp = 1
        if self.peek()[1] == "^":
            self.take()
            exp = self.integer(signed=True)
        if name in "jJ" and exp < 0:
            raise SpecError(f"negative powers of {name} are not holomorphic on the upper half plane", pos)
        return name, delta, exp


def parse(text: str, level: int | None = None) -> FunctionSpec:
    """Parse DSL ``text`` into a normalized :class:`FunctionSpec`.

    Without ``level`` the level is inferred as the lcm of all arguments.
    """
    if not text or not text.strip():
        raise SpecError("empty function description", 0)
    terms = _Parser(text).expr()
    deltas = {d for _, mono in terms for _, d, _ in mono}
    if level is None:
        level = math.lcm(1, *deltas)
    try:
        check_level(level)
    except UnsupportedLevelError as exc:
        raise SpecError(str(exc)) from None
    for d in sorted(deltas):
        if level % d:
            raise SpecError(f"argument {d} does not divide the level {level}")
    spec = _normalize(level, terms)
    for _, mono in spec.terms:
        _check_monomial(mono, level)
    return spec


def _check_monomial(mono: Monomial, p: int) -> None:
    eta = [(d, r) for kind, d, r in mono if kind == "eta"]
    if not eta:
        return
    weight = sum(r for _, r in eta)
    if weight:
        raise SpecError(f"eta monomial {_text(mono)} has weight {Fraction(weight, 2)}, not 0")
    # conditions for an eta quotient to be a modular function on Gamma0(p)
    at_inf = sum(d * r for d, r in eta)
    at_zero = sum((p // d) * r for d, r in eta)
    square = Fraction(1)
    for d, r in eta:
        square *= Fraction(d) ** r
    if at_inf % 24 or at_zero % 24 or not _is_rational_square(square):
        raise SpecError(f"eta monomial {_text(mono)} is not a modular function on Gamma0({p})")


def _text(mono: Monomial) -> str:
    return " * ".join(_factor_text(f) for f in mono)


def _is_rational_square(x: Fraction) -> bool:
    return all(math.isqrt(v) ** 2 == v for v in (x.numerator, x.denominator)) and x > 0


def _rational_sqrt(x: Fraction) -> Fraction:
    if not _is_rational_square(x):
        raise SpecError(f"{x} has no rational square root; odd power of sqrt(p) in the Fricke image")
    return Fraction(math.isqrt(x.numerator), math.isqrt(x.denominator))


# ---------------------------------------------------------------------------
# Fricke involution
# ---------------------------------------------------------------------------

def fricke_action(spec: FunctionSpec) -> FunctionSpec:
    """The FunctionSpec of ``f | W_p``, ``W_p = [[0, -1], [p, 0]]``.

    ``eta(d z) -> sqrt(-i (p/d) z) eta((p/d) z)`` and ``j(d z) -> j((p/d) z)``;
    for weight 0 the ``z`` powers cancel and the constants form a rational square root.
    """
    p = spec.level
    out = []
    for coeff, mono in spec.terms:
        c2 = Fraction(1)          # square of the accumulated constant
        new = []
        for kind, d, r in mono:
            new.append((kind, p // d, r))
            if kind == "eta":
                c2 *= Fraction(p, d) ** r
        out.append((coeff * _rational_sqrt(c2), tuple(new)))
    return _normalize(p, out)


# ---------------------------------------------------------------------------
# q-expansions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CuspExpansionPair:
    """Expansions ``f(z) = sum a(n) q^n`` and ``f(-1/z) = sum b(n) q^n``, ``n`` in ``(1/p) Z``."""

    at_infinity: LaurentSeries
    at_zero: LaurentSeries

    def a(self, n) -> Fraction:
        return _checked(self.at_infinity, n)

    def b(self, n) -> Fraction:
        return _checked(self.at_zero, n)


def _checked(series: LaurentSeries, n) -> Fraction:
    n = Fraction(n)
    if n * series.den >= series.prec:
        raise InsufficientOrderError(
            f"coefficient of q^{n} requested but the expansion stops at q^{Fraction(series.prec, series.den)}")
    return series.coefficient(n)


class _ExpansionCache:
    """(spec, order) -> series; writers serialized by a lock, reads lock-free."""

    def __init__(self, maxsize: int = 512):
        self._data: dict = {}
        self._lock = threading.Lock()
        self.maxsize = maxsize

    def get(self, key):
        return self._data.get(key)

    def put(self, key, value):
        with self._lock:
            if len(self._data) >= self.maxsize:
                self._data.pop(next(iter(self._data)))
            self._data.setdefault(key, value)
        return self._data.get(key, value)


_CACHE = _ExpansionCache()


def _unit(kind: str, delta: int, exp: int, n: int) -> LaurentSeries:
    """Factor divided by its leading q-power, exact below ``q^n``."""
    if kind == "eta":
        return eta_power_series(exp, -(-n // delta) + 1).substitute_power(delta).truncate(n)
    js = j_series(-(-n // delta) + 1).shift(1)       # q j(q) = 1 + 744 q + ...
    if kind == "J":
        js = js - LaurentSeries.monomial(1, js.prec, 744)
    return (js.substitute_power(delta).truncate(n)) ** exp


def _leading_exponent(mono: Monomial) -> int:
    e = Fraction(0)
    for kind, d, r in mono:
        e += Fraction(d * r, 24) if kind == "eta" else -d * r
    if e.denominator != 1:
        raise SpecError(f"monomial {_text(mono)} has a fractional leading exponent {e}")
    return int(e)


def q_expansion_infinity(spec: FunctionSpec, order: int) -> LaurentSeries:
    """Exact ``a(n)`` for every exponent ``n < order``."""
    if order < 1:
        raise ValueError("order must be at least 1")
    key = ("inf", spec, order)
    hit = _CACHE.get(key)
    if hit is not None:
        return hit
    total = LaurentSeries({}, order)
    for coeff, mono in spec.terms:
        e = _leading_exponent(mono)
        n = order - e
        if n <= 0:
            continue
        prod = LaurentSeries.constant(1, n)
        for kind, d, r in mono:
            prod = prod * _unit(kind, d, r, n)
        total = total + prod.scale(coeff).shift(e).truncate(order)
    return _CACHE.put(key, total)


def q_expansion_zero(spec: FunctionSpec, order: int) -> LaurentSeries:
    """Exact ``b(n)``, ``n`` in ``(1/p) Z``, for every exponent ``n < order``.

    Uses ``f(-1/z) = (f|W_p)(z/p)``.
    """
    p = spec.level
    if p == 1:
        return q_expansion_infinity(spec, order)
    return q_expansion_infinity(fricke_action(spec), p * order).with_den(p)


def cusp_expansions(spec: FunctionSpec, order: int) -> CuspExpansionPair:
    return CuspExpansionPair(q_expansion_infinity(spec, order), q_expansion_zero(spec, order))


def principal_part(series: LaurentSeries) -> list[tuple[Fraction, Fraction]]:
    return series.principal_part()


def fricke_sign(spec: FunctionSpec) -> int:
    """+1 or -1 if ``f | W_p = +-f``, else 0.  Level 1 counts as +1."""
    if spec.level == 1:
        return 1
    w = fricke_action(spec)
    inf = q_expansion_infinity(spec, 1)
    winf = q_expansion_infinity(w, 1)
    poles = max([-e for e, _ in inf.principal_part()] + [-e for e, _ in winf.principal_part()],
                default=Fraction(0))
    # a nonzero function on X0(p) with these poles cannot vanish to this order at infinity
    order = 2 * math.ceil(poles) + 2
    f = q_expansion_infinity(spec, order)
    g = q_expansion_infinity(w, order)
    if f == g:
        return 1
    if f == -g:
        return -1
    return 0


def _sigma1(n) -> Fraction:
    from .traces import sigma1
    return sigma1(n)


def residue_identity(spec: FunctionSpec) -> tuple[Fraction, Fraction]:
    """Both sides of ``sum a(-n) w(n) = sum b(-n/p) w(n)`` with ``w(n) = sigma1(n) - p sigma1(n/p)``.

    They agree for every weakly holomorphic function on X0(p) (sum of residues
    of ``f E2``-type differentials).
    """
    p = spec.level
    pair = cusp_expansions(spec, 1)
    poles = [-e for e, _ in pair.at_infinity.principal_part()]
    poles += [-e * p for e, _ in pair.at_zero.principal_part()]
    top = math.floor(max(poles, default=Fraction(0)))
    lhs = rhs = Fraction(0)
    for n in range(top + 1):
        w = _sigma1(n) - p * _sigma1(Fraction(n, p))
        lhs += pair.a(-n) * w
        rhs += pair.b(Fraction(-n, p)) * w
    return lhs, rhs


def hauptmodul(p: int) -> FunctionSpec:
    """``(eta(z)/eta(pz))^(24/(p-1))`` for ``p in {2, 3, 5, 7, 13}`` (genus-zero prime levels)."""
    if p not in (2, 3, 5, 7, 13):
        raise UnsupportedLevelError(f"no eta-quotient Hauptmodul at level {p}")
    k = 24 // (p - 1)
    return parse(f"eta(1)^{k} * eta({p})^-{k}", p)


def eta_corpus(p: int) -> list[FunctionSpec]:
    """A handful of weight-0 functions on X0(p) with poles at both cusps."""
    t = hauptmodul(p)
    w = fricke_action(t)
    one = constant(1, p)
    return [t, w, t * t, t + w, t * t - w.scale(3) + one.scale(7), w * w + t.scale(Fraction(1, 2)),
            t + parse(f"J + J({p})", p)]
