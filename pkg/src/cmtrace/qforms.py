"""Positive definite binary quadratic forms, their reduction, and class enumeration.

Forms carry the left action ``g.Q = Q o g^-1`` so that the CM point moves the
same way as the matrix acts on the upper half plane: ``alpha(g.Q) = g(alpha(Q))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

from .errors import DomainError, UnsupportedLevelError


@dataclass(frozen=True, order=True)
class GroupElement:
    """An element ``[[a, b], [c, d]]`` of SL2(Z)."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise DomainError(f"determinant of {self} is not 1")

    @classmethod
    def identity(cls) -> "GroupElement":
        return cls(1, 0, 0, 1)

    @classmethod
    def T(cls, k: int = 1) -> "GroupElement":
        return cls(1, k, 0, 1)

    @classmethod
    def S(cls) -> "GroupElement":
        return cls(0, -1, 1, 0)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.a * other.a + self.b * other.c,
                            self.a * other.b + self.b * other.d,
                            self.c * other.a + self.d * other.c,
                            self.c * other.b + self.d * other.d)

    def inverse(self) -> "GroupElement":
        return GroupElement(self.d, -self.b, -self.c, self.a)

    def __neg__(self) -> "GroupElement":
        return GroupElement(-self.a, -self.b, -self.c, -self.d)

    def in_gamma0(self, p: int) -> bool:
        return self.c % p == 0

    def is_scalar(self) -> bool:
        return self.b == 0 and self.c == 0

    def __str__(self) -> str:
        return f"[[{self.a},{self.b}],[{self.c},{self.d}]]"


@dataclass(frozen=True, order=True)
class QuadForm:
    """The form ``a x^2 + b x y + c y^2``; positive definite by construction."""

    a: int
    b: int
    c: int

    def __post_init__(self):
        if self.a <= 0 or self.discriminant >= 0:
            raise DomainError(f"{list(self)} is not positive definite")

    def __iter__(self) -> Iterator[int]:
        return iter((self.a, self.b, self.c))

    @property
    def discriminant(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    @property
    def D(self) -> int:
        """The positive integer ``D`` with discriminant ``-D``."""
        return -self.discriminant

    def __call__(self, x: int, y: int) -> int:
        return self.a * x * x + self.b * x * y + self.c * y * y

    def content(self) -> int:
        return math.gcd(self.a, self.b, self.c)

    def is_reduced(self) -> bool:
        a, b, c = self
        if not (-a < b <= a <= c):
            return False
        return not (a == c and b < 0)

    def compose(self, h: GroupElement) -> "QuadForm":
        """The form ``Q o h``, i.e. ``(x, y) -> Q(h (x, y))``."""
        a, b, c = self
        return QuadForm(self(h.a, h.c),
                        2 * a * h.a * h.b + b * (h.a * h.d + h.b * h.c) + 2 * c * h.c * h.d,
                        self(h.b, h.d))

    def act(self, g: GroupElement) -> "QuadForm":
        """Left action ``g.Q = Q o g^-1``; moves the CM point by ``g``."""
        return self.compose(g.inverse())

    def fricke(self, p: int) -> "QuadForm":
        """Image ``[p c, -b, a/p]`` under the Fricke involution; requires ``p | a``."""
        if self.a % p:
            raise DomainError(f"{list(self)} has leading coefficient prime to {p}")
        return QuadForm(p * self.c, -self.b, self.a // p)

    def __repr__(self) -> str:
        return f"[{self.a},{self.b},{self.c}]"


@dataclass(frozen=True)
class CMPoint:
    """The exact point ``(-b + i sqrt(D)) / (2a)`` of the upper half plane."""

    a: int
    b: int
    D: int

    def __post_init__(self):
        if self.a <= 0 or self.D <= 0:
            raise DomainError("CM point needs a > 0 and D > 0")

    def form(self) -> QuadForm:
        num = self.b * self.b + self.D
        if num % (4 * self.a):
            raise DomainError(f"{self} is not the root of an integral form")
        return QuadForm(self.a, self.b, num // (4 * self.a))

    def scaled(self, k: int) -> "CMPoint":
        """The point ``k * self`` for a positive integer ``k``."""
        return CMPoint(self.a, k * self.b, k * k * self.D)

    def value(self, ctx):
        """Numerical value in the mpmath context ``ctx``."""
        return ctx.mpc(-self.b, ctx.sqrt(self.D)) / (2 * self.a)


@dataclass(frozen=True)
class ClassRep:
    form: QuadForm
    stabilizer_order: int
    group: str = "SL2Z"
    fricke_fixed: bool = False

    def __post_init__(self):
        limit = 6 if self.group == "Gamma0pStar" else 3
        if not 1 <= self.stabilizer_order <= limit:
            raise DomainError(f"bad stabilizer order {self.stabilizer_order}")


def cm_point(form: QuadForm) -> CMPoint:
    return CMPoint(form.a, form.b, form.D)


def reduce(form: QuadForm) -> tuple[QuadForm, GroupElement]:
    """Gauss-reduce ``form``; returns ``(r, g)`` with ``g.form == r``."""
    g = GroupElement.identity()
    q = form
    while True:
        a, b, c = q
        # translate b into (-a, a]
        k = -((a - b) // (2 * a))
        if k:
            t = GroupElement.T(k)
            q, g = q.act(t), t @ g
            a, b, c = q
        if a > c or (a == c and b < 0):
            s = GroupElement.S()
            q, g = q.act(s), s @ g
            continue
        return q, g


def automorphs(form: QuadForm) -> list[GroupElement]:
    """Automorphs of a reduced form modulo ``+-1`` (one representative each)."""
    if not form.is_reduced():
        raise DomainError("automorphs() expects a reduced form")
    a, b, c = form
    out = [GroupElement.identity()]
    if b == 0 and a == c:
        out.append(GroupElement.S())
    elif a == b == c:
        out.append(GroupElement(0, -1, 1, 1))
        out.append(GroupElement(1, 1, -1, 0))
    return out


def _stabilizer_order(form: QuadForm, p: int) -> int:
    """Order of the stabilizer of ``form`` in Gamma0(p)/{+-1}."""
    r, g = reduce(form)
    gi = g.inverse()
    return sum(1 for u in automorphs(r) if (gi @ u @ g).in_gamma0(p))


def class_reps(D: int) -> list[ClassRep]:
    """One reduced form per SL2(Z)-class of discriminant ``-D`` (non-primitive forms included)."""
    if D <= 0 or D % 4 not in (0, 3):
        return []
    out = []
    amax = math.isqrt(D // 3)
    for a in range(1, amax + 1):
        for b in range(-a + 1, a + 1):
            num = b * b + D
            if num % (4 * a):
                continue
            c = num // (4 * a)
            q = QuadForm(a, b, c)
            if q.is_reduced():
                out.append(ClassRep(q, len(automorphs(q))))
    return out


def is_gamma0p_equivalent(f1: QuadForm, f2: QuadForm, p: int) -> bool:
    """Whether ``f2 = gamma.f1`` for some ``gamma`` in Gamma0(p)."""
    if f1.discriminant != f2.discriminant:
        raise DomainError("forms of different discriminant")
    r1, g1 = reduce(f1)
    r2, g2 = reduce(f2)
    if r1 != r2:
        return False
    g2i = g2.inverse()
    return any((g2i @ u @ g1).in_gamma0(p) for u in automorphs(r1))


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % k for k in range(2, math.isqrt(n) + 1))


def check_level(p: int) -> None:
    if p != 1 and not _is_prime(p):
        raise UnsupportedLevelError(f"level {p} is neither 1 nor prime")


def coset_reps(p: int) -> list[GroupElement]:
    """Representatives of Gamma0(p) \\ SL2(Z): the identity and ``S T^j``."""
    s = GroupElement.S()
    return [GroupElement.identity()] + [s @ GroupElement.T(j) for j in range(p)] if p > 1 \
        else [GroupElement.identity()]


def _small_rep(form: QuadForm) -> QuadForm:
    """Translate by ``T^k`` (in every Gamma0(p)) so that ``-a < b <= a``."""
    k = -((form.a - form.b) // (2 * form.a))
    return form.act(GroupElement.T(k)) if k else form


def class_reps_p(D: int, p: int, fricke: bool = False) -> list[ClassRep]:
    """Classes of forms of discriminant ``-D`` with ``p | a`` modulo Gamma0(p) or Gamma0*(p).

    With ``fricke=True`` the Gamma0(p)-classes are folded under ``W_p``; classes
    fixed by ``W_p`` are flagged and their stabilizer order doubled.
    """
    check_level(p)
    if p == 1:
        return class_reps(D)
    reps: list[ClassRep] = []
    for base in class_reps(D):
        for g in coset_reps(p):
            q = base.form.act(g)
            if q.a % p:
                continue
            q = _small_rep(q)
            if any(is_gamma0p_equivalent(q, r.form, p) for r in reps):
                continue
            reps.append(ClassRep(q, _stabilizer_order(q, p), "Gamma0p"))
    if not fricke:
        return reps
    folded: list[ClassRep] = []
    for rep in reps:
        w = rep.form.fricke(p)
        if any(is_gamma0p_equivalent(w, r.form, p) for r in folded):
            continue
        fixed = is_gamma0p_equivalent(w, rep.form, p)
        order = rep.stabilizer_order * (2 if fixed else 1)
        folded.append(ClassRep(rep.form, order, "Gamma0pStar", fixed))
    return folded


def forms_with_level(D: int, p: int) -> bool:
    """Whether ``-D`` is a square modulo ``4p`` (i.e. forms with ``p | a`` can exist)."""
    m = 4 * p
    return any((b * b + D) % m == 0 for b in range(m))
