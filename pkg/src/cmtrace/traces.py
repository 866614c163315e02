"""Modular traces of every index and the weight 3/2 generating series.

Two normalizations are supported:

``"I0"``
    The h = 0 component of the theta lift on Gamma0(p): positive traces weight
    each Gamma0(p)-class by ``2/|Gamma0(p)_Q|``.
``"G"``
    Zagier-type series for functions invariant under Gamma0*(p): positive
    traces weight each Gamma0*(p)-class by ``1/|Gamma0*(p)_Q|``.  Equals
    ``I0 / 4`` for prime ``p`` and ``I0 / 2`` for ``p = 1``.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

import mpmath

from .errors import DomainError, InsufficientOrderError, SpecError
from .etafun import DEFAULT_POLICY, PrecisionPolicy, UpperHalfPoint, adaptive, evaluate_spec, exact_fraction, portable
from .funcdsl import CuspExpansionPair, FunctionSpec, cusp_expansions, fricke_sign
from .qforms import check_level, class_reps_p, cm_point

NORMALIZATIONS = ("G", "I0")
ROUNDING_TOLERANCE = Fraction(1, 10**6)


@dataclass(frozen=True)
class CuspData:
    label: str
    alpha: Fraction
    beta: Fraction
    opposite: str        # cusp attached to -X when X is attached to this one

    @property
    def epsilon(self) -> Fraction:
        return self.alpha / self.beta


def cusp_data(p: int) -> list[CuspData]:
    """Width data for the cusps of Gamma0(p) with the lattice of discriminant-``-D`` forms."""
    check_level(p)
    inf = CuspData("infinity", Fraction(1), Fraction(2), "infinity" if p == 1 else "zero")
    if p == 1:
        return [inf]
    return [inf, CuspData("zero", Fraction(p), Fraction(2 * p), "infinity")]


@dataclass(frozen=True)
class TraceRecord:
    index: Fraction
    kind: str                                   # "positive", "zero" or "negative"
    value_exact: Fraction | None = None
    value_numeric: Any = None                   # mpf
    error: Any = None                           # mpf absolute bound
    rounded: Fraction | None = None
    certified: bool = True

    @property
    def value(self) -> Fraction:
        """Exact value, or the rounded rational for numerical records."""
        return self.value_exact if self.value_exact is not None else self.rounded


@dataclass(frozen=True)
class NonHoloTerm:
    """The term ``scalar / (pi sqrt(v)) * shape(v) * q^index``.

    ``shape`` is ``1`` for ``kind == "inverse_sqrt_v"`` and ``beta(4 pi v m^2)``
    for ``kind == "beta"`` (index ``-m^2``).  ``per_sign`` is the share of each
    of the two lattice vectors ``N = +-m``.
    """

    index: int
    kind: str
    scalar: Fraction
    m: int = 0

    @property
    def per_sign(self) -> Fraction:
        return self.scalar / 2 if self.kind == "beta" else self.scalar

    def evaluate(self, v, ctx=None):
        ctx = ctx or mpmath.mp
        v = ctx.mpf(v)
        if v <= 0:
            raise DomainError("v must be positive")
        value = ctx.mpf(self.scalar.numerator) / self.scalar.denominator / (ctx.pi * ctx.sqrt(v))
        if self.kind == "beta":
            value *= beta_function(4 * ctx.pi * v * self.m ** 2, ctx)
        return value


@dataclass
class GeneratingSeries:
    level: int
    spec: FunctionSpec
    normalization: str
    dmax: int
    table: dict[Fraction, TraceRecord] = field(default_factory=dict)
    nonholo: list[NonHoloTerm] = field(default_factory=list)
    violations: list[Fraction] = field(default_factory=list)

    def coefficient(self, n) -> Fraction:
        rec = self.table.get(Fraction(n))
        return Fraction(0) if rec is None else rec.value

    def nonzero(self) -> dict[Fraction, Fraction]:
        return {n: r.value for n, r in sorted(self.table.items()) if r.value}


# ---------------------------------------------------------------------------
# elementary pieces
# ---------------------------------------------------------------------------

def sigma1(n) -> Fraction:
    """Divisor sum with ``sigma1(0) = -1/24`` and zero off the non-negative integers."""
    n = Fraction(n)
    if n.denominator != 1 or n < 0:
        return Fraction(0)
    n = int(n)
    if n == 0:
        return Fraction(-1, 24)
    total = 0
    d = 1
    while d * d <= n:
        if n % d == 0:
            total += d + (n // d if d * d != n else 0)
        d += 1
    return Fraction(total)


def beta_function(s, ctx=None):
    """``beta(s) = int_1^oo t^(-3/2) e^(-s t) dt = 2 (e^-s - sqrt(pi s) erfc(sqrt s))``."""
    ctx = ctx or mpmath.mp
    s = ctx.mpf(s)
    if s < 0:
        raise DomainError("beta(s) needs s >= 0")
    if s == 0:
        return ctx.mpf(2)
    # the difference loses about log2(2s) bits to cancellation
    guard = 20 + 2 * int(ctx.log(s + 2, 2))
    with ctx.extraprec(guard):
        r = ctx.sqrt(s)
        val = 2 * (ctx.exp(-s) - ctx.sqrt(ctx.pi) * r * ctx.erfc(r))
    return +val


def beta_quadrature(s, ctx=None):
    """Direct numerical quadrature of the defining integral (independent check).

    For ``s >= 1`` substitute ``t = 1 + u/s``; the integrand then decays at a fixed rate.
    For small ``s`` substitute ``t = e^x``, which turns the slow power-law tail into
    ``e^(-x/2)`` and puts the exponential cut-off near ``x = -log s``.
    """
    ctx = ctx or mpmath.mp
    s = ctx.mpf(s)
    if s < 0:
        raise DomainError("beta(s) needs s >= 0")
    with ctx.extraprec(30):
        if s == 0:
            val = ctx.quad(lambda t: t ** ctx.mpf(-1.5), [1, ctx.inf])
        elif s < 1:
            cut = -ctx.log(s)
            # beyond cut + 8 the integrand is below exp(-e^8) and is dropped
            pts = [0] + [x for x in (cut - 4, cut, cut + 4) if x > 0] + [cut + 8]
            val = ctx.quad(lambda x: ctx.exp(-x / 2 - s * ctx.exp(x)), pts)
        else:
            f = lambda u: (1 + u / s) ** ctx.mpf(-1.5) * ctx.exp(-u)  # noqa: E731
            val = ctx.exp(-s) / s * ctx.quad(f, [0, 1, 4, 16, ctx.inf])
    return +val


def _check_normalization(normalization: str) -> None:
    if normalization not in NORMALIZATIONS:
        raise DomainError(f"normalization must be one of {NORMALIZATIONS}")


def _require_plus(spec: FunctionSpec, p: int, normalization: str) -> None:
    if normalization == "G" and p > 1 and fricke_sign(spec) != 1:
        raise SpecError("the G normalization needs a function invariant under the Fricke involution")


def _norm_factor(p: int, normalization: str) -> Fraction:
    """Factor turning I0 coefficients into the requested normalization."""
    if normalization == "I0":
        return Fraction(1)
    return Fraction(1, 2) if p == 1 else Fraction(1, 4)


def _expansions(spec: FunctionSpec, p: int, expansions: CuspExpansionPair | None) -> CuspExpansionPair:
    if spec.level != p:
        raise SpecError(f"function has level {spec.level}, requested {p}")
    if expansions is None:
        expansions = cusp_expansions(spec, 1)
    for s in (expansions.at_infinity, expansions.at_zero):
        if s.prec < 1:
            raise InsufficientOrderError("expansions must include the constant term")
    return expansions


def _cusp_series(pair: CuspExpansionPair, label: str):
    return pair.at_infinity if label == "infinity" else pair.at_zero


# ---------------------------------------------------------------------------
# traces
# ---------------------------------------------------------------------------

def _weighted_reps(p: int, D: int, normalization: str):
    """``(form, weight)`` pairs for the positive trace of index ``D``."""
    if normalization == "I0":
        return [(r.form, Fraction(2, r.stabilizer_order)) for r in class_reps_p(D, p, fricke=False)]
    return [(r.form, Fraction(1, r.stabilizer_order)) for r in class_reps_p(D, p, fricke=True)]


def rounding_denominator(spec: FunctionSpec) -> int:
    return 12 * spec.coefficient_lcm()


def trace_positive(spec: FunctionSpec, p: int, D: int, policy: PrecisionPolicy = DEFAULT_POLICY,
                   normalization: str = "G") -> TraceRecord:
    """Stabilizer-weighted sum of ``f`` over the CM points of discriminant ``-D``."""
    _check_normalization(normalization)
    if D <= 0:
        raise DomainError("positive traces need D > 0")
    if spec.level != p:
        raise SpecError(f"function has level {spec.level}, requested {p}")
    _require_plus(spec, p, normalization)
    reps = _weighted_reps(p, D, normalization)
    if not reps:
        return TraceRecord(Fraction(D), "positive", value_numeric=mpmath.mpf(0), error=mpmath.mpf(0),
                           rounded=Fraction(0))
    points = [UpperHalfPoint.from_cm(cm_point(q)) for q, _ in reps]

    def total(ctx):
        acc = ctx.mpc(0)
        for (_, w), z in zip(reps, points):
            acc += ctx.mpf(w.numerator) / w.denominator * evaluate_spec(ctx, spec, z)
        return acc

    extra = math.ceil(math.pi * math.sqrt(D) * max(1, spec.max_pole_order()) / math.log(2))
    approx = adaptive(total, policy, extra, absolute=True)
    value = portable(approx.value.real)
    err = portable(approx.error + abs(approx.value.imag))
    den = rounding_denominator(spec)
    exact = exact_fraction(value)
    rounded = Fraction(round(exact * den), den)
    bound = exact_fraction(err)
    distance = abs(exact - rounded)
    certified = bound < Fraction(1, 2 * den) and distance <= max(bound, ROUNDING_TOLERANCE)
    return TraceRecord(Fraction(D), "positive", value_numeric=value, error=err,
                       rounded=rounded, certified=certified)


def trace_zero(spec: FunctionSpec, p: int, normalization: str = "G",
               expansions: CuspExpansionPair | None = None) -> TraceRecord:
    """Exact constant coefficient.

    I0: ``2 sum_n (a(-n) + b(-n/p)) (sigma1(n) + p sigma1(n/p))`` for prime
    ``p`` and ``4 sum_n a(-n) sigma1(n)`` for ``p = 1``.
    """
    _check_normalization(normalization)
    _require_plus(spec, p, normalization)
    pair = _expansions(spec, p, expansions)
    if p == 1:
        total = 4 * sum((pair.a(-n) * sigma1(n) for n in _pole_range(pair.at_infinity)), Fraction(0))
    else:
        total = Fraction(0)
        for n in _pole_range(pair.at_infinity, pair.at_zero, p):
            total += (pair.a(-n) + pair.b(Fraction(-n, p))) * (sigma1(n) + p * sigma1(Fraction(n, p)))
        total *= 2
    return TraceRecord(Fraction(0), "zero", value_exact=total * _norm_factor(p, normalization))


def _pole_range(inf, zero=None, p: int = 1) -> range:
    """``n = 0 .. N`` covering every nonzero ``a(-n)`` (and ``b(-n/p)``)."""
    top = max([-e for e, _ in inf.principal_part()], default=Fraction(0))
    if zero is not None:
        top = max([top] + [-e * p for e, _ in zero.principal_part()])
    return range(0, math.floor(top) + 1)


def trace_negative(spec: FunctionSpec, p: int, m: int, normalization: str = "G",
                   expansions: CuspExpansionPair | None = None) -> TraceRecord:
    """Exact coefficient of ``q^(-m^2)``.

    Sums, over the cusps, ``nu = 2 m eps`` geodesic classes each contributing
    ``-sum_k a_l(-2 m k / beta_l)`` (real-part offsets are 0 here), once for
    ``h`` and once for ``-h``.
    """
    _check_normalization(normalization)
    if m <= 0:
        raise DomainError("m must be positive")
    _require_plus(spec, p, normalization)
    pair = _expansions(spec, p, expansions)
    total = Fraction(0)
    for cusp in cusp_data(p):
        series = _cusp_series(pair, cusp.label)
        nu = 2 * m * cusp.epsilon
        if nu.denominator != 1:
            raise DomainError(f"non-integral geodesic count at cusp {cusp.label}")
        step = Fraction(2 * m) / cusp.beta
        inner = Fraction(0)
        k = 1
        while -k * step * series.den >= series.val:
            inner += series.coefficient(-k * step)
            k += 1
        total += -2 * nu * inner          # contributions of h and -h coincide for h = 0
    return TraceRecord(Fraction(-m * m), "negative", value_exact=total * _norm_factor(p, normalization))


def nonholo_terms(spec: FunctionSpec, p: int, mmax: int, normalization: str = "I0",
                  expansions: CuspExpansionPair | None = None) -> list[NonHoloTerm]:
    """Symbolic non-holomorphic terms for indices ``0`` and ``-m^2``, ``1 <= m <= mmax``."""
    _check_normalization(normalization)
    pair = _expansions(spec, p, expansions)
    cusps = cusp_data(p)
    const = {c.label: _cusp_series(pair, c.label)[0] for c in cusps}
    if not any(const.values()):
        return []
    factor = _norm_factor(p, normalization)
    out = []
    # 1/(2 pi sqrt v) * sum_l a_l(0) eps_l
    scalar = sum((const[c.label] * c.epsilon for c in cusps), Fraction(0)) / 2
    if scalar:
        out.append(NonHoloTerm(0, "inverse_sqrt_v", scalar * factor))
    # per geodesic class: (a_lX(0) + a_l-X(0)) / (8 pi sqrt(v) m) * beta(4 pi v m^2); nu_l = 2 m eps_l classes
    for m in range(1, mmax + 1):
        s = Fraction(0)
        for c in cusps:
            nu = 2 * m * c.epsilon
            s += nu * (const[c.label] + const[c.opposite]) / (8 * m)
        if s:
            out.append(NonHoloTerm(-m * m, "beta", s * factor, m))
    return out


def regularized_average(spec: FunctionSpec, p: int,
                        expansions: CuspExpansionPair | None = None) -> tuple[Fraction, Fraction]:
    """``(c, t)`` with regularized integral ``c * pi`` and ``t = -c / 2`` the resulting zero trace.

    ``c = -8 sum_l alpha_l sum_{n >= 0} a_l(-n) sigma1(n)``.
    """
    pair = _expansions(spec, p, expansions)
    total = Fraction(0)
    for cusp in cusp_data(p):
        series = _cusp_series(pair, cusp.label)
        inner = Fraction(0)
        n = 0
        while -n * series.den >= series.val:
            inner += series.coefficient(-n) * sigma1(n)
            n += 1
        total += cusp.alpha * inner
    c = -8 * total
    return c, -c / 2


# ---------------------------------------------------------------------------
# the generating series
# ---------------------------------------------------------------------------

def _positive_task(args):
    spec, p, D, policy, normalization = args
    return trace_positive(spec, p, D, policy, normalization)


def positive_traces(spec: FunctionSpec, p: int, Ds: Sequence[int], policy: PrecisionPolicy = DEFAULT_POLICY,
                    normalization: str = "G", jobs: int = 1) -> list[TraceRecord]:
    """Positive traces for several ``D``; fans out over ``jobs`` worker processes."""
    tasks = [(spec, p, D, policy, normalization) for D in Ds]
    if jobs <= 1 or len(tasks) <= 1:
        return [_positive_task(t) for t in tasks]
    # pure per-D tasks; expansions are recomputed (cheaply) per worker
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_positive_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def generating_series(spec: FunctionSpec, p: int, dmax: int, normalization: str = "G",
                      policy: PrecisionPolicy = DEFAULT_POLICY, jobs: int = 1,
                      positive: Iterable[TraceRecord] | None = None) -> GeneratingSeries:
    """Coefficients of indices ``-m^2`` (``m^2 <= dmax``) through ``dmax``.

    ``positive`` may supply precomputed positive records (e.g. from a cache).
    """
    _check_normalization(normalization)
    if dmax < 1:
        raise DomainError("dmax must be at least 1")
    check_level(p)
    _require_plus(spec, p, normalization)
    pair = _expansions(spec, p, None)
    out = GeneratingSeries(p, spec, normalization, dmax)
    mmax = math.isqrt(dmax)
    for m in range(mmax, 0, -1):
        rec = trace_negative(spec, p, m, normalization, pair)
        out.table[rec.index] = rec
    out.table[Fraction(0)] = trace_zero(spec, p, normalization, pair)
    if positive is None:
        positive = positive_traces(spec, p, range(1, dmax + 1), policy, normalization, jobs)
    for rec in positive:
        out.table[rec.index] = rec
    out.nonholo = nonholo_terms(spec, p, mmax, normalization, pair)
    out.violations = plus_space_check(out)
    return out


def is_square_mod(n: int, m: int) -> bool:
    n %= m
    return any((x * x - n) % m == 0 for x in range(m))


def plus_space_check(series: GeneratingSeries, tolerance=ROUNDING_TOLERANCE) -> list[Fraction]:
    """Indices whose coefficient breaks the plus-space condition ``-n = square mod 4p``.

    Positive records are also flagged when their rounding is not trustworthy.
    """
    mod = 4 * series.level
    bad = []
    for n, rec in sorted(series.table.items()):
        if rec.kind == "positive":
            off = abs(exact_fraction(rec.value_numeric) - rec.rounded)
            if off > Fraction(tolerance) or not rec.certified:
                bad.append(n)
                continue
        value = rec.value
        if not value:
            continue
        if n.denominator != 1 or not is_square_mod(-int(n), mod):
            bad.append(n)
    return bad
