import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cmtrace.errors import DomainError
from cmtrace.etafun import (PrecisionPolicy, UpperHalfPoint, dedekind_sum, dedekind_sum_direct, eta,
                            eta_multiplier, eval_function, j_invariant, make_context, reduce_to_fd)
from cmtrace.funcdsl import parse
from cmtrace.qforms import GroupElement, QuadForm, class_reps, cm_point

mpmath.mp.prec = 53


def pentagonal_eta(z, prec=200):
    """eta by the defining product, no reduction (only sensible for Im z not small)."""
    ctx = make_context(prec)
    z = ctx.mpc(z)
    q = ctx.expjpi(2 * z)
    prod = ctx.mpf(1)
    n = 1
    while abs(q) ** n > ctx.mpf(2) ** -(prec + 10):
        prod *= 1 - q ** n
        n += 1
    return ctx.expjpi(z / 12) * prod


@st.composite
def points(draw):
    x = draw(st.floats(-3, 3))
    y = draw(st.floats(0.08, 2.5))
    return UpperHalfPoint(x, y)


@st.composite
def group_elements(draw):
    g = GroupElement.identity()
    for k in draw(st.lists(st.integers(-3, 3), max_size=5)):
        g = g @ GroupElement.T(k) @ GroupElement.S()
    return g


def close(a, b, tol):
    return abs(mpmath.mpc(a) - mpmath.mpc(b)) <= tol * max(1, abs(mpmath.mpc(b)))


def test_policy_validation():
    with pytest.raises(DomainError):
        PrecisionPolicy(base_bits=32)
    with pytest.raises(DomainError):
        PrecisionPolicy(max_doublings=0)


def test_point_validation():
    with pytest.raises(DomainError):
        UpperHalfPoint(0, -1)


def test_eta_at_i():
    v = eta(UpperHalfPoint(0, 1)).value
    with mpmath.workprec(120):
        want = mpmath.gamma(0.25) / (2 * mpmath.pi ** 0.75)
        assert abs(v - want) < mpmath.mpf(2) ** -90
    assert abs(v - pentagonal_eta(1j)) < mpmath.mpf(2) ** -90


def test_eta_translation_and_inversion():
    z = UpperHalfPoint("0.3", "0.7")
    e = eta(z).value
    e1 = eta(UpperHalfPoint("1.3", "0.7")).value
    assert close(e1, mpmath.expjpi(mpmath.mpf(1) / 12) * e, 1e-15)
    w = -1 / mpmath.mpc("0.3", "0.7")
    ew = eta(UpperHalfPoint.from_complex(w)).value
    assert close(abs(ew), abs(mpmath.sqrt(mpmath.mpc("0.3", "0.7"))) * abs(e), 1e-15)


def test_j_special_values():
    assert close(j_invariant(UpperHalfPoint(0, 1)).value, 1728, 1e-18)
    rho = UpperHalfPoint.from_cm(cm_point(QuadForm(1, 1, 1)))
    assert abs(j_invariant(rho).value) < 1e-15
    seven = UpperHalfPoint.from_cm(cm_point(QuadForm(1, 1, 2)))
    assert close(j_invariant(seven).value, -3375, 1e-18)


def test_eval_function_examples():
    i = UpperHalfPoint(0, 1)
    assert close(eval_function(parse("J"), i).value, 984, 1e-18)
    assert eval_function(parse("5"), UpperHalfPoint("0.2", "0.4")).value == 5


@given(points())
def test_level2_fricke_product(z):
    f = parse("eta(1)^24 * eta(2)^-24", 2)
    zc = z.value(mpmath.mp)
    w = UpperHalfPoint.from_complex(-1 / (2 * zc))
    prod = eval_function(f, z).value * eval_function(f, w).value
    assert close(prod, 4096, 1e-12)


def test_reduce_to_fd_examples():
    z, g = reduce_to_fd(UpperHalfPoint(0, 1))
    assert g == GroupElement.identity()
    z, g = reduce_to_fd(UpperHalfPoint(0, 0.5))
    assert g == GroupElement.S() and close(z.value(mpmath.mp), 2j, 1e-15)
    z, g = reduce_to_fd(UpperHalfPoint(10, 1))
    assert g == GroupElement.T(-10) and close(z.value(mpmath.mp), 1j, 1e-15)


@given(st.integers(3, 400))
def test_reduced_cm_points_need_no_transform(D):
    for r in class_reps(D):
        _, g = reduce_to_fd(UpperHalfPoint.from_cm(cm_point(r.form)))
        assert g == GroupElement.identity()


@given(points())
def test_reduce_to_fd_lands_in_domain(z):
    w, g = reduce_to_fd(z)
    wv = w.value(mpmath.mp)
    assert abs(mpmath.re(wv)) <= 0.5 + 1e-12 and abs(wv) >= 1 - 1e-12
    zv = z.value(mpmath.mp)
    assert close((g.a * zv + g.b) / (g.c * zv + g.d), wv, 1e-9)


def test_dedekind_examples():
    assert dedekind_sum(0, 1) == 0
    assert dedekind_sum(1, 3) == Fraction(1, 18)
    with pytest.raises(DomainError):
        dedekind_sum(2, 4)


@given(st.integers(1, 300), st.integers(1, 300))
def test_dedekind_reciprocity(c, d):
    if math.gcd(c, d) != 1:
        return
    assert dedekind_sum(d, c) == dedekind_sum_direct(d, c)
    assert dedekind_sum(d, c) + dedekind_sum(c, d) == Fraction(-1, 4) + (
        Fraction(c, d) + Fraction(d, c) + Fraction(1, c * d)) / 12


@given(st.integers(-60, 60), st.integers(1, 60))
def test_dedekind_periodic_in_d(d, c):
    if math.gcd(c, d) != 1:
        return
    assert dedekind_sum(d, c) == dedekind_sum(d + 7 * c, c) == dedekind_sum_direct(d % c, c)


@given(points(), group_elements())
def test_eta_multiplier_consistency(z, g):
    ctx = make_context(120)
    zv = z.value(ctx)
    gz = (g.a * zv + g.b) / (g.c * zv + g.d)
    lhs = eta(UpperHalfPoint.from_complex(gz)).value
    rhs = eta_multiplier(ctx, g, zv) * eta(z).value
    assert close(lhs, rhs, 1e-12)
    # multiplier-free 24th power
    assert close(lhs ** 24, (g.c * zv + g.d) ** 12 * eta(z).value ** 24, 1e-10)


@given(points(), group_elements())
def test_j_modularity(z, g):
    zv = z.value(mpmath.mp)
    gz = (g.a * zv + g.b) / (g.c * zv + g.d)
    a = j_invariant(z)
    b = j_invariant(UpperHalfPoint.from_complex(gz))
    assert abs(a.value - b.value) <= 1e-9 * max(1, abs(a.value))


@given(points())
def test_reported_error_is_honest(z):
    coarse = eta(z, PrecisionPolicy(base_bits=64))
    fine = eta(z, PrecisionPolicy(base_bits=160))
    assert abs(coarse.value - fine.value) <= coarse.error


def test_eta_matches_product_in_fundamental_domain():
    for z in (0.1 + 1.1j, -0.4 + 0.9j, 0.5 + 2j):
        assert close(eta(UpperHalfPoint.from_complex(z)).value, pentagonal_eta(z), 1e-18)
