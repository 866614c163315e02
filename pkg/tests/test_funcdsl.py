from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cmtrace.errors import InsufficientOrderError, SpecError
from cmtrace.etafun import UpperHalfPoint, eval_function, make_context
from cmtrace.funcdsl import (constant, cusp_expansions, eta_corpus, fricke_action, fricke_sign, hauptmodul,
                             parse, principal_part, q_expansion_infinity, q_expansion_zero, residue_identity)

T2 = "eta(1)^24 * eta(2)^-24"
F_MINUS = "eta(1)^24*eta(2)^-24 - 4096*eta(2)^24*eta(1)^-24"
PLUS2 = "eta(1)^24*eta(2)^-24 + 4096*eta(2)^24*eta(1)^-24 + 24"

CORPUS = [parse("J"), parse("j"), parse("3/2"), parse("J^2 - 2*J", 1)] + [
    s for p in (2, 3, 5, 7) for s in eta_corpus(p)]


def test_parse_examples():
    j = parse("J")
    assert j.level == 1 and j.builtin == "J"
    two = parse(F_MINUS, 2)
    assert two.level == 2 and len(two.terms) == 2
    assert parse("7").builtin == "const" and parse("7").constant_value() == 7


def test_level_inference_and_checks():
    assert parse(T2).level == 2
    with pytest.raises(SpecError):
        parse("eta(1)^23")
    with pytest.raises(SpecError):
        parse(T2, 3)                      # 2 does not divide 3
    with pytest.raises(SpecError):
        parse("eta(1)^2 * eta(2)^-2", 2)  # weight 0 but not invariant under Gamma0(2)
    with pytest.raises(SpecError):
        parse("J^-1")
    with pytest.raises(SpecError):
        parse("J", 6)


@pytest.mark.parametrize("text,pos", [("eta(1)^24 * + eta(2)", 12), ("J J", 2), ("eta(", 4), ("", 0),
                                      ("1/0", 1)])
def test_syntax_errors_carry_position(text, pos):
    with pytest.raises(SpecError) as info:
        parse(text)
    assert info.value.position == pos
    assert f"position {pos}" in str(info.value)


def test_normalization_merges_terms():
    s = parse("J + J - 2*J + eta(1)^24*eta(2)^-12*eta(2)^-12", 2)
    assert s == parse(T2, 2)
    assert parse("J - J").is_constant()


@given(st.sampled_from(CORPUS))
def test_canonical_round_trip(spec):
    again = parse(spec.canonical(), spec.level)
    assert again == spec and again.digest() == spec.digest()


def test_expansion_examples():
    j = q_expansion_infinity(parse("J"), 2)
    assert j.to_dict() == {-1: 1, 1: 196884}
    t = q_expansion_infinity(parse(T2), 2)
    assert (t[-1], t[0], t[1]) == (1, -24, 276)
    assert principal_part(t) == [(Fraction(-1), Fraction(1))]
    assert principal_part(q_expansion_infinity(constant(5), 3)) == []


def test_expansion_at_zero_examples():
    j = parse("J")
    assert q_expansion_zero(j, 4) == q_expansion_infinity(j, 4)
    t = q_expansion_zero(parse(T2), 2)
    assert t.den == 2
    assert t.coefficient(Fraction(1, 2)) == 4096 and t.coefficient(0) == 0
    assert principal_part(t) == []


def test_fricke_action_examples():
    t = parse(T2)
    assert fricke_action(t) == parse("4096 * eta(2)^24 * eta(1)^-24", 2)
    assert fricke_action(constant(3, 5)) == constant(3, 5)


@given(st.sampled_from(CORPUS))
def test_fricke_action_is_involution(spec):
    assert fricke_action(fricke_action(spec)) == spec


def test_fricke_signs():
    assert fricke_sign(parse(F_MINUS, 2)) == -1
    assert fricke_sign(parse(PLUS2, 2)) == 1
    assert fricke_sign(parse(T2)) == 0
    assert fricke_sign(parse("J")) == 1


def test_plus_function_expansions_match():
    pair = cusp_expansions(parse(PLUS2, 2), 6)
    for n in range(-2, 6):
        assert pair.b(Fraction(n, 2)) == pair.a(n)
    assert pair.a(1) == 4372 and pair.a(2) == 96256 and pair.a(0) == 0


def test_insufficient_order_is_explicit():
    pair = cusp_expansions(parse("J"), 1)
    with pytest.raises(InsufficientOrderError):
        pair.a(1)


@pytest.mark.parametrize("p", [2, 3, 5, 7])
def test_residue_identity_on_corpus(p):
    specs = eta_corpus(p)
    assert len(specs) >= 5
    for spec in specs:
        lhs, rhs = residue_identity(spec)
        assert lhs == rhs, spec


def test_residue_identity_is_not_vacuous():
    # for the Hauptmodul both sides vanish only because a(0) balances a(-1)
    pair = cusp_expansions(hauptmodul(3), 1)
    assert pair.a(-1) == 1 and pair.a(0) == -12


@st.composite
def sample_points(draw):
    return UpperHalfPoint(draw(st.floats(-0.5, 0.5)), draw(st.floats(1.2, 2.5)))


@given(st.sampled_from(CORPUS), sample_points())
def test_expansion_agrees_with_evaluation(spec, z):
    ctx = make_context(120)
    series = q_expansion_infinity(spec, 40)
    zv = z.value(ctx)
    exact = series.evaluate(zv, ctx)
    numeric = eval_function(spec, z).value
    tol = series.tail_bound(zv, ctx) + ctx.mpf(2) ** -50 * max(1, abs(numeric))
    assert abs(exact - numeric) <= tol


@given(st.sampled_from([s for s in CORPUS if s.level > 1]), sample_points())
def test_expansion_at_zero_agrees_with_evaluation(spec, z):
    ctx = make_context(120)
    series = q_expansion_zero(spec, 30)
    zv = z.value(ctx)
    with mpmath.workprec(300):
        w = -1 / mpmath.mpc(mpmath.mpf(z.real), mpmath.mpf(z.imag))
        inverted = UpperHalfPoint(w.real, w.imag)
    numeric = eval_function(spec, inverted).value
    exact = series.evaluate(zv, ctx)
    tol = series.tail_bound(zv, ctx) + ctx.mpf(2) ** -50 * max(1, abs(numeric))
    assert abs(exact - numeric) <= tol
