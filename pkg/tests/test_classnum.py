from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cmtrace.classnum import (hurwitz, hurwitz_bruteforce, hurwitz_table, zagier_holomorphic_part,
                              zagier_nonholo_value)
from cmtrace.errors import DomainError
from cmtrace.funcdsl import constant
from cmtrace.traces import beta_function, generating_series, nonholo_terms

# H(D) for small D, from the standard table
KNOWN = {0: Fraction(-1, 12), 3: Fraction(1, 3), 4: Fraction(1, 2), 7: 1, 8: 1, 11: 1, 12: Fraction(4, 3),
         15: 2, 16: Fraction(3, 2), 19: 1, 20: 2, 23: 3, 24: 2, 27: Fraction(4, 3), 28: 2, 31: 3, 32: 3}


def test_known_values():
    for D, h in KNOWN.items():
        assert hurwitz(D) == h, D
    assert hurwitz(1) == hurwitz(2) == hurwitz(5) == 0


def test_negative_discriminant_rejected():
    with pytest.raises(DomainError):
        hurwitz(-3)
    with pytest.raises(DomainError):
        hurwitz_bruteforce(-3)
    with pytest.raises(DomainError):
        zagier_holomorphic_part(-1)


def test_matches_bruteforce_up_to_500():
    table = hurwitz_table(500)
    for D in range(501):
        assert table[D] == hurwitz_bruteforce(D), D


@given(st.integers(1, 2000))
def test_vanishes_off_discriminants(D):
    if D % 4 in (1, 2):
        assert hurwitz(D) == 0
    else:
        assert hurwitz(D) > 0


@given(st.integers(1, 300))
def test_multiplying_by_four_adds_the_scaled_forms(D):
    # every form of discriminant -D doubles to one of discriminant -4D
    assert hurwitz(4 * D) >= hurwitz(D)
    assert hurwitz(4 * D) == hurwitz_bruteforce(4 * D)


def test_holomorphic_part_example():
    assert zagier_holomorphic_part(4) == {0: Fraction(-1, 12), 3: Fraction(1, 3), 4: Fraction(1, 2)}


def test_nonholo_values():
    v0 = zagier_nonholo_value(0, 1)
    assert abs(v0 - 1 / (8 * mpmath.pi)) < 1e-15
    assert abs(zagier_nonholo_value(0, 2) - v0 / mpmath.sqrt(2)) < 1e-15
    want = beta_function(4 * mpmath.pi) / (16 * mpmath.pi)
    assert abs(zagier_nonholo_value(1, 1) - want) < 1e-15
    with pytest.raises(DomainError):
        zagier_nonholo_value(1, 0)
    with pytest.raises(DomainError):
        zagier_nonholo_value(1, -2)


def test_trace_series_of_constant_is_twice_hurwitz():
    gs = generating_series(constant(1), 1, 60, "I0")
    for D in range(0, 61):
        assert gs.coefficient(D) == 2 * hurwitz(D), D


@pytest.mark.parametrize("v", ["0.5", "1", "2"])
def test_nonholomorphic_part_of_constant_is_twice_zagier(v):
    terms = {t.index: t for t in nonholo_terms(constant(1), 1, 3)}
    assert abs(terms[0].evaluate(v) - 2 * zagier_nonholo_value(0, v)) < 1e-15
    for N in (1, 2, 3):
        t = terms[-N * N]
        per_sign = t.evaluate(v) / 2
        assert abs(per_sign - 2 * zagier_nonholo_value(N, v)) < 1e-15
