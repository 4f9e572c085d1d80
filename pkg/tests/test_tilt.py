from fractions import Fraction

from hypothesis import given, strategies as st
import pytest

from phigamma.errors import ExtensionRequired, PrecisionExhausted, UnsupportedRootError
from phigamma.formats import parse_element
from phigamma.tilt import (PExponent, TiltElem, artin_schreier_residual, tilt_arith,
                           tilt_artin_schreier_solve, tilt_frobenius, tilt_monomial_root,
                           tilt_valuation)


def T(p, terms, cap=None, f=1):
    return TiltElem(p, terms, cap, f)


@st.composite
def tilt_elems(draw, p=3, cap=Fraction(40)):
    exps = st.builds(lambda n, k: Fraction(n, p ** k), st.integers(0, 30), st.integers(0, 2))
    terms = draw(st.dictionaries(exps, st.integers(1, p - 1), max_size=5))
    return T(p, terms, cap)


def test_arith_examples():
    t3 = T(3, {1: 1})
    assert tilt_arith("add", t3, t3).terms == {1: 2}
    t2 = T(2, {1: 1})
    assert tilt_arith("add", t2, t2).is_zero()
    root = T(3, {Fraction(1, 3): 1})
    assert (root * root).terms == {Fraction(2, 3): 1}
    assert (T(3, {0: 1, 1: 1}) * T(3, {0: 1, 1: 2})).terms == {0: 1, 2: 2}


def test_frobenius_examples():
    t = T(3, {1: 1})
    assert tilt_frobenius(t).terms == {3: 1}
    assert tilt_frobenius(t, -1).terms == {Fraction(1, 3): 1}


def test_frobenius_scales_cap_and_field_coefficients():
    x = T(2, {1: 2}, cap=8, f=2)
    y = tilt_frobenius(x)
    assert y.cap == 16
    assert y.terms == {2: x.F.frob(2)}


def test_valuation_examples():
    assert tilt_valuation(T(3, {1: 1})).value == Fraction(3, 2)
    assert tilt_valuation(T(3, {0: 1})).value == 0
    assert tilt_valuation(T(3, {Fraction(1, 3): 1})).value == Fraction(1, 2)
    assert tilt_valuation(T(5, {1: 1})).value == Fraction(5, 4)


def test_valuation_certified_only_below_cap():
    assert tilt_valuation(T(3, {2: 1}, cap=5)).certified
    v = tilt_valuation(T(3, {}, cap=5))
    assert not v.certified and v.value == Fraction(15, 2)


def test_monomial_root():
    p = 3
    one = PExponent(1, 0, p)
    assert tilt_monomial_root(one, p).value == Fraction(1, 3)
    assert tilt_monomial_root(PExponent(2, 1, p), p).value == Fraction(2, 9)
    assert tilt_monomial_root(one, 1).value == 1
    assert tilt_monomial_root(one, Fraction(1, 3)).value == 3
    with pytest.raises(UnsupportedRootError):
        tilt_monomial_root(one, 2)


def test_pexponent_normal_form():
    e = PExponent(6, 1, 3)
    assert (e.num, e.denom_exp) == (2, 0)
    assert PExponent.from_value(Fraction(5, 9), 3).denom_exp == 2
    with pytest.raises(ValueError):
        PExponent.from_value(Fraction(1, 2), 3)


def test_artin_schreier_telescoping():
    # x = t + t^p + t^(p^2) + ... solves x^p - x = -t
    p, cap = 3, Fraction(40)
    one = T(p, {0: 1})
    x = tilt_artin_schreier_solve(one, T(p, {1: -1}, cap))
    assert x.terms == {1: 1, 3: 1, 9: 1, 27: 1}
    assert artin_schreier_residual(one, T(p, {1: -1}), x).truncate(cap).is_zero()


def test_artin_schreier_zero_target():
    t = T(3, {1: 1})
    assert tilt_artin_schreier_solve(t, T(3, {}, 20)).is_zero()


def test_artin_schreier_twisted_residual():
    # x^p - t x = t^p: the solution starts at -t^2, and only the residual is checked
    p, cap = 3, Fraction(30)
    t = T(p, {1: 1})
    x = tilt_artin_schreier_solve(t, T(p, {3: 1}), cap=cap)
    assert x.terms[2] == 2
    res = artin_schreier_residual(t, T(p, {3: 1}), x).truncate(cap)
    assert res.is_zero()


def test_artin_schreier_extension_report():
    # y^3 - y = 1 has no root in F_3
    with pytest.raises(ExtensionRequired) as info:
        tilt_artin_schreier_solve(T(3, {0: 1}), T(3, {0: 1}, 10))
    assert info.value.degree == 3


def test_artin_schreier_accumulation_is_refused():
    t2 = T(3, {2: 1})
    with pytest.raises(PrecisionExhausted):
        tilt_artin_schreier_solve(t2, T(3, {Fraction(1, 3): 1}, 30))


@given(tilt_elems(), tilt_elems())
def test_frobenius_is_ring_hom(x, y):
    assert tilt_frobenius(x + y) == tilt_frobenius(x) + tilt_frobenius(y)
    assert tilt_frobenius(x * y).agrees(tilt_frobenius(x) * tilt_frobenius(y))


@given(tilt_elems(), st.integers(-2, 2))
def test_frobenius_inverse_pair(x, k):
    assert tilt_frobenius(tilt_frobenius(x, k), -k) == x


@given(tilt_elems(), tilt_elems())
def test_valuation_multiplicative(x, y):
    vx, vy, vxy = tilt_valuation(x), tilt_valuation(y), tilt_valuation(x * y)
    if vx.certified and vy.certified and vxy.certified:
        assert vxy.value == vx.value + vy.value


@given(tilt_elems(cap=None), st.sampled_from([0, 1, 2]))
def test_artin_schreier_residual_reaches_cap(b, e):
    p, cap = 3, Fraction(27)
    c = T(p, {e: 1})
    if e:
        b = T(p, {k: v for k, v in b.terms.items() if k > Fraction(p * e, p - 1)})
    try:
        x = tilt_artin_schreier_solve(c, b, cap=cap)
    except ExtensionRequired:
        return
    res = artin_schreier_residual(c, b, x).truncate(cap)
    assert res.is_zero()


@given(tilt_elems())
def test_print_parse_roundtrip(x):
    assert parse_element(str(x)) == x
