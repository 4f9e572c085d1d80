from fractions import Fraction

from hypothesis import assume, given, strategies as st
import pytest

from phigamma.coeff import CoeffElem, PAdicScalar, coeff_arith, coeff_embed, coeff_valuation
from phigamma.errors import DirectionError, IncompatibleRingError
from phigamma.formats import parse_element

from conftest import coeff_elems


def c(terms, lam=Fraction(1, 2), prec=4, window=(-8, 8), p=3):
    return CoeffElem(p, lam, terms, prec, window)


def test_add_doubles_coefficient():
    x = c({-1: 3})
    assert coeff_arith("add", x, x).terms == {-1: 6}


def test_mul_by_one_and_exponent_additivity():
    x = c({-1: 3, 2: 5})
    one = c({0: 1})
    assert coeff_arith("mul", x, one).terms == x.terms
    assert coeff_arith("mul", c({1: 1}), c({-1: 1})).terms == {0: 1}


def test_neg_is_additive_inverse():
    x = c({0: 7, 3: 2})
    assert (x + coeff_arith("neg", x)).is_zero()


@pytest.mark.parametrize("terms, lam, expected", [
    ({-1: 3}, Fraction(1, 2), -1),
    ({0: 1}, Fraction(1, 2), 0),
    # p^2/u is power-bounded at lambda = 1/2: 2 - 1/(1/2) = 0
    ({-1: 9}, Fraction(1, 2), 0),
])
def test_gauss_valuation_examples(terms, lam, expected):
    x = CoeffElem(3, lam, terms, 6, (-1, 12))
    assert coeff_valuation(x).value == expected


def test_zero_valuation_is_uncertified_infinity():
    v = coeff_valuation(c({}))
    assert v.value == float("inf") and not v.certified


def test_truncation_limits_certification():
    # unknown terms p^4 u^-8 could reach valuation 4 - 16
    assert not coeff_valuation(c({-1: 3})).certified
    assert coeff_valuation(CoeffElem(3, 1, {1: 3}, 4, (0, 8))).certified


def test_embed_examples():
    x = CoeffElem(3, Fraction(1, 2), {-1: 9}, 6, (-1, 12))
    assert coeff_valuation(coeff_embed(x, 1)).value == 1
    u3 = CoeffElem(3, Fraction(1, 2), {3: 1}, 6, (0, 12))
    assert coeff_valuation(u3).value == 6
    assert coeff_valuation(coeff_embed(u3, 1)).value == 3
    one = CoeffElem(3, Fraction(1, 2), {0: 1}, 6, (0, 12))
    assert coeff_valuation(coeff_embed(one, 1)).value == 0


def test_embed_wrong_direction():
    with pytest.raises(DirectionError):
        coeff_embed(c({0: 1}), Fraction(1, 3))
    with pytest.raises(DirectionError):
        coeff_embed(c({0: 1}), Fraction(1, 2))


def test_mismatched_rings_raise():
    with pytest.raises(IncompatibleRingError):
        c({0: 1}) + c({0: 1}, lam=1)
    with pytest.raises(IncompatibleRingError):
        c({0: 1}) * c({0: 1}, p=5)
    with pytest.raises(IncompatibleRingError):
        c({0: 1}) + c({0: 1}, prec=None)


def test_padic_scalar_valuation():
    assert PAdicScalar(18, 4, 3).valuation().value == 2
    assert PAdicScalar(81, 4, 3).valuation().certified is False


def test_window_propagation_in_products():
    x = CoeffElem(3, 1, {1: 1}, 4, (0, 6))
    y = CoeffElem(3, 1, {2: 1}, 4, (0, 5))
    z = x * y
    # unknown tails u^6 * u^2 and u^5 * u^1 start at u^6
    assert z.window == (0, 6) and z.terms == {3: 1}


@given(coeff_elems(), coeff_elems())
def test_valuation_multiplicative_when_certified(x, y):
    vx, vy, vxy = coeff_valuation(x), coeff_valuation(y), coeff_valuation(x * y)
    assume(vx.certified and vy.certified and vxy.certified)
    assert vxy.value == vx.value + vy.value


@given(coeff_elems(), coeff_elems())
def test_ultrametric(x, y):
    vx, vy, vs = coeff_valuation(x), coeff_valuation(y), coeff_valuation(x + y)
    assert vs.value >= min(vx.value, vy.value)
    if vx.certified and vy.certified and vx.value != vy.value:
        assert vs.value == min(vx.value, vy.value) and vs.certified


@given(coeff_elems(lam=Fraction(1, 2)), coeff_elems(lam=Fraction(1, 2)))
def test_embed_is_a_ring_map(x, y):
    assert coeff_embed(x + y, 1) == coeff_embed(x, 1) + coeff_embed(y, 1)
    assert coeff_embed(x * y, 1) == coeff_embed(x, 1) * coeff_embed(y, 1)


@given(coeff_elems(lam=Fraction(1, 2), window=(-4, 8)))
def test_embed_lower_bound(x):
    v_src = coeff_valuation(x).value
    v_dst = coeff_valuation(coeff_embed(x, 1)).value
    # i >= 0 terms scale by lambda/lambda', negative ones only grow
    assert v_dst >= min(v_src, v_src * Fraction(1, 2))


@given(coeff_elems(window=(-5, 9)), st.sampled_from([None, 4]))
def test_print_parse_roundtrip(x, prec):
    if prec is None:
        x = CoeffElem(x.p, x.lam, x.terms, None, x.window)
    assert parse_element(str(x)) == x
