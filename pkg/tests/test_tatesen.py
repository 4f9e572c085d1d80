from fractions import Fraction
from pathlib import Path

from hypothesis import given, strategies as st
import pytest

from phigamma.annulus import AnnulusElem, pi_element
from phigamma.errors import HypothesisViolation, PrecisionExhausted
from phigamma.formats import parse_descend, parse_element
from phigamma.tatesen import (conjugate_cocycle, descend_cocycle, gamma_minus_one,
                              gamma_minus_one_invert_kernel, gamma_minus_one_invert_psi0,
                              mat_inverse_unipotent, normalized_trace, trace, trace_coefficient,
                              trace_valuation_audit, ts1_witness)

from conftest import annulus_elems

DATA = Path(__file__).resolve().parent.parent / "data"


def load(name):
    return parse_element((DATA / name).read_text())


def test_trace_splits_level_two_element():
    x = load("kernel.elem")
    split = normalized_trace(x, 1)
    assert split.trace_part.level == 1
    assert split.trace_part.terms == {(1, 1): 2, (3, 0): 1}
    assert split.kernel_part.terms == {(1, 0): 1, (-4, 2): 1}
    assert split.recombines()


def test_trace_below_level_is_identity():
    x = pi_element(3, level=1)
    assert trace(x, 2).same_value(x)


def test_trace_hypotheses():
    with pytest.raises(HypothesisViolation):
        normalized_trace(pi_element(3), -1)
    wide = AnnulusElem(3, {(1, 0): 1}, interval=(0, Fraction(2, 3)), lam=Fraction(1, 2),
                       check_interval=False)
    with pytest.raises(HypothesisViolation):
        normalized_trace(wide, 0)


def test_trace_coefficients():
    x = load("kernel.elem")
    assert trace_coefficient(x, Fraction(1, 9)).terms == {0: 1}
    assert trace_coefficient(x, 1).terms == {0: 1}
    assert trace_coefficient(x, Fraction(1, 27)).is_zero()


def test_ts1_witness():
    rep = ts1_witness(Fraction(1, 2))
    assert rep.passed and rep.constants["c1"] == Fraction(1, 2)
    with pytest.raises(HypothesisViolation):
        ts1_witness(0)


def test_invert_psi0_example():
    x = load("psi0.elem")
    stats = {}
    y = gamma_minus_one_invert_psi0(x, 4, stats=stats)
    assert gamma_minus_one(y, 4).agrees(x)
    assert stats["n_gamma"] == 1
    assert stats["hypothesis"] is False
    # the inverse loses p^n v(pibar) / p^m
    assert y.valuation().value - x.valuation().value == Fraction(-9, 2)


def test_invert_psi0_rejections():
    x = load("psi0.elem")
    with pytest.raises(HypothesisViolation):
        gamma_minus_one_invert_psi0(x, 2)
    with pytest.raises(HypothesisViolation):
        gamma_minus_one_invert_psi0(pi_element(3, u_window=(0, 4)), 4)
    exact = AnnulusElem(3, {(1, 0): 1})
    with pytest.raises(PrecisionExhausted):
        gamma_minus_one_invert_psi0(exact, 4)
    assert gamma_minus_one_invert_psi0(exact, 4, target=6).terms


def test_invert_kernel_example():
    split = normalized_trace(load("kernel.elem"), 1)
    y = gamma_minus_one_invert_kernel(split, 4)
    assert gamma_minus_one(y, 4).agrees(split.kernel_part)
    with pytest.raises(HypothesisViolation):
        gamma_minus_one_invert_kernel(normalized_trace(load("kernel.elem"), 0), 10)


def test_unipotent_inverse():
    a = AnnulusElem(3, {(0, 0): 1, (1, 2): 1}, u_window=(0, 12))
    inv = mat_inverse_unipotent([[a]])
    assert (inv[0][0] * a).same_value(a.one().with_u_window(12))


def test_conjugating_by_identity_is_trivial():
    one = AnnulusElem(3, {(0, 0): 1}, u_window=(0, 8))
    m = AnnulusElem(3, {(0, 0): 1, (3, 2): 1}, u_window=(0, 8))
    gens = conjugate_cocycle([{"chi": 4, "matrix": [[m]]}], [[one]])
    assert gens[0]["matrix"][0][0].same_value(m)


def test_descent_example():
    job = parse_descend((DATA / "descend_d1.job").read_text())
    gens = conjugate_cocycle(job.generators, job.conjugator)
    B, descended, log = descend_cocycle(gens, dict(job.params))
    assert log[0].endswith("holds=true")
    assert log[-1] == "round=3 converged"
    # the kernel part is zero up to the tracked precision
    kernel = normalized_trace(descended[0]["full"][0][0], 1).kernel_part
    assert kernel.valuation().value >= kernel.prec_bound() == 7
    assert descended[0]["matrix"][0][0].level == 1


@given(annulus_elems(p=3, level=3), st.integers(0, 3))
def test_trace_is_idempotent(x, n):
    r = trace(x, n)
    assert trace(r, n) == r


@given(annulus_elems(p=3, level=3), st.integers(1, 3), st.sampled_from([4, 7, 10]))
def test_trace_is_equivariant(x, n, c):
    assert trace(x.gamma(c), n).same_value(trace(x, n).gamma(c))


@given(annulus_elems(p=3, level=3), st.integers(0, 3))
def test_trace_recombines(x, n):
    assert normalized_trace(x, n).recombines()


@given(annulus_elems(p=3, level=2), st.integers(0, 2))
def test_trace_is_a_section_on_lower_levels(x, n):
    y = AnnulusElem(3, {(k, j): c for (k, j), c in x.terms.items()}, level=n)
    assert trace(y, n) == y


@given(st.lists(annulus_elems(p=3, level=3, span=9, udeg=2), min_size=3, max_size=8))
def test_audit_is_finite_and_converges(samples):
    rep = trace_valuation_audit(samples, [1, 2, 3])
    assert rep.stats["finite"] and rep.stats["converged"]
    # R_{K,3} is the identity on level-3 elements
    assert rep.stats["worst_gap"][3] <= 0


@given(annulus_elems(p=3, level=1, uhi=5, span=9, udeg=3))
def test_psi0_inversion_roundtrip(x):
    x = x - x.raise_level(1).decompose_phi_basis()[0].phi()
    if x.is_zero():
        return
    y = gamma_minus_one_invert_psi0(x, 4)
    assert gamma_minus_one(y, 4).agrees(x)
