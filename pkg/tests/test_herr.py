from fractions import Fraction
import random

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from phigamma.errors import HypothesisViolation
from phigamma.herr import (artin_schreier_check, default_chi, direct_sum,
                           galois_comparison_report, herr_cohomology, herr_h0, herr_h1,
                           nullspace_mod_p, phi_fixed_space, random_module, rank_mod_p,
                           trivial_module, twisted_module, verify_generators)
from phigamma.tilt import TiltElem
from phigamma.witt import PerfectElem, WittElem


def target(terms, p=3, b=Fraction(2, 3)):
    return PerfectElem({i: WittElem([TiltElem(p, t)]) for i, t in terms.items()}, b)


def test_default_chi_is_a_primitive_root_mod_p_squared():
    assert [default_chi(p) for p in (3, 5, 7)] == [2, 2, 3]
    with pytest.raises(HypothesisViolation):
        default_chi(2)


def test_mod_p_linear_algebra():
    m = np.array([[1, 2, 0], [2, 1, 0], [0, 0, 0]], dtype=np.int64)
    assert rank_mod_p(m, 3) == 1
    ker = nullspace_mod_p(m, 3)
    assert ker.shape == (2, 3)
    assert not ((m @ ker.T) % 3).any()


@pytest.mark.parametrize("module, ranks", [
    (trivial_module(), (1, 2, 0)),
    (twisted_module(), (0, 1, 0)),
    (twisted_module(power=2), (0, 1, 0)),
    (direct_sum(trivial_module(), twisted_module()), (1, 3, 0)),
])
def test_ranks_of_stock_modules(module, ranks):
    rep = herr_cohomology(module)
    assert rep.ranks() == ranks
    assert rep.certified()


def test_chi_one_plus_p_sees_a_smaller_group():
    # 1 + p generates only the pro-p part, so the torsion contributes extra classes
    assert herr_cohomology(trivial_module(chi=4)).ranks() == (1, 4, 1)


def test_generators_are_cocycles():
    for module in (trivial_module(), twisted_module()):
        rep = herr_cohomology(module)
        checks = verify_generators(module, rep)
        assert all(all(v) for v in checks.values())
        assert len(checks.get(1, [])) == rep.degrees[1].rank


def test_single_degree_helpers():
    h0, rep = herr_h0(trivial_module())
    assert h0.rank == 1 and rep.degrees[0] is h0
    h1, _ = herr_h1(twisted_module())
    assert h1.rank == 1


def test_precision_descriptor_and_lines():
    rep = herr_cohomology(trivial_module(), {"M": 3, "A": 2, "B": 1, "N": 4})
    assert rep.descriptor == "p=3 coeff=charp N=4 M=3 A=2 A'=6 B=1 chi=2 d=1"
    assert rep.lines()[1].startswith("H0 { rank: 1, certified: true")


def test_bad_windows_rejected():
    with pytest.raises(HypothesisViolation):
        herr_cohomology(trivial_module(), {"M": 0})


def test_comparison_report():
    good = galois_comparison_report(trivial_module(), [1, 2, 0])
    assert good["pass"] and not good["mismatches"]
    bad = galois_comparison_report(trivial_module(), [1, 3, None], provenance="table")
    assert not bad["pass"]
    assert bad["mismatches"][0].startswith("H1: expected 3 (table), got 2")


def test_module_check():
    assert trivial_module().check()
    m = twisted_module()
    T = m.phi[0][0].monomial(1)
    m.gamma_gens = [(2, [[T]])]
    with pytest.raises(HypothesisViolation):
        m.check()


def test_artin_schreier_untwisted():
    rep = artin_schreier_check([target({0: {1: 1}, 1: {Fraction(1, 3): 2, 4: 1}})], 27,
                               kernel_samples=10, rng=random.Random(1))
    assert rep.passed
    assert len(rep.solved) == 1 and len(rep.kernel) == 10
    assert rep.lines()[-1] == "pass=true"


def test_artin_schreier_twisted_above_balance():
    rep = artin_schreier_check([target({1: {9: 1}})], 27, kernel_samples=0, twisted=True)
    assert rep.passed


def test_artin_schreier_reports_extensions():
    rep = artin_schreier_check([target({0: {0: 1}})], 9, kernel_samples=0)
    assert rep.extension_required and rep.extension_required[0].startswith("degree=3")


def test_fixed_space_is_spanned_by_constants():
    # x^p = x on t-exponents in p^-K Z below the cap forces x constant
    basis = phi_fixed_space(3, 5, 2, M=2)
    assert basis == [(0, {Fraction(0): 1}), (1, {Fraction(0): 1})]


@settings(max_examples=10)
@given(st.integers(0, 10 ** 6))
def test_ranks_are_gauge_invariant(seed):
    module = random_module(3, 2, random.Random(seed))
    trivial = sum(1 for i in range(2) if (0, 0) in module.phi[i][i].terms)
    rep = herr_cohomology(module)
    assert rep.ranks() == (trivial, 2 + trivial, 0)
    assert rep.certified()


@settings(max_examples=20)
@given(st.dictionaries(st.integers(0, 2),
                       st.dictionaries(st.sampled_from([Fraction(1, 9), Fraction(1, 3), 1, 2, 5]),
                                       st.integers(1, 2), min_size=1, max_size=3),
                       min_size=1, max_size=3))
def test_artin_schreier_targets_solve(terms):
    rep = artin_schreier_check([target(terms)], 27, kernel_samples=0)
    assert rep.passed
