from fractions import Fraction
import os

from hypothesis import HealthCheck, settings, strategies as st
import pytest

from phigamma.annulus import AnnulusElem
from phigamma.coeff import CoeffElem

settings.register_profile(
    "kernel", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "kernel"))

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def record_criterion():
    def record(n, passed, detail):
        ACCEPTANCE[n] = (passed, detail)
    return record


B_FOR_P = {2: Fraction(1, 2), 3: Fraction(2, 3), 5: Fraction(4, 5)}


@st.composite
def annulus_elems(draw, p=3, level=None, prec=None, span=12, udeg=3, uhi=None, max_terms=6):
    lvl = draw(st.integers(0, 3)) if level is None else level
    mod = p if prec is None else p ** prec
    keys = st.tuples(st.integers(-span, span), st.integers(0, udeg))
    terms = draw(st.dictionaries(keys, st.integers(1, mod - 1), min_size=0, max_size=max_terms))
    window = (0, uhi) if uhi is not None else (0, float("inf"))
    return AnnulusElem(p, terms, level=lvl, interval=(0, B_FOR_P[p]), prec=prec, u_window=window)


@st.composite
def coeff_elems(draw, p=3, lam=Fraction(1), prec=6, window=(0, 12), max_terms=4):
    lo, hi = window
    terms = draw(st.dictionaries(st.integers(lo, hi - 1), st.integers(1, p ** prec - 1),
                                 min_size=1, max_size=max_terms))
    return CoeffElem(p, lam, terms, prec, window)
