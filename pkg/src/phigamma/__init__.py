"""Finite-precision kernel for period rings, (phi, Gamma)-modules and their cohomology."""

from .errors import (DirectionError, Divergence, ExtensionRequired, HypothesisViolation,
                     IncompatibleRingError, KernelError, ParseError, PrecisionExhausted,
                     UnsupportedRootError)
from .coeff import CoeffElem, PAdicScalar, ValLB, coeff_arith, coeff_embed, coeff_valuation
from .tilt import (PExponent, TiltElem, tilt_arith, tilt_artin_schreier_solve, tilt_frobenius,
                   tilt_monomial_root, tilt_valuation)
from .witt import (PerfectElem, WittElem, perfect_from_annulus, perfect_valuation, witt_arith,
                   witt_frobenius, witt_teichmuller, witt_universal_tables)
from .annulus import (AnnulusElem, annulus_arith, annulus_is_integral, annulus_raise_level,
                      annulus_valuation, decompose_phi_basis, gamma, phi, pi_element, psi,
                      recompose_phi_basis)
from .tatesen import (TSReport, TraceSplit, descend_cocycle, gamma_minus_one_invert_kernel,
                      gamma_minus_one_invert_psi0, normalized_trace, trace_valuation_audit,
                      ts1_witness)
from .herr import (HerrReport, PhiGammaModuleDesc, artin_schreier_check, galois_comparison_report,
                   herr_cohomology, herr_d0, herr_d1, herr_h0, herr_h1, herr_h2)
from .fiber import HuberPresentation, fiber_presentation, tateness_check, weight_embed

__version__ = "0.1.0"
