"""Precision-tracked elements of the coefficient rings D_lambda.

An element is a finite u-Laurent polynomial sum a_i u^i with p-adic integer
coefficients known modulo p^N (mixed mode) or with coefficients in F_p
(characteristic-p mode).  The u-window [lo, hi) is read as follows: no terms
sit below lo, and terms at or above hi are unknown with integral coefficients.
Consequently the unknown remainder of an element always has Gauss valuation at
least ``error_bound()``.
"""

from fractions import Fraction
import math

from .errors import DirectionError, IncompatibleRingError

INF = math.inf


def as_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


def vp(n, p):
    """p-adic valuation of a nonzero integer."""
    if n == 0:
        return INF
    n = abs(n)
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return k


def fmt_rational(x):
    if x == INF:
        return "inf"
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


class ValLB:
    """A valuation: exact when ``certified``, otherwise only a lower bound."""

    __slots__ = ("value", "certified")

    def __init__(self, value, certified):
        self.value = value if value == INF else Fraction(value)
        self.certified = bool(certified)

    def __repr__(self):
        return f"ValLB({fmt_rational(self.value)}, certified={self.certified})"

    def __eq__(self, other):
        return (isinstance(other, ValLB) and self.value == other.value
                and self.certified == other.certified)

    def __hash__(self):
        return hash((self.value, self.certified))

    def __str__(self):
        return f"{fmt_rational(self.value)} certified={str(self.certified).lower()}"


class PAdicScalar:
    """An integer known modulo p^N."""

    __slots__ = ("residue", "precision_exp", "prime")

    def __init__(self, residue, precision_exp, prime):
        if precision_exp < 1:
            raise ValueError("precision exponent must be positive")
        self.prime = prime
        self.precision_exp = precision_exp
        self.residue = residue % prime ** precision_exp

    def __repr__(self):
        return f"PAdicScalar({self.residue} mod {self.prime}^{self.precision_exp})"

    def __eq__(self, other):
        return (isinstance(other, PAdicScalar) and other.prime == self.prime
                and other.precision_exp == self.precision_exp
                and other.residue == self.residue)

    def __hash__(self):
        return hash((self.residue, self.precision_exp, self.prime))

    def valuation(self):
        if self.residue == 0:
            return ValLB(self.precision_exp, False)
        return ValLB(vp(self.residue, self.prime), True)

    def is_unit(self):
        return self.residue % self.prime != 0


class CoeffElem:
    """Element of D_lambda (``prec`` = N) or of its quotient F_p((u)) (``prec`` = None)."""

    __slots__ = ("p", "lam", "prec", "window", "terms")

    def __init__(self, p, lam, terms, prec=None, window=(0, 16)):
        lam = as_fraction(lam)
        if lam <= 0:
            raise ValueError("lambda must be positive")
        lo, hi = window
        if hi < lo:
            raise ValueError("empty u-window")
        if prec is not None and prec < 1:
            raise ValueError("p-adic precision must be positive")
        self.p = p
        self.lam = lam
        self.prec = prec
        self.window = (lo, hi)
        mod = self.modulus
        clean = {}
        for i, a in terms.items():
            if not lo <= i < hi:
                raise ValueError(f"u-exponent {i} outside window [{lo},{hi})")
            a %= mod
            if a:
                clean[i] = a
        self.terms = clean

    @classmethod
    def _raw(cls, p, lam, prec, window, terms):
        x = object.__new__(cls)
        x.p, x.lam, x.prec, x.window, x.terms = p, lam, prec, window, terms
        return x

    @property
    def modulus(self):
        return self.p if self.prec is None else self.p ** self.prec

    @property
    def char_mode(self):
        return "char_p" if self.prec is None else f"mixed(p^{self.prec})"

    def ring(self):
        return (self.p, self.lam, self.prec)

    def like(self, terms, window=None):
        """Same ring and window, new terms (terms outside the window are dropped)."""
        lo, hi = window or self.window
        mod = self.modulus
        clean = {}
        for i, a in terms.items():
            a %= mod
            if a and lo <= i < hi:
                clean[i] = a
        return CoeffElem._raw(self.p, self.lam, self.prec, (lo, hi), clean)

    def constant(self, c):
        lo, hi = self.window
        return self.like({0: c} if lo <= 0 < hi else {})

    def _check(self, other):
        if not isinstance(other, CoeffElem):
            raise IncompatibleRingError("expected a coefficient element")
        if self.ring() != other.ring():
            raise IncompatibleRingError(
                f"coefficient rings differ: {self.ring()} vs {other.ring()}")
        if max(self.window[0], other.window[0]) > min(self.window[1], other.window[1]):
            raise IncompatibleRingError("u-windows do not overlap")

    def __add__(self, other):
        if isinstance(other, int):
            return self + self.constant(other)
        self._check(other)
        lo = min(self.window[0], other.window[0])
        hi = min(self.window[1], other.window[1])
        out = dict(self.terms)
        for i, a in other.terms.items():
            out[i] = out.get(i, 0) + a
        return self.like(out, (lo, hi))

    __radd__ = __add__

    def __neg__(self):
        return self.like({i: -a for i, a in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, int):
            return self + (-other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def lowest(self):
        """Smallest stored exponent, or the upper window edge for a zero element."""
        return min(self.terms) if self.terms else self.window[1]

    def __mul__(self, other):
        if isinstance(other, int):
            return self.like({i: a * other for i, a in self.terms.items()})
        self._check(other)
        lo = self.window[0] + other.window[0]
        hi = min(self.window[1] + other.lowest(), other.window[1] + self.lowest())
        hi = max(hi, lo)
        mod = self.modulus
        out = {}
        for i, a in self.terms.items():
            for j, b in other.terms.items():
                k = i + j
                if k < hi:
                    out[k] = (out.get(k, 0) + a * b) % mod
        return self.like(out, (lo, hi))

    __rmul__ = __mul__

    def __eq__(self, other):
        return (isinstance(other, CoeffElem) and self.ring() == other.ring()
                and self.window == other.window and self.terms == other.terms)

    def __hash__(self):
        return hash((self.ring(), self.window, tuple(sorted(self.terms.items()))))

    def is_zero(self):
        return not self.terms

    def term_valuation(self, i, a):
        if self.prec is None:
            return Fraction(i) / self.lam
        return vp(a, self.p) + Fraction(i) / self.lam

    def error_bound(self):
        """Lower bound for the Gauss valuation of the unknown remainder."""
        lo, hi = self.window
        bound = Fraction(hi) / self.lam
        if self.prec is not None:
            bound = min(bound, self.prec + Fraction(lo) / self.lam)
        return bound

    def valuation(self):
        if not self.terms:
            return ValLB(INF, False)
        v = min(self.term_valuation(i, a) for i, a in self.terms.items())
        return ValLB(v, v < self.error_bound())

    def embed(self, lam_new):
        lam_new = as_fraction(lam_new)
        if lam_new <= self.lam:
            raise DirectionError(
                f"embedding D_lambda -> D_lambda' needs lambda' > lambda, got {lam_new} <= {self.lam}")
        return CoeffElem._raw(self.p, lam_new, self.prec, self.window, dict(self.terms))

    def with_window(self, window):
        """Shrink to a sub-window (terms outside are dropped)."""
        lo, hi = window
        if lo < self.window[0] or hi > self.window[1]:
            raise ValueError("can only shrink a window")
        return self.like(self.terms, window)

    def __repr__(self):
        return str(self)

    def __str__(self):
        prec = "charp" if self.prec is None else str(self.prec)
        lo, hi = self.window
        body = ", ".join(f"{i}: {a}" for i, a in sorted(self.terms.items()))
        body = f"{{ {body} }}" if body else "{ }"
        return (f"coeff(p={self.p}, lambda={fmt_rational(self.lam)}, prec={prec}, "
                f"window=[{lo},{hi})) {body}")


def coeff_arith(op, x, y=None):
    if op == "add":
        return x + y
    if op == "mul":
        return x * y
    if op == "neg":
        return -x
    if op == "sub":
        return x - y
    raise ValueError(f"unknown coefficient operation {op!r}")


def coeff_valuation(x):
    return x.valuation()


def coeff_embed(x, lambda_new):
    return x.embed(lambda_new)
