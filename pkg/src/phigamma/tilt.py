"""Generalized power series in t over F_q with exponents in Z[1/p].

These model fragments of the tilt: ``t`` plays the role of eps - 1, so the
valuation is normalized by v(t) = p/(p-1).  Exponents are ``Fraction`` values
whose denominators are powers of p.  A finite ``cap`` E means every exponent
>= E is unknown; ``cap=None`` marks an exact element.
"""

from fractions import Fraction
import math

from .coeff import INF, ValLB, fmt_rational
from .errors import (ExtensionRequired, IncompatibleRingError, PrecisionExhausted,
                     UnsupportedRootError)
from .gf import field


def p_power_exponent(r, p):
    """k with r == p^k, or None."""
    r = Fraction(r)
    if r <= 0:
        return None
    k = 0
    num, den = r.numerator, r.denominator
    while num % p == 0:
        num //= p
        k += 1
    while den % p == 0:
        den //= p
        k -= 1
    return k if num == den == 1 else None


def check_exponent(e, p):
    e = Fraction(e)
    d = e.denominator
    while d % p == 0:
        d //= p
    if d != 1:
        raise ValueError(f"exponent {e} does not lie in Z[1/{p}]")
    return e


class PExponent:
    """The rational num / p^k in normal form (p does not divide num when k > 0)."""

    __slots__ = ("p", "num", "denom_exp")

    def __init__(self, num, denom_exp, p):
        if denom_exp < 0:
            num *= p ** (-denom_exp)
            denom_exp = 0
        while denom_exp > 0 and num % p == 0:
            num //= p
            denom_exp -= 1
        self.p, self.num, self.denom_exp = p, num, denom_exp

    @classmethod
    def from_value(cls, value, p):
        value = check_exponent(value, p)
        k = 0
        d = value.denominator
        while d > 1:
            d //= p
            k += 1
        return cls(value.numerator, k, p)

    @property
    def value(self):
        return Fraction(self.num, self.p ** self.denom_exp)

    def __eq__(self, other):
        if isinstance(other, PExponent):
            return self.value == other.value
        return self.value == other

    def __lt__(self, other):
        return self.value < (other.value if isinstance(other, PExponent) else other)

    def __hash__(self):
        return hash(self.value)

    def __repr__(self):
        return f"PExponent({fmt_rational(self.value)})"


def tilt_monomial_root(e, r):
    """The exponent e / r, for r a (possibly negative) power of p."""
    p = e.p
    k = p_power_exponent(r, p)
    if k is None:
        raise UnsupportedRootError(f"root index {r} is not a power of {p}")
    return PExponent(e.num, e.denom_exp + k, p)


class TiltElem:
    __slots__ = ("p", "f", "terms", "cap", "allow_negative")

    def __init__(self, p, terms=None, cap=None, f=1, allow_negative=False):
        self.p = p
        self.f = f
        F = field(p, f)
        self.cap = None if cap is None else check_exponent(cap, p)
        self.allow_negative = allow_negative
        clean = {}
        for e, c in (terms or {}).items():
            e = check_exponent(e, p)
            c %= F.q
            if not c:
                continue
            if self.cap is not None and e >= self.cap:
                continue
            if e < 0 and not allow_negative:
                raise ValueError(f"negative exponent {e} needs allow_negative")
            clean[e] = c
        self.terms = clean

    @classmethod
    def _raw(cls, p, f, terms, cap, allow_negative):
        x = object.__new__(cls)
        x.p, x.f, x.terms, x.cap, x.allow_negative = p, f, terms, cap, allow_negative
        return x

    @property
    def F(self):
        return field(self.p, self.f)

    @property
    def q(self):
        return self.p ** self.f

    def _new(self, terms, cap, allow_negative=None):
        if cap is not None:
            terms = {e: c for e, c in terms.items() if e < cap and c}
        else:
            terms = {e: c for e, c in terms.items() if c}
        neg = self.allow_negative if allow_negative is None else allow_negative
        if not neg and any(e < 0 for e in terms):
            raise PrecisionExhausted("negative exponent produced; set allow_negative")
        return TiltElem._raw(self.p, self.f, terms, cap, neg)

    def one(self, cap=None):
        return self._new({Fraction(0): 1}, cap)

    def monomial(self, e, c=1, cap=None):
        return self._new({check_exponent(e, self.p): c % self.q}, cap)

    def _check(self, other):
        if not isinstance(other, TiltElem) or (other.p, other.f) != (self.p, self.f):
            raise IncompatibleRingError("field orders differ")

    def lowest(self):
        """Smallest stored exponent, else the cap (inf for an exact zero)."""
        if self.terms:
            return min(self.terms)
        return INF if self.cap is None else self.cap

    def __add__(self, other):
        if isinstance(other, int):
            other = self.one().scale(other)
        self._check(other)
        cap = _mincap(self.cap, other.cap)
        F = self.F
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = F.add(out.get(e, 0), c)
        return self._new(out, cap, self.allow_negative or other.allow_negative)

    __radd__ = __add__

    def __neg__(self):
        F = self.F
        return self._new({e: F.neg(c) for e, c in self.terms.items()}, self.cap)

    def __sub__(self, other):
        if isinstance(other, int):
            return self + (-other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        """Multiply by the F_q scalar c (ints are read through F_p)."""
        F = self.F
        return self._new({e: F.mul(a, c % self.q) for e, a in self.terms.items()}, self.cap)

    def __mul__(self, other):
        if isinstance(other, int):
            return self.scale(other % self.p)
        self._check(other)
        cap = _mincap(_shift(self.cap, other.lowest()), _shift(other.cap, self.lowest()))
        F = self.F
        out = {}
        a_items = sorted(self.terms.items())
        b_items = sorted(other.terms.items())
        for e1, c1 in a_items:
            for e2, c2 in b_items:
                e = e1 + e2
                if cap is not None and e >= cap:
                    break
                out[e] = F.add(out.get(e, 0), F.mul(c1, c2))
        return self._new(out, cap, self.allow_negative or other.allow_negative)

    __rmul__ = __mul__

    def __pow__(self, n):
        if n < 0:
            return self.inverse() ** (-n)
        result = self.one()
        base = self
        while n:
            n, r = divmod(n, self.p)
            if r:
                result = result * _small_pow(base, r)
            if n:
                base = base.frobenius(1)
        return result

    def inverse(self):
        """Inverse of c t^e (1 + y) with v(y) > 0, expanded up to the cap."""
        if not self.terms:
            raise ZeroDivisionError("inverse of an element that is zero up to its cap")
        e0 = min(self.terms)
        c0 = self.terms[e0]
        F = self.F
        ic = F.inv(c0)
        neg = self.allow_negative or e0 > 0
        if self.cap is None:
            if len(self.terms) == 1:
                return self._new({-e0: ic}, None, neg)
            raise PrecisionExhausted("inverse of an exact non-monomial needs a cap")
        # x = c0 t^e0 (1 + y); 1/x = c0^-1 t^-e0 sum (-y)^k, relative cap shrinks by e0
        rel_cap = self.cap - e0
        y = TiltElem._raw(self.p, self.f,
                          {e - e0: F.mul(c, ic) for e, c in self.terms.items() if e != e0},
                          rel_cap, True)
        s = self.one(rel_cap)._with_neg(True)
        term = s
        while True:
            term = -(term * y).truncate(rel_cap)
            if not term.terms:
                break
            s = s + term
        out = {e - e0: F.mul(c, ic) for e, c in s.terms.items()}
        return self._new(out, rel_cap - e0, neg)

    def _with_neg(self, flag):
        return TiltElem._raw(self.p, self.f, self.terms, self.cap, flag)

    def frobenius(self, k=1):
        F = self.F
        s = Fraction(self.p) ** k
        cap = None if self.cap is None else self.cap * s
        return TiltElem._raw(self.p, self.f,
                             {e * s: F.frob(c, k) for e, c in self.terms.items()},
                             cap, self.allow_negative)

    def valuation(self):
        vt = Fraction(self.p, self.p - 1)
        if not self.terms:
            # zero up to the cap: only cap * v(t) is known
            return ValLB(INF if self.cap is None else self.cap * vt, False)
        m = min(self.terms)
        return ValLB(m * vt, self.cap is None or m < self.cap)

    def truncate(self, cap):
        cap = _mincap(self.cap, cap)
        return self._new(self.terms, cap)

    def agrees(self, other, cap=None):
        """Equality modulo the smaller cap (and modulo ``cap`` if given)."""
        self._check(other)
        bound = _mincap(_mincap(self.cap, other.cap), cap)
        a = {e: c for e, c in self.terms.items() if bound is None or e < bound}
        b = {e: c for e, c in other.terms.items() if bound is None or e < bound}
        return a == b

    def is_zero(self):
        return not self.terms

    def is_monomial(self):
        return len(self.terms) == 1

    def __eq__(self, other):
        return (isinstance(other, TiltElem) and (self.p, self.f) == (other.p, other.f)
                and self.cap == other.cap and self.terms == other.terms)

    def __hash__(self):
        return hash((self.p, self.f, self.cap, tuple(sorted(self.terms.items()))))

    def __repr__(self):
        return str(self)

    def __str__(self):
        cap = "inf" if self.cap is None else fmt_rational(self.cap)
        body = ", ".join(f"{fmt_rational(e)}: {c}" for e, c in sorted(self.terms.items()))
        body = f"{{ {body} }}" if body else "{ }"
        return f"tilt(p={self.p}, f={self.f}, cap={cap}) {body}"


def _mincap(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _shift(cap, low):
    if cap is None or low == INF:
        return None
    return cap + low


def _small_pow(x, r):
    out = x
    for _ in range(r - 1):
        out = out * x
    return out


def tilt_arith(op, x, y=None):
    if op == "add":
        return x + y
    if op == "mul":
        return x * y
    if op == "sub":
        return x - y
    if op == "neg":
        return -x
    raise ValueError(f"unknown tilt operation {op!r}")


def tilt_frobenius(x, k=1):
    return x.frobenius(k)


def tilt_valuation(x):
    return x.valuation()


def _residue_root(F, c0, a):
    """Root y of y^p - c0 y = a in F, or raise with the extension degree needed."""
    for y in range(F.q):
        if F.sub(F.frob(y), F.mul(c0, y)) == a:
            return y
    if c0 == 1:
        degree = F.p
    elif F.f == 1:
        degree = None
        for d in range(2, 2 * F.p + 1):
            E = field(F.p, d)
            if any(E.sub(E.frob(y), E.mul(c0, y)) == a for y in range(E.q)):
                degree = d
                break
    else:
        degree = None
    raise ExtensionRequired(
        f"residue equation y^{F.p} - {c0}*y = {a} has no root in F_{F.q}"
        + (f"; a root exists over the degree-{degree} extension" if degree else ""),
        degree)


def tilt_artin_schreier_solve(c, b, cap=None, max_steps=100000):
    """Solve x^p - c*x = b up to ``cap`` (default: the cap of b).

    ``c`` must be a monomial c0*t^e with e > 0, or e = 0.  Returns x with
    v(x^p - c*x - b) >= cap * v(t).
    """
    p = b.p
    F = b.F
    if not c.is_monomial():
        raise ValueError("the twisting factor c must be a nonzero exact monomial")
    (e, c0), = c.terms.items()
    if e < 0:
        raise ValueError("the twisting factor must have nonnegative valuation")
    cap = _mincap(b.cap, cap)
    if cap is None:
        raise PrecisionExhausted("an exact right-hand side needs an explicit cap")
    balance = p * e / (p - 1)
    below = [beta for beta in b.terms if beta < balance and beta < cap]
    if below and cap >= balance:
        raise PrecisionExhausted(
            f"solution exponents accumulate at {fmt_rational(balance / p)}; the residual "
            f"cannot reach {fmt_rational(cap)} with finitely many terms "
            f"(lowest target exponent {fmt_rational(min(below))})")
    x_cap = max(cap / p, cap - e)
    ic0 = F.inv(c0)
    residual = {beta: a for beta, a in b.terms.items() if beta < cap}
    x = {}
    steps = 0
    while residual:
        steps += 1
        if steps > max_steps:
            raise PrecisionExhausted("Artin-Schreier recursion did not terminate")
        beta = min(residual)
        a = residual[beta]
        if beta < balance:
            gamma, y = beta / p, F.frob(a, -1)
        elif beta > balance:
            gamma, y = beta - e, F.neg(F.mul(a, ic0))
        else:
            gamma, y = beta / p, _residue_root(F, c0, a)
        x[gamma] = F.add(x.get(gamma, 0), y)
        # residual -= y^p t^(p gamma) - c0 y t^(e + gamma)
        for ex, co in ((p * gamma, F.frob(y)), (e + gamma, F.neg(F.mul(c0, y)))):
            if ex < cap:
                nv = F.sub(residual.get(ex, 0), co)
                if nv:
                    residual[ex] = nv
                else:
                    residual.pop(ex, None)
    return b._new(x, x_cap, b.allow_negative)


def artin_schreier_residual(c, b, x):
    return x.frobenius(1) - c * x - b
