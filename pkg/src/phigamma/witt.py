"""Truncated p-typical Witt vectors over tilt elements.

Arithmetic goes through universal integer polynomials S (sum), P (product)
and N (negation), built once per (p, J) by ghost-component recursion.  A
polynomial is a dict mapping an exponent tuple over the variables
(a_0..a_{J-1}, b_0..b_{J-1}) to an integer coefficient.
"""

from fractions import Fraction
from functools import lru_cache

from .coeff import INF, ValLB, as_fraction, fmt_rational
from .errors import HypothesisViolation, IncompatibleRingError, PrecisionExhausted
from .tilt import TiltElem, _mincap


# ---------------------------------------------------------------- polynomials

def _padd(f, g, sign=1):
    out = dict(f)
    for m, c in g.items():
        v = out.get(m, 0) + sign * c
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def _pmul(f, g):
    out = {}
    for m1, c1 in f.items():
        for m2, c2 in g.items():
            m = tuple(x + y for x, y in zip(m1, m2))
            v = out.get(m, 0) + c1 * c2
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return out


def _ppow(f, n, nvars):
    result = {(0,) * nvars: 1}
    base = f
    while n:
        if n & 1:
            result = _pmul(result, base)
        n >>= 1
        if n:
            base = _pmul(base, base)
    return result


def _pvar(i, nvars, power=1):
    m = [0] * nvars
    m[i] = power
    return {tuple(m): 1}


def _pscale(f, c):
    return {m: c * v for m, v in f.items()} if c else {}


def _pdiv_exact(f, d):
    out = {}
    for m, c in f.items():
        if c % d:
            raise ArithmeticError("ghost recursion produced a non-integral coefficient")
        out[m] = c // d
    return out


def peval(f, values):
    """Evaluate an integer polynomial at integer values."""
    total = 0
    for m, c in f.items():
        term = c
        for x, e in zip(values, m):
            if e:
                term *= x ** e
        total += term
    return total


def ghost_component(vec, n, p):
    """w_n(x) = sum_{k<=n} p^k x_k^(p^(n-k)) over the integers."""
    return sum(p ** k * vec[k] ** (p ** (n - k)) for k in range(n + 1))


class WittUniversalTables:
    """Sum, product and negation polynomials for length-J Witt vectors."""

    def __init__(self, p, J):
        if J < 1:
            raise ValueError("Witt length must be at least 1")
        self.p = p
        self.J = J
        nv = 2 * J
        a = [_pvar(i, nv) for i in range(J)]
        b = [_pvar(J + i, nv) for i in range(J)]
        self.S = self._solve(lambda n: _padd(self._ghost(a, n), self._ghost(b, n)), nv)
        self.P = self._solve(lambda n: _pmul(self._ghost(a, n), self._ghost(b, n)), nv)
        self.N = self._solve(lambda n: _pscale(self._ghost(a, n), -1), nv)
        # mod-p reductions used for evaluation over characteristic p
        self.S_mod = [self._reduce(f) for f in self.S]
        self.P_mod = [self._reduce(f) for f in self.P]
        self.N_mod = [self._reduce(f) for f in self.N]

    def _ghost(self, comps, n):
        p = self.p
        nv = 2 * self.J
        out = {}
        for k in range(n + 1):
            out = _padd(out, _pscale(_ppow(comps[k], p ** (n - k), nv), p ** k))
        return out

    def _solve(self, target_ghost, nv):
        p = self.p
        polys = []
        for n in range(self.J):
            acc = target_ghost(n)
            for k in range(n):
                acc = _padd(acc, _pscale(_ppow(polys[k], p ** (n - k), nv), p ** k), -1)
            polys.append(_pdiv_exact(acc, p ** n))
        return polys

    def _reduce(self, f):
        p = self.p
        return [(m, c % p) for m, c in sorted(f.items()) if c % p]

    def format_poly(self, which, n):
        """Human-readable form of S_n, P_n or N_n (``which`` in 'SPN')."""
        f = getattr(self, which)[n]
        J = self.J
        names = [f"a{i}" for i in range(J)] + [f"b{i}" for i in range(J)]
        pieces = []
        for m, c in sorted(f.items(), key=lambda mc: (-sum(mc[0]), mc[0])):
            mono = "*".join(nm if e == 1 else f"{nm}^{e}" for nm, e in zip(names, m) if e)
            if not mono:
                pieces.append(str(c))
            elif c == 1:
                pieces.append(mono)
            elif c == -1:
                pieces.append("-" + mono)
            else:
                pieces.append(f"{c}*{mono}")
        return " + ".join(pieces).replace("+ -", "- ") or "0"


@lru_cache(maxsize=None)
def witt_universal_tables(p, J):
    return WittUniversalTables(p, J)


# -------------------------------------------------------------- Witt vectors

class WittElem:
    """(x_0, ..., x_{J-1}) standing for sum p^k [x_k^(1/p^k)]."""

    __slots__ = ("p", "J", "comps")

    def __init__(self, comps):
        comps = tuple(comps)
        if not comps:
            raise ValueError("a Witt vector needs at least one component")
        p, f = comps[0].p, comps[0].f
        for c in comps:
            if (c.p, c.f) != (p, f):
                raise IncompatibleRingError("Witt components live over different fields")
        self.p = p
        self.J = len(comps)
        self.comps = comps

    @property
    def f(self):
        return self.comps[0].f

    @classmethod
    def zero(cls, p, J, f=1, cap=None):
        return cls([TiltElem(p, {}, cap, f) for _ in range(J)])

    @classmethod
    def from_int(cls, n, p, J, f=1):
        """Witt vector of the integer n, exact, with residues in F_p."""
        mod = p ** J
        n %= mod
        comps = []
        for k in range(J):
            c = n % p
            comps.append(TiltElem(p, {0: c} if c else {}, None, f))
            # subtract the Teichmuller representative of c, then divide by p
            teich = pow(c, p ** (J - 1), mod) if c else 0
            n = ((n - teich) % mod) // p
        return cls(comps)

    def _check(self, other):
        if not isinstance(other, WittElem):
            raise IncompatibleRingError("expected a Witt vector")
        if (self.p, self.J, self.f) != (other.p, other.J, other.f):
            raise IncompatibleRingError(
                f"Witt vectors differ in (p, J, f): {(self.p, self.J, self.f)} vs "
                f"{(other.p, other.J, other.f)}")

    def _eval(self, polys, other=None):
        vals = list(self.comps) + list(other.comps if other is not None else self.comps)
        cache = {}

        def power(i, e):
            key = (i, e)
            if key not in cache:
                cache[key] = vals[i] ** e
            return cache[key]

        out = []
        zero_cap = _mincap_all(vals)
        for poly in polys:
            acc = None
            for m, c in poly:
                term = None
                for i, e in enumerate(m):
                    if e:
                        x = power(i, e)
                        term = x if term is None else term * x
                if term is None:
                    term = vals[0].one()
                term = term.scale(c)
                acc = term if acc is None else acc + term
            if acc is None:
                acc = TiltElem(self.p, {}, zero_cap, self.f)
            out.append(acc)
        return WittElem(out)

    def __add__(self, other):
        self._check(other)
        return self._eval(witt_universal_tables(self.p, self.J).S_mod, other)

    def __mul__(self, other):
        self._check(other)
        return self._eval(witt_universal_tables(self.p, self.J).P_mod, other)

    def __neg__(self):
        return self._eval(witt_universal_tables(self.p, self.J).N_mod)

    def __sub__(self, other):
        return self + (-other)

    def frobenius(self, k=1):
        return WittElem([c.frobenius(k) for c in self.comps])

    def is_teichmuller(self):
        return all(c.is_zero() for c in self.comps[1:])

    def caps(self):
        return [c.cap for c in self.comps]

    def agrees(self, other, cap=None):
        self._check(other)
        return all(x.agrees(y, cap) for x, y in zip(self.comps, other.comps))

    def valuation(self, b):
        return perfect_valuation(self, b)

    def __eq__(self, other):
        return isinstance(other, WittElem) and self.comps == other.comps

    def __hash__(self):
        return hash(self.comps)

    def __repr__(self):
        return str(self)

    def __str__(self):
        body = ", ".join(str(c) for c in self.comps)
        return f"witt(p={self.p}, J={self.J}) [ {body} ]"


def _mincap_all(elems):
    cap = None
    for e in elems:
        cap = _mincap(cap, e.cap)
    return cap


def witt_arith(op, x, y=None):
    if op == "add":
        return x + y
    if op == "mul":
        return x * y
    if op == "sub":
        return x - y
    if op == "neg":
        return -x
    raise ValueError(f"unknown Witt operation {op!r}")


def witt_teichmuller(t, J=3):
    # components k >= 1 of [x + O(t^E)] - [x] vanish below t^E when v(x) >= 0
    cap = t.cap
    return WittElem([t] + [TiltElem(t.p, {}, cap, t.f) for _ in range(J - 1)])


def witt_frobenius(x, k=1):
    return x.frobenius(k)


# ------------------------------------------------------------- valuations

def _witt_bounds(w, b):
    """(value, certified) candidates per component plus the p^J tail bound."""
    b = as_fraction(b)
    if b <= 0:
        raise ValueError("b must be positive")
    out = []
    for k, c in enumerate(w.comps):
        v = c.valuation()
        if v.certified:
            out.append((v.value + Fraction(k) / b, True))
        elif c.cap is not None:
            vt = Fraction(c.p, c.p - 1)
            out.append((c.cap * vt + Fraction(k) / b, False))
    out.append((Fraction(w.J) / b, False))
    return out


def _summarize(cands):
    best = min(v for v, _ in cands)
    certified = any(v == best and ok for v, ok in cands) and not any(
        v <= best and not ok for v, ok in cands)
    return ValLB(best, certified)


def perfect_valuation(x, b=None):
    """val^{[0,b]}: min_k(v(x_k) + k/b), extended to u-Laurent sums with v(u) = 1/b."""
    if isinstance(x, PerfectElem):
        return x.valuation() if b is None else x.with_b(b).valuation()
    return _summarize(_witt_bounds(x, b))


# ---------------------------------------------------------- perfect model

class PerfectElem:
    """Finite sum u^i w_i with Witt coefficients, tagged by [0, b] and lambda."""

    __slots__ = ("b", "lam", "terms", "p", "J", "f")

    def __init__(self, terms, b, lam=1, p=None, J=None, f=1):
        self.b = as_fraction(b)
        self.lam = as_fraction(lam)
        if self.b <= 0:
            raise ValueError("b must be positive")
        clean = {}
        for i, w in terms.items():
            if p is None:
                p, J, f = w.p, w.J, w.f
            elif (w.p, w.J, w.f) != (p, J, f):
                raise IncompatibleRingError("Witt coefficients differ in (p, J, f)")
            clean[int(i)] = w
        if p is None:
            raise ValueError("an empty perfect element needs p and J")
        self.p, self.J, self.f = p, J, f
        self.terms = clean

    def like(self, terms, b=None):
        return PerfectElem(terms, self.b if b is None else b, self.lam, self.p, self.J, self.f)

    def with_b(self, b):
        return self.like(dict(self.terms), b)

    def _check(self, other):
        if not isinstance(other, PerfectElem):
            raise IncompatibleRingError("expected a perfect element")
        if (self.p, self.J, self.f, self.lam) != (other.p, other.J, other.f, other.lam):
            raise IncompatibleRingError("perfect elements live over different rings")

    def __add__(self, other):
        self._check(other)
        out = dict(self.terms)
        for i, w in other.terms.items():
            out[i] = out[i] + w if i in out else w
        return self.like(out, min(self.b, other.b))

    def __neg__(self):
        return self.like({i: -w for i, w in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        self._check(other)
        out = {}
        for i, w in self.terms.items():
            for j, z in other.terms.items():
                prod = w * z
                out[i + j] = out[i + j] + prod if i + j in out else prod
        return self.like(out, min(self.b, other.b))

    def frobenius(self, k=1):
        return self.like({i: w.frobenius(k) for i, w in self.terms.items()},
                         self.b / Fraction(self.p) ** k)

    def valuation(self):
        cands = []
        for i, w in self.terms.items():
            shift = Fraction(i) / self.b
            cands.extend((v + shift, ok) for v, ok in _witt_bounds(w, self.b))
        if not cands:
            return ValLB(INF, False)
        val = _summarize(cands)
        single = len(self.terms) == 1 and next(iter(self.terms.values())).is_teichmuller()
        return ValLB(val.value, val.certified and single)

    def agrees(self, other, cap=None):
        self._check(other)
        keys = set(self.terms) | set(other.terms)
        for i in keys:
            x = self.terms.get(i)
            y = other.terms.get(i)
            ref = x or y
            zero = WittElem.zero(self.p, self.J, self.f, None)
            if not (x or zero).agrees(y or zero, _mincap(cap, _mincap_all(ref.comps))):
                return False
        return True

    def __eq__(self, other):
        return (isinstance(other, PerfectElem) and self.b == other.b and self.lam == other.lam
                and self.terms == other.terms)

    def __hash__(self):
        return hash((self.b, self.lam, tuple(sorted(self.terms.items()))))

    def __repr__(self):
        return str(self)

    def __str__(self):
        body = ", ".join(f"{i}: {w}" for i, w in sorted(self.terms.items()))
        body = f"{{ {body} }}" if body else "{ }"
        return f"perfect(b={fmt_rational(self.b)}, lambda={fmt_rational(self.lam)}) {body}"


def _teichmuller_of_T_power(p, level, k, J, cap, f=1):
    """[(1 + t)^(k / p^level)] with components known below t^cap."""
    base = TiltElem(p, {0: 1, 1: 1}, None, f)
    if k >= 0:
        poly = base ** k
    else:
        poly = base.truncate(cap * p ** level).inverse() ** (-k)
    poly = poly.truncate(cap * p ** level).frobenius(-level)
    return witt_teichmuller(poly.truncate(cap), J)


def perfect_from_annulus(x, cap, J=None):
    """Image of an annulus element in the perfect model, components known below t^cap.

    T_n is sent to the Teichmuller lift of (1+t)^(1/p^n); a coefficient
    a in Z/p^N is sent to its Witt vector of length J <= N.
    """
    ring = x.coeff_ring
    p = x.p
    cap = as_fraction(cap)
    if cap <= 0:
        raise PrecisionExhausted("the tilt cap must be positive")
    if ring.prec is None:
        if J not in (None, 1):
            raise IncompatibleRingError("characteristic-p coefficients give Witt length 1")
        J = 1
    else:
        J = min(3, ring.prec) if J is None else J
        if J > ring.prec:
            raise PrecisionExhausted(
                f"Witt length {J} exceeds the coefficient precision p^{ring.prec}")
    if x.spole:
        raise HypothesisViolation("pi-denominators are not supported by the perfect embedding")
    basis = {}
    out = {}
    for (k, j), a in x.terms.items():
        if k not in basis:
            basis[k] = _teichmuller_of_T_power(p, x.level, k, J, cap)
        term = WittElem.from_int(a, p, J) * basis[k]
        out[j] = out[j] + term if j in out else term
    return PerfectElem(out, x.interval[1] or 1, ring.lam, p, J)
