"""Imperfect overconvergent rings Lambda_{R,[a,b],K} for K = Q_p at level n.

An element is pi_0^(-s) * f where f = sum c_{k,j} T_n^k u^j is a Laurent
polynomial in T_n = [eps^(1/p^n)] and u, and pi_0 = T_0 - 1 = T_n^(p^n) - 1.
Coefficients are integers mod p^N (mixed mode) or mod p (characteristic p).

Precision is an error class rather than a number.  The unknown part of an
element lies in

    pi_0^(-s) * ( u^hi * O  +  pi_0^D * u^lo * O  [+ p^N * u^lo * O] )

where O is the closure of the integral T_n-Laurent polynomials.  The class is
carried by (lo, hi, D) and every operation below maps it into a class of the
same shape, which is what makes precision tracking sound.
"""

from fractions import Fraction
import math

from .coeff import INF, CoeffElem, PAdicScalar, ValLB, as_fraction, fmt_rational, vp
from .errors import (DirectionError, HypothesisViolation, IncompatibleRingError,
                     PrecisionExhausted)


def v_pibar(p):
    return Fraction(p, p - 1)


def s_of(b, p):
    """s(b) = (p-1)/(p b)."""
    return Fraction(p - 1) / (p * b)


def _is_p_power(x, p):
    x = Fraction(x)
    if x <= 0:
        return False
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
    while den % p == 0:
        den //= p
    return num == den == 1


class CoeffRing:
    """Shared coefficient data of an annulus element."""

    __slots__ = ("p", "lam", "prec")

    def __init__(self, p, lam=1, prec=None):
        self.p = p
        self.lam = as_fraction(lam)
        self.prec = prec

    @property
    def modulus(self):
        return self.p if self.prec is None else self.p ** self.prec

    def key(self):
        return (self.p, self.lam, self.prec)

    def __eq__(self, other):
        return isinstance(other, CoeffRing) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


def _floor_div_frac(x, p):
    return math.floor(Fraction(x) / p)


class AnnulusElem:
    __slots__ = ("p", "lam", "prec", "level", "interval", "terms", "ulo", "uhi",
                 "spole", "pierr", "hgain", "exp_window", "clamped")

    def __init__(self, p, terms=None, level=0, interval=(0, Fraction(2, 3)), lam=1, prec=None,
                 u_window=(0, INF), exp_window=None, spole=0, pierr=INF, clamped=False,
                 check_interval=True, hgain=0):
        """``terms`` maps T_n-exponent k to a CoeffElem, or (k, j) to an integer."""
        self.p = p
        self.lam = as_fraction(lam)
        self.prec = prec
        self.level = level
        a, b = (as_fraction(x) for x in interval)
        self.interval = (a, b)
        if check_interval:
            validate_interval(p, self.lam, a, b)
        ulo, uhi = u_window
        flat = {}
        for key, val in (terms or {}).items():
            if isinstance(val, CoeffElem):
                if (val.p, val.lam, val.prec) != (p, self.lam, prec):
                    raise IncompatibleRingError("coefficient ring does not match the annulus")
                ulo = min(ulo, val.window[0])
                uhi = min(uhi, val.window[1])
                for j, c in val.terms.items():
                    flat[(key, j)] = flat.get((key, j), 0) + c
            else:
                flat[key] = flat.get(key, 0) + val
        self.ulo, self.uhi = ulo, uhi
        mod = self.modulus
        clean = {}
        for (k, j), c in flat.items():
            c %= mod
            if c and j < uhi:
                if j < ulo:
                    raise ValueError(f"u-exponent {j} below the window start {ulo}")
                clean[(k, j)] = c
        self.terms = clean
        self.spole = spole
        self.pierr = pierr if pierr == INF else Fraction(pierr)
        self.clamped = clamped
        self.hgain = Fraction(hgain)
        self.exp_window = _hull(clean, exp_window)

    # ---------------------------------------------------------------- basics

    @classmethod
    def _raw(cls, src, terms, **kw):
        x = object.__new__(cls)
        x.p, x.lam, x.prec = src.p, src.lam, src.prec
        x.level = kw.get("level", src.level)
        x.interval = kw.get("interval", src.interval)
        x.ulo = kw.get("ulo", src.ulo)
        x.uhi = kw.get("uhi", src.uhi)
        x.spole = kw.get("spole", src.spole)
        x.pierr = kw.get("pierr", src.pierr)
        x.clamped = kw.get("clamped", src.clamped)
        x.hgain = kw.get("hgain", src.hgain)
        mod = x.modulus
        uhi = x.uhi
        clean = {}
        for key, c in terms.items():
            c %= mod
            if c and key[1] < uhi:
                clean[key] = c
        x.terms = clean
        x.exp_window = _hull(clean, kw.get("exp_window"))
        return x

    @property
    def modulus(self):
        return self.p if self.prec is None else self.p ** self.prec

    @property
    def coeff_ring(self):
        return CoeffRing(self.p, self.lam, self.prec)

    @property
    def char_p(self):
        return self.prec is None

    @property
    def b(self):
        return self.interval[1]

    def ring_key(self):
        return (self.p, self.lam, self.prec)

    def coeff(self, k):
        hi = self.uhi if self.uhi != INF else max([j + 1 for (_, j) in self.terms] + [self.ulo + 1])
        return CoeffElem(self.p, self.lam, {j: c for (kk, j), c in self.terms.items() if kk == k},
                         self.prec, (self.ulo, hi))

    def coefficients(self):
        """T-exponent -> {u-exponent: residue}."""
        out = {}
        for (k, j), c in self.terms.items():
            out.setdefault(k, {})[j] = c
        return out

    def like(self, terms, **kw):
        return AnnulusElem._raw(self, terms, **kw)

    def zero(self):
        return self.like({})

    def one(self):
        return self.constant(1)

    def constant(self, c):
        return self.monomial(0, 0, c)

    def monomial(self, k, j=0, c=1):
        # exact, so the u-window only has to contain u^j
        return self.like({(k, j): c}, spole=0, pierr=INF, hgain=0, ulo=min(self.ulo, j))

    def is_zero(self):
        return not self.terms

    def lowest_u(self):
        if not self.terms:
            return self.uhi
        return min(j for (_, j) in self.terms)

    # ------------------------------------------------------------- precision

    def prec_bound(self):
        """Lower bound for the valuation of the unknown part."""
        b = self.b
        lam_b = self.lam * b
        raw = Fraction(self.uhi) / lam_b + self.hgain * v_pibar(self.p) if self.uhi != INF else INF
        lo_term = Fraction(self.ulo) / lam_b
        if self.pierr != INF:
            raw = min(raw, self.pierr * v_pibar(self.p) + lo_term)
        if self.prec is not None:
            raw = min(raw, Fraction(self.prec) / b + lo_term)
        if raw == INF:
            return INF
        return raw - self.spole * v_pibar(self.p)

    def precision_descriptor(self):
        prec = "charp" if self.prec is None else f"p^{self.prec}"
        hi = "inf" if self.uhi == INF else str(self.uhi)
        return (f"p={self.p} lambda={fmt_rational(self.lam)} coeff={prec} level={self.level} "
                f"interval=[{fmt_rational(self.interval[0])},{fmt_rational(self.b)}] "
                f"uwindow=[{self.ulo},{hi}) hgain={fmt_rational(self.hgain)} pole={self.spole} "
                f"pierr={fmt_rational(self.pierr)} bound={fmt_rational(self.prec_bound())}")

    def with_u_window(self, hi):
        """Forget every u-exponent >= hi."""
        return self.like(self.terms, uhi=min(self.uhi, hi))

    def with_pierr(self, D):
        """Declare the pi_0-adic error order D (only ever lowers precision)."""
        return self.like(self.terms, pierr=min(self.pierr, Fraction(D)))

    # ------------------------------------------------------------- alignment

    def _compat(self, other):
        if not isinstance(other, AnnulusElem):
            raise IncompatibleRingError("expected an annulus element")
        if self.ring_key() != other.ring_key():
            raise IncompatibleRingError(
                f"coefficient rings differ: {self.ring_key()} vs {other.ring_key()}")

    def _aligned(self, other):
        self._compat(other)
        x, y = self, other
        if x.level < y.level:
            x = x.raise_level(y.level)
        elif y.level < x.level:
            y = y.raise_level(x.level)
        a = max(x.interval[0], y.interval[0])
        b = min(x.b, y.b)
        if a > b:
            raise IncompatibleRingError("intervals do not meet")
        if x.interval != (a, b):
            x = x.like(x.terms, interval=(a, b))
        if y.interval != (a, b):
            y = y.like(y.terms, interval=(a, b))
        s = max(x.spole, y.spole)
        return x._with_pole(s), y._with_pole(s)

    def _pi0_power_terms(self, terms, e):
        """terms * pi_0^e as a T_n-Laurent dict."""
        step = self.p ** self.level
        mod = self.modulus
        for _ in range(e):
            out = {}
            for (k, j), c in terms.items():
                key = (k + step, j)
                out[key] = (out.get(key, 0) + c) % mod
                out[(k, j)] = (out.get((k, j), 0) - c) % mod
            terms = {key: c for key, c in out.items() if c}
        return terms

    def _with_pole(self, s):
        if s == self.spole:
            return self
        d = s - self.spole
        if d < 0:
            raise ValueError("pole order can only be raised")
        pierr = self.pierr + d if self.pierr != INF else INF
        return self.like(self._pi0_power_terms(self.terms, d), spole=s, pierr=pierr,
                         hgain=self.hgain + d)

    # ------------------------------------------------------------ arithmetic

    def __add__(self, other):
        if isinstance(other, int):
            other = self.constant(other)
        x, y = self._aligned(other)
        out = dict(x.terms)
        mod = x.modulus
        for key, c in y.terms.items():
            out[key] = (out.get(key, 0) + c) % mod
        return x.like(out, ulo=min(x.ulo, y.ulo), uhi=min(x.uhi, y.uhi),
                      pierr=min(x.pierr, y.pierr), hgain=_tail_gain(x, y),
                      clamped=x.clamped or y.clamped,
                      exp_window=_join(x.exp_window, y.exp_window))

    __radd__ = __add__

    def __neg__(self):
        return self.like({key: -c for key, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, int):
            return self + (-other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            return self.like({key: c * other for key, c in self.terms.items()})
        x, y = self._aligned_for_mul(other)
        mod = x.modulus
        out = {}
        uhi = min(x.uhi + y.lowest_u(), y.uhi + x.lowest_u())
        by_k = {}
        for (k2, j2), c2 in y.terms.items():
            by_k.setdefault(k2, []).append((j2, c2))
        for (k1, j1), c1 in x.terms.items():
            for k2, lst in by_k.items():
                k = k1 + k2
                for j2, c2 in lst:
                    j = j1 + j2
                    if j < uhi:
                        key = (k, j)
                        out[key] = out.get(key, 0) + c1 * c2
        for key in out:
            out[key] %= mod
        we = None
        if x.exp_window and y.exp_window:
            we = (x.exp_window[0] + y.exp_window[0], x.exp_window[1] + y.exp_window[1] - 1)
        return x.like(out, ulo=x.ulo + y.ulo, uhi=uhi, spole=x.spole + y.spole,
                      pierr=min(x.pierr, y.pierr), hgain=_tail_gain(x, y),
                      clamped=x.clamped or y.clamped, exp_window=we)

    __rmul__ = __mul__

    def _aligned_for_mul(self, other):
        self._compat(other)
        x, y = self, other
        if x.level < y.level:
            x = x.raise_level(y.level)
        elif y.level < x.level:
            y = y.raise_level(x.level)
        a = max(x.interval[0], y.interval[0])
        b = min(x.b, y.b)
        if a > b:
            raise IncompatibleRingError("intervals do not meet")
        if x.interval != (a, b):
            x = x.like(x.terms, interval=(a, b))
        if y.interval != (a, b):
            y = y.like(y.terms, interval=(a, b))
        return x, y

    def __pow__(self, n):
        if n < 0:
            raise ValueError("negative powers are not supported")
        result = self.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -------------------------------------------------------------- equality

    def __eq__(self, other):
        return (isinstance(other, AnnulusElem) and self.ring_key() == other.ring_key()
                and self.level == other.level and self.interval == other.interval
                and self.spole == other.spole and self.terms == other.terms
                and (self.ulo, self.uhi, self.pierr, self.hgain)
                == (other.ulo, other.uhi, other.pierr, other.hgain))

    def __hash__(self):
        return hash((self.ring_key(), self.level, self.spole, tuple(sorted(self.terms.items()))))

    def same_value(self, other):
        """Exact equality of the known parts after aligning levels and poles."""
        d = self - other
        return d.is_zero()

    def residual(self, other):
        """(valuation of self - other, precision bound of the difference)."""
        d = self - other
        return d.valuation(), d.prec_bound()

    def agrees(self, other):
        """self == other up to the combined precision bound."""
        d = self - other
        if d.is_zero():
            return True
        return d.valuation().value >= d.prec_bound()

    # ------------------------------------------------------------ valuation

    def valuation(self):
        """(1/b) * min_i (v_D(A_i) + i b v(pibar)/p^n) - s v(pibar), A_i the pi_n-coefficients."""
        b = self.b
        if b <= 0:
            raise HypothesisViolation("the valuation needs an interval [a, b] with b > 0")
        pb = self.prec_bound()
        if not self.terms:
            return ValLB(pb if pb != INF else INF, False)
        p = self.p
        vpm = v_pibar(p) / p ** self.level
        lam_b = self.lam * b
        shift = -min(k for (k, _) in self.terms)
        mod = self.modulus
        slices = {}
        for (k, j), c in self.terms.items():
            slices.setdefault(j, []).append((k + shift, c))
        min_u = min(Fraction(j) / lam_b for j in slices)
        pole = self.spole * v_pibar(p)
        max_deg = max(k for lst in slices.values() for k, _ in lst)
        best = INF
        i = 0
        while i <= max_deg:
            floor_i = min_u + i * vpm - pole
            if floor_i >= min(best, pb):
                break
            for j, lst in slices.items():
                a = sum(math.comb(k, i) * c for k, c in lst if k >= i) % mod
                if a:
                    val = Fraction(j) / lam_b + i * vpm - pole
                    if self.prec is not None:
                        val += Fraction(vp(a, p)) / b
                    if val < best:
                        best = val
            i += 1
        if best == INF:
            return ValLB(pb, False)
        if best >= pb:
            return ValLB(pb, False)
        return ValLB(best, self.lam == 1)

    def is_integral(self):
        return self.valuation().value >= 0

    # ------------------------------------------------------------- operators

    def raise_level(self, new_level):
        if new_level < self.level:
            raise DirectionError(f"cannot lower the level from {self.level} to {new_level}")
        if new_level == self.level:
            return self
        scale = self.p ** (new_level - self.level)
        we = None
        if self.exp_window:
            we = (self.exp_window[0] * scale, (self.exp_window[1] - 1) * scale + 1)
        return self.like({(k * scale, j): c for (k, j), c in self.terms.items()},
                         level=new_level, exp_window=we)

    def phi(self):
        """T_n -> T_n^p; interval [a,b] -> [a/p, b/p]."""
        p = self.p
        if self.spole and not self.char_p:
            raise HypothesisViolation("phi of a pi-denominator needs characteristic-p coefficients")
        a, b = self.interval
        we = None
        if self.exp_window:
            we = (self.exp_window[0] * p, (self.exp_window[1] - 1) * p + 1)
        return self.like({(k * p, j): c for (k, j), c in self.terms.items()},
                         interval=(a / p, b / p), spole=self.spole * p,
                         pierr=self.pierr * p if self.pierr != INF else INF,
                         hgain=self.hgain * p, exp_window=we)

    def _psi_prepare(self):
        """(s', terms of pi_0^(p s' - s) f, pierr relative to pi_0^(-p s'))."""
        s = self.spole
        if s and not self.char_p:
            raise HypothesisViolation("psi of a pi-denominator needs characteristic-p coefficients")
        s_new = -(-s // self.p)
        r = self.p * s_new - s
        terms = self._pi0_power_terms(self.terms, r)
        return s_new, terms

    def _psi_interval(self):
        a, b = self.interval
        nb = b * self.p
        if nb >= self.lam:
            return (a, b), True
        return (a * self.p, nb), False

    def decompose_phi_basis(self):
        """[a_0, ..., a_{p-1}] with self = sum_i T_n^i phi(a_i)."""
        p = self.p
        s_new, terms = self._psi_prepare()
        parts = [dict() for _ in range(p)]
        for (k, j), c in terms.items():
            i = k % p
            parts[i][((k - i) // p, j)] = c
        interval, clamped = self._psi_interval()
        pierr = self._psi_class(self.pierr, s_new)
        hgain = self._psi_class(self.hgain, s_new)
        return [self.like(part, interval=interval, spole=s_new, pierr=pierr, hgain=hgain,
                          clamped=clamped or self.clamped) for part in parts]

    def _psi_class(self, D, s_new):
        """Error pi_0^(D - s) O maps into pi_0^(floor((D - s)/p)) O under psi."""
        if D == INF:
            return INF
        scale = self.p ** self.level
        return Fraction(math.floor((D - self.spole) * scale / self.p), scale) + s_new

    def psi(self):
        return self.decompose_phi_basis()[0]

    def gamma(self, c, pi_degree=None):
        """gamma_c: T_0 -> T_0^c.  ``c`` is an int or a PAdicScalar unit."""
        p = self.p
        pierr = self.pierr
        if isinstance(c, PAdicScalar):
            if c.prime != p:
                raise IncompatibleRingError("chi value lives over a different prime")
            if not c.is_unit():
                raise HypothesisViolation("chi value must be a p-adic unit")
            M = c.precision_exp
            N = 1 if self.prec is None else self.prec
            if M < N:
                raise PrecisionExhausted(
                    f"chi known mod p^{M} cannot act at coefficient precision p^{N}")
            # T_n^(p^M r) - 1 lies in pi_n^(p^(M-N+1)) O + p^N O
            amb = Fraction(p ** (M - N + 1), p ** self.level)
            pierr = min(pierr, amb)
            c = c.residue
        elif c % p == 0:
            raise HypothesisViolation(f"chi value {c} is not a p-adic unit")
        terms = {(k * c, j): v for (k, j), v in self.terms.items()}
        out = self.like(terms, pierr=pierr, exp_window=None)
        if self.spole:
            out = out._divide_by_h_power(c, self.spole, pi_degree)
        return out

    def gamma_minus_one(self, c):
        """gamma_c(x) - x with the error classes pushed through gamma - 1.

        In characteristic p with c = 1 + p^n r, gamma(pi_m) = pi_m h and h - 1
        lies in pi_m^(p^n - 1), while (gamma - 1) O lies in pi_m^(p^n) O.  So
        gamma - 1 maps pi_m^(-e) O into pi_m^(-e + g) O with g = p^n when
        p | e and g = p^n - 1 otherwise.
        """
        p = self.p
        c_int = c.residue if isinstance(c, PAdicScalar) else c
        lvl = self.p ** self.level
        n_g = vp(c_int - 1, p) if c_int != 1 else INF
        if n_g == INF:
            return self.zero().like({}, pierr=INF, uhi=INF)

        def lift(cls):
            if cls == INF or not self.char_p or n_g == 0:
                return cls
            e = (self.spole - cls) * lvl
            if e.denominator != 1:
                return cls + Fraction(p ** n_g - 1, lvl)
            g = p ** n_g if e.numerator % p == 0 else p ** n_g - 1
            return cls + Fraction(g, lvl)

        hgain = lift(self.hgain) if self.uhi != INF else self.hgain
        pierr = lift(self.pierr)
        base = self.like(self.terms, pierr=INF, hgain=hgain)
        pi_degree = None
        if self.spole:
            bound = base.like(base.terms, pierr=pierr).prec_bound()
            if bound == INF:
                raise PrecisionExhausted("an exact element with pi-denominators needs a finite precision")
            lam_b = self.lam * self.b
            need = (bound + self.spole * v_pibar(p) - Fraction(self.ulo) / lam_b) / v_pibar(p)
            pi_degree = max(1, math.ceil(need))
        out = base.gamma(c, pi_degree=pi_degree) - base
        return out.like(out.terms, pierr=min(out.pierr, pierr), hgain=hgain).reduce_pole()

    def _divide_by_h_power(self, c, s, pi_degree):
        """Multiply by h^(-s), h = ((1+pi_0)^c - 1)/pi_0, truncated pi_0-adically."""
        if c <= 0:
            raise HypothesisViolation("gamma on pi-denominators needs a positive chi representative")
        p = self.p
        mod = self.modulus
        if pi_degree is None:
            raw = self.prec_bound()
            if raw == INF:
                raise PrecisionExhausted("an exact element with pi-denominators needs pi_degree")
            raw += self.spole * v_pibar(p)
            lam_b = self.lam * self.b
            need = (raw - Fraction(self.ulo) / lam_b) / v_pibar(p)
            pi_degree = max(1, math.ceil(need))
        h = [math.comb(c, i + 1) % mod for i in range(min(c, pi_degree))]
        h += [0] * (pi_degree - len(h))
        hinv = _series_inverse(h, mod, pi_degree)
        hs = _series_pow(hinv, s, mod, pi_degree)
        # pi_0-series -> T_0-Laurent -> T_n exponents
        tpoly = {}
        for i, a in enumerate(hs):
            if a:
                for e in range(i + 1):
                    coef = math.comb(i, e) * (-1) ** (i - e)
                    tpoly[e] = (tpoly.get(e, 0) + a * coef) % mod
        scale = p ** self.level
        factor = self.like({(e * scale, 0): a for e, a in tpoly.items() if a},
                           spole=0, pierr=INF, ulo=0, uhi=INF)
        out = self._mul_known(factor)
        return out.like(out.terms, pierr=min(out.pierr, Fraction(pi_degree)))

    def _mul_known(self, factor):
        """Multiply by an exact integral T-Laurent factor with u-degree 0."""
        mod = self.modulus
        out = {}
        for (k1, j), c1 in self.terms.items():
            for (k2, _), c2 in factor.terms.items():
                key = (k1 + k2, j)
                out[key] = (out.get(key, 0) + c1 * c2) % mod
        return self.like(out, exp_window=None)

    def reduce_pole(self, max_steps=None):
        """Divide f by pi_0 while it is exactly divisible (characteristic p).

        Both error classes shift by one pi_0-power, so the bound is unchanged.
        """
        if not self.char_p or not self.spole:
            return self
        p = self.p
        P = p ** self.level
        terms, s, pierr = self.terms, self.spole, self.pierr
        steps = 0
        while s > 0 and terms and (max_steps is None or steps < max_steps):
            q = _divide_by_T_power_minus_one(terms, P, p)
            if q is None:
                break
            terms = q
            s -= 1
            steps += 1
            if pierr != INF:
                pierr -= 1
        if not steps:
            return self
        return self.like(terms, spole=s, pierr=pierr, hgain=self.hgain - steps)

    def fold(self, M, center=True):
        """Reduce T_n-exponents modulo p^M (characteristic p), absorbing T_n^(p^M) - 1 = pi_n^(p^M)."""
        if not self.char_p:
            raise HypothesisViolation("exponent folding is implemented for characteristic p only")
        m = self.p ** M
        lo = -(m // 2) if center else 0
        out = {}
        moved = False
        for (k, j), c in self.terms.items():
            k2 = (k - lo) % m + lo
            moved = moved or k2 != k
            key = (k2, j)
            out[key] = (out.get(key, 0) + c) % self.p
        pierr = self.pierr
        if moved:
            pierr = min(pierr, Fraction(m, self.p ** self.level))
        return self.like(out, pierr=pierr, exp_window=None)

    def restrict_interval(self, interval):
        a, b = (as_fraction(x) for x in interval)
        if a < self.interval[0] or b > self.b:
            raise DirectionError("restriction must shrink the interval")
        validate_interval(self.p, self.lam, a, b)
        return self.like(self.terms, interval=(a, b))

    def to_level(self, level):
        """Reinterpret exponents as level-``level`` exponents (phi^(level - n) inverse pullback).

        T_n^k -> T_level^k, so the value is phi^(-(level - n)) of self.
        """
        if level < self.level:
            raise DirectionError("use phi to move down in level")
        d = level - self.level
        a, b = self.interval
        if d and self.spole:
            raise HypothesisViolation("inverse Frobenius of a pi-denominator is not modelled")
        return self.like(self.terms, level=level, interval=(a * self.p ** d, b * self.p ** d),
                         pierr=self.pierr / self.p ** d if self.pierr != INF else INF,
                         hgain=self.hgain / self.p ** d)

    # ---------------------------------------------------------------- output

    def __repr__(self):
        return str(self)

    def __str__(self):
        prec = "charp" if self.prec is None else str(self.prec)
        a, b = self.interval
        wlo, whi = self.exp_window if self.exp_window else (0, 0)
        hi = "inf" if self.uhi == INF else str(self.uhi)
        head = (f"annulus(p={self.p}, lambda={fmt_rational(self.lam)}, prec={prec}, "
                f"level={self.level}, interval=[{fmt_rational(a)}, {fmt_rational(b)}], "
                f"window=[{wlo},{whi}), uwindow=[{self.ulo},{hi})")
        if self.spole:
            head += f", pole={self.spole}"
        if self.pierr != INF:
            head += f", pierr={fmt_rational(self.pierr)}"
        if self.hgain and self.uhi != INF:
            head += f", hgain={fmt_rational(self.hgain)}"
        head += ")"
        blocks = []
        for k, coeffs in sorted(self.coefficients().items()):
            inner = ", ".join(f"{j}: {c}" for j, c in sorted(coeffs.items()))
            blocks.append(f"{k}: coeff{{{inner}}}")
        body = "{ " + ", ".join(blocks) + " }" if blocks else "{ }"
        return f"{head} {body}"


def _tail_gain(x, y):
    """pi_0-gain of the joint u^hi class; an element without u-tail imposes none."""
    gains = [e.hgain for e in (x, y) if e.uhi != INF]
    return min(gains) if gains else 0


def _hull(terms, given):
    ks = [k for (k, _) in terms]
    if not ks:
        return given
    lo, hi = min(ks), max(ks) + 1
    if given:
        lo, hi = min(lo, given[0]), max(hi, given[1])
    return (lo, hi)


def _join(w1, w2):
    if not w1:
        return w2
    if not w2:
        return w1
    return (min(w1[0], w2[0]), max(w1[1], w2[1]))


def validate_interval(p, lam, a, b):
    if not 0 <= a <= b:
        raise HypothesisViolation(f"interval [{a}, {b}] must satisfy 0 <= a <= b")
    if b <= 0:
        raise HypothesisViolation("interval end b must be positive")
    if b / lam >= 1:
        raise HypothesisViolation(
            f"b/lambda = {fmt_rational(b / lam)} must stay below r_K = 1")
    if not _is_p_power(s_of(b, p), p):
        raise HypothesisViolation(f"s(b) = {fmt_rational(s_of(b, p))} is not a power of {p}")


def _divide_by_T_power_minus_one(terms, P, p):
    """terms / (T^P - 1) over F_p when exact, else None."""
    classes = {}
    for (k, j), c in terms.items():
        classes.setdefault((k % P, j), []).append((k, c))
    out = {}
    for (_, j), lst in classes.items():
        # polynomial in X = T^P: sum c X^e (times T^r); divide by X - 1 from the top
        lst.sort(reverse=True)
        r = lst[0][0] % P
        coeffs = {(k - r) // P: c for k, c in lst}
        hi = max(coeffs)
        lo = min(coeffs)
        carry = 0
        quot = {}
        for e in range(hi, lo - 1, -1):
            carry = (carry + coeffs.get(e, 0)) % p
            if e == lo:
                if carry:
                    return None
                break
            if carry:
                quot[e - 1] = carry
        for e, c in quot.items():
            out[(e * P + r, j)] = c
    return out


def inverse_T_power_minus_one(template, e, target):
    """Approximation of 1/(T_n^e - 1) (characteristic p, p does not divide e / p^v).

    Uses T_n^e - 1 = pi_n^(p^v) * phi^v(h)(T_n), h = (T^e' - 1)/(T - 1), with
    h^(-1) expanded as a pi_n-series; the result's error stays below the
    absolute valuation ``target``.
    """
    if not template.char_p:
        raise HypothesisViolation("series inversion is implemented for characteristic p only")
    if e <= 0:
        raise HypothesisViolation("the exponent must be positive")
    p = template.p
    m = template.level
    v = 0
    e1 = e
    while e1 % p == 0:
        e1 //= p
        v += 1
    pv, pm = p ** v, p ** m
    a = -(-pv // pm)
    extra = pm * a - pv
    vp_m = v_pibar(p) / pm
    # need (extra + pv*Dh) * vp_m - a v(pibar) + lo-term >= target
    lo_term = Fraction(template.ulo) / (template.lam * template.b)
    need = (Fraction(target) - lo_term + a * v_pibar(p)) / vp_m - extra
    Dh = max(1, math.ceil(need / pv) + 1)
    h = [math.comb(e1, i + 1) % p for i in range(min(e1, Dh))]
    h += [0] * (Dh - len(h))
    hinv = _series_inverse(h, p, Dh)
    # pi_n^extra * sum_i hinv[i] pi_n^(pv i) in the T_n basis
    poly = {}
    for i, c in enumerate(hinv):
        if not c:
            continue
        deg = extra + pv * i
        # (T - 1)^deg over F_p via the binomial theorem
        for t in range(deg + 1):
            bc = math.comb(deg, t) % p
            if bc:
                poly[t] = (poly.get(t, 0) + c * bc * (-1) ** (deg - t)) % p
    pierr = Fraction(extra + pv * Dh, pm)
    return template.like({(k, 0): c for k, c in poly.items() if c}, spole=a, pierr=pierr,
                         ulo=0, uhi=INF, exp_window=None)


def _series_inverse(a, mod, n):
    """Inverse of the power series a (a[0] a unit) modulo t^n."""
    inv0 = pow(a[0] % mod, -1, mod)
    out = [0] * n
    out[0] = inv0
    for i in range(1, n):
        acc = 0
        for k in range(1, min(i, len(a) - 1) + 1):
            acc += a[k] * out[i - k]
        out[i] = (-acc * inv0) % mod
    return out


def _series_mul(a, b, mod, n):
    out = [0] * n
    for i, x in enumerate(a[:n]):
        if x:
            for j, y in enumerate(b[:n - i]):
                out[i + j] += x * y
    return [c % mod for c in out]


def _series_pow(a, e, mod, n):
    result = [1] + [0] * (n - 1)
    base = list(a)
    while e:
        if e & 1:
            result = _series_mul(result, base, mod, n)
        e >>= 1
        if e:
            base = _series_mul(base, base, mod, n)
    return result


# ------------------------------------------------------------------ wrappers

def annulus_arith(op, x, y=None):
    if op == "add":
        return x + y
    if op == "mul":
        return x * y
    if op == "sub":
        return x - y
    if op == "neg":
        return -x
    raise ValueError(f"unknown annulus operation {op!r}")


def annulus_raise_level(x, new_level):
    return x.raise_level(new_level)


def annulus_valuation(x):
    return x.valuation()


def annulus_is_integral(x):
    return x.is_integral()


def phi(x):
    return x.phi()


def psi(x):
    return x.psi()


def decompose_phi_basis(x):
    return x.decompose_phi_basis()


def recompose_phi_basis(parts):
    """sum_i T_n^i phi(a_i)."""
    total = None
    for i, a in enumerate(parts):
        term = a.phi()
        term = term * term.monomial(i) if i else term
        total = term if total is None else total + term
    return total


def gamma(x, c, pi_degree=None):
    return x.gamma(c, pi_degree)


def pi_element(p, level=0, **kw):
    """pi_0 = T_0 - 1 written at the given level."""
    return AnnulusElem(p, {(p ** level, 0): 1, (0, 0): -1}, level=level, **kw)
