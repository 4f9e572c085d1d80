"""Normalized traces R_{K,n}, (gamma - 1)-inversion and cocycle descent.

Desk elements live at a finite level m, so the telescoping sum over levels
j > n is finite.  Inversion and descent run over characteristic-p
coefficients.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import math

from .annulus import (AnnulusElem, inverse_T_power_minus_one, v_pibar)
from .coeff import INF, PAdicScalar, fmt_rational, vp
from .errors import Divergence, HypothesisViolation, PrecisionExhausted
from .witt import PerfectElem


@dataclass
class TraceSplit:
    input: AnnulusElem
    trace_part: AnnulusElem
    kernel_part: AnnulusElem
    n: int

    def recombines(self):
        lvl = self.input.level
        top = self.trace_part.raise_level(max(lvl, self.trace_part.level))
        total = top + self.kernel_part
        return total.same_value(self.input)


@dataclass
class TSReport:
    axiom: str
    stats: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    passed: bool = False
    notes: list = field(default_factory=list)

    def lines(self):
        out = [f"axiom={self.axiom} pass={str(self.passed).lower()}"]
        for k in sorted(self.constants):
            out.append(f"constant {k}={_fmt(self.constants[k])}")
        for k in sorted(self.stats):
            out.append(f"stat {k}={_fmt(self.stats[k])}")
        out.extend(f"note {n}" for n in self.notes)
        return out


def _fmt(v):
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_fmt(x)}" for k, x in sorted(v.items())) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (int, Fraction)) or v == INF or v == -INF:
        if v == -INF:
            return "-inf"
        return fmt_rational(v)
    return str(v)


def chi_value(c):
    if isinstance(c, PAdicScalar):
        return c.residue
    return int(c)


def n_of_gamma(c, p):
    c = chi_value(c)
    if c == 1:
        return INF
    return vp(c - 1, p)


# ------------------------------------------------------------------ traces

def _check_trace_hypothesis(x, n):
    lam = x.lam
    b = x.b
    if b / lam >= 1 or b / (x.p ** n * lam) >= 1:
        raise HypothesisViolation(
            f"normalized trace needs b/lambda < 1 and p^-n b/lambda < 1 (b={fmt_rational(b)}, "
            f"lambda={fmt_rational(lam)}, n={n})")
    if n < 0:
        raise HypothesisViolation("trace level must be nonnegative")


def normalized_trace(x, n):
    """R_{K,n}: keep T_m^k with p^(m-n) | k, i.e. level-0 exponents i with v_p(i) >= -n."""
    _check_trace_hypothesis(x, n)
    m = x.level
    if n >= m:
        return TraceSplit(x, x.raise_level(n), x.zero(), n)
    step = x.p ** (m - n)
    keep, rest = {}, {}
    for (k, j), c in x.terms.items():
        if k % step == 0:
            keep[(k // step, j)] = c
        else:
            rest[(k, j)] = c
    pierr = x.pierr
    if pierr != INF:
        pierr = Fraction(math.floor(pierr * x.p ** n), x.p ** n)
    trace = x.like(keep, level=n, pierr=pierr, exp_window=None)
    kernel = x.like(rest, pierr=pierr, exp_window=None)
    return TraceSplit(x, trace, kernel, n)


def trace(x, n):
    return normalized_trace(x, n).trace_part


def trace_coefficient(x, i):
    """a_i(x): the coefficient of [eps]^i for i in Z[1/p] (no pi-denominators)."""
    if x.spole:
        raise HypothesisViolation("coefficients a_i need an element without pi-denominators")
    k = Fraction(i) * x.p ** x.level
    if k.denominator != 1:
        return x.zero().coeff(0)
    return x.coeff(int(k))


def trace_valuation_audit(samples, ns, b=None, lam=None):
    """Worst TS2 gap v(x) - v(R_{K,n}(x)) per n, with monotonicity and convergence checks."""
    ns = sorted(ns)
    worst = {}
    converged = True
    finite = True
    for n in ns:
        gaps = []
        for x in samples:
            if b is not None:
                x = x.restrict_interval((x.interval[0], b)) if b != x.b else x
            r = trace(x, n)
            vx = x.valuation().value
            vr = r.valuation().value
            if vr != INF:
                gaps.append(vx - vr)
            if n >= x.level and not r.raise_level(max(n, x.level)).same_value(
                    x.raise_level(max(n, x.level))):
                converged = False
        w = max(gaps) if gaps else -INF
        if w == INF:
            finite = False
        worst[n] = w
    seq = [worst[n] for n in ns]
    monotone = all(seq[i + 1] <= seq[i] for i in range(len(seq) - 1))
    c2 = max([0] + [w for w in seq if w != -INF])
    rep = TSReport("TS2", stats={"worst_gap": worst, "monotone": monotone, "finite": finite,
                                 "converged": converged, "samples": len(samples)},
                   constants={"c2": c2}, passed=monotone and finite and converged)
    if lam is not None:
        rep.stats["lambda"] = Fraction(lam)
    return rep


def ts1_witness(c1=Fraction(1), samples=()):
    """TS1 for K = Q_p with trivial H: the constant 1 is a normalized-trace witness."""
    c1 = Fraction(c1)
    if c1 <= 0:
        raise HypothesisViolation(f"TS1 needs c1 > 0, got {fmt_rational(c1)}")
    rep = TSReport("TS1", stats={"witness": "1", "witness_valuation": 0},
                   constants={"c1": c1}, passed=0 > -c1)
    rep.notes.append("witnesses for nontrivial H_L1 in H_L2 are not modelled")
    return rep


# ------------------------------------------------------------ gamma - 1

def gamma_minus_one(z, c):
    """gamma_c(z) - z, with exact pi_0-division of the result where possible."""
    return z.gamma_minus_one(c)


def fold_lossless(z, min_M=0):
    """Fold exponents modulo the smallest p^M that costs no tracked precision."""
    if not z.terms:
        return z
    pb = z.prec_bound()
    if pb == INF:
        return z
    p = z.p
    lo_term = Fraction(z.ulo) / (z.lam * z.b)
    raw = pb + z.spole * v_pibar(p) - lo_term
    need = raw * p ** z.level / v_pibar(p)
    M = max(min_M, 0)
    while p ** M < need:
        M += 1
    ks = [k for (k, _) in z.terms]
    if max(ks) - min(ks) < p ** M:
        return z
    return z.fold(M)


def _inverse_E_minus_one(template, e, target):
    """1/(T_n^e - 1) for e != 0 with p-adic error beyond ``target``."""
    if e > 0:
        return inverse_T_power_minus_one(template, e, target)
    inv = inverse_T_power_minus_one(template, -e, target)
    return -(inv * template.monomial(-e))


def gamma_minus_one_invert_psi0(x, c, target=None, stats=None, max_steps=200):
    """y with (gamma_c - 1)(y) = x for psi(x) = 0, via the geometric series

        y = sum_k (-E/(E-1)(gamma-1))^k (E-1)^(-1) X_i    per residue class i mod p^n(gamma),

    where x = sum_i T^i X_i and E = T^(i(c-1)).
    """
    if not x.char_p:
        raise HypothesisViolation("(gamma-1)-inversion is implemented for characteristic-p coefficients")
    p = x.p
    c_int = chi_value(c)
    ng = n_of_gamma(c_int, p)
    if ng == INF or ng == 0:
        raise HypothesisViolation(f"chi = {c_int} must satisfy chi = 1 mod p and chi != 1")
    hyp = p ** ng > Fraction(2 * p, p - 1)
    if stats is not None:
        stats["n_gamma"] = ng
        stats["hypothesis"] = hyp
    if not x.decompose_phi_basis()[0].is_zero():
        raise HypothesisViolation("input is not in the psi = 0 part")
    if not x.terms:
        return x.zero()
    if target is None:
        target = x.prec_bound()
        if target == INF:
            raise PrecisionExhausted("an exact input needs an explicit target precision")
    else:
        x = x.with_u_window(max(x.ulo, math.ceil(Fraction(target) * x.lam * x.b)))
    pn = p ** ng
    m = x.level
    # make the pole a phi^n(gamma)-image: pi_0^(p^(n-m)) = phi^n(pi_m) when m < n
    if x.spole and m < ng:
        g = p ** (ng - m)
        x = x._with_pole(-(-x.spole // g) * g)
    classes = {}
    for (k, j), cval in x.terms.items():
        r = k % pn
        classes.setdefault(r, {})[(k - r, j)] = cval
    total = None
    contractions = []
    steps_used = 0
    for r, part in sorted(classes.items()):
        if r % p == 0:
            raise HypothesisViolation("input is not in the psi = 0 part")
        X = x.like(part, exp_window=None)
        e = r * (c_int - 1)
        E = x.monomial(e)
        inv = _inverse_E_minus_one(x, e, target + 2 * pn * v_pibar(p))
        factor = E * inv
        term = fold_lossless((inv * X).reduce_pole(), ng)
        y_r = term
        prev = term.valuation().value
        stall = 0
        for step in range(max_steps):
            if term.is_zero() or term.valuation().value >= term.prec_bound():
                break
            term = -(factor * gamma_minus_one(term, c_int))
            term = fold_lossless(term.reduce_pole(), ng)
            steps_used += 1
            y_r = y_r + term
            cur = term.valuation().value
            if cur != INF and prev != INF:
                contractions.append(cur - prev)
                if cur <= prev:
                    stall += 1
                    if stall >= 2:
                        raise Divergence(
                            f"geometric series does not contract (measured contraction "
                            f"{fmt_rational(cur - prev)})", cur - prev)
                else:
                    stall = 0
            prev = cur
        else:
            raise Divergence("geometric series did not reach the target precision",
                             min(contractions) if contractions else 0)
        piece = y_r * x.monomial(r) if r else y_r
        total = piece if total is None else total + piece
    if stats is not None:
        stats["steps"] = steps_used
        stats["contraction_min"] = min(contractions) if contractions else INF
    return total.reduce_pole()


def gamma_minus_one_invert_kernel(split, c, stats=None):
    """Invert gamma - 1 on ker(R_{K,n}) by telescoping over levels n < j <= m."""
    x = split.kernel_part
    n = split.n
    p = x.p
    ng = n_of_gamma(c, p)
    if ng > n:
        raise HypothesisViolation(f"n(gamma) = {ng} exceeds the trace level n = {n}")
    m = x.level
    if x.is_zero() or m <= n:
        return x.zero()
    result = None
    per_level = {}
    for j in range(n + 1, m + 1):
        upper = normalized_trace(x, j).trace_part
        lower = normalized_trace(x, j - 1).trace_part.raise_level(j)
        piece = upper - lower
        if piece.is_zero():
            continue
        lvl_stats = {}
        y = gamma_minus_one_invert_psi0(piece, c, stats=lvl_stats)
        per_level[j] = lvl_stats
        y = y.raise_level(m)
        result = y if result is None else result + y
    if stats is not None:
        stats["levels"] = per_level
    return result if result is not None else x.zero()


# ----------------------------------------------------------------- descent

def annulus_from_perfect(P, level, template):
    """Witt-length-1 perfect element -> level-``level`` annulus element.

    t^(k/p^level) is pi_level^k = (T_level - 1)^k; a cap E becomes the error
    class pi_0^E.
    """
    if not isinstance(P, PerfectElem):
        return P
    if P.J != 1:
        raise HypothesisViolation("descent runs on characteristic-p (Witt length 1) data")
    p = template.p
    scale = p ** level
    terms = {}
    smin = 0
    cap = INF
    for j, w in P.terms.items():
        comp = w.comps[0]
        if comp.cap is not None:
            cap = min(cap, comp.cap)
        for e, c in comp.terms.items():
            k = e * scale
            if k.denominator != 1:
                raise PrecisionExhausted(f"exponent {e} needs a level above {level}")
            smin = min(smin, int(k))
            terms.setdefault(j, {})[int(k)] = c
    pole = -(-(-smin) // scale) if smin < 0 else 0
    out = {}
    for j, poly in terms.items():
        for k, c in poly.items():
            deg = k + pole * scale
            for t in range(deg + 1):
                bc = math.comb(deg, t) % p
                if bc:
                    key = (t, j)
                    out[key] = (out.get(key, 0) + c * bc * (-1) ** (deg - t)) % p
    elem = template.like(out, level=level, spole=pole, exp_window=None)
    if cap != INF:
        elem = elem.with_pierr(Fraction(cap) + pole)
    return elem


def _mat_map(M, f):
    return [[f(a) for a in row] for row in M]


def _mat_mul(A, B):
    d = len(A)
    out = []
    for i in range(d):
        row = []
        for j in range(d):
            acc = None
            for k in range(d):
                t = A[i][k] * B[k][j]
                acc = t if acc is None else acc + t
            row.append(acc)
        out.append(row)
    return out


def _mat_identity_like(M):
    d = len(M)
    z = M[0][0].zero()
    return [[z.one() if i == j else z for j in range(d)] for i in range(d)]


def _mat_sub(A, B):
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def _mat_add(A, B):
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_inverse_unipotent(M, max_terms=10000):
    """(1 + X)^(-1) = sum (-X)^i for X = M - 1 divisible by u, cut at the input u-window."""
    one = _mat_identity_like(M)
    X = _mat_sub(M, one)
    if any(a.uhi == INF for row in X for a in row if not a.is_zero()):
        raise PrecisionExhausted("the unipotent inverse needs a finite u-window")
    hi = min(a.uhi for row in M for a in row)
    total = one
    term = one
    for _ in range(max_terms):
        term = _mat_map(_mat_mul(term, X), lambda a: (-a).with_u_window(hi))
        if all(a.is_zero() for row in term for a in row):
            return total
        total = _mat_add(total, term)
    raise PrecisionExhausted("unipotent inverse did not terminate")


def _mat_val(M):
    vals = [a.valuation().value for row in M for a in row if not a.is_zero()]
    return min(vals) if vals else INF


def _apply_generator(gen, M):
    if gen.get("frob"):
        return _mat_map(M, lambda a: a.phi())
    c = gen["chi"]
    return _mat_map(M, lambda a: fold_lossless(a.gamma(c)))


def _u_divisible(a, k):
    """a with its error class moved into u^k; the known part must already lie there."""
    if a.terms and a.lowest_u() < k:
        raise HypothesisViolation(f"cocycle is not congruent to 1 modulo u^{k}")
    return a.like(a.terms, ulo=max(a.ulo, k))


def conjugate_cocycle(gens, B):
    """U_g -> B^-1 U_g g(B) for unipotent B."""
    Binv = mat_inverse_unipotent(B)
    return [dict(g, matrix=_mat_mul(_mat_mul(Binv, g["matrix"]), _apply_generator(g, B)))
            for g in gens]


def descend_cocycle(U, params, log=None):
    """Successive approximation B_{r+1} = B_r (1 + X_r), X_r = -(gamma-1)^(-1)(kernel part of U - 1).

    ``U`` is a list of generator dicts {"chi": c} or {"frob": True}, each with a
    "matrix" of AnnulusElem (or Witt-length-1 PerfectElem) entries.  Returns
    (B, descended, log) where ``descended`` holds the level-n trace parts of the
    conjugated matrices.
    """
    n = params["n"]
    level = params.get("level")
    rounds_max = params.get("rounds_max", 12)
    k = params.get("k", 1)
    c1 = Fraction(params.get("c1", Fraction(1, 10)))
    c2 = Fraction(params.get("c2", 0))
    if log is None:
        log = []
    gens = []
    template = None
    for g in U:
        M = g["matrix"]
        for row in M:
            for a in row:
                if isinstance(a, AnnulusElem):
                    template = a
        gens.append(dict(g))
    if template is None:
        raise HypothesisViolation("descent needs at least one annulus entry to fix the ring")
    if not template.char_p:
        raise HypothesisViolation("descent v1 runs over characteristic-p coefficients")
    lvl = level if level is not None else max(
        a.level for g in gens for row in g["matrix"] for a in row if isinstance(a, AnnulusElem))
    for g in gens:
        g["matrix"] = [[annulus_from_perfect(a, lvl, template).raise_level(lvl)
                        if isinstance(a, PerfectElem) else a.raise_level(max(lvl, a.level))
                        for a in row] for row in g["matrix"]]
    gamma_gens = [g for g in gens if not g.get("frob")]
    if not gamma_gens:
        raise HypothesisViolation("descent needs a gamma generator")
    main = gamma_gens[0]
    c = main["chi"]
    # loss of (gamma - 1)^(-1) at the first kernel level
    default_c3 = Fraction(template.p ** n_of_gamma(c, template.p)) * v_pibar(template.p) / template.p ** (n + 1)
    c3 = Fraction(params.get("c3", default_c3))
    uk = Fraction(k) / (template.lam * template.b)
    log.append(f"threshold v(u^k)={fmt_rational(uk)} c1={fmt_rational(c1)} c2={fmt_rational(c2)} "
               f"c3={fmt_rational(c3)} holds={str(uk > c1 + 2 * c2 + 2 * c3).lower()}")
    one = _mat_identity_like(main["matrix"])
    B = one
    prev = None
    for rnd in range(1, rounds_max + 1):
        V = _mat_sub(main["matrix"], one)
        Vker = [[normalized_trace(a, n).kernel_part for a in row] for row in V]
        if all(a.is_zero() or a.valuation().value >= a.prec_bound() for row in Vker for a in row):
            bound = min(a.prec_bound() for row in V for a in row)
            if bound <= uk:
                log.append(f"round={rnd} precision {_fmt(bound)} at or below v(u^k)")
                raise PrecisionExhausted(
                    f"descent kept precision {_fmt(bound)}, not above v(u^k) = {_fmt(uk)}")
            log.append(f"round={rnd} converged")
            break
        # U = 1 mod u^k exactly and every step is u-linear, so X and its error lie in u^k
        X = [[_u_divisible(-gamma_minus_one_invert_kernel(TraceSplit(a, None, a, n), c), k)
              for a in row] for row in Vker]
        corr = _mat_val(X)
        log.append(f"round={rnd} corr_val={_fmt(corr)}")
        if prev is not None and corr <= prev:
            log.append(f"round={rnd} stalled")
            raise Divergence(f"descent correction did not improve at round {rnd}", corr - prev)
        prev = corr
        Bstep = _mat_add(one, X)
        Binv = mat_inverse_unipotent(Bstep)
        for g in gens:
            g["matrix"] = _mat_mul(_mat_mul(Binv, g["matrix"]), _apply_generator(g, Bstep))
        B = _mat_mul(B, Bstep)
    else:
        log.append(f"round={rounds_max} round cap reached")
    descended = []
    for g in gens:
        tr = [[normalized_trace(a, n).trace_part for a in row] for row in g["matrix"]]
        entry = {key: val for key, val in g.items() if key != "matrix"}
        entry["matrix"] = tr
        entry["full"] = g["matrix"]
        descended.append(entry)
    return B, descended, log

