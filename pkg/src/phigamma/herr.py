"""(phi, Gamma)-modules as matrix data and their Herr cohomology at finite precision.

Cohomology is computed on a lattice model over F_p[u]/u^M: a vector is
sum pi^k u^j e_a with -A <= k < B.  Modulo pi^B E^+ the complex is unchanged
up to quasi-isomorphism (phi_D - 1 is bijective on pi^B E^+ when Phi is
integral), and the pole filtration Fil_A gives subcomplexes

    X_A :  Fil_A  ->  Fil_{pA} + Fil_A  ->  Fil_{pA}

whose direct limit is the full complex.  H^i is read off as the image of
H^i(X_A) in H^i(X_A') and its rank over the coefficient ring as the growth of
the F_p-dimension per extra u-power.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import math
import random

import numpy as np

from .annulus import AnnulusElem, v_pibar
from .coeff import INF, fmt_rational
from .errors import (ExtensionRequired, HypothesisViolation, PrecisionExhausted)
from .tilt import TiltElem, tilt_artin_schreier_solve, artin_schreier_residual
from .witt import PerfectElem, WittElem


# ------------------------------------------------------------ module data

@dataclass
class PhiGammaModuleDesc:
    p: int
    d: int
    phi: list
    gamma_gens: list
    lam: Fraction = Fraction(1)
    b: Fraction = Fraction(2, 3)
    name: str = ""

    def template(self):
        return self.phi[0][0]

    def check(self):
        """Commutation G gamma_c(Phi) = Phi phi(G) and det(Phi) != 0, at precision."""
        if len(self.phi) != self.d or any(len(r) != self.d for r in self.phi):
            raise HypothesisViolation("Phi must be a d x d matrix")
        for c, G in self.gamma_gens:
            lhs = mat_mul(G, mat_map(self.phi, lambda a: a.gamma(c)))
            rhs = mat_mul(self.phi, mat_map(G, lambda a: a.phi()))
            for ra, rb in zip(lhs, rhs):
                for a, b in zip(ra, rb):
                    if not a.agrees(b):
                        raise HypothesisViolation(
                            f"G gamma(Phi) != Phi phi(G) for chi = {c} at precision")
        det = mat_det(self.phi)
        if det.is_zero():
            raise HypothesisViolation("Phi is not invertible at precision")
        return True


def mat_map(M, f):
    return [[f(a) for a in row] for row in M]


def mat_mul(A, B):
    n, m, k = len(A), len(B), len(B[0])
    out = []
    for i in range(n):
        row = []
        for j in range(k):
            acc = None
            for t in range(m):
                term = A[i][t] * B[t][j]
                acc = term if acc is None else acc + term
            row.append(acc)
        out.append(row)
    return out


def mat_vec(M, v):
    return [col[0] for col in mat_mul(M, [[x] for x in v])]


def mat_det(M):
    d = len(M)
    if d == 1:
        return M[0][0]
    total = None
    for j in range(d):
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * mat_det(minor)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    return total


def _exact(p, terms, b):
    return AnnulusElem(p, terms, interval=(0, b))


def trivial_module(p=3, chi=None, b=Fraction(2, 3)):
    chi = default_chi(p) if chi is None else chi
    one = _exact(p, {(0, 0): 1}, b)
    return PhiGammaModuleDesc(p, 1, [[one]], [(chi, [[one]])], b=Fraction(b), name="trivial")


def twisted_module(p=3, power=1, chi=None, b=Fraction(2, 3)):
    """Rank one with Phi = u^power and trivial Gamma-action."""
    chi = default_chi(p) if chi is None else chi
    one = _exact(p, {(0, 0): 1}, b)
    uk = _exact(p, {(0, power): 1}, b)
    return PhiGammaModuleDesc(p, 1, [[uk]], [(chi, [[one]])], b=Fraction(b), name=f"u^{power}-twist")


def direct_sum(m1, m2):
    if m1.p != m2.p or len(m1.gamma_gens) != len(m2.gamma_gens):
        raise HypothesisViolation("direct sum needs matching primes and generators")
    zero = m1.template().zero()

    def block(A, B):
        d1, d2 = len(A), len(B)
        out = [[A[i][j] if j < d1 else zero for j in range(d1 + d2)] for i in range(d1)]
        out += [[zero if j < d1 else B[i][j - d1] for j in range(d1 + d2)] for i in range(d2)]
        return out

    gens = []
    for (c1, G1), (c2, G2) in zip(m1.gamma_gens, m2.gamma_gens):
        if c1 != c2:
            raise HypothesisViolation("direct sum needs the same chi values")
        gens.append((c1, block(G1, G2)))
    return PhiGammaModuleDesc(m1.p, m1.d + m2.d, block(m1.phi, m2.phi), gens, m1.lam, m1.b,
                              name=f"{m1.name}+{m2.name}")


def random_module(p, d, rng, chi=None, b=Fraction(2, 3), span=3, udeg=2, twist=True):
    """Gauge transform of a diagonal u-power module: Phi = A^-1 D phi(A), G = A^-1 gamma(A).

    A is unipotent upper triangular with T-Laurent entries, so A^-1 is exact.
    """
    chi = default_chi(p) if chi is None else chi
    zero = _exact(p, {}, b)
    one = _exact(p, {(0, 0): 1}, b)

    def rand_entry():
        terms = {}
        for _ in range(rng.randint(1, 3)):
            terms[(rng.randint(-span, span), rng.randint(0, udeg))] = rng.randint(1, p - 1)
        return _exact(p, terms, b)

    N = [[rand_entry() if j > i else zero for j in range(d)] for i in range(d)]
    A = [[(one if i == j else zero) + N[i][j] for j in range(d)] for i in range(d)]
    Ainv = [[one if i == j else zero for j in range(d)] for i in range(d)]
    term = Ainv
    for _ in range(d - 1):
        term = mat_map(mat_mul(term, N), lambda a: -a)
        Ainv = [[x + y for x, y in zip(r1, r2)] for r1, r2 in zip(Ainv, term)]
    D = [[(_exact(p, {(0, rng.randint(0, 1) if twist else 0): 1}, b) if i == j else zero)
          for j in range(d)] for i in range(d)]
    Phi = mat_mul(mat_mul(Ainv, D), mat_map(A, lambda a: a.phi()))
    G = mat_mul(Ainv, mat_map(A, lambda a: a.gamma(chi)))
    return PhiGammaModuleDesc(p, d, Phi, [(chi, G)], b=Fraction(b), name="random")


def default_chi(p):
    """Smallest integer generating Z_p^x topologically (a primitive root mod p^2)."""
    if p == 2:
        raise HypothesisViolation("p = 2 needs the torsion part of Gamma, which is not implemented")
    for g in range(2, p * p):
        if math.gcd(g, p) != 1:
            continue
        if all(pow(g, (p * (p - 1)) // q, p * p) != 1 for q in _prime_factors(p * (p - 1))):
            return g
    raise HypothesisViolation(f"no primitive root mod {p}^2")


def _prime_factors(n):
    out, q = set(), 2
    while q * q <= n:
        while n % q == 0:
            out.add(q)
            n //= q
        q += 1
    if n > 1:
        out.add(n)
    return out


# ------------------------------------------------------------ the complex

def _single_generator(desc):
    if desc.p == 2:
        raise HypothesisViolation("p = 2 needs the torsion part of Gamma, which is not implemented")
    if len(desc.gamma_gens) != 1:
        raise HypothesisViolation("the Herr complex here uses a single procyclic generator")
    return desc.gamma_gens[0]


def phi_D(desc, x):
    return mat_vec(desc.phi, [a.phi() for a in x])


def gamma_D(desc, x):
    c, G = _single_generator(desc)
    return mat_vec(G, [a.gamma(c) for a in x])


def herr_d0(desc, x):
    y = [a - b for a, b in zip(phi_D(desc, x), x)]
    z = [a - b for a, b in zip(gamma_D(desc, x), x)]
    return y, z


def herr_d1(desc, yz):
    y, z = yz
    gy = [a - b for a, b in zip(gamma_D(desc, y), y)]
    pz = [a - b for a, b in zip(phi_D(desc, z), z)]
    return [a - b for a, b in zip(gy, pz)]


# ---------------------------------------------------------- mod-p algebra

def _rref_mod_p(mat, p):
    """Row-reduce a copy of ``mat`` over F_p; returns (reduced, pivot columns)."""
    A = np.array(mat, dtype=np.int64) % p
    rows, cols = A.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(A[r:, c])[0]
        if nz.size == 0:
            continue
        i = r + nz[0]
        if i != r:
            A[[r, i]] = A[[i, r]]
        inv = pow(int(A[r, c]), -1, p)
        A[r] = (A[r] * inv) % p
        col = A[:, c].copy()
        col[r] = 0
        nzr = np.nonzero(col)[0]
        if nzr.size:
            A[nzr] = (A[nzr] - np.outer(col[nzr], A[r])) % p
        pivots.append(c)
        r += 1
    return A[:r], pivots


def rank_mod_p(mat, p):
    if mat.shape[0] == 0 or mat.shape[1] == 0:
        return 0
    return len(_rref_mod_p(mat, p)[1])


def nullspace_mod_p(mat, p):
    rows, cols = mat.shape
    if rows == 0:
        return np.eye(cols, dtype=np.int64)
    R, piv = _rref_mod_p(mat, p)
    free = [c for c in range(cols) if c not in set(piv)]
    basis = []
    for f in free:
        v = np.zeros(cols, dtype=np.int64)
        v[f] = 1
        for i, c in enumerate(piv):
            v[c] = (-R[i, f]) % p
        basis.append(v)
    return np.array(basis, dtype=np.int64).reshape(len(basis), cols)


# ----------------------------------------------------------- lattice model

def _binom_series(k, n, p):
    """(1 + pi)^k as a pi-series mod p, n terms (k may be negative)."""
    out = []
    for i in range(n):
        if k >= 0:
            out.append(math.comb(k, i) % p if i <= k else 0)
        else:
            out.append(((-1) ** i * math.comb(-k + i - 1, i)) % p)
    return out


def _series_mul(a, b, p, n):
    out = [0] * n
    for i, x in enumerate(a[:n]):
        if x:
            for j, y in enumerate(b[:n - i]):
                if y:
                    out[i + j] = (out[i + j] + x * y) % p
    return out


def _series_pow(a, e, p, n):
    if e < 0:
        inv = [0] * n
        inv[0] = pow(a[0], -1, p)
        for k in range(1, n):
            s = sum(a[i] * inv[k - i] for i in range(1, min(k, len(a) - 1) + 1))
            inv[k] = (-s * inv[0]) % p
        a, e = inv, -e
    out = [1] + [0] * (n - 1)
    base = list(a[:n]) + [0] * max(0, n - len(a))
    while e:
        if e & 1:
            out = _series_mul(out, base, p, n)
        e >>= 1
        if e:
            base = _series_mul(base, base, p, n)
    return out


class LatticeModel:
    """Herr complex of ``desc`` on Fil_A modulo (pi^B, u^M), as F_p matrices."""

    def __init__(self, desc, M, B=1):
        if not desc.template().char_p:
            raise HypothesisViolation("lattice cohomology is implemented for characteristic-p coefficients")
        self.desc = desc
        self.p = desc.p
        self.d = desc.d
        self.M = M
        self.B = B
        self.c, self.G = _single_generator(desc)
        if isinstance(self.c, int) and self.c % self.p == 0:
            raise HypothesisViolation(f"chi value {self.c} is not a p-adic unit")
        for row in desc.phi + self.G:
            for a in row:
                if a.spole or a.level:
                    raise HypothesisViolation("lattice cohomology needs level-0 integral matrices")
        self._exp_cache = {}
        self._h_cache = {}
        self._op_cache = {}

    # basis of Fil_A: (k, j, a) with -A <= k < B
    def size(self, A):
        return (A + self.B) * self.M * self.d

    def index(self, A, k, j, a):
        return ((k + A) * self.M + j) * self.d + a

    def _entry_series(self, elem, n):
        key = (id(elem), n)
        if key not in self._exp_cache:
            arr = np.zeros((n, self.M), dtype=np.int64)
            for (k, j), c in elem.terms.items():
                if j < self.M:
                    arr[:, j] = (arr[:, j] + c * np.array(_binom_series(k, n, self.p))) % self.p
            self._exp_cache[key] = (elem, arr)
        return self._exp_cache[key][1]

    def _apply(self, A_in, A_out, mat, shift_series):
        """Column (k, j, a) -> sum_b mat[b][a] * S_k * u^j e_b modulo (pi^B, u^M)."""
        p, M, d, B = self.p, self.M, self.d, self.B
        out = np.zeros((self.size(A_out), self.size(A_in)), dtype=np.int64)
        n = B + self.p * max(A_in, A_out) + 2
        for k in range(-A_in, B):
            base_k, series = shift_series(k, n)
            if series is None:
                continue
            for a in range(d):
                for bidx in range(d):
                    ent = self._entry_series(mat[bidx][a], n)
                    # product series * entry, as (pi-degree, u-degree)
                    prod = np.zeros((n, M), dtype=np.int64)
                    for i, s in enumerate(series):
                        if s:
                            prod[i:] = (prod[i:] + s * ent[:n - i]) % p
                    for i in range(n):
                        kk = base_k + i
                        if kk >= B:
                            break
                        if kk < -A_out:
                            if prod[i].any():
                                raise PrecisionExhausted("pole window too small for the operator")
                            continue
                        for jj in range(M):
                            v = prod[i, jj]
                            if not v:
                                continue
                            for j in range(M - jj):
                                out[self.index(A_out, kk, j + jj, bidx), self.index(A_in, k, j, a)] += v
        return out % p

    def phi_op(self, A):
        key = ("phi", A)
        if key not in self._op_cache:
            p = self.p
            self._op_cache[key] = self._apply(A, p * A, self.desc.phi,
                                              lambda k, n: (p * k, [1] + [0] * (n - 1)))
        return self._op_cache[key]

    def gamma_op(self, A):
        key = ("gamma", A)
        if key not in self._op_cache:
            c = self.c.residue if hasattr(self.c, "residue") else self.c
            p = self.p

            def series(k, n):
                if (k, n) not in self._h_cache:
                    h = _binom_series(c, n + 1, p)[1:]
                    self._h_cache[(k, n)] = _series_pow(h, k, p, n)
                return k, self._h_cache[(k, n)]

            self._op_cache[key] = self._apply(A, A, self.G, series)
        return self._op_cache[key]

    def include(self, A_small, A_big):
        """Coordinates of Fil_A_small inside Fil_A_big."""
        off = (A_big - A_small) * self.M * self.d
        return np.arange(self.size(A_small)) + off

    def d0(self, A):
        p = self.p
        n0, n1 = self.size(A), self.size(p * A)
        top = self.phi_op(A).copy()
        top[self.include(A, p * A), np.arange(n0)] -= 1
        bottom = self.gamma_op(A).copy()
        bottom[np.arange(n0), np.arange(n0)] -= 1
        return np.vstack([top, bottom]) % p

    def d1(self, A):
        p = self.p
        pA = p * A
        gy = self.gamma_op(pA).copy()
        gy[np.arange(self.size(pA)), np.arange(self.size(pA))] -= 1
        pz = self.phi_op(A).copy()
        pz[self.include(A, pA), np.arange(self.size(A))] -= 1
        return np.hstack([gy, -pz]) % p

    def c1_include(self, A, A2):
        """Coordinates of C^1(X_A) = Fil_pA + Fil_A inside C^1(X_A2)."""
        p = self.p
        first = self.include(p * A, p * A2)
        second = self.include(A, A2) + self.size(p * A2)
        return np.concatenate([first, second])

    def u_shift(self, vecs, A_sizes):
        """Multiply coordinate vectors by u (drops u^(M-1) terms)."""
        out = np.zeros_like(vecs)
        blocks = []
        start = 0
        for s in A_sizes:
            blocks.append((start, s))
            start += s
        for st, s in blocks:
            sub = vecs[:, st:st + s].reshape(vecs.shape[0], -1, self.M, self.d)
            shifted = np.zeros_like(sub)
            shifted[:, :, 1:, :] = sub[:, :, :-1, :]
            out[:, st:st + s] = shifted.reshape(vecs.shape[0], s)
        return out

    def persistent_dims(self, A, A2):
        """dim_Fp of the images H^i(X_A) -> H^i(X_A2), plus cocycle data for generators."""
        p = self.p
        d0a, d1a = self.d0(A), self.d1(A)
        d0b, d1b = self.d0(A2), self.d1(A2)
        n0 = self.size(A)
        h0 = n0 - rank_mod_p(d0a, p)
        # H^1
        inc1 = self.c1_include(A, A2)
        mask1 = np.ones(d0b.shape[0], dtype=bool)
        mask1[inc1] = False
        rb = rank_mod_p(d0b, p)
        inter1 = rb - rank_mod_p(d0b[mask1], p)
        z1 = d1a.shape[1] - rank_mod_p(d1a, p)
        h1 = z1 - inter1
        # H^2
        inc2 = self.include(p * A, p * A2)
        mask2 = np.ones(d1b.shape[0], dtype=bool)
        mask2[inc2] = False
        r2 = rank_mod_p(d1b, p)
        inter2 = r2 - rank_mod_p(d1b[mask2], p)
        h2 = d1a.shape[0] - inter2
        return h0, h1, h2


# --------------------------------------------------------------- reports

@dataclass
class HerrDegree:
    degree: int
    rank: object
    certified: bool
    gens: list = field(default_factory=list)
    dims: dict = field(default_factory=dict)


@dataclass
class HerrReport:
    degrees: list
    descriptor: str
    notes: list = field(default_factory=list)

    def ranks(self):
        return tuple(d.rank for d in self.degrees)

    def certified(self):
        return all(d.certified for d in self.degrees)

    def lines(self):
        out = [f"precision {self.descriptor}"]
        for deg in self.degrees:
            gens = ", ".join(_fmt_vec(g) for g in deg.gens)
            out.append(f"H{deg.degree} {{ rank: {_fmt_rank(deg.rank)}, certified: "
                       f"{str(deg.certified).lower()}, gens: [{gens}] }}")
        out.extend(f"note {n}" for n in self.notes)
        return out


def _fmt_rank(r):
    return fmt_rational(r) if isinstance(r, (int, Fraction)) else str(r)


def _fmt_vec(v):
    return "(" + "; ".join(str(a) for a in v) + ")"


def _ranks_at(model, A, A2):
    lo = model.persistent_dims(A, A2)
    bigger = LatticeModel(model.desc, model.M + 1, model.B)
    hi = bigger.persistent_dims(A, A2)
    return tuple(Fraction(h - l) for l, h in zip(lo, hi)), lo, hi


def herr_cohomology(desc, prec=None):
    """Ranks of H^0, H^1, H^2 with lattice-stability certification.

    ``prec`` keys: M (u-window), A (pole window), B (pi-adic window), N
    (recorded only; coefficients are characteristic p).
    """
    prec = dict(prec or {})
    M = int(prec.get("M", 4))
    A = int(prec.get("A", 2))
    B = int(prec.get("B", 1))
    if M < 1 or A < 1 or B < 1:
        raise HypothesisViolation("lattice windows must be positive")
    _single_generator(desc)
    p = desc.p
    model = LatticeModel(desc, M, B)
    A2 = p * A
    r_here, lo, hi = _ranks_at(model, A, A2)
    r_pole, _, _ = _ranks_at(model, A + 1, p * (A + 1))
    r_u, _, _ = _ranks_at(LatticeModel(desc, M + 1, B), A, A2)
    degrees = []
    for i in range(3):
        stable = r_here[i] == r_pole[i] == r_u[i] and r_here[i].denominator == 1
        rank = int(r_here[i]) if r_here[i].denominator == 1 else r_here[i]
        degrees.append(HerrDegree(i, rank, stable, dims={"lo": lo[i], "hi": hi[i]}))
    degrees[0].gens = h0_generators(model, A)
    degrees[1].gens = h1_generators(model, A, A2, degrees[1].rank)
    degrees[2].gens = h2_generators(model, A, A2, degrees[2].rank)
    c, _ = desc.gamma_gens[0]
    descriptor = (f"p={p} coeff=charp N={prec.get('N', 1)} M={M} A={A} A'={A2} B={B} "
                  f"chi={c} d={desc.d}")
    return HerrReport(degrees, descriptor)


def herr_h0(desc, prec=None):
    rep = herr_cohomology(desc, prec)
    return rep.degrees[0], rep


def herr_h1(desc, prec=None):
    rep = herr_cohomology(desc, prec)
    return rep.degrees[1], rep


def herr_h2(desc, prec=None):
    rep = herr_cohomology(desc, prec)
    return rep.degrees[2], rep


def h0_generators(model, A):
    """Kernel vectors of d^0 independent modulo u, as annulus vectors."""
    p = model.p
    ker = nullspace_mod_p(model.d0(A), p)
    if ker.shape[0] == 0:
        return []
    span = model.u_shift(ker, [model.size(A)])
    chosen = [ker[i] for i in _greedy_independent(ker, span, p)]
    return [lattice_to_annulus(model, A, v) for v in chosen]


def _greedy_independent(candidates, span, p, limit=None):
    """Indices of candidates that stay independent modulo ``span``."""
    chosen = []
    base = span
    cur = rank_mod_p(base, p) if base.shape[0] else 0
    for idx, v in enumerate(candidates):
        if limit is not None and len(chosen) >= limit:
            break
        trial = np.vstack([base, v[None, :]]) if base.shape[0] else v[None, :]
        r = rank_mod_p(trial, p)
        if r > cur:
            chosen.append(idx)
            base, cur = trial, r
    return chosen


def h1_generators(model, A, A2, rank):
    """Cocycles (y, z) in X_A independent modulo coboundaries of X_A2 and u."""
    if not isinstance(rank, int) or rank == 0:
        return []
    p = model.p
    z1 = nullspace_mod_p(model.d1(A), p)
    inc = model.c1_include(A, A2)
    n_big = model.size(p * A2) + model.size(A2)
    emb = np.zeros((z1.shape[0], n_big), dtype=np.int64)
    emb[:, inc] = z1
    coboundaries = model.d0(A2).T % p
    shifted = model.u_shift(emb, [model.size(p * A2), model.size(A2)])
    span = np.vstack([coboundaries, shifted])
    chosen = [z1[i] for i in _greedy_independent(emb, span, p, limit=rank)]
    n_y = model.size(p * A)
    return [lattice_to_annulus(model, p * A, v[:n_y]) + lattice_to_annulus(model, A, v[n_y:])
            for v in chosen]


def h2_generators(model, A, A2, rank):
    if not isinstance(rank, int) or rank == 0:
        return []
    p = model.p
    n = model.size(p * A)
    inc = model.include(p * A, p * A2)
    eye = np.eye(n, dtype=np.int64)
    emb = np.zeros((n, model.size(p * A2)), dtype=np.int64)
    emb[:, inc] = eye
    span = np.vstack([model.d1(A2).T % p, model.u_shift(emb, [model.size(p * A2)])])
    chosen = [eye[i] for i in _greedy_independent(emb, span, p, limit=rank)]
    return [lattice_to_annulus(model, p * A, v) for v in chosen]


def verify_generators(desc, report):
    """Re-substitute H^0 and H^1 generators into d^0, d^1 with annulus arithmetic."""
    out = {}
    d = desc.d
    for gen in report.degrees[0].gens:
        y, z = herr_d0(desc, gen)
        out.setdefault(0, []).append(all(a.agrees(a.zero()) for a in y + z))
    for gen in report.degrees[1].gens:
        w = herr_d1(desc, (gen[:d], gen[d:]))
        out.setdefault(1, []).append(all(a.agrees(a.zero()) for a in w))
    return out


def lattice_to_annulus(model, A, vec):
    """sum c pi^k u^j e_a -> vector of annulus elements pi_0^(-A) f_a with error pi_0^B."""
    p, M, d, B = model.p, model.M, model.d, model.B
    tmpl = model.desc.template()
    comps = []
    for a in range(d):
        terms = {}
        for k in range(-A, B):
            for j in range(M):
                c = int(vec[model.index(A, k, j, a)])
                if not c:
                    continue
                e = k + A
                for t in range(e + 1):
                    bc = math.comb(e, t) % p
                    if bc:
                        key = (t, j)
                        terms[key] = (terms.get(key, 0) + c * bc * (-1) ** (e - t)) % p
        elem = AnnulusElem(p, terms, interval=tmpl.interval, lam=tmpl.lam, u_window=(0, M),
                           spole=A, pierr=A + B)
        comps.append(elem.reduce_pole())
    return comps


def galois_comparison_report(desc, expected, prec=None, provenance="oracle"):
    rep = herr_cohomology(desc, prec)
    mismatches = []
    for deg, exp in zip(rep.degrees, expected):
        if exp is None:
            continue
        if not deg.certified or deg.rank != exp:
            mismatches.append(f"H{deg.degree}: expected {exp} ({provenance}), got "
                              f"{_fmt_rank(deg.rank)} certified={str(deg.certified).lower()} "
                              f"at {rep.descriptor}")
    return {"pass": not mismatches, "mismatches": mismatches, "report": rep}


# ------------------------------------------------- Artin-Schreier checking

@dataclass
class ASReport:
    solved: list = field(default_factory=list)
    kernel: list = field(default_factory=list)
    extension_required: list = field(default_factory=list)
    cap: object = None

    @property
    def passed(self):
        return all(ok for _, ok in self.solved) and all(ok for _, ok in self.kernel)

    def lines(self):
        out = [f"cap {fmt_rational(self.cap)}"]
        for val, ok in self.solved:
            out.append(f"solve residual_val={fmt_rational(val)} ok={str(ok).lower()}")
        for desc, ok in self.kernel:
            out.append(f"kernel {desc} in_R0={str(ok).lower()}")
        for msg in self.extension_required:
            out.append(f"extension {msg}")
        out.append(f"pass={str(self.passed).lower()}")
        return out


def _twist(p, i, b, F_one, cap):
    """varpi^(i(p-1)/b) as a power of t, using v(varpi) = 1 and v(t) = p/(p-1)."""
    e = Fraction(i * (p - 1)) / Fraction(b) * Fraction(p - 1, p)
    return TiltElem(p, {e: F_one}, cap=None)


def artin_schreier_solve_perfect(y, cap, twisted=False):
    """(phi - 1) x = y componentwise on a Witt-length-1 perfect element."""
    if y.J != 1:
        raise HypothesisViolation("the mod-u engine works with Witt length 1")
    p = y.p
    comps = {}
    residuals = {}
    for i, w in sorted(y.terms.items()):
        bcomp = w.comps[0]
        c = _twist(p, i, y.b, 1, cap) if twisted else TiltElem(p, {0: 1}, f=bcomp.f)
        x = tilt_artin_schreier_solve(c, bcomp, cap=cap)
        comps[i] = WittElem([x])
        res = artin_schreier_residual(c, bcomp.truncate(cap) if bcomp.cap is None else bcomp, x)
        residuals[i] = res.truncate(cap).valuation()
    return y.like(comps), residuals


def phi_fixed_space(p, cap, K, M=1):
    """Basis of ker(x -> x^p - x) on span{u^j t^e : e in p^-K Z, 0 <= e < cap, j < M}."""
    cap = Fraction(cap)
    step = Fraction(1, p ** K)
    exps = []
    e = Fraction(0)
    while e < cap:
        exps.append(e)
        e += step
    n = len(exps)
    pos = {e: i for i, e in enumerate(exps)}
    mat = np.zeros((n, n), dtype=np.int64)
    for i, e in enumerate(exps):
        mat[i, i] -= 1
        if p * e < cap:
            mat[pos[p * e], i] += 1
    ker = nullspace_mod_p(mat % p, p)
    basis = []
    for v in ker:
        tilt = {exps[i]: int(c) for i, c in enumerate(v) if c}
        basis.append(tilt)
    # the map is diagonal in u, so the kernel is the same in each u-degree
    return [(j, t) for j in range(M) for t in basis]


def artin_schreier_check(targets, cap, kernel_samples=20, K=2, M=3, rng=None, twisted=False):
    """Solve (phi - 1) x = y for each target and sample ker(phi - 1) on the truncated model."""
    rng = rng or random.Random(0)
    rep = ASReport(cap=Fraction(cap))
    for y in targets:
        try:
            _, residuals = artin_schreier_solve_perfect(y, cap, twisted=twisted)
        except ExtensionRequired as exc:
            rep.extension_required.append(f"degree={exc.degree} {exc}")
            continue
        worst = min((r.value for r in residuals.values()), default=INF)
        rep.solved.append((worst, worst >= cap))
    if kernel_samples:
        p = targets[0].p if targets else 3
        basis = phi_fixed_space(p, cap, K, M)
        for _ in range(kernel_samples):
            combo = {}
            for j, t in basis:
                c = rng.randrange(p)
                if c:
                    for e, a in t.items():
                        key = (j, e)
                        combo[key] = (combo.get(key, 0) + c * a) % p
            combo = {k: v for k, v in combo.items() if v}
            in_r0 = all(e == 0 for (_, e) in combo)
            text = "{" + ", ".join(f"u^{j} t^{fmt_rational(e)}: {v}"
                                   for (j, e), v in sorted(combo.items())) + "}"
            rep.kernel.append((text, in_r0))
    return rep
