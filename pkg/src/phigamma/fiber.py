"""Huber-pair presentations and the weight-n completed tensor product (R (x)_S R')_(n).

Everything here is symbolic.  Monomials are dicts symbol -> exponent; a
negative exponent is a denominator.  Relations are formal monomial
identities ``lhs = rhs``.
"""

from dataclasses import dataclass, field
from itertools import combinations_with_replacement, permutations

from .errors import DirectionError, ParseError


def mono(**exps):
    return {k: v for k, v in exps.items() if v}


def mono_mul(a, b):
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + v
        if not out[k]:
            del out[k]
    return out


def mono_inv(a):
    return {k: -v for k, v in a.items()}


def mono_key(m):
    return tuple(sorted(m.items()))


def mono_str(m):
    """u^3/p style; 1 for the empty monomial."""
    def part(items):
        return "*".join(s if e == 1 else f"{s}^{e}" for s, e in items)

    num = sorted((s, e) for s, e in m.items() if e > 0)
    den = sorted((s, -e) for s, e in m.items() if e < 0)
    top = part(num) or "1"
    if not den:
        return top
    bottom = part(den)
    if len(den) > 1:
        bottom = f"({bottom})"
    return f"{top}/{bottom}"


@dataclass
class HuberPresentation:
    base: str = "Z_p"
    constants: list = field(default_factory=lambda: ["p"])
    power_vars: list = field(default_factory=list)
    gens: list = field(default_factory=list)
    ideal: list = field(default_factory=list)
    relations: list = field(default_factory=list)
    adjoined: list = field(default_factory=list)
    inverted: list = field(default_factory=list)
    tate: list = field(default_factory=list)
    units: list = field(default_factory=list)
    weight: object = None
    factors: tuple = ()
    name: str = ""

    def symbols(self):
        return set(self.constants) | set(self.power_vars) | set(self.gens)

    def lint(self):
        """Every referenced symbol is declared and the ideal generators are ring symbols."""
        known = self.symbols()
        refs = list(self.ideal) + list(self.inverted) + list(self.tate) + list(self.units)
        for lhs, rhs in self.relations:
            refs += list(lhs) + list(rhs)
        for m in self.adjoined:
            refs += list(m)
        missing = sorted(set(refs) - known)
        if missing:
            raise ParseError(f"undeclared symbols: {', '.join(missing)}")
        for g in self.ideal:
            if g in self.gens:
                raise ParseError(f"ideal generator {g} must lie in the ring of definition")
        return True

    def canonical(self):
        return canonicalize(self)[0]

    def __str__(self):
        return self.canonical()


# ----------------------------------------------------------- canonical form

def _resolve(pres):
    """Substitute X = s^-1 for relations s*X = 1 and drop redundant markers."""
    gens = list(pres.gens)
    inverted = set(pres.inverted)
    subst = {}
    rest = []
    for lhs, rhs in pres.relations:
        if not rhs and len(lhs) == 2 and all(e == 1 for e in lhs.values()):
            a, b = sorted(lhs)
            if b in gens and b not in subst and a not in gens:
                subst[b] = {a: -1}
                continue
            if a in gens and a not in subst and b not in gens:
                subst[a] = {b: -1}
                continue
        rest.append((lhs, rhs))
    for x, val in subst.items():
        gens.remove(x)
        inverted.update(val)

    def sub(m):
        out = {}
        for s, e in m.items():
            out = mono_mul(out, {k: v * e for k, v in subst[s].items()} if s in subst else {s: e})
        return out

    markers = []
    for m in pres.adjoined:
        m = sub(m)
        if all(e >= 0 for e in m.values()):
            continue
        if mono_key(m) not in {mono_key(x) for x in markers}:
            markers.append(m)
    # a marker that is another marker times a ring monomial adds nothing
    keep = []
    for m in markers:
        redundant = False
        for other in markers:
            if other is m:
                continue
            q = mono_mul(m, mono_inv(other))
            if q and all(e >= 0 for e in q.values()) and not set(q) & set(gens):
                redundant = True
                break
        if not redundant:
            keep.append(m)
    relations = [(sub(l), sub(r)) for l, r in rest]
    return gens, sorted(inverted), keep, relations, subst


def _render(base, power_vars, gens, markers, inverted, relations):
    out = base
    if power_vars:
        out += "[[" + ", ".join(power_vars) + "]]"
    for g in gens:
        out += f"[{g}]"
    if relations:
        rels = ", ".join(f"{mono_str(l)} = {mono_str(r)}" for l, r in relations)
        out += f"/({rels})"
    if markers:
        out += "".join(f"[{mono_str(m)}]" for m in sorted(markers, key=mono_str)) + "^"
    out += "".join(f"[1/{s}]" for s in sorted(inverted))
    return out


def _var_names(n, stem):
    return [stem + "'" * i for i in range(n)]


def canonicalize(pres):
    """(canonical string, renaming) minimized over renamings of variables and generators."""
    pres.lint()
    gens, inverted, markers, relations, _ = _resolve(pres)
    best = None
    for vperm in permutations(pres.power_vars):
        vnames = dict(zip(vperm, _var_names(len(vperm), "u")))
        for gperm in permutations(gens):
            gnames = dict(zip(gperm, _var_names(len(gperm), "X")))
            ren = {**vnames, **gnames}

            def r(m):
                return {ren.get(s, s): e for s, e in m.items()}

            text = _render(pres.base, [vnames[v] for v in vperm],
                           [gnames[g] for g in gperm],
                           [r(m) for m in markers],
                           sorted(ren.get(s, s) for s in inverted),
                           [(r(l), r(rr)) for l, rr in relations])
            if best is None or text < best[0]:
                best = (text, ren)
    return best


# ---------------------------------------------------------- construction

def _rename_apart(pres, taken, shared):
    """Prime every symbol of ``pres`` that clashes with ``taken`` and is not shared."""
    ren = {}
    for s in pres.power_vars + pres.gens:
        if s in shared:
            continue
        new = s
        while new in taken or new in ren.values():
            new += "'"
        ren[s] = new

    def r(m):
        return {ren.get(s, s): e for s, e in m.items()}

    return HuberPresentation(
        base=pres.base, constants=list(pres.constants),
        power_vars=[ren.get(s, s) for s in pres.power_vars],
        gens=[ren.get(s, s) for s in pres.gens],
        ideal=[ren.get(s, s) for s in pres.ideal],
        relations=[(r(l), r(rr)) for l, rr in pres.relations],
        adjoined=[r(m) for m in pres.adjoined],
        inverted=[ren.get(s, s) for s in pres.inverted],
        tate=[ren.get(s, s) for s in pres.tate],
        units=[ren.get(s, s) for s in pres.units],
        weight=pres.weight, name=pres.name), ren


def _degree_n_monomials(symbols, n):
    out = []
    for combo in combinations_with_replacement(sorted(symbols), n):
        m = {}
        for s in combo:
            m[s] = m.get(s, 0) + 1
        out.append(m)
    return out


def fiber_presentation(R, Rp, S, n):
    """(R (x)_S R')_(n): ring of definition R_0 (x)_S0 R_0' with the weight-n markers

    (r (x) 1)(R_0 (x) I')^n and (1 (x) r')(I (x) R_0')^n for the generators r, r'.
    """
    if n < 0:
        raise DirectionError("the weight n must be nonnegative")
    for P in (R, Rp, S):
        P.lint()
    if not (R.base == Rp.base == S.base):
        raise ParseError(f"structure maps need a common base ring, got {R.base}, {Rp.base}, {S.base}")
    shared = S.symbols()
    for P in (R, Rp):
        extra = set(S.power_vars) - set(P.power_vars)
        if extra:
            raise ParseError(f"structure map S -> {P.name or 'factor'} is undeclared for {sorted(extra)}")
    R1, _ = _rename_apart(R, set(), shared)
    R2, _ = _rename_apart(Rp, set(R1.power_vars) | set(R1.gens), shared)
    power_vars = list(dict.fromkeys(R1.power_vars + R2.power_vars))
    gens = list(dict.fromkeys(R1.gens + R2.gens))
    ideal = list(dict.fromkeys(R1.ideal + R2.ideal))
    adjoined = list(R1.adjoined) + list(R2.adjoined)
    for g in R1.gens:
        for m in _degree_n_monomials(R2.ideal, n):
            adjoined.append(mono_mul({g: 1}, m))
    for g in R2.gens:
        for m in _degree_n_monomials(R1.ideal, n):
            adjoined.append(mono_mul({g: 1}, m))
    relations = []
    for l, r in R1.relations + R2.relations:
        if (l, r) not in relations:
            relations.append((l, r))
    return HuberPresentation(
        base=R.base, constants=list(dict.fromkeys(R.constants + Rp.constants)),
        power_vars=power_vars, gens=gens, ideal=ideal, relations=relations,
        adjoined=adjoined,
        inverted=list(dict.fromkeys(R1.inverted + R2.inverted)),
        tate=list(dict.fromkeys(R1.tate + R2.tate)),
        units=list(dict.fromkeys(R1.units + R2.units)),
        weight=n, factors=(R, Rp, S), name=f"({R.name}x{Rp.name})_{n}")


def tateness_check(pres):
    """Declared pseudo-uniformizers that the relations prove to be topologically nilpotent units.

    A symbol qualifies when it generates part of the ideal of definition and is
    inverted (directly or through a relation s*X = 1).  Names are canonical.
    """
    text, ren = canonicalize(pres)
    _, inverted, _, _, _ = _resolve(pres)
    out = []
    for s in pres.tate:
        if s in pres.ideal and (s in inverted or s in pres.units):
            out.append(ren.get(s, s))
    return sorted(set(out))


@dataclass
class PresentationMap:
    source: HuberPresentation
    target: HuberPresentation
    symbol_map: dict
    marker_images: dict
    rational_subset: bool = True

    def lines(self):
        out = [f"source {self.source.canonical()}", f"target {self.target.canonical()}"]
        for s in sorted(self.symbol_map):
            out.append(f"map {s} -> {self.symbol_map[s]}")
        for m in sorted(self.marker_images):
            out.append(f"marker {m} -> {self.marker_images[m]}")
        out.append(f"rational_subset {str(self.rational_subset).lower()}")
        return out

    def compose(self, other):
        """self: A -> B, other: B -> C  gives A -> C."""
        if other.source.canonical() != self.target.canonical():
            raise DirectionError("maps do not compose: target and source differ")
        return weight_embed(self.source, other.target.weight)


def weight_embed(pres, n_new):
    """The natural map (R (x)_S R')_(n) -> (R (x)_S R')_(n') for n' <= n."""
    if pres.weight is None or not pres.factors:
        raise ParseError("weight_embed needs a presentation built by fiber_presentation")
    n = pres.weight
    if n_new > n:
        raise DirectionError(
            f"the natural maps run from weight n+1 to weight n; cannot go from {n} to {n_new}")
    target = fiber_presentation(*pres.factors, n_new)
    _, src_ren = canonicalize(pres)
    _, tgt_ren = canonicalize(target)
    _, _, src_markers, _, _ = _resolve(pres)
    _, _, tgt_markers, _, _ = _resolve(target)
    images = {}
    for m in src_markers:
        m_src = {src_ren.get(s, s): e for s, e in m.items()}
        image = None
        for t in tgt_markers:
            q = mono_mul(m, mono_inv(t))
            if all(e >= 0 for e in q.values()):
                t_c = {tgt_ren.get(s, s): e for s, e in t.items()}
                q_c = {tgt_ren.get(s, s): e for s, e in q.items()}
                image = (f"[{mono_str(t_c)}]" if not q_c
                         else f"{mono_str(q_c)}*[{mono_str(t_c)}]")
                break
        if image is None:
            image = mono_str({tgt_ren.get(s, s): e for s, e in m.items()})
        images[mono_str(m_src)] = image
    symbols = {src_ren.get(s, s): tgt_ren.get(s, s)
               for s in pres.power_vars + pres.gens if s in target.symbols()}
    return PresentationMap(pres, target, symbols, images, True)


# ---------------------------------------------------------- stock inputs

def power_series_ring(var="u", name=None):
    """Z_p[[u]] with ideal of definition (p, u)."""
    return HuberPresentation(power_vars=[var], ideal=["p", var], name=name or f"Z_p[[{var}]]")


def qp_ring():
    """Q_p = Z_p[X]/(pX - 1), ring of definition Z_p, pseudo-uniformizer p."""
    return HuberPresentation(gens=["X"], ideal=["p"], relations=[({"p": 1, "X": 1}, {})],
                             tate=["p"], name="Q_p")


def zp_ring():
    return HuberPresentation(ideal=["p"], name="Z_p")


def tate_power_series(var="u", inv="Y"):
    """Z_p[[u]][1/u] with ideal (u) and pseudo-uniformizer u."""
    return HuberPresentation(power_vars=[var], gens=[inv], ideal=[var],
                             relations=[({var: 1, inv: 1}, {})], tate=[var],
                             name=f"Z_p((" + var + "))")
