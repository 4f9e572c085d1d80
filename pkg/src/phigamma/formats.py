"""Text grammars for elements, module descriptions, descent jobs and Huber presentations.

All grammars share one surface syntax:

    value   := object | map | list | number | word | expr
    object  := word [ "(" kwarg ("," kwarg)* ")" ] ( map | list )
    map     := "{" [ key ":" value ("," key ":" value)* ] "}"
    list    := "[" [ value ("," value)* ] "]"
    kwarg   := word "=" ( number | word | "[" number "," number ( "]" | ")" ) )

An ``expr`` is any run of words, numbers and the operators ``+ - * ^ / =``
that is not a single number or word, e.g. ``T^2*u - 1`` or ``p*X = 1``.
FORMATS.md is the reference.
"""

from dataclasses import dataclass
from fractions import Fraction
import os
import re

from .annulus import INF, AnnulusElem
from .coeff import CoeffElem
from .errors import ParseError
from .fiber import HuberPresentation
from .herr import PhiGammaModuleDesc
from .tilt import TiltElem
from .witt import PerfectElem, WittElem

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<num>\d+(?:/\d+)?)
  | (?P<word>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<str>"[^"]*")
  | (?P<punct>[{}\[\]():,=+\-*^/])
""", re.VERBOSE)


@dataclass
class Tok:
    kind: str
    text: str
    pos: int


@dataclass
class Obj:
    head: str
    kwargs: dict
    body: object


@dataclass
class Expr:
    text: str


def tokenize(text):
    out, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r} at offset {pos}")
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            out.append(Tok(kind, m.group(), pos))
        pos = m.end()
    out.append(Tok("eof", "", len(text)))
    return out


class Reader:
    def __init__(self, text):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, text):
        tok = self.next()
        if tok.text != text:
            raise ParseError(f"expected {text!r} at offset {tok.pos}, found {tok.text or 'end of input'!r}")
        return tok

    def done(self):
        if self.peek().kind != "eof":
            tok = self.peek()
            raise ParseError(f"trailing input at offset {tok.pos}: {tok.text!r}")

    def value(self):
        tok = self.peek()
        if tok.text == "{":
            return self.mapping()
        if tok.text == "[":
            return self.listing()
        if tok.kind == "str":
            self.next()
            return Expr(tok.text[1:-1])
        if tok.kind == "word" and self.peek(1).text in ("(", "{", "["):
            return self.obj()
        return self.scalar_or_expr()

    def scalar_or_expr(self):
        start = self.peek()
        depth = 0
        toks = []
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                break
            if tok.text in ("(",):
                depth += 1
            elif tok.text == ")":
                if depth == 0:
                    break
                depth -= 1
            elif tok.text in (",", "]", "}", ":", "{", "[") and depth == 0:
                break
            toks.append(self.next())
        if not toks:
            raise ParseError(f"expected a value at offset {start.pos}, found {start.text or 'end of input'!r}")
        if len(toks) == 1:
            return _atom(toks[0])
        if len(toks) == 2 and toks[0].text == "-" and toks[1].kind == "num":
            return -_atom(toks[1])
        end = toks[-1].pos + len(toks[-1].text)
        return Expr(self.text[start.pos:end])

    def mapping(self):
        self.expect("{")
        out = {}
        while self.peek().text != "}":
            key = self.scalar_or_expr()
            if isinstance(key, Expr):
                raise ParseError(f"map key {key.text!r} must be a number or a word")
            if self.peek().text == ":":
                self.next()
                out[key] = self.value()
            else:
                out[key] = None
            if self.peek().text == ",":
                self.next()
            elif self.peek().text != "}":
                tok = self.peek()
                raise ParseError(f"expected ',' or '}}' at offset {tok.pos}, found {tok.text!r}")
        self.expect("}")
        return out

    def listing(self):
        self.expect("[")
        out = []
        while self.peek().text != "]":
            out.append(self.value())
            if self.peek().text == ",":
                self.next()
            elif self.peek().text != "]":
                tok = self.peek()
                raise ParseError(f"expected ',' or ']' at offset {tok.pos}, found {tok.text!r}")
        self.expect("]")
        return out

    def obj(self):
        head = self.next().text
        kwargs = {}
        if self.peek().text == "(":
            self.next()
            while self.peek().text != ")":
                key = self.next()
                if key.kind != "word":
                    raise ParseError(f"expected a keyword at offset {key.pos}")
                self.expect("=")
                if self.peek().text == "[":
                    self.next()
                    lo = self.scalar_or_expr()
                    self.expect(",")
                    hi = self.scalar_or_expr()
                    close = self.next()
                    if close.text not in ("]", ")"):
                        raise ParseError(f"interval must close with ']' or ')' at offset {close.pos}")
                    kwargs[key.text] = (lo, hi, close.text)
                else:
                    kwargs[key.text] = self.scalar_or_expr()
                if self.peek().text == ",":
                    self.next()
            self.expect(")")
        if self.peek().text == "{":
            body = self.mapping()
        elif self.peek().text == "[":
            body = self.listing()
        else:
            tok = self.peek()
            raise ParseError(f"{head} needs a '{{...}}' or '[...]' body at offset {tok.pos}")
        return Obj(head, kwargs, body)


def _atom(tok):
    if tok.kind == "num":
        return Fraction(tok.text) if "/" in tok.text else int(tok.text)
    if tok.kind == "word":
        if tok.text in ("true", "false"):
            return tok.text == "true"
        return tok.text
    if tok.kind == "str":
        return Expr(tok.text[1:-1])
    raise ParseError(f"unexpected {tok.text!r} at offset {tok.pos}")


def read(text):
    r = Reader(text)
    val = r.value()
    r.done()
    return val


# ------------------------------------------------------------ conversions

def _int(v, what):
    if isinstance(v, bool) or not isinstance(v, int):
        if isinstance(v, Fraction) and v.denominator == 1:
            return int(v)
        raise ParseError(f"{what} must be an integer, got {_show(v)}")
    return v


def _rat(v, what):
    if isinstance(v, bool):
        raise ParseError(f"{what} must be a rational number")
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    if isinstance(v, Expr):
        try:
            return Fraction(v.text.replace(" ", ""))
        except ValueError:
            pass
    raise ParseError(f"{what} must be a rational number, got {_show(v)}")


def _show(v):
    return v.text if isinstance(v, Expr) else str(v)


def _cap(v, what="cap"):
    if v in ("inf", None):
        return None
    return _rat(v, what)


def _prec(v):
    if v in ("charp", None):
        return None
    return _int(v, "prec")


def _window(v, what):
    if not (isinstance(v, tuple) and v[2] == ")"):
        raise ParseError(f"{what} must be a half-open interval [lo,hi)")
    lo = _int(v[0], what)
    hi = INF if v[1] == "inf" else _int(v[1], what)
    return lo, hi


def _closed(v, what):
    if not (isinstance(v, tuple) and v[2] == "]"):
        raise ParseError(f"{what} must be a closed interval [a, b]")
    return _rat(v[0], what), _rat(v[1], what)


def _need(obj, head):
    if not isinstance(obj, Obj) or obj.head != head:
        got = obj.head if isinstance(obj, Obj) else type(obj).__name__
        raise ParseError(f"expected a {head}(...) element, got {got}")


def _map_body(obj):
    if not isinstance(obj.body, dict):
        raise ParseError(f"{obj.head} needs a '{{...}}' body")
    return obj.body


def _unknown(kwargs, allowed, head):
    extra = set(kwargs) - set(allowed)
    if extra:
        raise ParseError(f"{head}: unknown keywords {sorted(extra)}")


def coeff_from(obj):
    _need(obj, "coeff")
    kw = obj.kwargs
    _unknown(kw, ("p", "lambda", "prec", "window"), "coeff")
    if "p" not in kw:
        raise ParseError("coeff needs p=")
    window = _window(kw["window"], "window") if "window" in kw else (0, 16)
    terms = {_int(k, "u-exponent"): _int(v, "coefficient") for k, v in _map_body(obj).items()}
    try:
        return CoeffElem(_int(kw["p"], "p"), _rat(kw.get("lambda", 1), "lambda"), terms,
                         _prec(kw.get("prec")), window)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def tilt_from(obj, p=None):
    _need(obj, "tilt")
    kw = obj.kwargs
    _unknown(kw, ("p", "f", "cap", "negative"), "tilt")
    if "p" not in kw and p is None:
        raise ParseError("tilt needs p=")
    p = _int(kw.get("p", p), "p")
    terms = {_rat(k, "exponent"): _int(v, "coefficient") for k, v in _map_body(obj).items()}
    try:
        return TiltElem(p, terms, _cap(kw.get("cap")), _int(kw.get("f", 1), "f"),
                        allow_negative=kw.get("negative", "false") in (True, "true"))
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def witt_from(obj, p=None, J=None):
    _need(obj, "witt")
    kw = obj.kwargs
    _unknown(kw, ("p", "J"), "witt")
    p = _int(kw.get("p", p), "p") if kw.get("p", p) is not None else None
    if p is None:
        raise ParseError("witt needs p=")
    if not isinstance(obj.body, list):
        raise ParseError("witt needs a '[...]' list of tilt components")
    comps = [tilt_from(c, p) for c in obj.body]
    if not comps:
        raise ParseError("witt needs at least one component")
    J = kw.get("J", J)
    if J is not None and _int(J, "J") != len(comps):
        raise ParseError(f"witt declares J={J} but lists {len(comps)} components")
    return WittElem(comps)


def perfect_from(obj):
    _need(obj, "perfect")
    kw = obj.kwargs
    _unknown(kw, ("b", "lambda", "p", "J", "f"), "perfect")
    p = _int(kw["p"], "p") if "p" in kw else None
    J = _int(kw["J"], "J") if "J" in kw else None
    terms = {_int(k, "u-exponent"): witt_from(v, p, J) for k, v in _map_body(obj).items()}
    if not terms and p is None:
        raise ParseError("an empty perfect element needs p= and J=")
    return PerfectElem(terms, _rat(kw.get("b", 1), "b"), _rat(kw.get("lambda", 1), "lambda"),
                       p, J, _int(kw.get("f", 1), "f"))


def default_precision():
    """KERNEL_PRECISION_DEFAULTS, e.g. ``N=4,M=16``."""
    return parse_prec(os.environ.get("KERNEL_PRECISION_DEFAULTS", ""))


def parse_prec(text):
    out = {}
    for part in filter(None, (s.strip() for s in (text or "").split(","))):
        if "=" not in part:
            raise ParseError(f"precision override {part!r} is not key=value")
        key, val = (s.strip() for s in part.split("=", 1))
        try:
            out[key] = int(val)
        except ValueError:
            raise ParseError(f"precision override {key} needs an integer, got {val!r}") from None
    return out


def annulus_from(obj):
    _need(obj, "annulus")
    kw = obj.kwargs
    _unknown(kw, ("p", "lambda", "prec", "level", "interval", "window", "uwindow", "pole",
                  "pierr", "hgain"), "annulus")
    if "p" not in kw or "interval" not in kw:
        raise ParseError("annulus needs p= and interval=")
    p = _int(kw["p"], "p")
    terms = {}
    for k, v in _map_body(obj).items():
        k = _int(k, "T-exponent")
        if isinstance(v, Obj):
            if v.head != "coeff" or v.kwargs:
                raise ParseError("annulus coefficients are written coeff{j: c, ...}")
            for j, c in v.body.items():
                terms[(k, _int(j, "u-exponent"))] = _int(c, "coefficient")
        else:
            terms[(k, 0)] = _int(v, "coefficient")
    exp_window = _window(kw["window"], "window") if "window" in kw else None
    try:
        return AnnulusElem(
            p, terms, level=_int(kw.get("level", 0), "level"),
            interval=_closed(kw["interval"], "interval"),
            lam=_rat(kw.get("lambda", 1), "lambda"), prec=_prec(kw.get("prec")),
            u_window=_window(kw["uwindow"], "uwindow") if "uwindow" in kw else (0, INF),
            exp_window=exp_window, spole=_int(kw.get("pole", 0), "pole"),
            pierr=INF if kw.get("pierr", "inf") == "inf" else _rat(kw["pierr"], "pierr"),
            hgain=_rat(kw.get("hgain", 0), "hgain"))
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


_BUILDERS = {"coeff": coeff_from, "tilt": tilt_from, "witt": witt_from,
             "perfect": perfect_from, "annulus": annulus_from}


def element_from(obj):
    if not isinstance(obj, Obj) or obj.head not in _BUILDERS:
        raise ParseError("expected one of coeff(...), tilt(...), witt(...), perfect(...), annulus(...)")
    return _BUILDERS[obj.head](obj)


def parse_element(text):
    return element_from(read(text))


def format_element(x):
    return str(x)


# ------------------------------------------------------ polynomial entries

_MONO = re.compile(r"\s*([+-]?)\s*([^+-]+)")


def parse_poly(text, vars=("T", "u")):
    """Integer Laurent polynomial in the given variables -> {exponent tuple: coefficient}."""
    src = text.replace(" ", "").replace("^(-", "^(~").replace("^-", "^~")
    if not src:
        raise ParseError("empty polynomial")
    out = {}
    pos = 0
    while pos < len(src):
        m = _MONO.match(src, pos)
        if not m or m.end() == pos:
            raise ParseError(f"cannot read polynomial {text!r}")
        sign = -1 if m.group(1) == "-" else 1
        coef = sign
        exps = [0] * len(vars)
        for factor in m.group(2).split("*"):
            factor = factor.replace("(", "").replace(")", "").replace("~", "-")
            if not factor:
                raise ParseError(f"empty factor in {text!r}")
            if re.fullmatch(r"\d+", factor):
                coef *= int(factor)
                continue
            base, _, exp = factor.partition("^")
            if base not in vars:
                raise ParseError(f"unknown variable {base!r} in {text!r}; expected one of {list(vars)}")
            try:
                e = int(exp) if exp else 1
            except ValueError:
                raise ParseError(f"bad exponent {exp!r} in {text!r}") from None
            exps[vars.index(base)] += e
        key = tuple(exps)
        out[key] = out.get(key, 0) + coef
        pos = m.end()
    return {k: c for k, c in out.items() if c}


def entry_from(v, ring):
    """Matrix entry: integer, polynomial in T (= T_level) and u, or a full annulus element."""
    if isinstance(v, Obj):
        if v.head == "annulus":
            return annulus_from(v)
        if v.head == "perfect":
            return perfect_from(v)
        raise ParseError(f"matrix entries cannot be {v.head}(...) elements")
    if isinstance(v, bool):
        raise ParseError("matrix entries cannot be booleans")
    if isinstance(v, int):
        terms = {(0, 0): v}
    elif isinstance(v, Expr) or isinstance(v, str):
        terms = parse_poly(v.text if isinstance(v, Expr) else v)
    else:
        raise ParseError(f"cannot read matrix entry {_show(v)}")
    try:
        return AnnulusElem(ring["p"], terms, level=ring.get("level", 0),
                           interval=(0, ring["b"]), lam=ring.get("lambda", 1),
                           prec=ring.get("prec"), u_window=(0, ring.get("uwindow", INF)))
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def matrix_from(v, ring, d, what):
    if not isinstance(v, list) or len(v) != d or any(not isinstance(r, list) or len(r) != d for r in v):
        raise ParseError(f"{what} must be a {d}x{d} matrix")
    return [[entry_from(a, ring) for a in row] for row in v]


def _ring_keys(body, what):
    if "p" not in body or "b" not in body:
        raise ParseError(f"{what} needs p and b")
    ring = {"p": _int(body["p"], "p"), "b": _rat(body["b"], "b"),
            "lambda": _rat(body.get("lambda", 1), "lambda"),
            "prec": _prec(body.get("prec")), "level": _int(body.get("level", 0), "level")}
    if body.get("uwindow") is not None:
        ring["uwindow"] = _int(body["uwindow"], "uwindow")
    return ring


# ------------------------------------------------------------- pgmodule

def pgmodule_from(obj):
    _need(obj, "pgmodule")
    body = _map_body(obj)
    _unknown(body, ("p", "lambda", "b", "d", "phi", "gamma", "name", "prec", "level", "uwindow"),
             "pgmodule")
    ring = _ring_keys(body, "pgmodule")
    if "d" not in body or "phi" not in body:
        raise ParseError("pgmodule needs d and phi")
    d = _int(body["d"], "d")
    phi = matrix_from(body["phi"], ring, d, "phi")
    gens = []
    for g in body.get("gamma", []):
        if not isinstance(g, dict) or "chi" not in g or "mat" not in g:
            raise ParseError("each gamma generator is {chi: c, mat: [[...]]}")
        gens.append((_int(g["chi"], "chi"), matrix_from(g["mat"], ring, d, "gamma matrix")))
    name = body.get("name") or ""
    return PhiGammaModuleDesc(ring["p"], d, phi, gens, ring["lambda"], ring["b"],
                              name=name.text if isinstance(name, Expr) else str(name))


def parse_pgmodule(text):
    return pgmodule_from(read(text))


def format_matrix(M):
    return "[" + ", ".join("[" + ", ".join(str(a) for a in row) + "]" for row in M) + "]"


def format_pgmodule(desc):
    gens = ", ".join(f"{{chi: {c}, mat: {format_matrix(G)}}}" for c, G in desc.gamma_gens)
    name = f"name: {desc.name}, " if desc.name and re.fullmatch(r"[A-Za-z_][\w']*", desc.name) else ""
    return (f"pgmodule {{ {name}p: {desc.p}, lambda: {desc.lam}, b: {desc.b}, d: {desc.d}, "
            f"phi: {format_matrix(desc.phi)}, gamma: [{gens}] }}")


# ------------------------------------------------------------ descend job

@dataclass
class DescendJob:
    generators: list
    params: dict
    original: list = None
    conjugator: list = None


def descend_from(obj):
    _need(obj, "descend")
    body = _map_body(obj)
    _unknown(body, ("p", "lambda", "b", "d", "k", "n", "level", "uwindow", "prec",
                    "generators", "rounds_max", "c1", "c2", "c3", "conjugate_by"), "descend")
    ring = _ring_keys(body, "descend")
    for key in ("d", "k", "n", "generators"):
        if key not in body:
            raise ParseError(f"descend needs {key}")
    d = _int(body["d"], "d")
    gens = []
    for g in body["generators"]:
        if not isinstance(g, dict) or "matrix" not in g:
            raise ParseError("each generator is {chi: c, matrix: [[...]]} or {frob: true, matrix: [[...]]}")
        entry = {"matrix": matrix_from(g["matrix"], ring, d, "generator matrix")}
        if g.get("frob") is True:
            entry["frob"] = True
        elif "chi" in g:
            entry["chi"] = _int(g["chi"], "chi")
        else:
            raise ParseError("a generator needs chi: c or frob: true")
        gens.append(entry)
    params = {"n": _int(body["n"], "n"), "k": _int(body["k"], "k"),
              "rounds_max": _int(body.get("rounds_max", 12), "rounds_max")}
    if "level" in body:
        params["level"] = ring["level"]
    for key in ("c1", "c2", "c3"):
        if key in body:
            params[key] = _rat(body[key], key)
    conj = None
    if body.get("conjugate_by") is not None:
        conj = matrix_from(body["conjugate_by"], ring, d, "conjugate_by")
    return DescendJob(gens, params, None, conj)


def parse_descend(text):
    return descend_from(read(text))


# ------------------------------------------------------------ huber

def _symbols(v, what):
    if not isinstance(v, list):
        raise ParseError(f"{what} must be a list of symbols")
    out = []
    for s in v:
        if not isinstance(s, str) or isinstance(s, Expr):
            raise ParseError(f"{what}: {_show(s)} is not a symbol")
        out.append(s)
    return out


def _monomial_product(text, sign, out):
    if text == "1":
        return
    for factor in text.split("*"):
        base, _, exp = factor.strip().partition("^")
        if not re.fullmatch(r"[A-Za-z_][\w']*", base) or (exp and not re.fullmatch(r"-?\d+", exp)):
            raise ParseError(f"bad monomial factor {factor.strip()!r}")
        out[base] = out.get(base, 0) + sign * (int(exp) if exp else 1)


def parse_monomial(text):
    """``u^3/p``, ``u*v^2`` or ``1/(p*u)``; inverse of the printed form."""
    top, _, bottom = text.strip().partition("/")
    bottom = bottom.strip()
    if bottom.startswith("(") and bottom.endswith(")"):
        bottom = bottom[1:-1]
    out = {}
    _monomial_product(top.strip(), 1, out)
    if bottom:
        _monomial_product(bottom, -1, out)
    return {k: v for k, v in out.items() if v}


def huber_from(obj):
    _need(obj, "huber")
    body = _map_body(obj)
    _unknown(body, ("name", "base", "constants", "def_ring", "gens", "ideal", "relations",
                    "tate", "units"), "huber")
    rels = []
    for r in body.get("relations", []):
        text = r.text if isinstance(r, Expr) else str(r)
        if "=" not in text:
            raise ParseError(f"relation {text!r} must read lhs = rhs")
        lhs, rhs = text.split("=", 1)
        rels.append((parse_monomial(lhs), parse_monomial(rhs)))
    name = body.get("name", "")
    pres = HuberPresentation(
        base=str(body.get("base", "Z_p")),
        constants=_symbols(body.get("constants", ["p"]), "constants"),
        power_vars=_symbols(body.get("def_ring", []), "def_ring"),
        gens=_symbols(body.get("gens", []), "gens"),
        ideal=_symbols(body.get("ideal", []), "ideal"),
        relations=rels,
        tate=_symbols(body.get("tate", []), "tate"),
        units=_symbols(body.get("units", []), "units"),
        name=name.text if isinstance(name, Expr) else str(name))
    pres.lint()
    return pres


def parse_huber(text):
    return huber_from(read(text))


def format_huber(pres):
    from .fiber import mono_str

    def lst(xs):
        return "[" + ", ".join(xs) + "]"

    rels = [f"{mono_str(l)} = {mono_str(r)}" for l, r in pres.relations]
    return (f"huber {{ base: {pres.base}, constants: {lst(pres.constants)}, "
            f"def_ring: {lst(pres.power_vars)}, gens: {lst(pres.gens)}, ideal: {lst(pres.ideal)}, "
            f"relations: {lst(rels)}, tate: {lst(pres.tate)}, units: {lst(pres.units)} }}")
