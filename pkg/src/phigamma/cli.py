"""Batch front end.

Exit codes: 0 success, 1 parse error, 2 precision exhausted or divergence,
3 hypothesis violation (including incompatible rings, wrong directions and
unsupported roots).
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
import random
import sys

from . import formats
from .annulus import INF, AnnulusElem, validate_interval
from .coeff import CoeffElem, fmt_rational
from .errors import KernelError, ParseError, PrecisionExhausted
from .fiber import fiber_presentation, tateness_check, weight_embed
from .herr import artin_schreier_check, galois_comparison_report, herr_cohomology
from .tatesen import (conjugate_cocycle, descend_cocycle, gamma_minus_one,
                      gamma_minus_one_invert_kernel, gamma_minus_one_invert_psi0,
                      normalized_trace, trace_valuation_audit, ts1_witness)
from .tilt import TiltElem
from .witt import PerfectElem, WittElem, perfect_valuation

HEADER = "phigamma-report v1"


class Report:
    def __init__(self, command):
        self.pairs = [("command", command)]

    def add(self, key, value):
        self.pairs.append((key, value))

    def render(self, fmt):
        if fmt == "kv":
            lines = [f"# {HEADER}"] + [f"{k}={_one_line(v)}" for k, v in self.pairs]
        else:
            lines = [HEADER] + [f"{k}: {v}" for k, v in self.pairs]
        return "\n".join(lines) + "\n"


def _one_line(v):
    return str(v).replace("\n", "\\n")


def _fmt(v):
    if v == INF:
        return "inf"
    if v == -INF:
        return "-inf"
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (int, Fraction)):
        return fmt_rational(v)
    return str(v)


def _read(path):
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None


def _load(path):
    return formats.parse_element(_read(path))


def _need_annulus(x, what):
    if not isinstance(x, AnnulusElem):
        raise ParseError(f"{what} needs an annulus(...) element")
    return x


def _descriptor(x):
    if isinstance(x, AnnulusElem):
        return x.precision_descriptor()
    if isinstance(x, CoeffElem):
        return f"p={x.p} lambda={fmt_rational(x.lam)} mode={x.char_mode} window=[{x.window[0]},{x.window[1]})"
    if isinstance(x, TiltElem):
        return f"p={x.p} f={x.f} cap={_fmt(x.cap if x.cap is not None else INF)}"
    if isinstance(x, WittElem):
        return f"p={x.p} J={x.J} caps={[_fmt(c if c is not None else INF) for c in x.caps()]}"
    if isinstance(x, PerfectElem):
        return f"p={x.p} J={x.J} b={fmt_rational(x.b)} lambda={fmt_rational(x.lam)}"
    return "exact"


def _add_lines(rep, lines, prefix=""):
    for line in lines:
        key, sep, rest = line.partition(" ")
        if not sep:
            key, _, rest = line.partition("=")
        rep.add(prefix + key, rest)


def _val_line(v):
    return f"{_fmt(v.value)} certified={_fmt(v.certified)}"


# ---------------------------------------------------------------- commands

def _val_one(path, b):
    x = _load(path)
    rep = []
    if isinstance(x, AnnulusElem):
        if b is not None:
            validate_interval(x.p, x.lam, x.interval[0], b)
            x = x.like(x.terms, interval=(x.interval[0], b))
        rep.append(("valuation", _val_line(x.valuation())))
        rep.append(("integral", _fmt(x.is_integral())))
    elif isinstance(x, (WittElem, PerfectElem)):
        if b is None and isinstance(x, WittElem):
            raise ParseError("a Witt vector valuation needs --b")
        rep.append(("valuation", _val_line(perfect_valuation(x, b))))
    else:
        rep.append(("valuation", _val_line(x.valuation())))
    rep.append(("precision", _descriptor(x)))
    return rep


def _unary(path, op, args):
    x = _need_annulus(_load(path), op)
    out = []
    if op == "phi":
        out.append(("result", x.phi()))
    elif op == "psi":
        out.append(("result", x.psi()))
        if args.decompose:
            for i, part in enumerate(x.decompose_phi_basis()):
                out.append((f"a{i}", part))
    elif op == "gamma":
        out.append(("result", x.gamma(args.chi)))
    elif op == "trace":
        split = normalized_trace(x, args.n)
        out.append(("trace_part", split.trace_part))
        out.append(("kernel_part", split.kernel_part))
        out.append(("recombines", _fmt(split.recombines())))
        x = split.trace_part
    out.append(("precision", _descriptor(out[0][1] if op != "trace" else x)))
    return out


def _fan_out(fn, items, jobs):
    if jobs and jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _val_job(item):
    return _val_one(*item)


def _unary_job(item):
    return _unary(*item)


def _batch(rep, paths, results):
    for path, pairs in zip(paths, results):
        if len(paths) > 1:
            rep.add("input", path)
        for k, v in pairs:
            rep.add(k, v)


def cmd_val(args, rep):
    b = Fraction(args.b) if args.b else None
    _batch(rep, args.inputs, _fan_out(_val_job, [(p, b) for p in args.inputs], args.jobs))


def cmd_unary(args, rep):
    items = [(p, args.command, args) for p in args.inputs]
    _batch(rep, args.inputs, _fan_out(_unary_job, items, args.jobs))


def cmd_op(args, rep):
    x = _load(args.inputs[0])
    if args.op == "neg":
        out = -x
    else:
        if len(args.inputs) < 2:
            raise ParseError(f"op {args.op} needs two --in files")
        y = _load(args.inputs[1])
        out = {"add": lambda: x + y, "sub": lambda: x - y, "mul": lambda: x * y}[args.op]()
    rep.add("result", out)
    rep.add("precision", _descriptor(out))


def cmd_invert_gamma(args, rep):
    x = _need_annulus(_load(args.inputs[0]), "invert-gamma")
    stats = {}
    if args.n is None:
        y = gamma_minus_one_invert_psi0(x, args.chi, stats=stats)
        target = x
        rep.add("mode", "psi0")
    else:
        split = normalized_trace(x, args.n)
        y = gamma_minus_one_invert_kernel(split, args.chi, stats=stats)
        target = split.kernel_part
        rep.add("mode", f"kernel n={args.n}")
    back = gamma_minus_one(y, args.chi)
    rep.add("result", y)
    vx, vy = target.valuation(), y.valuation()
    rep.add("input_valuation", _val_line(vx))
    rep.add("result_valuation", _val_line(vy))
    if vx.value != INF and vy.value != INF:
        rep.add("gain", _fmt(vy.value - vx.value))
    rep.add("roundtrip", _fmt(back.agrees(target)))
    for k in sorted(stats):
        if k != "levels":
            rep.add(f"stat_{k}", _fmt(stats[k]))
    for j, s in sorted(stats.get("levels", {}).items()):
        rep.add(f"level_{j}", " ".join(f"{k}={_fmt(v)}" for k, v in sorted(s.items())))
    rep.add("precision", y.precision_descriptor())


def cmd_descend(args, rep):
    job = formats.parse_descend(_read(args.job))
    gens = job.generators
    if job.conjugator is not None:
        gens = conjugate_cocycle(gens, job.conjugator)
    params = dict(job.params)
    log = []
    try:
        B, descended, log = descend_cocycle(gens, params, log)
    finally:
        for line in log:
            rep.add("log", line)
    rep.add("B", formats.format_matrix(B))
    for i, g in enumerate(descended):
        tag = "frob" if g.get("frob") else f"chi={g['chi']}"
        rep.add(f"descended_{i}", f"{tag} {formats.format_matrix(g['matrix'])}")
        resid = [normalized_trace(a, params["n"]).kernel_part for row in g["full"] for a in row]
        worst = min((r.valuation().value for r in resid), default=INF)
        rep.add(f"residual_{i}", _fmt(worst))


def cmd_herr(args, rep):
    desc = formats.parse_pgmodule(_read(args.module))
    prec = formats.default_precision()
    prec.update(formats.parse_prec(args.prec))
    if args.check:
        desc.check()
    if args.expect:
        expected = [None if s in ("", "?") else int(s) for s in args.expect.split(",")]
        cmp = galois_comparison_report(desc, expected, prec, provenance=args.provenance)
        report = cmp["report"]
    else:
        cmp = None
        report = herr_cohomology(desc, prec)
    _add_lines(rep, report.lines())
    if cmp is not None:
        rep.add("comparison", "pass" if cmp["pass"] else "fail")
        for m in cmp["mismatches"]:
            rep.add("mismatch", m)


def cmd_as_check(args, rep):
    cap = Fraction(args.cap)
    targets = [formats.parse_element(_read(p)) for p in args.inputs]
    for t in targets:
        if not isinstance(t, PerfectElem):
            raise ParseError("as-check targets are perfect(...) elements of Witt length 1")
    rng = random.Random(args.seed)
    if args.random:
        targets += [_random_as_target(rng, args.p, cap) for _ in range(args.random)]
    result = artin_schreier_check(targets, cap, kernel_samples=args.kernel_samples, rng=rng,
                                  twisted=args.twisted)
    _add_lines(rep, result.lines())


def _random_as_target(rng, p, cap):
    terms = {}
    for i in range(rng.randint(1, 3)):
        t = {}
        for _ in range(rng.randint(1, 4)):
            t[Fraction(rng.randint(1, int(cap) * p), p ** rng.randint(0, 2))] = rng.randint(1, p - 1)
        terms[i] = WittElem([TiltElem(p, t, None)])
    return PerfectElem(terms, Fraction(p - 1, p), 1)


def cmd_fiber(args, rep):
    R = formats.parse_huber(_read(args.R))
    Rp = formats.parse_huber(_read(args.Rp))
    S = formats.parse_huber(_read(args.S))
    pres = fiber_presentation(R, Rp, S, args.n)
    rep.add("canonical", pres.canonical())
    rep.add("weight", args.n)
    rep.add("pseudo_uniformizers", "[" + ", ".join(tateness_check(pres)) + "]")
    if args.embed is not None:
        _add_lines(rep, weight_embed(pres, args.embed).lines(), "embed_")


def cmd_audit(args, rep):
    if args.ts1 is not None:
        for line in ts1_witness(Fraction(args.ts1)).lines():
            rep.add("ts1", line)
    if args.inputs:
        samples = [_need_annulus(_load(p), "audit") for p in args.inputs]
        ns = [int(s) for s in args.n.split(",")]
        for line in trace_valuation_audit(samples, ns).lines():
            rep.add("ts2", line)


# ------------------------------------------------------------------ parser

def build_parser():
    ap = argparse.ArgumentParser(prog="phigamma", description="(phi, Gamma)-module kernel")
    ap.add_argument("--format", choices=("text", "kv"), default="text")
    sub = ap.add_subparsers(dest="command", required=True)

    def with_inputs(p, required=True):
        p.add_argument("--in", dest="inputs", action="append", default=[], required=required)
        p.add_argument("--jobs", type=int, default=1)
        return p

    p = with_inputs(sub.add_parser("val", help="valuation with certified flag"))
    p.add_argument("--b")
    p = with_inputs(sub.add_parser("op", help="ring operation on one or two elements"))
    p.add_argument("--op", choices=("add", "sub", "mul", "neg"), required=True)
    with_inputs(sub.add_parser("phi"))
    p = with_inputs(sub.add_parser("psi"))
    p.add_argument("--decompose", action="store_true")
    p = with_inputs(sub.add_parser("gamma"))
    p.add_argument("--chi", type=int, required=True)
    p = with_inputs(sub.add_parser("trace"))
    p.add_argument("--n", type=int, required=True)
    p = with_inputs(sub.add_parser("invert-gamma"))
    p.add_argument("--chi", type=int, required=True)
    p.add_argument("--n", type=int)
    p = sub.add_parser("descend")
    p.add_argument("--job", required=True)
    p = sub.add_parser("herr")
    p.add_argument("--module", required=True)
    p.add_argument("--prec", default="")
    p.add_argument("--expect")
    p.add_argument("--provenance", default="oracle")
    p.add_argument("--check", action="store_true")
    p = with_inputs(sub.add_parser("as-check"), required=False)
    p.add_argument("--cap", required=True)
    p.add_argument("--random", type=int, default=0)
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kernel-samples", type=int, default=20)
    p.add_argument("--twisted", action="store_true")
    p = sub.add_parser("fiber")
    p.add_argument("--R", required=True)
    p.add_argument("--Rp", required=True)
    p.add_argument("--S", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--embed", type=int)
    p = with_inputs(sub.add_parser("audit"), required=False)
    p.add_argument("--n", default="1,2,3")
    p.add_argument("--ts1")
    return ap


COMMANDS = {"val": cmd_val, "op": cmd_op, "phi": cmd_unary, "psi": cmd_unary,
            "gamma": cmd_unary, "trace": cmd_unary, "invert-gamma": cmd_invert_gamma,
            "descend": cmd_descend, "herr": cmd_herr, "as-check": cmd_as_check,
            "fiber": cmd_fiber, "audit": cmd_audit}


def exit_code(exc):
    if isinstance(exc, ParseError):
        return 1
    if isinstance(exc, PrecisionExhausted):
        return 2
    return 3


def run(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # usage errors are parse errors
        return 1 if exc.code else 0
    rep = Report(args.command)
    try:
        COMMANDS[args.command](args, rep)
    except KernelError as exc:
        err.write(f"error: {type(exc).__name__}: {exc}\n")
        return exit_code(exc)
    except (ValueError, ArithmeticError) as exc:
        err.write(f"error: {type(exc).__name__}: {exc}\n")
        return 3
    out.write(rep.render(args.format))
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
