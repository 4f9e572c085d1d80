import io
from pathlib import Path
import subprocess
import sys

import pytest

from phigamma.cli import exit_code, run
from phigamma.errors import (DirectionError, Divergence, ExtensionRequired, HypothesisViolation,
                             IncompatibleRingError, ParseError, PrecisionExhausted,
                             UnsupportedRootError)

DATA = Path(__file__).resolve().parent.parent / "data"


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def fields(text):
    out = {}
    for line in text.splitlines()[1:]:
        key, _, val = line.partition(": ")
        out.setdefault(key, val)
    return out


@pytest.mark.parametrize("exc, code", [
    (ParseError("x"), 1), (PrecisionExhausted("x"), 2), (Divergence("x", 0), 2),
    (HypothesisViolation("x"), 3), (IncompatibleRingError("x"), 3), (DirectionError("x"), 3),
    (UnsupportedRootError("x"), 3), (ExtensionRequired("x", 3), 3),
])
def test_exit_code_table(exc, code):
    assert exit_code(exc) == code


def test_val_report():
    code, out, _ = call("val", "--in", DATA / "pi.elem")
    assert code == 0
    assert out.splitlines()[0] == "phigamma-report v1"
    assert fields(out)["valuation"] == "3/2 certified=true"
    assert fields(out)["integral"] == "true"


def test_kv_format():
    code, out, _ = call("--format", "kv", "val", "--in", DATA / "pi.elem")
    lines = out.splitlines()
    assert lines[0] == "# phigamma-report v1"
    assert "valuation=3/2 certified=true" in lines


def test_fiber_matches_golden_bytes():
    code, out, _ = call("fiber", "--R", DATA / "zpu.huber", "--Rp", DATA / "qp.huber",
                        "--S", DATA / "zp.huber", "--n", 3)
    assert code == 0
    golden = (DATA / "fiber_n3.golden").read_bytes()
    line = next(l for l in out.splitlines() if l.startswith("canonical: "))
    assert (line[len("canonical: "):] + "\n").encode() == golden
    assert fields(out)["pseudo_uniformizers"] == "[p]"


def test_fiber_embed():
    code, out, _ = call("fiber", "--R", DATA / "zpu.huber", "--Rp", DATA / "qp.huber",
                        "--S", DATA / "zp.huber", "--n", 3, "--embed", 2)
    assert code == 0 and "u*[u^2/p]" in out
    code, _, err = call("fiber", "--R", DATA / "zpu.huber", "--Rp", DATA / "qp.huber",
                        "--S", DATA / "zp.huber", "--n", 2, "--embed", 3)
    assert code == 3 and "DirectionError" in err


def test_ring_operations():
    code, out, _ = call("op", "--op", "mul", "--in", DATA / "pi.elem", "--in", DATA / "pi.elem")
    assert code == 0 and fields(out)["result"].endswith("{ 0: coeff{0: 1}, 1: coeff{0: 1}, 2: coeff{0: 1} }")
    code, _, err = call("op", "--op", "add", "--in", DATA / "pi.elem")
    assert code == 1


def test_phi_psi_gamma_trace():
    assert call("phi", "--in", DATA / "pi.elem")[0] == 0
    code, out, _ = call("psi", "--decompose", "--in", DATA / "psi0.elem")
    assert code == 0 and "a2" in fields(out)
    assert call("gamma", "--chi", 4, "--in", DATA / "pi.elem")[0] == 0
    code, out, _ = call("trace", "--n", 1, "--in", DATA / "kernel.elem")
    assert code == 0 and fields(out)["recombines"] == "true"


def test_invert_gamma_modes():
    code, out, _ = call("invert-gamma", "--chi", 4, "--in", DATA / "psi0.elem")
    assert code == 0
    f = fields(out)
    assert f["mode"] == "psi0" and f["roundtrip"] == "true" and f["gain"] == "-9/2"
    code, out, _ = call("invert-gamma", "--chi", 4, "--n", 1, "--in", DATA / "kernel.elem")
    assert code == 0 and fields(out)["roundtrip"] == "true"


def test_precision_exhaustion_exit_code(tmp_path):
    exact = tmp_path / "exact.elem"
    exact.write_text("annulus(p=3, interval=[0, 2/3]) { 1: coeff{0: 1} }")
    code, _, err = call("invert-gamma", "--chi", 4, "--in", exact)
    assert code == 2 and "PrecisionExhausted" in err


def test_descend():
    code, out, _ = call("descend", "--job", DATA / "descend_d1.job")
    assert code == 0
    assert "log: round=3 converged" in out.splitlines()
    assert fields(out)["residual_0"] == "7"


def test_herr_comparison():
    code, out, _ = call("herr", "--module", DATA / "twist.pgm", "--expect", "0,1,?")
    assert code == 0 and fields(out)["comparison"] == "pass"
    code, out, _ = call("herr", "--module", DATA / "trivial.pgm", "--expect", "1,3,0",
                        "--provenance", "table")
    assert fields(out)["comparison"] == "fail"
    assert "(table)" in fields(out)["mismatch"]


def test_herr_precision_from_environment(monkeypatch):
    monkeypatch.setenv("KERNEL_PRECISION_DEFAULTS", "M=3")
    code, out, _ = call("herr", "--module", DATA / "trivial.pgm")
    assert code == 0 and " M=3 " in fields(out)["precision"]
    code, out, _ = call("herr", "--module", DATA / "trivial.pgm", "--prec", "M=5")
    assert " M=5 " in fields(out)["precision"]


def test_as_check():
    code, out, _ = call("as-check", "--in", DATA / "as_target.elem", "--cap", 27,
                        "--random", 5, "--seed", 3, "--kernel-samples", 5)
    assert code == 0 and fields(out)["pass"] == "true"


def test_audit():
    code, out, _ = call("audit", "--ts1", "1/2", "--in", DATA / "kernel.elem", "--n", "1,2")
    assert code == 0
    assert "ts1: axiom=TS1 pass=true" in out.splitlines()
    assert any(l.startswith("ts2: axiom=TS2") for l in out.splitlines())


def test_batch_and_jobs_agree():
    files = [DATA / "pi.elem", DATA / "psi0.elem", DATA / "kernel.elem"]
    args = [a for f in files for a in ("--in", f)]
    serial = call("val", *args)
    parallel = call("val", "--jobs", 2, *args)
    assert serial[0] == parallel[0] == 0
    assert serial[1] == parallel[1]


@pytest.mark.parametrize("argv, code", [
    (["bogus"], 1),
    (["val"], 1),
    (["val", "--in", "missing.elem"], 1),
    (["gamma", "--chi", "3", "--in", str(DATA / "pi.elem")], 3),
    (["val", "--in", str(DATA / "trivial.pgm")], 1),
])
def test_error_exit_codes(argv, code):
    assert call(*argv)[0] == code


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "phigamma", "val", "--in", str(DATA / "pi.elem")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "valuation: 3/2" in proc.stdout
