import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from slevir.cli import EXIT_FAIL, EXIT_IO, EXIT_OK, EXIT_USAGE, main, parse_kappa, parse_probe
from slevir.virasoro import ModuleParams


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def kv(text):
    return dict(line.split("=", 1) for line in text.strip().splitlines())


def schema():
    return json.loads(resources.files("slevir").joinpath("schemas/summary.schema.json").read_text())


# ----------------------------------------------------------------- algebra

def test_kac_six(capsys):
    code, out, _ = run(capsys, "kac", "--kappa", "6")
    assert code == EXIT_OK
    assert kv(out) == {"kappa": "6", "c": "0", "h": "0", "dual_kappa": "8/3", "dual_c": "0"}


def test_kac_four_json(capsys):
    code, out, _ = run(capsys, "kac", "--kappa", "4", "--format", "json")
    assert code == EXIT_OK
    rec = json.loads(out)
    assert (rec["c"], rec["h"], rec["dual_kappa"]) == ("1", "1/4", "4")


@pytest.mark.parametrize("bad", ["0", "-2", "abc", "1/0", "0.5"])
def test_kac_rejects_bad_kappa(capsys, bad):
    code, _, err = run(capsys, "kac", "--kappa", bad)
    assert code == EXIT_USAGE
    assert "error" in err


@pytest.mark.parametrize("args, verdict, defects", [
    (("6", "0", "0"), "SINGULAR", ("0", "0")),
    (("2", "-2", "1"), "SINGULAR", ("0", "0")),
    (("6", "0", "1"), "NOT", ("12", "10")),
])
def test_singular_check(capsys, args, verdict, defects):
    k, c, h = args
    code, out, _ = run(capsys, "singular-check", "--kappa", k, "--c", c, "--h", h)
    rec = kv(out)
    assert code == EXIT_OK
    assert rec["verdict"] == verdict
    assert (rec["d1"], rec["d2"]) == defects


def test_missing_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == EXIT_USAGE


def test_parse_helpers():
    assert str(parse_kappa("8/3")) == "8/3"
    assert parse_kappa("2.5", allow_float=True) == 2.5
    params = ModuleParams(0, 0)
    assert [w.terms for w in parse_probe("L-1^2", params, 4)] == [{(1, 1): 1}]
    # L_{-1} L_{-2} = L_{-2} L_{-1} + L_{-3}
    assert parse_probe("L-1L-2", params, 4)[0].terms == {(2, 1): 1, (3,): 1}
    assert len(parse_probe("all", params, 4)) == 12


# -------------------------------------------------------------- simulation

def test_trace_zero_kappa(capsys):
    code, out, _ = run(capsys, "trace", "--kappa", "0", "--T", "1")
    lines = out.splitlines()
    assert code == EXIT_OK
    assert lines[0] == "t,re,im"
    assert len(lines) == 1002
    t, re, im = map(float, lines[-1].split(","))
    assert (t, re) == (1.0, 0.0) and im == pytest.approx(2.0, abs=1e-8)
    assert all(float(line.split(",")[1]) == 0.0 for line in lines[1:])


def test_trace_float_kappa_needs_flag(capsys):
    assert run(capsys, "trace", "--kappa", "2.5", "--T", "0.01")[0] == EXIT_USAGE
    assert run(capsys, "trace", "--kappa", "2.5", "--T", "0.01", "--float-kappa")[0] == EXIT_OK


def test_jet_csv(capsys):
    code, out, _ = run(capsys, "jet", "--kappa", "4", "--T", "0.1", "--order", "3", "--seed", "2")
    lines = out.splitlines()
    assert code == EXIT_OK
    assert lines[0] == "t,b0,b1,b2,b3"
    row = list(map(float, lines[-1].split(",")))
    assert row[2] == pytest.approx(2 * row[0], abs=1e-12)


def test_martingale_byte_identical(tmp_path, capsys):
    args = ["martingale", "--kappa", "6", "--probe", "L-2", "--n", "10000", "--seed", "7"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    code_a, out_a, _ = run(capsys, *args, "--out", str(a))
    code_b, out_b, _ = run(capsys, *args, "--out", str(b))
    assert code_a == code_b == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert out_a == out_b
    assert a.read_bytes().startswith(b"t,mean,stderr,n\n")
    assert b"\r" not in a.read_bytes()


def test_martingale_summary_matches_schema(capsys, tmp_path):
    code, out, _ = run(capsys, "martingale", "--kappa", "2", "--probe", "L-2", "--probe", "L-1^2",
                       "--n", "2000", "--T", "0.1", "--seed", "3", "--out", str(tmp_path / "s.csv"))
    assert code == EXIT_OK
    records = [json.loads(line) for line in out.splitlines()]
    assert len(records) == 2
    for rec in records:
        jsonschema.validate(rec, schema())
        assert rec["verdict"] == "CONSERVED"
    assert (tmp_path / "s.csv").read_text().startswith("probe,t,mean,stderr,n\n")


def test_martingale_json_output(capsys):
    code, out, _ = run(capsys, "martingale", "--kappa", "4", "--probe", "L-2", "--n", "500",
                       "--T", "0.05", "--format", "json")
    doc = json.loads(out)
    jsonschema.validate(doc["summaries"][0], schema())
    assert len(doc["series"]["L-2"]) == 10


def test_martingale_detuned_exits_two(capsys):
    code, _, err = run(capsys, "martingale", "--kappa", "6", "--c", "0", "--h", "1/2",
                       "--probe", "L-2", "--n", "4000", "--T", "0.3", "--seed", "1")
    assert code == EXIT_FAIL
    assert json.loads(err.splitlines()[-1])["verdict"] == "DRIFTING"


def test_martingale_probe_too_deep(capsys):
    assert run(capsys, "martingale", "--kappa", "2", "--probe", "L-5", "--n", "10")[0] == EXIT_USAGE


def test_generator_check(capsys):
    code, out, err = run(capsys, "generator-check", "--kappa", "2", "--dt", "1e-3")
    summary = json.loads(err)
    assert code == EXIT_OK
    assert summary["verdict"] == "PASS" and summary["leading_terms_match"]
    assert 0.35 <= summary["ratio"] <= 0.65
    assert out.splitlines()[0] == "probe,leading,expected,residual,residual_half"


def test_generator_check_detuned_leading_terms(capsys):
    code, out, err = run(capsys, "generator-check", "--kappa", "2", "--c", "-2", "--h", "3/2",
                         "--format", "json")
    doc = json.loads(out)
    assert code == EXIT_OK
    row = next(r for r in doc["rows"] if r["probe"] == "L-2")
    assert row["leading"] == row["expected"] == "-1"


def test_boundary(capsys):
    code, out, _ = run(capsys, "boundary", "--kappa", "6", "--n", "2000", "--seed", "4")
    rec = json.loads(out)
    assert code == EXIT_OK
    assert rec["p"] == pytest.approx(1 / 3)
    assert rec["stopped_fraction"] <= 0.1


def test_unwritable_output(capsys, tmp_path):
    target = tmp_path / "missing" / "x.csv"
    code, _, err = run(capsys, "kac", "--kappa", "2", "--out", str(target))
    assert code == EXIT_IO
    assert str(target) in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "slevir", "kac", "--kappa", "8/3"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "c=0" in proc.stdout
