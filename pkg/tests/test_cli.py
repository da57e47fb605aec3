import json

import pytest

from arclosure.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_limit_op_grushin(capsys):
    code, out, _ = run(capsys, "limit-op", "--f", "x", "--h", "1", "--point", "0,0")
    assert code == 0
    assert out.splitlines()[0] == "Z1^2 + Z2^2 - 2    [Affine]"


def test_limit_op_normalizes(capsys):
    code, out, _ = run(capsys, "limit-op", "--f", "2*x", "--point", "0,0")
    assert code == 0 and "normalized: Z1^2 + Z2^2 - 1" in out


def test_decide_abelian(capsys):
    code, out, _ = run(capsys, "decide", "--abelian", "D2 + 2*D - a", "--param", "a=0", "--json")
    assert code == 0
    assert "NotLeftInvertible (symbol vanishes at [0.0])" in out
    payload = json.loads(out[out.index("{"):])
    assert payload["evidence"]["witness"] == [0.0]


def test_decide_point(capsys):
    code, out, _ = run(capsys, "decide", "--f", "x", "--h", "3", "--point", "0,0")
    assert code == 0 and "LeftInvertible" in out


def test_decide_inconclusive_exit(capsys):
    code, _, _ = run(capsys, "decide", "--f", "x", "--h", "-2", "--point", "0,0")
    assert code == 3


def test_classify(capsys):
    code, out, _ = run(capsys, "classify", "--f", "y - x^2", "--point", "0,0")
    assert code == 0 and out.strip() == "Tangency"
    code, out, _ = run(capsys, "classify", "--f", "y - x^3", "--point", "0,0")
    assert code == 3 and out.startswith("NonGeneric")
    code, out, _ = run(capsys, "classify", "--f", "x", "--resolution", "8")
    assert code == 0 and json.loads(out)["counts"] == {"Grushin": json.loads(out)["counts"]["Grushin"]}


def test_laplacian_and_conjugate(capsys):
    code, out, _ = run(capsys, "laplacian", "--f", "x")
    assert code == 0 and "x^2" in out
    code, out, _ = run(capsys, "conjugate", "--alpha", "1")
    assert code == 0 and out.startswith("frame: ")


def test_closure_with_config(tmp_path, capsys):
    cfg = tmp_path / "grushin.toml"
    cfg.write_text('[chart]\ndim = 2\nf = "x"\nh = "1"\n\n[solver]\nsamples = 3\n')
    out_dir = tmp_path / "out"
    code, _, err = run(capsys, "closure", "--config", str(cfg), "--emit-csv", str(out_dir), "--no-figures")
    assert code == 0 and "D = sH^2_V(M) [complete]" in err
    assert (out_dir / "report.json").exists()
    assert list(out_dir.glob("symbol_*.csv"))
    assert not list(out_dir.glob("*.png"))


def test_closure_report_to_file(tmp_path, capsys):
    target = tmp_path / "r.json"
    code, _, _ = run(capsys, "closure", "--alpha", "1", "-o", str(target))
    assert code == 0
    assert json.loads(target.read_text())["conclusion"]["status"] == "complete"


def test_sandwich(capsys):
    code, out, err = run(capsys, "sandwich", "--eps", "0.1")
    assert code == 0
    assert "Z^2 + 11/5*Z + 21/100 -> LeftInvertible" in err
    assert json.loads(out)["mode"] == "epsilon-sandwich"


@pytest.mark.parametrize("argv", [
    ["closure", "--config", "/nonexistent/cfg.toml"],
    ["limit-op", "--f", "x +* y", "--point", "0,0"],
    ["limit-op", "--f", "x", "--point", "a,b"],
    ["decide"],
    ["no-such-command"],
])
def test_input_errors_exit_2(argv, capsys):
    assert main(argv) == 2


def test_nongeneric_limit_op_exit_3(capsys):
    assert main(["limit-op", "--f", "y - x^3", "--point", "0,0"]) == 3
