import csv
import json

import pytest

from arclosure.invert import Status
from arclosure.pipeline import (
    ClosureConfig,
    ConfigError,
    bessel_rows,
    load_config,
    run_closure,
    run_epsilon_sandwich,
)


@pytest.fixture(scope="module")
def grushin_report():
    return run_closure(ClosureConfig(dim=2, f="x", h="1", samples=9))


def test_closure_1d():
    rep = run_closure(ClosureConfig(dim=1, params={"alpha": "1"}))
    assert rep.conclusion["status"] == "complete"
    assert rep.conclusion["statement"] == "D = s^{3/2}H^2_V(0,1)"
    assert [p["point"] for p in rep.data["points"]] == [["0"], ["1"]]
    assert rep.statuses == [Status.LEFT_INVERTIBLE] * 2
    # s' = -1 at x = 1 flips the sign of the generator
    assert [p["limit_operator"] for p in rep.data["points"]] == ["Z^2 + 2*Z - 1", "Z^2 - 2*Z - 1"]


def test_closure_grushin(grushin_report):
    rep = grushin_report
    assert rep.conclusion["status"] == "complete"
    assert rep.conclusion["statement"] == "D = sH^2_V(M)"
    assert rep.data["scan"]["sampled"] == 9
    assert rep.statuses and all(s is Status.LEFT_INVERTIBLE for s in rep.statuses)
    p = rep.data["points"][0]
    assert p["limit_operator"] == "Z1^2 + Z2^2 - 2"
    assert p["boundary_operators"] == {"T0": "Z^2 + 2*Z - 1", "Tinf": "Z^2 - 1"}


def test_closure_tangency_withheld():
    rep = run_closure(ClosureConfig(dim=2, f="y - x^2", h="-1", samples=5))
    c = rep.conclusion
    assert c["status"] == "withheld" and not c["claims_domain"]
    tang = [p for p in rep.data["points"] if p["classification"] == "Tangency"]
    assert len(tang) == 1
    assert tang[0]["verdict"]["status"] == "NotLeftInvertible"
    assert any("witness" in r for r in c["reasons"])


def test_closure_nongeneric_partial():
    rep = run_closure(ClosureConfig(dim=2, f="y - x^3", h="1", samples=5))
    assert rep.conclusion["status"] == "partial"


def test_conclusion_soundness():
    for cfg in (ClosureConfig(dim=2, f="x", h="0", samples=5), ClosureConfig(dim=1, params={"alpha": "0"}),
                ClosureConfig(dim=2, f="x", h="2", samples=5)):
        rep = run_closure(cfg)
        if rep.conclusion["claims_domain"]:
            assert all(s is Status.LEFT_INVERTIBLE for s in rep.statuses)
        else:
            assert not all(s is Status.LEFT_INVERTIBLE for s in rep.statuses) or rep.data["scan"].get("nongeneric")


def test_report_determinism():
    cfg = ClosureConfig(dim=2, f="x", h="1", samples=5)
    a, b = run_closure(cfg), run_closure(cfg)
    assert a.deterministic_json() == b.deterministic_json()
    parallel = run_closure(ClosureConfig(dim=2, f="x", h="1", samples=5, workers=3))
    assert json.loads(parallel.deterministic_json())["points"] == json.loads(a.deterministic_json())["points"]


def test_config_round_trip(tmp_path):
    cfg = ClosureConfig(dim=1, s="x*(1-x)", params={"alpha": "1/2"}, gamma="3/2", epsilons=["0.1", "1"],
                        samples=7, emit_csv=True, directory="out")
    assert ClosureConfig.from_toml(cfg.to_toml()) == cfg
    cfg2 = ClosureConfig(dim=2, f="y - x^2", h="1", window=[["-2", "2"], ["-1", "3"]])
    assert ClosureConfig.from_toml(cfg2.to_toml()) == cfg2
    path = tmp_path / "c.toml"
    path.write_text(cfg2.to_toml())
    assert load_config(path) == cfg2
    assert cfg.digest() != cfg2.digest()


@pytest.mark.parametrize("text", ["[chart]\ndim = 3\n", "[chart]\ncolour = 1\n", "[extra]\n", "[chart\n"])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        ClosureConfig.from_toml(text)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.toml")


def test_epsilon_sandwich():
    rep = run_epsilon_sandwich(ClosureConfig(dim=1), ["0", "1/10", "1"])
    rows = {r["eps"]: r for r in rep["rows"]}
    assert rows["0"]["plus"]["verdict"]["status"] == "NotLeftInvertible"
    assert rows["1/10"]["plus"]["limit_operator"] == "Z^2 + 11/5*Z + 21/100"
    assert rows["1/10"]["plus"]["verdict"]["status"] == "LeftInvertible"
    assert rows["1"]["plus"]["limit_operator"] == "Z^2 + 4*Z + 3"
    assert rows["1"]["plus"]["verdict"]["evidence"]["infimum"] == "9"
    assert all(r["plus"]["matches_expected_form"] for r in rep["rows"])
    assert rep["left_invertible_eps"] == ["1/10", "1"]


def test_epsilon_sandwich_rejects_2d():
    with pytest.raises(ConfigError):
        run_epsilon_sandwich(ClosureConfig(dim=2), ["0.1"])


def test_sidecars(grushin_report, tmp_path):
    files = grushin_report.write(tmp_path, csv_files=True, figures=True)
    names = {p.name for p in files}
    assert "report.json" in names
    sym = sorted(n for n in names if n.startswith("symbol_") and n.endswith(".csv"))
    bes = sorted(n for n in names if n.startswith("bessel_") and n.endswith(".csv"))
    assert sym and bes
    assert any(n.endswith(".png") for n in names) and "scan.png" in names
    with open(tmp_path / sym[0]) as fh:
        header = next(csv.reader(fh))
    assert header[:2] == ["xi", "abs_symbol_sq"]
    with open(tmp_path / bes[0]) as fh:
        header = next(csv.reader(fh))
    assert header == ["x", "I_nu", "K_nu", "shell_sum_I", "shell_sum_K"]
    saved = json.loads((tmp_path / "report.json").read_text())
    assert saved["schema"] == "arclosure-report/1"
    assert saved["points"][0]["sidecars"]


def test_bessel_rows():
    rows = bessel_rows(1.0, count=5)
    assert len(rows) == 5 and all(len(r) == 5 for r in rows)
