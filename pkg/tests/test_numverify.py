import math

import numpy as np
import pytest
import sympy

from arclosure.invert import parse_abelian
from arclosure.numverify import (
    Divergent,
    WeightedMeasure,
    cutoff_r,
    domain_membership_probe,
    embedding_spotcheck,
    gauss_legendre,
    integrability_probe,
    quad_weighted,
    quad_weighted_detail,
    semibound_estimate,
    sobolev_norm,
)
from arclosure.opalgebra import VectorField
from arclosure.symexpr import ParseError, parse

CUBE = WeightedMeasure(parse("x^(-3)"), (0.0, 1.0), (0.0,))


def test_quad_examples():
    assert quad_weighted("x^3", CUBE) == pytest.approx(0.25, rel=1e-10)
    assert isinstance(quad_weighted("x^(1/2)", CUBE), Divergent)
    r = quad_weighted(parse("x^(3/2)*x^(-3/2)"), WeightedMeasure(parse("1/x"), (0.0, 0.5), (0.0,)))
    assert isinstance(r, Divergent) and r.endpoint == 0.0
    assert not r


@pytest.mark.parametrize("a", [0, 0.5, 1, 1.5, 2])
def test_divergence_detector_matches_exponent(a):
    r = quad_weighted(f"x^({a})", CUBE)
    divergent = 2 * a - 3 <= -1
    assert isinstance(r, Divergent) == divergent
    if not divergent:
        assert r == pytest.approx(1 / (2 * a - 2), rel=1e-8)


def test_infinite_endpoint():
    m = WeightedMeasure(parse("1/x^2"), (1.0, math.inf), (math.inf,))
    assert quad_weighted("1", m) == pytest.approx(1.0, rel=1e-8)
    assert isinstance(quad_weighted("x^(1/2)", m), Divergent)


def test_shell_sums_recorded():
    d = quad_weighted_detail("x", CUBE)
    assert d.divergent and len(d.shells[0.0]) >= 8
    assert all(abs(s - d.shells[0.0][0]) < 1e-9 for s in d.shells[0.0])


def test_gauss_legendre_order():
    exact = (math.e * (math.cos(3) + 3 * math.sin(3)) - 1) / 10
    errs = [abs(gauss_legendre(lambda x: np.exp(x) * np.cos(3 * x), 0, 1, panels=p, points=2) - exact)
            for p in (4, 8, 16)]
    for e1, e2 in zip(errs, errs[1:]):
        assert math.log2(e1 / e2) >= 3


def test_sobolev_polynomial_against_exact():
    X = VectorField(["x*(1-x)"], ("x",))
    m = WeightedMeasure(parse("1/(x*(1-x))"), (0.0, 1.0), (0.0, 1.0))
    got = sobolev_norm("x^2*(1-x)^2", [X], m, 2)
    x = sympy.Symbol("x")
    u = x**2 * (1 - x) ** 2
    words = [u, x * (1 - x) * sympy.diff(u, x)]
    words.append(x * (1 - x) * sympy.diff(words[1], x))
    exact = sum(sympy.integrate(sympy.cancel(w**2 / (x * (1 - x))), (x, 0, 1)) for w in words)
    assert got == pytest.approx(math.sqrt(float(exact)), rel=1e-9)


def test_sobolev_divergent():
    m = WeightedMeasure(parse("1/(x*(1-x))"), (0.0, 1.0), (0.0, 1.0))
    assert isinstance(sobolev_norm("1", [VectorField(["x*(1-x)"], ("x",))], m, 0), Divergent)
    with pytest.raises(ValueError):
        sobolev_norm("1", [], m, 3)


def test_sobolev_grid_bump():
    # u = s^{3/2} v with v a compactly supported bump: the weighted norm is that of v
    def v(x):
        t = (np.asarray(x, dtype=float) - 0.5) / 0.3
        out = np.zeros_like(t)
        inside = np.abs(t) < 1
        out[inside] = np.exp(-1 / (1 - t[inside] ** 2))
        return out

    m = WeightedMeasure(parse("1/(x*(1-x))"), (0.0, 1.0), (0.0, 1.0))
    val = sobolev_norm(v, [lambda x: x * (1 - x)], m, 2)
    assert math.isfinite(val) and val > 0


def test_membership_examples():
    assert domain_membership_probe("x^2")["member"]
    rep = domain_membership_probe("x^(3/2)")
    assert not rep["member"]
    assert rep["excluded"]["integral"] == "|u x^-3/2|^2"
    with pytest.raises(ParseError):
        domain_membership_probe("x^(3/2)/log(1/x)")


def test_membership_reflection():
    assert domain_membership_probe("x^2*(1-x)^2", endpoints=(0, 1))["member"]
    rep = domain_membership_probe("x^2*(1-x)^(3/2)", endpoints=(0, 1))
    assert rep["excluded"]["endpoint"] == 1


def test_semibound_examples():
    assert semibound_estimate(parse_abelian("D2 - 1"))["c_est"] >= 1
    est = semibound_estimate(parse_abelian("D2 + 2*D - a", {"a": 1}), lengths=(10, 100, 1000))
    assert 1 <= est["c_est"] <= 1.05
    assert est["argmin"]["xi0"] == [0.0]
    seq = [semibound_estimate(parse_abelian("D2 + 2*D - a", {"a": 0}), xi0=[0.0], lengths=[L])["c_est"]
           for L in (1e2, 1e3, 1e4)]
    assert seq[0] > seq[1] > seq[2] and seq[2] < 1e-3


def test_semibound_two_dimensional():
    op = parse_abelian("Z1^2 + Z2^2 + 1")
    est = semibound_estimate(op, xi0=[[1.0, 0.0], [0.0, 0.0]], lengths=[1000])
    assert est["c_est"] < 1e-2


def test_integrability_probe_examples():
    p = integrability_probe("I", 1, "zero")
    assert p["convergent"] and p["fit_convergent"] and abs(p["fitted_exponent"] - 1) < 0.05
    p = integrability_probe("K", 1, "zero")
    assert not p["convergent"] and p["exact_exponent"] == -7 and abs(p["fitted_exponent"] + 7) < 0.05
    p = integrability_probe("I", 1, "infinity")
    assert not p["convergent"] and not p["fit_convergent"]
    assert all(b > a for a, b in zip(p["shell_sums"], p["shell_sums"][1:]))
    p = integrability_probe("K", 1, "infinity")
    assert p["convergent"] and p["fit_convergent"]


def test_cutoff():
    r = cutoff_r(0.25)
    x = np.array([0.1, 0.25, 0.5, 2.0])
    assert np.allclose(r(x), [0.1, 0.25, 1.0, 1.0])
    h = 1e-6
    for x0 in (0.25, 0.5):
        left = (r(x0) - r(x0 - h)) / h
        right = (r(x0 + h) - r(x0)) / h
        assert abs(left - right) < 1e-4


def test_embedding_spotcheck():
    rep = embedding_spotcheck(centres=(1.0,))
    assert math.isfinite(rep["rows"][0]["ratio"]) and rep["rows"][0]["ratio"] > 0
    rep = embedding_spotcheck()
    assert rep["passed"] and len(rep["rows"]) >= 7
    zero = embedding_spotcheck(centres=(1.0, 0.5), amplitude=0.0)
    assert all(r["ratio"] is None for r in zero["rows"]) and zero["max_ratio"] is None
