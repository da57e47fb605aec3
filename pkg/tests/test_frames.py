import random
from fractions import Fraction

import pytest

from arclosure.frames import (
    PointKind,
    NormalFormError,
    bracket_classification,
    chart_1d,
    chart_2d,
    classify_point,
    divergence,
    first_order_coefficient,
    genericity_scan,
    laplace_beltrami,
    metric_and_volume,
    normal_form,
)
from arclosure.opalgebra import DiffOp, coordinate_frame
from arclosure.symexpr import Expr, parse

C2 = coordinate_frame(("x", "y"))
PARABOLA = "y - x^2"


@pytest.mark.parametrize("q,kind", [((0, 0), PointKind.TANGENCY),
                                    ((1, 1), PointKind.GRUSHIN),
                                    ((0, 1), PointKind.RIEMANNIAN)])
def test_classify_parabola(q, kind):
    assert classify_point(chart_2d(PARABOLA), q).kind is kind


def test_classify_nongeneric_names_condition():
    c = classify_point(chart_2d("y - x^3"), (0, 0))
    assert c.kind is PointKind.NONGENERIC
    assert "d_x^2 f" in c.reason
    c = classify_point(chart_2d("x^2 + y^2"), (0, 0))
    assert c.kind is PointKind.NONGENERIC and "d_y f" in c.reason


def test_classify_float_point_uses_tolerance():
    c = classify_point(chart_2d("x"), (1e-12, 0.3))
    assert c.kind is PointKind.GRUSHIN


def test_classify_1d():
    ch = chart_1d("x*(1-x)")
    assert classify_point(ch, (0,)).kind is PointKind.ENDPOINT
    assert classify_point(ch, (Fraction(1, 2),)).kind is PointKind.RIEMANNIAN
    assert classify_point(chart_1d("x^2"), (0,)).kind is PointKind.NONGENERIC


def test_scan_grushin_line():
    rep = genericity_scan(chart_2d("x"), 16)
    assert rep.singular_points
    assert all(abs(p[0]) < 1e-10 for p in rep.singular_points)
    assert set(rep.counts()) == {"Grushin"}
    assert not rep.tangency_points and not rep.nongeneric


def test_scan_empty():
    rep = genericity_scan(chart_2d("1"), 16)
    assert rep.empty and rep.counts() == {}


def test_scan_parabola_has_one_tangency():
    rep = genericity_scan(chart_2d(PARABOLA), 32)
    assert len(rep.tangency_points) == 1
    assert all(abs(float(v)) < 1e-9 for v in rep.tangency_points[0])
    for x, y in rep.singular_points:
        assert abs(y - x * x) < 1e-9
    assert not rep.nongeneric


def test_scan_flags_cubic():
    rep = genericity_scan(chart_2d("y - x^3"), 32)
    assert rep.nongeneric


def test_laplacian_examples():
    assert laplace_beltrami(chart_2d("x")) == DiffOp(C2, {(0, 0): 1, (1, 1): parse("x^2"), (0,): parse("-1/x")})
    assert laplace_beltrami(chart_2d("1")) == DiffOp(C2, {(0, 0): 1, (1, 1): 1})
    tan = laplace_beltrami(chart_2d(PARABOLA))
    assert tan == DiffOp(C2, {(0, 0): 1, (1, 1): parse("(y-x^2)^2"),
                              (0,): parse("2*x/(y-x^2)"), (1,): parse("y-x^2")})


def test_divergence():
    assert divergence(chart_2d("x"), "X1") == parse("-1/x")
    assert divergence(chart_2d("x"), "X2").is_zero()
    # X2 = f d_y has zero divergence for dx dy/|f|: d_y(rho f) = d_y 1 = 0
    assert divergence(chart_2d(PARABOLA), "X2").is_zero()
    assert divergence(chart_2d(PARABOLA), "X1") == parse("2*x/(y-x^2)")
    with pytest.raises(ValueError):
        divergence(chart_2d("x"), "X3")


def test_metric_and_volume():
    g, rho = metric_and_volume(chart_2d("x"))
    assert g[1][1] == parse("1/x^2") and g[0][1].is_zero()
    assert rho.evaluate({"x": -0.5, "y": 0}) == pytest.approx(2.0)
    g, rho = metric_and_volume(chart_2d("1"))
    assert g == [[Expr(1), Expr(0)], [Expr(0), Expr(1)]] and rho == Expr(1)
    g, rho = metric_and_volume(chart_2d(PARABOLA))
    assert g[1][1] == parse("1/(y-x^2)^2")
    assert rho.evaluate({"x": 1, "y": 0.5}) == pytest.approx(2.0)


def test_normal_forms():
    assert normal_form("Grushin", {"phi": 0}).f == parse("x")
    assert normal_form(PointKind.TANGENCY, {"psi": 1, "Psi": 0}).f == parse(PARABOLA)
    assert normal_form("Riemannian").f == Expr(1)
    with pytest.raises(NormalFormError, match="psi"):
        normal_form("Tangency", {"psi": "x"})
    with pytest.raises(NormalFormError, match="Psi"):
        normal_form("Tangency", {"psi": 1, "Psi": "y"})


def test_euclidean_laplacian_has_no_first_order_part():
    lap = laplace_beltrami(chart_2d("1"))
    assert lap.coefficient((0,)).is_zero() and lap.coefficient((1,)).is_zero()


def _random_poly(rng):
    terms = []
    for _ in range(rng.randint(2, 4)):
        terms.append(f"({rng.randint(-3, 3)})*x^{rng.randint(0, 2)}*y^{rng.randint(0, 2)}")
    terms.append(f"{rng.choice([1, 2, -1])}*y")
    return parse(" + ".join(terms))


def test_first_order_coefficients_random():
    rng = random.Random(7)
    for _ in range(20):
        f = _random_poly(rng)
        if f.is_zero():
            continue
        ch = chart_2d(f)
        assert first_order_coefficient(ch, "x") == divergence(ch, "X1")
        assert first_order_coefficient(ch, "y") == f * f.diff("y")


def test_bracket_oracle_agrees():
    rng = random.Random(11)
    charts = [chart_2d(PARABOLA), chart_2d("x"), chart_2d("y - x^3"), chart_2d("x*y + y"),
              chart_2d("y + x^2 - x")]
    pts = [(Fraction(rng.randint(-4, 4), 4), Fraction(rng.randint(-4, 4), 4)) for _ in range(12)]
    checked = 0
    for ch in charts:
        for q in pts + [(0, 0), (1, 1)]:
            a = classify_point(ch, q)
            if not a.singular:
                continue
            b = bracket_classification(ch, q)
            assert a.kind is b.kind, (ch.f, q)
            checked += 1
    assert checked >= 5
