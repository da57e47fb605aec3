from fractions import Fraction

import pytest

from arclosure.frames import chart_1d, chart_2d
from arclosure.limits import (
    GroupTag,
    NonGenericPoint,
    UnsupportedShape,
    freeze,
    general_freeze_constant,
    isotropy_type,
    normalize_affine,
    weighted_operator,
)
from arclosure.opalgebra import commutator
from arclosure.symexpr import Expr, parse


def test_isotropy_examples():
    assert isotropy_type(chart_2d("x"), (0, 0)).kind == "Affine"
    assert isotropy_type(chart_2d("y - x^2"), (0, 0)) == GroupTag("Abelian", 2)
    assert isotropy_type(chart_1d("x*(1-x)"), (0,)) == GroupTag("Abelian", 1)
    with pytest.raises(NonGenericPoint):
        isotropy_type(chart_2d("y - x^3"), (0, 0))
    with pytest.raises(ValueError):
        isotropy_type(chart_2d("x"), (1, 0))


def test_freeze_1d_model():
    ch = chart_1d("x*(1-x)")
    op = freeze(weighted_operator(ch), ch, (0,))
    assert op.coefficient((0, 0)) == Expr(1)
    assert op.coefficient((0,)) == Expr(2)
    assert op.coefficient(()) == parse("-alpha")
    assert str(op) == "Z^2 + 2*Z - alpha"


def test_freeze_grushin():
    ch = chart_2d("x", h="h0")
    op = freeze(weighted_operator(ch), ch, (0, 0))
    assert op.group.kind == "Affine"
    assert dict(op.terms) == {(0, 0): Expr(1), (1, 1): Expr(1), (): parse("-1 - h0")}


def test_freeze_tangency():
    ch = chart_2d("y - x^2", h="h0")
    op = freeze(weighted_operator(ch), ch, (0, 0))
    assert op.group == GroupTag("Abelian", 2)
    assert dict(op.terms) == {(0, 0): Expr(1), (1, 1): Expr(1), (): parse("-h0")}


@pytest.mark.parametrize("f,h,expected", [("x", 3, -4), ("2*x", 0, -4), ("y - x^2", 5, -5)])
def test_general_freeze_constant(f, h, expected):
    assert general_freeze_constant(chart_2d(f, h=h), (0, 0)) == Expr(expected)


def test_general_constant_matches_frozen():
    ch = chart_2d("x", h=3)
    op = freeze(weighted_operator(ch), ch, (0, 0))
    assert op.coefficient(()) == general_freeze_constant(ch, (0, 0))


def test_freeze_linear():
    ch = chart_2d("x", h="h0")
    p = weighted_operator(ch)
    q = weighted_operator(chart_2d("x", h=2))
    both = freeze(p + q, ch, (0, 0))
    assert both == freeze(p, ch, (0, 0)) + freeze(q, ch, (0, 0))


def test_symbolic_gamma_commutes_with_substitution():
    ch = chart_1d("x*(1-x)")
    sym = freeze(weighted_operator(ch, gamma="gamma"), ch, (0,)).subs({"gamma": Fraction(3, 2)})
    direct = freeze(weighted_operator(ch, gamma=Fraction(3, 2)), ch, (0,))
    assert sym == direct


def test_raw_bracket_factor_by_commutator():
    ch = chart_2d("2*x")
    tag = isotropy_type(ch, (0, 0))
    Y1, Y2 = ch.lie_frame().fields
    br = commutator(Y1, Y2)
    # [Y1, Y2] = k Y2 near the point, k read off at q
    k = (br.coeffs[1] / Y2.coeffs[1]).subs({"x": 0, "y": 0})
    assert tag.raw_factor == k == Expr(4)


def test_normalize_affine():
    ch = chart_2d("2*x")
    op = freeze(weighted_operator(ch), ch, (0, 0))
    norm, info = normalize_affine(op)
    assert norm.group.bracket == (Expr(0), Expr(2))
    assert dict(norm.terms) == {(0, 0): Expr(1), (1, 1): Expr(1), (): Expr(-1)}
    assert info["h0_effective"] == "0"
    # unit factor: already normalized
    ch = chart_2d("x", h=3)
    op = freeze(weighted_operator(ch), ch, (0, 0))
    norm, _ = normalize_affine(op)
    assert norm.terms == op.terms
    with pytest.raises(UnsupportedShape):
        t = freeze(weighted_operator(chart_2d("y - x^2")), chart_2d("y - x^2"), (0, 0))
        normalize_affine(t)
