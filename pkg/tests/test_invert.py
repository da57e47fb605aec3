import random
from fractions import Fraction

import numpy as np
import pytest
import sympy

from arclosure.frames import chart_2d
from arclosure.invert import (
    ImaginaryOrder,
    Status,
    affine_reduce,
    bessel_injectivity,
    decide_abelian,
    decide_affine,
    decide_tangency,
    fourier_symbol,
    parse_abelian,
    reduced_boundary_ops,
)
from arclosure.limits import GroupTag, LimitOperator, UnsupportedShape, freeze, weighted_operator
from arclosure.numverify import semibound_estimate
from arclosure.symexpr import Expr, parse

AFFINE = GroupTag("Affine", 2, (Expr(0), Expr(2)))


def affine_op(h0) -> LimitOperator:
    h = h0 if isinstance(h0, Expr) else Expr(Fraction(h0))
    return LimitOperator(AFFINE, {(0, 0): Expr(1), (1, 1): Expr(1), (): -1 - h})


def tangency_op(h0) -> LimitOperator:
    return LimitOperator(GroupTag("Abelian", 2), {(0, 0): Expr(1), (1, 1): Expr(1), (): -Expr(Fraction(h0))})


def _same(a, b):
    return sympy.expand(a - b) == 0


# -- symbols ---------------------------------------------------------------


def test_fourier_symbol_examples():
    s = fourier_symbol(parse_abelian("D2 + 2*D - alpha"))
    (a,) = [v for v in s.modsq.free_symbols if v.name == "alpha"]
    xi = s.variables[0]
    assert _same(s.modsq, (xi**2 + a) ** 2 + 4 * xi**2)
    s = fourier_symbol(parse_abelian("D2 - 1"))
    assert _same(s.modsq, (s.variables[0] ** 2 + 1) ** 2)
    s = fourier_symbol(tangency_op(3))
    x1, x2 = s.variables
    assert _same(s.modsq, (x1**2 + x2**2 + 3) ** 2)


def test_fourier_symbol_rejects_affine():
    with pytest.raises(ValueError):
        fourier_symbol(affine_op(1))


def test_decide_abelian_examples():
    v = decide_abelian(fourier_symbol(parse_abelian("D2 + 2*D - a", {"a": 1})))
    assert v.status is Status.LEFT_INVERTIBLE
    assert v.evidence["infimum"] == "1" and v.evidence["minimizer"] == [0.0]
    v = decide_abelian(fourier_symbol(parse_abelian("D2 + 2*D - a", {"a": 0})))
    assert v.status is Status.NOT_LEFT_INVERTIBLE and v.evidence["witness"] == [0.0]
    v = decide_abelian(fourier_symbol(parse_abelian("D2 + 2*D - a", {"a": -3})))
    assert v.status is Status.LEFT_INVERTIBLE
    assert v.evidence["infimum"] == "8" and abs(abs(v.evidence["minimizer"][0]) - 1) < 1e-12


def test_decide_abelian_unbound_parameter_is_inconclusive():
    v = decide_abelian(fourier_symbol(parse_abelian("D2 + 2*D - a")))
    assert v.status is Status.INCONCLUSIVE


@pytest.mark.parametrize("h0,status", [(1, Status.LEFT_INVERTIBLE), (0, Status.NOT_LEFT_INVERTIBLE),
                                       (-1, Status.NOT_LEFT_INVERTIBLE)])
def test_decide_tangency(h0, status):
    v = decide_tangency(tangency_op(h0))
    assert v.status is status
    if h0 == 1:
        assert v.evidence["infimum"] == "1"
    if h0 == -1:
        assert abs(np.hypot(*v.evidence["witness"]) - 1) < 1e-12
    if h0 == 0:
        assert v.evidence["witness"] == [0.0, 0.0]


def _random_symbol_op(rng):
    coeffs = [Fraction(rng.randint(-6, 6), rng.randint(1, 4)) for _ in range(3)]
    if coeffs[2] == 0 and coeffs[1] == 0:
        coeffs[2] = Fraction(1)
    terms = {w: Expr(c) for w, c in zip([(), (0,), (0, 0)], coeffs) if c}
    return LimitOperator(GroupTag("Abelian", 1), terms, names=("Z",)), coeffs


def test_witnesses_vanish_and_infimum_matches_brute_force():
    rng = random.Random(2024)
    grid = np.arange(-100.0, 100.0 + 1e-9, 1e-3)
    for _ in range(20):
        op, (c0, c1, c2) = _random_symbol_op(rng)
        sym = fourier_symbol(op)
        v = decide_abelian(sym)
        vals = (float(c0) - float(c2) * grid**2) ** 2 + (float(c1) * grid) ** 2
        k = int(np.argmin(vals))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
        fine = np.linspace(lo, hi, 20001)
        brute = float(np.min((float(c0) - float(c2) * fine**2) ** 2 + (float(c1) * fine) ** 2))
        if v.status is Status.NOT_LEFT_INVERTIBLE:
            assert sym.abs_symbol(v.evidence["witness"]) <= 1e-10
            assert brute <= 1e-6
        else:
            assert v.status is Status.LEFT_INVERTIBLE
            assert abs(v.evidence["infimum_float"] - brute) <= 1e-6


def test_left_invertible_constant_on_wave_packets():
    rng = random.Random(5)
    ops = [parse_abelian("D2 + 2*D - a", {"a": a}) for a in (1, -3, Fraction(1, 2))] + [parse_abelian("D2 - 1")]
    for op in ops:
        v = decide_abelian(fourier_symbol(op))
        c = v.evidence["constant_c"]
        for _ in range(50 // len(ops) + 1):
            est = semibound_estimate(op, xi0=[rng.uniform(-4, 4)], lengths=[rng.uniform(1, 200)])
            assert est["c_est"] >= c - 1e-6


# -- affine ----------------------------------------------------------------


def test_affine_reduce_symbolic():
    h0 = parse("h0")
    rop = affine_reduce(affine_op(h0))
    assert rop.operator.coefficient((0, 0)) == Expr(1)
    assert rop.operator.coefficient(()) == parse("-x^4 - 1 - h0")
    assert rop.nu is None and rop.h0 == h0


def test_affine_reduce_from_chart_pipeline():
    ch = chart_2d("x", h=3)
    rop = affine_reduce(freeze(weighted_operator(ch), ch, (0, 0)))
    assert rop.nu == Expr(1)
    assert rop.operator.coefficient(()) == parse("-x^4 - 4")


def test_affine_reduce_unsupported_shape():
    with pytest.raises(UnsupportedShape):
        affine_reduce(LimitOperator(AFFINE, {(0, 0): Expr(1), (): Expr(-1)}))
    with pytest.raises(UnsupportedShape):
        affine_reduce(tangency_op(1))


def test_boundary_operators_symbolic():
    T0, Tinf = reduced_boundary_ops(affine_reduce(affine_op(parse("h0"))))
    assert dict(T0.terms) == {(0, 0): Expr(1), (0,): Expr(2), (): parse("-h0")}
    assert dict(Tinf.terms) == {(0, 0): Expr(1), (): Expr(-1)}
    assert T0.group == Tinf.group == GroupTag("Abelian", 1)


def test_boundary_operators_numeric():
    T0, _ = reduced_boundary_ops(affine_reduce(affine_op(0)))
    assert dict(T0.terms) == {(0, 0): Expr(1), (0,): Expr(2)}
    v = decide_abelian(fourier_symbol(T0))
    assert v.status is Status.NOT_LEFT_INVERTIBLE and v.evidence["witness"] == [0.0]
    T0, _ = reduced_boundary_ops(affine_reduce(affine_op(Fraction(-1, 2))))
    v = decide_abelian(fourier_symbol(T0))
    assert v.evidence["infimum"] == "1/4"


def test_bessel_table_nu_one():
    t = bessel_injectivity(affine_reduce(affine_op(3)))
    rows = {(r["solution"], r["endpoint"]): r for r in t["rows"]}
    assert t["nu"] == 1.0
    assert rows["I", "zero"]["exponent"] == 1 and rows["I", "zero"]["integrable"]
    assert not rows["I", "infinity"]["integrable"]
    assert rows["K", "zero"]["exponent"] == -7 and not rows["K", "zero"]["integrable"]
    assert rows["K", "infinity"]["integrable"]
    assert t["injective"]


def test_bessel_table_nu_quarter():
    t = bessel_injectivity(affine_reduce(affine_op(Fraction(-3, 4))))
    rows = {(r["solution"], r["endpoint"]): r for r in t["rows"]}
    assert t["nu"] == 0.25
    assert rows["I", "zero"]["exponent"] == -2 and not rows["I", "zero"]["integrable"]
    assert t["injective"]


def test_bessel_imaginary_order():
    with pytest.raises(ImaginaryOrder):
        bessel_injectivity(affine_reduce(affine_op(-1)))
    v = decide_affine(affine_reduce(affine_op(-1)))
    assert v.status is Status.INCONCLUSIVE
    assert v.subverdicts["injectivity"].status is Status.INCONCLUSIVE


@pytest.mark.parametrize("h0,status", [(3, Status.LEFT_INVERTIBLE), (0, Status.NOT_LEFT_INVERTIBLE),
                                       (Fraction(-1, 2), Status.LEFT_INVERTIBLE)])
def test_decide_affine(h0, status):
    v = decide_affine(affine_reduce(affine_op(h0)))
    assert v.status is status
    if status is Status.NOT_LEFT_INVERTIBLE:
        assert v.evidence["failed"] == "T0" and v.evidence["witness"] == [0.0]


def test_decide_affine_parallel_matches_serial():
    rop = affine_reduce(affine_op(3))
    assert decide_affine(rop, parallel=True).to_dict() == decide_affine(rop).to_dict()


def test_decide_affine_symbolic_is_inconclusive():
    v = decide_affine(affine_reduce(affine_op(parse("h0"))))
    assert v.status is Status.INCONCLUSIVE


def test_probes_attached():
    t = bessel_injectivity(affine_reduce(affine_op(3)), probes=True)
    assert t["probes"]["I@zero"]["convergent"]
    assert not t["probes"]["K@zero"]["convergent"]
