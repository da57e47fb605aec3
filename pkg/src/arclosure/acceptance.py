"""Acceptance checks, one function per criterion.

Each check returns a :class:`CriterionResult`; ``run_all`` is what the
``selftest`` subcommand prints.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import numverify, specfun
from .frames import PointKind, chart_1d, chart_2d, classify_point, divergence, laplace_beltrami
from .invert import (
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
from .limits import freeze, model_1d_laplacian, weighted_operator
from .opalgebra import (
    DiffOp,
    VectorField,
    commutator,
    compose,
    conjugate_by_weight,
    coordinate_frame,
    to_frame,
)
from .symexpr import Equality, Expr, equals, parse


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    elapsed: float
    budget: float | None
    details: list = field(default_factory=list)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        budget = f" / {self.budget:g}s" if self.budget else ""
        return f"[{tag}] criterion {self.number}: {self.title} ({self.elapsed:.2f}s{budget})"


class _Checks:
    def __init__(self):
        self.items: list[tuple[bool, str]] = []

    def __call__(self, ok, text: str):
        self.items.append((bool(ok), text))
        return bool(ok)

    @property
    def ok(self) -> bool:
        return all(ok for ok, _ in self.items)

    def lines(self) -> list[str]:
        return [("ok   " if ok else "FAIL ") + text for ok, text in self.items]


def _timed(number: int, title: str, budget: float | None):
    def deco(fn: Callable[[_Checks], None]):
        def run() -> CriterionResult:
            chk = _Checks()
            t0 = time.perf_counter()
            try:
                fn(chk)
            except Exception as exc:  # a crash is a failed criterion, not a crashed run
                chk(False, f"raised {type(exc).__name__}: {exc}")
            dt = time.perf_counter() - t0
            if budget is not None:
                chk(dt < budget, f"runtime {dt:.2f}s < {budget:g}s")
            return CriterionResult(number, title, chk.ok, dt, budget, chk.lines())
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run
    return deco


def _same_op(a: DiffOp, b: DiffOp) -> bool:
    words = set(a.terms) | set(b.terms)
    return all((a.coefficient(w) - b.coefficient(w)).is_zero() for w in words)


# ---------------------------------------------------------------------------


@_timed(1, "symbolic conjugation with symbolic gamma", 1.0)
def criterion_1(chk):
    chart = chart_1d("x*(1-x)")
    frame = chart.lie_frame()
    res = conjugate_by_weight(model_1d_laplacian(), chart.s, parse("2 - gamma"), parse("gamma"), frame=frame)
    res = to_frame(res, frame, s=chart.s)
    expected = DiffOp(frame, {
        (0, 0): 1,
        (0,): parse("(2*gamma - 1)*(1 - 2*x)"),
        (): parse("gamma*(gamma - 1 + 2*(x - 1)*x*(2*gamma - 1)) - (3/4 + alpha)"),
    })
    chk(res == expected, f"s^(2-gamma) L s^gamma = {res}")
    chk(_same_op(res, expected), "coefficientwise difference is exactly zero")


def _brute_min(Q, lo=-100.0, hi=100.0, step=1e-3):
    xs = np.arange(lo, hi + step / 2, step)
    v = Q(xs)
    i = int(np.argmin(v))
    fine = np.linspace(xs[i] - step, xs[i] + step, 20001)
    return float(np.min(Q(fine)))


@_timed(2, "1D limit operator and alpha dichotomy", 1.0)
def criterion_2(chk):
    chart = chart_1d("x*(1-x)")
    P = weighted_operator(chart)
    op = freeze(P, chart, (0,))
    chk(str(op) == "Z^2 + 2*Z - alpha", f"frozen at x = 0: {op}")
    expected = {"1": Fraction(1), "0.5": Fraction(1, 4), "-3": Fraction(8)}
    for a, inf in expected.items():
        sym = fourier_symbol(op.subs({"alpha": parse(a)}))
        v = decide_abelian(sym)
        got = Fraction(v.evidence.get("infimum", "nan")) if v.left_invertible else None
        brute = _brute_min(sym.numeric_function())
        chk(v.left_invertible and got == inf,
            f"alpha = {a}: {v.status}, inf = {got}, minimizer {v.evidence.get('minimizer')}")
        chk(abs(brute - float(inf)) < 1e-6, f"alpha = {a}: grid minimum {brute:.9f}")
    v = decide_abelian(fourier_symbol(op.subs({"alpha": 0})))
    chk(v.status is Status.NOT_LEFT_INVERTIBLE and v.evidence["witness"] == [0.0],
        f"alpha = 0: {v.status}, witness {v.evidence.get('witness')}")


@_timed(3, "Grushin chain f = x, h = h0", 5.0)
def criterion_3(chk):
    chart = chart_2d("x", h="h0")
    op = freeze(weighted_operator(chart), chart, (0, 0))
    chk(op.group.kind == "Affine", f"isotropy {op.group}")
    chk(equals(op.coefficient(()), parse("-1 - h0")) is Equality.EQUAL
        and op.coefficient((0, 0)) == Expr(1) and op.coefficient((1, 1)) == Expr(1)
        and set(op.terms) == {(0, 0), (1, 1), ()}, f"limit operator {op}")
    rop = affine_reduce(op)
    T = rop.operator
    chk(set(T.terms) == {(0, 0), ()} and T.coefficient((0, 0)) == Expr(1)
        and equals(T.coefficient(()), parse("-x^4 - 1 - h0")) is Equality.EQUAL, f"reduced {T}")
    T0, Tinf = reduced_boundary_ops(rop)
    chk(T0 == parse_abelian("D2 + 2*D - h0"), f"T0 = {T0}")
    chk(Tinf == parse_abelian("D2 - 1"), f"Tinf = {Tinf}")
    for h, want in (("3", Status.LEFT_INVERTIBLE), ("-0.5", Status.LEFT_INVERTIBLE),
                    ("0", Status.NOT_LEFT_INVERTIBLE)):
        v = decide_affine(affine_reduce(op.subs({"h0": parse(h)})))
        chk(v.status is want, f"h0 = {h}: {v}")


@_timed(4, "tangency chain f = y - x^2", 2.0)
def criterion_4(chk):
    chart = chart_2d("y - x^2", h="h0")
    cls = classify_point(chart, (0, 0))
    chk(cls.kind is PointKind.TANGENCY, f"classify (0,0): {cls}")
    op = freeze(weighted_operator(chart), chart, (0, 0))
    chk(op == parse_abelian("Z1^2 + Z2^2 - h0"), f"limit operator {op} on {op.group}")
    for h, want in (("1", Status.LEFT_INVERTIBLE), ("0", Status.NOT_LEFT_INVERTIBLE),
                    ("-1", Status.NOT_LEFT_INVERTIBLE)):
        sub = op.subs({"h0": parse(h)})
        v = decide_tangency(sub)
        ok = v.status is want
        if want is Status.LEFT_INVERTIBLE:
            ok = ok and Fraction(v.evidence["infimum"]) == Fraction(h) ** 2
            chk(ok, f"h0 = {h}: {v}")
        else:
            w = v.evidence["witness"]
            val = fourier_symbol(sub).abs_symbol(w)
            chk(ok and val <= 1e-10, f"h0 = {h}: {v}, |p(witness)| = {val:.1e}")


@_timed(5, "Bessel integrability table at nu = 1", 10.0)
def criterion_5(chk):
    chart = chart_2d("x", h="3")
    rop = affine_reduce(freeze(weighted_operator(chart), chart, (0, 0)))
    chk(rop.nu_float() == 1.0, f"nu = {rop.nu}")
    table = bessel_injectivity(rop, probes=True)
    rows = {(r["solution"], r["endpoint"]): r for r in table["rows"]}
    chk(rows["I", "zero"]["exponent"] == 1 and rows["I", "zero"]["integrable"], "I near 0: exponent +1, integrable")
    chk(rows["K", "zero"]["exponent"] == -7 and not rows["K", "zero"]["integrable"], "K near 0: exponent -7, divergent")
    chk(not rows["I", "infinity"]["integrable"], "I at infinity: divergent")
    chk(rows["K", "infinity"]["integrable"], "K at infinity: convergent")
    pr = table["probes"]
    for key, exact in (("I@zero", 1.0), ("K@zero", -7.0)):
        fit = pr[key]["fitted_exponent"]
        chk(abs(fit - exact) <= 0.05, f"{key}: fitted exponent {fit:.4f} vs {exact:g}")
    for key, exact in (("I@infinity", 2.0), ("K@infinity", -2.0)):
        fit = pr[key]["fitted_rate"]
        chk(abs(fit - exact) <= 0.05 and pr[key]["fit_convergent"] == (exact < 0),
            f"{key}: fitted rate {fit:.4f} vs {exact:g}")
    chk(table["injective"], "no nonzero combination is square integrable")


HALF_INTEGER = {
    0.5: (lambda x: math.sqrt(2 / (math.pi * x)) * math.sinh(x),
          lambda x: math.sqrt(math.pi / (2 * x)) * math.exp(-x)),
    1.5: (lambda x: math.sqrt(2 / (math.pi * x)) * (math.cosh(x) - math.sinh(x) / x),
          lambda x: math.sqrt(math.pi / (2 * x)) * math.exp(-x) * (1 + 1 / x)),
}
WRONSKIAN_GRID = [(nu, x) for nu in (0.25, 0.5, 1.0, 1.5, 2.0, 5.0) for x in (0.5, 1.0, 2.0, 5.0, 10.0, 20.0)]


@_timed(6, "special functions", None)
def criterion_6(chk):
    worst = 0.0
    for nu, (fi, fk) in HALF_INTEGER.items():
        for x in (0.1, 1.0, 5.0, 20.0, 30.0):
            worst = max(worst, abs(specfun.iv(nu, x) / fi(x) - 1), abs(specfun.kv(nu, x) / fk(x) - 1))
    chk(worst < 1e-10, f"half-integer closed forms: max relative error {worst:.2e}")
    w = max(specfun.wronskian_check(nu, x) for nu, x in WRONSKIAN_GRID)
    chk(w < 1e-7, f"Wronskian residual on {len(WRONSKIAN_GRID)} grid points: max {w:.2e}")
    x = 1e-3
    for nu in (0.25, 0.5, 1.0, 2.0):
        ri = specfun.iv(nu, x) / ((x / 2) ** nu / specfun.gamma(nu + 1))
        chk(abs(ri - 1) < 1e-3, f"I ratio nu = {nu:g}: {ri:.7f}")
    for nu in (0.25, 0.5, 1.0, 2.0):
        rk = specfun.kv(nu, x) / (specfun.gamma(nu) / 2 * (2 / x) ** nu)
        chk(abs(rk - 1) < 1e-3, f"K ratio nu = {nu:g}: {rk:.7f}")
    # the K_{1/4} leading term carries a relative correction of size
    # (x/2)^{2 nu} Gamma(1-nu)/Gamma(1+nu); with it the value agrees
    nu = 0.25
    two = specfun.gamma(nu) / 2 * (2 / x) ** nu * (1 - (x / 2) ** (2 * nu) * specfun.gamma(1 - nu) / specfun.gamma(1 + nu))
    r2 = specfun.kv(nu, x) / two
    chk(abs(r2 - 1) < 1e-3, f"K nu = 1/4 against the two-term expansion: {r2:.7f}")


@_timed(7, "domain membership threshold x^(3/2)", 5.0)
def criterion_7(chk):
    a = numverify.domain_membership_probe("x^2")
    chk(a["member"], "u = x^2 is a member")
    b = numverify.domain_membership_probe("x^(3/2)")
    ex = b["excluded"] or {}
    chk(not b["member"] and ex.get("integral") == "|u x^-3/2|^2",
        f"u = x^(3/2) excluded by {ex.get('integral')} at x = {ex.get('endpoint')}")
    sums = ex.get("shell_sums", [])
    chk(len(sums) >= 8 and max(sums) / min(sums) < 1.001, "shell sums constant (log divergence)")


def _certified_ops():
    out = []
    chart = chart_1d("x*(1-x)")
    op1 = freeze(weighted_operator(chart), chart, (0,))
    for a in ("1", "0.5", "-3"):
        out.append((f"alpha = {a}", op1.subs({"alpha": parse(a)})))
    c2 = chart_2d("x", h="h0")
    g = freeze(weighted_operator(c2), c2, (0, 0))
    for h in ("3", "-0.5"):
        T0, Tinf = reduced_boundary_ops(affine_reduce(g.subs({"h0": parse(h)})))
        out.append((f"Grushin h0 = {h}: T0", T0))
        out.append((f"Grushin h0 = {h}: Tinf", Tinf))
    c3 = chart_2d("y - x^2", h="1")
    out.append(("tangency h0 = 1", freeze(weighted_operator(c3), c3, (0, 0))))
    return out


@_timed(8, "semiboundedness consistency", None)
def criterion_8(chk):
    for name, op in _certified_ops():
        v = decide_abelian(fourier_symbol(op))
        if not v.left_invertible:
            chk(False, f"{name}: expected a left invertible operator")
            continue
        c = math.sqrt(float(Fraction(v.evidence["infimum"])))
        est = numverify.semibound_estimate(op, lengths=(10.0, 100.0, 1000.0))
        chk(est["c_est"] >= c - 1e-4, f"{name}: c_est {est['c_est']:.6f} >= certified {c:.6f}")
    op0 = parse_abelian("D2 + 2*D")
    ratios = [numverify.semibound_estimate(op0, xi0=[0.0], lengths=[L])["c_est"] for L in (1e2, 1e3, 1e4)]
    chk(ratios[0] > ratios[1] > ratios[2], "alpha = 0: ratios " + ", ".join(f"{r:.2e}" for r in ratios))


def _rand_poly(rng: random.Random, names=("x", "y"), deg=2, terms=3) -> Expr:
    out = Expr(0)
    for _ in range(terms):
        m = Expr(Fraction(rng.randint(-3, 3), rng.randint(1, 3)))
        for v in names:
            m = m * parse(v) ** rng.randint(0, deg)
        out = out + m
    return out


def _rand_op(rng, frame) -> DiffOp:
    words = [(), (0,), (1,), (0, 0), (0, 1)]
    return DiffOp(frame, {w: _rand_poly(rng, terms=2, deg=1) for w in rng.sample(words, 3)})


@_timed(9, "property suites", 120.0)
def criterion_9(chk):
    rng = random.Random(20240611)
    # derivative against central differences
    bad = 0
    for _ in range(20):
        e = _rand_poly(rng) * parse("exp(x*y/4)") + _rand_poly(rng, terms=2)
        pt = {"x": rng.uniform(-1, 1), "y": rng.uniform(-1, 1)}
        h = 1e-5
        fd = (e.evaluate({**pt, "x": pt["x"] + h}) - e.evaluate({**pt, "x": pt["x"] - h})) / (2 * h)
        ex = e.diff("x").evaluate(pt)
        bad += abs(fd - ex) > 1e-6 * max(1.0, abs(ex))
    chk(bad == 0, f"d/dx vs central difference on 20 expressions ({bad} off)")
    C = coordinate_frame(("x", "y"))
    ok = all(compose(compose(a, b), c) == compose(a, compose(b, c))
             for a, b, c in ((_rand_op(rng, C), _rand_op(rng, C), _rand_op(rng, C)) for _ in range(5)))
    chk(ok, "composition associative on 5 random triples")
    ok = True
    for _ in range(10):
        u, v, w = (VectorField([_rand_poly(rng), _rand_poly(rng)]) for _ in range(3))
        jac = commutator(u, commutator(v, w)) + commutator(v, commutator(w, u)) + commutator(w, commutator(u, v))
        ok &= jac.is_zero()
    chk(ok, "Jacobi identity on 10 random triples")
    ok = True
    for k in range(10):
        f = _rand_poly(rng, terms=2, deg=1) + parse("x") * (k + 1)
        ok &= _frame_identity(f)
    chk(ok, "frame identity for s Lap s on 10 random polynomial f")
    chart = chart_2d("y - x^2", h="h0")
    P = weighted_operator(chart)
    Q = DiffOp(P.frame, {(0,): parse("x + y"), (): parse("y^2 + 1")})
    for q in ((0, 0), (1, 1), (Fraction(1, 2), Fraction(1, 4))):
        lhs = freeze(P + Q, chart, q)
        rhs = freeze(P, chart, q) + freeze(Q, chart, q, group=freeze(P, chart, q).group)
        ok &= lhs == rhs
    chk(ok, "freeze is linear at three singular points")


def _frame_identity(f: Expr) -> bool:
    chart = chart_2d(f)
    s = chart.s
    frame = chart.lie_frame()
    lhs = to_frame(conjugate_by_weight(laplace_beltrami(chart), s, 1, 1, frame=frame), frame)
    X = chart.frame().fields
    div = [divergence(chart, "X1"), divergence(chart, "X2")]
    terms = {(0, 0): Expr(1), (1, 1): Expr(1)}
    const = Expr(0)
    for i in range(2):
        Xs = X[i].apply(s)
        terms[(i,)] = Xs + s * div[i]
        const = const + s * X[i].apply(Xs) + s * Xs * div[i]
    terms[()] = const
    return _same_op(lhs, DiffOp(frame, terms))


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


def run_all(verbose: bool = False, out=print) -> list[CriterionResult]:
    results = []
    for fn in CRITERIA:
        r = fn()
        results.append(r)
        out(r.line())
        if verbose or not r.passed:
            for d in r.details:
                out("    " + d)
    return results
