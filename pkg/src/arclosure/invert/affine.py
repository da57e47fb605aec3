"""Affine-group limit operators: reduction to a half-line ODE and its decision.

Chain, all symbolic:

1. normalize ``a Z1^2 + b Z2^2 + c0`` with ``[Z1, Z2] = k Z2`` to
   ``W1^2 + W2^2 + c`` with ``[W1, W2] = 2 W2``;
2. realize the group on ``{(a, b): a > 0}`` with ``W1 = a d_a``, ``W2 = a^2 d_b``;
3. Fourier transform in ``b`` (``d_b -> i xi``) and write ``xi^2 = lam^-4``;
4. substitute ``a = lam x``: the result is ``T = (x d_x)^2 - x^4 + c`` and no
   ``lam`` survives (checked).

``T`` acts on ``L^2(dx/x^3)``. Its boundary operators come from conjugating
by ``r rt^2`` (``r = x`` near 0, ``rt = 1/x`` near infinity) and freezing in
the local frames ``x d_x`` and ``y^3 d_y`` (``y = 1/x``). Injectivity follows
from the endpoint behaviour of ``I_nu(x^2/2)`` and ``K_nu(x^2/2)``,
``nu = sqrt(-c)/2``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from fractions import Fraction

from ..limits import GroupTag, LimitOperator, UnsupportedShape, normalize_affine
from ..opalgebra import (
    DiffOp,
    Frame,
    VectorField,
    change_variable,
    conjugate_by_weight,
    coordinate_frame,
    to_coordinates,
    to_frame,
)
from ..symexpr import Expr, parse, symbol
from .symbol import decide_abelian, fourier_symbol
from .verdict import Status, Verdict

__all__ = [
    "ImaginaryOrder",
    "ReducedOp",
    "affine_reduce",
    "reduced_boundary_ops",
    "bessel_injectivity",
    "decide_affine",
]


class ImaginaryOrder(ValueError):
    """``1 + h0 <= 0``: the Bessel order is not a positive real number."""


@dataclass(frozen=True)
class ReducedOp:
    operator: DiffOp        # in the frame {x d_x}
    c: Expr                 # zero-order constant, T = (x d_x)^2 - x^4 + c
    h0: Expr                # -1 - c
    nu: Expr | None         # sqrt(1 + h0)/2 when 1 + h0 > 0 is known
    base_measure: str = "dx/x^3"
    weights: str = "r rt^2 with r(x) = x near 0, rt(x) = r(1/x)"
    derivation: tuple = field(default_factory=tuple)

    def __str__(self):
        return str(self.operator)

    def nu_float(self) -> float | None:
        return None if self.nu is None else float(self.nu.evaluate({}))


_XFRAME = Frame([VectorField(["x"], ("x",))], ["Z"])
_YFRAME = Frame([VectorField(["y^3"], ("y",))], ["Z"])


def _fourier_in_b(p: DiffOp) -> DiffOp:
    """``d_b -> i xi`` on a coordinate operator in (a, b); ``xi^2 = lam^-4``."""
    coord_a = coordinate_frame(("a",))
    out = DiffOp(coord_a)
    for w, c in p.terms.items():
        kb = w.count(1)
        if kb % 2:
            raise UnsupportedShape("odd power of d_b: the reduced operator would not be real")
        factor = (-1) ** (kb // 2) * parse("lam") ** (-2 * kb)
        out = out + DiffOp(coord_a, {tuple(0 for _ in range(w.count(0))): c * factor})
    return out


_C = "_c"  # placeholder for the zero-order constant in the cached derivation


@lru_cache(maxsize=1)
def _generic_reduction():
    """Run the reduction once with a symbolic zero-order constant."""
    c = Expr(symbol(_C))
    steps = []
    group_frame = Frame([VectorField(["a", 0], ("a", "b")), VectorField([0, "a^2"], ("a", "b"))], ["W1", "W2"])
    P = DiffOp(group_frame, {(0, 0): 1, (1, 1): 1, (): c})
    Pc = to_coordinates(P)
    steps.append(("left-invariant form in (a, b)", Pc))
    Pf = _fourier_in_b(Pc)
    steps.append(("Fourier in b with xi^2 = lam^-4", Pf))
    Px = change_variable(Pf, "a", "x", parse("lam*x"))
    T = to_frame(Px, _XFRAME, s=parse("x"))
    for coeff in T.terms.values():
        if "lam" in coeff.free_names:
            raise UnsupportedShape(f"scaling parameter survived the substitution: {coeff}")
    steps.append(("a = lam x", T))
    return T, tuple(steps)


def affine_reduce(op: LimitOperator) -> ReducedOp:
    if op.group.kind != "Affine":
        raise UnsupportedShape("affine_reduce needs an operator on the affine group")
    norm, info = normalize_affine(op)
    c = norm.coefficient(())
    T_generic, generic_steps = _generic_reduction()
    bind = {_C: c}
    steps = [f"normalized: {norm} with [W1, W2] = 2 W2 (raw factor {info['raw_bracket_factor']})"]
    steps += [f"{label}: {stage.subs(bind)}" for label, stage in generic_steps]
    T = T_generic.subs(bind)
    h0 = -1 - c
    nu = None
    one_plus = 1 + h0
    if one_plus.is_constant() and one_plus.as_fraction() > 0:
        nu = one_plus ** Fraction(1, 2) / 2
    return ReducedOp(T, c, h0, nu, derivation=tuple(steps))


def _freeze_1d(p: DiffOp, var: str, provenance: str) -> LimitOperator:
    terms = {}
    for w, coeff in p.terms.items():
        v = coeff.subs({var: 0})
        if not v.is_zero():
            terms[w] = v
    return LimitOperator(GroupTag("Abelian", 1), terms, (0,), provenance, ("Z",))


def _boundary_ops_of(T: DiffOp) -> tuple[DiffOp, DiffOp]:
    T = to_coordinates(T)
    x = parse("x")
    # near 0: r = x, rt = 1
    near0 = conjugate_by_weight(T, x, -1, 1, frame=_XFRAME)
    near0 = to_frame(near0, _XFRAME, s=x)
    # near infinity: y = 1/x, r = 1, rt = y
    y = parse("y")
    Ty = change_variable(T, "x", "y", parse("1/y"))
    nearinf = conjugate_by_weight(Ty, y, 2, 2, frame=_YFRAME)
    nearinf = to_frame(nearinf, _YFRAME, s=y)
    return near0, nearinf


@lru_cache(maxsize=1)
def _generic_boundary():
    return _boundary_ops_of(_generic_reduction()[0])


def reduced_boundary_ops(rop: ReducedOp) -> tuple[LimitOperator, LimitOperator]:
    """``(T0, Tinf)``: limit operators of ``r^-1 rt^2 T r rt^2`` at 0 and infinity."""
    bind = {_C: rop.c}
    if rop.operator == _generic_reduction()[0].subs(bind):
        near0, nearinf = (p.subs(bind) for p in _generic_boundary())
    else:
        near0, nearinf = _boundary_ops_of(rop.operator)
    T0 = _freeze_1d(near0, "x", "x^-1 T x at x = 0, frame x d_x")
    Tinf = _freeze_1d(nearinf, "y", "y^2 T y^2 at y = 1/x = 0, frame y^3 d_y")
    return T0, Tinf


def _exact_cmp_nu_half(h0: Expr) -> int:
    """Sign of ``nu - 1/2``, i.e. of ``h0`` (``nu = sqrt(1+h0)/2``)."""
    v = h0.as_fraction()
    return (v > 0) - (v < 0)


def bessel_injectivity(rop: ReducedOp, probes: bool = False) -> dict:
    """Endpoint table for ``u- = K_nu(x^2/2)`` and ``u+ = I_nu(x^2/2)``.

    Near 0: ``|I_nu|^2/x^3 ~ x^(4 nu - 3)``, ``|K_nu|^2/x^3 ~ x^(-4 nu - 3)``;
    near infinity ``I`` grows like ``e^(x^2)/x`` and ``K`` decays. A combination
    ``a I + b K`` with ``a != 0`` fails at infinity, and ``b K`` fails at 0, so
    ``T`` is injective whenever both of those failures hold.
    """
    if not rop.h0.is_constant():
        raise ValueError(f"bessel_injectivity needs a numeric h0, got {rop.h0}")
    if (1 + rop.h0).as_fraction() <= 0:
        raise ImaginaryOrder(f"1 + h0 = {1 + rop.h0} <= 0")
    nu = rop.nu_float()
    sign = _exact_cmp_nu_half(rop.h0)
    i_zero_ok = sign > 0  # 4 nu - 3 > -1
    rows = [
        {"solution": "I", "endpoint": "zero", "exponent": 4 * nu - 3,
         "exponent_text": f"4*nu - 3 = {4 * nu - 3:.12g}", "integrable": i_zero_ok},
        {"solution": "I", "endpoint": "infinity", "growth": "e^(x^2)/x", "rate_in_x2_over_2": 2,
         "integrable": False},
        {"solution": "K", "endpoint": "zero", "exponent": -4 * nu - 3,
         "exponent_text": f"-4*nu - 3 = {-4 * nu - 3:.12g}", "integrable": False},
        {"solution": "K", "endpoint": "infinity", "growth": "e^(-x^2)/x", "rate_in_x2_over_2": -2,
         "integrable": True},
    ]
    i_fails = not all(r["integrable"] for r in rows if r["solution"] == "I")
    k_fails = not all(r["integrable"] for r in rows if r["solution"] == "K")
    i_fails_at_inf = not rows[1]["integrable"]
    k_fails_at_zero = not rows[2]["integrable"]
    injective = i_fails_at_inf and k_fails_at_zero
    table = {
        "nu": nu,
        "nu_exact": str(rop.nu),
        "h0": str(rop.h0),
        "rows": rows,
        "I_fails_somewhere": i_fails,
        "K_fails_somewhere": k_fails,
        "combination_rule": "a I + b K with a != 0 fails at infinity; b K (b != 0) fails at zero",
        "injective": injective,
    }
    if probes:
        from .. import numverify, specfun

        if nu > specfun.NU_MAX:
            table["probes"] = {"skipped": f"nu = {nu} above the supported order range"}
        else:
            out = {}
            for kind in ("I", "K"):
                for endpoint in ("zero", "infinity"):
                    p = numverify.integrability_probe(kind, nu, endpoint)
                    p.pop("windows", None)
                    out[f"{kind}@{endpoint}"] = p
            table["probes"] = out
    return table


def _injectivity_verdict(rop: ReducedOp, probes: bool) -> Verdict:
    try:
        table = bessel_injectivity(rop, probes=probes)
    except ImaginaryOrder as exc:
        return Verdict(Status.INCONCLUSIVE, {"kind": "reason", "reason": f"imaginary Bessel order: {exc}"})
    table["kind"] = "bessel-table"
    status = Status.LEFT_INVERTIBLE if table["injective"] else Status.NOT_LEFT_INVERTIBLE
    return Verdict(status, table)


def decide_affine(rop: ReducedOp, probes: bool = False, parallel: bool = False) -> Verdict:
    if not rop.c.is_constant():
        return Verdict(Status.INCONCLUSIVE, {
            "kind": "reason", "reason": f"symbolic zero-order term {rop.c}; substitute a value first"})
    T0, Tinf = reduced_boundary_ops(rop)
    jobs = {
        "injectivity": lambda: _injectivity_verdict(rop, probes),
        "T0": lambda: decide_abelian(fourier_symbol(T0)),
        "Tinf": lambda: decide_abelian(fourier_symbol(Tinf)),
    }
    if parallel:
        with ThreadPoolExecutor(max_workers=3) as pool:
            futures = {k: pool.submit(fn) for k, fn in jobs.items()}
            subs = {k: f.result() for k, f in futures.items()}
    else:
        subs = {k: fn() for k, fn in jobs.items()}
    evidence = {
        "kind": "combined",
        "reduced_operator": str(rop.operator),
        "T0": str(T0),
        "Tinf": str(Tinf),
        "derivation": list(rop.derivation),
    }
    failing = [k for k in ("T0", "Tinf", "injectivity") if subs[k].status is Status.NOT_LEFT_INVERTIBLE]
    if failing:
        k = failing[0]
        evidence["failed"] = k
        if "witness" in subs[k].evidence:
            evidence["witness"] = subs[k].evidence["witness"]
        return Verdict(Status.NOT_LEFT_INVERTIBLE, evidence, subs)
    if any(v.status is Status.INCONCLUSIVE for v in subs.values()):
        evidence["reason"] = "; ".join(
            f"{k}: {v.evidence.get('reason', 'inconclusive')}" for k, v in sorted(subs.items())
            if v.status is Status.INCONCLUSIVE)
        return Verdict(Status.INCONCLUSIVE, evidence, subs)
    return Verdict(Status.LEFT_INVERTIBLE, evidence, subs)
