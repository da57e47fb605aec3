"""Limit operators: freezing frame operators at singular points.

At a singular point ``q`` the coefficients of an operator written in the
Lie frame ``Y_i = s X_i`` are evaluated at ``q`` and the fields are replaced
by generators ``Z_i`` of the isotropy Lie algebra, whose bracket is the
frame's structure functions evaluated at ``q``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .frames import ARChart, PointKind, classify_point, laplace_beltrami
from .opalgebra import (
    DiffOp,
    Frame,
    VectorField,
    conjugate_by_weight,
    coordinate_frame,
    render_terms,
    to_frame,
)
from .symexpr import Expr, parse

__all__ = [
    "GroupTag",
    "LimitOperator",
    "NonGenericPoint",
    "UnsupportedShape",
    "isotropy_type",
    "freeze",
    "general_freeze_constant",
    "normalize_affine",
    "weighted_operator",
    "model_1d_laplacian",
]


class NonGenericPoint(ValueError):
    pass


class UnsupportedShape(ValueError):
    pass


@dataclass(frozen=True)
class GroupTag:
    """``Abelian(n)`` or ``Affine`` with the bracket ``[Z1, Z2] = c1 Z1 + c2 Z2``
    evaluated at the point (``bracket``)."""

    kind: str
    n: int
    bracket: tuple = ()

    @property
    def is_abelian(self) -> bool:
        return self.kind == "Abelian"

    @property
    def raw_factor(self) -> Expr | None:
        if self.kind != "Affine":
            return None
        return self.bracket[1]

    def __str__(self):
        return f"Abelian({self.n})" if self.is_abelian else "Affine"


def _pt(chart: ARChart, q: Sequence) -> dict:
    return chart.point([Fraction(v) if not isinstance(v, (Fraction, int)) else v for v in q])


def isotropy_type(chart: ARChart, q: Sequence, s: Expr | None = None) -> GroupTag:
    """Group attached to the singular point ``q`` from ``[Y1, Y2](q)``."""
    if chart.dim == 1:
        return GroupTag("Abelian", 1)
    c = classify_point(chart, q)
    if c.kind is PointKind.NONGENERIC:
        raise NonGenericPoint(f"{tuple(q)}: {c.reason}")
    if c.kind is PointKind.RIEMANNIAN:
        raise ValueError(f"{tuple(q)} is not a singular point")
    frame = chart.lie_frame() if s is None else _lie_frame(chart, s)
    c1, c2 = frame.structure[(0, 1)]
    pt = _pt(chart, q)
    v1, v2 = c1.subs(pt), c2.subs(pt)
    if v1.is_zero() and v2.is_zero():
        return GroupTag("Abelian", 2)
    return GroupTag("Affine", 2, (v1, v2))


def _lie_frame(chart: ARChart, s) -> Frame:
    s = s if isinstance(s, Expr) else parse(str(s))
    return Frame([VectorField([s, 0]), VectorField([0, s * chart.f])], ["Y1", "Y2"])


@dataclass(frozen=True)
class LimitOperator:
    """Constant-coefficient operator on the isotropy group.

    ``terms`` maps PBW words (tuples of generator indices) to coefficients,
    which are constants or expressions in parameters only.
    """

    group: GroupTag
    terms: Mapping[tuple, Expr]
    point: tuple = ()
    provenance: str = ""
    names: tuple = ("Z1", "Z2")
    note: str = ""

    def coefficient(self, word: Sequence[int]) -> Expr:
        return self.terms.get(tuple(word), Expr(0))

    @property
    def n(self) -> int:
        return self.group.n

    def subs(self, mapping: Mapping[str, object]) -> "LimitOperator":
        t = {w: c.subs(mapping) for w, c in self.terms.items()}
        return LimitOperator(self.group, {w: c for w, c in t.items() if not c.is_zero()},
                             self.point, self.provenance, self.names, self.note)

    def __add__(self, other: "LimitOperator") -> "LimitOperator":
        if self.group != other.group:
            raise ValueError("limit operators on different groups")
        t = dict(self.terms)
        for w, c in other.terms.items():
            t[w] = t.get(w, Expr(0)) + c
        return LimitOperator(self.group, {w: c for w, c in t.items() if not c.is_zero()},
                             self.point, self.provenance, self.names)

    def __eq__(self, other):
        return (isinstance(other, LimitOperator) and self.group == other.group
                and dict(self.terms) == dict(other.terms))

    def __hash__(self):
        return hash((self.group, tuple(sorted(self.terms.items()))))

    def word_text(self, word: tuple) -> str:
        out = []
        i = 0
        while i < len(word):
            j = i
            while j < len(word) and word[j] == word[i]:
                j += 1
            k = j - i
            name = self.names[word[i]]
            out.append(name if k == 1 else f"{name}^{k}")
            i = j
        return "*".join(out)

    def __str__(self):
        items = sorted(self.terms.items(), key=lambda kv: (-len(kv[0]), kv[0]))
        return render_terms([(self.word_text(w), str(c), c) for w, c in items])

    def table(self) -> list[dict]:
        """Structured coefficient table for reports."""
        items = sorted(self.terms.items(), key=lambda kv: (-len(kv[0]), kv[0]))
        return [{"word": self.word_text(w) or "1", "coefficient": str(c)} for w, c in items]

    def is_numeric(self) -> bool:
        return all(c.is_constant() for c in self.terms.values())


def freeze(p: DiffOp, chart: ARChart, q: Sequence, *, group: GroupTag | None = None,
           provenance: str = "") -> LimitOperator:
    """Evaluate the coefficients of a Lie-frame operator at ``q``."""
    pt = _pt(chart, q)
    terms = {}
    for w, c in p.terms.items():
        v = c.subs(pt)
        if not v.is_zero():
            terms[w] = v
    if group is None:
        group = isotropy_type(chart, q)
    names = ("Z",) if chart.dim == 1 else ("Z1", "Z2")
    return LimitOperator(group, terms, tuple(q), provenance, names)


def general_freeze_constant(chart: ARChart, q: Sequence) -> Expr:
    """``-(d_x f(q))^2 - h(q)``: the zero-order part of the frozen ``s Lap~ s``
    with ``s = f`` before any rescaling."""
    pt = _pt(chart, q)
    fx = chart.f.diff("x").subs(pt)
    return -fx * fx - chart.h.subs(pt)


def normalize_affine(op: LimitOperator) -> tuple[LimitOperator, dict]:
    """Rescale an affine limit operator ``a Z1^2 + b Z2^2 + c0`` with
    ``[Z1, Z2] = k Z2`` to ``W1^2 + W2^2 + c0'`` with ``[W1, W2] = 2 W2``.

    ``W1 = (2/k) Z1`` and ``W2 = lam Z2`` (an automorphism of the affine
    algebra); the operator equals ``(a k^2 / 4)(W1^2 + W2^2 + c0')`` with
    ``c0' = 4 c0 / (a k^2)``. Returns the normalized operator and the scaling
    data.
    """
    if op.group.kind != "Affine":
        raise UnsupportedShape("normalize_affine needs an affine limit operator")
    c1, k = op.group.bracket
    if not c1.is_zero() or k.is_zero():
        raise UnsupportedShape(f"bracket {op.group.bracket} is not of the form [Z1,Z2] = k Z2")
    allowed = {(0, 0), (1, 1), ()}
    extra = set(op.terms) - allowed
    if extra:
        raise UnsupportedShape(f"words {sorted(extra)} outside {{Z1^2, Z2^2, 1}}")
    a, b = op.coefficient((0, 0)), op.coefficient((1, 1))
    if a.is_zero() or b.is_zero():
        raise UnsupportedShape("both Z1^2 and Z2^2 terms are required")
    if not (a.is_constant() and b.is_constant()) or a.as_fraction() <= 0 or b.as_fraction() <= 0:
        raise UnsupportedShape("Z1^2 and Z2^2 coefficients must be positive numbers")
    scale = a * k * k / 4
    c0 = op.coefficient(())
    c0n = c0 / scale
    terms = {(0, 0): Expr(1), (1, 1): Expr(1)}
    if not c0n.is_zero():
        terms[()] = c0n
    group = GroupTag("Affine", 2, (Expr(0), Expr(2)))
    norm = LimitOperator(group, terms, op.point, op.provenance + " (normalized)", op.names,
                         note="W1 = (2/k) Z1, W2 = lam Z2")
    info = {
        "raw_bracket_factor": str(k),
        "overall_scale": str(scale),
        "lambda_squared": str(4 * b / (a * k * k)),
        "h0_effective": str(-1 - c0n),
    }
    return norm, info


# ---------------------------------------------------------------------------
# weighted operators fed into freeze


def model_1d_laplacian(alpha="alpha") -> DiffOp:
    """``d_x^2 - (3/4 + alpha) / (x^2 (1-x)^2)`` on ``(0, 1)``."""
    a = alpha if isinstance(alpha, Expr) else parse(str(alpha))
    C = coordinate_frame(("x",))
    return DiffOp(C, {(0, 0): 1, (): -(Expr(Fraction(3, 4)) + a) / parse("x^2*(1-x)^2")})


def weighted_operator(chart: ARChart, gamma=None, lap: DiffOp | None = None) -> DiffOp:
    """Weighted conjugate in the Lie frame, smoothness-certified.

    2D: ``s (Lap - h/s^2) s``; ``gamma`` (default 1) replaces the outer weights
    by ``s^{2-gamma} ... s^{gamma}``.
    1D: ``s^{2-gamma} lap s^{gamma}`` with ``lap`` given (default: the model
    operator with symbolic ``alpha``) and ``gamma`` default ``3/2``.
    """
    s = chart.s
    if chart.dim == 1:
        g = parse("3/2") if gamma is None else _gexpr(gamma)
        base = lap if lap is not None else model_1d_laplacian()
        frame = chart.lie_frame()
        res = conjugate_by_weight(base, s, 2 - g, g, frame=frame)
        return to_frame(res, frame, s=s)
    g = Expr(1) if gamma is None else _gexpr(gamma)
    base = lap if lap is not None else laplace_beltrami(chart)
    base = base - DiffOp.scalar(base.frame, chart.h / (s * s))
    frame = chart.lie_frame()
    res = conjugate_by_weight(base, s, 2 - g, g, frame=frame)
    return to_frame(res, frame, s=s)


def _gexpr(g) -> Expr:
    if isinstance(g, Expr):
        return g
    if isinstance(g, (int, Fraction)):
        return Expr(g)
    return parse(str(g))
