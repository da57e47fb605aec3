"""Local almost-Riemannian charts.

A two-dimensional chart carries the orthonormal frame ``X1 = d/dx`` and
``X2 = f(x, y) d/dy``; the structure is Riemannian where ``f != 0`` and the
singular set is ``{f = 0}``. A one-dimensional chart carries a defining
function ``s`` and the single field ``X = s d/dx``.
"""

from __future__ import annotations

import enum
from functools import lru_cache
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .opalgebra import DiffOp, Frame, VectorField, commutator, coordinate_frame
from .symexpr import Expr, PoleError, parse

__all__ = [
    "ARChart",
    "PointKind",
    "PointClass",
    "ScanReport",
    "NormalFormError",
    "chart_2d",
    "chart_1d",
    "classify_point",
    "genericity_scan",
    "laplace_beltrami",
    "divergence",
    "first_order_coefficient",
    "metric_and_volume",
    "normal_form",
    "bracket_classification",
]


def _expr(v) -> Expr:
    return v if isinstance(v, Expr) else parse(str(v)) if isinstance(v, str) else Expr(v)


def _frac(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, float):
        return Fraction(v).limit_denominator(10**9)
    return Fraction(v)


@dataclass(frozen=True)
class ARChart:
    """Chart data.

    ``window`` is ``((x0, x1), (y0, y1))`` in 2D and ``((x0, x1),)`` in 1D.
    ``s`` defaults to ``f`` in 2D. In 1D ``f`` is ``None``.
    """

    f: Expr | None
    window: tuple
    h: Expr = field(default_factory=lambda: Expr(0))
    s: Expr | None = None
    dim: int = 2

    def __post_init__(self):
        win = tuple(tuple(_frac(b) for b in iv) for iv in self.window)
        object.__setattr__(self, "window", win)
        if len(win) != self.dim:
            raise ValueError(f"window must have {self.dim} intervals")
        if any(lo >= hi for lo, hi in win):
            raise ValueError("empty chart window")
        object.__setattr__(self, "h", _expr(self.h))
        if self.dim == 2:
            if self.f is None:
                raise ValueError("2D chart needs f")
            object.__setattr__(self, "f", _expr(self.f))
            if self.f.is_zero():
                raise ValueError("f vanishes identically")
            object.__setattr__(self, "s", _expr(self.s) if self.s is not None else self.f)
        elif self.dim == 1:
            if self.s is None:
                raise ValueError("1D chart needs s")
            if self.f is not None:
                raise ValueError("1D chart has no f")
            object.__setattr__(self, "s", _expr(self.s))
        else:
            raise ValueError("dim must be 1 or 2")

    @property
    def coords(self) -> tuple[str, ...]:
        return ("x", "y") if self.dim == 2 else ("x",)

    def contains(self, q: Sequence) -> bool:
        return all(lo <= float(v) <= hi for v, (lo, hi) in zip(q, self.window))

    def point(self, q: Sequence) -> dict:
        return dict(zip(self.coords, q))

    def frame(self) -> Frame:
        """The orthonormal frame ``X1, X2`` (``X`` in 1D)."""
        if self.dim == 1:
            return Frame([VectorField([self.s], ("x",))], ["X"])
        return Frame([VectorField([1, 0]), VectorField([0, self.f])], ["X1", "X2"])

    def lie_frame(self, names: Sequence[str] = ("Y1", "Y2")) -> Frame:
        """``Y_i = s X_i`` (``X = s d/dx`` itself in 1D)."""
        return _lie_frame(self, tuple(names))


@lru_cache(maxsize=64)
def _lie_frame(chart: "ARChart", names: tuple) -> Frame:
    # cached so that structure constants are computed once per chart
    if chart.dim == 1:
        return Frame([VectorField([chart.s], ("x",))], [names[0] if names[0] != "Y1" else "X"])
    return Frame([VectorField([chart.s, 0]), VectorField([0, chart.s * chart.f])], list(names))


def chart_2d(f, window=((-1, 1), (-1, 1)), h=0, s=None) -> ARChart:
    return ARChart(f=_expr(f), window=window, h=h, s=s, dim=2)


def chart_1d(s, window=((0, 1),), h=0) -> ARChart:
    return ARChart(f=None, window=window, h=h, s=_expr(s), dim=1)


class PointKind(enum.Enum):
    RIEMANNIAN = "Riemannian"
    GRUSHIN = "Grushin"
    TANGENCY = "Tangency"
    NONGENERIC = "NonGeneric"
    # simple zero of s in a 1D chart
    ENDPOINT = "Endpoint"


@dataclass(frozen=True)
class PointClass:
    kind: PointKind
    reason: str = ""

    @property
    def singular(self) -> bool:
        return self.kind is not PointKind.RIEMANNIAN

    def __str__(self):
        return f"{self.kind.value}({self.reason})" if self.reason else self.kind.value


def _is_exact(q) -> bool:
    return all(isinstance(v, (int, Fraction, str)) for v in q)


def _zero_test(e: Expr, pt: dict, exact: bool, tol: float) -> bool:
    if exact:
        return e.subs(pt).is_zero()
    return abs(e.evaluate(pt)) <= tol


def classify_point(chart: ARChart, q: Sequence, tol: float = 1e-9) -> PointClass:
    """Classify ``q``.

    Rational coordinates are decided exactly; float coordinates use ``tol`` on
    the jet values.
    """
    exact = _is_exact(q)
    pt = {c: (_frac(v) if exact else float(v)) for c, v in zip(chart.coords, q)}
    if chart.dim == 1:
        s = chart.s
        if not _zero_test(s, pt, exact, tol):
            return PointClass(PointKind.RIEMANNIAN)
        if _zero_test(s.diff("x"), pt, exact, tol):
            return PointClass(PointKind.NONGENERIC, "s'(q) = 0: zero of s is not simple")
        return PointClass(PointKind.ENDPOINT)
    f = chart.f
    if not _zero_test(f, pt, exact, tol):
        return PointClass(PointKind.RIEMANNIAN)
    fx = f.diff("x")
    if not _zero_test(fx, pt, exact, tol):
        return PointClass(PointKind.GRUSHIN)
    if _zero_test(f.diff("y"), pt, exact, tol):
        return PointClass(PointKind.NONGENERIC, "d_y f(q) = 0: singular set not a smooth curve at q")
    if _zero_test(fx.diff("x"), pt, exact, tol):
        return PointClass(PointKind.NONGENERIC, "d_x^2 f(q) = 0: degenerate tangency")
    return PointClass(PointKind.TANGENCY)


def bracket_classification(chart: ARChart, q: Sequence) -> PointClass:
    """Classification recomputed from Lie brackets of the frame (independent
    of the jet rule in :func:`classify_point`)."""
    pt = chart.point([_frac(v) for v in q])
    X1, X2 = chart.frame().fields
    if any(not c.subs(pt).is_zero() for c in X2.coeffs):
        return PointClass(PointKind.RIEMANNIAN)
    b1 = commutator(X1, X2)
    if any(not c.subs(pt).is_zero() for c in b1.coeffs):
        return PointClass(PointKind.GRUSHIN)
    b2 = commutator(X1, b1)
    # smooth singular curve: grad f != 0; checked through [X2-direction] d_y f
    fy = chart.f.diff("y").subs(pt)
    if fy.is_zero():
        return PointClass(PointKind.NONGENERIC, "d_y f(q) = 0: singular set not a smooth curve at q")
    if all(c.subs(pt).is_zero() for c in b2.coeffs):
        return PointClass(PointKind.NONGENERIC, "d_x^2 f(q) = 0: degenerate tangency")
    return PointClass(PointKind.TANGENCY)


# ---------------------------------------------------------------------------
# geometry


def laplace_beltrami(chart: ARChart) -> DiffOp:
    """``d_x^2 + f^2 d_y^2 - (f_x/f) d_x + f f_y d_y`` in coordinate partials."""
    if chart.dim != 2:
        raise ValueError("laplace_beltrami needs a 2D chart")
    f = chart.f
    C = coordinate_frame(("x", "y"))
    return DiffOp(C, {(0, 0): 1, (1, 1): f * f, (0,): -f.diff("x") / f, (1,): f * f.diff("y")})


def divergence(chart: ARChart, which: str) -> Expr:
    """Divergence of ``X1`` or ``X2`` for the volume ``dx dy / |f|``.

    ``div X = (1/rho) sum_i d_i(rho a_i)`` with ``rho = 1/f`` (the sign of
    ``f`` drops out of ``d rho / rho``).
    """
    if chart.dim != 2:
        raise ValueError("divergence needs a 2D chart")
    fields = dict(zip(("X1", "X2"), chart.frame().fields))
    if which not in fields:
        raise ValueError("which must be 'X1' or 'X2'")
    v = fields[which]
    rho = 1 / chart.f
    total = Expr(0)
    for a, c in zip(v.coeffs, ("x", "y")):
        total = total + (rho * a).diff(c)
    return total / rho


def first_order_coefficient(chart: ARChart, which: str) -> Expr:
    """Coefficient of ``d_x`` or ``d_y`` in the Laplacian."""
    idx = {"x": 0, "y": 1}[which]
    return laplace_beltrami(chart).coefficient((idx,))


def metric_and_volume(chart: ARChart) -> tuple[list[list[Expr]], Expr]:
    f = chart.f
    g = [[Expr(1), Expr(0)], [Expr(0), 1 / (f * f)]]
    return g, 1 / parse("abs(x)").subs({"x": f})


class NormalFormError(ValueError):
    pass


def normal_form(kind: PointKind | str, data: Mapping[str, object] | None = None,
                window=((-1, 1), (-1, 1)), h=0) -> ARChart:
    """Assemble ``f`` from a local normal form.

    Riemannian: ``exp(phi)``; Grushin: ``x exp(phi)``; Tangency:
    ``(y - x^2 psi(x)) exp(Psi)`` with ``psi(0) != 0`` and ``Psi(0, y) = 0``.
    """
    if isinstance(kind, str):
        kind = PointKind(kind)
    data = {k: _expr(v) for k, v in (data or {}).items()}
    if kind is PointKind.RIEMANNIAN:
        f = parse("exp(x)").subs({"x": data.get("phi", Expr(0))})
    elif kind is PointKind.GRUSHIN:
        f = parse("x") * parse("exp(x)").subs({"x": data.get("phi", Expr(0))})
    elif kind is PointKind.TANGENCY:
        psi = data.get("psi", Expr(1))
        Psi = data.get("Psi", Expr(0))
        if "y" in psi.free_names:
            raise NormalFormError("psi must depend on x only")
        if psi.subs({"x": 0}).is_zero():
            raise NormalFormError("psi(0) must be nonzero")
        on_axis = Psi.subs({"x": 0})
        if not on_axis.is_zero():
            for yv in (Fraction(-1, 2), Fraction(1, 3), Fraction(3, 4)):
                if not on_axis.subs({"y": yv}).is_zero():
                    raise NormalFormError("Psi(0, y) must vanish identically")
            raise NormalFormError("Psi(0, y) must vanish identically")
        f = (parse("y") - parse("x^2") * psi) * parse("exp(x)").subs({"x": Psi})
    else:
        raise NormalFormError(f"no normal form for {kind.value}")
    return chart_2d(f, window=window, h=h)


# ---------------------------------------------------------------------------
# genericity scan


@dataclass
class ScanReport:
    singular_points: list[tuple[float, float]]
    classes: list[PointClass]
    tangency_points: list[tuple]
    nongeneric: list[tuple[tuple, str]]
    resolution: tuple[int, int]

    @property
    def empty(self) -> bool:
        return not self.singular_points and not self.tangency_points

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.classes:
            out[c.kind.value] = out.get(c.kind.value, 0) + 1
        return out


def _bisect(fn, a: np.ndarray, b: np.ndarray, fa: float, ftol=1e-12, wtol=1e-10, maxit=200):
    for _ in range(maxit):
        m = 0.5 * (a + b)
        fm = fn(*m)
        if abs(fm) < ftol and np.linalg.norm(b - a) < wtol:
            return m
        if fm == 0.0:
            return m
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def _snap_point(chart: ARChart, p, conds) -> tuple:
    cand = tuple(Fraction(float(v)).limit_denominator(10**4) for v in p)
    # Newton converges only linearly at degenerate roots, hence the loose
    # acceptance; the exact test below is what certifies the snap
    if all(abs(float(c) - float(v)) <= 1e-6 for c, v in zip(cand, p)):
        pt = chart.point(cand)
        try:
            if all(e.subs(pt).is_zero() for e in conds):
                return cand
        except PoleError:
            pass
    return tuple(float(v) for v in p)


def genericity_scan(chart: ARChart, resolution: int | tuple[int, int] = 64) -> ScanReport:
    """Locate and classify the singular set of a 2D chart on a grid."""
    if chart.dim != 2:
        raise ValueError("genericity_scan handles 2D charts")
    nx, ny = (resolution, resolution) if isinstance(resolution, int) else resolution
    if nx < 1 or ny < 1:
        raise ValueError("resolution must be positive")
    (x0, x1), (y0, y1) = [(float(a), float(b)) for a, b in chart.window]
    f, fx = chart.f, chart.f.diff("x")
    F = f.numpy_function(("x", "y"))
    FX = fx.numpy_function(("x", "y"))
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    V = np.broadcast_to(np.asarray(F(X, Y), dtype=float), X.shape)

    def fs(x, y):
        return float(F(x, y))

    roots: list[np.ndarray] = []
    # grid nodes that are exact zeros
    for i, j in zip(*np.nonzero(V == 0.0)):
        roots.append(np.array([xs[i], ys[j]]))
    # horizontal then vertical edges with a strict sign change
    for axis in (0, 1):
        A = V[:-1, :] if axis == 0 else V[:, :-1]
        B = V[1:, :] if axis == 0 else V[:, 1:]
        for i, j in zip(*np.nonzero(A * B < 0)):
            a = np.array([X[i, j], Y[i, j]])
            b = np.array([X[i + 1, j], Y[i + 1, j]]) if axis == 0 else np.array([X[i, j + 1], Y[i, j + 1]])
            roots.append(_bisect(fs, a, b, A[i, j]))
    pts = _dedup(roots, 1e-9)

    # tangency candidates: cells where both f and f_x change sign
    VX = np.broadcast_to(np.asarray(FX(X, Y), dtype=float), X.shape)
    fy, fxx, fxy = chart.f.diff("y"), fx.diff("x"), fx.diff("y")
    J = [e.numpy_function(("x", "y")) for e in (fx, fy, fxx, fxy)]
    cands = []
    for i in range(nx):
        for j in range(ny):
            c1 = V[i:i + 2, j:j + 2]
            c2 = VX[i:i + 2, j:j + 2]
            if c1.min() <= 0 <= c1.max() and c2.min() <= 0 <= c2.max():
                p = _newton2(F, J, np.array([0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])]))
                if p is not None and x0 - 1e-12 <= p[0] <= x1 + 1e-12 and y0 - 1e-12 <= p[1] <= y1 + 1e-12:
                    cands.append(p)
    cands = _dedup(cands, 1e-5)

    classes = []
    singular = []
    nongeneric = []
    for p in pts:
        q = _snap_point(chart, p, [f])
        c = classify_point(chart, q, tol=1e-7)
        if c.kind is PointKind.RIEMANNIAN:
            continue
        singular.append(q)
        classes.append(c)
        if c.kind is PointKind.NONGENERIC:
            nongeneric.append((q, c.reason))
    tangency = []
    for p in cands:
        q = _snap_point(chart, p, [f, fx])
        c = classify_point(chart, q, tol=1e-7)
        if c.kind is PointKind.TANGENCY:
            tangency.append(q)
        elif c.kind is PointKind.NONGENERIC:
            nongeneric.append((q, c.reason))
    # a run of adjacent tangency candidates means they are not isolated
    if len(tangency) > 1:
        arr = np.array([[float(v) for v in q] for q in tangency])
        h = max((x1 - x0) / nx, (y1 - y0) / ny)
        d = np.sqrt(((arr[:, None, :] - arr[None, :, :]) ** 2).sum(-1))
        np.fill_diagonal(d, np.inf)
        if (d.min(axis=1) <= 1.5 * h).sum() >= 3:
            nongeneric.append((tangency[0], "tangency points are not isolated"))
    nongeneric = _dedup_pairs(nongeneric)
    return ScanReport(singular, classes, tangency, nongeneric, (nx, ny))


def _newton2(F, J, p, maxit=60):
    fx_f, fy_f, fxx_f, fxy_f = J
    for _ in range(maxit):
        x, y = p
        r = np.array([float(F(x, y)), float(fx_f(x, y))])
        if np.abs(r).max() < 1e-14:
            return p
        M = np.array([[float(fx_f(x, y)), float(fy_f(x, y))],
                      [float(fxx_f(x, y)), float(fxy_f(x, y))]])
        try:
            step = np.linalg.solve(M, r)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(M, r, rcond=None)[0]
        t = 1.0
        base = np.abs(r).sum()
        while t > 1e-4:
            q = p - t * step
            rq = abs(float(F(*q))) + abs(float(fx_f(*q)))
            if rq < base or not math.isfinite(base):
                break
            t *= 0.5
        p = p - t * step
        if not np.all(np.isfinite(p)):
            return None
    x, y = p
    if abs(float(F(x, y))) < 1e-10 and abs(float(fx_f(x, y))) < 1e-8:
        return p
    return None


def _dedup(points, tol):
    out = []
    for p in points:
        if all(np.linalg.norm(np.asarray(p, dtype=float) - q) > tol for q in out):
            out.append(np.asarray(p, dtype=float))
    out.sort(key=lambda p: (p[0], p[1]))
    return out


def _dedup_pairs(items):
    seen = []
    out = []
    for q, why in items:
        key = (tuple(round(float(v), 7) for v in q), why)
        if key not in seen:
            seen.append(key)
            out.append((q, why))
    return out
