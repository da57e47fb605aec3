"""Non-commutative algebra of differential operators over a frame.

A :class:`Frame` is an ordered list of vector fields (given in coordinate
partials) that span the tangent space away from a singular set. Operators are
stored as sums ``coef(x) * Y_{i1} ... Y_{ik}`` with nondecreasing index words
(PBW order, ``Y1`` before ``Y2``). Out-of-order products are rewritten with
``Y_b Y_a = Y_a Y_b - [Y_a, Y_b]`` and the frame's structure functions.
"""

from __future__ import annotations

import itertools
from functools import cached_property
from math import comb
from typing import Mapping, Sequence

import sympy

from .symexpr import Expr
from .symexpr.core import _exp_split

__all__ = [
    "VectorField",
    "Frame",
    "DiffOp",
    "FrameMismatch",
    "NotInFrameAlgebra",
    "coordinate_frame",
    "compose",
    "commutator",
    "conjugate_by_weight",
    "to_frame",
    "to_coordinates",
    "smoothness_check",
    "change_variable",
]


class FrameMismatch(ValueError):
    pass


class NotInFrameAlgebra(ValueError):
    """An operator coefficient is singular on ``s = 0`` in the target frame."""

    def __init__(self, coefficient: Expr, word: tuple, s: Expr):
        self.coefficient = coefficient
        self.word = word
        self.s = s
        super().__init__(f"coefficient {coefficient} of word {word} is not smooth where {s} = 0")


def _as_expr(v) -> Expr:
    return v if isinstance(v, Expr) else Expr(v)


class VectorField:
    """``sum_i a_i * d/d(coords[i])``."""

    __slots__ = ("coords", "coeffs")

    def __init__(self, coeffs: Sequence, coords: Sequence[str] = ("x", "y")):
        coeffs = tuple(_as_expr(c) for c in coeffs)
        if len(coeffs) != len(coords):
            raise ValueError("one coefficient per coordinate required")
        object.__setattr__(self, "coords", tuple(coords))
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("VectorField is immutable")

    def apply(self, u) -> Expr:
        u = _as_expr(u)
        out = Expr(0)
        for c, v in zip(self.coeffs, self.coords):
            if not c.is_zero():
                out = out + c * u.diff(v)
        return out

    def __call__(self, u) -> Expr:
        return self.apply(u)

    def scale(self, g) -> "VectorField":
        g = _as_expr(g)
        return VectorField([g * c for c in self.coeffs], self.coords)

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField([a + b for a, b in zip(self.coeffs, other.coeffs)], self.coords)

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField([a - b for a, b in zip(self.coeffs, other.coeffs)], self.coords)

    def __eq__(self, other):
        return isinstance(other, VectorField) and self.coords == other.coords and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.coords, self.coeffs))

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def at(self, point: Mapping[str, object]) -> tuple:
        """Exact coefficient values at ``point``."""
        return tuple(c.subs(point) for c in self.coeffs)

    def __repr__(self):
        parts = [f"({c})*d{v}" for c, v in zip(self.coeffs, self.coords) if not c.is_zero()]
        return "VectorField(" + (" + ".join(parts) or "0") + ")"


def commutator(u: VectorField, v: VectorField) -> VectorField:
    """Lie bracket ``[u, v] = u v - v u``."""
    if u.coords != v.coords:
        raise FrameMismatch("fields live on different coordinates")
    return VectorField([u.apply(b) - v.apply(a) for a, b in zip(u.coeffs, v.coeffs)], u.coords)


class Frame:
    """Ordered generating fields with display names."""

    def __init__(self, fields: Sequence[VectorField], names: Sequence[str] | None = None):
        fields = tuple(fields)
        if not fields:
            raise ValueError("empty frame")
        coords = fields[0].coords
        if any(f.coords != coords for f in fields):
            raise FrameMismatch("frame fields on different coordinates")
        if len(fields) != len(coords):
            raise ValueError("frame must have one field per coordinate")
        self.fields = fields
        self.coords = coords
        self.names = tuple(names) if names is not None else tuple(f"Y{i + 1}" for i in range(len(fields)))
        self._order_cache: dict[tuple, dict[tuple, Expr]] = {}

    def __eq__(self, other):
        return isinstance(other, Frame) and self.fields == other.fields

    def __hash__(self):
        return hash(self.fields)

    def __repr__(self):
        return f"Frame({', '.join(self.names)})"

    @property
    def dim(self) -> int:
        return len(self.fields)

    @cached_property
    def is_coordinate(self) -> bool:
        n = self.dim
        return all(
            self.fields[i].coeffs[j] == Expr(1 if i == j else 0) for i in range(n) for j in range(n)
        )

    @cached_property
    def matrix(self) -> sympy.Matrix:
        """Rows are the fields in coordinate components."""
        return sympy.Matrix([[c.sympy for c in f.coeffs] for f in self.fields])

    @cached_property
    def inverse(self) -> list[list[Expr]]:
        """``B`` with ``d_j = sum_k B[j][k] Y_k``."""
        inv = self.matrix.inv()  # d = A^{-1} Y  since Y = A d
        n = self.dim
        return [[Expr(inv[j, k]) for k in range(n)] for j in range(n)]

    def express(self, v: VectorField) -> list[Expr]:
        """Components of ``v`` in this frame (functions, possibly singular)."""
        B = self.inverse
        n = self.dim
        return [sum((v.coeffs[j] * B[j][k] for j in range(n)), Expr(0)) for k in range(n)]

    @cached_property
    def structure(self) -> dict[tuple[int, int], list[Expr]]:
        """``[Y_i, Y_j] = sum_k c[i, j][k] Y_k`` for ``i < j``."""
        out = {}
        for i, j in itertools.combinations(range(self.dim), 2):
            out[(i, j)] = self.express(commutator(self.fields[i], self.fields[j]))
        return out

    def bracket_coeffs(self, a: int, b: int) -> list[Expr]:
        if a == b:
            return [Expr(0)] * self.dim
        if a < b:
            return self.structure[(a, b)]
        return [-c for c in self.structure[(b, a)]]

    def apply_word(self, word: Sequence[int], u) -> Expr:
        """``Y_{w0}(Y_{w1}(... Y_{wk}(u)))``."""
        u = _as_expr(u)
        for i in reversed(word):
            u = self.fields[i].apply(u)
        return u

    def normal_order(self, word: tuple[int, ...]) -> dict[tuple[int, ...], Expr]:
        """Expand an arbitrary word as ``sum_w c_w(x) Y_w`` with sorted ``w``."""
        word = tuple(word)
        hit = self._order_cache.get(word)
        if hit is not None:
            return hit
        i = next((k for k in range(len(word) - 1) if word[k] > word[k + 1]), None)
        if i is None:
            res = {word: Expr(1)}
        else:
            prefix, a, b, suffix = word[:i], word[i], word[i + 1], word[i + 2:]
            res = dict(self.normal_order(prefix + (b, a) + suffix))
            for k, c in enumerate(self.bracket_coeffs(a, b)):
                if c.is_zero():
                    continue
                # prefix * (c *) * Y_k * suffix, moving c to the left (Leibniz)
                for dcoef, rest in _leibniz(self, prefix, c):
                    for w, cw in self.normal_order(rest + (k,) + suffix).items():
                        _accum(res, w, dcoef * cw)
        self._order_cache[word] = res
        return res


def _leibniz(frame: Frame, word: tuple[int, ...], c: Expr):
    """Terms of ``Y_word (c .) = sum (Y_T c) Y_{word minus T}``."""
    n = len(word)
    for mask in range(1 << n):
        taken = [word[t] for t in range(n) if mask >> t & 1]
        rest = tuple(word[t] for t in range(n) if not mask >> t & 1)
        d = frame.apply_word(taken, c) if taken else c
        if not d.is_zero():
            yield d, rest


def _accum(terms: dict, word: tuple, c: Expr) -> None:
    if c.is_zero():
        return
    cur = terms.get(word)
    new = c if cur is None else cur + c
    if new.is_zero():
        terms.pop(word, None)
    else:
        terms[word] = new


def coordinate_frame(coords: Sequence[str] = ("x", "y"), names: Sequence[str] | None = None) -> Frame:
    n = len(coords)
    fields = [VectorField([1 if i == j else 0 for j in range(n)], coords) for i in range(n)]
    if names is None:
        names = [f"D{c}" for c in coords] if n > 1 else ["D"]
    return Frame(fields, names)


def _sort_key(word: tuple) -> tuple:
    return (len(word), word)


class DiffOp:
    """Immutable differential operator ``sum coef * Y_word`` over a frame."""

    __slots__ = ("frame", "_terms")

    def __init__(self, frame: Frame, terms: Mapping[Sequence[int], object] | None = None):
        clean: dict[tuple, Expr] = {}
        for w, c in (terms or {}).items():
            w = tuple(w)
            if any(i < 0 or i >= frame.dim for i in w):
                raise ValueError(f"word {w} uses an unknown generator")
            c = _as_expr(c)
            if list(w) != sorted(w):
                for w2, c2 in frame.normal_order(w).items():
                    _accum(clean, w2, c * c2)
            else:
                _accum(clean, w, c)
        object.__setattr__(self, "frame", frame)
        object.__setattr__(self, "_terms", dict(sorted(clean.items(), key=lambda kv: _sort_key(kv[0]))))

    def __setattr__(self, name, value):
        raise AttributeError("DiffOp is immutable")

    # constructors
    @classmethod
    def identity(cls, frame: Frame) -> "DiffOp":
        return cls(frame, {(): 1})

    @classmethod
    def scalar(cls, frame: Frame, c) -> "DiffOp":
        return cls(frame, {(): c})

    @classmethod
    def generator(cls, frame: Frame, i: int, coef=1) -> "DiffOp":
        return cls(frame, {(i,): coef})

    # access
    @property
    def terms(self) -> dict[tuple, Expr]:
        return dict(self._terms)

    def coefficient(self, word: Sequence[int]) -> Expr:
        return self._terms.get(tuple(word), Expr(0))

    @property
    def order(self) -> int:
        return max((len(w) for w in self._terms), default=0)

    def is_zero(self) -> bool:
        return not self._terms

    # arithmetic
    def _check(self, other: "DiffOp") -> None:
        if not isinstance(other, DiffOp):
            raise TypeError("expected a DiffOp")
        if other.frame != self.frame:
            raise FrameMismatch("operators over different frames")

    def __add__(self, other):
        if not isinstance(other, DiffOp):
            other = DiffOp.scalar(self.frame, other)
        self._check(other)
        t = dict(self._terms)
        for w, c in other._terms.items():
            _accum(t, w, c)
        return DiffOp(self.frame, t)

    __radd__ = __add__

    def __neg__(self):
        return DiffOp(self.frame, {w: -c for w, c in self._terms.items()})

    def __sub__(self, other):
        if not isinstance(other, DiffOp):
            other = DiffOp.scalar(self.frame, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        """Composition with another operator, or multiplication by a function
        on the left (``c * P`` and ``P * c`` both mean coefficient scaling
        only when ``c`` is not a DiffOp; use :func:`compose` for ``P o c``)."""
        if isinstance(other, DiffOp):
            return compose(self, other)
        c = _as_expr(other)
        return DiffOp(self.frame, {w: c * a for w, a in self._terms.items()})

    def __rmul__(self, other):
        c = _as_expr(other)
        return DiffOp(self.frame, {w: c * a for w, a in self._terms.items()})

    def __pow__(self, k: int):
        out = DiffOp.identity(self.frame)
        for _ in range(k):
            out = compose(out, self)
        return out

    def __eq__(self, other):
        return isinstance(other, DiffOp) and self.frame == other.frame and self._terms == other._terms

    def __hash__(self):
        return hash((self.frame, tuple(self._terms.items())))

    def map_coefficients(self, fn) -> "DiffOp":
        return DiffOp(self.frame, {w: fn(c) for w, c in self._terms.items()})

    def subs(self, mapping: Mapping[str, object]) -> "DiffOp":
        return self.map_coefficients(lambda c: c.subs(mapping))

    def apply(self, u) -> Expr:
        """Apply to a function ``u`` (the application oracle)."""
        u = _as_expr(u)
        out = Expr(0)
        for w, c in self._terms.items():
            out = out + c * self.frame.apply_word(w, u)
        return out

    def __call__(self, u) -> Expr:
        return self.apply(u)

    def word_text(self, word: tuple) -> str:
        parts = []
        for i, grp in itertools.groupby(word):
            k = len(list(grp))
            name = self.frame.names[i]
            parts.append(name if k == 1 else f"{name}^{k}")
        return "*".join(parts)

    def __str__(self):
        items = sorted(self._terms.items(), key=lambda kv: (-len(kv[0]), kv[0]))
        return render_terms([(self.word_text(w), str(c), c) for w, c in items])

    def __repr__(self):
        return f"DiffOp({self})"


def render_terms(items) -> str:
    """Join ``(word_text, coef_text, coef_expr_or_None)`` into one line."""
    out = ""
    for word, ctext, c in items:
        neg = ctext.startswith("-")
        body = ctext[1:] if neg else ctext
        compound = c is not None and isinstance(c.sympy, sympy.Add)
        if compound and not word and out:
            # trailing constant: splice its own signs into the sum
            out += (" - " + ctext[1:]) if ctext.startswith("-") else (" + " + ctext)
            continue
        if compound:
            neg, body = False, f"({ctext})"
        if not word:
            piece = body
        elif body == "1":
            piece = word
        else:
            if not compound and ("+" in body or "-" in body[1:]):
                body = f"({body})"
            piece = f"{body}*{word}"
        if not out:
            out = ("-" if neg else "") + piece
        else:
            out += (" - " if neg else " + ") + piece
    return out or "0"


def compose(p: DiffOp, q: DiffOp) -> DiffOp:
    """``p o q`` in PBW normal form."""
    p._check(q)
    frame = p.frame
    terms: dict[tuple, Expr] = {}
    for w1, a in p._terms.items():
        for w2, b in q._terms.items():
            for db, rest in _leibniz(frame, w1, b):
                coef = a * db
                for w, cw in frame.normal_order(rest + w2).items():
                    _accum(terms, w, coef * cw)
    return DiffOp(frame, terms)


def _multi_index(word: tuple, n: int) -> tuple[int, ...]:
    m = [0] * n
    for i in word:
        m[i] += 1
    return tuple(m)


def _word_of(m: Sequence[int]) -> tuple[int, ...]:
    return tuple(i for i, k in enumerate(m) for _ in range(k))


def to_coordinates(p: DiffOp) -> DiffOp:
    """Rewrite an operator in coordinate partials."""
    if p.frame.is_coordinate:
        return p
    coord = coordinate_frame(p.frame.coords)
    gens = [DiffOp(coord, {(j,): c for j, c in enumerate(f.coeffs)}) for f in p.frame.fields]
    out = DiffOp(coord)
    for w, c in p._terms.items():
        op = DiffOp.identity(coord)
        for i in w:
            op = compose(op, gens[i])
        out = out + c * op
    return out


def conjugate_by_weight(p: DiffOp, s, left, right, frame: Frame | None = None) -> DiffOp:
    """``s^left o p o s^right``.

    ``left`` and ``right`` may be symbolic (for instance ``2 - gamma`` and
    ``gamma``) but ``left + right`` must be a rational number. The expansion
    uses ``s^{-r} d^b s^r = R_b`` with ``R_{b+e_j} = r (d_j s / s) R_b + d_j R_b``
    so symbolic exponents never enter the coefficients.

    The result is expressed in ``frame`` (default: the frame of ``p``; the
    rewriting back is not smoothness-certified).
    """
    s = _as_expr(s)
    left, right = _as_expr(left), _as_expr(right)
    total = left + right
    if not total.is_constant():
        raise ValueError(f"left + right must be a rational number, got {total}")
    target = frame if frame is not None else p.frame
    pc = to_coordinates(p)
    coord = pc.frame
    n = coord.dim
    names = coord.coords
    logd = [s.diff(v) / s for v in names]

    R: dict[tuple, Expr] = {(0,) * n: Expr(1)}

    def r_of(m):
        m = tuple(m)
        if m in R:
            return R[m]
        j = next(k for k in range(n) if m[k] > 0)
        prev = list(m)
        prev[j] -= 1
        rb = r_of(prev)
        val = right * logd[j] * rb + rb.diff(names[j])
        R[m] = val
        return val

    weight = s ** total.as_fraction()
    terms: dict[tuple, Expr] = {}
    for w, c in pc._terms.items():
        beta = _multi_index(w, n)
        for gamma in itertools.product(*(range(b + 1) for b in beta)):
            k = 1
            for b, g in zip(beta, gamma):
                k *= comb(b, g)
            rest = tuple(b - g for b, g in zip(beta, gamma))
            _accum(terms, _word_of(gamma), c * k * r_of(rest))
    res = DiffOp(coord, {w: weight * c for w, c in terms.items()})
    if target.is_coordinate and target == coord:
        return res
    return to_frame(res, target, s=None)


def _strip_exp(e: sympy.Expr) -> sympy.Expr:
    rest, _ = _exp_split(e)
    return rest


def _polynomial_part(s: Expr) -> sympy.Expr | None:
    """``s`` with exp unit factors removed, if it is then polynomial."""
    n, d = sympy.fraction(s.sympy)
    if d.free_symbols:
        return None
    core = _strip_exp(sympy.factor(n))
    if not core.is_polynomial(*core.free_symbols):
        return None
    return core


def _shares_zero(base: sympy.Expr, spoly: sympy.Expr) -> bool:
    base = _strip_exp(base)
    if not base.free_symbols:
        return False
    if isinstance(base, sympy.Pow):
        return _shares_zero(base.args[0], spoly)
    if isinstance(base, sympy.Abs):
        return _shares_zero(base.args[0], spoly)
    if isinstance(base, sympy.Mul):
        return any(_shares_zero(a, spoly) for a in base.args)
    if base.is_polynomial(*base.free_symbols):
        g = sympy.gcd(sympy.expand(base), sympy.expand(spoly))
        return bool(g.free_symbols)
    # non-polynomial factor (sum with exp or radicals): cannot certify
    return True


def smoothness_check(c, s) -> bool:
    """True when the normal form of ``c`` has no factor vanishing with ``s``
    in its denominator (``exp`` factors count as units)."""
    c, s = _as_expr(c), _as_expr(s)
    spoly = _polynomial_part(s)
    if spoly is None:
        raise ValueError(f"defining function {s} is not polynomial times exp")
    _, den = sympy.fraction(c.sympy)
    if not den.free_symbols:
        return True
    den = sympy.factor(den)
    return not any(_shares_zero(f, spoly) for f in sympy.Mul.make_args(den))


def to_frame(p: DiffOp, frame: Frame, s=None) -> DiffOp:
    """Rewrite ``p`` as words in ``frame``.

    With ``s`` given every coefficient must pass :func:`smoothness_check`,
    otherwise :class:`NotInFrameAlgebra` is raised.
    """
    if p.frame == frame:
        res = p
    else:
        pc = to_coordinates(p)
        if pc.frame.coords != frame.coords:
            raise FrameMismatch("coordinates differ")
        B = frame.inverse
        n = frame.dim
        partials = [DiffOp(frame, {(k,): B[j][k] for k in range(n)}) for j in range(n)]
        cache: dict[tuple, DiffOp] = {(): DiffOp.identity(frame)}

        def word_op(w):
            if w not in cache:
                cache[w] = compose(partials[w[0]], word_op(w[1:]))
            return cache[w]

        res = DiffOp(frame)
        for w, c in pc._terms.items():
            res = res + c * word_op(w)
    if s is not None:
        for w, c in res._terms.items():
            if not smoothness_check(c, s):
                raise NotInFrameAlgebra(c, w, _as_expr(s))
    return res


def change_variable(p: DiffOp, old: str, new: str, old_of_new, frame: Frame | None = None) -> DiffOp:
    """Pull a one-variable operator back along ``old = old_of_new(new)``.

    Returns the operator in the coordinate ``new`` (or rewritten into
    ``frame``, which must live on ``(new,)``).
    """
    pc = to_coordinates(p)
    if pc.frame.coords != (old,):
        raise FrameMismatch("change_variable handles one-variable operators")
    phi = _as_expr(old_of_new)
    coord = coordinate_frame((new,))
    d_new = DiffOp(coord, {(0,): 1 / phi.diff(new)})
    out = DiffOp(coord)
    for w, c in pc._terms.items():
        out = out + c.subs({old: phi}) * (d_new ** len(w))
    if frame is not None:
        return to_frame(out, frame)
    return out
