"""Immutable symbolic expressions with an exact canonical form.

Arithmetic is delegated to sympy; this module restricts the expression class
(rationals, real variables, integer/rational powers, ``exp`` of polynomial
arguments, ``abs``) and fixes one normal form so that structural equality is
meaningful.
"""

from __future__ import annotations

import enum
import math
import random
from fractions import Fraction
from functools import cached_property
from numbers import Rational as _RationalABC
from typing import Iterable, Mapping

import sympy

from .parser import parse_to_sympy

__all__ = [
    "Expr",
    "Equality",
    "PoleError",
    "UnboundNameError",
    "UnsupportedExpression",
    "DEFAULT_NAMES",
    "symbol",
    "parse",
    "var",
    "const",
    "diff",
    "evaluate",
    "equals",
    "normalize",
]

# Names accepted by ``parse`` unless the caller declares others.
DEFAULT_NAMES = (
    "x", "y", "z", "t", "u", "r",
    "alpha", "gamma", "eps", "h0", "nu", "lam",
    "xi", "xi1", "xi2", "a", "b", "c",
)


class PoleError(ZeroDivisionError):
    """Evaluation hit a pole of a rational expression."""


class UnboundNameError(KeyError):
    pass


class UnsupportedExpression(ValueError):
    """The expression leaves the supported coefficient class."""


_SYMBOLS: dict[str, sympy.Symbol] = {}


def symbol(name: str) -> sympy.Symbol:
    """Return the (cached) real sympy symbol used for ``name``."""
    s = _SYMBOLS.get(name)
    if s is None:
        s = _SYMBOLS[name] = sympy.Symbol(name, real=True)
    return s


def _validate(e: sympy.Expr) -> None:
    if e.is_Symbol or e.is_Rational:
        return
    if e.is_Number:
        if e in (sympy.zoo, sympy.nan, sympy.oo, -sympy.oo):
            raise PoleError(f"expression is singular: {e}")
        raise UnsupportedExpression(f"non-rational constant {e}")
    if isinstance(e, (sympy.Add, sympy.Mul)):
        for a in e.args:
            _validate(a)
        return
    if isinstance(e, sympy.Pow):
        base, ex = e.args
        if not ex.is_Rational:
            raise UnsupportedExpression(f"symbolic exponent in {e}")
        _validate(base)
        return
    if isinstance(e, sympy.exp):
        arg = e.args[0]
        _validate(arg)
        if not arg.is_polynomial(*arg.free_symbols):
            raise UnsupportedExpression(f"exp argument must be polynomial: {arg}")
        return
    if isinstance(e, sympy.Abs):
        _validate(e.args[0])
        return
    if e is sympy.E:
        return
    raise UnsupportedExpression(f"unsupported construct {type(e).__name__}: {e}")


def _exp_split(term: sympy.Expr) -> tuple[sympy.Expr, sympy.Expr]:
    """Split a product into (exp-free part, exponent sum)."""
    rest, arg = [], sympy.Integer(0)
    for f in sympy.Mul.make_args(term):
        if isinstance(f, sympy.exp):
            arg += f.args[0]
        elif isinstance(f, sympy.Pow) and isinstance(f.args[0], sympy.exp) and f.args[1].is_Integer:
            arg += f.args[0].args[0] * f.args[1]
        else:
            rest.append(f)
    return sympy.Mul(*rest), arg


def _collect_exp(e: sympy.Expr) -> sympy.Expr:
    # Expand polynomially, then merge exp factors of each monomial into one.
    e = sympy.expand(e, power_exp=True)
    out = []
    for term in sympy.Add.make_args(e):
        rest, arg = _exp_split(term)
        arg = sympy.expand(arg)
        out.append(rest * sympy.exp(arg) if arg != 0 else rest)
    return sympy.Add(*out)


def normalize(e: sympy.Expr) -> sympy.Expr:
    """Canonical form: ``N/D`` with ``N, D`` expanded, exp factors merged per
    monomial, exp-units cleared from ``D`` and ``D`` sign-normalized."""
    e = sympy.sympify(e)
    _validate(e)
    if e.is_Rational or e.is_Symbol:
        return e
    if e.has(sympy.Abs):
        e = e.replace(lambda n: isinstance(n, sympy.Abs),
                      lambda n: sympy.Abs(normalize(n.args[0])))
    e = sympy.cancel(sympy.together(e))
    num, den = sympy.fraction(e)
    num, den = _collect_exp(num), _collect_exp(den)
    # pull a common exp factor out of the denominator (exp is a unit)
    common = None
    for term in sympy.Add.make_args(den):
        _, arg = _exp_split(term)
        common = arg if common is None else common
        if sympy.expand(arg - common) != 0:
            common = None
            break
    if common is not None and common != 0:
        num = _collect_exp(num * sympy.exp(-common))
        den = _collect_exp(den * sympy.exp(-common))
    if den != 1:
        q = sympy.cancel(num / den)
        n2, d2 = sympy.fraction(q)
        n2, d2 = _collect_exp(n2), _collect_exp(d2)
        if sympy.count_ops(d2) <= sympy.count_ops(den):
            num, den = n2, d2
    if den.is_Number:
        return _collect_exp(num / den)
    lc = sympy.Poly(den).LC()
    if lc.is_Number and lc < 0:
        num, den = _collect_exp(-num), _collect_exp(-den)
    if num == 0:
        return sympy.Integer(0)
    return sympy.Mul(num, sympy.Pow(den, -1))


def _to_sympy(value) -> sympy.Expr:
    if isinstance(value, Expr):
        return value.sympy
    if isinstance(value, bool):
        raise TypeError("bool is not an expression")
    if isinstance(value, int):
        return sympy.Integer(value)
    if isinstance(value, _RationalABC):
        return sympy.Rational(value.numerator, value.denominator)
    if isinstance(value, float):
        # exact binary value; callers wanting decimals should pass strings
        return sympy.Rational(Fraction(value))
    if isinstance(value, str):
        return parse(value).sympy
    if isinstance(value, sympy.Basic):
        return value
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


def _coercible(value) -> bool:
    return isinstance(value, (Expr, int, _RationalABC, float, str, sympy.Basic)) and not isinstance(value, bool)


class Expr:
    """Immutable normalized expression."""

    __slots__ = ("_e", "__dict__")

    def __init__(self, value=0, *, _trusted: bool = False):
        e = value if _trusted else normalize(_to_sympy(value))
        object.__setattr__(self, "_e", e)

    def __setattr__(self, name, value):
        if name in ("_e",):
            raise AttributeError("Expr is immutable")
        object.__setattr__(self, name, value)

    @classmethod
    def _wrap(cls, e: sympy.Expr) -> "Expr":
        return cls(normalize(e), _trusted=True)

    @property
    def sympy(self) -> sympy.Expr:
        return self._e

    @cached_property
    def free_names(self) -> frozenset[str]:
        return frozenset(s.name for s in self._e.free_symbols)

    # arithmetic
    def __add__(self, other):
        if not _coercible(other):
            return NotImplemented
        return Expr._wrap(self._e + _to_sympy(other))

    __radd__ = __add__

    def __sub__(self, other):
        if not _coercible(other):
            return NotImplemented
        return Expr._wrap(self._e - _to_sympy(other))

    def __rsub__(self, other):
        if not _coercible(other):
            return NotImplemented
        return Expr._wrap(_to_sympy(other) - self._e)

    def __mul__(self, other):
        if not _coercible(other):
            return NotImplemented
        return Expr._wrap(self._e * _to_sympy(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not _coercible(other):
            return NotImplemented
        d = _to_sympy(other)
        if d == 0:
            raise PoleError("division by zero expression")
        return Expr._wrap(self._e / d)

    def __rtruediv__(self, other):
        if self._e == 0:
            raise PoleError("division by zero expression")
        return Expr._wrap(_to_sympy(other) / self._e)

    def __neg__(self):
        return Expr(-self._e, _trusted=True) if self._e.is_Rational else Expr._wrap(-self._e)

    def __pos__(self):
        return self

    def __pow__(self, k):
        k = Fraction(k)
        if k < 0 and self._e == 0:
            raise PoleError("negative power of zero")
        return Expr._wrap(self._e ** sympy.Rational(k.numerator, k.denominator))

    # comparisons: structural on the normal form
    def __eq__(self, other):
        if isinstance(other, Expr):
            return self._e == other._e
        try:
            return self._e == normalize(_to_sympy(other))
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self):
        return hash(self._e)

    def __repr__(self):
        return f"Expr({str(self)!r})"

    def __str__(self):
        return to_text(self._e)

    # queries
    def is_zero(self) -> bool:
        return self._e == 0

    def is_constant(self) -> bool:
        return not self._e.free_symbols

    def as_fraction(self) -> Fraction:
        if not self._e.is_Rational:
            raise ValueError(f"{self} is not a rational constant")
        return Fraction(int(self._e.p), int(self._e.q))

    def numer_denom(self) -> tuple["Expr", "Expr"]:
        n, d = sympy.fraction(self._e)
        return Expr(n, _trusted=True), Expr(d, _trusted=True)

    def is_polynomial(self, names: Iterable[str] | None = None) -> bool:
        syms = [symbol(n) for n in names] if names is not None else list(self._e.free_symbols)
        return bool(self._e.is_polynomial(*syms))

    def has_exp(self) -> bool:
        return self._e.has(sympy.exp)

    # calculus and evaluation
    def diff(self, name: str) -> "Expr":
        return diff(self, name)

    def subs(self, mapping: Mapping[str, object]) -> "Expr":
        sub = {symbol(k): _to_sympy(v) for k, v in mapping.items()}
        try:
            res = self._e.xreplace(sub) if all(
                isinstance(v, sympy.Basic) for v in sub.values()) else self._e.subs(sub)
        except ZeroDivisionError as exc:
            raise PoleError(str(exc)) from exc
        if res.has(sympy.zoo, sympy.nan):
            raise PoleError(f"{self} has a pole at {dict(mapping)}")
        # xreplace does not re-evaluate 1/0 -> zoo eagerly in all cases
        res = sympy.sympify(res).doit()
        if res.has(sympy.zoo, sympy.nan):
            raise PoleError(f"{self} has a pole at {dict(mapping)}")
        return Expr._wrap(res)

    def evaluate(self, point: Mapping[str, float]) -> float:
        return evaluate(self, point)

    def exact_value(self, point: Mapping[str, object]) -> sympy.Expr:
        """Exact value at a rational point (may contain exp/sqrt of rationals)."""
        missing = self.free_names - set(point)
        if missing:
            raise UnboundNameError(f"unbound names: {sorted(missing)}")
        return self.subs(point).sympy

    @cached_property
    def _compiled(self):
        names = sorted(self.free_names)
        fn = sympy.lambdify([symbol(n) for n in names], self._e, modules="math")
        return names, fn

    def numpy_function(self, names: Iterable[str]):
        """Vectorized evaluator ``fn(*arrays)`` over the given argument order."""
        names = list(names)
        extra = self.free_names - set(names)
        if extra:
            raise UnboundNameError(f"unbound names: {sorted(extra)}")
        return sympy.lambdify([symbol(n) for n in names], self._e, modules="numpy")


def parse(text: str, names: Iterable[str] | None = None) -> Expr:
    """Parse text into a normalized :class:`Expr`.

    ``names`` lists the identifiers that may appear; defaults to
    :data:`DEFAULT_NAMES`.
    """
    allowed = DEFAULT_NAMES if names is None else tuple(names)
    table = {n: symbol(n) for n in allowed}
    return Expr._wrap(parse_to_sympy(text, table))


def var(name: str) -> Expr:
    return Expr(symbol(name), _trusted=True)


def const(value) -> Expr:
    return Expr(value)


def diff(e: Expr, name: str) -> Expr:
    """Exact partial derivative with respect to ``name``."""
    d = sympy.diff(e.sympy, symbol(name))
    # d|u| = sign(u) du; write sign(u) as u/|u| to stay in the class
    d = d.replace(sympy.sign, lambda a: a / sympy.Abs(a))
    return Expr._wrap(d)


def evaluate(e: Expr, point: Mapping[str, float]) -> float:
    """Evaluate in IEEE double precision.

    Raises :class:`PoleError` at poles and :class:`UnboundNameError` when a
    free name is missing from ``point``.
    """
    names, fn = e._compiled
    try:
        args = [float(point[n]) for n in names]
    except KeyError as exc:
        raise UnboundNameError(f"unbound name {exc.args[0]!r} in {e}") from None
    try:
        val = fn(*args)
    except ZeroDivisionError as exc:
        raise PoleError(f"{e} has a pole at {dict(point)}") from exc
    except ValueError as exc:
        raise ValueError(f"{e} is not real at {dict(point)}: {exc}") from exc
    if isinstance(val, complex):
        raise ValueError(f"{e} is not real at {dict(point)}")
    val = float(val)
    if math.isinf(val) or math.isnan(val):
        raise PoleError(f"{e} has a pole at {dict(point)}")
    return val


class Equality(enum.Enum):
    EQUAL = "equal"
    PROBABLY_EQUAL = "probably-equal"
    NOT_EQUAL = "not-equal"

    def __bool__(self):
        return self is not Equality.NOT_EQUAL


def equals(a, b, *, samples: int = 32, rtol: float = 1e-10, seed: int = 12345) -> Equality:
    """Compare two expressions.

    ``EQUAL`` when the normal forms coincide (or their difference normalizes
    to zero). Otherwise both are sampled at ``samples`` seeded random points;
    agreement everywhere gives ``PROBABLY_EQUAL``.
    """
    a = a if isinstance(a, Expr) else Expr(a)
    b = b if isinstance(b, Expr) else Expr(b)
    if a == b or (a - b).is_zero():
        return Equality.EQUAL
    names = sorted(a.free_names | b.free_names)
    rng = random.Random(seed)
    agreed = 0
    attempts = 0
    while agreed < samples and attempts < 20 * samples:
        attempts += 1
        pt = {n: rng.uniform(-2.0, 2.0) for n in names}
        try:
            va, vb = a.evaluate(pt), b.evaluate(pt)
        except (PoleError, ValueError):
            continue
        if abs(va - vb) > rtol * max(1.0, abs(va), abs(vb)):
            return Equality.NOT_EQUAL
        agreed += 1
    if agreed < samples:
        return Equality.NOT_EQUAL
    return Equality.PROBABLY_EQUAL


class _Printer(sympy.printing.str.StrPrinter):
    def _print_Abs(self, e):
        return f"abs({self._print(e.args[0])})"

    def _print_Exp1(self, e):
        return "exp(1)"


def to_text(e: sympy.Expr) -> str:
    """Print in the parser's grammar (``^`` for powers, ``abs``)."""
    return _Printer({"order": "lex"}).doprint(e).replace("**", "^")
