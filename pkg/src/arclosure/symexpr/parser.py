"""Pratt parser for the coefficient grammar.

Grammar (EBNF)::

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = [ "-" | "+" ] , unary | power ;
    power   = atom , [ ("^" | "**") , unary ] ;        (* right associative *)
    atom    = number | name | call | "(" , expr , ")" ;
    call    = ("exp" | "abs" | "sqrt") , "(" , expr , ")" ;
    number  = digit , { digit } , [ "." , { digit } ] ;
    name    = letter , { letter | digit | "_" } ;

Decimal literals are read as exact rationals (``0.5`` is ``1/2``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

import sympy

__all__ = ["ParseError", "UnknownIdentifier", "parse_to_sympy", "ALIASES"]

# Unicode spellings accepted on input; the printer always emits the ASCII form.
ALIASES = {
    "α": "alpha",
    "γ": "gamma",
    "ε": "eps",
    "ξ": "xi",
    "h₀": "h0",
    "ξ₁": "xi1",
    "ξ₂": "xi2",
}

_FUNCTIONS = {
    "exp": sympy.exp,
    "abs": sympy.Abs,
    "sqrt": lambda a: sympy.Pow(a, sympy.Rational(1, 2)),
}

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:\.\d*)?|\.\d+)
  | (?P<name>[^\W\d]\w*)
  | (?P<op>\*\*|[-+*/^(),])
    """,
    re.VERBOSE | re.UNICODE,
)


class ParseError(ValueError):
    """Syntax error; ``pos`` is the 0-based character offset."""

    def __init__(self, message: str, pos: int, text: str):
        self.pos = pos
        self.text = text
        super().__init__(f"{message} at position {pos}: {text!r}")


class UnknownIdentifier(ParseError):
    pass


@dataclass(frozen=True)
class _Tok:
    kind: str
    value: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    for alias, name in ALIASES.items():
        text = text.replace(alias, name)
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            value = m.group(kind)
            toks.append(_Tok("op" if kind == "op" and value != "**" else kind,
                             "^" if value == "**" else value, pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


# binding powers
_INFIX = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_PREFIX_BP = 30


class _Parser:
    def __init__(self, text: str, symbols: dict[str, sympy.Symbol]):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.symbols = symbols

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        tok = self.advance()
        if tok.value != value:
            found = tok.value or "end of input"
            raise ParseError(f"expected {value!r}, found {found!r}", tok.pos, self.text)

    def parse(self) -> sympy.Expr:
        if self.peek().kind == "end":
            raise ParseError("empty expression", 0, self.text)
        result = self.expression(0)
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"unexpected {tok.value!r}", tok.pos, self.text)
        return result

    def expression(self, min_bp: int) -> sympy.Expr:
        left = self.nud(self.advance())
        while True:
            tok = self.peek()
            if tok.kind != "op" or tok.value not in _INFIX:
                break
            bp = _INFIX[tok.value]
            if bp <= min_bp:
                break
            self.advance()
            # ^ is right associative: parse the exponent at a lower bp
            right = self.expression(bp - 1 if tok.value == "^" else bp)
            left = self.led(tok, left, right)
        return left

    def nud(self, tok: _Tok) -> sympy.Expr:
        if tok.kind == "num":
            return sympy.Rational(Fraction(tok.value))
        if tok.kind == "name":
            if tok.value in _FUNCTIONS:
                self.expect("(")
                arg = self.expression(0)
                self.expect(")")
                return _FUNCTIONS[tok.value](arg)
            if tok.value not in self.symbols:
                raise UnknownIdentifier(f"unknown identifier {tok.value!r}", tok.pos, self.text)
            return self.symbols[tok.value]
        if tok.value == "(":
            inner = self.expression(0)
            self.expect(")")
            return inner
        if tok.value in ("-", "+"):
            operand = self.expression(_PREFIX_BP)
            return -operand if tok.value == "-" else operand
        found = tok.value or "end of input"
        raise ParseError(f"unexpected {found!r}", tok.pos, self.text)

    def led(self, tok: _Tok, left: sympy.Expr, right: sympy.Expr) -> sympy.Expr:
        op = tok.value
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        if op == "/":
            if right == 0:
                raise ParseError("division by literal zero", tok.pos, self.text)
            return left / right
        return sympy.Pow(left, right)


def parse_to_sympy(text: str, symbols: dict[str, sympy.Symbol]) -> sympy.Expr:
    """Parse ``text`` into a raw (un-normalized) sympy expression."""
    return _Parser(text, symbols).parse()
