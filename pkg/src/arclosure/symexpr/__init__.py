"""Symbolic coefficient expressions."""

from .core import (
    DEFAULT_NAMES,
    Equality,
    Expr,
    PoleError,
    UnboundNameError,
    UnsupportedExpression,
    const,
    diff,
    equals,
    evaluate,
    normalize,
    parse,
    symbol,
    to_text,
    var,
)
from .parser import ALIASES, ParseError, UnknownIdentifier

__all__ = [
    "ALIASES", "DEFAULT_NAMES", "Equality", "Expr", "ParseError", "PoleError",
    "UnboundNameError", "UnknownIdentifier", "UnsupportedExpression", "const",
    "diff", "equals", "evaluate", "normalize", "parse", "symbol", "to_text", "var",
]
