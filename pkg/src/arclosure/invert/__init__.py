"""Left-invertibility deciders for limit operators."""

from .verdict import Status, Verdict
from .symbol import SymbolPoly, decide_abelian, decide_tangency, fourier_symbol, parse_abelian, symbol_samples
from .affine import ImaginaryOrder, ReducedOp, affine_reduce, bessel_injectivity, decide_affine, reduced_boundary_ops

__all__ = [
    "Status", "Verdict", "SymbolPoly", "decide_abelian", "decide_tangency",
    "fourier_symbol", "parse_abelian", "symbol_samples",
    "ImaginaryOrder", "ReducedOp", "affine_reduce", "bessel_injectivity",
    "decide_affine", "reduced_boundary_ops",
]
