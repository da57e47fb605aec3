"""Exact real-root isolation for rational univariate polynomials.

Polynomials are lists of :class:`~fractions.Fraction` coefficients, lowest
degree first. Root counting uses Sturm sequences; isolating intervals are
half-open ``(a, b]`` and refined by bisection with exact sign evaluation.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Poly = list  # list[Fraction], low -> high


def trim(p: Sequence) -> Poly:
    p = [Fraction(c) for c in p]
    while p and p[-1] == 0:
        p.pop()
    return p


def degree(p: Poly) -> int:
    return len(p) - 1  # -1 for the zero polynomial


def evaluate(p: Poly, x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def derivative(p: Poly) -> Poly:
    return trim([k * c for k, c in enumerate(p)][1:])


def divmod_poly(a: Poly, b: Poly) -> tuple[Poly, Poly]:
    a, b = trim(a), trim(b)
    if not b:
        raise ZeroDivisionError("division by the zero polynomial")
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 0)
    r = list(a)
    lead = b[-1]
    while len(r) >= len(b) and r:
        shift = len(r) - len(b)
        coef = r[-1] / lead
        q[shift] = coef
        for i, c in enumerate(b):
            r[shift + i] -= coef * c
        r = trim(r)
    return trim(q), r


def monic(p: Poly) -> Poly:
    p = trim(p)
    return [c / p[-1] for c in p] if p else p


def gcd(a: Poly, b: Poly) -> Poly:
    a, b = trim(a), trim(b)
    while b:
        a, b = b, divmod_poly(a, b)[1]
    return monic(a)


def squarefree(p: Poly) -> Poly:
    """``p / gcd(p, p')``: same real roots, all simple."""
    p = trim(p)
    if degree(p) <= 0:
        return p
    g = gcd(p, derivative(p))
    return monic(divmod_poly(p, g)[0]) if degree(g) > 0 else monic(p)


def sturm_sequence(p: Poly) -> list[Poly]:
    seq = [trim(p), derivative(p)]
    while seq[-1]:
        r = divmod_poly(seq[-2], seq[-1])[1]
        seq.append([-c for c in r])
    return seq[:-1]


def _sign_changes(seq: list[Poly], x: Fraction) -> int:
    signs = [evaluate(q, x) for q in seq]
    signs = [v for v in signs if v != 0]
    return sum(1 for u, v in zip(signs, signs[1:]) if (u < 0) != (v < 0))


def root_bound(p: Poly) -> Fraction:
    """Cauchy bound: every real root has ``|x| < bound``."""
    p = trim(p)
    lead = abs(p[-1])
    return 1 + max((abs(c) / lead for c in p[:-1]), default=Fraction(0))


def count_roots(p: Poly, a: Fraction, b: Fraction, seq: list[Poly] | None = None) -> int:
    """Number of distinct real roots in ``(a, b]``."""
    seq = seq if seq is not None else sturm_sequence(squarefree(p))
    return _sign_changes(seq, Fraction(a)) - _sign_changes(seq, Fraction(b))


def isolate_roots(p: Poly, lo: Fraction | None = None, hi: Fraction | None = None) -> list[tuple[Fraction, Fraction]]:
    """Disjoint ``(a, b]`` intervals each holding exactly one real root of
    ``p`` within ``(lo, hi]`` (default: all real roots)."""
    p = trim(p)
    if degree(p) <= 0:
        return []
    sf = squarefree(p)
    seq = sturm_sequence(sf)
    B = root_bound(sf)
    lo = -B if lo is None else Fraction(lo)
    hi = B if hi is None else Fraction(hi)
    out = []
    stack = [(lo, hi)]
    while stack:
        a, b = stack.pop()
        n = count_roots(sf, a, b, seq)
        if n == 0:
            continue
        if n == 1:
            out.append((a, b))
            continue
        m = (a + b) / 2
        stack.append((m, b))
        stack.append((a, m))
    out.sort()
    return out


def refine(p: Poly, a: Fraction, b: Fraction, width: Fraction = Fraction(1, 10**30)) -> tuple[Fraction, Fraction]:
    """Shrink an isolating interval ``(a, b]`` of a root of ``p``."""
    sf = squarefree(p)
    if evaluate(sf, b) == 0:
        return b, b
    fa = evaluate(sf, a)
    while b - a > width:
        m = (a + b) / 2
        fm = evaluate(sf, m)
        if fm == 0:
            return m, m
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
    return a, b


def exact_rational_root(p: Poly, a: Fraction, b: Fraction, max_den: int = 10**6) -> Fraction | None:
    """Rational root in ``[a, b]`` with small denominator, if one exists."""
    if a == b:
        return a if evaluate(p, a) == 0 else None
    a2, b2 = refine(p, a, b, Fraction(1, 10**40))
    if a2 == b2:
        return a2
    mid = (a2 + b2) / 2
    for den in (1, 10, 1000, max_den):
        cand = mid.limit_denominator(den)
        if a <= cand <= b and evaluate(p, cand) == 0:
            return cand
    return None


def abs_bound(p: Poly, radius: Fraction) -> Fraction:
    """Upper bound of ``|p|`` on ``[-radius, radius]``."""
    r = abs(Fraction(radius))
    return sum((abs(c) * r**k for k, c in enumerate(p)), Fraction(0))
