"""Modified Bessel functions I_nu, K_nu and the Gamma function.

Supported range: ``0 <= nu <= 10`` for ``I`` (``0 < nu <= 10`` for ``K``) and
``0 < x <= 30``; anything else raises :class:`OutOfRange` rather than
returning a value of unknown accuracy.

``I_nu`` is summed from its power series (all terms positive for ``nu >= 0``)
for ``x <= 15`` and from the large-argument expansion, optimally truncated,
beyond; the expansion is only accepted when its truncation error is below
``1e-10`` relative, otherwise the series is used.

``K_nu`` comes from ``pi (I_{-nu} - I_nu) / (2 sin(pi nu))``. The two terms
cancel to a relative size ``~e^{-2x}``, so the difference is formed in
multiprecision arithmetic (mpmath) with enough digits to absorb it. Integer
orders are obtained as the Richardson limit of ``nu +- delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath

__all__ = [
    "OutOfRange",
    "BesselEval",
    "gamma",
    "bessel_i",
    "bessel_k",
    "iv",
    "kv",
    "wronskian_check",
]

NU_MAX = 10.0
X_MAX = 30.0
SERIES_MAX_X = 15.0
EPS = 2.220446049250313e-16


class OutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class BesselEval:
    nu: float
    x: float
    value: float
    method: str
    error: float  # relative error estimate

    def __float__(self):
        return self.value


# Lanczos approximation, g = 7, n = 9 (Godfrey's coefficients).
_LANCZOS_G = 7
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma(z: float) -> float:
    """Gamma function for real ``z`` (reflection below 1/2)."""
    z = float(z)
    if z <= 0 and z == math.floor(z):
        raise ValueError(f"Gamma has a pole at {z}")
    if z < 0.5:
        return math.pi / (math.sin(math.pi * z) * gamma(1.0 - z))
    z -= 1.0
    a = _LANCZOS[0]
    t = z + _LANCZOS_G + 0.5
    for i in range(1, _LANCZOS_G + 2):
        a += _LANCZOS[i] / (z + i)
    return math.sqrt(2 * math.pi) * t ** (z + 0.5) * math.exp(-t) * a


def _check(nu: float, x: float, kind: str) -> None:
    lo_ok = nu > 0 if kind == "K" else nu >= 0
    if not (lo_ok and nu <= NU_MAX):
        raise OutOfRange(f"order {nu} outside the supported range for {kind}")
    if not (0 < x <= X_MAX):
        raise OutOfRange(f"argument {x} outside (0, {X_MAX}]")


def _i_series(nu: float, x: float) -> tuple[float, float]:
    half = 0.5 * x
    q = half * half
    term = math.exp(nu * math.log(half) - math.lgamma(nu + 1.0)) if nu > 0 else 1.0
    total = term
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + nu))
        total += term
        if term <= EPS * total * 0.1:
            # remaining terms shrink at least geometrically with ratio r
            r = q / ((k + 1) * (k + 1 + nu))
            tail = term * r / (1 - r) if r < 1 else term
            return total, (k + 2) * EPS + tail / total


def _i_asymptotic(nu: float, x: float) -> tuple[float, float]:
    mu = 4.0 * nu * nu
    term = 1.0
    total = 1.0
    best_err = math.inf
    k = 0
    while k < 200:
        k += 1
        nxt = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(nxt) >= abs(term) and k > nu:
            break
        if nxt == 0.0:
            best_err = 0.0
            break
        term = nxt
        total += term
        best_err = abs(term)
    pref = math.exp(x) / math.sqrt(2 * math.pi * x)
    return pref * total, best_err / abs(total) + 4 * EPS


def bessel_i(nu: float, x: float, method: str | None = None) -> BesselEval:
    """``I_nu(x)``. ``method`` forces ``"series"`` or ``"asymptotic"``."""
    nu, x = float(nu), float(x)
    _check(nu, x, "I")
    if method is None:
        method = "series" if x <= SERIES_MAX_X else "asymptotic"
    if method == "asymptotic":
        val, err = _i_asymptotic(nu, x)
        if err <= 1e-10:
            return BesselEval(nu, x, val, "asymptotic", err)
        method = "series"
    if method != "series":
        raise ValueError(f"unknown method {method!r}")
    val, err = _i_series(nu, x)
    return BesselEval(nu, x, val, "series", err)


def _mp_i(nu, x):
    """``I_nu(x)`` for any real non-integer ``nu`` at current mp precision."""
    half = x / 2
    q = half * half
    term = mpmath.power(half, nu) / mpmath.gamma(nu + 1)
    total = term
    k = 0
    tiny = mpmath.mpf(2) ** (-mpmath.mp.prec - 10)
    while True:
        k += 1
        term = term * q / (k * (k + nu))
        total += term
        if k > abs(nu) + 2 and abs(term) <= tiny * abs(total):
            return total


def _mp_k_reflect(nu, x):
    return mpmath.pi * (_mp_i(-nu, x) - _mp_i(nu, x)) / (2 * mpmath.sin(mpmath.pi * nu))


def bessel_k(nu: float, x: float) -> BesselEval:
    """``K_nu(x)`` by the reflection formula."""
    nu, x = float(nu), float(x)
    _check(nu, x, "K")
    integer = abs(nu - round(nu)) < 1e-12
    # digits lost: e^{2x} from I-cancellation, ~1/delta from sin near integers
    dps = 25 + int(2 * x / math.log(10)) + (16 if integer else 0)
    with mpmath.workdps(dps):
        mx = mpmath.mpf(x)
        if not integer:
            val = _mp_k_reflect(mpmath.mpf(nu), mx)
            return BesselEval(nu, x, float(val), "reflection", 4 * EPS)
        n = mpmath.mpf(round(nu))
        delta = mpmath.mpf("1e-6")

        def avg(d):
            return (_mp_k_reflect(n + d, mx) + _mp_k_reflect(n - d, mx)) / 2

        a1, a2 = avg(delta), avg(2 * delta)
        val = (4 * a1 - a2) / 3
        # next Richardson term is O(delta^4); the difference bounds the O(delta^2) part
        err = float(abs(a1 - a2) / abs(val)) * 1e-12 + 4 * EPS
        return BesselEval(nu, x, float(val), "reflection-richardson", err)


def iv(nu: float, x: float) -> float:
    return bessel_i(nu, x).value


def kv(nu: float, x: float) -> float:
    return bessel_k(nu, x).value


def _stencil(fn, x: float, h: float) -> float:
    return (fn(x - 2 * h) - 8 * fn(x - h) + 8 * fn(x + h) - fn(x + 2 * h)) / (12 * h)


def wronskian_check(nu: float, x: float) -> float:
    """``|I K' - I' K + 1/x|`` with five-point derivatives."""
    h = min(1e-3 * max(1.0, x), 0.1 * x)
    i0, k0 = iv(nu, x), kv(nu, x)
    di = _stencil(lambda t: iv(nu, t), x, h)
    dk = _stencil(lambda t: kv(nu, t), x, h)
    return abs(i0 * dk - di * k0 + 1.0 / x)
