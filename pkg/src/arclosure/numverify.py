"""Numerical confirmations: weighted quadrature with singular endpoints,
weighted Sobolev norms, membership and integrability probes, empirical
semiboundedness constants and an embedding spot-check.

Divergence is decided from dyadic shells toward each singular endpoint: the
integral over ``[a + L 2^{-k-1}, a + L 2^{-k}]`` (or ``[R 2^k, R 2^{k+1}]``
toward infinity) is computed for successive ``k``; eight consecutive shell
ratios ``>= 0.999`` declare divergence, geometric decay gives convergence
with a tail estimate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from . import specfun
from .limits import LimitOperator
from .opalgebra import VectorField
from .symexpr import Expr, parse

__all__ = [
    "Divergent",
    "QuadResult",
    "WeightedMeasure",
    "gauss_legendre",
    "quad_weighted",
    "quad_weighted_detail",
    "sobolev_norm",
    "domain_membership_probe",
    "semibound_estimate",
    "integrability_probe",
    "embedding_spotcheck",
    "cutoff_r",
]

SHELL_RUN = 8
SHELL_FACTOR = 2.0
SHELL_RATIO = 0.999
MAX_SHELLS = 1000


@dataclass(frozen=True)
class Divergent:
    """Marker result: the integral diverges at ``endpoint``."""

    endpoint: float
    shell_sums: tuple = ()

    def __bool__(self):
        return False

    def __str__(self):
        return f"Divergent(at {self.endpoint})"


@dataclass
class QuadResult:
    value: float | None
    error: float
    divergent_at: float | None = None
    shells: dict = field(default_factory=dict)  # endpoint -> list of shell sums

    @property
    def divergent(self) -> bool:
        return self.divergent_at is not None

    def outcome(self):
        if self.divergent:
            return Divergent(self.divergent_at, tuple(self.shells.get(self.divergent_at, ())))
        return self.value


def _callable(e, names=("x",)) -> Callable:
    if callable(e) and not isinstance(e, Expr):
        return e
    e = e if isinstance(e, Expr) else parse(str(e))
    fn = e.numpy_function(names)

    def wrapped(*args):
        out = fn(*args)
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(args[0]))

    return wrapped


@dataclass
class WeightedMeasure:
    """``density(x) dx`` on ``interval``; ``singular`` lists the endpoints that
    need shell treatment (``math.inf`` allowed)."""

    density: object
    interval: tuple
    singular: tuple = ()

    def fn(self):
        return _callable(self.density)


@lru_cache(maxsize=None)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def gauss_legendre(fn: Callable, a: float, b: float, panels: int = 1, points: int = 20) -> float:
    """Composite Gauss-Legendre rule."""
    t, w = _leggauss(points)
    edges = np.linspace(a, b, panels + 1)
    lo, hi = edges[:-1, None], edges[1:, None]
    x = 0.5 * (hi - lo) * t[None, :] + 0.5 * (hi + lo)
    vals = fn(x)
    return float((0.5 * (hi - lo) * (vals * w[None, :])).sum())


def _shell_integral(fn, lo, hi, points=24, panels=2):
    return gauss_legendre(fn, lo, hi, panels=panels, points=points)


def _shells(fn, endpoint, inner, tol):
    """Integrate from ``inner`` toward ``endpoint`` in geometric shells.

    Returns (value, error, divergent, shell_sums)."""
    sums = []
    total = 0.0
    if math.isinf(endpoint):
        R = inner

        def shell(k):
            return _shell_integral(fn, R * SHELL_FACTOR**k, R * SHELL_FACTOR ** (k + 1))
    else:
        L = inner - endpoint  # signed distance

        def shell(k):
            p = endpoint + L * SHELL_FACTOR ** (-k - 1)
            q = endpoint + L * SHELL_FACTOR ** (-k)
            lo, hi = (p, q) if L > 0 else (q, p)
            return _shell_integral(fn, lo, hi)
    run = 0
    for k in range(MAX_SHELLS):
        try:
            s = abs(shell(k))
        except (OverflowError, FloatingPointError):
            return None, math.inf, True, sums
        if not math.isfinite(s):
            return None, math.inf, True, sums
        sums.append(s)
        total += s
        if len(sums) >= 2:
            prev = sums[-2]
            ratio = s / prev if prev > 0 else (0.0 if s == 0 else math.inf)
            run = run + 1 if ratio >= SHELL_RATIO else 0
            if run >= SHELL_RUN:
                return None, math.inf, True, sums
            if len(sums) >= SHELL_RUN and ratio < 1:
                recent = [sums[i] / sums[i - 1] for i in range(len(sums) - 4, len(sums)) if sums[i - 1] > 0]
                r = max(recent) if recent else 0.0
                tail = s * r / (1 - r) if r < 1 else math.inf
                if tail <= tol * max(total, 1e-300) or s == 0:
                    return total + tail, tail + 1e-15 * total, False, sums
        if s == 0 and k > SHELL_RUN:
            return total, 0.0, False, sums
        if math.isinf(endpoint) and R * SHELL_FACTOR ** (k + 1) > 1e300:
            break
        if not math.isinf(endpoint) and abs(L) * SHELL_FACTOR ** (-k - 1) < 1e-300:
            break
    # ran out of shells while still decaying slowly: extrapolate geometrically
    recent = [sums[i] / sums[i - 1] for i in range(max(1, len(sums) - 8), len(sums)) if sums[i - 1] > 0]
    r = max(recent) if recent else 0.0
    tail = sums[-1] * r / (1 - r) if r < 1 else math.inf
    return total + tail, tail, False, sums


def quad_weighted_detail(u, m: WeightedMeasure, tol: float = 1e-10, points: int = 24) -> QuadResult:
    """``int |u|^2 density`` over ``m.interval`` with shell handling."""
    ufn = _callable(u)
    rho = m.fn()

    def integrand(x):
        with np.errstate(all="ignore"):
            v = ufn(x)
            return np.abs(v) ** 2 * rho(x)

    a, b = (float(v) for v in m.interval)
    sing = [float(s) for s in m.singular]
    left_s = a in sing
    right_s = b in sing
    # bulk interval between the shell regions
    if math.isinf(b):
        if not right_s:
            raise ValueError("an infinite endpoint must be declared singular")
        lo_b = a if not left_s else (a + 1.0 if a + 1.0 > a else a)
        hi_b = max(lo_b * 2.0, lo_b + 1.0, 1.0)
        if left_s:
            lo_b = a + 0.5 * (hi_b - a)
    else:
        width = b - a
        lo_b = a + width / 4 if left_s else a
        hi_b = b - width / 4 if right_s else b
    total = 0.0
    err = 0.0
    shells = {}
    if hi_b > lo_b:
        g1 = gauss_legendre(integrand, lo_b, hi_b, panels=16, points=points)
        g2 = gauss_legendre(integrand, lo_b, hi_b, panels=32, points=points)
        total += g2
        err += abs(g2 - g1)
        if not math.isfinite(g2):
            return QuadResult(None, math.inf, a if left_s else b)
    for endpoint, inner, flag in ((a, lo_b, left_s), (b, hi_b, right_s)):
        if not flag:
            continue
        val, e, div, sums = _shells(integrand, endpoint, inner, tol)
        shells[endpoint] = sums
        if div:
            return QuadResult(None, math.inf, endpoint, shells)
        total += val
        err += e
    return QuadResult(total, err, None, shells)


def quad_weighted(u, m: WeightedMeasure, tol: float = 1e-10):
    """``int |u|^2 dm`` or :class:`Divergent`."""
    return quad_weighted_detail(u, m, tol).outcome()


def _words(n_fields: int, k: int):
    for length in range(k + 1):
        yield from itertools.product(range(n_fields), repeat=length)


def sobolev_norm(u, fields: Sequence, m: WeightedMeasure, k: int, tol: float = 1e-10):
    """``(sum_{|w| <= k} int |X_w u|^2 dm)^{1/2}``; the empty word is included.

    ``u`` symbolic: derivatives are exact. ``u`` callable: ``fields`` must be
    callables ``a(x)`` meaning ``a(x) d/dx`` and derivatives use fourth-order
    central differences.
    """
    if k not in (0, 1, 2):
        raise ValueError("k must be 0, 1 or 2")
    total = 0.0
    for w in _words(len(fields), k):
        if isinstance(u, (Expr, str)):
            g = u if isinstance(u, Expr) else parse(u)
            for i in reversed(w):
                g = fields[i].apply(g)
        else:
            g = u
            for i in reversed(w):
                g = _fd_field(fields[i], g)
        r = quad_weighted(g, m, tol)
        if isinstance(r, Divergent):
            return r
        total += r
    return math.sqrt(total)


def _fd_field(a: Callable, g: Callable) -> Callable:
    def out(x):
        x = np.asarray(x, dtype=float)
        h = 1e-3 * np.maximum(np.abs(x), 1e-3)
        d = (g(x - 2 * h) - 8 * g(x - h) + 8 * g(x + h) - g(x + 2 * h)) / (12 * h)
        return a(x) * d
    return out


# ---------------------------------------------------------------------------
# membership near the singular endpoints of the 1D model


def domain_membership_probe(u, s="x*(1-x)", eps: float = 0.5, endpoints=(0,)) -> dict:
    """Decide ``u in s^{3/2} H^2`` near the zeros of ``s`` listed in
    ``endpoints`` via the three integrals of ``v = u x^{-3/2}``:
    ``|v|^2, |x v'|^2, |(x d_x)^2 v|^2`` against ``dx/x`` on ``(0, eps)``.
    ``endpoints=(0, 1)`` also tests ``x = 1`` by reflecting ``x -> 1 - x``.
    """
    u = u if isinstance(u, Expr) else parse(str(u))
    s = s if isinstance(s, Expr) else parse(str(s))
    names = ("|u x^-3/2|^2", "|x d_x(u x^-3/2)|^2", "|(x d_x)^2(u x^-3/2)|^2")
    report = {"member": True, "excluded": None, "integrals": {}}
    for e in endpoints:
        if not s.subs({"x": e}).is_zero() or s.diff("x").subs({"x": e}).is_zero():
            raise ValueError(f"{e} is not a simple zero of s")
        local = u if e == 0 else u.subs({"x": parse("1 - x")})
        v = local * parse("x^(-3/2)")
        X = VectorField(["x"], ("x",))
        vals = []
        g = v
        m = WeightedMeasure(parse("1/x"), (0.0, eps), (0.0,))
        for name in names:
            r = quad_weighted_detail(g, m)
            vals.append(r)
            report["integrals"][f"x={e}: {name}"] = "divergent" if r.divergent else r.value
            if r.divergent and report["member"]:
                report["member"] = False
                report["excluded"] = {"endpoint": e, "integral": name,
                                      "shell_sums": r.shells.get(0.0, [])[:12]}
            g = X.apply(g)
    return report


# ---------------------------------------------------------------------------
# semiboundedness probe


def semibound_estimate(op: LimitOperator, xi0: Iterable = None, lengths: Iterable = (10.0, 100.0),
                       nodes: int = 40) -> dict:
    """``min ||P u|| / ||u||`` over modulated Gaussians
    ``u = exp(i xi0 z) exp(-(z/L)^2)``.

    ``|u^|^2`` is Gaussian in ``xi`` with mean ``xi0`` and variance ``1/L^2``
    (per axis), so ``||P u||^2/||u||^2 = E|p(i xi)|^2``, evaluated by
    Gauss-Hermite quadrature.
    """
    from .invert.symbol import fourier_symbol

    sym = fourier_symbol(op)
    Q = sym.numeric_function()
    n = sym.n
    if xi0 is None:
        xi0 = list(np.linspace(-4.0, 4.0, 33))
    t, w = np.polynomial.hermite.hermgauss(nodes)
    results = []
    for L in lengths:
        sigma = 1.0 / float(L)
        for c in xi0:
            centre = np.atleast_1d(np.asarray(c, dtype=float))
            if centre.size == 1 and n == 2:
                centre = np.array([centre[0], 0.0])
            if n == 1:
                val = float((w * Q(centre[0] + math.sqrt(2) * sigma * t)).sum() / math.sqrt(math.pi))
            else:
                T1, T2 = np.meshgrid(t, t, indexing="ij")
                W = np.outer(w, w)
                vals = Q(centre[0] + math.sqrt(2) * sigma * T1, centre[1] + math.sqrt(2) * sigma * T2)
                val = float((W * vals).sum() / math.pi)
            results.append({"L": float(L), "xi0": centre.tolist(), "ratio": math.sqrt(max(val, 0.0))})
    best = min(results, key=lambda r: r["ratio"])
    per_L = {}
    for r in results:
        per_L[r["L"]] = min(per_L.get(r["L"], math.inf), r["ratio"])
    return {"c_est": best["ratio"], "argmin": best, "per_length": per_L, "members": len(results)}


# ---------------------------------------------------------------------------
# integrability of Bessel solutions of the reduced equation


def _bessel_sq_over_x3(kind: str, nu: float):
    f = specfun.iv if kind == "I" else specfun.kv

    def integrand(x):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        out = np.array([f(nu, 0.5 * v * v) ** 2 / v**3 for v in flat])
        return out.reshape(x.shape)

    return integrand


def integrability_probe(kind: str, nu: float, endpoint: str, shells: int = 8) -> dict:
    """Fit the behaviour of ``int |B_nu(x^2/2)|^2 dx/x^3`` near an endpoint.

    Near zero: dyadic shells ``[2^{-k-1}, 2^{-k}]``; the log-log slope gives the
    power ``p`` of the integrand ``~ x^p`` (integrable iff ``p > -1``).
    Near infinity: equal windows in ``t = x^2/2`` up to ``t = 30``; the integrand
    behaves like ``e^{rate t} t^{-3}`` and the fitted ``rate`` decides.
    """
    if kind not in ("I", "K"):
        raise ValueError("kind must be 'I' or 'K'")
    if not (0 < nu <= specfun.NU_MAX):
        raise specfun.OutOfRange(f"order {nu} outside (0, 10]")
    g = _bessel_sq_over_x3(kind, nu)
    if endpoint == "zero":
        exact = 4 * nu - 3 if kind == "I" else -4 * nu - 3
        ks = np.arange(8, 8 + shells)
        sums = np.array([gauss_legendre(g, 2.0 ** (-k - 1), 2.0 ** (-k), points=16) for k in ks])
        # shell of x^p over [2^{-k-1}, 2^{-k}] scales like 2^{-k(p+1)}
        slope = np.polyfit(ks, np.log2(sums), 1)[0]
        fitted = -slope - 1.0
        return {
            "kind": kind, "nu": nu, "endpoint": "zero",
            "exact_exponent": exact, "fitted_exponent": float(fitted),
            "convergent": exact > -1, "fit_convergent": bool(fitted > -1),
            "windows": [(2.0 ** (-k - 1), 2.0 ** (-k)) for k in ks.tolist()],
            "shell_sums": sums.tolist(),
        }
    if endpoint == "infinity":
        exact_rate = 2.0 if kind == "I" else -2.0
        t_edges = np.linspace(14.0, 30.0, shells + 1)
        x_edges = np.sqrt(2 * t_edges)
        sums = np.array([gauss_legendre(g, x_edges[i], x_edges[i + 1], points=16) for i in range(shells)])
        t_mid = 0.5 * (t_edges[:-1] + t_edges[1:])
        A = np.column_stack([t_mid, np.log(t_mid), np.ones_like(t_mid)])
        coef = np.linalg.lstsq(A, np.log(sums), rcond=None)[0]
        return {
            "kind": kind, "nu": nu, "endpoint": "infinity",
            "exact_rate": exact_rate, "fitted_rate": float(coef[0]),
            "convergent": exact_rate < 0, "fit_convergent": bool(coef[0] < 0),
            "windows": list(zip(x_edges[:-1].tolist(), x_edges[1:].tolist())),
            "shell_sums": sums.tolist(),
        }
    raise ValueError("endpoint must be 'zero' or 'infinity'")


# ---------------------------------------------------------------------------
# embedding spot-check for the reduced operator


def _quintic_join(eps: float):
    """Coefficients of the degree-5 polynomial on ``[eps, 2 eps]`` matching
    ``(x, 1, 0)`` at ``eps`` and ``(1, 0, 0)`` at ``2 eps``."""
    a, b = eps, 2 * eps
    rows, rhs = [], []
    for x0, vals in ((a, (a, 1.0, 0.0)), (b, (1.0, 0.0, 0.0))):
        rows.append([x0**k for k in range(6)])
        rows.append([k * x0 ** (k - 1) if k >= 1 else 0.0 for k in range(6)])
        rows.append([k * (k - 1) * x0 ** (k - 2) if k >= 2 else 0.0 for k in range(6)])
        rhs.extend(vals)
    return np.linalg.solve(np.array(rows), np.array(rhs))


def cutoff_r(eps: float = 0.25) -> Callable:
    """``r(x) = x`` for ``x <= eps``, ``1`` for ``x >= 2 eps``, C^2 quintic join."""
    c = _quintic_join(eps)

    def r(x):
        x = np.asarray(x, dtype=float)
        mid = np.polyval(c[::-1], x)
        return np.where(x <= eps, x, np.where(x >= 2 * eps, 1.0, mid))

    return r


def _bump(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


def embedding_spotcheck(centres: Sequence[float] = (1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625),
                        width: float = 0.5, eps: float = 0.25, n: int = 4001,
                        amplitude: float = 1.0) -> dict:
    """Compare ``||u||^2_{H^2, x d_x, dx/x^3}`` with ``||v||^2_{H^2, W, mu}`` for
    ``u = r rt^2 v``, ``W = rt^2 x d_x``, ``mu = r^2 dx / (x^3 rt^4)`` and
    ``rt(x) = r(1/x)``, for log-scale bumps ``v`` centred at ``centres``.

    Computations run in ``t = log x`` (``x d_x = d_t``) with fourth-order
    differences. ``amplitude = 0`` gives the zero function, whose rows are
    skipped.
    """
    r = cutoff_r(eps)
    rows = []
    for c in centres:
        t0 = math.log(c)
        t = np.linspace(t0 - width * 1.05, t0 + width * 1.05, n)
        x = np.exp(t)
        dt = t[1] - t[0]
        v = amplitude * _bump((t - t0) / width)
        if not np.any(v):
            rows.append({"centre": c, "lhs": 0.0, "rhs": 0.0, "ratio": None})
            continue
        rr, rt = r(x), r(1.0 / x)
        u = rr * rt**2 * v

        def d(f):
            return np.gradient(f, dt, edge_order=2)

        # x d_x = d_t, dx / x^3 = e^{-2t} dt
        lhs_terms = [u, d(u), d(d(u))]
        lhs = sum(np.trapezoid(np.abs(g) ** 2 * np.exp(-2 * t), t) for g in lhs_terms)
        mu = rr**2 / (x**3 * rt**4) * x  # dx = x dt
        W = lambda f: rt**2 * d(f)
        rhs_terms = [v, W(v), W(W(v))]
        rhs = sum(np.trapezoid(np.abs(g) ** 2 * mu, t) for g in rhs_terms)
        rows.append({"centre": c, "lhs": float(lhs), "rhs": float(rhs), "ratio": float(lhs / rhs)})
    ratios = [row["ratio"] for row in rows if row["ratio"] is not None]
    trend = None
    if len(ratios) >= 3:
        k = np.arange(len(ratios))
        trend = float(np.polyfit(k, np.log(ratios), 1)[0])
    bounded = bool(ratios) and max(ratios) < 1e3 and (trend is None or trend < 0.1)
    return {"rows": rows, "max_ratio": max(ratios) if ratios else None,
            "log_ratio_trend_per_step": trend, "passed": bounded}
