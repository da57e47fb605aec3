"""End-to-end closure analysis: config in, structured report out.

Steps: build the operator and defining function, conjugate by the weights,
certify the result in the Lie frame, locate and classify the singular points,
freeze at a sample of them and decide each limit operator.
"""

from __future__ import annotations

import copy
import csv
import datetime as _dt
import hashlib
import json
import logging
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import mpmath
import numpy as np
import sympy
import tomli
import tomli_w

from . import __version__, numverify, specfun
from .frames import (
    ARChart,
    PointClass,
    PointKind,
    chart_1d,
    chart_2d,
    classify_point,
    genericity_scan,
    laplace_beltrami,
    normal_form,
)
from .invert import (
    Status,
    Verdict,
    affine_reduce,
    decide_abelian,
    decide_affine,
    decide_tangency,
    fourier_symbol,
    reduced_boundary_ops,
    symbol_samples,
)
from .limits import GroupTag, LimitOperator, freeze, isotropy_type, normalize_affine, weighted_operator
from .opalgebra import DiffOp, coordinate_frame
from .symexpr import Expr, parse

log = logging.getLogger(__name__)

REPORT_SCHEMA = "arclosure-report/1"
SAMPLING_NOTE = ("verdicts are computed at sampled singular points plus every tangency point; "
                 "this is a sampling check, not a proof over the whole singular set")


class ConfigError(ValueError):
    pass


@dataclass
class ClosureConfig:
    # [chart]
    dim: int = 2
    f: str = "x"
    s: str | None = None
    window: list = field(default_factory=lambda: [["-1", "1"], ["-1", "1"]])
    h: str = "0"
    potential: str = "3/4 + alpha"
    params: dict = field(default_factory=dict)
    normal_form: str | None = None
    normal_form_data: dict = field(default_factory=dict)
    # [weights]
    gamma: str | None = None
    epsilons: list = field(default_factory=list)
    # [solver]
    resolution: int = 64
    samples: int = 33
    tol: float = 1e-9
    workers: int = 1
    probes: bool = False
    # [output]
    directory: str = ""
    emit_csv: bool = False
    figures: bool = False

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ConfigError(f"dim must be 1 or 2, got {self.dim}")
        if len(self.window) != self.dim:
            if self.dim == 1 and self.window == [["-1", "1"], ["-1", "1"]]:
                self.window = [["0", "1"]]
            else:
                raise ConfigError(f"window needs {self.dim} interval(s)")
        self.window = [[str(a), str(b)] for a, b in self.window]
        self.params = {str(k): str(v) for k, v in self.params.items()}
        self.normal_form_data = {str(k): str(v) for k, v in self.normal_form_data.items()}
        self.epsilons = [str(e) for e in self.epsilons]
        if self.dim == 1 and self.s is None:
            self.s = "x*(1-x)"
        for name in ("resolution", "samples", "workers"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be positive")

    @property
    def effective_gamma(self) -> str:
        if self.gamma is not None:
            return self.gamma
        return "3/2" if self.dim == 1 else "1"

    # -- TOML -------------------------------------------------------------

    def to_dict(self) -> dict:
        chart: dict[str, Any] = {"dim": self.dim, "window": self.window, "h": self.h}
        if self.dim == 1:
            chart["s"] = self.s
            chart["potential"] = self.potential
        else:
            chart["f"] = self.f
            if self.s is not None:
                chart["s"] = self.s
        if self.normal_form is not None:
            chart["normal_form"] = self.normal_form
        if self.normal_form_data:
            chart["normal_form_data"] = dict(self.normal_form_data)
        if self.params:
            chart["params"] = dict(self.params)
        weights: dict[str, Any] = {"epsilons": list(self.epsilons)}
        if self.gamma is not None:
            weights["gamma"] = self.gamma
        return {
            "chart": chart,
            "weights": weights,
            "solver": {"resolution": self.resolution, "samples": self.samples, "tol": self.tol,
                       "workers": self.workers, "probes": self.probes},
            "output": {"directory": self.directory, "csv": self.emit_csv, "figures": self.figures},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClosureConfig":
        unknown = set(d) - {"chart", "weights", "solver", "output"}
        if unknown:
            raise ConfigError(f"unknown section(s): {sorted(unknown)}")
        chart = dict(d.get("chart", {}))
        weights = dict(d.get("weights", {}))
        solver = dict(d.get("solver", {}))
        output = dict(d.get("output", {}))
        kw: dict[str, Any] = {}
        mapping = {
            "chart": (chart, {"dim", "f", "s", "window", "h", "potential", "params",
                              "normal_form", "normal_form_data"}),
            "weights": (weights, {"gamma", "epsilons"}),
            "solver": (solver, {"resolution", "samples", "tol", "workers", "probes"}),
            "output": (output, {"directory", "csv", "figures"}),
        }
        for section, (data, allowed) in mapping.items():
            extra = set(data) - allowed
            if extra:
                raise ConfigError(f"unknown key(s) in [{section}]: {sorted(extra)}")
            for k, v in data.items():
                kw["emit_csv" if k == "csv" else k] = v
        for k in ("f", "s", "h", "potential", "gamma"):
            if k in kw and kw[k] is not None:
                kw[k] = str(kw[k])
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def from_toml(cls, text: str) -> "ClosureConfig":
        try:
            return cls.from_dict(tomli.loads(text))
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML: {exc}") from exc

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def load_config(path) -> ClosureConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return ClosureConfig.from_toml(text)


# ---------------------------------------------------------------------------
# building blocks


def _bind(text: str, params: dict) -> Expr:
    e = parse(text)
    if params:
        e = e.subs({k: parse(v) for k, v in params.items()})
    return e


def build_chart(cfg: ClosureConfig) -> ARChart:
    try:
        h = _bind(cfg.h, cfg.params)
        window = tuple(tuple(parse(v).as_fraction() for v in iv) for iv in cfg.window)
        if cfg.dim == 1:
            return chart_1d(_bind(cfg.s, cfg.params), window=window, h=h)
        if cfg.normal_form is not None:
            data = {k: _bind(v, cfg.params) for k, v in cfg.normal_form_data.items()}
            return normal_form(cfg.normal_form, data, window=window, h=h)
        s = _bind(cfg.s, cfg.params) if cfg.s is not None else None
        return chart_2d(_bind(cfg.f, cfg.params), window=window, h=h, s=s)
    except ConfigError:
        raise
    except Exception as exc:  # parse errors, bad windows, normal-form checks
        raise ConfigError(f"chart: {exc}") from exc


def build_operator(cfg: ClosureConfig, chart: ARChart, gamma=None) -> tuple[DiffOp, DiffOp]:
    """(base operator, weighted conjugate certified in the Lie frame)."""
    g = parse(cfg.effective_gamma) if gamma is None else gamma
    if cfg.dim == 1:
        V = _bind(cfg.potential, cfg.params)
        C = coordinate_frame(("x",))
        base = DiffOp(C, {(0, 0): 1, (): -V / (chart.s * chart.s)})
        return base, weighted_operator(chart, gamma=g, lap=base)
    base = laplace_beltrami(chart)
    return base, weighted_operator(chart, gamma=g, lap=base)


def _exact(q) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in q)


def _chop(v: Expr, tol: float = 1e-9) -> Expr:
    if not v.is_constant():
        return v
    x = float(v.evaluate({}))
    if abs(x) < tol:
        return Expr(0)
    snap = Fraction(x).limit_denominator(10**6)
    return Expr(snap) if abs(float(snap) - x) < tol else v


def freeze_at(P: DiffOp, chart: ARChart, q: Sequence, tol: float = 1e-9) -> LimitOperator:
    """Freeze at ``q``; off-lattice (float) points are frozen on their binary
    value and round-off residues below ``tol`` are removed."""
    if _exact(q):
        return freeze(P, chart, q)
    group = isotropy_type(chart, q)
    op = freeze(P, chart, q, group=group)
    terms = {w: _chop(c, tol) for w, c in op.terms.items()}
    terms = {w: c for w, c in terms.items() if not c.is_zero()}
    if group.kind == "Affine":
        group = GroupTag("Affine", 2, tuple(_chop(c, tol) for c in group.bracket))
    return LimitOperator(group, terms, tuple(q), "frozen at a floating-point point", op.names)


def _point_text(q) -> list[str]:
    return [str(v) if isinstance(v, (int, Fraction)) else repr(float(v)) for v in q]


def _h_at(chart: ARChart, q) -> float | None:
    try:
        return float(chart.h.subs(chart.point([Fraction(v) for v in q])).evaluate({}))
    except Exception:
        return None


def _verdict_for(op: LimitOperator, probes: bool) -> tuple[Verdict, dict]:
    """Decide one limit operator; second item holds extra record fields."""
    extra: dict[str, Any] = {}
    if op.group.kind == "Affine":
        norm, info = normalize_affine(op)
        rop = affine_reduce(op)
        T0, Tinf = reduced_boundary_ops(rop)
        extra.update({
            "normalized_operator": str(norm),
            "normalization": info,
            "reduced_operator": str(rop.operator),
            "reduced_measure": rop.base_measure,
            "bessel_order": None if rop.nu is None else str(rop.nu),
            "boundary_operators": {"T0": str(T0), "Tinf": str(Tinf)},
            "_T0": T0, "_Tinf": Tinf, "_nu": rop.nu_float(),
        })
        return decide_affine(rop, probes=probes), extra
    if op.group.n == 2:
        return decide_tangency(op), extra
    return decide_abelian(fourier_symbol(op)), extra


def _analyse(P: DiffOp, chart: ARChart, q, kind: PointClass | None, cfg: ClosureConfig) -> dict:
    cls = kind if kind is not None else classify_point(chart, q)
    rec: dict[str, Any] = {"point": _point_text(q), "classification": str(cls),
                           "exact_point": _exact(q)}
    if cls.kind is PointKind.NONGENERIC:
        rec["verdict"] = Verdict(Status.INCONCLUSIVE, {"kind": "reason", "reason": cls.reason})
        return rec
    h = _h_at(chart, q)
    if h is not None:
        rec["h"] = h
    try:
        op = freeze_at(P, chart, q, cfg.tol)
        rec["isotropy"] = str(op.group)
        if op.group.kind == "Affine":
            rec["raw_bracket"] = [str(c) for c in op.group.bracket]
        rec["limit_operator"] = str(op)
        rec["limit_operator_table"] = op.table()
        verdict, extra = _verdict_for(op, cfg.probes)
        rec.update(extra)
        rec["_op"] = op
        if cfg.probes and verdict.left_invertible and op.group.is_abelian:
            est = numverify.semibound_estimate(op)
            rec["semibound"] = {"c_est": est["c_est"], "per_length": est["per_length"]}
    except Exception as exc:  # an unsupported shape at one point must not sink the report
        log.warning("point %s: %s", q, exc)
        verdict = Verdict(Status.INCONCLUSIVE, {"kind": "reason", "reason": f"{type(exc).__name__}: {exc}"})
    rec["verdict"] = verdict
    return rec


def _zeros_1d(chart: ARChart) -> list:
    (a, b), = chart.window
    x = sympy.Symbol("x", real=True)
    num, _ = sympy.fraction(sympy.together(chart.s.sympy))
    poly = sympy.Poly(num.subs({sym: x for sym in num.free_symbols if sym.name == "x"}), x)
    out = []
    for r in poly.real_roots():
        if a <= r <= b:
            out.append(Fraction(int(r.p), int(r.q)) if r.is_Rational else float(r))
    return sorted(set(out))


def _sample(points: list, n: int) -> list:
    if len(points) <= n:
        return list(points)
    idx = np.unique(np.round(np.linspace(0, len(points) - 1, n)).astype(int))
    return [points[i] for i in idx]


# ---------------------------------------------------------------------------
# reports


@dataclass
class ClosureReport:
    data: dict
    verdicts: list = field(default_factory=list)    # Verdict objects in point order
    operators: list = field(default_factory=list)   # LimitOperator or None per point
    sidecars: dict = field(default_factory=dict)    # internal: csv payloads

    @property
    def conclusion(self) -> dict:
        return self.data["conclusion"]

    @property
    def statuses(self) -> list[Status]:
        return [v.status for v in self.verdicts]

    def to_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, indent=2) + "\n"

    def deterministic_json(self) -> str:
        d = copy.deepcopy(self.data)
        d["provenance"].pop("timestamp", None)
        return json.dumps(d, sort_keys=True, indent=2) + "\n"

    def write(self, directory, csv_files: bool = True, figures: bool = False) -> list[Path]:
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        extra = _write_sidecars(self, out, csv_files, figures) if (csv_files or figures) else []
        # sidecar names are recorded per point, so the report goes last
        path = out / "report.json"
        path.write_text(self.to_json())
        return [path] + extra


def _versions() -> dict:
    return {"arclosure": __version__, "python": platform.python_version(), "sympy": sympy.__version__,
            "numpy": np.__version__, "mpmath": mpmath.__version__}


def _provenance(cfg: ClosureConfig) -> dict:
    return {"config_hash": cfg.digest(), "versions": _versions(), "schema": REPORT_SCHEMA,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")}


def _gamma_text(g: str) -> str:
    return "s" if g == "1" else f"s^{{{g}}}"


def _conclude(cfg: ClosureConfig, records: list, verdicts: list, nongeneric: list, window) -> dict:
    gamma = cfg.effective_gamma
    space = f"{_gamma_text(gamma)}H^2_V"
    space += f"({window[0][0]},{window[0][1]})" if cfg.dim == 1 else "(M)"
    statuses = [v.status for v in verdicts]
    reasons = []
    if not records:
        return {"status": "no-singular-points", "statement": "no singular points in the chart window",
                "claims_domain": False, "reasons": []}
    if nongeneric:
        reasons.append(f"{len(nongeneric)} non-generic point(s); conclusion partial")
    failing = [r for r, v in zip(records, verdicts) if v.status is Status.NOT_LEFT_INVERTIBLE]
    for r in failing[:5]:
        ev = r["verdict"]["evidence"]
        w = ev.get("witness")
        reasons.append(f"not left invertible at {tuple(r['point'])}" + (f", witness {w}" if w is not None else ""))
    incon = [r for r, v in zip(records, verdicts) if v.status is Status.INCONCLUSIVE]
    for r in incon[:5]:
        reasons.append(f"inconclusive at {tuple(r['point'])}: {r['verdict']['evidence'].get('reason', '')}")
    if all(s is Status.LEFT_INVERTIBLE for s in statuses) and not nongeneric:
        return {"status": "complete", "statement": f"D = {space}", "claims_domain": True, "reasons": []}
    if nongeneric:
        status = "partial"
    elif failing:
        status = "withheld"
    else:
        status = "inconclusive"
    return {"status": status, "statement": f"conclusion withheld: D = {space} not established",
            "claims_domain": False, "reasons": reasons}


def _hypothesis(records: list) -> dict:
    hs = [(r["classification"], r.get("h")) for r in records if r.get("h") is not None]
    out = {}
    if any(c == "Tangency" for c, _ in hs):
        out["tangency"] = "requires h > 0 at tangency points"
    if any(c == "Grushin" for c, _ in hs):
        out["grushin"] = "requires h != 0 at Grushin points (decided for 1 + h > 0)"
    vals = [h for _, h in hs]
    out["mixed_sign_h"] = bool(vals) and min(vals) < 0 < max(vals)
    if out["mixed_sign_h"]:
        out["note"] = "h changes sign along the singular set: read verdicts per point"
    return out


def run_closure(cfg: ClosureConfig) -> ClosureReport:
    chart = build_chart(cfg)
    base, P = build_operator(cfg, chart)
    data: dict[str, Any] = {
        "schema": REPORT_SCHEMA,
        "config": cfg.to_dict(),
        "provenance": _provenance(cfg),
        "operator": {
            "defining_function": str(chart.s),
            "h": str(chart.h),
            "base": str(base),
            "gamma": cfg.effective_gamma,
            "weighted": str(P),
            "frame": list(P.frame.names),
            "certified_in_frame": True,
        },
    }
    window = [[str(a), str(b)] for a, b in chart.window]
    nongeneric: list = []
    if cfg.dim == 1:
        pts = [(z,) for z in _zeros_1d(chart)]
        jobs = [(q, None) for q in pts]
        data["scan"] = {"singular_points": len(pts), "sampled": len(pts), "note": "all zeros of s in the window"}
    else:
        scan = genericity_scan(chart, cfg.resolution)
        grushin = [p for p, c in zip(scan.singular_points, scan.classes) if c.kind is PointKind.GRUSHIN]
        chosen = _sample(grushin, cfg.samples)
        jobs = [(q, None) for q in chosen] + [(q, None) for q in scan.tangency_points]
        nongeneric = [(q, reason) for q, reason in scan.nongeneric]
        data["scan"] = {
            "resolution": list(scan.resolution),
            "counts": scan.counts(),
            "singular_points": len(scan.singular_points),
            "sampled": len(chosen),
            "tangency_points": [_point_text(q) for q in scan.tangency_points],
            "nongeneric": [{"point": _point_text(q), "reason": r} for q, r in nongeneric[:50]],
            "note": SAMPLING_NOTE,
        }

    def work(job):
        q, kind = job
        return _analyse(P, chart, q, kind, cfg)

    if cfg.workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            recs = list(pool.map(work, jobs))
    else:
        recs = [work(j) for j in jobs]

    verdicts = [r.pop("verdict") for r in recs]
    ops = [r.pop("_op", None) for r in recs]
    private = [{k: r.pop(k) for k in [k for k in r if k.startswith("_")]} for r in recs]
    for r, v in zip(recs, verdicts):
        r["verdict"] = v.to_dict()
    data["points"] = recs
    data["hypothesis"] = _hypothesis(recs)
    data["conclusion"] = _conclude(cfg, recs, verdicts, nongeneric, window)
    rep = ClosureReport(data, verdicts, ops)
    rep.sidecars = {"private": private, "chart": chart}
    return rep


# ---------------------------------------------------------------------------
# epsilon sandwich (1D, alpha = 0)


def run_epsilon_sandwich(cfg: ClosureConfig, epsilons: Sequence | None = None) -> dict:
    """Limit operators of ``s^{2-g} lap s^g`` at ``x = 0`` for ``g = 3/2 +- eps``."""
    if cfg.dim != 1:
        raise ConfigError("the epsilon sandwich runs on 1D charts")
    eps_list = [str(e) for e in (epsilons if epsilons is not None else cfg.epsilons or ["0.1", "1"])]
    notes = []
    params = dict(cfg.params)
    if params.get("alpha", "0") not in ("0", "0.0"):
        notes.append(f"alpha = {params['alpha']} replaced by 0")
    params["alpha"] = "0"
    c0 = copy.deepcopy(cfg)
    c0.params = params
    chart = build_chart(c0)
    zeros = _zeros_1d(chart)
    if not zeros:
        raise ConfigError("s has no zero in the window")
    q = (zeros[0],)
    _, Pg = build_operator(c0, chart, gamma=parse("gamma"))
    rows = []
    for e in eps_list:
        eps = parse(e)
        if eps.as_fraction() < 0:
            raise ConfigError(f"eps must be non-negative, got {e}")
        row: dict[str, Any] = {"eps": e}
        for side, g in (("plus", parse("3/2") + eps), ("minus", parse("3/2") - eps)):
            op = freeze(Pg.subs({"gamma": g}), chart, q, provenance=f"gamma = 3/2 {'+' if side == 'plus' else '-'} {e}")
            v = decide_abelian(fourier_symbol(op))
            entry = {"gamma": str(g), "limit_operator": str(op), "verdict": v.to_dict()}
            if side == "plus":
                expected = LimitOperator(op.group, {k: c for k, c in {
                    (0, 0): Expr(1), (0,): 2 * (1 + eps), (): eps * (2 + eps)}.items() if not c.is_zero()}, q,
                    names=op.names)
                entry["matches_expected_form"] = op == expected
                entry["expected"] = str(expected)
            row[side] = entry
        rows.append(row)
    good = [r["eps"] for r in rows if r["plus"]["verdict"]["status"] == "LeftInvertible"]
    statement = ("union over eps > 0 of s^{3/2+eps}H^2_V(0,1) is contained in D, "
                 "and D is contained in the intersection of s^{3/2-eps}H^2_V(0,1)")
    return {
        "schema": REPORT_SCHEMA,
        "mode": "epsilon-sandwich",
        "config": c0.to_dict(),
        "provenance": _provenance(c0),
        "point": _point_text(q),
        "rows": rows,
        "left_invertible_eps": good,
        "statement": statement,
        "notes": notes,
    }


# ---------------------------------------------------------------------------
# sidecars


def _write_csv(path: Path, header: Sequence[str], rows) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in r])
    return path


def bessel_rows(nu: float, count: int = 60, lo: float = 0.05, hi: float = 7.0) -> list[tuple]:
    """``(x, I_nu(x^2/2), K_nu(x^2/2), shell_sum_I, shell_sum_K)``; the shell
    sums integrate ``|.|^2 / x^3`` from the previous grid point."""
    xs = np.geomspace(lo, hi, count)
    gi = lambda t: np.array([specfun.iv(nu, 0.5 * v * v) ** 2 / v**3 for v in np.ravel(t)]).reshape(np.shape(t))
    gk = lambda t: np.array([specfun.kv(nu, 0.5 * v * v) ** 2 / v**3 for v in np.ravel(t)]).reshape(np.shape(t))
    rows = []
    prev = None
    for x in xs:
        si = sk = 0.0
        if prev is not None:
            si = numverify.gauss_legendre(gi, prev, x, points=8)
            sk = numverify.gauss_legendre(gk, prev, x, points=8)
        rows.append((float(x), specfun.iv(nu, 0.5 * x * x), specfun.kv(nu, 0.5 * x * x), si, sk))
        prev = x
    return rows


def _write_sidecars(rep: ClosureReport, out: Path, csv_files: bool, figures: bool) -> list[Path]:
    from . import plotting

    written: list[Path] = []
    seen: dict[str, str] = {}

    def symbol_file(op: LimitOperator, tag: str, verdict: Verdict | None):
        key = f"{op.group}|{op}"
        if key in seen:
            return seen[key]
        name = f"symbol_{len(seen):03d}_{tag}"
        sym = fourier_symbol(op)
        rows = symbol_samples(sym)
        if csv_files:
            written.append(_write_csv(out / f"{name}.csv", ("xi", "abs_symbol_sq"), rows))
        if figures:
            inf = None
            if verdict is not None and "infimum_float" in verdict.evidence:
                inf = verdict.evidence["infimum_float"]
            written.append(plotting.symbol_figure(rows, out / f"{name}.png", title=str(op), infimum=inf))
        seen[key] = name
        return name

    bessel_seen: dict[float, str] = {}
    private = rep.sidecars.get("private", [{}] * len(rep.operators))
    for rec, op, v, priv in zip(rep.data["points"], rep.operators, rep.verdicts, private):
        if op is None:
            continue
        files = []
        if op.group.is_abelian:
            files.append(symbol_file(op, "point", v))
        else:
            if "_T0" in priv:
                files.append(symbol_file(priv["_T0"], "T0", v.subverdicts.get("T0")))
                files.append(symbol_file(priv["_Tinf"], "Tinf", v.subverdicts.get("Tinf")))
            nu = priv.get("_nu")
            if nu is not None and 0 < nu <= specfun.NU_MAX:
                if nu not in bessel_seen:
                    name = f"bessel_{len(bessel_seen):03d}"
                    rows = bessel_rows(nu)
                    if csv_files:
                        written.append(_write_csv(out / f"{name}.csv",
                                                  ("x", "I_nu", "K_nu", "shell_sum_I", "shell_sum_K"), rows))
                    if figures:
                        written.append(plotting.bessel_figure(rows, out / f"{name}.png", nu))
                    bessel_seen[nu] = name
                files.append(bessel_seen[nu])
        rec["sidecars"] = files
    if figures and rep.data["config"]["chart"]["dim"] == 2:
        pts = [(float(Fraction(r["point"][0])), float(Fraction(r["point"][1])), r["classification"].split(":")[0])
               for r in rep.data["points"]]
        for ng in rep.data.get("scan", {}).get("nongeneric", []):
            pts.append((float(Fraction(ng["point"][0])), float(Fraction(ng["point"][1])), "NonGeneric"))
        window = [[float(parse(v).as_fraction()) for v in iv] for iv in rep.data["config"]["chart"]["window"]]
        written.append(plotting.scan_figure(pts, window, out / "scan.png"))
    (out / "report.json").write_text(rep.to_json())
    return written
