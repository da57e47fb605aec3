"""Command line interface.

Exit codes: 0 success, 1 selftest failure, 2 configuration or input error,
3 non-generic points or inconclusive verdicts present, 4 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__

EXIT_OK, EXIT_SELFTEST, EXIT_CONFIG, EXIT_INCONCLUSIVE, EXIT_INTERNAL = 0, 1, 2, 3, 4


class InputError(ValueError):
    pass


def _point(text: str) -> tuple:
    try:
        parts = [p.strip() for p in text.split(",")]
        return tuple(Fraction(p) for p in parts)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad point {text!r}: {exc}") from exc


def _params(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise InputError(f"--param expects name=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _window(text: str | None, dim: int):
    if text is None:
        return None
    nums = [p.strip() for p in text.split(",")]
    if len(nums) != 2 * dim:
        raise InputError(f"--window needs {2 * dim} numbers")
    return [[nums[2 * i], nums[2 * i + 1]] for i in range(dim)]


def _chart_args(p: argparse.ArgumentParser, point: bool = False):
    p.add_argument("--f", help="f(x, y) for a 2D chart")
    p.add_argument("--s", help="defining function (1D: s(x), default x*(1-x))")
    p.add_argument("--h", default="0", help="potential h (2D)")
    p.add_argument("--alpha", help="1D model parameter alpha")
    p.add_argument("--param", action="append", help="bind a parameter, name=value")
    p.add_argument("--window", help="x0,x1[,y0,y1]")
    p.add_argument("--gamma", help="weight exponent (default 3/2 in 1D, 1 in 2D)")
    if point:
        p.add_argument("--point", required=True, help="x or x,y")


def _config_from_args(a, **over):
    from .pipeline import ClosureConfig

    params = _params(getattr(a, "param", None))
    if getattr(a, "alpha", None) is not None:
        params["alpha"] = a.alpha
    dim = 2 if a.f is not None else 1
    kw = dict(dim=dim, h=a.h, params=params, gamma=a.gamma)
    if dim == 2:
        kw["f"] = a.f
        if a.s is not None:
            kw["s"] = a.s
    else:
        kw["s"] = a.s or "x*(1-x)"
    w = _window(a.window, dim)
    if w is not None:
        kw["window"] = w
    kw.update(over)
    return ClosureConfig(**kw)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


# ---------------------------------------------------------------------------


def cmd_classify(a) -> int:
    from .frames import PointKind, classify_point, genericity_scan
    from .pipeline import build_chart

    cfg = _config_from_args(a)
    chart = build_chart(cfg)
    if a.point:
        c = classify_point(chart, _point(a.point))
        print(c)
        return EXIT_INCONCLUSIVE if c.kind is PointKind.NONGENERIC else EXIT_OK
    scan = genericity_scan(chart, a.resolution)
    print(_dump({"counts": scan.counts(),
                 "tangency_points": [[str(v) for v in q] for q in scan.tangency_points],
                 "nongeneric": [{"point": [str(v) for v in q], "reason": r} for q, r in scan.nongeneric[:20]]}))
    return EXIT_INCONCLUSIVE if scan.nongeneric else EXIT_OK


def cmd_laplacian(a) -> int:
    from .frames import laplace_beltrami
    from .pipeline import build_chart, build_operator

    cfg = _config_from_args(a)
    chart = build_chart(cfg)
    if chart.dim == 2:
        print(laplace_beltrami(chart))
    else:
        print(build_operator(cfg, chart)[0])
    return EXIT_OK


def cmd_conjugate(a) -> int:
    from .pipeline import build_chart, build_operator
    from .symexpr import parse

    cfg = _config_from_args(a)
    chart = build_chart(cfg)
    g = parse(a.gamma) if a.gamma else None
    _, P = build_operator(cfg, chart, gamma=g)
    print(f"frame: {', '.join(P.frame.names)}")
    print(P)
    return EXIT_OK


def _limit_op(a):
    from .pipeline import build_chart, build_operator, freeze_at

    cfg = _config_from_args(a)
    chart = build_chart(cfg)
    _, P = build_operator(cfg, chart)
    return freeze_at(P, chart, _point(a.point), cfg.tol)


def cmd_limit_op(a) -> int:
    from .limits import normalize_affine

    op = _limit_op(a)
    print(f"{op}    [{op.group}]")
    if op.group.kind == "Affine":
        norm, info = normalize_affine(op)
        if norm != op:
            print(f"normalized: {norm}    [{norm.group}, scale {info['overall_scale']}]")
    return EXIT_OK


def cmd_decide(a) -> int:
    from .invert import Status, affine_reduce, decide_abelian, decide_affine, fourier_symbol, parse_abelian

    if a.abelian:
        op = parse_abelian(a.abelian, _params(a.param))
        v = decide_abelian(fourier_symbol(op))
        head = str(op)
    else:
        if a.point is None:
            raise InputError("decide needs --abelian or a chart with --point")
        op = _limit_op(a)
        head = f"{op}    [{op.group}]"
        if op.group.kind == "Affine":
            v = decide_affine(affine_reduce(op), probes=a.probes)
        else:
            v = decide_abelian(fourier_symbol(op))
    print(head)
    print(v)
    if a.json:
        print(_dump(v.to_dict()))
    return EXIT_INCONCLUSIVE if v.status is Status.INCONCLUSIVE else EXIT_OK


def _finish_report(rep_dict: dict, out: str | None):
    text = json.dumps(rep_dict, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_or_build(a):
    from .pipeline import load_config

    if a.config:
        return load_config(a.config)
    if a.f is None and a.s is None and a.alpha is None:
        raise InputError("give --config or chart options")
    return _config_from_args(a)


def cmd_closure(a) -> int:
    from .pipeline import run_closure

    cfg = _load_or_build(a)
    if a.workers:
        cfg.workers = a.workers
    if a.samples:
        cfg.samples = a.samples
    if a.probes:
        cfg.probes = True
    out_dir = a.emit_csv or (cfg.directory if cfg.emit_csv or cfg.figures else None)
    rep = run_closure(cfg)
    if out_dir:
        figures = not a.no_figures
        written = rep.write(out_dir, csv_files=True, figures=figures)
        print(f"wrote {len(written)} file(s) to {out_dir}", file=sys.stderr)
    _finish_report(rep.data, a.output)
    c = rep.conclusion
    print(f"conclusion: {c['statement']} [{c['status']}]", file=sys.stderr)
    return EXIT_INCONCLUSIVE if c["status"] in ("partial", "inconclusive") else EXIT_OK


def cmd_sandwich(a) -> int:
    from .pipeline import run_epsilon_sandwich

    cfg = _load_or_build(a) if (a.config or a.s) else _config_from_args(a)
    eps = a.eps.split(",") if a.eps else None
    rep = run_epsilon_sandwich(cfg, eps)
    _finish_report(rep, a.output)
    for row in rep["rows"]:
        p = row["plus"]
        print(f"eps = {row['eps']}: {p['limit_operator']} -> {p['verdict']['status']}", file=sys.stderr)
    return EXIT_OK


def cmd_selftest(a) -> int:
    from .acceptance import run_all

    results = run_all(verbose=a.verbose)
    n_ok = sum(r.passed for r in results)
    total = sum(r.elapsed for r in results)
    print(f"{n_ok}/{len(results)} criteria passed in {total:.1f}s")
    return EXIT_OK if n_ok == len(results) else EXIT_SELFTEST


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="arclosure", description="Closure of singular Laplacians on almost-Riemannian charts")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose-log", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("classify", help="classify a point or scan the chart window")
    _chart_args(s)
    s.add_argument("--point")
    s.add_argument("--resolution", type=int, default=64)
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("laplacian", help="print the Laplace-Beltrami operator")
    _chart_args(s)
    s.set_defaults(func=cmd_laplacian)

    s = sub.add_parser("conjugate", help="weighted conjugate in the Lie frame")
    _chart_args(s)
    s.set_defaults(func=cmd_conjugate)

    s = sub.add_parser("limit-op", help="limit operator at a singular point")
    _chart_args(s, point=True)
    s.set_defaults(func=cmd_limit_op)

    s = sub.add_parser("decide", help="left invertibility of a limit operator")
    _chart_args(s)
    s.add_argument("--point")
    s.add_argument("--abelian", help="constant-coefficient operator, e.g. 'D2 + 2*D - a'")
    s.add_argument("--probes", action="store_true", help="attach numeric integrability probes")
    s.add_argument("--json", action="store_true", help="also print the verdict as JSON")
    s.set_defaults(func=cmd_decide)

    s = sub.add_parser("closure", help="full closure analysis")
    _chart_args(s)
    s.add_argument("--config", help="TOML config file")
    s.add_argument("--emit-csv", metavar="DIR", help="write report.json, CSV sidecars and figures to DIR")
    s.add_argument("--no-figures", action="store_true")
    s.add_argument("--output", "-o", help="report path (default stdout)")
    s.add_argument("--workers", type=int)
    s.add_argument("--samples", type=int)
    s.add_argument("--probes", action="store_true")
    s.set_defaults(func=cmd_closure)

    s = sub.add_parser("sandwich", help="epsilon sandwich for the 1D model")
    _chart_args(s)
    s.add_argument("--config")
    s.add_argument("--eps", help="comma separated list, default from config or 0.1,1")
    s.add_argument("--output", "-o")
    s.set_defaults(func=cmd_sandwich)

    s = sub.add_parser("selftest", help="run the acceptance checks")
    s.add_argument("--verbose", action="store_true")
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if a.verbose_log else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    from .pipeline import ConfigError
    from .symexpr import ParseError

    try:
        return a.func(a)
    except (ConfigError, InputError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        from .frames import NormalFormError
        from .limits import NonGenericPoint, UnsupportedShape
        from .opalgebra import NotInFrameAlgebra

        if isinstance(exc, (NonGenericPoint,)):
            print(f"non-generic: {exc}", file=sys.stderr)
            return EXIT_INCONCLUSIVE
        if isinstance(exc, (UnsupportedShape, NotInFrameAlgebra, NormalFormError, ValueError)):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        logging.getLogger(__name__).exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
