"""Figures written next to the CSV sidecars of a closure report."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.figsize": (4.5, 3.0),
    "savefig.dpi": 120,
}

_KIND_STYLE = {
    "Grushin": dict(marker=".", color="tab:blue"),
    "Tangency": dict(marker="*", color="tab:red", s=80),
    "NonGeneric": dict(marker="x", color="k"),
    "Endpoint": dict(marker="o", color="tab:green"),
}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def symbol_figure(rows, path, title: str = "", infimum: float | None = None) -> Path:
    """``|p(i xi)|^2`` along the first frequency axis."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        xs, ys = zip(*rows)
        ax.semilogy(xs, [max(y, 1e-16) for y in ys], lw=1.2)
        if infimum is not None:
            ax.axhline(max(infimum, 1e-16), ls="--", lw=0.8, color="gray", label=f"inf = {infimum:.6g}")
            ax.legend(frameon=False)
        ax.set_xlabel(r"$\xi$")
        ax.set_ylabel(r"$|p(i\xi)|^2$")
        if title:
            ax.set_title(title, fontsize=9)
        return _save(fig, Path(path))


def bessel_figure(rows, path, nu: float) -> Path:
    """``I_nu(x^2/2)`` and ``K_nu(x^2/2)`` on log axes."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        x = [r[0] for r in rows]
        ax.loglog(x, [r[1] for r in rows], label=r"$I_\nu(x^2/2)$")
        ax.loglog(x, [r[2] for r in rows], label=r"$K_\nu(x^2/2)$")
        ax.set_xlabel("x")
        ax.set_title(rf"$\nu = {nu:.4g}$", fontsize=9)
        ax.legend(frameon=False)
        return _save(fig, Path(path))


def scan_figure(points, window, path) -> Path:
    """Sampled singular points coloured by class; ``points`` holds
    ``(x, y, kind)`` triples."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 3.6))
        for kind, style in _KIND_STYLE.items():
            sel = [(p[0], p[1]) for p in points if p[2] == kind]
            if sel:
                xs, ys = zip(*sel)
                ax.scatter(xs, ys, label=kind, **style)
        (x0, x1), (y0, y1) = window
        ax.set_xlim(x0, x1)
        ax.set_ylim(y0, y1)
        ax.set_aspect("equal")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.legend(frameon=False, loc="best")
        return _save(fig, Path(path))
