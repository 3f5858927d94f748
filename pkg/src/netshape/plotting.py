"""Figure rendering for sweep and shaping reports.

Kept separate so the core never imports matplotlib; the CLI pulls this in
only when plots are requested.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["render_sweep_figures", "render_trace_figure"]

_STYLE = {
    "netshape": {"color": "#c0392b", "marker": "o"},
    "rand": {"color": "#7f8c8d", "marker": "s"},
    "degree": {"color": "#2980b9", "marker": "^"},
    "wdegree": {"color": "#27ae60", "marker": "v"},
    "netshield": {"color": "#8e44ad", "marker": "d"},
}


def _series(rows, attr):
    by_method: dict[str, tuple[list[float], list[float]]] = {}
    for row in rows:
        value = getattr(row, attr)
        if value is None or row.error:
            continue
        xs, ys = by_method.setdefault(row.method, ([], []))
        xs.append(row.k)
        ys.append(value)
    return by_method


def _line_figure(by_method, ylabel, title):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for method, (xs, ys) in by_method.items():
        style = _STYLE.get(method, {})
        ax.plot(xs, ys, label=method, markersize=4, linewidth=1.4, **style)
    ax.set_xlabel("budget k")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.set_xscale("log")
    ax.grid(True, alpha=0.3)
    ax.legend(frameon=False, fontsize=9)
    fig.tight_layout()
    return fig


def render_sweep_figures(rows, n: int, outdir) -> list[str]:
    """Write one SVG per populated measure; returns the paths written."""
    written: list[str] = []
    rho = _series(rows, "rho")
    if any(ys for _, ys in rho.values()):
        fig = _line_figure(rho, "hazard radius", "Radius after intervention")
        path = str(outdir / "rho_vs_budget.svg")
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    sigma = _series(rows, "sigma_mean")
    if any(ys for _, ys in sigma.values()):
        for xs_ys in sigma.values():
            xs_ys[1][:] = [y / n for y in xs_ys[1]]
        fig = _line_figure(sigma, "influence / n", "Influence after intervention")
        path = str(outdir / "influence_vs_budget.svg")
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    return written


def render_trace_figure(trace_rho, path) -> None:
    """Radius trajectory of one shaping run."""
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(range(1, len(trace_rho) + 1), trace_rho,
            color="#c0392b", linewidth=1.2)
    ax.set_xlabel("iteration")
    ax.set_ylabel("hazard radius")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(str(path))
    plt.close(fig)
