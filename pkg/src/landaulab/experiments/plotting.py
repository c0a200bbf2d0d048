"""Static PNG figures for scenario reports (Agg backend)."""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.6),
    "figure.dpi": 120,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "savefig.bbox": "tight",
}

LOGLOG = {"counterexample-scaling", "eigenvalue-anisotropy"}


def _plot_series(ax, cols, rows, loglog):
    x = [r[0] for r in rows]
    for j, name in enumerate(cols[1:], start=1):
        y = [r[j] for r in rows]
        style = "--" if name == "fitted" else "o-"
        ax.plot(x, y, style, label=name, ms=4, lw=1.2)
    if loglog:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel(cols[0])
    ax.legend()


def render(report, out_dir):
    """One PNG per series of ``report``; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    with plt.rc_context(STYLE):
        for name, (cols, rows) in report.series.items():
            if not rows:
                continue
            fig, ax = plt.subplots()
            loglog = report.scenario in LOGLOG or name.startswith("ratio_")
            if report.scenario == "shell-estimate":
                ax.set_yscale("log")
            _plot_series(ax, cols, rows, loglog)
            ax.set_title(f"{report.scenario}: {name}")
            path = os.path.join(out_dir, f"{report.scenario}_{name}.png")
            fig.savefig(path, metadata={"Software": None})
            plt.close(fig)
            paths.append(path)
    return paths
