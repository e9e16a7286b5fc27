"""SVG figures for the CLI.

Figures are built with the object-oriented API (no pyplot state) and saved
with a fixed hash salt and no timestamp, so reruns produce identical files.
"""

import matplotlib
from matplotlib.figure import Figure

matplotlib.rcParams["svg.hashsalt"] = "hpcond"
matplotlib.rcParams["svg.fonttype"] = "none"

__all__ = ["k_panel", "propagation_figure", "save_svg", "sigma2_histogram", "temperature_fits", "trace_plot"]


def save_svg(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})


def trace_plot(ax, steps, lp, lp_pivot=None):
    ax.plot(steps, lp, lw=0.6, color="tab:blue", label="x")
    if lp_pivot is not None and len(lp_pivot):
        ax.plot(steps, lp_pivot, lw=0.6, color="tab:orange", alpha=0.7, label="x'")
    ax.set_xlabel("step")
    ax.set_ylabel("log posterior")
    ax.legend(loc="lower right", fontsize="small")


def sigma2_histogram(ax, edges, counts):
    ax.stairs(counts, edges, fill=True, color="tab:gray")
    ax.set_xlabel(r"$\sigma_2$")
    ax.set_ylabel("density")


def k_panel(ax, t, k_true, k_map, k_cm, k_samples=(), bands=None, t_knots=None):
    for ks in k_samples:
        ax.plot(t, ks, lw=0.4, color="0.75", zorder=1)
    if bands is not None:
        ax.fill_between(t_knots, bands[0], bands[-1], color="tab:blue", alpha=0.15, lw=0, label="95% band")
    ax.plot(t, k_true, color="k", lw=1.5, label="true")
    ax.plot(t, k_map, color="tab:red", lw=1.2, ls="--", label="MAP")
    ax.plot(t, k_cm, color="tab:green", lw=1.2, ls="-.", label="CM")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("k [W/(m K)]")
    ax.legend(loc="lower right", fontsize="small")


def temperature_fits(ax, t, fits, data_t, data, label):
    for name, curve, style in fits:
        ax.plot(t, curve, style, lw=1.0, label=name)
    ax.plot(data_t, data, "k.", ms=4, label="data")
    ax.set_xlabel("t [s]")
    ax.set_ylabel(f"T({label}) [K]")
    ax.legend(loc="lower right", fontsize="small")


def chain_figure(trace, hist, kdata):
    """Three panels: log-posterior trace, sigma2 histogram, conductivity."""
    fig = Figure(figsize=(12, 3.6))
    axes = fig.subplots(1, 3)
    trace_plot(axes[0], *trace)
    sigma2_histogram(axes[1], *hist)
    k_panel(axes[2], **kdata)
    fig.tight_layout()
    return fig


def propagation_figure(result):
    """One column per SNR: conductivity ensemble, variance at r=0 and r=R."""
    ncol = len(result.snr_list)
    fig = Figure(figsize=(4.5 * ncol, 9))
    axes = fig.subplots(3, ncol, squeeze=False)
    t = result.t_grid
    for j, snr in enumerate(result.snr_list):
        ax = axes[0, j]
        for ks in result.k_samples[j]:
            ax.plot(t, ks, lw=0.3, color="tab:blue", alpha=0.3)
        ax.set_title(f"SNR = {snr:g}")
        ax.set_ylabel("k [W/(m K)]")
        axes[1, j].plot(t, result.var_center[j], color="tab:red")
        axes[1, j].set_ylabel("Var T(0, t) [K$^2$]")
        axes[2, j].plot(t, result.var_boundary[j], color="tab:red")
        axes[2, j].set_ylabel("Var T(R, t) [K$^2$]")
        axes[2, j].set_xlabel("t [s]")
    fig.tight_layout()
    return fig
