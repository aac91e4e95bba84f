"""Matplotlib renderings of the sweep tables written by the CLI."""

from __future__ import annotations

import math
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

golden_mean = (math.sqrt(5) - 1.0) / 2.0
fig_width = 3.4
params = {
    "axes.labelsize": 9,
    "font.size": 8,
    "font.family": "serif",
    "mathtext.fontset": "stix",
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": [fig_width, fig_width * golden_mean],
    "lines.linewidth": 1,
    "figure.dpi": 200,
}


def phase_label(phi):
    frac = phi / math.pi
    for num, den in ((0, 1), (1, 4), (1, 2), (3, 4), (1, 1), (1, 6), (1, 3), (2, 3), (5, 6)):
        if abs(frac - num / den) < 1e-9:
            if num == 0:
                return r"$\varphi=0$"
            if den == 1:
                return r"$\varphi=\pi$"
            top = r"\pi" if num == 1 else rf"{num}\pi"
            return rf"$\varphi={top}/{den}$"
    return rf"$\varphi={phi:.3g}$"


def _series(rows, key, value, width):
    out = defaultdict(lambda: ([], []))
    for row in rows:
        if row[value] is None:
            continue
        xs, ys = out[row[key]]
        xs.append(row["s"] / width)
        ys.append(row[value] * width**2)
    return out


def plot_curves(rows, value, path, ylabel, width=1.0, bound=None, ylim=None):
    """One line per phase of ``value`` against ``s``, in PSF-width units; saves to ``path``."""
    with plt.rc_context(params):
        fig, ax = plt.subplots()
        for phi, (xs, ys) in _series(rows, "phi", value, width).items():
            label = phase_label(phi) if isinstance(phi, float) else phi
            ax.plot(xs, ys, label=label)
        if bound is not None:
            ax.axhline(bound * width**2, color="0.5", lw=0.6, ls="--")
        ax.set_xlabel(r"$s/\sigma$")
        ax.set_ylabel(ylabel)
        if ylim is not None:
            ax.set_ylim(*ylim)
        ax.set_xlim(left=0)
        ax.legend(frameon=False)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def plot_qfi_sweep(rows, path, p2, width=1.0):
    plot_curves(rows, "qfi", path, r"$F\,\sigma^2$", width, ylim=(0, 6 * p2 * width**2))


def plot_total_sweep(rows, path, p2, width=1.0):
    plot_curves(rows, "f_total", path, r"$F_{\mathrm{tot}}\,\sigma^2$", width, bound=p2,
                ylim=(0, 1.1 * p2 * width**2))


def plot_classical_sweep(rows, path, p2, width=1.0):
    plot_curves(rows, "f_classical", path, r"$F_{\mathrm{cl}}\,\sigma^2$", width, bound=p2)
