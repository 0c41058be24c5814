"""Figures written next to the CSV reports.  Uses the non-interactive Agg backend."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .model import SPECIES  # noqa: E402

COLORS = {"f": "#c0392b", "m": "#2c7fb8", "s": "#31a354", "r": "#756bb1"}

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
}

# no timestamps or version strings, so reruns give identical bytes
_META = {"Software": None}


def _save(fig, path):
    fig.savefig(path, metadata=_META)
    plt.close(fig)


def plot_time_series(result, path, title=None):
    """L2 norms (log scale) and min/max envelopes of the four species."""
    with plt.rc_context(RC):
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.2), constrained_layout=True)
        for k, s in enumerate(SPECIES):
            norms = np.maximum(result.l2[:, k], 1e-300)
            ax1.semilogy(result.times, norms, color=COLORS[s], label=s)
            ax2.fill_between(result.times, result.mins[:, k], result.maxs[:, k], color=COLORS[s], alpha=0.3)
            ax2.plot(result.times, result.maxs[:, k], color=COLORS[s], lw=0.8, label=s)
        ax1.set_xlabel("t")
        ax1.set_ylabel("L2 norm")
        ax2.set_xlabel("t")
        ax2.set_ylabel("min / max density")
        ax2.axhline(0.0, color="k", lw=0.5)
        ax1.legend(ncol=2)
        if title:
            fig.suptitle(title)
        _save(fig, path)


def plot_bifurcation(records, path):
    """Analytic f* branches against beta with the simulated long-time mean of f."""
    betas = np.array([r.beta for r in records])
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(5, 3.5), constrained_layout=True)
        for name, style in (("origin", "-"), ("plus-branch", "-"), ("minus-branch", "--"), ("degenerate", "o")):
            xs, ys, stable = [], [], []
            for rec in records:
                for ss in rec.branches:
                    if ss.branch == name:
                        xs.append(rec.beta)
                        ys.append(ss.f_star)
                        stable.append(ss.classification == "stable")
            if not xs:
                continue
            xs, ys, stable = map(np.array, (xs, ys, stable))
            ax.plot(xs[stable], ys[stable], "k.", ms=3)
            ax.plot(xs[~stable], ys[~stable], "x", color="0.5", ms=4)
        ax.plot(betas, [r.means[0] for r in records], "o", mfc="none", color=COLORS["f"], label="simulated mean f")
        ax.plot([], [], "k.", label="stable branch")
        ax.plot([], [], "x", color="0.5", label="unstable branch")
        ax.set_xlabel("beta")
        ax.set_ylabel("f*")
        ax.legend()
        _save(fig, path)


def plot_comparison(results: dict, path):
    """Minimum of s over time for each model; negative values mark the pathology."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(5, 3.2), constrained_layout=True)
        for (name, res), ls in zip(results.items(), ("-", "--", ":")):
            if res is None:
                continue
            ax.plot(res.times, res.mins[:, 2], ls, label=f"{name}: min s")
        ax.axhline(0.0, color="k", lw=0.5)
        ax.set_xlabel("t")
        ax.set_ylabel("min s")
        ax.legend()
        _save(fig, path)


def plot_probe(report, path):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(5, 3.2), constrained_layout=True)
        ax.plot(report.times, report.ratios, label=f"eps={report.epsilon:.3g}")
        ax.plot(report.times, report.ratios_half, "--", label=f"eps={report.epsilon / 2:.3g}")
        ax.set_xlabel("t")
        ax.set_ylabel("||Z* - Z**|| / eps")
        ax.legend()
        _save(fig, path)
