"""Matplotlib renderings of convergence tables and adaptive traces."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["convergence_figure", "adaptive_figure", "effectivity_figure"]

_STYLES = {
    "e": ("o-", "tab:blue", r"$e$"),
    "De": ("s-", "tab:orange", r"$De$"),
    "Die": ("^-", "tab:green", r"$D_ie$"),
    "Dre": ("d-", "tab:red", r"$D_re$"),
}


def _reference_slope(ax, dofs, anchor, slope, label):
    dofs = np.asarray(dofs, float)
    ref = anchor * (dofs / dofs[0]) ** (-slope)
    ax.loglog(dofs, ref, "k--", linewidth=0.8, alpha=0.6)
    ax.annotate(label, (dofs[-1], ref[-1]), textcoords="offset points",
                xytext=(4, 0), fontsize=8)


def convergence_figure(rows, path):
    """Log-log errors against DOF with slope guides."""
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    dofs = [r.dof for r in rows]
    for name, (marker, color, label) in _STYLES.items():
        vals = [getattr(r, name) for r in rows]
        ax.loglog(dofs, vals, marker, color=color, label=label,
                  markersize=4)
    _reference_slope(ax, dofs, rows[0].e * 0.6, 1.0, "slope -1")
    _reference_slope(ax, dofs, rows[0].De * 1.4, 0.5, "slope -1/2")
    ax.set_xlabel("degrees of freedom")
    ax.set_ylabel("error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="lower left", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def adaptive_figure(rows, path):
    """Indicator (and errors when available) against DOF."""
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    dofs = [r.dof for r in rows]
    ax.loglog(dofs, [r.eta for r in rows], "v-", color="tab:purple",
              label=r"$\eta_h$", markersize=4)
    if rows[0].e is not None:
        for name, (marker, color, label) in _STYLES.items():
            vals = [getattr(r, name) for r in rows]
            ax.loglog(dofs, vals, marker, color=color, label=label,
                      markersize=4)
    ax.set_xlabel("degrees of freedom")
    ax.set_ylabel("error / estimator")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="lower left", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def effectivity_figure(rows, path):
    """Effectivity index against DOF with the exactness line at one."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    dofs = [r.dof for r in rows]
    kappas = [r.kappa for r in rows]
    ax.semilogx(dofs, kappas, "o-", color="tab:blue", markersize=4)
    ax.axhline(1.0, color="k", linewidth=0.8, linestyle="--", alpha=0.6)
    ax.set_xlabel("degrees of freedom")
    ax.set_ylabel(r"effectivity index $\kappa$")
    ax.set_ylim(0.0, max(2.0, max(kappas) * 1.15))
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
