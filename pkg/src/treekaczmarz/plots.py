"""Figure rendering for the report commands.

Every function writes one PNG next to the delimited output; the CSV
stays the authoritative record and the figures are a convenience view.
Rendering always goes through the Agg backend so it works headless.
"""

from __future__ import annotations

import matplotlib

if matplotlib.get_backend().lower() != "agg":
    matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .sor import OmegaSweep

__all__ = [
    "save_sweep_plot",
    "save_trace_plot",
    "save_error_sim_plot",
    "save_curve_comparison_plot",
    "save_experiment_plot",
]


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_sweep_plot(sweep: OmegaSweep, path, title: str | None = None) -> None:
    """Spectral radius against the relaxation parameter, optimum marked."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(sweep.omegas, sweep.radii, lw=1.2)
    ax.axhline(1.0, color="gray", lw=0.8, ls="--")
    ax.plot([sweep.omega_opt], [sweep.rho_opt], "o", color="tab:red", ms=5)
    ax.annotate(
        f"opt ({sweep.omega_opt:.4g}, {sweep.rho_opt:.4g})",
        (sweep.omega_opt, sweep.rho_opt),
        textcoords="offset points",
        xytext=(6, 8),
        fontsize=8,
    )
    if not sweep.limit_open:
        ax.axvline(sweep.omega_limit, color="tab:orange", lw=0.8, ls=":")
    ax.set_xlabel("relaxation parameter")
    ax.set_ylabel("spectral radius")
    if title:
        ax.set_title(title)
    _finish(fig, path)


def save_trace_plot(change_norms, path, errors=None) -> None:
    """Per-iteration change norm (and error, when a reference is known)."""
    fig, ax = plt.subplots(figsize=(6, 4))
    its = np.arange(1, len(change_norms) + 1)
    ax.semilogy(its, np.maximum(change_norms, 1e-300), label="change norm")
    if errors is not None:
        ax.semilogy(its, np.maximum(errors, 1e-300), label="error vs reference")
        ax.legend(fontsize=8)
    ax.set_xlabel("iteration")
    ax.set_ylabel("norm")
    _finish(fig, path)


def save_error_sim_plot(drift, deviations, bound, path) -> None:
    """Noise response of the iteration with the stability bound."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(np.arange(1, len(drift) + 1), drift, lw=0.9, label="drift from clean run")
    if len(deviations):
        ax.plot(
            np.arange(1, len(deviations) + 1),
            deviations,
            lw=0.9,
            label="distance to clean limit",
        )
    if np.isfinite(bound):
        ax.axhline(bound, color="tab:red", lw=1.0, ls="--", label="bound")
    ax.set_xlabel("iteration")
    ax.set_ylabel("deviation")
    ax.legend(fontsize=8)
    _finish(fig, path)


def save_curve_comparison_plot(omegas, analytic, numeric, path, title=None) -> None:
    """Closed-form radius curve overlaid on the numerically computed one."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(omegas, analytic, lw=1.4, label="closed form")
    ax.plot(omegas, numeric, lw=1.0, ls="--", label="numeric")
    ax.axhline(1.0, color="gray", lw=0.8, ls=":")
    ax.set_xlabel("relaxation parameter")
    ax.set_ylabel("spectral radius")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    _finish(fig, path)


def save_experiment_plot(report, path) -> None:
    """Radius curves of every benchmark run, one panel per system size."""
    sizes = sorted({row.size for row in report.rows})
    fig, axes = plt.subplots(1, len(sizes), figsize=(6 * len(sizes), 4), squeeze=False)
    for ax, size in zip(axes[0], sizes):
        for row in report.rows:
            if row.size != size:
                continue
            ax.plot(
                row.standard.sweep.omegas,
                row.standard.sweep.radii,
                lw=1.0,
                label=f"{row.kind} chain",
            )
            ax.plot(
                row.distributed.sweep.omegas,
                row.distributed.sweep.radii,
                lw=1.0,
                ls="--",
                label=f"{row.kind} tree",
            )
        ax.axhline(1.0, color="gray", lw=0.8, ls=":")
        ax.set_title(f"{size} x {size}")
        ax.set_xlabel("relaxation parameter")
        ax.set_ylabel("spectral radius")
        ax.legend(fontsize=7)
    _finish(fig, path)
