"""Matplotlib figures rendered next to the delimited report outputs."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .data import Dataset
from .simulation import MonteCarloReport
from .survival_core import kaplan_meier


def km_figure(dataset: Dataset, path: str, title: str = "Kaplan-Meier survival curve"):
    """Step plot of the product-limit curve; the plateau motivates a cure model."""
    km = kaplan_meier(dataset)
    t = np.concatenate([[0.0], km.jump_times, [dataset.time.max()]])
    s = np.concatenate([[1.0], km.values, [km.final_value]])
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.step(t, s, where="post", color="tab:blue")
    ax.set_xlabel("time")
    ax.set_ylabel("survival probability")
    ax.set_ylim(0.0, 1.05)
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def simulation_figure(report: MonteCarloReport, path: str):
    """Grouped bars of bias and MSE per parameter for each estimator."""
    estimators = sorted({r.estimator for r in report.rows})
    params = list(dict.fromkeys(r.parameter for r in report.rows))
    width = 0.8 / max(len(estimators), 1)
    x = np.arange(len(params))

    fig, axes = plt.subplots(1, 2, figsize=(10.0, 4.2))
    for metric, ax in zip(("bias", "mse"), axes):
        for k, est in enumerate(estimators):
            vals = [getattr(report.row(est, par), metric) for par in params]
            ax.bar(x + (k - (len(estimators) - 1) / 2) * width, vals, width, label=est)
        ax.set_xticks(x)
        ax.set_xticklabels(params, rotation=45)
        ax.set_ylabel(metric)
        ax.axhline(0.0, color="black", linewidth=0.8)
        ax.grid(alpha=0.3, axis="y")
    axes[0].legend()
    fig.suptitle(
        f"model {report.model} scenario {report.scenario} n={report.n} "
        f"({report.n_used} convergent replications)"
    )
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def pe_difference_figure(differences, path: str):
    """Boxplot of per-split prediction-error differences (2-step minus EM)."""
    differences = np.asarray(differences, dtype=float)
    differences = differences[np.isfinite(differences)]
    fig, ax = plt.subplots(figsize=(4.4, 4.6))
    ax.boxplot(differences, widths=0.5)
    ax.axhline(0.0, color="gray", linestyle="--", linewidth=0.8)
    ax.set_xticks([])
    ax.set_ylabel("prediction-error difference (2-step minus EM)")
    ax.set_title("negative favors the 2-step estimator")
    ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def fit_estimates_figure(blocks: dict, path: str):
    """Point estimates with 95% Wald bars per covariate and component.

    ``blocks`` maps estimator name to the fit-report dict produced by the
    CLI (incidence/latency lists of covariate entries).
    """
    fig, axes = plt.subplots(1, 2, figsize=(10.0, 4.4), sharey=False)
    for ax, component in zip(axes, ("incidence", "latency")):
        offset = 0.0
        for k, (est, block) in enumerate(blocks.items()):
            entries = block[component]
            names = [e["covariate"] for e in entries]
            y = np.arange(len(entries)) + k * 0.18
            vals = np.array([e["estimate"] for e in entries])
            ses = np.array([
                e["se"] if e["se"] is not None else np.nan for e in entries
            ])
            ax.errorbar(vals, y, xerr=1.96 * ses, fmt="o", capsize=3, label=est)
            offset += 0.18
        ax.set_yticks(np.arange(len(names)) + offset / 2 - 0.09)
        ax.set_yticklabels(names)
        ax.axvline(0.0, color="gray", linestyle="--", linewidth=0.8)
        ax.set_title(component)
        ax.grid(alpha=0.3, axis="x")
    axes[0].legend()
    fig.suptitle("coefficient estimates (bars: 1.96 bootstrap SE)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
