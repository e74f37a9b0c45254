"""Figure rendering for experiment result tables.

One PNG per experiment, drawn from the same row dicts that feed the CSV
tables.  Uses the non-interactive backend so the harness can run
headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render"]


def render(experiment: str, rows: list[dict], path) -> None:
    fn = _RENDERERS.get(experiment)
    if fn is None:
        raise ValueError(f"no renderer for experiment {experiment!r}")
    fn(rows, path)


def _fig1a(rows, path):
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    deltas = sorted({row["delta"] for row in rows})
    colors = plt.cm.viridis(np.linspace(0.1, 0.8, len(deltas)))
    for delta, color in zip(deltas, colors):
        sub = [r for r in rows if r["delta"] == delta]
        sub.sort(key=lambda r: r["eps"])
        eps = [r["eps"] for r in sub]
        emp = [r["emp_w"] for r in sub]
        sd = [2.0 * r["emp_w_sd"] for r in sub]
        ax.errorbar(eps, emp, yerr=sd, marker="o", color=color, capsize=3,
                    label=f"empirical, delta={delta:g}")
        bounds = [(r["eps"], r["bound"]) for r in sub if r["bound"] is not None]
        if bounds:
            bx, by = zip(*bounds)
            ax.plot(bx, by, linestyle="--", color=color,
                    label=f"bound, delta={delta:g}")
    ax.set_xlabel("drift offset eps")
    ax.set_ylabel("Wasserstein distance")
    ax.set_title("Empirical distance vs exponential-contraction bound")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _fig1b(rows, path):
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    styles = {"ula": ("o", "tab:blue"), "agula": ("s", "tab:orange")}
    for method, (marker, color) in styles.items():
        sub = [r for r in rows if r["method"] == method]
        if not sub:
            continue
        sub.sort(key=lambda r: r["N"])
        ns = [r["N"] for r in sub]
        w = [r["mean_w"] for r in sub]
        sd = [2.0 * r["spread_w"] for r in sub]
        ax.errorbar(ns, w, yerr=sd, marker=marker, color=color, capsize=3,
                    label=method.upper())
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("data size N")
    ax.set_ylabel("Wasserstein distance to reference")
    ax.set_title("Exact vs linearized drift at matched budgets")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _zzp_check(rows, path):
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    sub = sorted(rows, key=lambda r: r["eps"])
    eps = [r["eps"] for r in sub]
    emp = [r["emp_w"] for r in sub]
    sd = [2.0 * r["emp_w_sd"] for r in sub]
    ax.errorbar(eps, emp, yerr=sd, marker="o", color="tab:blue", capsize=3,
                label="empirical")
    ax.plot(eps, [r["exact_w"] for r in sub], linestyle="--", color="black",
            label="exact translation distance")
    ax.set_xlabel("rate perturbation eps (mean shift)")
    ax.set_ylabel("Wasserstein distance")
    ax.set_title("Zig-zag distance under mean-shifted switching rates")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _stochastic_drift_check(rows, path):
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    reps = [r["rep"] for r in rows]
    emp = [r["emp_w"] for r in rows]
    bench = [r["benchmark_w"] for r in rows]
    ax.plot(reps, emp, marker="o", color="tab:blue", label="distance to target")
    ax.plot(reps, bench, marker="s", color="tab:gray", label="self-distance benchmark")
    ax.axhline(1.5 * float(np.mean(bench)), linestyle="--", color="tab:red",
               label="1.5 x mean benchmark")
    ax.set_xlabel("repeat")
    ax.set_ylabel("Wasserstein distance")
    ax.set_title("Mean-zero random drift leaves the target in place")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


_RENDERERS = {
    "fig1a": _fig1a,
    "fig1b": _fig1b,
    "zzp_check": _zzp_check,
    "stochastic_drift_check": _stochastic_drift_check,
}
