"""Static SVG plots; needs the optional matplotlib dependency."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def price_vs_strike(pricer, T, path, k_range=(0.5, 1.5)):
    spot = pricer.grid_.spot
    K = np.linspace(k_range[0] * spot, k_range[1] * spot, 201)
    prices = pricer.predict(np.column_stack([np.full_like(K, T), K]))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(K, prices)
    ax.set_xlabel("strike")
    ax.set_ylabel("call price")
    ax.set_title(f"T = {T:g}")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def local_vol_slice(surface, T, path, k_range=(0.5, 1.5)):
    K = np.linspace(k_range[0] * surface.spot, k_range[1] * surface.spot, 201)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(K, surface.local_vol(T, K))
    ax.set_xlabel("strike")
    ax.set_ylabel("local volatility")
    ax.set_title(f"T = {T:g}")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def mc_convergence(result, path):
    means = np.asarray(result.batch_means)
    running = np.cumsum(means) / np.arange(1, len(means) + 1)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(np.arange(1, len(means) + 1), means, "o", label="batch mean")
    ax.plot(np.arange(1, len(means) + 1), running, "-", label="running mean")
    ax.set_xlabel("batch")
    ax.set_ylabel("price")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def table_errors_plot(rows, path):
    labels = [f"T={r.T:g} a={r.alpha:g} b={r.beta:g} l={r.lam:g}" for r in rows]
    ae = [np.nan if r.ae_err_pct is None else r.ae_err_pct for r in rows]
    cv = [np.nan if r.cv_err_pct is None else r.cv_err_pct for r in rows]
    x = np.arange(len(rows))
    fig, ax = plt.subplots(figsize=(max(6, 0.3 * len(rows)), 4))
    ax.bar(x - 0.2, ae, 0.4, label="AE")
    ax.bar(x + 0.2, cv, 0.4, label="CV")
    ax.set_xticks(x, labels, rotation=90, fontsize=6)
    ax.set_ylabel("relative error vs MC (%)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
