"""Figure rendering for the CLI report path. File output only (Agg)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_decay(ns, values, theta_hat, c_hat, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    vals = np.abs(np.asarray(values, dtype=float))
    ax.semilogy(ns, vals, "o", label="|correlation|")
    ns_f = np.asarray(ns, dtype=float)
    ax.semilogy(ns_f, c_hat * theta_hat**ns_f, "-", label=f"fit {c_hat:.3g} * {theta_hat:.3f}^n")
    ax.set_xlabel("n")
    ax.set_ylabel("|correlation|")
    ax.legend()
    return _save(fig, path)


def plot_eigen(xs, phi, nu_density, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, phi, label="eigenfunction")
    ax.plot(xs, nu_density, label="eigenmeasure density")
    ax.set_xlabel("x")
    ax.legend()
    return _save(fig, path)


def plot_clt_hist(z, sigma, path, bins: int = 80):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(z, bins=bins, density=True, alpha=0.6, label="normalized sums")
    lo, hi = float(np.min(z)), float(np.max(z))
    xs = np.linspace(lo, hi, 400)
    pdf = np.exp(-0.5 * (xs / sigma) ** 2) / (sigma * np.sqrt(2 * np.pi))
    ax.plot(xs, pdf, "r-", label=f"normal(0, {sigma**2:.4f})")
    ax.set_xlabel("S_n / sqrt(n)")
    ax.legend()
    return _save(fig, path)


def plot_count_ratios(ns, ratios, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ns, ratios, "o-")
    ax.axhline(1.0, color="gray", ls="--")
    ax.set_xlabel("n")
    ax.set_ylabel("count / predicted")
    return _save(fig, path)


def plot_average(ns, koopman, target, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ns, koopman, "o-", label="word-averaged ergodic mean")
    ax.axhline(target, color="r", ls="--", label="Lebesgue integral")
    ax.set_xlabel("n")
    ax.legend()
    return _save(fig, path)


def plot_lil_stats(stats, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(stats, bins=40, density=True, alpha=0.7)
    ax.axvline(1.0, color="r", ls="--", label="limsup = 1 reference")
    ax.set_xlabel("max_n S_n / (sigma sqrt(2 n log log n))")
    ax.legend()
    return _save(fig, path)
