"""SVG rendering of the CSV products.  No numerics live here."""
from __future__ import annotations

from pathlib import Path

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_series(path, series_list, labels, time_unit="us"):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for s, label in zip(series_list, labels):
        nu_x = s.metadata.get("nu_x")
        t = s.times / nu_x * 1e6 if time_unit == "us" and nu_x else s.times
        ax.plot(t, np.abs(s.values), lw=0.8, label=label)
    ax.set_xlabel("t (µs)" if time_unit == "us" else "t (1/ν_x)")
    ax.set_ylabel("|I(t)|")
    ax.set_ylim(0, 1.05)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(Path(path), format="svg")
    plt.close(fig)


def plot_spectra(path, spectra, labels):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for s, label in zip(spectra, labels):
        ax.plot(s.frequencies[1:], s.magnitudes[1:], lw=0.8, label=label)
    ax.set_xlabel("ω (units of ν_x)")
    ax.set_ylabel("|FFT |I||")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(Path(path), format="svg")
    plt.close(fig)


def plot_modes(path, alphas, frequencies, alpha_critical=None):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(alphas, frequencies, "k", lw=0.8)
    if alpha_critical is not None:
        ax.axvline(alpha_critical, ls="--", color="gray")
    ax.set_xlabel("α")
    ax.set_ylabel("ω (units of ν_x)")
    ax.set_ylim(bottom=0)
    fig.tight_layout()
    fig.savefig(Path(path), format="svg")
    plt.close(fig)


def plot_diagram(path, diagram):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 4.5))
    extent = (diagram.alphas[0], diagram.alphas[-1], diagram.dalphas[0], diagram.dalphas[-1])
    colors = ["tab:blue", "tab:orange", "tab:green"]
    for kind, color in zip(diagram.kinds, colors):
        mask = diagram.stable(kind).T.astype(float)
        ax.contourf(diagram.alphas, diagram.dalphas, mask, levels=[0.5, 1.5], colors=[color], alpha=0.35)
        ax.plot([], [], color=color, lw=6, alpha=0.35, label=kind.label)
    for curve in diagram.curves:
        style = "k-" if curve.source == "analytic" else "k:"
        ax.plot(curve.points[:, 0], curve.points[:, 1], style, lw=1)
    ax.set_xlim(extent[0], extent[1])
    ax.set_ylim(extent[2], extent[3])
    ax.set_xlabel("α")
    ax.set_ylabel("δα")
    ax.legend(fontsize=7, loc="upper right")
    fig.tight_layout()
    fig.savefig(Path(path), format="svg")
    plt.close(fig)
