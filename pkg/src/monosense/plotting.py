"""Figure rendering for CLI reports; every function writes a PNG to disk."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "save_multiplicity_map",
    "save_naf_map",
    "save_psf_cuts",
    "save_pmd_curves",
]

_LINE_STYLES = ["-", "--", ":", "-."]


def save_multiplicity_map(multiplicity: np.ndarray, spacing: float, path) -> None:
    fig, ax = plt.subplots(figsize=(5.2, 4.4))
    n = multiplicity.shape[0]
    extent = [-0.5 * spacing, (n - 0.5) * spacing] * 2
    im = ax.imshow(
        multiplicity.T, origin="lower", extent=extent, cmap="viridis", aspect="equal"
    )
    fig.colorbar(im, ax=ax, label="Tx/Rx pair count")
    ax.set_xlabel("x [wavelengths]")
    ax.set_ylabel("z [wavelengths]")
    ax.set_title(f"Sum co-array multiplicity ({n}x{n}, spacing {spacing:g})")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_naf_map(power_db: np.ndarray, path, title: str, vmin: float = -60.0) -> None:
    fig, ax = plt.subplots(figsize=(5.4, 4.4))
    im = ax.imshow(
        power_db.T,
        origin="lower",
        extent=[-0.5, 0.5, -0.5, 0.5],
        cmap="jet",
        vmin=vmin,
        vmax=0.0,
        aspect="equal",
    )
    fig.colorbar(im, ax=ax, label="Power [dB]")
    ax.set_xlabel("Horizontal NAF")
    ax.set_ylabel("Vertical NAF")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_psf_cuts(axis: np.ndarray, cuts: dict[str, np.ndarray], path, floor: float = -80.0) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for style, (name, vals) in zip(_LINE_STYLES * 4, cuts.items()):
        ax.plot(axis, np.maximum(vals, floor), style, label=name)
    ax.set_xlabel("Horizontal NAF")
    ax.set_ylabel("Power [dB]")
    ax.set_ylim(floor, 3.0)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_pmd_curves(curves, path) -> None:
    fig, ax = plt.subplots(figsize=(6.2, 4.4))
    colors = plt.cm.tab10(np.linspace(0, 1, 10))
    sizes = sorted({c.variant_n for c in curves})
    spacings = sorted({c.variant_spacing for c in curves})
    for curve in curves:
        deltas = [p.delta for p in curve.points]
        pmd = [max(p.pmd, 1e-6) for p in curve.points]
        color = colors[sizes.index(curve.variant_n) % 10]
        style = _LINE_STYLES[spacings.index(curve.variant_spacing) % len(_LINE_STYLES)]
        ax.semilogy(
            deltas,
            pmd,
            style,
            color=color,
            label=f"n={curve.variant_n}, d={curve.variant_spacing:g}",
        )
    ax.set_xlabel("Target separation [NAF]")
    ax.set_ylabel("Missed-detection probability")
    ax.set_ylim(1e-3, 1.1)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
