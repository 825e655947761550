"""Figure rendering for the CLI report paths.

matplotlib is imported lazily so library use never touches a graphics
stack; figures are written to files next to the delimited output.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def render_sweep_figure(rows: Sequence[dict], out_path: str | Path, value_key: str,
                        threshold: float | None = None, title: str = "") -> Path:
    """Noise-sweep curve: functional value against source visibility, with
    the zero line and optionally the crossing visibility marked."""
    plt = _pyplot()
    xs = [r["visibility"] for r in rows]
    ys = [r[value_key] for r in rows]
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    ax.plot(xs, ys, marker="o", ms=3.5, lw=1.2)
    ax.axhline(0.0, color="0.4", lw=0.8, ls="--")
    if threshold is not None and 0.0 < threshold < 1.0:
        ax.axvline(threshold, color="tab:red", lw=0.8, ls=":",
                   label=f"crossing v = {threshold:.4f}")
        ax.legend(frameon=False, fontsize=8)
    ax.set_xlabel("source visibility v")
    ax.set_ylabel(value_key)
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def render_outcome_bars(values: Sequence[float], out_path: str | Path,
                        ylabel: str, title: str = "") -> Path:
    """Per-central-outcome bar chart of the functional contributions."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    idx = list(range(len(values)))
    colors = ["tab:green" if v > 0 else "tab:gray" for v in values]
    ax.bar(idx, values, color=colors)
    ax.axhline(0.0, color="0.4", lw=0.8)
    ax.set_xticks(idx)
    ax.set_xlabel("central outcome b")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def render_beta_heatmap(beta, out_path: str | Path, title: str = "") -> Path:
    """Heatmap of two-party witness coefficients over tomographic indices."""
    plt = _pyplot()
    import numpy as np

    beta = np.asarray(beta)
    if beta.ndim != 2:
        beta = beta.reshape(beta.shape[0], -1)
    fig, ax = plt.subplots(figsize=(4.6, 3.8))
    vmax = float(np.max(np.abs(beta))) or 1.0
    im = ax.imshow(beta, cmap="RdBu_r", vmin=-vmax, vmax=vmax)
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.set_xlabel("second-site index")
    ax.set_ylabel("first-site index")
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
