"""Static figures written next to the CSV outputs (matplotlib, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_META = {"Software": None}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)
    return path


def plot_sweep(rows, path, family: str = "") -> Path:
    """Stiffness and ratio trends from sweep rows ``(t, l, b, k_m, k_l, eta)``."""
    a = np.asarray(rows, dtype=float)
    t, l, b = (np.unique(a[:, i]) for i in range(3))
    ref = {"t": t[len(t) // 2], "l": l[len(l) // 2], "b": b[len(b) // 2]}

    def line(var, col):
        i = "tlb".index(var)
        others = [j for j in range(3) if j != i]
        mask = np.all([np.isclose(a[:, j], ref["tlb"[j]]) for j in others], axis=0)
        sel = a[mask]
        sel = sel[np.argsort(sel[:, i])]
        return sel[:, i], sel[:, col]

    fig, axes = plt.subplots(1, 3, figsize=(11, 3.4))
    for ax, (var, col, ylabel) in zip(axes, (("t", 3, "k motional (N/m)"), ("l", 3, "k motional (N/m)"),
                                             ("b", 5, "stiffness ratio"))):
        x, y = line(var, col)
        ax.plot(x, y, "o-")
        ax.set_xlabel(f"{var} (mm)")
        ax.set_ylabel(ylabel)
        ax.grid(alpha=0.3)
    if family:
        fig.suptitle(f"{family} parameter sweep")
    return _save(fig, path)


def plot_front(objectives, path, chosen=None, axis: str = "") -> Path:
    obj = np.asarray(objectives, dtype=float).reshape(-1, 3)
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    sc = ax.scatter(obj[:, 1], obj[:, 0], c=obj[:, 2], s=14, cmap="viridis")
    if chosen is not None:
        ax.scatter([chosen[1]], [chosen[0]], marker="*", s=160, color="r", label="selected")
        ax.legend()
    fig.colorbar(sc, ax=ax, label="guider stiffness ratio")
    ax.set_xlabel("decoupler stiffness ratio")
    ax.set_ylabel("axis stiffness (N/m)")
    ax.set_title(f"Pareto front {axis}".strip())
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_tracking(t, ref, pos, path, active=(True, True, True)) -> Path:
    t, ref, pos = np.asarray(t), np.asarray(ref), np.asarray(pos)
    axes_on = [i for i in range(3) if active[i]]
    fig, axs = plt.subplots(1, 2, figsize=(10, 4))
    if len(axes_on) >= 2:
        i, j = axes_on[:2]
        axs[0].plot(ref[i], ref[j], "k--", lw=1, label="reference")
        axs[0].plot(pos[i], pos[j], lw=1, label="simulated")
        axs[0].set_xlabel(f"{'xyz'[i]} (mm)")
        axs[0].set_ylabel(f"{'xyz'[j]} (mm)")
        axs[0].set_aspect("equal", adjustable="datalim")
        axs[0].legend()
    for i in axes_on:
        axs[1].plot(t, 1000 * (ref[i] - pos[i]), lw=0.8, label="xyz"[i])
    axs[1].set_xlabel("time (s)")
    axs[1].set_ylabel("tracking error (um)")
    axs[1].legend()
    axs[1].grid(alpha=0.3)
    return _save(fig, path)


def plot_bode(curves: dict, path) -> Path:
    """``curves`` maps a label to ``(f_hz, mag_db, phase_deg)``."""
    fig, (a1, a2) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    for label, (f, m, p) in curves.items():
        a1.semilogx(f, m, label=label)
        a2.semilogx(f, p, label=label)
    a1.set_ylabel("magnitude (dB re mm/N)")
    a2.set_ylabel("phase (deg)")
    a2.set_xlabel("frequency (Hz)")
    a1.legend()
    for a in (a1, a2):
        a.grid(alpha=0.3, which="both")
    return _save(fig, path)
