"""Matplotlib figures written next to plan and estimate reports."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .estimator import EnergyEstimate  # noqa: E402
from .planner import MeasurementPlan  # noqa: E402

_LETTER_CODE = {"-": 0, "Z": 1, "X": 2, "Y": 3, "B": 4}
_COLORS = ["#f2f2f2", "#8da0cb", "#fc8d62", "#66c2a5", "#e78ac3"]

plt.rcParams.update({"font.size": 10, "axes.linewidth": 1.0, "savefig.dpi": 120})


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_plan(plan: MeasurementPlan, path: str | Path) -> Path:
    """Circuit-by-qubit grid coloured by measurement basis."""
    rows = max(plan.n_circuits, 1)
    grid = np.zeros((rows, plan.n_qubits), dtype=int)
    for r, c in enumerate(plan.circuits):
        grid[r] = [_LETTER_CODE.get(ch, 0) for ch in c.basis]
    fig, ax = plt.subplots(figsize=(1.0 + 0.45 * plan.n_qubits, 1.0 + 0.35 * rows))
    cmap = matplotlib.colors.ListedColormap(_COLORS)
    ax.imshow(grid, cmap=cmap, vmin=0, vmax=4, aspect="auto")
    for r, c in enumerate(plan.circuits):
        for q, ch in enumerate(c.basis):
            ax.text(q, r, ch, ha="center", va="center", fontsize=8)
    ax.set_xlabel("qubit")
    ax.set_ylabel("circuit")
    ax.set_xticks(range(plan.n_qubits))
    ax.set_yticks(range(rows))
    counts = [len(c.terms) for c in plan.circuits]
    ax.set_title(f"{plan.n_circuits} circuits, {sum(counts)} measured terms")
    fig.tight_layout()
    return _save(fig, path)


def plot_estimates(est: EnergyEstimate, path: str | Path) -> Path:
    """Per-class estimates with one-sigma bars against exact values."""
    labels = [c.representative.lstrip("+ ").strip() for c in est.classes]
    x = np.arange(len(labels))
    fig, ax = plt.subplots(figsize=(max(4.0, 0.5 * len(labels) + 1.5), 3.5))
    ax.errorbar(x, [c.estimate for c in est.classes], yerr=[c.stderr for c in est.classes], fmt="o", ms=4, capsize=3, label="estimate")
    exact = [c.exact for c in est.classes]
    if all(e is not None for e in exact):
        ax.plot(x, exact, "k_", ms=12, label="exact")
    ax.axhline(0.0, color="0.8", lw=0.8)
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel("expectation")
    title = f"E = {est.energy:.5f} ± {est.stderr:.5f}"
    if est.exact is not None:
        title += f"  (exact {est.exact:.5f})"
    ax.set_title(title)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_stderr_ladder(shots: Sequence[int], stderrs: Sequence[float], slope: float, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.loglog(shots, stderrs, "o-", label=f"fit slope {slope:+.3f}")
    ref = stderrs[0] * (np.asarray(shots, dtype=float) / shots[0]) ** -0.5
    ax.loglog(shots, ref, "k--", lw=0.8, label="shots$^{-1/2}$")
    ax.set_xlabel("total shots")
    ax.set_ylabel("energy standard error")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, path)


def plot_circuit_counts(counts: Sequence[dict], path: str | Path) -> Path:
    """Hopping circuit counts against lattice size for both schemes and the closed form."""
    ns = [c["n_sites"] for c in counts]
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.plot(ns, [c["formula"] for c in counts], "k--", label="closed form")
    ax.plot(ns, [c["nonentangled"] for c in counts], "o", label="nonentangled schedule")
    ax.plot(ns, [c["bell"] for c in counts], "s", mfc="none", label="Bell schedule")
    ax.set_xlabel("sites N")
    ax.set_ylabel("circuits")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, path)
