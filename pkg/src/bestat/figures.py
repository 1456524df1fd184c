"""Report figures. Rendering is headless (Agg) and writes are atomic."""

from __future__ import annotations

import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

import numpy as np  # noqa: E402

from .errors import DataError, ShapeError  # noqa: E402
from .expansion import _sample_array, cells_of, empirical_copula  # noqa: E402
from .hadamard import format_interaction, parity_sign  # noqa: E402

_BLUE = "lightsteelblue"
_POINT = "#c1403d"


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    fig.savefig(tmp, dpi=150, bbox_inches="tight", format=path.suffix.lstrip(".") or "png")
    plt.close(fig)
    os.replace(tmp, path)
    return path


def _mask_columns(mask: int, p: int, depth: int) -> list[int]:
    return [j for j in range(p) if (mask >> (j * depth)) & ((1 << depth) - 1)]


def save_interaction_figure(sample, mask: int, depth: int, path, seed=None) -> Path:
    """Copula-scale scatter shaded by one interaction's sign pattern.

    Bivariate data gets the full region shading (positive regions white,
    negative ones blue); with more columns the two most informative
    coordinates are scattered and each point is colored by its sign.
    """
    u = empirical_copula(_sample_array(sample), seed)
    n, p = u.shape
    if not 1 <= mask < (1 << (p * depth)):
        raise ShapeError(f"mask {mask} is out of range for p={p}, depth={depth}")
    fig, ax = plt.subplots(figsize=(5.2, 5.0))
    if p == 2:
        side = 1 << depth
        gx, gy = np.meshgrid(np.arange(side), np.arange(side))
        mids = (2.0 * np.stack((gx, gy), axis=-1).reshape(-1, 2) + 1.0) / side - 1.0
        signs = parity_sign(mask & ~cells_of(mids, depth)).reshape(side, side)
        ax.imshow(
            signs,
            origin="lower",
            extent=(-1.0, 1.0, -1.0, 1.0),
            cmap=matplotlib.colors.ListedColormap([_BLUE, "white"]),
            vmin=-1,
            vmax=1,
            interpolation="nearest",
            aspect="equal",
        )
        ax.scatter(u[:, 0], u[:, 1], s=12, color=_POINT, edgecolors="none")
        ax.set_xlabel("u1")
        ax.set_ylabel("u2")
    else:
        cols = _mask_columns(mask, p, depth)
        if len(cols) < 2:
            cols = (cols + [j for j in range(p) if j not in cols])[:2]
        a, b = cols[0], cols[1]
        point_signs = parity_sign(mask & ~cells_of(u, depth))
        pos = point_signs > 0
        ax.scatter(u[pos, a], u[pos, b], s=12,
                   color="gray", edgecolors="none", label="positive")
        ax.scatter(u[~pos, a], u[~pos, b], s=12, color=_BLUE,
                   edgecolors="none", label="negative")
        ax.legend(loc="upper right", fontsize=8)
        ax.set_xlabel(f"u{a + 1}")
        ax.set_ylabel(f"u{b + 1}")
    ax.set_xlim(-1.02, 1.02)
    ax.set_ylim(-1.02, 1.02)
    ax.set_title(format_interaction(mask, p, depth))
    return _save(fig, path)


def save_power_figure(grid, path) -> Path:
    """Power curves over kappa, one line per method, one panel per scenario."""
    rows = list(grid.rows)
    if not rows:
        raise DataError("power grid has no rows")
    scenarios = sorted({r.scenario for r in rows})
    methods = list(dict.fromkeys(r.method for r in rows))
    fig, axes = plt.subplots(
        1, len(scenarios), figsize=(4.6 * len(scenarios), 3.6), squeeze=False
    )
    for ax, sc in zip(axes[0], scenarios):
        for m in methods:
            pts = sorted(
                (r.kappa, r.power, r.se)
                for r in rows
                if r.scenario == sc and r.method == m
            )
            if not pts:
                continue
            k, pw, se = (np.asarray(v, dtype=float) for v in zip(*pts))
            ax.errorbar(k, pw, yerr=se, marker="o", markersize=3.5,
                        capsize=2, linewidth=1.2, label=m)
        ax.axhline(grid.alpha, color="gray", linestyle=":", linewidth=1)
        ax.set_ylim(-0.02, 1.02)
        ax.set_xlabel("kappa")
        ax.set_title(sc)
    axes[0][0].set_ylabel("rejection rate")
    axes[0][-1].legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def save_beauty_figure(table, path) -> Path:
    """Real and imaginary characteristic-function traces along a ray."""
    rows = list(table)
    if not rows:
        raise DataError("characteristic function table is empty")
    t = np.asarray([r[0] for r in rows], dtype=float)
    re = np.asarray([r[1] for r in rows], dtype=float)
    im = np.asarray([r[2] for r in rows], dtype=float)
    fig, ax = plt.subplots(figsize=(5.6, 3.6))
    ax.plot(t, re, marker="o", markersize=3, linewidth=1.2, label="real")
    ax.plot(t, im, marker="s", markersize=3, linewidth=1.2, label="imag")
    ax.axhline(0.0, color="gray", linestyle=":", linewidth=1)
    ax.set_xlabel("t")
    ax.set_ylabel("approximate characteristic function")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)
