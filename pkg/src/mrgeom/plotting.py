"""Static figures written next to the CSV/JSON tables.

Only the object-oriented matplotlib API is used (no pyplot state), and the
SVG writer is pinned (fixed hash salt, no date) so repeated runs produce
identical files.
"""

from __future__ import annotations

from contextlib import contextmanager
from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure

STYLE = {
    "font.family": "serif",
    "font.size": 9,
    "axes.linewidth": 0.6,
    "axes.grid": True,
    "grid.linewidth": 0.3,
    "grid.alpha": 0.5,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "legend.frameon": False,
    "svg.hashsalt": "mrgeom",
    "svg.fonttype": "path",
}

SAVE_METADATA = {"svg": {"Date": None}, "png": {"Software": None}}


@contextmanager
def figure_style():
    with matplotlib.rc_context(STYLE):
        yield


def _save(fig: Figure, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fmt = path.suffix.lstrip(".").lower() or "svg"
    fig.savefig(path, format=fmt, metadata=SAVE_METADATA.get(fmt))
    return path


def unit_square(points: np.ndarray, margin: float = 0.04) -> np.ndarray:
    """Scale points uniformly into ``[margin, 1 - margin]^2``, centred."""
    pts = np.asarray(points, dtype=float)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = float(np.max(hi - lo)) or 1.0
    scaled = (pts - (lo + hi) / 2) / span * (1 - 2 * margin)
    return scaled + 0.5


def marker_area(level: int) -> float:
    """Marker area in pt^2; the marker radius halves with every level."""
    return max(36.0 * 4.0**-level, 0.02)


def plot_gasket(coords: np.ndarray, level: int, path, size: float = 5.0) -> Path:
    """Point cloud of the harmonic-coordinate image ``y(V_n)`` on the unit square."""
    pts = unit_square(coords)
    with figure_style():
        fig = Figure(figsize=(size, size))
        ax = fig.add_axes((0, 0, 1, 1))
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1)
        ax.set_aspect("equal")
        ax.set_axis_off()
        sc = ax.scatter(pts[:, 0], pts[:, 1], s=marker_area(level), c="#0072B2", linewidths=0)
        sc.set_gid("vertices")
        return _save(fig, path)


def plot_rank_one(stats, path) -> Path:
    """Mean and max eigenvalue ratio of ``Z_w`` against level, log scale."""
    levels = [s.level for s in stats]
    with figure_style():
        fig = Figure(figsize=(4.5, 3.0), layout="constrained")
        ax = fig.add_subplot()
        ax.semilogy(levels, [s.mean_ratio for s in stats], "o-", label=r"$\nu$-mean")
        unweighted = [(s.level, s.unweighted_mean_ratio) for s in stats if s.unweighted_mean_ratio is not None]
        if unweighted:
            ax.semilogy(*zip(*unweighted), "s--", label="cell mean")
        ax.semilogy(levels, [s.max_ratio for s in stats], "^:", label="max")
        ax.set_xlabel("level")
        ax.set_ylabel(r"$\lambda_{\min}/\lambda_{\max}$ of $Z_w$")
        ax.legend()
        return _save(fig, path)
