"""Figure rendering for report paths: set slices, runs, sweep curves."""

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend pinned first)


class DegenerateSliceError(Exception):
    """The requested 2D slice has no area to draw."""


def boundary_loop(points):
    """Closed, counterclockwise boundary of the 2D hull of the points."""
    from scipy.spatial import ConvexHull, QhullError

    points = np.asarray(points, float)
    if points.ndim != 2 or points.shape[1] != 2:
        raise DegenerateSliceError("slice points are not two-dimensional")
    try:
        hull = ConvexHull(points)
    except QhullError as exc:
        raise DegenerateSliceError(f"degenerate slice: {exc}") from exc
    loop = points[hull.vertices]
    return np.vstack([loop, loop[:1]])


def slice_loop(solution, template, p, plane):
    """Projection of the certified vertex family onto two coordinates."""
    y = solution.offsets_at(p)
    points = np.array([Vk @ y for Vk in template.V])[:, list(plane)]
    return boundary_loop(points)


def plot_slices(loops, labels, title=None, axis_labels=("x1", "x2")):
    fig, ax = plt.subplots(figsize=(5, 5))
    for loop, label in zip(loops, labels):
        ax.plot(loop[:, 0], loop[:, 1], label=label, linewidth=1.2)
    ax.set_xlabel(axis_labels[0])
    ax.set_ylabel(axis_labels[1])
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    ax.set_aspect("equal", adjustable="datalim")
    fig.tight_layout()
    return fig


def plot_trajectory(traj, plane=(0, 1), loops=None, title=None):
    fig, ax = plt.subplots(figsize=(5, 5))
    if loops:
        for loop in loops:
            ax.plot(loop[:, 0], loop[:, 1], color="0.7", linewidth=0.8)
    xs = traj.states[:, plane[0]]
    ys = traj.states[:, plane[1]]
    ax.plot(xs, ys, "-o", markersize=2, linewidth=0.8)
    ax.plot(xs[0], ys[0], "s", color="tab:green", label="start")
    ax.set_xlabel(f"x{plane[0] + 1}")
    ax.set_ylabel(f"x{plane[1] + 1}")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def plot_sweep(kappas, values, ylabel="total coverage distance"):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(kappas, values, "-o")
    ax.set_xlabel("rate bound scale")
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return fig


def save_figure(fig, path, dpi=150):
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
