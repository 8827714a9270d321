"""Figure panels and delimited tables for a pipeline run."""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import label_rgb  # noqa: E402
from .watershed import boundaries  # noqa: E402

RC = {
    "font.size": 9,
    "axes.titlesize": 9,
    "figure.dpi": 100,
    "savefig.dpi": 120,
    "image.interpolation": "nearest",
}


def _show(ax, img, title, cmap="gray"):
    ax.imshow(img, cmap=cmap)
    ax.set_title(title)
    ax.set_xticks([])
    ax.set_yticks([])


def overlay(base, labels):
    """Gray ``base`` with label boundaries drawn in red."""
    b = np.asarray(base, dtype=np.float64)
    lo, hi = b.min(), b.max()
    g = np.zeros_like(b) if hi <= lo else (b - lo) / (hi - lo)
    rgb = np.repeat(g[:, :, None], 3, axis=2)
    rgb[boundaries(labels)] = (1.0, 0.0, 0.0)
    return rgb


def overview_figure(result, path, display_scale: float = 1.0):
    with plt.rc_context(RC):
        fig, axes = plt.subplots(2, 3, figsize=(9, 6))
        first = result.leveled.data[:, :, 0]
        name = (result.leveled.channel_labels or ("channel 0",))[0]
        _show(axes[0, 0], first, f"leveled {name}")
        _show(axes[0, 1], label_rgb(result.clusters + 1), "clusters", None)
        _show(axes[0, 2], label_rgb(result.markers), "markers", None)
        _show(axes[1, 0], np.clip(result.gradient * display_scale, 0, 1), "gradient")
        _show(axes[1, 1], label_rgb(result.labels), "watershed", None)
        _show(axes[1, 2], overlay(first, result.labels), "boundaries")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def space_figure(space, path, title="space"):
    n = space.channels
    cols = min(n, 4)
    rows = int(np.ceil(n / cols))
    with plt.rc_context(RC):
        fig, axes = plt.subplots(rows, cols, figsize=(2.6 * cols, 2.6 * rows), squeeze=False)
        labels = space.channel_labels or [str(j) for j in range(n)]
        for j, ax in enumerate(axes.ravel()):
            if j < n:
                _show(ax, space.data[:, :, j], f"{title}: {labels[j]}")
            else:
                ax.axis("off")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def spectra_figure(cube, labels, path, max_regions: int = 8):
    """Mean spectrum of each output region."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(5, 3.2))
        X = cube.pixels()
        lab = np.asarray(labels).ravel()
        for r in np.unique(lab)[:max_regions]:
            ax.plot(X[lab == r].mean(axis=0), label=f"region {r}")
        ax.set_xlabel("channel")
        ax.set_ylabel("mean value")
        ax.legend(frameon=False, fontsize=7)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)


def region_table(result):
    """One row per output label: size, centroid and mean of each space channel."""
    lab = result.labels
    yy, xx = np.mgrid[0:lab.shape[0], 0:lab.shape[1]]
    names = result.space.channel_labels or [f"c{j}" for j in range(result.space.channels)]
    header = ["label", "pixels", "centroid_y", "centroid_x"] + [f"mean_{n}" for n in names]
    rows = []
    for r in np.unique(lab):
        m = lab == r
        means = result.space.data[m].mean(axis=0)
        rows.append([int(r), int(m.sum()), f"{yy[m].mean():.3f}", f"{xx[m].mean():.3f}"]
                    + [f"{v:.6g}" for v in means])
    return header, rows


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        wr.writerows(rows)


def write_report(result, out_dir, display_scale: float = 1.0) -> list:
    out = Path(out_dir)
    paths = [out / "report_overview.png", out / "report_space.png",
             out / "report_spectra.png", out / "regions.csv"]
    overview_figure(result, paths[0], display_scale)
    space_figure(result.space, paths[1])
    spectra_figure(result.cube, result.labels, paths[2])
    write_csv(paths[3], *region_table(result))
    scores = result.metrics.get("scores")
    if scores:
        p = out / "scores.csv"
        write_csv(p, ["class", "pixels", "precision", "recall", "f1"],
                  [[c, v["pixels"], f"{v['precision']:.6f}", f"{v['recall']:.6f}",
                    f"{v['f1']:.6f}"] for c, v in sorted(scores["per_class"].items())])
        paths.append(p)
    return paths
