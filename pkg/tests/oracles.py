"""Slow reference implementations used as test oracles.

These avoid the package's own helpers (no heap, no shifted arrays, no
embedding) so agreement is evidence rather than tautology.
"""
from itertools import combinations

import numpy as np


def flood_oracle(gradient, markers, offsets, levels=256, lines=False):
    """Priority flooding with a linear-scan queue.

    Same rules as the package: quantize to ``min(floor(g*levels), levels-1)``,
    seed from marker pixels in raster order, pop lowest (level, arrival),
    a queued pixel takes the label of whoever queued it, neighbors are queued
    at ``max(own level, popped level)``.
    """
    g = np.asarray(gradient, dtype=np.float64)
    h, w = g.shape
    lev = [[min(int(np.floor(g[y, x] * levels)), levels - 1) for x in range(w)] for y in range(h)]
    lab = [[int(v) for v in row] for row in np.asarray(markers)]
    queued = [[False] * w for _ in range(h)]
    queue = []  # entries [level, arrival, y, x, label]
    arrival = 0

    def nbrs(y, x):
        for dy, dx in offsets:
            if (dy, dx) == (0, 0):
                continue
            ny, nx = y + dy, x + dx
            if 0 <= ny < h and 0 <= nx < w:
                yield ny, nx

    for y in range(h):
        for x in range(w):
            if lab[y][x] > 0:
                for ny, nx in nbrs(y, x):
                    if lab[ny][nx] == 0 and not queued[ny][nx]:
                        queued[ny][nx] = True
                        queue.append([lev[ny][nx], arrival, ny, nx, lab[y][x]])
                        arrival += 1
    line = [[False] * w for _ in range(h)]
    while queue:
        best = 0
        for i in range(1, len(queue)):
            if (queue[i][0], queue[i][1]) < (queue[best][0], queue[best][1]):
                best = i
        prio, _, y, x, label = queue.pop(best)
        if lines and any(lab[ny][nx] > 0 and lab[ny][nx] != label for ny, nx in nbrs(y, x)):
            line[y][x] = True
            continue
        lab[y][x] = label
        for ny, nx in nbrs(y, x):
            if lab[ny][nx] == 0 and not queued[ny][nx]:
                queued[ny][nx] = True
                queue.append([max(lev[ny][nx], prio), arrival, ny, nx, label])
                arrival += 1
    return np.array(lab, dtype=np.int64)


def metric_gradient_oracle(cube, dist, offsets):
    """Double loop: max minus min neighbor distance, center excluded, then [0,1]."""
    h, w, _ = cube.shape
    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            ds = []
            for dy, dx in offsets:
                if (dy, dx) == (0, 0):
                    continue
                ny, nx = y + dy, x + dx
                if 0 <= ny < h and 0 <= nx < w:
                    ds.append(dist(cube[y, x], cube[ny, nx]))
            out[y, x] = max(ds) - min(ds) if ds else 0.0
    lo, hi = out.min(), out.max()
    return np.zeros_like(out) if hi <= lo else (out - lo) / (hi - lo)


def best_medoid_cost(D, k):
    """Exhaustive minimum of sum_i min_m D[i, m] over all k-subsets."""
    n = D.shape[0]
    return min(D[:, list(c)].min(axis=1).sum() for c in combinations(range(n), k))


def ols_oracle(x, y):
    """Normal equations by explicit summation."""
    n = len(x)
    sx = sum(float(v) for v in x)
    sy = sum(float(v) for v in y)
    sxx = sum(float(v) * float(v) for v in x)
    sxy = sum(float(a) * float(b) for a, b in zip(x, y))
    det = n * sxx - sx * sx
    a = (n * sxy - sx * sy) / det
    b = (sxx * sy - sx * sxy) / det
    return a, b


def chi2_oracle(u, v, col_sums, total):
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    return float(np.sqrt(sum(total / col_sums[j] * (u[j] / u.sum() - v[j] / v.sum()) ** 2
                             for j in range(u.size))))


def is_leveling(ref, g, offsets):
    """Fraction of se-adjacent ordered pairs satisfying the leveling criterion, and pair count."""
    h, w = g.shape
    ok = total = 0
    for y in range(h):
        for x in range(w):
            for dy, dx in offsets:
                if (dy, dx) == (0, 0):
                    continue
                ny, nx = y + dy, x + dx
                if not (0 <= ny < h and 0 <= nx < w):
                    continue
                total += 1
                if g[y, x] > g[ny, nx]:
                    ok += ref[y, x] >= g[y, x] and g[ny, nx] >= ref[ny, nx]
                else:
                    ok += 1
    return ok / total, total


def components_connected(labels, offsets):
    """True when every positive label forms a single connected set."""
    h, w = labels.shape
    for lab in np.unique(labels[labels > 0]):
        pts = list(zip(*np.nonzero(labels == lab)))
        seen = {pts[0]}
        stack = [pts[0]]
        while stack:
            y, x = stack.pop()
            for dy, dx in offsets:
                ny, nx = y + dy, x + dx
                if 0 <= ny < h and 0 <= nx < w and labels[ny, nx] == lab and (ny, nx) not in seen:
                    seen.add((ny, nx))
                    stack.append((ny, nx))
        if len(seen) != len(pts):
            return False
    return True


def mixture_cube(rng, size=32, channels=32, snr=3.0):
    """Three smooth endmember spectra mixed by smooth abundances, plus noise.

    The clean table is exactly independence plus two factorial axes. Noise
    sigma is ``std(clean) / snr``. Returns ``(clean, noisy)`` arrays.
    """
    yy, xx = np.mgrid[0:size, 0:size] / size
    j = np.linspace(0, 19, channels)
    spectra = [1 + 4 * np.exp(-0.5 * ((j - c) / 3) ** 2) for c in (3, 10, 17)]
    abund = [1 + 0.5 * np.sin(2 * np.pi * xx) * np.cos(np.pi * yy),
             1 + 0.5 * np.cos(2 * np.pi * yy + 1),
             1 + 0.5 * np.sin(np.pi * (xx + yy))]
    clean = sum(a[:, :, None] * s for a, s in zip(abund, spectra))
    noisy = clean + rng.normal(0, clean.std() / snr, clean.shape)
    return clean, noisy
