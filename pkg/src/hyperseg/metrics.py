"""Agreement between a label image and a ground-truth label image."""
from __future__ import annotations

import numpy as np

from .core import DataError


def overlap_matrix(pred, truth):
    pred = np.asarray(pred, dtype=np.int64).ravel()
    truth = np.asarray(truth, dtype=np.int64).ravel()
    p_ids, p_inv = np.unique(pred, return_inverse=True)
    t_ids, t_inv = np.unique(truth, return_inverse=True)
    counts = np.zeros((p_ids.size, t_ids.size), dtype=np.int64)
    np.add.at(counts, (p_inv, t_inv), 1)
    return p_ids, t_ids, counts


def segmentation_scores(pred, truth) -> dict:
    """Per-pixel precision, recall and F1 of ``pred`` against ``truth``.

    Each predicted label is assigned the truth class it overlaps most
    (ties to the lower class id); several predicted labels may map to one
    class. Scores are computed per truth class on the mapped image; ``f1``
    is their unweighted mean.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise DataError(f"labels {pred.shape} and truth {truth.shape} differ in shape")
    p_ids, t_ids, counts = overlap_matrix(pred, truth)
    mapping = t_ids[np.argmax(counts, axis=1)]
    mapped_counts = np.zeros((t_ids.size, t_ids.size), dtype=np.int64)
    for i, target in enumerate(mapping):
        mapped_counts[np.searchsorted(t_ids, target)] += counts[i]
    tp = np.diag(mapped_counts).astype(np.float64)
    pred_tot = mapped_counts.sum(axis=1)
    true_tot = mapped_counts.sum(axis=0)
    precision = np.divide(tp, pred_tot, out=np.zeros_like(tp), where=pred_tot > 0)
    recall = tp / true_tot
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros_like(tp), where=denom > 0)
    per_class = {
        int(t): {"precision": float(p), "recall": float(r), "f1": float(f), "pixels": int(n)}
        for t, p, r, f, n in zip(t_ids, precision, recall, f1, true_tot)
    }
    return {
        "f1": float(f1.mean()),
        "precision": float(precision.mean()),
        "recall": float(recall.mean()),
        "accuracy": float(tp.sum() / truth.size),
        "per_class": per_class,
        "label_to_class": {int(p): int(t) for p, t in zip(p_ids, mapping)},
    }


def region_sizes(labels) -> dict:
    ids, counts = np.unique(np.asarray(labels, dtype=np.int64), return_counts=True)
    return {int(i): int(c) for i, c in zip(ids, counts)}


def metrics_report(labels, truth=None) -> dict:
    out = {"region_sizes": region_sizes(labels), "n_regions": int(np.sum(np.unique(labels) > 0))}
    if truth is not None:
        out["scores"] = segmentation_scores(labels, truth)
    return out
