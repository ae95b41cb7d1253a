"""Average precision and AUROC for anomaly-score maps.

Both metrics group tied scores at a single threshold. AP is the
step-wise sum over descending unique thresholds; AUROC is the
Mann-Whitney statistic with half credit for ties. Library functions
return unit-interval values; the CLI reports them scaled by 100.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata


class UndefinedMetricError(ValueError):
    """Raised when the score set cannot support the requested metric."""


@dataclass
class ScoredSet:
    """Parallel score and boolean-target lists."""

    scores: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64).ravel()
        self.targets = np.asarray(self.targets, dtype=bool).ravel()
        if self.scores.shape != self.targets.shape:
            raise ValueError("scores and targets must have equal length")

    def __len__(self) -> int:
        return len(self.scores)


def average_precision(s: ScoredSet) -> float:
    """Area under the precision-recall curve by threshold summation."""
    n_pos = int(np.count_nonzero(s.targets))
    if n_pos == 0:
        raise UndefinedMetricError("average precision needs at least one positive")

    order = np.argsort(-s.scores, kind="stable")
    scores = s.scores[order]
    targets = s.targets[order]
    tp = np.cumsum(targets)
    fp = np.cumsum(~targets)

    # Keep only the last index of each tie group, i.e. each unique threshold.
    last = np.ones(len(scores), dtype=bool)
    last[:-1] = scores[:-1] != scores[1:]
    tp = tp[last].astype(np.float64)
    fp = fp[last].astype(np.float64)

    precision = tp / (tp + fp)
    recall = tp / n_pos
    return float(np.sum(np.diff(recall, prepend=0.0) * precision))


def auroc(s: ScoredSet) -> float:
    """Probability a random positive outscores a random negative."""
    n_pos = int(np.count_nonzero(s.targets))
    n_neg = len(s) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUROC needs both classes present")
    ranks = rankdata(s.scores)
    u = float(np.sum(ranks[s.targets])) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def reduce_to_slices(
    volume_scores: np.ndarray,
    volume_labels: np.ndarray,
    axis: int = 0,
    reducer: str = "mean",
    positive_threshold: float = 0.0,
) -> ScoredSet:
    """Collapse a score/label volume to one score and target per slice.

    A slice's score is the mean or max over its voxels; its target is
    whether any voxel's label exceeds ``positive_threshold``.
    """
    volume_scores = np.asarray(volume_scores, dtype=np.float64)
    volume_labels = np.asarray(volume_labels)
    if volume_scores.shape != volume_labels.shape:
        raise ValueError("score and label volumes must share a shape")
    if not -volume_scores.ndim <= axis < volume_scores.ndim:
        raise ValueError(f"axis {axis} out of range for {volume_scores.ndim}-D volume")

    scores = np.moveaxis(volume_scores, axis, 0).reshape(volume_scores.shape[axis], -1)
    lab = np.moveaxis(volume_labels, axis, 0).reshape(volume_labels.shape[axis], -1)
    if reducer == "mean":
        slice_scores = scores.mean(axis=1)
    elif reducer == "max":
        slice_scores = scores.max(axis=1)
    else:
        raise ValueError(f"unknown reducer {reducer!r}")
    return ScoredSet(scores=slice_scores, targets=(lab > positive_threshold).any(axis=1))
