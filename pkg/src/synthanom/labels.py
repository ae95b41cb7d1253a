"""Continuous anomaly labels from raw intensity changes.

The flipped-Gaussian labeller maps a signed intensity change to a score
in [0, 1) that is even, monotone in |change| and C1 at zero, so tiny
changes receive labels near zero instead of an arbitrary floor. The
scaled logistic used by earlier work is provided for comparison.
"""

from __future__ import annotations

import numpy as np

# Largest double below 1; keeps labels strictly inside [0, 1) even when
# the Gaussian underflows for huge intensity changes.
_BELOW_ONE = np.nextafter(1.0, 0.0)


def gaussian_label(delta, sigma: float):
    """1 - exp(-delta^2 / (2 sigma^2)), elementwise."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    delta = np.asarray(delta, dtype=np.float64)
    out = -np.expm1(-(delta * delta) / (2.0 * sigma * sigma))
    out = np.minimum(out, _BELOW_ONE)
    return float(out) if out.ndim == 0 else out


def logistic_label(delta, k: float, x0: float):
    """Scaled logistic reference: 1 / (1 + exp(-k (delta - x0)))."""
    if k <= 0:
        raise ValueError("k must be positive")
    delta = np.asarray(delta, dtype=np.float64)
    out = 1.0 / (1.0 + np.exp(-k * (delta - x0)))
    return float(out) if out.ndim == 0 else out


def label_map(clean: np.ndarray, corrupted: np.ndarray, sigma: float) -> np.ndarray:
    """Per-voxel Gaussian label of ``corrupted - clean``.

    Exactly zero wherever the two tensors agree.
    """
    clean = np.asarray(clean, dtype=np.float64)
    corrupted = np.asarray(corrupted, dtype=np.float64)
    if clean.shape != corrupted.shape:
        raise ValueError(f"shape mismatch: {clean.shape} vs {corrupted.shape}")
    return gaussian_label(corrupted - clean, sigma)
