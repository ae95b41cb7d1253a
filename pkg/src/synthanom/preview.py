"""Figure-style previews: a clean/corrupted/label montage and a 1-D
intensity profile across the anomaly center.

Outputs are plain portable graymaps/pixmaps written deterministically,
so previews are reproducible byte for byte.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

SEPARATOR_WIDTH = 1
PROFILE_HEIGHT = 160

GREY = (128, 128, 128)
GREEN = (32, 168, 64)


def _to_uint8(panel: np.ndarray, lo: float, hi: float) -> np.ndarray:
    if hi <= lo:
        return np.zeros(panel.shape, dtype=np.uint8)
    scaled = (panel - lo) / (hi - lo)
    return np.clip(np.round(scaled * 255.0), 0, 255).astype(np.uint8)


def montage(clean: np.ndarray, corrupted: np.ndarray, label: np.ndarray) -> np.ndarray:
    """Side-by-side grayscale panels: clean | corrupted | label map.

    Clean and corrupted share one intensity window so identical inputs
    produce identical panels; the label panel maps [0, 1] to [0, 255].
    Output is height x (3 * width + 2 separator columns).
    """
    clean = np.asarray(clean, dtype=np.float64)
    if clean.ndim != 2:
        raise ValueError("montage needs 2-D panels")
    if clean.shape != corrupted.shape or clean.shape != label.shape:
        raise ValueError("montage panels must share one shape")
    lo = float(min(clean.min(), corrupted.min()))
    hi = float(max(clean.max(), corrupted.max()))
    panels = [
        _to_uint8(clean, lo, hi),
        _to_uint8(corrupted, lo, hi),
        np.clip(np.round(np.asarray(label, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8),
    ]
    sep = np.zeros((clean.shape[0], SEPARATOR_WIDTH), dtype=np.uint8)
    return np.hstack([panels[0], sep, panels[1], sep, panels[2]])


def profile_line(
    clean: np.ndarray, corrupted: np.ndarray, center: tuple[float, ...], axis: int = -1
) -> tuple[np.ndarray, np.ndarray]:
    """Extract the 1-D intensity profile through ``center`` along ``axis``."""
    clean = np.asarray(clean, dtype=np.float64)
    corrupted = np.asarray(corrupted, dtype=np.float64)
    axis = axis % clean.ndim
    idx = [int(np.clip(np.round(c), 0, n - 1)) for c, n in zip(center, clean.shape)]
    sel = tuple(slice(None) if d == axis else idx[d] for d in range(clean.ndim))
    return clean[sel].copy(), corrupted[sel].copy()


def profile_image(
    clean_line: np.ndarray,
    corrupted_line: np.ndarray,
    height: int = PROFILE_HEIGHT,
) -> np.ndarray:
    """Render before (grey) and after (green) curves on a white canvas."""
    clean_line = np.asarray(clean_line, dtype=np.float64)
    corrupted_line = np.asarray(corrupted_line, dtype=np.float64)
    width = len(clean_line)
    canvas = np.full((height, width, 3), 255, dtype=np.uint8)
    lo = float(min(clean_line.min(), corrupted_line.min()))
    hi = float(max(clean_line.max(), corrupted_line.max()))
    span = hi - lo if hi > lo else 1.0

    def rows(values: np.ndarray) -> np.ndarray:
        frac = (values - lo) / span
        return np.clip(np.round((1.0 - frac) * (height - 1)), 0, height - 1).astype(int)

    for values, colour in ((clean_line, GREY), (corrupted_line, GREEN)):
        r = rows(values)
        for x in range(width):
            # connect to the previous column so the curve reads as a line
            r0, r1 = (r[x], r[x]) if x == 0 else sorted((r[x - 1], r[x]))
            canvas[r0 : r1 + 1, x] = colour
    return canvas


def write_pgm(path: str | Path, image: np.ndarray) -> None:
    image = np.asarray(image, dtype=np.uint8)
    if image.ndim != 2:
        raise ValueError("PGM images are 2-D")
    header = f"P5\n{image.shape[1]} {image.shape[0]}\n255\n".encode("ascii")
    _atomic_write(Path(path), header + image.tobytes())


def write_ppm(path: str | Path, image: np.ndarray) -> None:
    image = np.asarray(image, dtype=np.uint8)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError("PPM images are (H, W, 3)")
    header = f"P6\n{image.shape[1]} {image.shape[0]}\n255\n".encode("ascii")
    _atomic_write(Path(path), header + image.tobytes())


def _atomic_write(path: Path, blob: bytes) -> None:
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    tmp.write_bytes(blob)
    os.replace(tmp, path)
