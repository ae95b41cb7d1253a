"""Mask geometry and randomised anomaly placement.

Images are plain numpy arrays of any dimensionality. A mask is described
parametrically (:class:`MaskSpec`) and rasterised onto the image grid,
where voxel index vectors are taken as voxel centers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

ELLIPSOID = "ellipsoid"
CUBOID = "cuboid"
_KINDS = (ELLIPSOID, CUBOID)


class PlacementError(RuntimeError):
    """Raised when no acceptable mask placement is found within budget."""


@dataclass(frozen=True)
class MaskSpec:
    """Parametric ellipsoid or cuboid.

    ``rotation`` holds one planar angle (radians) per axis pair, ordered
    lexicographically over (i, j) with i < j; D*(D-1)/2 angles in total.
    """

    kind: str
    center: tuple[float, ...]
    semi_axes: tuple[float, ...]
    rotation: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown mask kind {self.kind!r}")
        d = len(self.center)
        if len(self.semi_axes) != d:
            raise ValueError("center and semi_axes dimensionality differ")
        if any(s <= 0 for s in self.semi_axes):
            raise ValueError("semi_axes must be positive")
        if len(self.rotation) != d * (d - 1) // 2:
            raise ValueError(f"expected {d * (d - 1) // 2} rotation angles, got {len(self.rotation)}")

    @property
    def ndim(self) -> int:
        return len(self.center)

    def rotation_matrix(self) -> np.ndarray:
        """Compose Givens rotations over all axis pairs (i < j)."""
        d = self.ndim
        rot = np.eye(d)
        for angle, (i, j) in zip(self.rotation, itertools.combinations(range(d), 2)):
            g = np.eye(d)
            c, s = np.cos(angle), np.sin(angle)
            g[i, i] = c
            g[j, j] = c
            g[i, j] = -s
            g[j, i] = s
            rot = rot @ g
        return rot

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Closed membership test for an (..., D) array of coordinates."""
        rel = np.asarray(points, dtype=float) - np.asarray(self.center)
        local = rel @ self.rotation_matrix()  # rows through R^-1 = R^T
        if self.kind == ELLIPSOID:
            return np.sum((local / np.asarray(self.semi_axes)) ** 2, axis=-1) <= 1.0
        return np.all(np.abs(local) <= np.asarray(self.semi_axes), axis=-1)


@dataclass(frozen=True)
class AnomalyMask:
    """A rasterised mask together with its tight axis-aligned bounding box.

    ``bbox`` is a per-axis (lo, hi) half-open interval in voxel indices.
    """

    spec: MaskSpec
    raster: np.ndarray
    bbox: tuple[tuple[int, int], ...]

    @property
    def bbox_slices(self) -> tuple[slice, ...]:
        return tuple(slice(lo, hi) for lo, hi in self.bbox)

    def voxel_count(self) -> int:
        return int(np.count_nonzero(self.raster))


def rasterize_mask(spec: MaskSpec, shape: tuple[int, ...]) -> AnomalyMask:
    """Rasterise ``spec`` onto a grid of extents ``shape``.

    A voxel is set when its center lies within the shape; parts of the
    shape outside the image are clipped. Degenerate specs whose exact
    raster is empty fall back to the voxel nearest the center so that any
    spec centered inside the image produces a usable mask.
    """
    shape = tuple(int(n) for n in shape)
    if spec.ndim != len(shape):
        raise ValueError(f"spec is {spec.ndim}-D but image is {len(shape)}-D")

    # The rotated shape cannot reach farther than |semi_axes| from center.
    reach = float(np.linalg.norm(spec.semi_axes)) + 1.0
    lo = [max(0, int(np.floor(c - reach))) for c in spec.center]
    hi = [min(n, int(np.ceil(c + reach)) + 1) for c, n in zip(spec.center, shape)]

    raster = np.zeros(shape, dtype=bool)
    if all(l < h for l, h in zip(lo, hi)):
        axes = [np.arange(l, h, dtype=float) for l, h in zip(lo, hi)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        raster[tuple(slice(l, h) for l, h in zip(lo, hi))] = spec.contains(grid)

    if not raster.any():
        nearest = tuple(
            int(np.clip(np.round(c), 0, n - 1)) for c, n in zip(spec.center, shape)
        )
        if all(0 <= c <= n - 1 for c, n in zip(spec.center, shape)):
            raster[nearest] = True
        else:
            raise ValueError("mask raster is empty and center lies outside the image")

    nz = np.nonzero(raster)
    bbox = tuple((int(ix.min()), int(ix.max()) + 1) for ix in nz)
    return AnomalyMask(spec=spec, raster=raster, bbox=bbox)


def foreground_of(x: np.ndarray, threshold: float) -> np.ndarray:
    """Boolean foreground: voxels with intensity above ``threshold``."""
    return np.asarray(x) > threshold


def overlap_fraction(mask: AnomalyMask, foreground: np.ndarray) -> float:
    """Fraction of mask voxels that fall on foreground."""
    total = mask.voxel_count()
    return float(np.count_nonzero(mask.raster & foreground)) / total


def sample_anomaly_placement(
    rng,
    shape: tuple[int, ...],
    foreground: np.ndarray,
    size_range: tuple[float, float] = (0.04, 0.28),
    max_attempts: int = 100,
) -> AnomalyMask:
    """Rejection-sample a randomly sized and rotated mask placement.

    Kind, center, per-axis semi-axes (uniform in ``size_range`` times the
    axis extent) and rotation angles are drawn independently until at
    least half of the rasterised mask intersects the foreground.
    """
    shape = tuple(int(n) for n in shape)
    foreground = np.asarray(foreground, dtype=bool)
    if foreground.shape != shape:
        raise ValueError("foreground shape must match image shape")
    if not foreground.any():
        raise PlacementError("foreground is empty, no placement can satisfy the overlap rule")
    lo, hi = size_range
    if not (0 < lo <= hi):
        raise ValueError("size_range must satisfy 0 < lo <= hi")

    d = len(shape)
    gen = rng.generator()
    n_angles = d * (d - 1) // 2
    for _ in range(max_attempts):
        spec = MaskSpec(
            kind=ELLIPSOID if gen.random() < 0.5 else CUBOID,
            center=tuple(gen.uniform(0, n - 1) for n in shape),
            semi_axes=tuple(gen.uniform(lo, hi) * n for n in shape),
            rotation=tuple(gen.uniform(0.0, np.pi, size=n_angles)),
        )
        mask = rasterize_mask(spec, shape)
        if overlap_fraction(mask, foreground) >= 0.5:
            return mask
    raise PlacementError(f"no placement with >=50% foreground overlap in {max_attempts} attempts")


def repeat_count(rng, maximum: int = 4) -> int:
    """Number of anomalies for one image: repeat on fair coin, capped.

    P(k = n) = 0.5**(n-1) for n < maximum and P(maximum) = 0.5**(maximum-1).
    """
    if maximum < 1:
        raise ValueError("maximum must be >= 1")
    gen = rng.generator()
    count = 1
    while count < maximum and gen.random() < 0.5:
        count += 1
    return count
