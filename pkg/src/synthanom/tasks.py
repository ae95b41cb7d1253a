"""The five synthetic self-supervision tasks.

Each task maps (clean tensor, mask, parameters) to a corrupted tensor,
touching only the mask region (blends: only the bounding box). Random
parameter draws live in :func:`apply_random_anomalies`; the task
functions themselves are pure, so any anomaly can be replayed exactly
from its recorded parameters.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.ndimage import distance_transform_edt, map_coordinates

from . import labels
from .masks import (
    ELLIPSOID,
    AnomalyMask,
    PlacementError,
    foreground_of,
    repeat_count,
    sample_anomaly_placement,
)
from .poisson import poisson_blend
from .rng import RngStream


class TaskKind(str, enum.Enum):
    INTRA_BLEND = "intra_blend"
    INTER_BLEND = "inter_blend"
    SINK = "sink"
    SOURCE = "source"
    SMOOTH_INTENSITY = "smooth_intensity"


ALL_TASKS = tuple(TaskKind)

BLEND_TASKS = (TaskKind.INTRA_BLEND, TaskKind.INTER_BLEND)


class TaskError(RuntimeError):
    """Raised when a task cannot produce any anomaly for a sample."""


@dataclass(frozen=True)
class DeformParams:
    """Radial deformation parameters: a center inside the mask and an
    exponent controlling displacement strength (1 = identity)."""

    center: tuple[float, ...]
    exponent: float

    def __post_init__(self):
        if self.exponent < 1.0:
            raise ValueError("exponent must be >= 1")


@dataclass(frozen=True)
class IntensityParams:
    """Additive intensity change: magnitude, sign, and the distance from
    the mask boundary at which damping stops."""

    magnitude: float
    sign: int
    smoothing_start: float

    def __post_init__(self):
        if self.magnitude <= 0:
            raise ValueError("magnitude must be positive")
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +1 or -1")
        if self.smoothing_start <= 0:
            raise ValueError("smoothing_start must be positive")


@dataclass
class AnomalyRecord:
    """One applied anomaly: what was done, where, and its label map."""

    kind: TaskKind
    mask: AnomalyMask
    params: dict
    label: np.ndarray


@dataclass
class GeneratorConfig:
    """Randomisation ranges for anomaly generation."""

    sigma: float = 0.2
    foreground_threshold: float = 0.0
    mask_size_range: tuple[float, float] = (0.04, 0.28)
    exponent_range: tuple[float, float] = (1.0, 4.0)  # drawn from (lo, hi]
    intensity_range: tuple[float, float] = (0.25, 1.0)  # times robust scale
    smoothing_range: tuple[float, float] = (0.10, 0.50)  # times min semi-axis
    max_anomalies: int = 4
    max_attempts: int = 100
    intra_random_offset: bool = False


class DonorPool:
    """A set of same-shaped tensors to draw blend sources from."""

    def __init__(self, items: Sequence[tuple[str, np.ndarray]]):
        if not items:
            raise ValueError("donor pool must not be empty")
        self._ids = [i for i, _ in items]
        self._data = {i: np.asarray(a, dtype=np.float64) for i, a in items}

    def __len__(self) -> int:
        return len(self._ids)

    @property
    def ids(self) -> list[str]:
        return list(self._ids)

    def get(self, donor_id: str) -> np.ndarray:
        return self._data[donor_id]

    def draw(self, gen: np.random.Generator) -> tuple[str, np.ndarray]:
        donor_id = self._ids[int(gen.integers(len(self._ids)))]
        return donor_id, self._data[donor_id]


# ---------------------------------------------------------------------------
# blending tasks


def intra_blend(x: np.ndarray, donor: np.ndarray, mask: AnomalyMask) -> np.ndarray:
    """Blend the donor's patch at the same location into ``x``."""
    donor = np.asarray(donor, dtype=np.float64)
    if donor.shape != np.asarray(x).shape:
        raise ValueError("intra-dataset donor must match the image shape")
    return poisson_blend(x, donor, mask)


def inter_blend(
    x: np.ndarray,
    external: np.ndarray,
    mask: AnomalyMask,
    rng: RngStream,
) -> np.ndarray:
    """Blend a patch from an external tensor at a random valid offset."""
    offset = draw_patch_offset(rng.generator(), mask.bbox, np.asarray(external).shape)
    return poisson_blend(x, external, mask, src_offset=offset)


def draw_patch_offset(
    gen: np.random.Generator,
    bbox: tuple[tuple[int, int], ...],
    src_shape: tuple[int, ...],
) -> tuple[int, ...]:
    """Uniform offset translating ``bbox`` to a box inside ``src_shape``."""
    offset = []
    for (lo, hi), n in zip(bbox, src_shape):
        if hi - lo > n:
            raise ValueError(f"source extent {n} smaller than patch extent {hi - lo}")
        offset.append(int(gen.integers(-lo, n - hi + 1)))
    return tuple(offset)


# ---------------------------------------------------------------------------
# radial deformation tasks


def sink_radius_map(r, d, exponent):
    """Sampling radius for the pull-inward deformation."""
    ratio = np.clip(np.asarray(r, dtype=np.float64) / d, 0.0, 1.0)
    return d * (1.0 - (1.0 - ratio) ** exponent)


def source_radius_map(r, d, exponent):
    """Sampling radius for the push-outward deformation."""
    ratio = np.clip(np.asarray(r, dtype=np.float64) / d, 0.0, 1.0)
    return d * ratio**exponent


def _ellipsoid_ray_distance(spec, center: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """Exact distance from ``center`` to the ellipsoid surface along rays."""
    rot = spec.rotation_matrix()
    inv_axes = 1.0 / np.asarray(spec.semi_axes)
    w = ((center - np.asarray(spec.center)) @ rot) * inv_axes
    m = (dirs @ rot) * inv_axes
    a = np.sum(m * m, axis=-1)
    b = np.sum(w * m, axis=-1)
    c = float(np.sum(w * w)) - 1.0
    disc = np.maximum(b * b - a * c, 0.0)
    return (-b + np.sqrt(disc)) / a


def _raster_ray_distance(
    raster: np.ndarray,
    center: np.ndarray,
    dirs: np.ndarray,
    start: np.ndarray,
    tol: float = 0.01,
) -> np.ndarray:
    """Bisection ray-march from inside points to the raster boundary."""

    def inside(t: np.ndarray) -> np.ndarray:
        pts = center + dirs * t[:, None]
        idx = np.round(pts).astype(int)
        ok = np.all((idx >= 0) & (idx < np.array(raster.shape)), axis=-1)
        res = np.zeros(len(t), dtype=bool)
        if ok.any():
            res[ok] = raster[tuple(idx[ok].T)]
        return res

    t_lo = start.astype(np.float64).copy()
    t_hi = t_lo + 0.5
    cap = float(np.linalg.norm(raster.shape)) + 1.0
    still_inside = inside(t_hi)
    while still_inside.any():
        t_lo[still_inside] = t_hi[still_inside]
        t_hi = t_hi + np.where(still_inside, 0.5, 0.0)
        if t_hi.max() > cap:
            break
        still_inside = inside(t_hi)

    while np.max(t_hi - t_lo) > tol:
        mid = 0.5 * (t_lo + t_hi)
        mid_inside = inside(mid)
        t_lo = np.where(mid_inside, mid, t_lo)
        t_hi = np.where(mid_inside, t_hi, mid)
    return 0.5 * (t_lo + t_hi)


def _radial_resample(
    x: np.ndarray,
    mask: AnomalyMask,
    params: DeformParams,
    radius_map,
) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if params.exponent == 1.0:
        return x.copy()  # exact identity limit of both deformations

    center = np.asarray(params.center, dtype=np.float64)
    points = np.argwhere(mask.raster).astype(np.float64)
    rel = points - center
    r = np.linalg.norm(rel, axis=-1)
    moving = r > 0
    dirs = np.zeros_like(rel)
    dirs[moving] = rel[moving] / r[moving, None]

    d = np.full(len(points), 1.0)
    if moving.any():
        if mask.spec.kind == ELLIPSOID:
            d_m = _ellipsoid_ray_distance(mask.spec, center, dirs[moving])
        else:
            d_m = _raster_ray_distance(mask.raster, center, dirs[moving], r[moving])
        d[moving] = np.maximum(d_m, r[moving])

    rho = radius_map(r, d, params.exponent)
    targets = center + dirs * rho[:, None]
    targets[~moving] = center

    values = map_coordinates(x, targets.T, order=1, mode="nearest")
    out = x.copy()
    out[mask.raster] = values
    return out


def sink_deform(x: np.ndarray, mask: AnomalyMask, params: DeformParams) -> np.ndarray:
    """Pull intensities toward the center: a voxel at radius r samples
    from radius d(1 - (1 - r/d)^f) along the same ray."""
    return _radial_resample(x, mask, params, sink_radius_map)


def source_deform(x: np.ndarray, mask: AnomalyMask, params: DeformParams) -> np.ndarray:
    """Push intensities outward: a voxel at radius r samples from radius
    d(r/d)^f along the same ray."""
    return _radial_resample(x, mask, params, source_radius_map)


# ---------------------------------------------------------------------------
# intensity task


def boundary_distance(raster: np.ndarray) -> np.ndarray:
    """Per-voxel distance to the mask boundary, zero on the outermost
    raster shell (Euclidean distance transform shifted by one voxel)."""
    return np.maximum(distance_transform_edt(raster) - 1.0, 0.0)


def smooth_intensity(x: np.ndarray, mask: AnomalyMask, params: IntensityParams) -> np.ndarray:
    """Add or subtract an intensity over the mask, damped near its edge.

    The change is sign * magnitude * min(d_p / smoothing_start, 1) where
    d_p is the voxel's distance to the mask boundary.
    """
    x = np.asarray(x, dtype=np.float64)
    d_p = boundary_distance(mask.raster)
    modulation = np.minimum(d_p / params.smoothing_start, 1.0)
    out = x.copy()
    out[mask.raster] += params.sign * params.magnitude * modulation[mask.raster]
    return out


# ---------------------------------------------------------------------------
# randomised application


def robust_scale(x: np.ndarray) -> float:
    """Interquartile range, falling back to 1.0 for constant tensors."""
    q1, q3 = np.percentile(x, [25.0, 75.0])
    iqr = float(q3 - q1)
    return iqr if iqr > 0 else 1.0


def _draw_params(task: TaskKind, mask: AnomalyMask, x, donors, gen, cfg: GeneratorConfig) -> dict:
    if task in BLEND_TASKS:
        donor_id, donor = donors.draw(gen)
        if task is TaskKind.INTRA_BLEND and not cfg.intra_random_offset:
            offset = (0,) * len(mask.bbox)
        else:
            offset = draw_patch_offset(gen, mask.bbox, donor.shape)
        return {"donor": donor_id, "offset": list(offset)}
    if task in (TaskKind.SINK, TaskKind.SOURCE):
        voxels = np.argwhere(mask.raster)
        center = voxels[int(gen.integers(len(voxels)))]
        lo, hi = cfg.exponent_range
        exponent = hi - gen.random() * (hi - lo)  # in (lo, hi]
        return {"center": [float(c) for c in center], "exponent": float(exponent)}
    scale = robust_scale(x)
    return {
        "magnitude": float(gen.uniform(*cfg.intensity_range) * scale),
        "sign": 1 if gen.random() < 0.5 else -1,
        "smoothing_start": float(gen.uniform(*cfg.smoothing_range) * min(mask.spec.semi_axes)),
    }


def apply_anomaly(
    x: np.ndarray,
    task: TaskKind,
    mask: AnomalyMask,
    params: dict,
    donors: DonorPool | None = None,
) -> np.ndarray:
    """Apply one fully specified anomaly; pure, used by both generation
    and replay."""
    if task in BLEND_TASKS:
        donor = donors.get(params["donor"])
        return poisson_blend(x, donor, mask, src_offset=tuple(params["offset"]))
    if task in (TaskKind.SINK, TaskKind.SOURCE):
        deform = DeformParams(center=tuple(params["center"]), exponent=params["exponent"])
        fn = sink_deform if task is TaskKind.SINK else source_deform
        return fn(x, mask, deform)
    intensity = IntensityParams(
        magnitude=params["magnitude"],
        sign=params["sign"],
        smoothing_start=params["smoothing_start"],
    )
    return smooth_intensity(x, mask, intensity)


def apply_random_anomalies(
    x: np.ndarray,
    task: TaskKind,
    donors: DonorPool | None,
    rng: RngStream,
    cfg: GeneratorConfig | None = None,
) -> tuple[np.ndarray, list[AnomalyRecord]]:
    """Corrupt ``x`` with a coin-toss number of anomalies of one task.

    Each anomaly gets its own derived substream, so results do not depend
    on scheduling. Individual placement failures skip that anomaly; if
    every placement fails the whole task fails.
    """
    cfg = cfg or GeneratorConfig()
    if task in BLEND_TASKS and (donors is None or len(donors) == 0):
        raise ValueError(f"{task.value} requires a non-empty donor pool")

    x = np.asarray(x, dtype=np.float64)
    foreground = foreground_of(x, cfg.foreground_threshold)
    count = repeat_count(rng.child("count"), cfg.max_anomalies)

    current = x
    records: list[AnomalyRecord] = []
    for index in range(count):
        sub = rng.child("anomaly", index)
        try:
            mask = sample_anomaly_placement(
                sub, current.shape, foreground, cfg.mask_size_range, cfg.max_attempts
            )
        except PlacementError:
            continue
        gen = sub.child("params").generator()
        params = _draw_params(task, mask, current, donors, gen, cfg)
        corrupted = apply_anomaly(current, task, mask, params, donors)
        label = labels.label_map(current, corrupted, cfg.sigma)
        records.append(AnomalyRecord(kind=task, mask=mask, params=params, label=label))
        current = corrupted

    if not records:
        raise TaskError(f"all {count} placements failed for task {task.value}")
    return current, records
