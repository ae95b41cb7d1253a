"""Seamless D-dimensional patch blending via a spectral Poisson solver.

Blending pins the destination's values on the ring just outside the
mask's bounding box and matches the source's gradient field inside it.
Because the solve region is a box, the zero-Dirichlet Laplacian is
diagonalised by a type-I discrete sine transform along every axis, so
the Poisson equation reduces to a coefficientwise division.

The transforms are computed with scipy's fast DST but are defined (and
tested) against the direct kernel sum_n x_n * sin(pi (n+1)(k+1)/(N+1)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .masks import AnomalyMask


def _check_axis(x: np.ndarray, axis: int) -> int:
    if not -x.ndim <= axis < x.ndim:
        raise ValueError(f"axis {axis} out of range for {x.ndim}-D input")
    return axis % x.ndim


def dst1_forward(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Type-I DST along one axis, other axes untouched."""
    x = np.asarray(x, dtype=np.float64)
    axis = _check_axis(x, axis)
    return scipy.fft.dst(x, type=1, axis=axis) / 2.0


def dst1_inverse(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Inverse type-I DST: the forward kernel scaled by 2/(N+1)."""
    x = np.asarray(x, dtype=np.float64)
    axis = _check_axis(x, axis)
    n = x.shape[axis]
    return scipy.fft.dst(x, type=1, axis=axis) / (n + 1)


def gradient(x: np.ndarray) -> list[np.ndarray]:
    """Forward differences per axis; the last slice is zero-padded."""
    x = np.asarray(x, dtype=np.float64)
    grads = []
    for d in range(x.ndim):
        g = np.zeros_like(x)
        head = [slice(None)] * x.ndim
        head[d] = slice(0, -1)
        g[tuple(head)] = np.diff(x, axis=d)
        grads.append(g)
    return grads


def divergence(components: list[np.ndarray]) -> np.ndarray:
    """Backward differences summed over axes (adjoint of ``gradient``)."""
    if not components:
        raise ValueError("divergence needs at least one component")
    shape = np.asarray(components[0]).shape
    out = np.zeros(shape, dtype=np.float64)
    for d, comp in enumerate(components):
        comp = np.asarray(comp, dtype=np.float64)
        if comp.shape != shape:
            raise ValueError("divergence components must share one shape")
        out += comp
        tail = [slice(None)] * len(shape)
        tail[d] = slice(1, None)
        head = [slice(None)] * len(shape)
        head[d] = slice(0, -1)
        out[tuple(tail)] -= comp[tuple(head)]
    return out


def laplacian_eigenvalues(shape: tuple[int, ...]) -> np.ndarray:
    """Spectrum of the zero-Dirichlet discrete Laplacian on a box.

    Per axis the exact eigenvalues are 2*cos(pi*(u+1)/(N+1)) - 2; they add
    over axes. All entries are strictly negative, so division is safe.
    """
    lam = np.zeros(shape, dtype=np.float64)
    for d, n in enumerate(shape):
        u = np.arange(n, dtype=np.float64)
        e = 2.0 * np.cos(np.pi * (u + 1.0) / (n + 1.0)) - 2.0
        view = [1] * len(shape)
        view[d] = n
        lam += e.reshape(view)
    return lam


def solve_poisson_dirichlet(
    rhs: np.ndarray,
    boundary: list[tuple[np.ndarray, np.ndarray]],
) -> np.ndarray:
    """Solve the discrete Poisson equation on a box with Dirichlet data.

    ``rhs`` lives on the interior; ``boundary`` holds, per axis, the (lo,
    hi) face values of the surrounding ring (each face broadcastable to
    the interior shape with that axis removed). The returned interior
    makes the discrete Laplacian of the boundary/interior composite equal
    ``rhs`` at every interior voxel.
    """
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.size == 0:
        return np.zeros_like(rhs)
    if len(boundary) != rhs.ndim:
        raise ValueError(f"expected {rhs.ndim} boundary face pairs, got {len(boundary)}")

    work = rhs.copy()
    for d in range(rhs.ndim):
        face_shape = rhs.shape[:d] + rhs.shape[d + 1 :]
        lo_face, hi_face = boundary[d]
        lo_face = np.broadcast_to(np.asarray(lo_face, dtype=np.float64), face_shape)
        hi_face = np.broadcast_to(np.asarray(hi_face, dtype=np.float64), face_shape)
        if not (np.isfinite(lo_face).all() and np.isfinite(hi_face).all()):
            raise ValueError("boundary values must be finite")
        first = [slice(None)] * rhs.ndim
        first[d] = 0
        last = [slice(None)] * rhs.ndim
        last[d] = rhs.shape[d] - 1
        work[tuple(first)] -= lo_face
        work[tuple(last)] -= hi_face

    for d in range(rhs.ndim):
        work = dst1_forward(work, axis=d)
    work /= laplacian_eigenvalues(rhs.shape)
    for d in range(rhs.ndim):
        work = dst1_inverse(work, axis=d)
    return work


@dataclass
class GuidedPatchProblem:
    """One blending instance: a box, ring values around it, and guidance.

    ``bbox`` is the half-open solve region; ``boundary`` the destination
    values on the ring just outside it (per axis lo/hi faces, clamped at
    image edges); ``guidance`` the source's image-level gradient field
    restricted to the interior. The restriction loses the gradient
    crossing each lo face, so those crossings ride along separately and
    are folded into the right-hand side; the interior equation then
    matches the source Laplacian at every interior voxel.
    """

    bbox: tuple[tuple[int, int], ...]
    boundary: list[tuple[np.ndarray, np.ndarray]]
    guidance: list[np.ndarray]
    lo_face_gradient: list[np.ndarray]

    @property
    def interior_shape(self) -> tuple[int, ...]:
        return tuple(hi - lo for lo, hi in self.bbox)

    def __post_init__(self):
        shape = self.interior_shape
        if len(self.guidance) != len(shape):
            raise ValueError("one guidance component per axis required")
        for comp in self.guidance:
            if comp.shape != shape:
                raise ValueError("guidance components must have the interior shape")

    @classmethod
    def from_images(
        cls,
        dest: np.ndarray,
        src: np.ndarray,
        bbox: tuple[tuple[int, int], ...],
        src_offset: tuple[int, ...] | None = None,
    ) -> "GuidedPatchProblem":
        dest = np.asarray(dest, dtype=np.float64)
        src = np.asarray(src, dtype=np.float64)
        if src_offset is None:
            src_offset = (0,) * dest.ndim
        for (lo, hi), n in zip(bbox, dest.shape):
            if not (0 <= lo < hi <= n):
                raise ValueError(f"bbox {bbox} does not fit destination shape {dest.shape}")
        src_box = tuple((lo + o, hi + o) for (lo, hi), o in zip(bbox, src_offset))
        for (lo, hi), n in zip(src_box, src.shape):
            if not (0 <= lo < hi <= n):
                raise ValueError(f"translated bbox {src_box} does not fit source shape {src.shape}")

        boundary = []
        for d, (lo, hi) in enumerate(bbox):
            sel = [slice(b_lo, b_hi) for b_lo, b_hi in bbox]
            sel[d] = max(lo - 1, 0)  # clamp: edge-replicated destination
            lo_face = dest[tuple(sel)].copy()
            sel[d] = min(hi, dest.shape[d] - 1)
            hi_face = dest[tuple(sel)].copy()
            boundary.append((lo_face, hi_face))

        guidance, lo_face_gradient = _patch_gradient(src, src_box)
        return cls(
            bbox=bbox,
            boundary=boundary,
            guidance=guidance,
            lo_face_gradient=lo_face_gradient,
        )

    def solve(self) -> np.ndarray:
        rhs = divergence(self.guidance)
        for d, crossing in enumerate(self.lo_face_gradient):
            first = [slice(None)] * rhs.ndim
            first[d] = 0
            rhs[tuple(first)] -= crossing
        return solve_poisson_dirichlet(rhs, self.boundary)


def _patch_gradient(
    src: np.ndarray, box: tuple[tuple[int, int], ...]
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Source forward-difference gradient over ``box`` plus the gradient
    crossing each lo face.

    Differences reaching one voxel outside the image use edge
    replication, reproducing the zero-padded image-level gradient.
    """
    pad = []
    sel = []
    for (lo, hi), n in zip(box, src.shape):
        start = max(lo - 1, 0)
        stop = min(hi + 1, n)
        sel.append(slice(start, stop))
        pad.append((start - (lo - 1), hi + 1 - stop))
    patch = np.pad(src[tuple(sel)], pad, mode="edge")  # spans [lo-1, hi+1)

    ndim = len(box)
    interior = tuple(hi - lo for lo, hi in box)
    inner = tuple(slice(1, 1 + interior[a]) for a in range(ndim))
    grads = []
    crossings = []
    for d in range(ndim):
        g = np.diff(patch, axis=d)  # anchored [lo-1, hi)
        cut = list(inner)
        cut[d] = slice(1, 1 + interior[d])
        grads.append(np.ascontiguousarray(g[tuple(cut)]))
        cut[d] = 0
        crossings.append(np.array(g[tuple(cut)], dtype=np.float64))  # keeps 0-d faces
    return grads, crossings


def poisson_blend(
    dest: np.ndarray,
    src: np.ndarray,
    mask: AnomalyMask,
    src_offset: tuple[int, ...] | None = None,
) -> np.ndarray:
    """Blend the source patch under ``mask``'s bounding box into ``dest``.

    Voxels outside the bounding box are copied from ``dest`` unchanged;
    inside it the Poisson equation is solved with the source gradient as
    guidance and the destination ring as boundary values.
    """
    dest = np.asarray(dest, dtype=np.float64)
    src = np.asarray(src, dtype=np.float64)
    if dest.ndim != src.ndim:
        raise ValueError("destination and source dimensionality differ")
    problem = GuidedPatchProblem.from_images(dest, src, mask.bbox, src_offset)
    out = dest.copy()
    out[mask.bbox_slices] = problem.solve()
    if not np.isfinite(out).all():
        raise FloatingPointError("blend produced non-finite values")
    return out
