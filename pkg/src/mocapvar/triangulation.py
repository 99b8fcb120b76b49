"""Multi-view point triangulation.

Two estimators are provided:

* **midpoint**: the point minimising the summed squared perpendicular
  distance to all back-projected rays (unweighted linear least squares).
* **GLS**: iterated generalised least squares. Each ray is weighted by its
  limit-mode information ``(1/s^2) Q^T Q`` (see :mod:`mocapvar.covariance`),
  with ``s`` re-evaluated from the current depth estimate at every iteration.

The scalar functions take ``(camera, pixel)`` pairs. The ``*_batch`` functions
triangulate many independent trials of the same camera set at once and
report degenerate trials through a boolean mask instead of raising.
"""
from __future__ import annotations

from itertools import combinations
from typing import Sequence, Tuple

import numpy as np

from .errors import DegenerateGeometry, InputError, InsufficientObservations, SingularInformation
from .geometry import CameraModel, as_point, back_project

PARALLEL_TOL = 1e-12
SOLVE_RCOND = 1e-12
DEFAULT_GLS_ITERATIONS = 2


def _camera_arrays(cameras: Sequence[CameraModel]):
    centers = np.array([c.center for c in cameras])
    rots = np.array([c.rotation for c in cameras])
    focal = np.array([c.focal for c in cameras])
    sigma = np.array([c.pixel_noise_std for c in cameras])
    return centers, rots, focal, sigma


def ray_directions(cameras: Sequence[CameraModel], pixels: np.ndarray) -> np.ndarray:
    """World ray directions for pixels of shape ``(..., m, 2)``."""
    _, rots, focal, _ = _camera_arrays(cameras)
    pixels = np.asarray(pixels, dtype=float)
    d = (
        pixels[..., 0:1] * rots[:, :, 0]
        + pixels[..., 1:2] * rots[:, :, 1]
        + focal[:, None] * rots[:, :, 2]
    )
    return d / np.sqrt(np.sum(d * d, axis=-1, keepdims=True))


def _solve(A: np.ndarray, b: np.ndarray):
    A = 0.5 * (A + np.swapaxes(A, -1, -2))
    finite = np.all(np.isfinite(A), axis=(-1, -2))
    A = np.where(finite[..., None, None], A, np.eye(3))
    w = np.linalg.eigvalsh(A)
    ok = (w[..., -1] > 0) & (w[..., 0] >= SOLVE_RCOND * w[..., -1]) & finite
    safe = np.where(ok[..., None, None], A, np.eye(3))
    x = np.linalg.solve(safe, np.where(ok[..., None], b, 0.0)[..., None])[..., 0]
    ok = np.array(ok)
    x[~ok] = np.nan
    return x, ok


def midpoint_batch(origins: np.ndarray, dirs: np.ndarray):
    """Least-squares ray intersection for ``(..., m, 3)`` origins and unit directions.

    Solves ``sum_j (I - d_j d_j^T) x = sum_j (I - d_j d_j^T) o_j``.
    """
    origins = np.broadcast_to(origins, dirs.shape)
    m = dirs.shape[-2]
    dt = np.swapaxes(dirs, -1, -2)
    A = m * np.eye(3) - dt @ dirs
    along = np.sum(dirs * origins, axis=-1, keepdims=True)
    b = np.sum(origins, axis=-2) - (dt @ along)[..., 0]
    return _solve(A, b)


def gls_batch(cameras: Sequence[CameraModel], pixels: np.ndarray, iterations: int = DEFAULT_GLS_ITERATIONS):
    """Iterated GLS for pixels of shape ``(N, m, 2)``. Returns ``(points, ok)``."""
    centers, rots, focal, sigma = _camera_arrays(cameras)
    if np.all(sigma == 0):
        sigma = np.ones_like(sigma)
    elif np.any(sigma == 0):
        raise InputError("GLS cannot weight a mix of noiseless and noisy cameras")
    dirs = ray_directions(cameras, pixels)
    x, ok = midpoint_batch(centers, dirs)
    right, down, axes = rots[:, :, 0], rots[:, :, 1], rots[:, :, 2]
    c = np.sum(dirs * axes, axis=-1)[..., None]
    # Rows of the oblique projection Q (see mocapvar.covariance).
    q0 = right - (np.sum(dirs * right, axis=-1)[..., None] / c) * axes
    q1 = down - (np.sum(dirs * down, axis=-1)[..., None] / c) * axes
    q0o = np.sum(q0 * centers, axis=-1)
    q1o = np.sum(q1 * centers, axis=-1)
    for _ in range(iterations):
        x = np.where(ok[..., None], x, 0.0)
        d = np.sum((x[..., None, :] - centers) * axes, axis=-1)
        ok &= np.all(d > 0, axis=-1)
        s = sigma * np.where(d > 0, d, 1.0) / focal
        w = 1.0 / s**2
        # A = sum_j w_j Q_j^T Q_j,  b = sum_j w_j Q_j^T Q_j o_j
        wq0 = w[..., None] * q0
        wq1 = w[..., None] * q1
        A = np.swapaxes(wq0, -1, -2) @ q0 + np.swapaxes(wq1, -1, -2) @ q1
        b = (np.swapaxes(wq0, -1, -2) @ q0o[..., None] + np.swapaxes(wq1, -1, -2) @ q1o[..., None])[..., 0]
        x, solved = _solve(A, b)
        ok &= solved
    x[~ok] = np.nan
    return x, ok


def _check(observations) -> Tuple[list, np.ndarray]:
    if len(observations) < 2:
        raise InsufficientObservations(f"need at least 2 observations, got {len(observations)}")
    cameras = [cam for cam, _ in observations]
    pixels = np.array([np.asarray(px, dtype=float).reshape(2) for _, px in observations])
    rays = [back_project(cam, px) for cam, px in zip(cameras, pixels)]
    if all(
        abs(float(a.direction @ b.direction)) >= 1 - PARALLEL_TOL for a, b in combinations(rays, 2)
    ):
        raise DegenerateGeometry("all back-projected rays are parallel")
    return cameras, pixels


def triangulate_midpoint(observations) -> np.ndarray:
    """Triangulate from a list of ``(CameraModel, pixel)`` pairs."""
    cameras, pixels = _check(observations)
    centers = np.array([c.center for c in cameras])
    x, ok = midpoint_batch(centers, ray_directions(cameras, pixels))
    if not ok:
        raise DegenerateGeometry("ray normal equations are singular")
    return x


def triangulate_gls(observations, iterations: int = DEFAULT_GLS_ITERATIONS) -> np.ndarray:
    cameras, pixels = _check(observations)
    if iterations < 0:
        raise InputError("iterations must be >= 0")
    x, ok = gls_batch(cameras, pixels[None], iterations)
    if not ok[0]:
        raise SingularInformation("GLS normal equations are singular or a depth became non-positive")
    return x[0]


def reconstruction_error(true_point, estimate) -> np.ndarray:
    """``estimate - true_point``."""
    return as_point(estimate) - as_point(true_point)
