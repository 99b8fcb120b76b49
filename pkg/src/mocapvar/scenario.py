"""Camera networks, target sampling and voxel error maps."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .covariance import MPolicy, fuse_batch, limit_information_batch, overall_std
from .errors import InputError, TooFewValidTrials
from .geometry import CameraModel, as_point, depth, project
from .montecarlo import McConfig, mc_covariance
from .rng import CounterRNG

DEFAULT_FOCAL = 0.01
# 0.05 px on a 5 um pixel: typical sub-pixel marker centroiding.
DEFAULT_SIGMA = 2.5e-7
DEFAULT_Z_HALF_EXTENT = 1.0
INTERIOR_MARGIN = 0.9


@dataclass(frozen=True)
class FieldOfView:
    """Rectangular sensor extent: visible iff ``|u| <= half_width`` and ``|v| <= half_height``."""

    half_width: float
    half_height: float

    def contains(self, camera: CameraModel, point) -> bool:
        if depth(camera, point) <= 0:
            return False
        u, v = project(camera, point)
        return abs(u) <= self.half_width and abs(v) <= self.half_height


@dataclass(frozen=True)
class Scenario:
    cameras: tuple
    room_min: np.ndarray
    room_max: np.ndarray
    m_policy: MPolicy = field(default_factory=MPolicy.limit)
    seed: int = 0
    fov: Optional[FieldOfView] = None

    def __post_init__(self):
        cams = tuple(self.cameras)
        if not cams:
            raise InputError("a scenario needs at least one camera")
        ids = [c.id for c in cams]
        if len(set(ids)) != len(ids):
            raise InputError("camera ids must be unique")
        lo, hi = as_point(self.room_min), as_point(self.room_max)
        if not np.all(hi > lo):
            raise InputError("room must have positive volume")
        object.__setattr__(self, "cameras", cams)
        object.__setattr__(self, "room_min", lo)
        object.__setattr__(self, "room_max", hi)

    @property
    def room_side(self) -> float:
        return float(np.max(self.room_max - self.room_min))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.room_min + self.room_max)

    def camera(self, camera_id) -> CameraModel:
        for c in self.cameras:
            if c.id == camera_id:
                return c
        raise InputError(f"unknown camera id {camera_id!r}")

    def subset(self, ids: Optional[Sequence]) -> list:
        if ids is None:
            return list(self.cameras)
        return [self.camera(i) for i in ids]

    def contains(self, point) -> bool:
        p = as_point(point)
        return bool(np.all(p >= self.room_min) and np.all(p <= self.room_max))

    def sees(self, camera: CameraModel, point) -> bool:
        if self.fov is not None:
            return self.fov.contains(camera, point)
        return depth(camera, point) > 0

    def visible_cameras(self, point, cameras=None) -> list:
        cams = self.cameras if cameras is None else cameras
        return [c for c in cams if self.sees(c, point)]


def ring_scenario(
    m: int,
    radius: float = 10.0,
    height: float = 0.0,
    focal: float = DEFAULT_FOCAL,
    sigma: float = DEFAULT_SIGMA,
    seed: int = 0,
    z_half_extent: float = DEFAULT_Z_HALF_EXTENT,
    m_policy: MPolicy = None,
) -> Scenario:
    """``m`` cameras equally spaced on a horizontal circle, all aimed at its center.

    Camera ``k`` sits at angle ``2 pi k / m`` with its down axis along world
    -z. The room is the circle's bounding square, ``z_half_extent`` thick
    above and below the ring.
    """
    if m < 1:
        raise InputError("ring needs at least one camera")
    if radius <= 0:
        raise InputError("ring radius must be > 0")
    target = np.array([0.0, 0.0, height])
    cams = []
    for k in range(m):
        a = 2 * np.pi * k / m
        center = np.array([radius * np.cos(a), radius * np.sin(a), height])
        cams.append(CameraModel.looking_at(f"cam{k:03d}", center, target, focal, sigma))
    room_min = np.array([-radius, -radius, height - z_half_extent])
    room_max = np.array([radius, radius, height + z_half_extent])
    return Scenario(tuple(cams), room_min, room_max, m_policy or MPolicy.limit(), seed)


def sample_interior_points(
    rng: CounterRNG, n: int, radius: float, z_range=(-1.0, 1.0), margin: float = INTERIOR_MARGIN
) -> np.ndarray:
    """``n`` points uniform in the cylinder of radius ``margin * radius``."""
    u = rng.uniform_block(3 * n).reshape(n, 3)
    r = margin * radius * np.sqrt(u[:, 0])
    phi = 2 * np.pi * u[:, 1]
    z = z_range[0] + (z_range[1] - z_range[0]) * u[:, 2]
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


@dataclass
class ErrorMap:
    """Closed-form reconstruction std on a voxel grid.

    ``std`` is NaN where the visible cameras cannot reconstruct the voxel.
    """

    dims: tuple
    origin: np.ndarray
    spacing: np.ndarray
    std: np.ndarray
    visible_count: np.ndarray

    def centers(self) -> np.ndarray:
        return voxel_centers(self.origin, self.spacing, self.dims)

    @property
    def reconstructable(self) -> np.ndarray:
        return np.isfinite(self.std)


def grid_geometry(scenario: Scenario, dims):
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or min(dims) < 1:
        raise InputError(f"grid dims must be three integers >= 1, got {dims}")
    spacing = (scenario.room_max - scenario.room_min) / np.array(dims)
    origin = scenario.room_min + 0.5 * spacing
    return dims, origin, spacing


def voxel_centers(origin, spacing, dims) -> np.ndarray:
    """Voxel centers in C order (x slowest), shape ``(nx*ny*nz, 3)``."""
    idx = np.indices(dims).reshape(3, -1).T
    return origin + idx * spacing


def error_map(scenario: Scenario, dims, camera_subset: Optional[Sequence] = None) -> ErrorMap:
    cams = scenario.subset(camera_subset)
    dims, origin, spacing = grid_geometry(scenario, dims)
    pts = voxel_centers(origin, spacing, dims)
    info, visible = limit_information_batch(cams, pts)
    if scenario.fov is not None:
        fov_mask = np.array([[scenario.sees(c, p) for c in cams] for p in pts])
        visible &= fov_mask
        info = np.where(visible[..., None, None], info, 0.0)
    cov, ok = fuse_batch(info)
    std = np.sqrt(np.clip(np.trace(cov, axis1=-2, axis2=-1), 0.0, None))
    std[~ok] = np.nan
    return ErrorMap(dims, origin, spacing, std.reshape(dims), visible.sum(axis=1).reshape(dims))


def error_map_mc(
    scenario: Scenario,
    dims,
    config: McConfig,
    camera_subset: Optional[Sequence] = None,
    workers: int = 1,
) -> np.ndarray:
    """Monte Carlo counterpart of :func:`error_map` (sqrt of sample-covariance trace per voxel)."""
    cams = scenario.subset(camera_subset)
    dims, origin, spacing = grid_geometry(scenario, dims)
    pts = voxel_centers(origin, spacing, dims)
    out = np.full(len(pts), np.nan)

    def run(i):
        vis = scenario.visible_cameras(pts[i], cams)
        if len(vis) < 2:
            return
        try:
            out[i] = overall_std(mc_covariance(vis, pts[i], config, stream=(i,)).sample_cov)
        except TooFewValidTrials:
            pass

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(run, range(len(pts))))
    else:
        for i in range(len(pts)):
            run(i)
    return out.reshape(dims)
