"""Ideal pinhole camera model.

Conventions
-----------
* Points are length-3 float arrays in meters (world frame).
* A camera's rotation matrix has the camera *right* axis, *down* axis and
  *optical axis* as its columns, expressed in the world frame. A world point
  ``p`` therefore has camera coordinates ``R.T @ (p - center)``.
* Pixels are sensor coordinates in meters, origin at the principal point.
  There is no lens distortion and no principal-point offset.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Optional

import numpy as np

from .errors import BehindCamera, DegenerateDirection, InputError, InvalidRotation

ORTHO_TOL = 1e-12
COINCIDENT_TOL = 1e-12


def as_point(p) -> np.ndarray:
    """Return ``p`` as a finite float array of shape (3,)."""
    a = np.asarray(p, dtype=float).reshape(-1)
    if a.shape != (3,):
        raise InputError(f"expected a 3-vector, got shape {np.shape(p)}")
    if not np.all(np.isfinite(a)):
        raise InputError(f"non-finite coordinates: {a}")
    return a


def as_rotation(R) -> np.ndarray:
    """Validate a 3x3 rotation (orthonormal, det +1) and return a read-only copy."""
    R = np.array(R, dtype=float)
    if R.shape != (3, 3):
        raise InvalidRotation(f"rotation must be 3x3, got {R.shape}")
    if not np.all(np.isfinite(R)):
        raise InvalidRotation("rotation has non-finite entries")
    if np.max(np.abs(R.T @ R - np.eye(3))) > ORTHO_TOL:
        raise InvalidRotation("rotation is not orthonormal")
    if abs(np.linalg.det(R) - 1.0) > ORTHO_TOL:
        raise InvalidRotation("rotation determinant is not +1")
    R.setflags(write=False)
    return R


def look_at_rotation(center, target, up=(0.0, 0.0, 1.0)) -> np.ndarray:
    """Rotation whose optical axis points from ``center`` to ``target``.

    The camera down-axis is aligned with ``-up`` as closely as possible.
    """
    center, target = as_point(center), as_point(target)
    axis = target - center
    n = np.linalg.norm(axis)
    if n < COINCIDENT_TOL:
        raise DegenerateDirection("look-at target coincides with camera center")
    axis = axis / n
    right = np.cross(axis, as_point(up))
    rn = np.linalg.norm(right)
    if rn < 1e-9:
        raise InvalidRotation("up vector is parallel to the viewing direction")
    right = right / rn
    down = np.cross(axis, right)
    # Re-orthonormalise to machine precision before validation.
    R = np.column_stack([right, down, axis])
    u, _, vt = np.linalg.svd(R)
    return as_rotation(u @ vt)


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray

    def point_at(self, t: float) -> np.ndarray:
        return self.origin + t * self.direction

    def distance_to(self, p) -> float:
        d = as_point(p) - self.origin
        return float(np.linalg.norm(d - (d @ self.direction) * self.direction))


@dataclass(frozen=True, eq=False)
class CameraModel:
    """A calibrated pinhole camera.

    ``pixel_noise_std`` is the isotropic standard deviation of the measured
    sensor coordinates, in meters on the sensor. Zero describes an idealised
    noiseless camera. ``noise_model``, when given, overrides the constant
    value for a particular target position.
    """

    id: Hashable
    center: np.ndarray
    rotation: np.ndarray
    focal: float
    pixel_noise_std: float
    noise_model: Optional[Callable[["CameraModel", np.ndarray], float]] = None

    def __post_init__(self):
        center = as_point(self.center).copy()
        center.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "rotation", as_rotation(self.rotation))
        if not (np.isfinite(self.focal) and self.focal > 0):
            raise InputError(f"camera {self.id!r}: focal must be > 0")
        if not (np.isfinite(self.pixel_noise_std) and self.pixel_noise_std >= 0):
            raise InputError(f"camera {self.id!r}: pixel_noise_std must be >= 0")
        object.__setattr__(self, "focal", float(self.focal))
        object.__setattr__(self, "pixel_noise_std", float(self.pixel_noise_std))

    @classmethod
    def looking_at(cls, id, center, target, focal, pixel_noise_std, up=(0.0, 0.0, 1.0)):
        return cls(id, center, look_at_rotation(center, target, up), focal, pixel_noise_std)

    @property
    def axis(self) -> np.ndarray:
        return self.rotation[:, 2]

    def noise_std(self, point=None) -> float:
        """Pixel noise std for a target, honouring the optional override hook."""
        if self.noise_model is None or point is None:
            return self.pixel_noise_std
        return float(self.noise_model(self, as_point(point)))

    def to_camera(self, point) -> np.ndarray:
        return self.rotation.T @ (as_point(point) - self.center)

    def __repr__(self):
        return (
            f"CameraModel(id={self.id!r}, center={self.center.tolist()}, "
            f"focal={self.focal}, pixel_noise_std={self.pixel_noise_std})"
        )


def depth(camera: CameraModel, point) -> float:
    """Signed distance along the optical axis from the optical center to ``point``'s plane."""
    return float((as_point(point) - camera.center) @ camera.axis)


def project(camera: CameraModel, point) -> np.ndarray:
    """Sensor coordinates ``(u, v)`` of a point in front of the camera."""
    x, y, z = camera.to_camera(point)
    if z <= 0:
        raise BehindCamera(f"point {as_point(point)} has depth {z} <= 0 for camera {camera.id!r}")
    return np.array([camera.focal * x / z, camera.focal * y / z])


def back_project(camera: CameraModel, pixel) -> Ray:
    u, v = np.asarray(pixel, dtype=float).reshape(2)
    d = camera.rotation @ np.array([u, v, camera.focal])
    return Ray(camera.center, d / np.linalg.norm(d))


def viewing_direction(camera: CameraModel, point) -> np.ndarray:
    """Unit vector from the optical center towards ``point``."""
    d = as_point(point) - camera.center
    n = np.linalg.norm(d)
    if n <= COINCIDENT_TOL:
        raise DegenerateDirection(f"point coincides with the center of camera {camera.id!r}")
    return d / n


def image_plane_basis(camera: CameraModel) -> np.ndarray:
    """3x2 orthonormal basis of planes parallel to the image plane (right, down)."""
    return camera.rotation[:, :2]


def propagated_std(camera: CameraModel, point) -> float:
    """Lateral std of the target in its plane parallel to the sensor: sigma * depth / f."""
    return camera.noise_std(point) * depth(camera, point) / camera.focal
